# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ()


PAD_SYMMETRY = ('sym', 'asym')
PAD_TARGET   = ('attention', 'functional')
PAD_POOLING  = ('spatial', 'intact')
PAD_NORM     = ('squared', 'plain')

POOL_AXIS = ('first', 'second')

LWF_TEMPERATURE = 2.0
FISHER_CAP      = 2000
FISHER_LABELS   = 'argmax'
FISHER_MODE     = 'online-sum-single-anchor'
BATCH_REDUCTION = 'mean'
