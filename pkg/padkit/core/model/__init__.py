# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ()


PROJECTION_STD = 0.02
TRUNCATION     = 2.

CHECKPOINT_MAGIC   = b'PADKITCK'
CHECKPOINT_VERSION = 1

ATTENTION_SCALE = 'sqrt(head_dim)'
BLOCK_ORDER     = 'pre-norm'
