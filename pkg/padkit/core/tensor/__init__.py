# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ()


ELEMENTWISE_KIND = (
    'add',
    'sub',
    'mul',
    'scale',
    'relu'
)

PRNG_ALGORITHM = 'numpy.random.PCG64+SeedSequence'

GRADCHECK_EPS       = 1e-5
GRADCHECK_TOLERANCE = 1e-4
GRADCHECK_FLOOR     = 1e-8
