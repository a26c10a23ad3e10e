# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ()


FORGETTING_FORMULA = ('f_k = mean_{j<k} max_{l in [j, k-1]} (M[l, j] - M[k, j]); '
                      'raw fraction, negative means backward transfer')

AVG_INCREMENTAL_FORMULA = 'mean_i mean_{j<=i} M[i, j]'
