# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ()


DATASET_FORMAT = (
    'cifar100',
    'imagenet32'
)

DATASET_CLASSES = {
    'cifar100'  : 100,
    'imagenet32': 300
}

IMAGE_SIZE   = 32
CHANNELS     = 3
LABEL_BYTES  = 2
PIXEL_BYTES  = CHANNELS * IMAGE_SIZE * IMAGE_SIZE
RECORD_BYTES = LABEL_BYTES + PIXEL_BYTES

PAD_SIZE         = 4
PAD_VALUE        = 0.
FLIP_PROBABILITY = 0.5
TRAIN_FRACTION   = 0.8
