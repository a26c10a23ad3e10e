# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ()


SPLIT_SCHEMES = {
    'cifar100/10'     : (100, [10] * 10),
    'cifar100/20base' : (100, [20] + [10] * 8),
    'cifar100/50base' : (100, [50] + [10] * 5),
    'imagenet32/6'    : (300, [50] * 6)
}

SYNTHETIC_SCHEME = 'synthetic/'

SCHEMA_VERSION = 1

MOMENTUM = 0.9

# child-stream keys of the run PRNG
STREAM_CLASS_ORDER = 10
STREAM_VALIDATION  = 11
STREAM_SHUFFLE     = 12
STREAM_AUGMENT     = 13
STREAM_DROPOUT     = 14
STREAM_FISHER      = 15

TAG_PROTOCOL   = 'argmax over concatenated logits of all seen heads'
EARLY_STOPPING = 'stop after `patience` epochs without val-loss improvement, '\
                 'restore best (alternative not taken: decay lr on plateau)'
VALIDATION     = 'deterministic held-out fraction of each task train split, '\
                 'monitored on the full training objective'
NORMALIZATION  = 'per-channel mean/std of the first task train split, frozen'
