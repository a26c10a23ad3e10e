# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('SyntheticSpec', 'class_template', 'generate_synthetic')

from dataclasses import dataclass

import numpy as np

from padkit.errors import ConfigError
from padkit.core.data import CHANNELS, TRAIN_FRACTION
from padkit.core.data.dataset import LabeledImage
from padkit.core.tensor.prng import Prng


@dataclass
class SyntheticSpec:
    num_classes: int = 4
    samples_per_class: int = 50
    image_size: int = 16
    seed: int = 0
    signal: float = 1.0
    noise: float = 0.15

    def validate(self):
        if self.num_classes < 1 or self.samples_per_class < 1 or self.image_size < 1:
            raise ConfigError('synthetic sizes must be positive')
        if self.signal < 0 or self.noise < 0:
            raise ConfigError('signal and noise must be non-negative')
        return self


def class_template(spec, label):
    """Per-channel colour plus a smooth field; survives crops and flips."""
    prng = Prng(spec.seed).child(0, label)
    size = spec.image_size
    colour = prng.uniform((CHANNELS, 1, 1), 0.2, 0.8)
    cells = max(1, size // 4)
    coarse = prng.uniform((CHANNELS, cells, cells), -1., 1.)
    field = np.kron(coarse, np.ones((size // cells + 1, size // cells + 1)))
    return colour + 0.2 * field[:, :size, :size]


def generate_synthetic(spec):
    """Seeded class-template images, split 80/20 per class into train/test."""
    spec.validate()
    size = spec.image_size
    train, test = [], []
    n_train = int(round(spec.samples_per_class * TRAIN_FRACTION))
    for label in range(spec.num_classes):
        template = class_template(spec, label)
        prng = Prng(spec.seed).child(1, label)
        noise = prng.normal((spec.samples_per_class, CHANNELS, size, size))
        for i in range(spec.samples_per_class):
            pixels = 0.5 + spec.signal * (template - 0.5) + spec.noise * noise[i]
            img = LabeledImage(np.clip(pixels, 0., 1.), label, 0)
            (train if i < n_train else test).append(img)
    return train, test
