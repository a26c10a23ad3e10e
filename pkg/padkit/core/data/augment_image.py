# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('Normalizer', 'pad_constant', 'crop', 'flip_horizontal',
           'augment_train', 'augment_test', 'augment_batch')

import numpy as np

from padkit.errors import DimensionError
from padkit.core.data import PAD_SIZE, PAD_VALUE, FLIP_PROBABILITY
from padkit.core.data.dataset import LabeledImage


class Normalizer(object):
    """Frozen per-channel mean/std applied after geometric augmentation."""

    STD_FLOOR = 1e-8

    def __init__(self, mean, std):
        self.mean = np.asarray(mean, dtype=np.float64).reshape(-1)
        self.std  = np.asarray(std, dtype=np.float64).reshape(-1)
        self.std  = np.where(self.std > self.STD_FLOOR, self.std, 1.)

    @classmethod
    def from_images(cls, images):
        stack = np.asarray(images, dtype=np.float64)
        return cls(stack.mean(axis=(0, 2, 3)), stack.std(axis=(0, 2, 3)))

    def apply(self, pixels):
        return (pixels - self.mean[:, None, None]) / self.std[:, None, None]

    def to_dict(self):
        return {'mean': self.mean.tolist(), 'std': self.std.tolist()}


def _square(pixels):
    if pixels.ndim != 3 or pixels.shape[1] != pixels.shape[2]:
        raise DimensionError('augmentation needs square [C, H, W] pixels, got %s'
                             % (pixels.shape, ))
    return pixels.shape[1]


def pad_constant(pixels, size=PAD_SIZE, value=PAD_VALUE):
    return np.pad(pixels, ((0, 0), (size, size), (size, size)),
                  mode='constant', constant_values=value)


def crop(pixels, top, left, size):
    return pixels[:, top:top + size, left:left + size]


def flip_horizontal(pixels):
    return pixels[:, :, ::-1]


def augment_train(img, prng, normalizer=None, **kwargs):
    """Pad, random crop, random horizontal flip, normalize.

    `offset=(top, left)` and `flip=bool` pin the random draws.
    """
    size = _square(img.pixels)
    offset = kwargs.get('offset', None)
    flip   = kwargs.get('flip', None)
    if offset is None:
        offset = prng.integers(0, 2 * PAD_SIZE + 1, size=2)
    if flip is None:
        flip = prng.random() < FLIP_PROBABILITY

    pixels = crop(pad_constant(img.pixels), int(offset[0]), int(offset[1]), size)
    if flip:
        pixels = flip_horizontal(pixels)
    if normalizer is not None:
        pixels = normalizer.apply(pixels)
    return LabeledImage(np.ascontiguousarray(pixels), img.fine_label,
                        img.coarse_label)


def augment_test(img, normalizer=None):
    size = _square(img.pixels)
    pixels = crop(pad_constant(img.pixels), PAD_SIZE, PAD_SIZE, size)
    if normalizer is not None:
        pixels = normalizer.apply(pixels)
    return LabeledImage(np.ascontiguousarray(pixels), img.fine_label,
                        img.coarse_label)


def augment_batch(images, prng=None, normalizer=None, train=True):
    """[n, C, H, W] array through augment_train (with prng) or augment_test."""
    out = np.empty_like(images)
    for i, pixels in enumerate(images):
        img = LabeledImage(pixels, 0)
        if train:
            out[i] = augment_train(img, prng, normalizer).pixels
        else:
            out[i] = augment_test(img, normalizer).pixels
    return out
