# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('LabeledImage', 'ArrayDataset', 'stack_images')

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class LabeledImage:
    pixels: np.ndarray
    fine_label: int
    coarse_label: Optional[int] = None


class ArrayDataset(object):
    """Images stacked into one [n, C, H, W] array with task-local labels."""

    def __init__(self, images, labels):
        images = np.asarray(images, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        if len(images) != len(labels):
            raise ValueError('%d images for %d labels' % (len(images), len(labels)))
        self.images = images
        self.labels = labels

    def __len__(self):
        return len(self.labels)

    def subset(self, index):
        return ArrayDataset(self.images[index], self.labels[index])


def stack_images(images, label_map=None):
    """ArrayDataset from LabeledImages, relabelled through `label_map`."""
    if not images:
        return ArrayDataset(np.zeros((0, 0, 0, 0)), np.zeros(0))
    pixels = np.stack([img.pixels for img in images])
    labels = [img.fine_label if label_map is None else label_map[img.fine_label]
              for img in images]
    return ArrayDataset(pixels, labels)
