# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('Prng', 'rng_normal', 'rng_truncated_normal')

import numpy as np

from padkit.core.tensor import PRNG_ALGORITHM
from padkit.core.tensor.tensor import Tensor


class Prng(object):
    """Seeded generator: numpy PCG64 fed through a SeedSequence.

    Child streams are derived from the spawn key, so `child(task, epoch)`
    is reproducible regardless of how many draws the parent has made.
    """

    algorithm = PRNG_ALGORITHM

    def __init__(self, seed=0, **kwargs):
        sequence = kwargs.get('sequence', None)
        if sequence is None:
            seed = int(seed)
            if not 0 <= seed < 2 ** 64:
                raise ValueError('seed must fit in 64 bits, got %d' % seed)
            sequence = np.random.SeedSequence(seed)
        self._seed      = seed
        self._sequence  = sequence
        self._generator = np.random.Generator(np.random.PCG64(sequence))

    @property
    def seed(self):
        return self._seed

    @property
    def state(self):
        return self._generator.bit_generator.state

    def child(self, *key):
        sequence = np.random.SeedSequence(
            entropy=self._sequence.entropy,
            spawn_key=tuple(self._sequence.spawn_key) + tuple(int(k) for k in key))
        return Prng(self._seed, sequence=sequence)

    def spawn(self, count):
        return [self.child(i) for i in range(count)]

    def normal(self, shape, mean=0., std=1.):
        return self._generator.normal(mean, std, size=shape)

    def uniform(self, shape, low=0., high=1.):
        return self._generator.uniform(low, high, size=shape)

    def integers(self, low, high, size=None):
        return self._generator.integers(low, high, size=size)

    def random(self):
        return float(self._generator.random())

    def permutation(self, n):
        return self._generator.permutation(n)

    def choice(self, n, size, replace=False):
        return self._generator.choice(n, size=size, replace=replace)


def rng_normal(prng, shape, mean=0., std=1.):
    if std < 0:
        raise ValueError('std must be non-negative, got %r' % (std, ))
    if std == 0:
        prng.normal(shape)
        return Tensor(np.full(shape, float(mean)))
    return Tensor(prng.normal(shape, mean, std))


def rng_truncated_normal(prng, shape, std=0.02, bound=2.):
    """Normal draws resampled until they lie within `bound` standard deviations."""
    if std < 0:
        raise ValueError('std must be non-negative, got %r' % (std, ))
    values = prng.normal(shape)
    outside = np.abs(values) > bound
    while outside.any():
        values[outside] = prng.normal(int(outside.sum()))
        outside = np.abs(values) > bound
    return Tensor(values * std)
