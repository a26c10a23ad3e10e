# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('SGD', )

from collections import OrderedDict

import numpy as np

from padkit.continual import MOMENTUM


class SGD(object):
    """Heavy-ball SGD at a constant learning rate.

    v <- m * v + g;  p <- p - lr * v
    """

    def __init__(self, params, lr, momentum=MOMENTUM):
        self._params   = OrderedDict(params)
        self._lr       = float(lr)
        self._momentum = float(momentum)
        self._velocity = OrderedDict(
            (name, np.zeros_like(p.data)) for name, p in self._params.items())

    @property
    def lr(self):
        return self._lr

    @property
    def momentum(self):
        return self._momentum

    def zero_grad(self):
        for p in self._params.values():
            p.grad = np.zeros_like(p.data)

    def step(self):
        for name, p in self._params.items():
            if p.grad is None:
                continue
            v = self._velocity[name]
            v *= self._momentum
            v += p.grad
            p.data -= self._lr * v
