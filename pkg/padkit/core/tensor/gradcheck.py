# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('GradCheckResult', 'grad_check', 'grad_check_detail')

from collections import namedtuple

import numpy as np

from padkit.errors import TapeError
from padkit.core.tensor import GRADCHECK_EPS, GRADCHECK_FLOOR
from padkit.core.tensor.tensor import Tape, no_grad


GradCheckResult = namedtuple('GradCheckResult',
                             'error index analytic numeric checked')


def _scalar(value):
    if value.data.size != 1:
        raise TapeError('grad_check needs a scalar function, got shape %s'
                        % (value.shape, ))
    return float(value.data.reshape(-1)[0])


def grad_check_detail(f, x, eps=GRADCHECK_EPS, max_coords=None, prng=None):
    """Compare the tape gradient of scalar `f(x)` with central differences.

    `x` is perturbed in place, so `f` may ignore its argument and read a
    model parameter directly. With `max_coords`, a seeded subset of the
    coordinates is checked.
    """
    enabled = x.grad_enabled
    x.grad_enabled = True
    x.grad = None
    try:
        with Tape() as tape:
            y = f(x)
            _scalar(y)
            if y.grad_enabled and len(tape):
                tape.backward(y)
        analytic = x.grad if x.grad is not None else np.zeros_like(x.data)

        coords = list(np.ndindex(*x.shape))
        if max_coords is not None and len(coords) > max_coords:
            picks = prng.choice(len(coords), max_coords)
            coords = [coords[i] for i in sorted(picks)]

        worst = GradCheckResult(0., None, 0., 0., len(coords))
        with no_grad():
            for idx in coords:
                orig = x.data[idx]
                x.data[idx] = orig + eps
                fp = _scalar(f(x))
                x.data[idx] = orig - eps
                fm = _scalar(f(x))
                x.data[idx] = orig

                a = float(analytic[idx])
                fd = (fp - fm) / (2. * eps)
                err = abs(a - fd) / max(abs(a), abs(fd), GRADCHECK_FLOOR)
                if worst.index is None or err > worst.error:
                    worst = GradCheckResult(err, idx, a, fd, len(coords))
        return worst
    finally:
        x.grad_enabled = enabled
        x.grad = None


def grad_check(f, x, eps=GRADCHECK_EPS, max_coords=None, prng=None):
    return grad_check_detail(f, x, eps, max_coords, prng).error
