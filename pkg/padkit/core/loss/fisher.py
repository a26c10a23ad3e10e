# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('FisherDiag', 'estimate_fisher', 'ewc_penalty')

import logging
from collections import OrderedDict

import numpy as np

from padkit.errors import DataError, DimensionError
from padkit.core.loss import FISHER_CAP
from padkit.core.tensor import ops
from padkit.core.tensor.tensor import Tape, Tensor, zero_grad


logger = logging.getLogger(__name__)


class FisherDiag(object):
    """Diagonal Fisher importances with the anchor parameters they go with."""

    def __init__(self, values, anchors):
        if list(values) != list(anchors):
            raise DimensionError('Fisher values and anchors are not aligned')
        for name, value in values.items():
            if value.shape != anchors[name].shape:
                raise DimensionError('Fisher entry %s has shape %s, anchor %s'
                                     % (name, value.shape, anchors[name].shape))
            if np.any(value < 0):
                raise ValueError('Fisher entry %s is negative' % name)
        self._values  = OrderedDict(values)
        self._anchors = OrderedDict(anchors)

    @property
    def names(self):
        return list(self._values)

    def __len__(self):
        return len(self._values)

    def value(self, name):
        return self._values[name]

    def anchor(self, name):
        return self._anchors[name]

    def items(self):
        for name in self._values:
            yield name, self._values[name], self._anchors[name]

    def accumulate(self, newer):
        """Running sum of importances; anchors move to the newer estimate."""
        values = OrderedDict()
        for name in newer.names:
            value = newer.value(name)
            if name in self._values:
                value = self._values[name] + value
            values[name] = value
        for name in self._values:
            if name not in values:
                values[name] = self._values[name]
        anchors = OrderedDict(
            (name, newer.anchor(name) if name in newer._anchors else
             self._anchors[name]) for name in values)
        return FisherDiag(values, anchors)


def estimate_fisher(model, data, num_samples=None, prng=None, head=None):
    """Empirical diagonal Fisher of log p(y_hat | x) with y_hat the argmax.

    `data` exposes `images` [n, C, H, W] and is sampled without replacement.
    """
    count = len(data.images)
    if count == 0:
        raise DataError('cannot estimate Fisher information on an empty dataset')
    if num_samples is None:
        num_samples = min(count, FISHER_CAP)
    if not 0 < num_samples <= count:
        raise DataError('num_samples %d outside (0, %d]' % (num_samples, count))
    head = model.num_heads - 1 if head is None else head

    params = model.parameters()
    anchors = OrderedDict((name, p.data.copy()) for name, p in params.items())
    values = OrderedDict((name, np.zeros_like(p.data)) for name, p in params.items())

    picks = np.arange(count) if num_samples == count or prng is None else \
        np.sort(prng.choice(count, num_samples))
    picks = picks[:num_samples]
    for i in picks:
        zero_grad(params.values())
        with Tape() as tape:
            logits, _ = model.forward(data.images[i:i + 1], head_mask={head})
            out = logits[head]
            y_hat = int(np.argmax(out.data[0]))
            log_p = ops.select(ops.select(ops.log_softmax(out), 0, 0), 0, y_hat)
            tape.backward(log_p)
        for name, p in params.items():
            values[name] += p.grad * p.grad
    for name in values:
        values[name] /= float(len(picks))
    zero_grad(params.values())
    logger.info('Fisher diagonal over %d samples, head %d', len(picks), head)
    return FisherDiag(values, anchors)


def ewc_penalty(params, fisher, lambda_ewc):
    """sum_j (lambda/2) F_j (theta_j - theta*_j)^2.

    `params` is a name -> Tensor mapping (parameters absent from `fisher`
    carry zero importance) or a sequence aligned one-to-one with it.
    """
    if not isinstance(params, dict):
        params = list(params)
        if len(params) != len(fisher):
            raise DimensionError('%d parameters for %d Fisher entries'
                                 % (len(params), len(fisher)))
        params = OrderedDict(zip(fisher.names, params))

    total = None
    for name, value, anchor in fisher.items():
        if name not in params:
            raise DimensionError('Fisher entry %s has no parameter' % name)
        p = params[name]
        if p.shape != value.shape:
            raise DimensionError('parameter %s has shape %s, Fisher %s'
                                 % (name, p.shape, value.shape))
        d = ops.sub(p, Tensor(anchor))
        term = ops.reduce_sum(ops.mul(ops.mul(d, d), Tensor(value)))
        total = term if total is None else ops.add(total, term)
    if total is None:
        return Tensor(0.)
    return ops.scale(total, lambda_ewc / 2.)
