# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('PadMode', 'LossWeights', 'register_gate', 'ce_loss',
           'lwf_kd_loss', 'pool_map', 'pad_distance', 'pad_attention_loss',
           'fd_functional_loss', 'total_loss')

from dataclasses import dataclass

import numpy as np

from padkit.errors import ConfigError, DataError, DimensionError
from padkit.core.loss import (PAD_SYMMETRY, PAD_TARGET, PAD_POOLING, PAD_NORM,
                              POOL_AXIS, LWF_TEMPERATURE)
from padkit.core.tensor import ops
from padkit.core.tensor.tensor import Tensor, as_tensor


_GATES = {'relu': ops.relu}


def register_gate(name, fn):
    """Make `fn` (Tensor -> Tensor) available as an asymmetric gate."""
    _GATES[name] = fn


@dataclass(frozen=True)
class PadMode:
    symmetry: str = 'asym'
    target: str = 'attention'
    pooling: str = 'spatial'
    norm: str = 'squared'
    include_class_token: bool = True
    normalize: bool = False
    gate: str = 'relu'

    def validate(self):
        for value, allowed in ((self.symmetry, PAD_SYMMETRY),
                               (self.target, PAD_TARGET),
                               (self.pooling, PAD_POOLING),
                               (self.norm, PAD_NORM)):
            if value not in allowed:
                raise ConfigError('Not support PAD setting %r (one of %s)'
                                  % (value, ', '.join(allowed)))
        if self.pooling == 'intact' and self.target != 'functional':
            raise ConfigError('intact pooling applies to functional '
                              'distillation only')
        if self.gate not in _GATES:
            raise ConfigError('unknown asymmetric gate %r' % (self.gate, ))
        return self

    @property
    def squared(self):
        return self.norm == 'squared'

    def gated(self, d):
        if self.symmetry == 'asym':
            return _GATES[self.gate](d)
        return d


@dataclass
class LossWeights:
    mu: float = 1.0
    lam: float = 1.0
    temperature: float = LWF_TEMPERATURE
    lambda_ewc: float = 5000.0

    def validate(self):
        if not 0. <= self.mu <= 1. or not 0. <= self.lam <= 1.:
            raise ConfigError('mu and lam must lie in [0, 1]')
        if self.temperature <= 0:
            raise ConfigError('temperature must be positive')
        if self.lambda_ewc < 0:
            raise ConfigError('lambda_ewc must be non-negative')
        return self


def ce_loss(logits, labels):
    """Batch mean of -log softmax(logits)[label]."""
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    batch, classes = logits.shape
    if labels.shape != (batch, ):
        raise DimensionError('labels shape %s for logits %s'
                             % (labels.shape, logits.shape))
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise DataError('label out of range [0, %d)' % classes)
    onehot = np.zeros((batch, classes))
    onehot[np.arange(batch), labels] = 1.
    picked = ops.reduce_sum(ops.mul(ops.log_softmax(logits, axis=-1), onehot))
    return ops.scale(picked, -1. / batch)


def _log_softmax_array(x):
    shifted = x - x.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _kd_single(old_logits, new_logits, temperature):
    old = old_logits.data if isinstance(old_logits, Tensor) else \
        np.asarray(old_logits, dtype=np.float64)
    new = as_tensor(new_logits)
    if old.shape != new.shape:
        raise DimensionError('LwF logits shapes %s and %s differ'
                             % (old.shape, new.shape))
    inv = 1. / temperature
    log_p = _log_softmax_array(old * inv)
    log_q = ops.log_softmax(ops.scale(new, inv), axis=-1)
    kl = ops.reduce_sum(ops.mul(ops.sub(Tensor(log_p), log_q), np.exp(log_p)))
    return ops.scale(kl, temperature * temperature / old.shape[0])


def lwf_kd_loss(old_logits, new_logits, temperature=LWF_TEMPERATURE):
    """T^2-scaled KL(softmax(old/T) || softmax(new/T)), batch mean.

    Sequences of logits (one entry per past head) are summed over heads.
    Old logits act as constants.
    """
    if temperature <= 0:
        raise ValueError('temperature must be positive')
    if isinstance(old_logits, (list, tuple)):
        if len(old_logits) != len(new_logits):
            raise DimensionError('LwF got %d old heads and %d new heads'
                                 % (len(old_logits), len(new_logits)))
        total = None
        for old, new in zip(old_logits, new_logits):
            term = _kd_single(old, new, temperature)
            total = term if total is None else ops.add(total, term)
        return total if total is not None else Tensor(0.)
    return _kd_single(old_logits, new_logits, temperature)


def pool_map(m, axis):
    """Sum a [..., P, Q] map over one of its last two axes.

    'first' sums over P and returns a vector indexed by Q; 'second' sums
    over Q and returns a vector indexed by P.
    """
    m = as_tensor(m)
    if m.ndim < 2:
        raise DimensionError('pool_map needs a 2-D map, got shape %s'
                             % (m.shape, ))
    if axis not in POOL_AXIS:
        raise ValueError('Not support pooling axis %r' % (axis, ))
    return ops.reduce_sum(m, -2 if axis == 'first' else -1)


def pad_distance(old, new, mode=PadMode()):
    """Width-pooled plus height-pooled distance between two maps.

    Leading axes are kept, so [B, K, P, Q] inputs give a [B, K] result and
    plain P x Q inputs a scalar.
    """
    old, new = as_tensor(old), as_tensor(new)
    if old.shape != new.shape:
        raise DimensionError('pad_distance shapes %s and %s differ'
                             % (old.shape, new.shape))
    total = None
    for axis in POOL_AXIS:
        pooled_old, pooled_new = pool_map(old, axis), pool_map(new, axis)
        if mode.normalize:
            pooled_old = ops.l2_normalize(pooled_old)
            pooled_new = ops.l2_normalize(pooled_new)
        d = mode.gated(ops.sub(pooled_old, pooled_new))
        term = ops.norm(d, axes=-1, squared=mode.squared)
        total = term if total is None else ops.add(total, term)
    return total


def _layer_pairs(trace_old, trace_new, target):
    olds, news = trace_old.layers(target), trace_new.layers(target)
    if len(olds) != len(news):
        raise DimensionError('traces have %d and %d layers'
                             % (len(olds), len(news)))
    for old, new in zip(olds, news):
        if old.shape != new.shape:
            raise DimensionError('trace maps %s and %s differ'
                                 % (old.shape, new.shape))
    return list(zip(olds, news))


def _layer_average(terms):
    total = None
    for term in terms:
        total = term if total is None else ops.add(total, term)
    return ops.scale(total, 1. / len(terms))


def pad_attention_loss(trace_old, trace_new, mode=PadMode()):
    """(1/L) sum_l (1/K) sum_k of pad_distance over attention maps, batch mean."""
    mode.validate()
    if mode.target != 'attention':
        raise ConfigError('pad_attention_loss needs target=attention')
    terms = []
    for old, new in _layer_pairs(trace_old, trace_new, 'attention'):
        if not mode.include_class_token:
            old = ops.narrow(ops.narrow(old, -1, 1, None), -2, 1, None)
            new = ops.narrow(ops.narrow(new, -1, 1, None), -2, 1, None)
        terms.append(ops.reduce_mean(pad_distance(old, new, mode)))
    return _layer_average(terms)


def fd_functional_loss(trace_old, trace_new, mode=PadMode(target='functional')):
    """Distance between per-head contextualized embeddings.

    Spatial pooling sums over the token axis and the channel axis as in
    pad_distance; intact compares the raw embeddings elementwise.
    """
    mode.validate()
    if mode.target != 'functional':
        raise ConfigError('fd_functional_loss needs target=functional')
    terms = []
    for old, new in _layer_pairs(trace_old, trace_new, 'functional'):
        if not mode.include_class_token:
            old = ops.narrow(old, -2, 1, None)
            new = ops.narrow(new, -2, 1, None)
        if mode.pooling == 'spatial':
            dist = pad_distance(old, new, mode)
        else:
            d = mode.gated(ops.sub(old, new))
            dist = ops.norm(d, axes=(-2, -1), squared=mode.squared)
        terms.append(ops.reduce_mean(dist))
    return _layer_average(terms)


def total_loss(ce, lwf, reg, weights):
    """mu * reg + lam * lwf + ce; zero-weighted or absent terms are skipped."""
    total = ce
    if reg is not None and weights.mu != 0.:
        total = ops.add(total, ops.scale(reg, weights.mu))
    if lwf is not None and weights.lam != 0.:
        total = ops.add(total, ops.scale(lwf, weights.lam))
    return total
