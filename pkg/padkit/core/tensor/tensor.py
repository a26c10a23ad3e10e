# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('Tensor', 'Tape', 'no_grad', 'grad_is_on', 'current_tape',
           'make_result', 'as_tensor', 'backward', 'zero_grad')

import threading
from contextlib import contextmanager

import numpy as np

from padkit.errors import NonFiniteError, TapeError


_local = threading.local()


def _context():
    if not hasattr(_local, 'tapes'):
        _local.tapes = []
        _local.grad_on = True
    return _local


def current_tape():
    """The innermost entered tape, or None outside any `with Tape()`."""
    tapes = _context().tapes
    return tapes[-1] if tapes else None


def grad_is_on():
    return _context().grad_on


@contextmanager
def no_grad():
    """Nothing computed inside the block is recorded onto any tape."""
    ctx = _context()
    prev = ctx.grad_on
    ctx.grad_on = False
    try:
        yield
    finally:
        ctx.grad_on = prev


def _check_finite(data, where):
    if not np.all(np.isfinite(data)):
        raise NonFiniteError('non-finite values in %s' % where)


class Tensor(object):
    """n-dimensional float64 array that may take part in the gradient tape.

    A tensor with grad disabled is treated as immutable by every op.
    """

    def __init__(self, data, grad_enabled=False, name=None):
        data = np.asarray(data, dtype=np.float64)
        _check_finite(data, name or 'tensor')
        self.data         = data
        self.grad_enabled = bool(grad_enabled)
        self.grad         = None
        self.name         = name
        self._recorded    = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return not self._recorded

    def item(self):
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else \
            self.data.item()

    def numpy(self):
        return self.data.copy()

    def detach(self):
        return Tensor(self.data.copy(), name=self.name)

    def __repr__(self):
        return 'Tensor(shape=%s, grad_enabled=%s%s)' % (
            self.shape, self.grad_enabled,
            '' if self.name is None else ', name=%r' % self.name)

    def __add__(self, other):
        from padkit.core.tensor import ops
        return ops.add(self, other)

    def __sub__(self, other):
        from padkit.core.tensor import ops
        return ops.sub(self, other)

    def __mul__(self, other):
        from padkit.core.tensor import ops
        if isinstance(other, (int, float)):
            return ops.scale(self, other)
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        from padkit.core.tensor import ops
        return ops.matmul(self, other)

    def __neg__(self):
        from padkit.core.tensor import ops
        return ops.scale(self, -1.)


def as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


class _Node(object):

    __slots__ = ('inputs', 'output', 'backward')

    def __init__(self, inputs, output, backward):
        self.inputs   = inputs
        self.output   = output
        self.backward = backward


class Tape(object):
    """Ordered record of differentiable operations.

    Nodes are appended as ops execute, so the list is already topological.
    A tape is consumed by `backward`; running it twice without new records in
    between is an error. Confined to one thread at a time.
    """

    def __init__(self):
        self._nodes    = []
        self._consumed = False

    def __enter__(self):
        _context().tapes.append(self)
        return self

    def __exit__(self, *largs):
        _context().tapes.pop()

    def __len__(self):
        return len(self._nodes)

    @property
    def consumed(self):
        return self._consumed

    def reset(self):
        self._nodes    = []
        self._consumed = False

    def record(self, inputs, output, backward):
        if self._consumed:
            self.reset()
        self._nodes.append(_Node(inputs, output, backward))

    def backward(self, loss):
        if loss.data.size != 1 or loss.ndim > 1:
            raise TapeError('backward needs a scalar loss, got shape %s'
                            % (loss.shape, ))
        if self._consumed:
            raise TapeError('tape already consumed by backward; reset it '
                            'or record a new pass first')
        if not self._nodes:
            raise TapeError('tape is empty')

        grads = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self._nodes):
            g = grads.pop(id(node.output), None)
            if g is None:
                continue
            in_grads = node.backward(g)
            for t, gi in zip(node.inputs, in_grads):
                if gi is None or not t.grad_enabled:
                    continue
                if t.is_leaf:
                    if t.grad is None:
                        t.grad = np.zeros_like(t.data)
                    t.grad += gi
                    continue
                key = id(t)
                if key in grads:
                    grads[key] = grads[key] + gi
                else:
                    grads[key] = gi

        self._nodes    = []
        self._consumed = True


def make_result(data, inputs, backward, op):
    """Wrap an op output, recording it when any input needs a gradient.

    Ops only record while a tape is entered; outside one they run untracked.
    """
    _check_finite(data, op)
    tape = current_tape() if grad_is_on() else None
    track = tape is not None and any(t.grad_enabled for t in inputs)
    out = Tensor(data, grad_enabled=track)
    if track:
        tape.record(tuple(inputs), out, backward)
        out._recorded = True
    return out


def backward(loss):
    tape = current_tape()
    if tape is None:
        raise TapeError('backward needs an entered Tape')
    tape.backward(loss)


def zero_grad(params):
    for p in params:
        p.grad = np.zeros_like(p.data)
