# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('matmul', 'softmax', 'log_softmax', 'reduce_sum', 'reduce_mean',
           'elementwise', 'add', 'sub', 'mul', 'scale', 'relu', 'gelu',
           'layer_norm', 'conv2d', 'reshape', 'transpose', 'swap_last',
           'concat', 'expand', 'narrow', 'select', 'norm', 'l2_normalize',
           'dropout')

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from padkit.errors import DimensionError
from padkit.core.tensor import ELEMENTWISE_KIND
from padkit.core.tensor.tensor import Tensor, as_tensor, make_result


def _axis(x, axis):
    ndim = x.ndim
    if not -ndim <= axis < ndim:
        raise DimensionError('axis %d out of range for %d-d tensor'
                             % (axis, ndim))
    return axis % ndim


def _sum_to_shape(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, n in enumerate(shape):
        if n == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def _suffix_shape(a, b, kind):
    # b broadcasts over a only as a trailing suffix (bias, positional table)
    if a.shape == b.shape:
        return a.shape
    big, small = (a, b) if a.ndim >= b.ndim else (b, a)
    if small.ndim == 0 or big.shape[big.ndim - small.ndim:] == small.shape:
        return big.shape
    raise DimensionError('%s: shapes %s and %s do not match'
                         % (kind, a.shape, b.shape))


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError('matmul needs operands of rank >= 2, got %s, %s'
                             % (a.shape, b.shape))
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError('matmul inner dimensions differ: %s @ %s'
                             % (a.shape, b.shape))
    if a.ndim > 2 and b.ndim > 2 and a.shape[:-2] != b.shape[:-2]:
        raise DimensionError('matmul batch dimensions differ: %s @ %s'
                             % (a.shape, b.shape))
    out = np.matmul(a.data, b.data)

    def backward(g):
        ga = _sum_to_shape(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)
        gb = _sum_to_shape(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)
        return ga, gb

    return make_result(out, (a, b), backward, 'matmul')


def softmax(x, axis=-1):
    x = as_tensor(x)
    axis = _axis(x, axis)
    e = np.exp(x.data - x.data.max(axis=axis, keepdims=True))
    s = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=axis, keepdims=True)), )

    return make_result(s, (x, ), backward, 'softmax')


def log_softmax(x, axis=-1):
    x = as_tensor(x)
    axis = _axis(x, axis)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    y = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def backward(g):
        return (g - np.exp(y) * g.sum(axis=axis, keepdims=True), )

    return make_result(y, (x, ), backward, 'log_softmax')


def reduce_sum(x, axis=None):
    x = as_tensor(x)
    if axis is None:
        out = x.data.sum()

        def backward(g):
            return (np.broadcast_to(g, x.shape).copy(), )
    else:
        axis = _axis(x, axis)
        out = x.data.sum(axis=axis)

        def backward(g):
            return (np.broadcast_to(np.expand_dims(g, axis), x.shape).copy(), )

    return make_result(out, (x, ), backward, 'reduce_sum')


def reduce_mean(x, axis=None):
    x = as_tensor(x)
    count = x.size if axis is None else x.shape[_axis(x, axis)]
    return scale(reduce_sum(x, axis), 1. / count)


def elementwise(kind, a, b=None):
    if kind not in ELEMENTWISE_KIND:
        raise ValueError('Not support elementwise kind %r' % (kind, ))

    a = as_tensor(a)

    if kind == 'relu':
        out = np.maximum(a.data, 0.)

        def backward(g):
            return (g * (a.data > 0.), )

        return make_result(out, (a, ), backward, 'relu')

    if kind == 'scale':
        c = float(b)
        out = a.data * c

        def backward(g):
            return (g * c, )

        return make_result(out, (a, ), backward, 'scale')

    b = as_tensor(b)
    _suffix_shape(a, b, kind)

    if kind == 'add':
        out = a.data + b.data

        def backward(g):
            return _sum_to_shape(g, a.shape), _sum_to_shape(g, b.shape)
    elif kind == 'sub':
        out = a.data - b.data

        def backward(g):
            return _sum_to_shape(g, a.shape), _sum_to_shape(-g, b.shape)
    else:
        out = a.data * b.data

        def backward(g):
            return (_sum_to_shape(g * b.data, a.shape),
                    _sum_to_shape(g * a.data, b.shape))

    return make_result(out, (a, b), backward, kind)


def add(a, b):
    return elementwise('add', a, b)


def sub(a, b):
    return elementwise('sub', a, b)


def mul(a, b):
    return elementwise('mul', a, b)


def scale(a, c):
    return elementwise('scale', a, c)


def relu(a):
    return elementwise('relu', a)


_GELU_C = math.sqrt(2. / math.pi)


def gelu(x):
    x = as_tensor(x)
    u = _GELU_C * (x.data + 0.044715 * x.data ** 3)
    t = np.tanh(u)
    out = 0.5 * x.data * (1. + t)

    def backward(g):
        du = _GELU_C * (1. + 3 * 0.044715 * x.data ** 2)
        return (g * (0.5 * (1. + t) + 0.5 * x.data * (1. - t * t) * du), )

    return make_result(out, (x, ), backward, 'gelu')


def layer_norm(x, gamma, beta, eps=1e-6):
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    width = x.shape[-1]
    if gamma.shape != (width, ) or beta.shape != (width, ):
        raise DimensionError('layer_norm affine shape %s/%s, expected (%d,)'
                             % (gamma.shape, beta.shape, width))
    if eps <= 0:
        raise ValueError('layer_norm eps must be positive')

    mu  = x.data.mean(axis=-1, keepdims=True)
    xc  = x.data - mu
    inv = 1. / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xh  = xc * inv
    out = gamma.data * xh + beta.data

    def backward(g):
        gxh = g * gamma.data
        gx = inv / width * (width * gxh
                            - gxh.sum(axis=-1, keepdims=True)
                            - xh * (gxh * xh).sum(axis=-1, keepdims=True))
        return (gx, _sum_to_shape(g * xh, gamma.shape),
                _sum_to_shape(g, beta.shape))

    return make_result(out, (x, gamma, beta), backward, 'layer_norm')


def conv2d(x, w, bias=None, stride=1, padding=0):
    """Cross-correlation over [C,H,W] or [B,C,H,W] input."""
    x, w = as_tensor(x), as_tensor(w)
    if stride < 1 or padding < 0:
        raise ValueError('conv2d needs stride >= 1 and padding >= 0')
    if w.ndim != 4 or x.ndim not in (3, 4):
        raise DimensionError('conv2d shapes %s * %s' % (x.shape, w.shape))

    single = x.ndim == 3
    xd = x.data[None] if single else x.data
    c_out, c_in, kh, kw = w.shape
    batch, channels, height, width = xd.shape
    if channels != c_in:
        raise DimensionError('conv2d channel count %d, kernel expects %d'
                             % (channels, c_in))
    if height + 2 * padding < kh or width + 2 * padding < kw:
        raise DimensionError('conv2d kernel %dx%d larger than padded input'
                             % (kh, kw))

    xp = np.pad(xd, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    oh = (height + 2 * padding - kh) // stride + 1
    ow = (width + 2 * padding - kw) // stride + 1
    cols = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    cols = cols[:, :, ::stride, ::stride][:, :, :oh, :ow]
    out = np.tensordot(cols, w.data, axes=([1, 4, 5], [1, 2, 3]))
    out = out.transpose(0, 3, 1, 2)

    inputs = [x, w]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (c_out, ):
            raise DimensionError('conv2d bias shape %s' % (bias.shape, ))
        out = out + bias.data[None, :, None, None]
        inputs.append(bias)
    if single:
        out = out[0]

    def backward(g):
        g4 = g[None] if single else g
        gw = np.tensordot(g4, cols, axes=([0, 2, 3], [0, 2, 3]))
        gxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                gxp[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride] += \
                    np.tensordot(g4, w.data[:, :, i, j], axes=([1], [0])) \
                      .transpose(0, 3, 1, 2)
        gx = gxp[:, :, padding:padding + height, padding:padding + width]
        gx = gx[0] if single else gx
        grads = [gx, gw]
        if bias is not None:
            grads.append(g4.sum(axis=(0, 2, 3)))
        return grads

    return make_result(out, inputs, backward, 'conv2d')


def reshape(x, shape):
    x = as_tensor(x)
    out = x.data.reshape(shape)

    def backward(g):
        return (g.reshape(x.shape), )

    return make_result(out, (x, ), backward, 'reshape')


def transpose(x, axes):
    x = as_tensor(x)
    out = x.data.transpose(axes)
    inverse = np.argsort(axes)

    def backward(g):
        return (g.transpose(inverse), )

    return make_result(out, (x, ), backward, 'transpose')


def swap_last(x):
    axes = list(range(as_tensor(x).ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return transpose(x, axes)


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    axis = _axis(tensors[0], axis)
    out = np.concatenate([t.data for t in tensors], axis=axis)
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return np.split(g, bounds, axis=axis)

    return make_result(out, tensors, backward, 'concat')


def expand(x, shape):
    """Broadcast size-1 or missing leading axes up to `shape`."""
    x = as_tensor(x)
    try:
        out = np.broadcast_to(x.data, shape).copy()
    except ValueError:
        raise DimensionError('cannot expand %s to %s' % (x.shape, shape))

    def backward(g):
        return (_sum_to_shape(g, x.shape), )

    return make_result(out, (x, ), backward, 'expand')


def narrow(x, axis, start, stop):
    x = as_tensor(x)
    axis = _axis(x, axis)
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    out = x.data[index]

    def backward(g):
        gx = np.zeros_like(x.data)
        gx[index] = g
        return (gx, )

    return make_result(out, (x, ), backward, 'narrow')


def select(x, axis, position):
    x = as_tensor(x)
    axis = _axis(x, axis)
    if not -x.shape[axis] <= position < x.shape[axis]:
        raise DimensionError('index %d out of range for axis %d of size %d'
                             % (position, axis, x.shape[axis]))
    index = [slice(None)] * x.ndim
    index[axis] = position
    index = tuple(index)
    out = x.data[index]

    def backward(g):
        gx = np.zeros_like(x.data)
        gx[index] = g
        return (gx, )

    return make_result(out, (x, ), backward, 'select')


def norm(x, axes=-1, squared=True):
    """L2 norm over `axes`; the plain norm has gradient 0 where it is 0."""
    x = as_tensor(x)
    axes = tuple(_axis(x, a) for a in np.atleast_1d(axes))
    sq = (x.data * x.data).sum(axis=axes)

    if squared:
        def backward(g):
            return (2. * x.data * np.expand_dims(g, axes), )

        return make_result(sq, (x, ), backward, 'norm')

    n = np.sqrt(sq)

    def backward(g):
        safe = np.where(n > 0., n, 1.)
        factor = np.where(n > 0., g / safe, 0.)
        return (x.data * np.expand_dims(factor, axes), )

    return make_result(n, (x, ), backward, 'norm')


def l2_normalize(x, axis=-1, eps=1e-12):
    x = as_tensor(x)
    axis = _axis(x, axis)
    n = np.sqrt((x.data * x.data).sum(axis=axis, keepdims=True) + eps)
    y = x.data / n

    def backward(g):
        return ((g - y * (g * y).sum(axis=axis, keepdims=True)) / n, )

    return make_result(y, (x, ), backward, 'l2_normalize')


def dropout(x, p, prng, training=True):
    if not training or p <= 0.:
        return x
    if p >= 1.:
        raise ValueError('dropout probability must be < 1')
    x = as_tensor(x)
    keep = (prng.uniform(x.shape) >= p) / (1. - p)
    return mul(x, Tensor(keep))
