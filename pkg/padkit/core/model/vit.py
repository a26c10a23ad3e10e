# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('ForwardTrace', 'Model', 'ModelSnapshot', 'build_model')

import copy
import hashlib
import math
from collections import OrderedDict

import numpy as np

from padkit.errors import DimensionError, HeadError
from padkit.core.model import PROJECTION_STD, TRUNCATION
from padkit.core.tensor import ops
from padkit.core.tensor.prng import Prng, rng_truncated_normal
from padkit.core.tensor.tensor import Tensor, as_tensor, no_grad


class ForwardTrace(object):
    """Per-layer attention observations of one forward pass.

    `attn[l]` holds the prescaled maps QK^T/sqrt(d_h) of layer `l` for every
    head as a [B, K, N, N] tensor (before softmax); `ctx[l]` holds the
    per-head contextualized embeddings softmax(A)V as [B, K, N, d_h]
    (before the output projection). Both stay on the tape of the pass that
    produced them.
    """

    def __init__(self, attn, ctx):
        if len(attn) != len(ctx):
            raise DimensionError('trace has %d attention and %d context layers'
                                 % (len(attn), len(ctx)))
        self.attn = list(attn)
        self.ctx  = list(ctx)

    @property
    def num_layers(self):
        return len(self.attn)

    @property
    def num_heads(self):
        return self.attn[0].shape[1]

    @property
    def num_tokens(self):
        return self.attn[0].shape[2]

    def attn_map(self, layer, head):
        return ops.select(self.attn[layer], 1, head)

    def ctx_map(self, layer, head):
        return ops.select(self.ctx[layer], 1, head)

    def layers(self, target):
        if target == 'attention':
            return self.attn
        if target == 'functional':
            return self.ctx
        raise ValueError('Not support trace target %r' % (target, ))


def _linear(x, weight, bias):
    return ops.add(ops.matmul(x, weight), bias)


class Model(object):
    """Convolutional-stem ViT with one affine classifier head per task."""

    def __init__(self, config, seed, **kwargs):
        self._config       = config
        self._seed         = seed
        self._prng         = Prng(seed)
        self._params       = kwargs.get('params', None)
        self._head_classes = list(kwargs.get('head_classes', []))
        if self._params is None:
            self._params = self._init_body()
            heads, self._head_classes = self._head_classes, []
            for num_classes in heads:
                self.add_head(num_classes)

    @property
    def config(self):
        return self._config

    @property
    def seed(self):
        return self._seed

    @property
    def head_classes(self):
        return list(self._head_classes)

    @property
    def num_heads(self):
        return len(self._head_classes)

    def parameters(self):
        return self._params

    def parameter_count(self):
        return int(sum(p.size for p in self._params.values()))

    def checksum(self):
        digest = hashlib.sha256()
        for name, p in self._params.items():
            digest.update(name.encode('utf-8'))
            digest.update(p.data.astype('<f8').tobytes())
        return digest.hexdigest()

    def _init_body(self):
        cfg = self._config
        prng = self._prng.child(0)
        d, hidden = cfg.embed_dim, cfg.mlp_dim
        params = OrderedDict()

        def param(name, value):
            value.grad_enabled = True
            value.name = name
            params[name] = value

        def projection(*shape):
            return rng_truncated_normal(prng, shape, PROJECTION_STD, TRUNCATION)

        def zeros(*shape):
            return Tensor(np.zeros(shape))

        c_in = cfg.in_channels
        for i, layer in enumerate(cfg.stem):
            fan_in = c_in * layer.kernel * layer.kernel
            param('stem.%d.weight' % i, rng_truncated_normal(
                prng, (layer.out_channels, c_in, layer.kernel, layer.kernel),
                math.sqrt(2. / fan_in), TRUNCATION))
            param('stem.%d.bias' % i, zeros(layer.out_channels))
            c_in = layer.out_channels
        param('stem.proj.weight', rng_truncated_normal(
            prng, (d, c_in, 1, 1), math.sqrt(2. / c_in), TRUNCATION))
        param('stem.proj.bias', zeros(d))

        param('cls_token', projection(1, 1, d))
        param('pos_embed', projection(cfg.num_tokens, d))

        for l in range(cfg.num_layers):
            pre = 'blocks.%d.' % l
            param(pre + 'norm1.weight', Tensor(np.ones(d)))
            param(pre + 'norm1.bias', zeros(d))
            for proj in ('q', 'k', 'v', 'o'):
                param(pre + 'attn.w%s' % proj, projection(d, d))
                param(pre + 'attn.b%s' % proj, zeros(d))
            param(pre + 'norm2.weight', Tensor(np.ones(d)))
            param(pre + 'norm2.bias', zeros(d))
            param(pre + 'mlp.fc1.weight', projection(d, hidden))
            param(pre + 'mlp.fc1.bias', zeros(hidden))
            param(pre + 'mlp.fc2.weight', projection(hidden, d))
            param(pre + 'mlp.fc2.bias', zeros(d))

        param('norm.weight', Tensor(np.ones(d)))
        param('norm.bias', zeros(d))
        return params

    def add_head(self, num_classes):
        if num_classes < 1:
            raise ValueError('a head needs at least one class')
        index = len(self._head_classes)
        prng = self._prng.child(1, index)
        weight = rng_truncated_normal(
            prng, (self._config.embed_dim, num_classes), PROJECTION_STD, TRUNCATION)
        bias = Tensor(np.zeros(num_classes))
        for name, value in (('head.%d.weight' % index, weight),
                            ('head.%d.bias' % index, bias)):
            value.grad_enabled = True
            value.name = name
            self._params[name] = value
        self._head_classes.append(int(num_classes))
        return index

    def forward(self, batch, head_mask=None, capture_trace=False,
                training=False, prng=None):
        """Logits per requested head keyed by head index, plus the trace."""
        cfg = self._config
        p = self._params
        x = as_tensor(batch)
        if x.ndim == 3:
            x = ops.reshape(x, (1, ) + x.shape)
        expected = (cfg.in_channels, cfg.image_size, cfg.image_size)
        if x.ndim != 4 or x.shape[1:] != expected:
            raise DimensionError('batch shape %s, expected [B, %d, %d, %d]'
                                 % ((x.shape, ) + expected))

        heads = range(self.num_heads) if head_mask is None else sorted(head_mask)
        for i in heads:
            if not 0 <= i < self.num_heads:
                raise HeadError('unknown head %r (model has %d)'
                                % (i, self.num_heads))

        drop = cfg.dropout if training else 0.
        if drop > 0. and prng is None:
            raise ValueError('training-mode dropout needs a prng')
        batch_size, d = x.shape[0], cfg.embed_dim

        h = x
        for i, layer in enumerate(cfg.stem):
            h = ops.gelu(ops.conv2d(h, p['stem.%d.weight' % i],
                                    p['stem.%d.bias' % i],
                                    stride=layer.stride,
                                    padding=layer.kernel // 2))
        h = ops.conv2d(h, p['stem.proj.weight'], p['stem.proj.bias'])
        grid = h.shape[-1]
        h = ops.transpose(ops.reshape(h, (batch_size, d, grid * grid)), (0, 2, 1))
        cls = ops.expand(p['cls_token'], (batch_size, 1, d))
        h = ops.add(ops.concat([cls, h], axis=1), p['pos_embed'])
        h = ops.dropout(h, drop, prng, training)

        attn, ctx = [], []
        for l in range(cfg.num_layers):
            h = self._block(h, l, attn, ctx, drop, prng, training)

        h = ops.layer_norm(h, p['norm.weight'], p['norm.bias'], cfg.norm_eps)
        feature = ops.select(h, 1, 0)
        logits = OrderedDict(
            (i, _linear(feature, p['head.%d.weight' % i], p['head.%d.bias' % i]))
            for i in heads)

        trace = ForwardTrace(attn, ctx) if capture_trace else None
        return logits, trace

    def _block(self, h, l, attn, ctx, drop, prng, training):
        cfg = self._config
        p = self._params
        pre = 'blocks.%d.' % l
        batch_size, tokens, d = h.shape
        heads, head_dim = cfg.num_heads, cfg.head_dim

        def split_heads(t):
            t = ops.reshape(t, (batch_size, tokens, heads, head_dim))
            return ops.transpose(t, (0, 2, 1, 3))

        y = ops.layer_norm(h, p[pre + 'norm1.weight'], p[pre + 'norm1.bias'],
                           cfg.norm_eps)
        q = split_heads(_linear(y, p[pre + 'attn.wq'], p[pre + 'attn.bq']))
        k = split_heads(_linear(y, p[pre + 'attn.wk'], p[pre + 'attn.bk']))
        v = split_heads(_linear(y, p[pre + 'attn.wv'], p[pre + 'attn.bv']))

        a = ops.scale(ops.matmul(q, ops.swap_last(k)), 1. / math.sqrt(head_dim))
        s = ops.dropout(ops.softmax(a, axis=-1), drop, prng, training)
        z = ops.matmul(s, v)
        attn.append(a)
        ctx.append(z)

        merged = ops.reshape(ops.transpose(z, (0, 2, 1, 3)),
                             (batch_size, tokens, d))
        out = _linear(merged, p[pre + 'attn.wo'], p[pre + 'attn.bo'])
        h = ops.add(h, ops.dropout(out, drop, prng, training))

        y = ops.layer_norm(h, p[pre + 'norm2.weight'], p[pre + 'norm2.bias'],
                           cfg.norm_eps)
        y = ops.gelu(_linear(y, p[pre + 'mlp.fc1.weight'], p[pre + 'mlp.fc1.bias']))
        y = _linear(y, p[pre + 'mlp.fc2.weight'], p[pre + 'mlp.fc2.bias'])
        return ops.add(h, ops.dropout(y, drop, prng, training))

    def snapshot(self, task_index=None):
        return ModelSnapshot(self, task_index)


class ModelSnapshot(Model):
    """Frozen deep copy of a model; its forward never records onto a tape."""

    def __init__(self, model, task_index=None):
        params = OrderedDict()
        for name, value in model.parameters().items():
            data = value.data.copy()
            data.flags.writeable = False
            params[name] = Tensor(data, name=name)
        super(ModelSnapshot, self).__init__(copy.deepcopy(model.config),
                                            model.seed, params=params,
                                            head_classes=model.head_classes)
        if task_index is None:
            task_index = getattr(model, 'task_index', None)
        self._task_index = task_index
        self.forward_count = 0

    @property
    def task_index(self):
        return self._task_index

    def add_head(self, num_classes):
        raise TypeError('a model snapshot is immutable')

    def forward(self, batch, head_mask=None, capture_trace=False,
                training=False, prng=None):
        self.forward_count += 1
        with no_grad():
            return super(ModelSnapshot, self).forward(
                batch, head_mask, capture_trace, False, None)


def build_model(config, seed, head_classes=()):
    config.validate()
    return Model(config, seed, head_classes=list(head_classes))
