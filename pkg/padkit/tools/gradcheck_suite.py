# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('GRADCHECK_SCOPES', 'CheckItem', 'gradcheck_config', 'op_cases',
           'check_ops', 'check_model', 'check_losses', 'run_suite')

import logging
from collections import namedtuple, OrderedDict

import numpy as np

from padkit.core.data.dataset import ArrayDataset
from padkit.core.loss.fisher import estimate_fisher
from padkit.core.loss.methods import Method, method_loss
from padkit.core.loss.regularizers import LossWeights, ce_loss
from padkit.core.model.config import ViTConfig, StemLayer
from padkit.core.model.vit import build_model
from padkit.core.tensor import GRADCHECK_TOLERANCE, ops
from padkit.core.tensor.gradcheck import grad_check_detail
from padkit.core.tensor.prng import Prng
from padkit.core.tensor.tensor import Tensor


logger = logging.getLogger(__name__)

GRADCHECK_SCOPES = ('ops', 'model', 'losses')

# coordinates checked per parameter in the model and loss scopes
COORDS_PER_PARAM = 4

# softmax is invariant to the key bias under a logits-only loss
_ZERO_GRADIENT = ('attn.bk', )

_LOSS_PARAMS = ('stem.0.weight', 'pos_embed', 'blocks.0.attn.wq',
                'blocks.1.attn.wk', 'blocks.1.attn.bk', 'blocks.0.mlp.fc1.weight',
                'norm.weight', 'head.0.weight', 'head.1.weight')

CheckItem = namedtuple('CheckItem', 'scope name error passed')


def gradcheck_config():
    """Two layers, two heads, five tokens."""
    return ViTConfig(image_size=8, in_channels=3,
                     stem=[StemLayer(4, 3, 2), StemLayer(8, 3, 2)],
                     num_layers=2, num_heads=2, embed_dim=8, mlp_ratio=2.0,
                     num_tasks=2)


def _signed_away_from_zero(prng, shape, margin=0.1):
    x = prng.normal(shape)
    return np.sign(x) * (margin + np.abs(x))


def _probe(fn, prng):
    """Scalar sum(fn(x) * R) with R drawn once for fn's output shape."""
    cache = {}

    def f(x):
        y = fn(x)
        if 'weights' not in cache:
            cache['weights'] = prng.normal(y.shape)
        return ops.reduce_sum(ops.mul(y, Tensor(cache['weights'])))

    return f


def op_cases(prng):
    """(name, scalar function, input) triples covering every tensor op."""
    def normal(*shape):
        return prng.normal(shape)

    b45, b54 = normal(5, 3), normal(2, 3, 4, 5)
    bias3, full = normal(2, 3, 4), normal(3, 4)
    conv_x, conv_w, conv_b = normal(2, 3, 8, 8), normal(4, 3, 3, 3), normal(4)
    gamma, beta, ln_x = normal(6) + 1., normal(6), normal(2, 5, 6)
    other = normal(2, 3, 4)

    cases = [
        ('matmul.left', lambda x: ops.matmul(x, b45), normal(2, 3, 4, 5)),
        ('matmul.right', lambda x: ops.matmul(b54, x), normal(5, 3)),
        ('matmul.batched', lambda x: ops.matmul(x, ops.swap_last(x)),
         normal(2, 2, 5, 4)),
        ('softmax', lambda x: ops.softmax(x, axis=-1), normal(2, 3, 5)),
        ('log_softmax', lambda x: ops.log_softmax(x, axis=-1), normal(3, 6)),
        ('reduce_sum', lambda x: ops.reduce_sum(x, axis=1), normal(2, 3, 4)),
        ('reduce_mean', lambda x: ops.reduce_mean(x), normal(2, 3, 4)),
        ('add.suffix', lambda x: ops.add(Tensor(bias3), x), normal(4)),
        ('add', lambda x: ops.add(x, Tensor(full)), normal(3, 4)),
        ('sub', lambda x: ops.sub(Tensor(full), x), normal(3, 4)),
        ('mul', lambda x: ops.mul(x, x), normal(3, 4)),
        ('scale', lambda x: ops.scale(x, -2.5), normal(3, 4)),
        ('relu', ops.relu, _signed_away_from_zero(prng, (3, 4))),
        ('gelu', ops.gelu, normal(3, 4)),
        ('layer_norm.x', lambda x: ops.layer_norm(x, Tensor(gamma), Tensor(beta)),
         ln_x),
        ('layer_norm.gamma', lambda g: ops.layer_norm(Tensor(ln_x), g, Tensor(beta)),
         gamma),
        ('layer_norm.beta', lambda b: ops.layer_norm(Tensor(ln_x), Tensor(gamma), b),
         beta),
        ('conv2d.x', lambda x: ops.conv2d(x, Tensor(conv_w), Tensor(conv_b),
                                          stride=2, padding=1), conv_x),
        ('conv2d.weight', lambda w: ops.conv2d(Tensor(conv_x), w, Tensor(conv_b),
                                               stride=2, padding=1), conv_w),
        ('conv2d.bias', lambda b: ops.conv2d(Tensor(conv_x), Tensor(conv_w), b,
                                             stride=1, padding=0), conv_b),
        ('reshape', lambda x: ops.reshape(x, (4, 6)), normal(2, 3, 4)),
        ('transpose', lambda x: ops.transpose(x, (0, 2, 1)), normal(2, 3, 4)),
        ('concat', lambda x: ops.concat([x, Tensor(other)], axis=1),
         normal(2, 5, 4)),
        ('expand', lambda x: ops.expand(x, (3, 1, 4)), normal(1, 1, 4)),
        ('narrow', lambda x: ops.narrow(x, -1, 1, None), normal(2, 3, 4)),
        ('select', lambda x: ops.select(x, 1, 0), normal(2, 3, 4)),
        ('norm.squared', lambda x: ops.norm(x, axes=-1, squared=True),
         normal(3, 4)),
        ('norm.plain', lambda x: ops.norm(x, axes=(-2, -1), squared=False),
         normal(2, 3, 4)),
        ('l2_normalize', lambda x: ops.l2_normalize(x, axis=-1), normal(3, 4)),
        ('dropout', lambda x: ops.dropout(x, 0.3, Prng(3), True), normal(3, 4)),
    ]
    return [(name, _probe(fn, prng), Tensor(x)) for name, fn, x in cases]


def _item(scope, name, result, tolerance):
    passed = result.error < tolerance
    log = logger.debug if passed else logger.warning
    log('%-8s %-28s max rel err %.3e (%d coords)',
        scope, name, result.error, result.checked)
    return CheckItem(scope, name, result.error, passed)


def check_ops(prng=None, tolerance=GRADCHECK_TOLERANCE):
    prng = Prng(0) if prng is None else prng
    return [_item('ops', name, grad_check_detail(f, x), tolerance)
            for name, f, x in op_cases(prng)]


def _batch(prng, config, size=3):
    images = prng.normal((size, config.in_channels, config.image_size,
                          config.image_size))
    labels = prng.integers(0, 2, size=size)
    return images, labels


def _worst(f, params, names, prng):
    worst = None
    for name in names:
        result = grad_check_detail(f, params[name], max_coords=COORDS_PER_PARAM,
                                   prng=prng)
        if worst is None or result.error > worst.error:
            worst = result
    return worst


def check_model(prng=None, tolerance=GRADCHECK_TOLERANCE):
    """Sum of per-head cross-entropies through the whole model."""
    prng = Prng(0) if prng is None else prng
    config = gradcheck_config()
    model = build_model(config, 0, head_classes=(2, 2))
    images, labels = _batch(prng, config)

    def f(param):
        logits, _ = model.forward(images)
        return ops.add(ce_loss(logits[0], labels), ce_loss(logits[1], labels))

    params = model.parameters()
    out = []
    for name in params:
        if name.endswith(_ZERO_GRADIENT):
            continue
        result = grad_check_detail(f, params[name], max_coords=COORDS_PER_PARAM,
                                   prng=prng)
        out.append(_item('model', name, result, tolerance))
    return out


def _loss_setup(prng):
    """A second-task student next to a distinct first-task teacher."""
    config = gradcheck_config()
    model = build_model(config, 0, head_classes=(2, ))
    images, labels = _batch(prng, config)

    fisher = estimate_fisher(model, ArrayDataset(images, labels), head=0)
    teacher = model.snapshot(0)

    model.add_head(2)
    for p in model.parameters().values():
        p.data += 0.05 * prng.normal(p.shape)
    return model, teacher, fisher, images, labels


def check_losses(prng=None, tolerance=GRADCHECK_TOLERANCE, methods=None):
    """Full training objective of every method w.r.t. student parameters."""
    prng = Prng(0) if prng is None else prng
    model, teacher, fisher, images, labels = _loss_setup(prng)
    weights = LossWeights(mu=0.8, lam=0.7, temperature=2.0, lambda_ewc=50.)
    params = model.parameters()
    out = []
    for method in methods or list(Method):
        trace = method.distills
        # pre-softmax maps are the only place the key bias shows up
        raw_maps = method.name.startswith('ATT_')

        def f(param):
            teacher_logits, trace_old = teacher.forward(
                images, head_mask=[0], capture_trace=trace)
            logits, trace_new = model.forward(images, head_mask=[0, 1],
                                              capture_trace=trace)
            loss, _ = method_loss(method, weights, labels, logits,
                                  teacher_logits=teacher_logits,
                                  trace_old=trace_old, trace_new=trace_new,
                                  params=params, fisher=fisher)
            return loss

        names = [n for n in _LOSS_PARAMS
                 if raw_maps or not n.endswith(_ZERO_GRADIENT)]
        out.append(_item('losses', method.value,
                         _worst(f, params, names, prng), tolerance))
    return out


_SCOPES = OrderedDict([('ops', check_ops), ('model', check_model),
                       ('losses', check_losses)])


def run_suite(scope, prng=None, tolerance=GRADCHECK_TOLERANCE):
    """CheckItems for one scope, or for every scope with 'all'."""
    if scope == 'all':
        scopes = list(_SCOPES)
    elif scope in _SCOPES:
        scopes = [scope]
    else:
        raise ValueError('unknown gradcheck scope %r' % (scope, ))
    items = []
    for name in scopes:
        items.extend(_SCOPES[name](prng, tolerance))
    return items
