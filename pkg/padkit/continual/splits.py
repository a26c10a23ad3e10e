# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('task_sizes', 'scheme_classes', 'split_tasks')

import re

from padkit.errors import ConfigError, DataError
from padkit.core.tensor.prng import Prng
from padkit.continual import SPLIT_SCHEMES, SYNTHETIC_SCHEME


_SYNTHETIC = re.compile(r'^synthetic/(\d+)\s*[x×]\s*(\d+)$')


def _parse(scheme):
    if scheme in SPLIT_SCHEMES:
        return SPLIT_SCHEMES[scheme]
    match = _SYNTHETIC.match(scheme) if scheme.startswith(SYNTHETIC_SCHEME) else None
    if match is None:
        raise ConfigError('unknown split scheme %r (one of %s, synthetic/TxC)'
                          % (scheme, ', '.join(sorted(SPLIT_SCHEMES))))
    tasks, classes = int(match.group(1)), int(match.group(2))
    if tasks < 1 or classes < 1:
        raise ConfigError('split %r needs at least one task and one class'
                          % scheme)
    return tasks * classes, [classes] * tasks


def task_sizes(scheme):
    return list(_parse(scheme)[1])


def scheme_classes(scheme):
    return _parse(scheme)[0]


def split_tasks(dataset, scheme, seed=0):
    """Disjoint per-task class lists covering every class of the scheme.

    `dataset` is a class count or anything with `num_classes`. The class
    order is a permutation drawn from `seed` (an int or a Prng).
    """
    total, sizes = _parse(scheme)
    available = getattr(dataset, 'num_classes', dataset)
    if available < total:
        raise DataError('split %s needs %d classes, dataset has %d'
                        % (scheme, total, available))
    if available > total:
        raise DataError('split %s covers %d classes but the dataset has %d'
                        % (scheme, total, available))
    prng = seed if isinstance(seed, Prng) else Prng(seed)
    order = [int(c) for c in prng.permutation(total)]
    out, start = [], 0
    for size in sizes:
        out.append(order[start:start + size])
        start += size
    return out
