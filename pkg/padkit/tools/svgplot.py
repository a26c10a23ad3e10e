# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('PLOT_CURVES', 'curve_stats', 'plot_curve', 'plot_run')

import logging
from collections import OrderedDict

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np

from padkit.errors import MatrixError
from padkit.core.metrics.matrix import (accuracy_curve, forgetting_curve,
                                        stability_curve, plasticity_curve)


logger = logging.getLogger(__name__)

# name -> (curve, first step, y label)
PLOT_CURVES = OrderedDict([
    ('accuracy',   (accuracy_curve, 0, 'mean accuracy of seen tasks')),
    ('forgetting', (forgetting_curve, 1, 'forgetting')),
    ('stability',  (stability_curve, 0, 'accuracy on task 0')),
    ('plasticity', (plasticity_curve, 0, 'accuracy on the newest task')),
])

_STYLE = {'taw': 'tab:blue', 'tag': 'tab:orange'}


def curve_stats(matrices, curve):
    """Steps, mean and population std of `curve` across seed matrices."""
    values = np.array([curve(m) for m in matrices], dtype=np.float64)
    if values.ndim != 2:
        raise MatrixError('seeds disagree on the curve length')
    return values.mean(axis=0), values.std(axis=0)


def plot_curve(name, runs, path):
    """One SVG chart for curve `name`; `runs` maps eval mode to seed matrices.

    A shaded mean +/- std band is drawn when a mode has several seeds.
    """
    curve, first, ylabel = PLOT_CURVES[name]
    plt.rcParams['svg.hashsalt'] = 'padkit'
    fig, ax = plt.subplots(figsize=(5., 3.5))
    for mode, matrices in runs.items():
        mean, std = curve_stats(matrices, curve)
        steps = np.arange(first, first + len(mean))
        color = _STYLE.get(mode, None)
        ax.plot(steps, mean, marker='o', color=color, label=mode)
        if len(matrices) > 1:
            ax.fill_between(steps, mean - std, mean + std, color=color,
                            alpha=0.25, linewidth=0)
    ax.set_xlabel('task step')
    ax.set_ylabel(ylabel)
    ax.set_title('%s (%d seed%s)' % (name, len(matrices),
                                     '' if len(matrices) == 1 else 's'))
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.savefig(path, format='svg', bbox_inches='tight',
                metadata={'Date': None})
    plt.close(fig)
    return path


def plot_run(runs, path_for):
    """Every curve chart for a run; returns the file names written.

    `path_for` maps a file name to the path it is written at.
    """
    num_tasks = min(m.num_tasks for matrices in runs.values() for m in matrices)
    names = []
    for name, (_, first, _) in PLOT_CURVES.items():
        if num_tasks <= first:
            logger.info('skip %s plot: needs more than %d task(s)', name, first)
            continue
        filename = '%s.svg' % name
        plot_curve(name, runs, path_for(filename))
        names.append(filename)
    return names
