# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('AccuracyMatrix', 'record', 'stability_curve', 'plasticity_curve',
           'forgetting', 'forgetting_curve', 'accuracy_curve',
           'avg_incremental_accuracy', 'last_task_accuracy', 'aggregate_seeds',
           'summarize')

import numpy as np

from padkit.errors import MatrixError


class AccuracyMatrix(object):
    """Lower-trapezoidal T x T accuracies; M[i, j] is task j after step i.

    Cells are written once; cells above the diagonal never exist.
    """

    def __init__(self, num_tasks):
        if num_tasks < 1:
            raise MatrixError('an accuracy matrix needs at least one task')
        self._cells = np.full((num_tasks, num_tasks), np.nan)

    @classmethod
    def from_array(cls, values):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise MatrixError('accuracy matrix must be square, got %s'
                              % (values.shape, ))
        matrix = cls(values.shape[0])
        for i in range(values.shape[0]):
            for j in range(i + 1):
                if not np.isnan(values[i, j]):
                    matrix.record(i, j, float(values[i, j]))
        return matrix

    @property
    def num_tasks(self):
        return self._cells.shape[0]

    def defined(self, step, task):
        return task <= step and not np.isnan(self._cells[step, task])

    def get(self, step, task):
        if not self.defined(step, task):
            raise MatrixError('cell (%d, %d) is not populated' % (step, task))
        return float(self._cells[step, task])

    def record(self, step, task, acc):
        if not 0 <= step < self.num_tasks or task < 0:
            raise MatrixError('cell (%d, %d) outside a %d-task matrix'
                              % (step, task, self.num_tasks))
        if task > step:
            raise MatrixError('cell (%d, %d) lies above the diagonal'
                              % (step, task))
        if not 0. <= acc <= 1.:
            raise MatrixError('accuracy %r outside [0, 1]' % (acc, ))
        if not np.isnan(self._cells[step, task]):
            raise MatrixError('cell (%d, %d) already recorded' % (step, task))
        self._cells[step, task] = acc
        return self

    def row(self, step):
        return [self.get(step, j) for j in range(step + 1)]

    def populated_steps(self):
        """Number of leading rows that are complete."""
        count = 0
        for i in range(self.num_tasks):
            if not all(self.defined(i, j) for j in range(i + 1)):
                break
            count += 1
        return count

    def complete(self):
        return self.populated_steps() == self.num_tasks

    def to_array(self):
        return self._cells.copy()

    def __eq__(self, other):
        return isinstance(other, AccuracyMatrix) and \
            np.array_equal(self._cells, other._cells, equal_nan=True)

    def __repr__(self):
        return 'AccuracyMatrix(%r)' % ([self.row(i) for i in
                                         range(self.populated_steps())], )


def record(matrix, step, task, acc):
    return matrix.record(step, task, acc)


def _last_step(matrix, step):
    populated = matrix.populated_steps()
    if step is None:
        step = populated - 1
    if step < 0 or step >= populated:
        raise MatrixError('rows up to step %d are not populated' % step)
    return step


def stability_curve(matrix, step=None):
    """First column: accuracy on task 0 after every step."""
    step = _last_step(matrix, step)
    return [matrix.get(i, 0) for i in range(step + 1)]


def plasticity_curve(matrix, step=None):
    """Diagonal: accuracy on each task right after learning it."""
    step = _last_step(matrix, step)
    return [matrix.get(i, i) for i in range(step + 1)]


def forgetting(matrix, step):
    if step < 1:
        raise MatrixError('forgetting needs at least one earlier step')
    _last_step(matrix, step)
    gaps = []
    for j in range(step):
        best = max(matrix.get(l, j) - matrix.get(step, j) for l in range(j, step))
        gaps.append(best)
    return float(np.mean(gaps))


def forgetting_curve(matrix):
    return [forgetting(matrix, k) for k in range(1, matrix.populated_steps())]


def accuracy_curve(matrix):
    """Mean accuracy over the tasks seen so far, per step."""
    return [float(np.mean(matrix.row(i))) for i in range(matrix.populated_steps())]


def avg_incremental_accuracy(matrix):
    if not matrix.complete():
        raise MatrixError('average incremental accuracy needs a full matrix')
    return float(np.mean(accuracy_curve(matrix)))


def last_task_accuracy(matrix):
    if not matrix.complete():
        raise MatrixError('last task accuracy needs a full matrix')
    return float(np.mean(matrix.row(matrix.num_tasks - 1)))


def aggregate_seeds(matrices):
    """Cellwise mean and population standard deviation."""
    if not matrices:
        raise MatrixError('nothing to aggregate')
    shapes = set(m.num_tasks for m in matrices)
    if len(shapes) != 1:
        raise MatrixError('matrices of different sizes: %s' % sorted(shapes))
    stack = np.stack([m.to_array() for m in matrices])
    # shifted by the first seed so identical inputs give exactly zero spread
    shift = stack - stack[0]
    centre = np.mean(shift, axis=0)
    mean = stack[0] + centre
    std = np.sqrt(np.mean((shift - centre) ** 2, axis=0))
    return AccuracyMatrix.from_array(mean), AccuracyMatrix.from_array(std)


def summarize(matrix, prefix=''):
    """Flat scalar measures of a complete matrix."""
    out = {
        prefix + 'avg_incremental_accuracy': avg_incremental_accuracy(matrix),
        prefix + 'last_task_accuracy': last_task_accuracy(matrix),
    }
    if matrix.num_tasks > 1:
        out[prefix + 'forgetting'] = forgetting(matrix, matrix.num_tasks - 1)
    return out
