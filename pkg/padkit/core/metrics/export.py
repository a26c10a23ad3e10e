# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('write_matrix_csv', 'read_matrix_csv', 'write_summary_json',
           'read_summary_json')

import csv
import json

import numpy as np

from padkit.errors import ManifestError
from padkit.core.metrics.matrix import AccuracyMatrix


def write_matrix_csv(matrix, path):
    """One row per step; fields above the diagonal or unpopulated are empty."""
    with open(path, 'w', newline='') as fp:
        writer = csv.writer(fp, lineterminator='\n')
        for i in range(matrix.num_tasks):
            writer.writerow([repr(matrix.get(i, j)) if matrix.defined(i, j)
                             else '' for j in range(matrix.num_tasks)])


def read_matrix_csv(path):
    try:
        with open(path, newline='') as fp:
            rows = list(csv.reader(fp))
    except IOError:
        raise ManifestError("Can't open matrix %s" % path)
    values = np.array([[float(v) if v else np.nan for v in row] for row in rows])
    return AccuracyMatrix.from_array(values)


def write_summary_json(summary, path):
    with open(path, 'w') as fp:
        json.dump(summary, fp, indent=2, sort_keys=True)
        fp.write('\n')


def read_summary_json(path):
    try:
        with open(path) as fp:
            return json.load(fp)
    except IOError:
        raise ManifestError("Can't open summary %s" % path)
