# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('MANIFEST_FILE', 'RunManifest', 'read_manifest', 'add_to_manifest')

import hashlib
import json
import logging
import os
import shutil
import tempfile

from padkit.errors import ManifestError
from padkit.core.metrics.export import write_matrix_csv, write_summary_json


logger = logging.getLogger(__name__)

MANIFEST_FILE = 'manifest.json'


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as fp:
        for block in iter(lambda: fp.read(1 << 16), b''):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(run_dir, files, target=None):
    body = {'files': dict((name, _sha256(os.path.join(run_dir, name)))
                          for name in sorted(files))}
    write_summary_json(body, target or os.path.join(run_dir, MANIFEST_FILE))


class RunManifest(object):
    """Output directory that appears complete or not at all.

    Files are written into a hidden staging directory next to `out_dir`; on
    a clean exit the manifest is written and the staging directory takes
    the place of `out_dir`. Any exception removes the staging directory.
    """

    def __init__(self, out_dir):
        self._out_dir = os.path.abspath(out_dir)
        self._staging = None
        self._files   = []

    @property
    def out_dir(self):
        return self._out_dir

    @property
    def files(self):
        return sorted(self._files)

    def __enter__(self):
        parent = os.path.dirname(self._out_dir)
        os.makedirs(parent, exist_ok=True)
        self._staging = tempfile.mkdtemp(
            prefix='.%s.' % os.path.basename(self._out_dir), dir=parent)
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        if exc_type is None:
            self.commit()
        else:
            self.abort()
        return False

    def path(self, name):
        if self._staging is None:
            raise ManifestError('manifest for %s is not open' % self._out_dir)
        if name == MANIFEST_FILE or name in self._files:
            raise ManifestError('%s written twice' % name)
        full = os.path.join(self._staging, name)
        os.makedirs(os.path.dirname(full), exist_ok=True)
        self._files.append(name)
        return full

    def write_json(self, name, obj):
        write_summary_json(obj, self.path(name))

    def write_matrix(self, name, matrix):
        write_matrix_csv(matrix, self.path(name))

    def commit(self):
        _write_manifest(self._staging, self._files)
        backup = None
        if os.path.exists(self._out_dir):
            backup = self._staging + '.old'
            os.rename(self._out_dir, backup)
        os.rename(self._staging, self._out_dir)
        if backup is not None:
            shutil.rmtree(backup)
        self._staging = None
        logger.info('Wrote %d files to %s', len(self._files), self._out_dir)

    def abort(self):
        if self._staging is not None:
            shutil.rmtree(self._staging, ignore_errors=True)
            self._staging = None
            logger.info('Discarded partial output for %s', self._out_dir)


def read_manifest(run_dir):
    """File list of a complete run directory."""
    path = os.path.join(run_dir, MANIFEST_FILE)
    try:
        with open(path) as fp:
            files = json.load(fp)['files']
    except (IOError, ValueError, KeyError):
        raise ManifestError('%s has no readable %s' % (run_dir, MANIFEST_FILE))
    missing = [name for name in files
               if not os.path.isfile(os.path.join(run_dir, name))]
    if missing:
        raise ManifestError('%s is missing %s' % (run_dir, ', '.join(missing)))
    return sorted(files)


def add_to_manifest(run_dir, names):
    """List newly written files of `run_dir` in its manifest."""
    files = set(read_manifest(run_dir)) | set(names)
    fd, tmp = tempfile.mkstemp(prefix='.manifest.', dir=run_dir)
    os.close(fd)
    try:
        _write_manifest(run_dir, files, tmp)
        os.replace(tmp, os.path.join(run_dir, MANIFEST_FILE))
    except Exception:
        os.remove(tmp)
        raise
    return sorted(files)
