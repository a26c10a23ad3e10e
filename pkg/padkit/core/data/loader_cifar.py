# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('LoaderCifar', 'load_cifar100_binary', 'load_binary',
           'encode_records', 'write_cifar_binary')

import logging
from os import SEEK_SET
from os.path import getsize

import numpy as np

from padkit.errors import DataError
from padkit.core.data import (DATASET_FORMAT, DATASET_CLASSES, IMAGE_SIZE,
                              CHANNELS, RECORD_BYTES)
from padkit.core.data.dataset import LabeledImage


logger = logging.getLogger(__name__)


class LoaderCifar(object):
    """Random access over a CIFAR-style binary file.

    Each record is two label bytes followed by the R, G and B planes of a
    32x32 image, row-major. cifar100 stores (coarse, fine); imagenet32 stores
    the fine label as a little-endian uint16 across both bytes.
    """

    def __init__(self, **kwargs):
        self._file     = None
        self._format   = kwargs.get('format', DATASET_FORMAT[0])
        self._filename = kwargs.get('filename', None)
        self._count    = 0

        if self._format not in DATASET_FORMAT:
            raise DataError("Not support dataset format %r" % (self._format, ))
        if self._filename is not None:
            self._open()

    @property
    def format(self):
        return self._format

    @property
    def num_classes(self):
        return DATASET_CLASSES[self._format]

    def _get_filename(self):
        return self._filename

    filename = property(lambda self: self._get_filename(),
            doc='Get the filename of the binary dataset')

    def _get_count(self):
        return self._count

    count = property(lambda self: self._get_count(),
            doc='Get the number of records')

    def __len__(self):
        return self._count

    def __enter__(self):
        return self

    def __exit__(self, *largs):
        self.close()

    def _open(self):
        filename = self._filename
        try:
            fp = open(filename, 'rb')
        except IOError:
            raise DataError("Can't open file %s" % filename)
        filesize = getsize(filename)
        if filesize % RECORD_BYTES:
            fp.close()
            raise DataError('%s is truncated: %d bytes is not a multiple of %d'
                            % (filename, filesize, RECORD_BYTES))
        self._file  = fp
        self._count = filesize // RECORD_BYTES

    def close(self):
        if self._file is None:
            return
        self._file.close()
        self._file = None

    def read(self, index):
        if self._file is None:
            raise DataError('loader is closed')
        if not 0 <= index < self._count:
            raise IndexError('record %d out of range' % index)
        self._file.seek(index * RECORD_BYTES, SEEK_SET)
        return self._decode(self._file.read(RECORD_BYTES))

    def read_all(self):
        if self._file is None:
            raise DataError('loader is closed')
        self._file.seek(0, SEEK_SET)
        raw = np.frombuffer(self._file.read(), dtype=np.uint8)
        records = raw.reshape(self._count, RECORD_BYTES)
        return [self._decode_row(row) for row in records]

    def _decode(self, buf):
        return self._decode_row(np.frombuffer(buf, dtype=np.uint8))

    def _decode_row(self, row):
        if self._format == 'cifar100':
            coarse, fine = int(row[0]), int(row[1])
        else:
            coarse, fine = None, int(row[0]) | (int(row[1]) << 8)
        if fine >= self.num_classes:
            raise DataError('label %d out of range for %s'
                            % (fine, self._format))
        pixels = row[2:].reshape(CHANNELS, IMAGE_SIZE, IMAGE_SIZE) / 255.
        return LabeledImage(pixels, fine, coarse)


def load_binary(path, format='cifar100'):
    with LoaderCifar(filename=path, format=format) as loader:
        images = loader.read_all()
    logger.info('Loaded %d %s records from %s', len(images), format, path)
    return images


def load_cifar100_binary(path):
    return load_binary(path, 'cifar100')


def encode_records(images, format='cifar100'):
    if format not in DATASET_FORMAT:
        raise DataError("Not support dataset format %r" % (format, ))
    out = np.zeros((len(images), RECORD_BYTES), dtype=np.uint8)
    for i, img in enumerate(images):
        if img.pixels.shape != (CHANNELS, IMAGE_SIZE, IMAGE_SIZE):
            raise DataError('record %d has shape %s, layout needs %s'
                            % (i, img.pixels.shape,
                               (CHANNELS, IMAGE_SIZE, IMAGE_SIZE)))
        if not 0 <= img.fine_label < DATASET_CLASSES[format]:
            raise DataError('label %d out of range for %s'
                            % (img.fine_label, format))
        if format == 'cifar100':
            out[i, 0] = img.coarse_label or 0
            out[i, 1] = img.fine_label
        else:
            out[i, 0] = img.fine_label & 0xff
            out[i, 1] = img.fine_label >> 8
        out[i, 2:] = np.clip(np.rint(img.pixels * 255.), 0, 255).reshape(-1)
    return out.tobytes()


def write_cifar_binary(images, path, format='cifar100'):
    buf = encode_records(images, format)
    try:
        with open(path, 'wb') as fp:
            fp.write(buf)
    except IOError as exc:
        raise DataError("Can't write %s: %s" % (path, exc))
    logger.info('Wrote %d %s records to %s', len(images), format, path)
