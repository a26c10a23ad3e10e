# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('encode_checkpoint', 'decode_checkpoint',
           'save_checkpoint', 'load_checkpoint')

import dataclasses
import json
import logging
import struct

import numpy as np

from padkit.errors import ConfigError, DataError
from padkit.core.model import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from padkit.core.model.config import StemLayer, ViTConfig
from padkit.core.model.vit import Model


logger = logging.getLogger(__name__)

# magic | u32 version | u32 json length | json | u64 scalar count | <f8 ...
_HEADER = '<II'
_COUNT  = '<Q'


def _config_block(model):
    block = {
        'config': dataclasses.asdict(model.config),
        'head_classes': model.head_classes,
        'seed': model.seed,
    }
    return json.dumps(block, sort_keys=True, separators=(',', ':')).encode('utf-8')


def encode_checkpoint(model):
    block = _config_block(model)
    params = model.parameters()
    chunks = [CHECKPOINT_MAGIC,
              struct.pack(_HEADER, CHECKPOINT_VERSION, len(block)),
              block,
              struct.pack(_COUNT, model.parameter_count())]
    for p in params.values():
        chunks.append(np.ascontiguousarray(p.data, dtype='<f8').tobytes())
    return b''.join(chunks)


def decode_checkpoint(buf):
    pos = len(CHECKPOINT_MAGIC)
    if buf[:pos] != CHECKPOINT_MAGIC:
        raise DataError('not a padkit checkpoint (bad magic)')
    try:
        version, length = struct.unpack_from(_HEADER, buf, pos)
        pos += struct.calcsize(_HEADER)
        if version != CHECKPOINT_VERSION:
            raise DataError('unsupported checkpoint version %d' % version)
        block = json.loads(buf[pos:pos + length].decode('utf-8'))
        pos += length
        count, = struct.unpack_from(_COUNT, buf, pos)
        pos += struct.calcsize(_COUNT)
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        raise DataError('corrupt checkpoint header: %s' % exc)

    try:
        raw = dict(block['config'])
        raw['stem'] = [StemLayer(**layer) for layer in raw['stem']]
        config = ViTConfig(**raw)
        seed, head_classes = block['seed'], block['head_classes']
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError('corrupt checkpoint config block: %r' % (exc, ))
    try:
        config.validate()
    except ConfigError as exc:
        raise DataError('checkpoint config is invalid: %s' % exc)
    model = Model(config, seed, head_classes=head_classes)

    if count != model.parameter_count():
        raise DataError('checkpoint holds %d scalars, config implies %d'
                        % (count, model.parameter_count()))
    if len(buf) - pos != 8 * count:
        raise DataError('checkpoint payload is %d bytes, expected %d'
                        % (len(buf) - pos, 8 * count))

    values = np.frombuffer(buf, dtype='<f8', count=count, offset=pos)
    offset = 0
    for p in model.parameters().values():
        p.data = values[offset:offset + p.size].astype(np.float64).reshape(p.shape)
        offset += p.size
    return model


def save_checkpoint(model, path):
    buf = encode_checkpoint(model)
    with open(path, 'wb') as fp:
        fp.write(buf)
    logger.info('Checkpoint %s: %d parameters', path, model.parameter_count())


def load_checkpoint(path):
    try:
        with open(path, 'rb') as fp:
            buf = fp.read()
    except IOError:
        raise DataError("Can't open checkpoint %s" % path)
    return decode_checkpoint(buf)
