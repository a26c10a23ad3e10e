# -*- coding: utf-8 -*-

import copy
import json

import pytest

from padkit.continual.config import config_from_dict
from padkit.core.tensor.prng import Prng


TINY = {
    'model': {
        'image_size': 8,
        'stem': [{'out_channels': 4, 'kernel': 3, 'stride': 2},
                 {'out_channels': 8, 'kernel': 3, 'stride': 2}],
        'num_layers': 1,
        'num_heads': 2,
        'embed_dim': 8,
        'num_tasks': 2,
    },
    'method': 'ATT_ASYM',
    'dataset': {
        'kind': 'synthetic',
        'synthetic': {'num_classes': 4, 'samples_per_class': 10,
                      'image_size': 8},
    },
    'split': 'synthetic/2x2',
    'epochs': 2,
    'batch_size': 8,
    'seeds': [0],
}


@pytest.fixture
def tiny_raw():
    return copy.deepcopy(TINY)


@pytest.fixture
def tiny_config(tiny_raw):
    def make(*overrides):
        return config_from_dict(tiny_raw, overrides, environ={})
    return make


@pytest.fixture
def config_file(tmp_path, tiny_raw):
    def write(**changes):
        raw = copy.deepcopy(tiny_raw)
        raw.update(changes)
        path = tmp_path / 'experiment.json'
        path.write_text(json.dumps(raw))
        return str(path)
    return write


@pytest.fixture
def prng():
    return Prng(1234)


@pytest.fixture(autouse=True)
def no_seed_env(monkeypatch):
    monkeypatch.delenv('PADKIT_SEED', raising=False)
