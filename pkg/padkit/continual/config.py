# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('DatasetConfig', 'ExperimentConfig', 'load_config',
           'config_from_dict', 'config_to_dict', 'SEED_ENV')

import json
import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional

from omegaconf import OmegaConf
from omegaconf.errors import OmegaConfBaseException

from padkit.errors import ConfigError
from padkit.core.data import DATASET_FORMAT
from padkit.core.data.synthetic import SyntheticSpec
from padkit.core.loss.methods import Method, PadOptions
from padkit.core.loss.regularizers import LossWeights
from padkit.core.model.config import ViTConfig
from padkit.continual import SCHEMA_VERSION, MOMENTUM
from padkit.continual.splits import task_sizes


logger = logging.getLogger(__name__)

SEED_ENV = 'PADKIT_SEED'

DATASET_KIND = ('synthetic', ) + DATASET_FORMAT


@dataclass
class DatasetConfig:
    kind: str = 'synthetic'
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)

    def validate(self):
        if self.kind not in DATASET_KIND:
            raise ConfigError('Not support dataset kind %r (one of %s)'
                              % (self.kind, ', '.join(DATASET_KIND)))
        if self.kind == 'synthetic':
            self.synthetic.validate()
        elif not self.train_path or not self.test_path:
            raise ConfigError('%s needs train_path and test_path' % self.kind)
        return self


@dataclass
class ExperimentConfig:
    schema_version: int = SCHEMA_VERSION
    model: ViTConfig = field(default_factory=ViTConfig)
    method: Method = Method.ATT_ASYM
    weights: LossWeights = field(default_factory=LossWeights)
    pad: PadOptions = field(default_factory=PadOptions)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    split: str = 'synthetic/2x2'
    epochs: int = 30
    learning_rate: float = 0.01
    momentum: float = MOMENTUM
    patience: int = 5
    batch_size: int = 16
    validation_fraction: float = 0.1
    augment: bool = True
    fisher_samples: Optional[int] = None
    seeds: List[int] = field(default_factory=lambda: [0])
    workers: int = 1
    output_dir: str = 'runs/desk'

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError('schema_version %r, expected %d'
                              % (self.schema_version, SCHEMA_VERSION))
        self.model.validate()
        self.weights.validate()
        self.dataset.validate()
        self.method.pad_mode(self.pad)
        if self.epochs < 1:
            raise ConfigError('epochs must be >= 1')
        if self.patience < 1:
            raise ConfigError('patience must be >= 1')
        if self.batch_size < 1:
            raise ConfigError('batch_size must be >= 1')
        if self.learning_rate < 0 or not 0. <= self.momentum < 1.:
            raise ConfigError('learning_rate must be >= 0, momentum in [0, 1)')
        if not 0. < self.validation_fraction < 0.5:
            raise ConfigError('validation_fraction must lie in (0, 0.5)')
        if not self.seeds:
            raise ConfigError('seeds must not be empty')
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError('seeds must be distinct, got %s' % (self.seeds, ))
        if self.fisher_samples is not None and self.fisher_samples < 1:
            raise ConfigError('fisher_samples must be positive')
        if self.workers < 1:
            raise ConfigError('workers must be >= 1')
        num_tasks = len(task_sizes(self.split))
        if num_tasks != self.model.num_tasks:
            raise ConfigError('split %s has %d tasks, model.num_tasks is %d'
                              % (self.split, num_tasks, self.model.num_tasks))
        return self


def _seeds_from_env(value):
    try:
        seeds = [int(s) for s in value.split(',') if s.strip()]
    except ValueError:
        raise ConfigError('%s=%r is not a comma-separated seed list'
                          % (SEED_ENV, value))
    if not seeds:
        raise ConfigError('%s is empty' % SEED_ENV)
    return seeds


def config_from_dict(raw, overrides=(), environ=None):
    """Merge `raw` and `key=value` overrides into the schema and validate.

    Unknown keys, bad types and bad values all raise ConfigError.
    """
    environ = os.environ if environ is None else environ
    overrides = list(overrides)
    for item in overrides:
        if '=' not in item:
            raise ConfigError('override %r is not key=value' % (item, ))
    try:
        schema = OmegaConf.structured(ExperimentConfig)
        merged = OmegaConf.merge(schema, OmegaConf.create(raw),
                                 OmegaConf.from_dotlist(overrides))
        config = OmegaConf.to_object(merged)
    except OmegaConfBaseException as exc:
        raise ConfigError(str(exc).splitlines()[0])
    if environ.get(SEED_ENV):
        config.seeds = _seeds_from_env(environ[SEED_ENV])
        logger.info('Seeds taken from %s: %s', SEED_ENV, config.seeds)
    return config.validate()


def load_config(path, overrides=(), environ=None):
    try:
        with open(path) as fp:
            raw = json.load(fp)
    except IOError as exc:
        raise ConfigError("Can't open config %s: %s" % (path, exc))
    except ValueError as exc:
        raise ConfigError('config %s is not valid JSON: %s' % (path, exc))
    if not isinstance(raw, dict):
        raise ConfigError('config %s must hold a JSON object' % path)
    return config_from_dict(raw, overrides, environ)


def config_to_dict(config):
    """Plain JSON-ready echo of a config."""
    return OmegaConf.to_container(OmegaConf.structured(config),
                                  enum_to_str=True)
