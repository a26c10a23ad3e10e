#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('PadkitApp', 'write_run', 'main')

import logging
import os
import re
import shutil
import sys
import tempfile
from dataclasses import replace

import numpy as np

import padkit
from padkit import EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_DATA, EVAL_MODES
from padkit.errors import ConfigError, DataError, ManifestError
from padkit.command import Command
from padkit.core.data import IMAGE_SIZE
from padkit.core.data.loader_cifar import write_cifar_binary
from padkit.core.data.synthetic import SyntheticSpec, generate_synthetic
from padkit.core.metrics import FORGETTING_FORMULA, AVG_INCREMENTAL_FORMULA
from padkit.core.metrics.export import read_matrix_csv
from padkit.core.metrics.matrix import summarize
from padkit.continual.config import load_config, config_to_dict
from padkit.continual.harness import load_source, run_sequence, run_sweep
from padkit.tools.gradcheck_suite import run_suite
from padkit.tools.manifest import RunManifest, read_manifest, add_to_manifest
from padkit.tools.svgplot import plot_run


logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)-7s %(name)s: %(message)s'

_SEED_MATRIX = re.compile(r'^seed_(\d+)/(taw|tag)\.csv$')


def _summary(result, config):
    per_seed = {}
    for r in result.seeds:
        scores = summarize(r.taw, 'taw_')
        scores.update(summarize(r.tag, 'tag_'))
        per_seed[str(r.seed)] = scores
    names = sorted(next(iter(per_seed.values())))
    return {
        'method': config.method.value,
        'split': config.split,
        'formulas': {'forgetting': FORGETTING_FORMULA,
                     'avg_incremental_accuracy': AVG_INCREMENTAL_FORMULA},
        'seeds': per_seed,
        'mean': dict((n, float(np.mean([s[n] for s in per_seed.values()])))
                     for n in names),
        'std': dict((n, float(np.std([s[n] for s in per_seed.values()])))
                    for n in names),
    }


def write_run(manifest, result, config, prefix=''):
    """Config echo, metadata, matrices, summary and plots of one run."""
    manifest.write_json(prefix + 'config.json', config_to_dict(config))
    manifest.write_json(prefix + 'metadata.json', {'seeds': result.metadata})
    for r in result.seeds:
        manifest.write_matrix(prefix + 'seed_%d/taw.csv' % r.seed, r.taw)
        manifest.write_matrix(prefix + 'seed_%d/tag.csv' % r.seed, r.tag)
        with open(manifest.path(prefix + 'seed_%d/model.ckpt' % r.seed), 'wb') as fp:
            fp.write(r.checkpoint)
    manifest.write_matrix(prefix + 'taw_mean.csv', result.taw)
    manifest.write_matrix(prefix + 'taw_std.csv', result.taw_std)
    manifest.write_matrix(prefix + 'tag_mean.csv', result.tag)
    manifest.write_matrix(prefix + 'tag_std.csv', result.tag_std)
    summary = _summary(result, config)
    manifest.write_json(prefix + 'summary.json', summary)
    runs = {'taw': [r.taw for r in result.seeds],
            'tag': [r.tag for r in result.seeds]}
    plot_run(runs, lambda name: manifest.path(prefix + name))
    return summary


class PadkitApp(object):

    title   = 'padkit-' + padkit.__version__
    command = None

    def __init__(self, **kwargs):
        super(PadkitApp, self).__init__()
        self.command = kwargs.get('command', None)

    def run(self):
        command = self.command
        if type(command) is list:
            command = Command().parse(command)
        if command is None:
            command = Command().parse([])

        logging.basicConfig(level=command.get('log_level', 'INFO'),
                            format=LOG_FORMAT)
        handler = getattr(self, 'on_' + command['command'])
        try:
            return handler(command)
        except ConfigError as exc:
            logger.error('config error: %s', exc)
            return EXIT_CONFIG
        except DataError as exc:
            logger.error('data error: %s', exc)
            return EXIT_DATA
        except Exception as exc:
            logger.exception('%s failed: %s', command['command'], exc)
            return EXIT_RUNTIME

    def _config(self, command):
        config = load_config(command['config'], command.get('overrides') or [])
        if command.get('output'):
            config.output_dir = command['output']
        if command.get('workers'):
            config = replace(config, workers=command['workers']).validate()
        return config

    def on_run(self, command):
        config = self._config(command)
        logger.info('%s: %s on %s, seeds %s', self.title, config.method.value,
                    config.split, config.seeds)
        result = run_sequence(config)
        with RunManifest(config.output_dir) as manifest:
            summary = write_run(manifest, result, config)
        for name in sorted(summary['mean']):
            logger.info('%-28s %.4f +/- %.4f', name, summary['mean'][name],
                        summary['std'][name])
        return EXIT_OK

    def on_sweep(self, command):
        config = self._config(command)
        source = load_source(config.dataset)
        ranked = run_sweep(config, command['mus'], command['lams'], source)
        with RunManifest(config.output_dir) as manifest:
            points = []
            for mu, lam, score, result in ranked:
                prefix = 'mu_%g_lam_%g/' % (mu, lam)
                point = replace(config, weights=replace(config.weights,
                                                        mu=mu, lam=lam))
                write_run(manifest, result, point, prefix)
                points.append({'mu': mu, 'lam': lam, 'run': prefix.rstrip('/'),
                               'taw_avg_incremental_accuracy': score})
            manifest.write_json('sweep.json', {'ranking': points})
        logger.info('best: mu=%g lam=%g (%.4f)', ranked[0][0], ranked[0][1],
                    ranked[0][2])
        return EXIT_OK

    def on_gradcheck(self, command):
        items = run_suite(command.get('scope', 'all'))
        for item in items:
            print('%-8s %-28s %.3e %s' % (item.scope, item.name, item.error,
                                          'ok' if item.passed else 'FAIL'))
        failed = [item for item in items if not item.passed]
        if failed:
            logger.error('gradcheck failed for %s',
                         ', '.join('%s/%s' % (i.scope, i.name) for i in failed))
            return EXIT_RUNTIME
        return EXIT_OK

    def on_plot(self, command):
        run_dir = command['run_dir']
        runs = dict((mode, {}) for mode in EVAL_MODES)
        for name in read_manifest(run_dir):
            match = _SEED_MATRIX.match(name)
            if match:
                runs[match.group(2)][int(match.group(1))] = \
                    read_matrix_csv(os.path.join(run_dir, name))
        if not runs['taw']:
            raise ManifestError('%s lists no per-seed matrices' % run_dir)
        runs = dict((mode, [seeds[s] for s in sorted(seeds)])
                    for mode, seeds in runs.items())

        staging = tempfile.mkdtemp(prefix='.plot.', dir=run_dir)
        try:
            names = plot_run(runs, lambda name: os.path.join(staging, name))
            for name in names:
                os.replace(os.path.join(staging, name),
                           os.path.join(run_dir, name))
        finally:
            shutil.rmtree(staging, ignore_errors=True)
        add_to_manifest(run_dir, names)
        logger.info('Wrote %s to %s', ', '.join(names), run_dir)
        return EXIT_OK

    def on_synth(self, command):
        spec = SyntheticSpec(num_classes=command['classes'],
                             samples_per_class=command['per_class'],
                             image_size=IMAGE_SIZE, seed=command['seed'],
                             signal=command['signal'], noise=command['noise'])
        spec.validate()
        train, test = generate_synthetic(spec)
        write_cifar_binary(train + test, command['out_path'], command['format'])
        return EXIT_OK


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    return PadkitApp(command=argv).run()


if __name__ == '__main__':

    sys.exit(main())
