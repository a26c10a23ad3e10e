# -*- coding: utf-8 -*-

import json
import os

import pytest

from padkit import EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_DATA
from padkit.command import Command
from padkit.core.data import RECORD_BYTES
from padkit.core.data.loader_cifar import load_binary
from padkit.core.metrics.export import read_matrix_csv
from padkit.core.model.checkpoint import load_checkpoint
from padkit.core.tensor import ops
from padkit.core.tensor.tensor import Tensor, make_result
from padkit.padkitapp import main
from padkit.tools import gradcheck_suite
from padkit.tools.manifest import read_manifest


def _files(run_dir):
    out = []
    for root, _, names in os.walk(run_dir):
        for name in names:
            out.append(os.path.relpath(os.path.join(root, name), run_dir))
    return sorted(out)


def _read(path):
    with open(path, 'rb') as fp:
        return fp.read()


def test_command_parse():
    command = Command().parse(['run', '-c', 'x.json', 'method=FT', 'epochs=3'])
    assert command['command'] == 'run'
    assert command['overrides'] == ['method=FT', 'epochs=3']
    command = Command().parse(['sweep', '-c', 'x.json', '--mu', '0', '0.5'])
    assert command['mus'] == [0., 0.5] and command['lams'] == [0.5, 1.0]
    assert Command().parse(['gradcheck'])['scope'] == 'all'
    with pytest.raises(SystemExit):
        Command().parse(['gradcheck', 'nothing'])
    with pytest.raises(SystemExit):
        Command().parse([])


def test_run_writes_a_complete_directory(tmp_path, config_file):
    out = str(tmp_path / 'run')
    assert main(['run', '-c', config_file(), '-o', out]) == EXIT_OK

    listed = read_manifest(out)
    assert _files(out) == sorted(listed + ['manifest.json'])
    for name in ('config.json', 'metadata.json', 'summary.json',
                 'seed_0/taw.csv', 'seed_0/tag.csv', 'seed_0/model.ckpt',
                 'taw_mean.csv', 'tag_std.csv', 'accuracy.svg',
                 'forgetting.svg', 'stability.svg', 'plasticity.svg'):
        assert name in listed

    assert read_matrix_csv(os.path.join(out, 'seed_0/taw.csv')).complete()
    with open(os.path.join(out, 'summary.json')) as fp:
        summary = json.load(fp)
    assert summary['method'] == 'ATT_ASYM'
    assert 'taw_avg_incremental_accuracy' in summary['mean']
    assert load_checkpoint(os.path.join(out, 'seed_0/model.ckpt')).num_heads == 2


def test_run_is_reproducible(tmp_path, config_file):
    path = config_file()
    a, b = str(tmp_path / 'a'), str(tmp_path / 'b')
    assert main(['run', '-c', path, '-o', a]) == EXIT_OK
    assert main(['run', '-c', path, '-o', b]) == EXIT_OK
    for name in ('seed_0/taw.csv', 'seed_0/tag.csv', 'seed_0/model.ckpt',
                 'summary.json', 'accuracy.svg'):
        assert _read(os.path.join(a, name)) == _read(os.path.join(b, name))


def test_run_overrides(tmp_path, config_file):
    out = str(tmp_path / 'run')
    assert main(['run', '-c', config_file(), '-o', out, 'method=FT',
                 'seeds=[3]']) == EXIT_OK
    with open(os.path.join(out, 'config.json')) as fp:
        config = json.load(fp)
    assert config['method'] == 'FT' and config['seeds'] == [3]
    assert os.path.isfile(os.path.join(out, 'seed_3/taw.csv'))


def test_config_error_writes_nothing(tmp_path, config_file):
    out = str(tmp_path / 'run')
    assert main(['run', '-c', config_file(learning_rat=0.1), '-o', out]) == \
        EXIT_CONFIG
    assert main(['run', '-c', config_file(), '-o', out, 'method=PAD']) == \
        EXIT_CONFIG
    assert not os.path.exists(out)
    assert os.listdir(str(tmp_path)) == ['experiment.json']


def test_data_error(tmp_path, config_file):
    out = str(tmp_path / 'run')
    dataset = {'kind': 'cifar100', 'train_path': str(tmp_path / 'none.bin'),
               'test_path': str(tmp_path / 'none.bin')}
    model = {'num_tasks': 10}
    path = config_file(dataset=dataset, model=model, split='cifar100/10')
    assert main(['run', '-c', path, '-o', out]) == EXIT_DATA
    assert not os.path.exists(out)


def test_plot(tmp_path, config_file):
    out = str(tmp_path / 'run')
    assert main(['run', '-c', config_file(seeds=[0, 1]), '-o', out]) == EXIT_OK
    svg = os.path.join(out, 'accuracy.svg')
    before = _read(svg)
    assert b'PolyCollection' in before

    os.remove(svg)
    assert main(['plot', out]) == EXIT_OK
    assert _read(svg) == before
    manifest = _read(os.path.join(out, 'manifest.json'))
    assert main(['plot', out]) == EXIT_OK
    assert _read(svg) == before
    assert _read(os.path.join(out, 'manifest.json')) == manifest
    assert _files(out) == sorted(read_manifest(out) + ['manifest.json'])


def test_single_seed_plot_has_no_band(tmp_path, config_file):
    out = str(tmp_path / 'run')
    assert main(['run', '-c', config_file(), '-o', out]) == EXIT_OK
    assert b'PolyCollection' not in _read(os.path.join(out, 'accuracy.svg'))


def test_plot_needs_a_manifest(tmp_path):
    assert main(['plot', str(tmp_path)]) == EXIT_RUNTIME


def test_synth(tmp_path):
    a, b = str(tmp_path / 'a.bin'), str(tmp_path / 'b.bin')
    args = ['--classes', '4', '--per-class', '50', '--seed', '7']
    assert main(['synth'] + args + [a]) == EXIT_OK
    assert main(['synth'] + args + [b]) == EXIT_OK
    assert os.path.getsize(a) == 200 * RECORD_BYTES
    assert _read(a) == _read(b)
    images = load_binary(a)
    assert sorted(set(img.fine_label for img in images)) == [0, 1, 2, 3]
    assert main(['synth', '--classes', '0', a]) == EXIT_CONFIG


def test_gradcheck_ops(capsys):
    assert main(['gradcheck', 'ops']) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.endswith('ok') for line in lines)


def test_gradcheck_reports_a_broken_op(monkeypatch, capsys):
    def broken_cases(prng):
        def bad_square(x):
            return make_result(x.data ** 2, (x, ), lambda g: (g * x.data, ),
                               'bad_square')
        return [('bad_square', lambda x: ops.reduce_sum(bad_square(x)),
                 Tensor(prng.normal(4) + 2.))]

    monkeypatch.setattr(gradcheck_suite, 'op_cases', broken_cases)
    assert main(['gradcheck', 'ops']) == EXIT_RUNTIME
    assert 'bad_square' in capsys.readouterr().out
