# -*- coding: utf-8 -*-

import os
from dataclasses import replace

import numpy as np
import pytest

from padkit.errors import ConfigError, DataError, HeadError
from padkit.continual.config import config_from_dict, config_to_dict, load_config
from padkit.continual.harness import (SourceData, TaskData, TaskState,
                                      build_tasks, evaluate, load_source,
                                      run_seed, run_sequence, run_sweep,
                                      train_task)
from padkit.continual.optim import SGD
from padkit.continual.splits import scheme_classes, split_tasks, task_sizes
from padkit.core.data.dataset import ArrayDataset
from padkit.core.loss.methods import Method
from padkit.core.metrics.matrix import plasticity_curve
from padkit.core.model.vit import build_model
from padkit.core.tensor.prng import Prng
from padkit.core.tensor.tensor import Tensor
from padkit.tools.gradcheck_suite import gradcheck_config


DESK = os.path.join(os.path.dirname(__file__), '..', 'doc', 'desk.json')


def test_split_schemes():
    assert task_sizes('cifar100/50base') == [50, 10, 10, 10, 10, 10]
    assert task_sizes('cifar100/20base') == [20] + [10] * 8
    assert task_sizes('imagenet32/6') == [50] * 6
    assert task_sizes('synthetic/2x2') == task_sizes(u'synthetic/2×2') == [2, 2]
    assert scheme_classes('synthetic/3x4') == 12
    with pytest.raises(ConfigError):
        task_sizes('cifar10/5')


def test_split_tasks():
    classes = split_tasks(100, 'cifar100/10', seed=3)
    assert [len(c) for c in classes] == [10] * 10
    assert sorted(sum(classes, [])) == list(range(100))
    assert classes == split_tasks(100, 'cifar100/10', seed=3)
    assert classes != split_tasks(100, 'cifar100/10', seed=4)
    with pytest.raises(DataError):
        split_tasks(50, 'cifar100/10')
    with pytest.raises(DataError):
        split_tasks(6, 'synthetic/2x2')


def test_desk_config_loads():
    config = load_config(DESK, environ={})
    assert config.method is Method.ATT_ASYM
    assert config.model.num_tasks == len(task_sizes(config.split))
    echo = config_to_dict(config)
    assert echo['method'] == 'ATT_ASYM'
    assert echo['model']['stem'][1]['out_channels'] == 32


def test_config_overrides(tiny_config):
    config = tiny_config('method=FUNC_SYM_INTACT', 'weights.mu=0.5',
                         'seeds=[1,2]')
    assert config.method is Method.FUNC_SYM_INTACT
    assert config.weights.mu == 0.5
    assert config.seeds == [1, 2]


@pytest.mark.parametrize('override', [
    'method=ATT_BOTH', 'weights.nu=1', 'epochs=0', 'validation_fraction=0.5',
    'seeds=[]', 'seeds=[1,1]', 'schema_version=2', 'split=synthetic/3x2',
    'model.embed_dim=7', 'epochs', 'pad.gate=tanh',
])
def test_config_errors(tiny_config, override):
    with pytest.raises(ConfigError):
        tiny_config(override)


def test_seed_environment(tiny_raw):
    assert config_from_dict(tiny_raw, environ={'PADKIT_SEED': '3,5'}).seeds == [3, 5]
    with pytest.raises(ConfigError):
        config_from_dict(tiny_raw, environ={'PADKIT_SEED': 'x'})


def test_config_files(tmp_path):
    bad = tmp_path / 'bad.json'
    bad.write_text('{"epochs": ')
    with pytest.raises(ConfigError):
        load_config(str(bad))
    bad.write_text('[1, 2]')
    with pytest.raises(ConfigError):
        load_config(str(bad))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / 'missing.json'))


def test_build_tasks(tiny_config):
    config = tiny_config()
    source = load_source(config.dataset)
    prng = Prng(0)
    classes = split_tasks(source.num_classes, config.split, prng)
    tasks = build_tasks(source, classes, prng, 0.1)
    assert len(tasks) == 2
    for task in tasks:
        assert len(task.train) == 14 and len(task.val) == 2 and len(task.test) == 4
        assert set(task.test.labels.tolist()) == {0, 1}
        assert task.normalizer is tasks[0].normalizer
    with pytest.raises(DataError):
        build_tasks(SourceData(source.train, [], 4), classes, prng)


def test_sgd_momentum():
    p = Tensor([1.], grad_enabled=True)
    optimizer = SGD({'p': p}, 0.1, momentum=0.5)
    for _ in range(2):
        p.grad = np.array([1.])
        optimizer.step()
    # v1 = 1, v2 = 1.5
    assert p.data[0] == pytest.approx(1. - 0.1 - 0.15, abs=1e-15)
    optimizer.zero_grad()
    assert p.grad.tolist() == [0.]


def test_run_seed(tiny_config):
    config = tiny_config()
    result = run_seed(config, load_source(config.dataset), 0)
    for matrix in (result.taw, result.tag):
        assert matrix.complete() and matrix.num_tasks == 2
    taw, tag = result.taw.to_array(), result.tag.to_array()
    for i in range(2):
        for j in range(i + 1):
            assert tag[i, j] <= taw[i, j]
    meta = result.metadata
    assert len(meta['tasks']) == 2
    assert meta['teacher'][0]['task'] == 1
    assert meta['teacher'][0]['forward_count'] > 0
    assert sorted(sum(meta['classes'], [])) == [0, 1, 2, 3]
    assert result.checkpoint.startswith(b'PADKITCK')


def test_run_is_deterministic(tiny_config):
    config = tiny_config()
    source = load_source(config.dataset)
    a, b = run_seed(config, source, 0), run_seed(config, source, 0)
    assert a.taw == b.taw and a.tag == b.tag
    assert a.checkpoint == b.checkpoint
    assert [e['train_loss'] for e in a.metadata['tasks'][1]['epochs']] == \
        [e['train_loss'] for e in b.metadata['tasks'][1]['epochs']]


def test_finetuning_ignores_the_teacher(tiny_config):
    config = tiny_config('method=FT')
    result = run_seed(config, load_source(config.dataset), 0)
    assert result.metadata['teacher'][0]['forward_count'] == 0
    for task in result.metadata['tasks']:
        for epoch in task['epochs']:
            assert epoch['train_loss'] == epoch['train_ce']


def test_zero_weights_reduce_to_finetuning(tiny_config):
    config = tiny_config('weights.mu=0', 'weights.lam=0')
    result = run_seed(config, load_source(config.dataset), 0)
    for task in result.metadata['tasks']:
        for epoch in task['epochs']:
            assert epoch['train_loss'] == epoch['train_ce']


def test_early_stopping(tiny_config):
    config = tiny_config('learning_rate=0', 'patience=1', 'epochs=5')
    result = run_seed(config, load_source(config.dataset), 0)
    for task in result.metadata['tasks']:
        assert len(task['epochs']) == 2
        assert task['stopped_early'] and task['best_epoch'] == 0


def test_ewc_run(tiny_config):
    config = tiny_config('method=EWC', 'fisher_samples=4')
    result = run_seed(config, load_source(config.dataset), 0)
    assert result.taw.complete()
    assert result.metadata['teacher'][0]['forward_count'] == 0


def test_train_task_guards(tiny_config):
    config = tiny_config()
    model = build_model(config.model, 0, head_classes=(2, ))
    empty = ArrayDataset(np.zeros((0, 3, 8, 8)), np.zeros(0))
    state = TaskState(task=0, model=model)
    with pytest.raises(DataError):
        train_task(state, TaskData([0, 1], empty, empty, empty), config, Prng(0))
    data = ArrayDataset(np.zeros((2, 3, 8, 8)), [0, 1])
    with pytest.raises(HeadError):
        train_task(TaskState(task=1, model=model), TaskData([0, 1], data, data, data),
                   config, Prng(0))


def test_evaluate(prng):
    config = gradcheck_config()
    model = build_model(config, 0, head_classes=(2, ))
    data = ArrayDataset(prng.normal((400, 3, 8, 8)), prng.integers(0, 2, size=400))
    taw, = evaluate(model, [data], 'taw')
    tag, = evaluate(model, [data], 'tag')
    assert taw == tag
    assert 0.4 <= taw <= 0.6
    with pytest.raises(HeadError):
        evaluate(model, [data, data])
    with pytest.raises(ConfigError):
        evaluate(model, [data], 'oracle')


def test_run_sweep_ranks_points(tiny_config):
    config = tiny_config('epochs=1')
    ranked = run_sweep(config, [0., 1.], [1.])
    assert sorted((mu, lam) for mu, lam, _, _ in ranked) == [(0., 1.), (1., 1.)]
    scores = [score for _, _, score, _ in ranked]
    assert scores == sorted(scores, reverse=True)


@pytest.mark.slow
def test_parallel_seeds_match_sequential(tiny_config):
    config = tiny_config('seeds=[0,1]', 'epochs=1')
    serial = run_sequence(config)
    parallel = run_sequence(replace(config, workers=2))
    for a, b in zip(serial.seeds, parallel.seeds):
        assert a.taw == b.taw and a.tag == b.tag


DISTILLATION = (Method.LWF, Method.ATT_SYM, Method.ATT_ASYM,
                Method.FUNC_SYM_SPATIAL, Method.FUNC_ASYM_SPATIAL,
                Method.FUNC_SYM_INTACT, Method.FUNC_ASYM_INTACT)


@pytest.mark.slow
def test_distillation_forgets_less_than_finetuning():
    config = load_config(DESK, ['epochs=15', 'seeds=[0,1,2]'], environ={})
    source = load_source(config.dataset)
    results = dict((method, run_sequence(replace(config, method=method), source))
                   for method in (Method.FT, ) + DISTILLATION)

    for result in results.values():
        for step in range(2):
            for task in range(step + 1):
                assert result.tag.get(step, task) <= \
                    result.taw.get(step, task) + 1e-12
                for seed in result.seeds:
                    assert seed.tag.get(step, task) <= seed.taw.get(step, task)

    def drop(method):
        taw = results[method].taw
        return taw.get(0, 0) - taw.get(1, 0)

    for method in DISTILLATION:
        assert drop(Method.FT) - drop(method) >= 0.05, method

    asym = plasticity_curve(results[Method.ATT_ASYM].taw)[1]
    sym = plasticity_curve(results[Method.ATT_SYM].taw)[1]
    assert asym >= sym - 0.02
