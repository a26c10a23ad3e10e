# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""

__all__ = ('SourceData', 'TaskData', 'TaskState', 'SeedResult', 'RunResult',
           'load_source', 'build_tasks', 'train_task', 'validation_loss',
           'evaluate', 'run_seed', 'run_sequence', 'run_sweep')

import logging
import time
from collections import namedtuple
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from typing import Any, List, Optional

import numpy as np

from padkit import EVAL_MODES
from padkit.errors import ConfigError, DataError, HeadError, PadkitError
from padkit.core.data import DATASET_CLASSES
from padkit.core.data.augment_image import Normalizer, augment_batch
from padkit.core.data.dataset import ArrayDataset, stack_images
from padkit.core.data.loader_cifar import load_binary, load_cifar100_binary
from padkit.core.data.synthetic import generate_synthetic
from padkit.core.loss import (FISHER_LABELS, FISHER_MODE, BATCH_REDUCTION,
                              LWF_TEMPERATURE)
from padkit.core.loss.fisher import estimate_fisher
from padkit.core.loss.methods import method_loss
from padkit.core.metrics.matrix import (AccuracyMatrix, aggregate_seeds,
                                         avg_incremental_accuracy)
from padkit.core.model import ATTENTION_SCALE, BLOCK_ORDER
from padkit.core.model.checkpoint import encode_checkpoint
from padkit.core.model.vit import build_model
from padkit.core.tensor import PRNG_ALGORITHM
from padkit.core.tensor.prng import Prng
from padkit.core.tensor.tensor import Tape, no_grad
from padkit.continual import (STREAM_CLASS_ORDER, STREAM_VALIDATION,
                              STREAM_SHUFFLE, STREAM_AUGMENT, STREAM_DROPOUT,
                              STREAM_FISHER, TAG_PROTOCOL, EARLY_STOPPING,
                              VALIDATION, NORMALIZATION)
from padkit.continual.config import config_to_dict
from padkit.continual.optim import SGD
from padkit.continual.splits import split_tasks


logger = logging.getLogger(__name__)

EVAL_BATCH = 256

SourceData = namedtuple('SourceData', 'train test num_classes')


@dataclass
class TaskData:
    """One task: raw train pixels, normalized val/test, task-local labels."""
    classes: List[int]
    train: ArrayDataset
    val: ArrayDataset
    test: ArrayDataset
    normalizer: Optional[Normalizer] = None


@dataclass
class TaskState:
    task: int
    model: Any
    teacher: Any = None
    fisher: Any = None
    classes: List[List[int]] = field(default_factory=list)
    history: List[dict] = field(default_factory=list)


@dataclass
class SeedResult:
    seed: int
    taw: AccuracyMatrix
    tag: AccuracyMatrix
    metadata: dict
    checkpoint: bytes = b''


@dataclass
class RunResult:
    seeds: List[SeedResult]
    taw: AccuracyMatrix
    tag: AccuracyMatrix
    taw_std: AccuracyMatrix
    tag_std: AccuracyMatrix

    @property
    def metadata(self):
        return [result.metadata for result in self.seeds]


def load_source(dataset_config):
    if dataset_config.kind == 'synthetic':
        spec = dataset_config.synthetic
        train, test = generate_synthetic(spec)
        return SourceData(train, test, spec.num_classes)
    fmt = dataset_config.kind
    if fmt == 'cifar100':
        load = load_cifar100_binary
    else:
        load = lambda path: load_binary(path, fmt)
    return SourceData(load(dataset_config.train_path),
                      load(dataset_config.test_path),
                      DATASET_CLASSES[fmt])


def _normalized(data, normalizer):
    if len(data) == 0:
        return data
    return ArrayDataset(augment_batch(data.images, None, normalizer, train=False),
                        data.labels)


def build_tasks(source, classes, prng, validation_fraction=0.1):
    """Per-task datasets; normalization statistics come from the first task."""
    tasks = []
    for t, task_classes in enumerate(classes):
        label_map = dict((c, i) for i, c in enumerate(task_classes))
        train = stack_images([img for img in source.train
                              if img.fine_label in label_map], label_map)
        test = stack_images([img for img in source.test
                             if img.fine_label in label_map], label_map)
        if len(train) == 0 or len(test) == 0:
            raise DataError('task %d (classes %s) has no train or test images'
                            % (t, task_classes))
        n = len(train)
        n_val = max(1, int(round(validation_fraction * n))) if n > 1 else 0
        order = prng.child(STREAM_VALIDATION, t).permutation(n)
        val = train.subset(np.sort(order[:n_val])) if n_val else train
        train = train.subset(np.sort(order[n_val:]))
        tasks.append(TaskData(list(task_classes), train, val, test))

    normalizer = Normalizer.from_images(tasks[0].train.images)
    return [replace(task, val=_normalized(task.val, normalizer),
                    test=_normalized(task.test, normalizer),
                    normalizer=normalizer) for task in tasks]


def _objective(state, images, labels, config, training=False, prng=None):
    model, teacher, method = state.model, state.teacher, config.method
    t = state.task
    with_teacher = method.uses_teacher and teacher is not None
    needs_trace = with_teacher and method.distills

    teacher_logits, trace_old = None, None
    if with_teacher:
        teacher_logits, trace_old = teacher.forward(
            images, head_mask=range(t), capture_trace=needs_trace)
    heads = range(t + 1) if with_teacher else [t]
    logits, trace_new = model.forward(images, head_mask=heads,
                                      capture_trace=needs_trace,
                                      training=training, prng=prng)
    return method_loss(method, config.weights, labels, logits,
                       teacher_logits=teacher_logits, trace_old=trace_old,
                       trace_new=trace_new, params=model.parameters(),
                       fisher=state.fisher, options=config.pad)


def validation_loss(state, data, config):
    """Full training objective on `data` (already normalized), sample mean."""
    total = 0.
    with no_grad():
        for start in range(0, len(data), EVAL_BATCH):
            images = data.images[start:start + EVAL_BATCH]
            loss, _ = _objective(state, images,
                                 data.labels[start:start + EVAL_BATCH], config)
            total += loss.item() * len(images)
    return total / len(data)


def train_task(state, task_data, config, prng):
    """SGD over epochs with early stopping; best-validation weights restored."""
    model, t = state.model, state.task
    train = task_data.train
    if len(train) == 0:
        raise DataError('task %d has no training data' % t)
    if model.num_heads != t + 1:
        raise HeadError('task %d trains head %d but the model has %d heads'
                        % (t, t, model.num_heads))
    monitor = task_data.val if len(task_data.val) else \
        _normalized(train, task_data.normalizer)

    params = model.parameters()
    optimizer = SGD(params, config.learning_rate, config.momentum)
    best_loss, best_epoch, best_params = np.inf, -1, None
    stale, stopped_early, epochs = 0, False, []
    started = time.time()

    for epoch in range(config.epochs):
        order = prng.child(STREAM_SHUFFLE, t, epoch).permutation(len(train))
        augment = prng.child(STREAM_AUGMENT, t, epoch)
        dropout = prng.child(STREAM_DROPOUT, t, epoch)
        losses, ces = [], []
        for start in range(0, len(train), config.batch_size):
            index = order[start:start + config.batch_size]
            images = augment_batch(train.images[index], augment,
                                   task_data.normalizer, train=config.augment)
            optimizer.zero_grad()
            with Tape() as tape:
                loss, parts = _objective(state, images, train.labels[index],
                                         config, training=True, prng=dropout)
                tape.backward(loss)
            optimizer.step()
            losses.append(loss.item())
            ces.append(parts['ce'].item())

        val = validation_loss(state, monitor, config)
        epochs.append({'epoch': epoch, 'train_loss': float(np.mean(losses)),
                       'train_ce': float(np.mean(ces)), 'val_loss': val})
        logger.debug('task %d epoch %d: train %.6f val %.6f',
                     t, epoch, epochs[-1]['train_loss'], val)

        if val < best_loss:
            best_loss, best_epoch, stale = val, epoch, 0
            best_params = dict((name, p.data.copy()) for name, p in params.items())
        else:
            stale += 1
            if stale >= config.patience:
                stopped_early = True
                logger.info('task %d: early stop after epoch %d, best epoch %d',
                            t, epoch, best_epoch)
                break

    for name, p in params.items():
        p.data[...] = best_params[name]
    state.history.append({'task': t, 'epochs': epochs, 'best_epoch': best_epoch,
                          'best_val_loss': best_loss,
                          'stopped_early': stopped_early,
                          'wall_clock_s': time.time() - started})
    return model


def evaluate(model, test_sets, mode='taw', batch_size=EVAL_BATCH):
    """Accuracy on each seen task.

    taw takes the argmax of the true task's head; tag takes it over the
    concatenated logits of every seen head and needs the true task's slot.
    """
    if mode not in EVAL_MODES:
        raise ConfigError('unknown evaluation mode %r' % (mode, ))
    seen = len(test_sets)
    if model.num_heads < seen:
        raise HeadError('%d test sets but the model has %d heads'
                        % (seen, model.num_heads))
    offsets = np.cumsum([0] + model.head_classes[:seen])
    out = []
    with no_grad():
        for j, data in enumerate(test_sets):
            if len(data) == 0:
                raise DataError('test set of task %d is empty' % j)
            correct = 0
            for start in range(0, len(data), batch_size):
                images = data.images[start:start + batch_size]
                labels = data.labels[start:start + batch_size]
                if mode == 'taw':
                    logits, _ = model.forward(images, head_mask=[j])
                    predicted = np.argmax(logits[j].data, axis=-1)
                    correct += int(np.sum(predicted == labels))
                else:
                    logits, _ = model.forward(images, head_mask=range(seen))
                    joint = np.concatenate([logits[i].data for i in range(seen)],
                                           axis=-1)
                    predicted = np.argmax(joint, axis=-1)
                    correct += int(np.sum(predicted == labels + offsets[j]))
            out.append(correct / float(len(data)))
    return out


def _design_flags(config):
    return {
        'attention_scale': ATTENTION_SCALE,
        'block_order': BLOCK_ORDER,
        'pad_norm': config.pad.norm,
        'pad_gate': config.pad.gate,
        'pad_include_class_token': config.pad.include_class_token,
        'pad_normalize': config.pad.normalize,
        'lwf': 'T^2 * KL(old || new), default T=%g' % LWF_TEMPERATURE,
        'fisher_labels': FISHER_LABELS,
        'fisher_mode': FISHER_MODE,
        'batch_reduction': BATCH_REDUCTION,
        'optimizer': 'sgd momentum=%g constant lr' % config.momentum,
        'validation': VALIDATION,
        'early_stopping': EARLY_STOPPING,
        'normalization': NORMALIZATION,
        'tag_protocol': TAG_PROTOCOL,
        'past_heads': 'trainable',
    }


def run_seed(config, source, seed):
    """One full task sequence for a single seed."""
    prng = Prng(seed)
    classes = split_tasks(source.num_classes, config.split,
                          prng.child(STREAM_CLASS_ORDER))
    tasks = build_tasks(source, classes, prng, config.validation_fraction)
    image_shape = tasks[0].test.images.shape[1:]
    expected = (config.model.in_channels, config.model.image_size,
                config.model.image_size)
    if image_shape != expected:
        raise DataError('dataset images are %s, model expects %s'
                        % (image_shape, expected))

    model = build_model(config.model, seed)
    num_tasks = len(classes)
    taw, tag = AccuracyMatrix(num_tasks), AccuracyMatrix(num_tasks)
    state = TaskState(task=0, model=model, classes=classes)
    teacher_log = []

    for t in range(num_tasks):
        logger.info('seed %d: task %d/%d, %d classes, %d train images',
                    seed, t + 1, num_tasks, len(classes[t]), len(tasks[t].train))
        state.task = t
        state.teacher = model.snapshot(t - 1) if t > 0 else None
        before = state.teacher.checksum() if state.teacher else None
        model.add_head(len(classes[t]))
        train_task(state, tasks[t], config, prng)

        if state.teacher is not None:
            after = state.teacher.checksum()
            if after != before:
                raise PadkitError('teacher parameters changed during task %d' % t)
            teacher_log.append({'task': t, 'checksum': after,
                                'forward_count': state.teacher.forward_count})

        if config.method.uses_ewc:
            train = _normalized(tasks[t].train, tasks[t].normalizer)
            num_samples = None if config.fisher_samples is None else \
                min(config.fisher_samples, len(train))
            fisher = estimate_fisher(model, train, num_samples,
                                     prng.child(STREAM_FISHER, t), head=t)
            state.fisher = fisher if state.fisher is None else \
                state.fisher.accumulate(fisher)

        test_sets = [tasks[j].test for j in range(t + 1)]
        for mode, matrix in (('taw', taw), ('tag', tag)):
            for j, acc in enumerate(evaluate(model, test_sets, mode)):
                matrix.record(t, j, acc)
        logger.info('seed %d: after task %d taw %s tag %s', seed, t,
                    ['%.4f' % a for a in taw.row(t)],
                    ['%.4f' % a for a in tag.row(t)])

    metadata = {
        'seed': seed,
        'config': config_to_dict(config),
        'prng_algorithm': PRNG_ALGORITHM,
        'design': _design_flags(config),
        'classes': classes,
        'normalization': tasks[0].normalizer.to_dict(),
        'parameter_count': model.parameter_count(),
        'tasks': state.history,
        'teacher': teacher_log,
    }
    return SeedResult(seed, taw, tag, metadata, encode_checkpoint(model))


def _run_seed_job(job):
    config, source, seed = job
    return run_seed(config, source, seed)


def run_sequence(config, source=None):
    """All configured seeds, in parallel when `workers` > 1, then aggregated."""
    if source is None:
        source = load_source(config.dataset)
    jobs = [(config, source, seed) for seed in config.seeds]
    workers = min(config.workers, len(jobs))
    if workers > 1:
        with Pool(workers) as pool:
            results = pool.map(_run_seed_job, jobs)
    else:
        results = [_run_seed_job(job) for job in jobs]
    taw, taw_std = aggregate_seeds([r.taw for r in results])
    tag, tag_std = aggregate_seeds([r.tag for r in results])
    return RunResult(results, taw, tag, taw_std, tag_std)


def run_sweep(config, mus, lams, source=None):
    """Grid over (mu, lam); results ranked by mean task-aware accuracy."""
    if source is None:
        source = load_source(config.dataset)
    results = []
    for mu in mus:
        for lam in lams:
            point = replace(config, weights=replace(config.weights, mu=mu, lam=lam))
            point.validate()
            logger.info('sweep point mu=%g lam=%g', mu, lam)
            run = run_sequence(point, source)
            results.append((mu, lam, avg_incremental_accuracy(run.taw), run))
    return sorted(results, key=lambda r: -r[2])
