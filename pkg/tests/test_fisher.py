# -*- coding: utf-8 -*-

import numpy as np
import pytest

from padkit.errors import DataError, DimensionError
from padkit.core.data.dataset import ArrayDataset
from padkit.core.loss.fisher import FisherDiag, estimate_fisher
from padkit.core.tensor.prng import Prng
from padkit.tools.gradcheck_suite import gradcheck_config
from padkit.core.model.vit import build_model


@pytest.fixture
def data(prng):
    config = gradcheck_config()
    images = prng.normal((6, 3, config.image_size, config.image_size))
    return ArrayDataset(images, np.zeros(6))


def test_fisher_is_nonnegative_and_deterministic(data):
    model = build_model(gradcheck_config(), 0, head_classes=(2, 2))
    first = estimate_fisher(model, data, head=1)
    second = estimate_fisher(model, data, head=1)
    assert first.names == list(model.parameters())
    for name, value, anchor in first.items():
        assert (value >= 0).all()
        np.testing.assert_array_equal(value, second.value(name))
        np.testing.assert_array_equal(anchor, model.parameters()[name].data)
    # the head not on the path gets nothing
    assert not first.value('head.0.weight').any()
    assert first.value('head.1.weight').any()


def test_fisher_subsample(data):
    model = build_model(gradcheck_config(), 0, head_classes=(2, ))
    a = estimate_fisher(model, data, num_samples=3, prng=Prng(4))
    b = estimate_fisher(model, data, num_samples=3, prng=Prng(4))
    np.testing.assert_array_equal(a.value('stem.0.weight'), b.value('stem.0.weight'))
    with pytest.raises(DataError):
        estimate_fisher(model, data, num_samples=7)
    with pytest.raises(DataError):
        estimate_fisher(model, data.subset(np.arange(0)))


def test_accumulate():
    older = FisherDiag({'a': np.ones(2), 'b': np.ones(1)},
                       {'a': np.zeros(2), 'b': np.zeros(1)})
    newer = FisherDiag({'a': np.full(2, 2.)}, {'a': np.full(2, 5.)})
    merged = older.accumulate(newer)
    assert merged.value('a').tolist() == [3., 3.]
    assert merged.anchor('a').tolist() == [5., 5.]
    assert merged.value('b').tolist() == [1.]
    assert merged.anchor('b').tolist() == [0.]


def test_fisher_guards():
    with pytest.raises(DimensionError):
        FisherDiag({'a': np.ones(2)}, {'a': np.ones(3)})
    with pytest.raises(DimensionError):
        FisherDiag({'a': np.ones(2)}, {'b': np.ones(2)})
    with pytest.raises(ValueError):
        FisherDiag({'a': -np.ones(2)}, {'a': np.ones(2)})
