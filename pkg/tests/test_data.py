# -*- coding: utf-8 -*-

import numpy as np
import pytest

from padkit.errors import ConfigError, DataError
from padkit.core.data import IMAGE_SIZE, RECORD_BYTES
from padkit.core.data.augment_image import (Normalizer, augment_batch,
                                            augment_test, augment_train)
from padkit.core.data.dataset import LabeledImage, stack_images
from padkit.core.data.loader_cifar import (LoaderCifar, encode_records,
                                           load_binary, load_cifar100_binary,
                                           write_cifar_binary)
from padkit.core.data.synthetic import SyntheticSpec, generate_synthetic
from padkit.core.tensor.prng import Prng


def _images(prng, count, labels):
    pixels = prng.integers(0, 256, size=(count, 3, IMAGE_SIZE, IMAGE_SIZE)) / 255.
    return [LabeledImage(pixels[i], labels[i], i % 20) for i in range(count)]


def test_cifar_round_trip(tmp_path, prng):
    images = _images(prng, 5, [0, 7, 99, 3, 42])
    path = str(tmp_path / 'train.bin')
    write_cifar_binary(images, path)
    loaded = load_binary(path)
    assert [img.fine_label for img in loaded] == [0, 7, 99, 3, 42]
    assert [img.coarse_label for img in loaded] == [0, 1, 2, 3, 4]
    assert encode_records(loaded) == encode_records(images)
    with LoaderCifar(filename=path) as loader:
        assert len(loader) == 5
        assert loader.read(2).fine_label == 99
        with pytest.raises(IndexError):
            loader.read(5)


def test_load_cifar100_binary(tmp_path):
    records = bytearray(2 * RECORD_BYTES)
    records[RECORD_BYTES] = 3
    records[RECORD_BYTES + 1] = 17
    records[RECORD_BYTES + 2] = 255
    path = tmp_path / 'train.bin'
    path.write_bytes(bytes(records))

    blank, marked = load_cifar100_binary(str(path))
    assert (blank.coarse_label, blank.fine_label) == (0, 0)
    assert not blank.pixels.any()
    assert (marked.coarse_label, marked.fine_label) == (3, 17)
    assert marked.pixels[0, 0, 0] == 1.
    assert marked.pixels.sum() == 1.
    with pytest.raises(DataError):
        load_cifar100_binary(str(tmp_path / 'missing.bin'))


def test_imagenet32_labels(tmp_path, prng):
    path = str(tmp_path / 'train.bin')
    write_cifar_binary(_images(prng, 2, [299, 256]), path, 'imagenet32')
    assert [img.fine_label for img in load_binary(path, 'imagenet32')] == [299, 256]
    with pytest.raises(DataError):
        encode_records(_images(prng, 1, [300]), 'imagenet32')


def test_loader_errors(tmp_path, prng):
    path = tmp_path / 'short.bin'
    path.write_bytes(b'\x00' * (RECORD_BYTES + 10))
    with pytest.raises(DataError):
        load_binary(str(path))
    with pytest.raises(DataError):
        load_binary(str(tmp_path / 'missing.bin'))
    with pytest.raises(DataError):
        encode_records(_images(prng, 1, [100]))
    with pytest.raises(DataError):
        LoaderCifar(format='mnist')
    bad = tmp_path / 'label.bin'
    record = bytearray(RECORD_BYTES)
    record[1] = 120
    bad.write_bytes(bytes(record))
    with pytest.raises(DataError):
        load_binary(str(bad))


def test_synthetic():
    spec = SyntheticSpec(num_classes=3, samples_per_class=10, image_size=8)
    train, test = generate_synthetic(spec)
    assert len(train) == 24 and len(test) == 6
    assert sorted(set(img.fine_label for img in test)) == [0, 1, 2]
    assert train[0].pixels.shape == (3, 8, 8)
    again, _ = generate_synthetic(spec)
    for a, b in zip(train, again):
        np.testing.assert_array_equal(a.pixels, b.pixels)
    other, _ = generate_synthetic(SyntheticSpec(num_classes=3, samples_per_class=10,
                                                image_size=8, seed=1))
    assert not np.array_equal(train[0].pixels, other[0].pixels)
    with pytest.raises(ConfigError):
        SyntheticSpec(num_classes=0).validate()


def test_augmentation(prng):
    img = LabeledImage(prng.uniform((3, 8, 8)), 1)
    np.testing.assert_array_equal(augment_test(img).pixels, img.pixels)
    same = augment_train(img, None, offset=(4, 4), flip=False)
    np.testing.assert_array_equal(same.pixels, img.pixels)
    flipped = augment_train(img, None, offset=(4, 4), flip=True)
    np.testing.assert_array_equal(flipped.pixels, img.pixels[:, :, ::-1])
    shifted = augment_train(img, None, offset=(0, 4), flip=False)
    assert not shifted.pixels[:, :4].any()
    np.testing.assert_array_equal(shifted.pixels[:, 4:], img.pixels[:, :4])
    out = augment_train(img, Prng(2))
    assert out.pixels.shape == (3, 8, 8)
    np.testing.assert_array_equal(augment_train(img, Prng(2)).pixels, out.pixels)


def test_normalizer(prng):
    images = prng.uniform((20, 3, 8, 8)) * np.array([1., 2., 3.])[:, None, None]
    normalizer = Normalizer.from_images(images)
    out = augment_batch(images, None, normalizer, train=False)
    np.testing.assert_allclose(out.mean(axis=(0, 2, 3)), 0., atol=1e-12)
    np.testing.assert_allclose(out.std(axis=(0, 2, 3)), 1., atol=1e-12)
    flat = Normalizer.from_images(np.full((2, 3, 4, 4), 0.5))
    assert flat.std.tolist() == [1., 1., 1.]


def test_stack_images():
    images = [LabeledImage(np.full((3, 2, 2), float(i)), label)
              for i, label in enumerate([7, 3, 7])]
    data = stack_images(images, {7: 0, 3: 1})
    assert data.images.shape == (3, 3, 2, 2)
    assert data.labels.tolist() == [0, 1, 0]
    assert len(data.subset([1])) == 1
    assert len(stack_images([])) == 0
