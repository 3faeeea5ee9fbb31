import numpy as np
import pytest

from maxdropout_lab.augment import AugmentPlan, Cutout, parse_plan
from maxdropout_lab.data import SyntheticDataset, iter_batches
from maxdropout_lab.errors import ConfigError


def test_dataset_shapes_balance_and_range():
    data = SyntheticDataset.generate(seed=0, train_size=200, val_size=50)
    assert data.train.images.shape == (200, 3, 28, 28)
    assert data.val.images.shape == (50, 3, 28, 28)
    assert data.train.images.dtype == np.float32
    assert np.bincount(data.train.labels).tolist() == [100, 100]
    assert np.bincount(data.val.labels).tolist() == [25, 25]
    assert data.train.images.min() >= 0.0 and data.train.images.max() <= 1.0


def test_dataset_is_deterministic():
    a = SyntheticDataset.generate(seed=4, train_size=20, val_size=10)
    b = SyntheticDataset.generate(seed=4, train_size=20, val_size=10)
    c = SyntheticDataset.generate(seed=5, train_size=20, val_size=10)
    np.testing.assert_array_equal(a.train.images, b.train.images)
    np.testing.assert_array_equal(a.val.labels, b.val.labels)
    assert not np.array_equal(a.train.images, c.train.images)


def test_classes_differ_at_the_center():
    data = SyntheticDataset.generate(seed=0, train_size=400, val_size=10)
    center = data.train.images[:, :, 12:16, 12:16].mean(axis=(1, 2, 3))
    labels = data.train.labels
    assert center[labels == 0].mean() > center[labels == 1].mean() + 0.2


def test_dataset_needs_samples():
    with pytest.raises(ConfigError):
        SyntheticDataset.generate(train_size=1)


def test_every_sample_yielded_once():
    data = SyntheticDataset.generate(seed=0, train_size=50, val_size=4)
    order = np.random.default_rng(0).permutation(50)
    batches = list(iter_batches(data.train, 8, order, AugmentPlan(), epoch=0))
    assert [len(y) for _, y in batches] == [8, 8, 8, 8, 8, 8, 2]
    np.testing.assert_array_equal(np.concatenate([y for _, y in batches]), data.train.labels[order])


def test_worker_count_does_not_change_batches():
    data = SyntheticDataset.generate(seed=1, train_size=40, val_size=4)
    order = np.arange(40)
    plan = parse_plan("crop=28x28,hflip=0.5,cutout=6", seed=3)
    serial = list(iter_batches(data.train, 8, order, plan, epoch=2, workers=1))
    threaded = list(iter_batches(data.train, 8, order, plan, epoch=2, workers=3, queue_depth=2))
    assert len(serial) == len(threaded) == 5
    for (xs, ys), (xt, yt) in zip(serial, threaded):
        np.testing.assert_array_equal(xs, xt)
        np.testing.assert_array_equal(ys, yt)


def test_augmentation_varies_by_epoch():
    data = SyntheticDataset.generate(seed=1, train_size=16, val_size=4)
    order = np.arange(16)
    plan = AugmentPlan((Cutout(10),), seed=0)
    e0 = np.concatenate([x for x, _ in iter_batches(data.train, 8, order, plan, epoch=0)])
    e1 = np.concatenate([x for x, _ in iter_batches(data.train, 8, order, plan, epoch=1)])
    assert not np.array_equal(e0, e1)


def test_plan_seed_changes_augmentation():
    data = SyntheticDataset.generate(seed=1, train_size=16, val_size=4)
    order = np.arange(16)

    def augmented(plan_seed):
        plan = AugmentPlan((Cutout(6),), seed=plan_seed)
        return np.concatenate([x for x, _ in iter_batches(data.train, 8, order, plan, epoch=0)])

    np.testing.assert_array_equal(augmented(1), augmented(1))
    assert not np.array_equal(augmented(1), augmented(999))
