import numpy as np
import pytest

from maxdropout_lab import train as train_module
from maxdropout_lab.augment import parse_plan
from maxdropout_lab.data import SyntheticDataset
from maxdropout_lab.errors import ConfigError, DivergenceError
from maxdropout_lab.io_utils import read_csv
from maxdropout_lab.net import ToyNet
from maxdropout_lab.regularizers import DropConfig
from maxdropout_lab.train import MetricsLog, TrainConfig, check_plan_output, evaluate, train


def small_cfg(**overrides):
    values = dict(epochs=2, batch_size=16, train_size=64, val_size=32, decay_epochs=(1,))
    values.update(overrides)
    return TrainConfig(**values)


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(lr0=0)
    with pytest.raises(ConfigError):
        TrainConfig(momentum=1.0)
    with pytest.raises(ConfigError):
        TrainConfig(epochs=0)
    with pytest.raises(ConfigError):
        TrainConfig(decay_epochs=(-1,))


def test_published_protocol():
    cfg = TrainConfig.published()
    assert (cfg.lr0, cfg.momentum, cfg.weight_decay, cfg.lr_decay_factor) == (0.1, 0.9, 5e-4, 0.2)
    assert cfg.decay_epochs == (60, 120, 160)
    assert cfg.epochs == 200
    assert TrainConfig.published(epochs=3).epochs == 3


def test_evaluate_is_deterministic():
    data = SyntheticDataset.generate(seed=0, train_size=16, val_size=40)
    net = ToyNet(DropConfig("max_dropout", rate=0.5))
    assert evaluate(net, data.val) == evaluate(net, data.val)


def test_evaluate_runs_no_train_mode_masks():
    data = SyntheticDataset.generate(seed=0, train_size=16, val_size=40)
    for variant in ("dropout", "max_dropout", "max_dropout_v2"):
        net = ToyNet(DropConfig(variant, rate=0.3))
        evaluate(net, data.val)
        assert net.train_applications == 0


def test_drop_layers_run_only_inside_train_steps():
    cfg = small_cfg(drop=DropConfig("max_dropout_v2", rate=0.3))
    data = SyntheticDataset.generate(cfg.seed, cfg.train_size, cfg.val_size)
    net = ToyNet(cfg.drop, seed=cfg.seed)
    train(cfg, data=data, net=net)
    batches_per_epoch = -(-cfg.train_size // cfg.batch_size)
    assert net.train_applications == cfg.epochs * batches_per_epoch * len(net.drop_layers)


def test_training_log_is_deterministic():
    cfg = small_cfg(drop=DropConfig("dropout", rate=0.3, seed=7), augment=parse_plan("hflip=0.5,cutout=6"))
    a = train(cfg)
    b = train(cfg)
    for ra, rb in zip(a.rows, b.rows):
        for column in MetricsLog.COLUMNS[:-1]:
            assert getattr(ra, column) == getattr(rb, column)
    assert [r.lr for r in a.rows] == [0.01, 0.002]


def test_parallel_loader_matches_serial():
    cfg = small_cfg(augment=parse_plan("crop=28x28,hflip=0.5,cutout=6"))
    serial = train(cfg)
    threaded = train(cfg.replace(workers=3))
    assert [r.train_loss for r in serial.rows] == [r.train_loss for r in threaded.rows]
    assert [r.val_acc for r in serial.rows] == [r.val_acc for r in threaded.rows]


def test_plan_seed_reaches_training():
    cfg = small_cfg(epochs=1, decay_epochs=())
    first = train(cfg.replace(augment=parse_plan("cutout=8", seed=5))).rows[0]
    second = train(cfg.replace(augment=parse_plan("cutout=8", seed=6))).rows[0]
    assert first.train_loss != second.train_loss


def test_divergence_guard(monkeypatch):
    def broken_loss(logits, labels):
        return float("nan"), np.zeros_like(logits)

    monkeypatch.setattr(train_module, "softmax_cross_entropy", broken_loss)
    with pytest.raises(DivergenceError) as err:
        train(small_cfg())
    assert err.value.epoch == 0 and err.value.step == 0


def test_plan_must_keep_the_input_shape():
    with pytest.raises(ConfigError):
        check_plan_output(parse_plan("crop=24x24"), (3, 28, 28))
    check_plan_output(parse_plan("resize=32x32,crop=28x28"), (3, 28, 28))


def test_metrics_csv(tmp_path):
    log = train(small_cfg(epochs=1))
    path = log.write_csv(tmp_path / "m.csv")
    rows = read_csv(path)
    assert list(rows[0]) == list(MetricsLog.COLUMNS)
    assert len(rows) == 1
    no_timing = read_csv(log.write_csv(tmp_path / "n.csv", include_timing=False))
    assert "epoch_seconds" not in no_timing[0]
    assert log.total_seconds > 0


@pytest.mark.slow
def test_toy_training_smoke():
    baseline = train(TrainConfig())
    assert baseline.final.train_acc >= 0.95
    for variant in ("dropout", "max_dropout", "max_dropout_v2"):
        log = train(TrainConfig(drop=DropConfig(variant, rate=0.3)))
        losses = log.column("train_loss")
        assert all(np.isfinite(losses))
        assert np.median(losses[-5:]) < np.median(losses[:5])
        assert log.final.train_acc >= 0.95
        assert log.final.val_acc >= baseline.final.val_acc - 0.02
