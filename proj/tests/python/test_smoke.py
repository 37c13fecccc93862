import json
import math

import numpy as np
import pytest

import viforecast as vf


def test_pixel_bounds():
    lo, hi = vf.pixel_bounds()
    assert abs(lo - (-1.8044)) < 1e-4
    assert abs(hi - 2.2489) < 1e-4


def test_fold_resize_roundtrip():
    x = np.arange(1.0, 10.0)
    folded = vf.fold_by_period(x, 4)
    assert folded.shape == (4, 2)
    assert folded[0, 0] == 2.0
    np.testing.assert_array_equal(vf.unfold_by_period(folded, 8), x[1:])
    out = vf.bilinear_resize(np.array([[0.0, 1.0]]), 1, 4)
    np.testing.assert_allclose(out, [[0.0, 0.25, 0.75, 1.0]])


def test_colors_alternate():
    ch = vf.assign_colors(200, "random", 5)
    assert all(a != b for a, b in zip(ch, ch[1:]))
    assert vf.assign_colors(5) == [0, 1, 2, 0, 1]


def test_quantile_loss_example():
    one = np.ones((1, 1))
    total, per_level = vf.quantile_loss([0.5 * one, one, 2 * one], one, [0.25, 0.5, 0.75])
    assert total == 0.125
    assert per_level == [0.125, 0.0, 0.25]


def test_metrics():
    y = np.array([[1.0], [-2.0], [3.0]])
    f = y + 0.5
    mse, mae = vf.mse_mae(f, y)
    assert mse == pytest.approx(0.25)
    assert mae == pytest.approx(0.5)
    assert vf.crps([y] * 9, y) == 0.0
    assert vf.normalized_mae({"a": 1.0, "b": 4.0}, {"a": 2.0, "b": 2.0}) == pytest.approx(1.0)
    with pytest.raises(ValueError, match="MASE undefined"):
        vf.mase(f, y, np.array([[1.0], [2.0], [1.0], [2.0]]), 2)


def test_lr_schedule():
    assert vf.lr_at_step(5000) == pytest.approx(5e-5)
    assert vf.lr_at_step(55000) == pytest.approx(5e-5)


def test_model_forecast_and_checkpoint(tmp_path):
    cfg = vf.ModelConfig.desk()
    assert cfg.heads == 9
    full = vf.ModelConfig.full_size()
    assert abs(full.parameter_count() - 112e6) < 0.05 * 112e6
    model = vf.Model.random(cfg)
    t = np.arange(96)
    ctx = np.stack([np.sin(2 * math.pi * t / 24), np.cos(2 * math.pi * t / 24)], axis=1)
    out = model.forecast(ctx, 24, 24)
    assert len(out["levels"]) == 9
    assert len(out["per_head"]) == 9
    assert all(h.shape == (24, 2) for h in out["per_head"])
    np.testing.assert_array_equal(out["point"], out["per_head"][4])

    path = tmp_path / "ck.bin"
    model.save(path)
    again = vf.Model.load(path)
    assert again.config == cfg
    np.testing.assert_array_equal(again.forecast(ctx, 24, 24)["point"], out["point"])


def test_synth_and_short_pretrain(tmp_path):
    spec = {"seed": 1, "series": [{"name": "s", "generator": "sinusoid", "length": 600}]}
    vf.synthesize_archive(json.dumps(spec), tmp_path / "arch")
    archive = vf.load_archive(tmp_path / "arch")
    assert archive["s"]["values"].shape == (600, 1)
    assert archive["s"]["period"] == 24
    config = {"optim": {"total_steps": 3, "warmup_steps": 1, "batch_size": 4}, "train": {"seed": 2}}
    seen = []
    model, losses = vf.pretrain(tmp_path / "arch", json.dumps(config), on_log=lambda s, l: seen.append(s))
    assert len(losses) == 3
    assert all(math.isfinite(v) for v in losses)
    assert seen[0] == 0
    with pytest.raises(ValueError, match="optim.learning_rate"):
        vf.pretrain(tmp_path / "arch", json.dumps({"optim": {"learning_rate": 1}}))
