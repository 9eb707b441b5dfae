import math
from pathlib import Path

import pytest

import fogperc

ROOT = Path(__file__).resolve().parents[2]
SMOKE = ROOT / "configs" / "smoke.ini"


def smoke():
    return fogperc.load_config(SMOKE)


def test_config_roundtrip():
    cfg = smoke()
    d = fogperc.config_dict(cfg)
    assert cfg.num_vues == 3
    assert cfg.seed == 3
    assert d["scenario"]["num_vues"] == 3


def test_bad_config_raises():
    with pytest.raises(ValueError):
        fogperc.parse_config("[scenario]\nnum_vues = 0\n")


def test_uncapped_split_is_proportional_to_sqrt_load():
    sol = fogperc.allocate_frequencies([1.0, 4.0], 3.0)
    assert sol.feasible
    assert sol.f == pytest.approx([1.0, 2.0])
    assert fogperc.computation_objective([1.0, 4.0], 3.0, sol.f) == pytest.approx(3.0)


def test_kkt_not_worse_than_grid():
    loads = [2.0, 5.0, 1.0]
    kkt = fogperc.allocate_frequencies(loads, 10.0).f
    grid = fogperc.grid_search_oracle(loads, 10.0, resolution=0.01)
    assert fogperc.computation_objective(loads, 10.0, kkt) <= fogperc.computation_objective(loads, 10.0, grid)


def test_temporal_value_linear_decays():
    assert fogperc.temporal_value_linear(1.0, 0.0, 0.0, 2.0) == pytest.approx(1.0)
    assert fogperc.temporal_value_linear(1.0, 0.0, 1.0, 2.0) < 1.0


def test_baselines_return_summaries():
    cfg = smoke()
    for name in ("distance-full", "max-sum-rate", "random"):
        s = fogperc.run_baseline(cfg, name, episodes=2)
        assert s["episodes"] == 2
        assert math.isfinite(s["mean_sum_satisfaction"])
    with pytest.raises(ValueError):
        fogperc.run_baseline(cfg, "nope")


def test_oracles_pass_on_smoke():
    report = fogperc.run_oracles(smoke())
    assert report["matching"]["verdict"] is True
    assert report["frequency"]["verdict"] is True


def test_trainer_is_deterministic(tmp_path):
    cfg = smoke()
    a, b = fogperc.Trainer(cfg), fogperc.Trainer(cfg)
    a.train()
    b.train()
    assert a.episodes_done == cfg.training_episodes
    assert a.learning_curve() == b.learning_curve()
    ckpt = tmp_path / "ckpt.bin"
    a.save_checkpoint(ckpt)
    c = fogperc.Trainer(cfg)
    c.load_checkpoint(ckpt)
    assert fogperc.evaluate(c, 2) == fogperc.evaluate(a, 2)
