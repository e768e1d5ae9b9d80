"""Experiment harness: configs, tuning, sweeps, rate fits, CSV round trips."""

import math

import numpy as np
import pytest

import adaknn.harness as harness
from adaknn.estimators import AdaptiveK, FixedK
from adaknn.harness import (
    CSV_HEADER,
    ConfigError,
    CsvRow,
    ExperimentConfig,
    SweepResult,
    TuningSpec,
    emit_csv,
    fit_rate,
    group_rows,
    read_csv,
    sweep,
    tune,
)
from adaknn.lowerbound import make_cube_world
from adaknn.theory import optimal_growth
from adaknn.worlds import EtaFunc, FeatureDist, WorldSpec


def cls_world():
    return WorldSpec(FeatureDist.laplace(), EtaFunc("cos5x"), "classification")


def reg_world():
    return WorldSpec(FeatureDist.laplace(), EtaFunc("sinx"), "regression")


def const_world(value=0.5):
    return WorldSpec(
        FeatureDist.laplace(), EtaFunc("constant", value=value), "classification"
    )


# ---------------------------------------------------------------------------
# configuration


def test_config_defaults():
    cfg = ExperimentConfig(world=cls_world(), method="adaptive", N_grid=(50, 100))
    assert isinstance(cfg.selector, AdaptiveK)
    assert cfg.selector.growth == pytest.approx(optimal_growth(1))
    assert cfg.selector.radius == 1.0
    assert cfg.norm == "euclidean"
    cube_cfg = ExperimentConfig(
        world=make_cube_world(9, 27),
        method="standard",
        selector=FixedK(9),
        N_grid=(27,),
    )
    assert cube_cfg.norm == "max"


def test_config_rejections():
    w = cls_world()
    with pytest.raises(ConfigError, match="method"):
        ExperimentConfig(world=w, method="bagging")
    with pytest.raises(ConfigError, match="task"):
        ExperimentConfig(world=object(), method="standard", selector=FixedK(3))
    with pytest.raises(ConfigError, match="increasing"):
        ExperimentConfig(world=w, method="standard", selector=FixedK(3), N_grid=(100, 100))
    with pytest.raises(ConfigError, match="increasing"):
        ExperimentConfig(world=w, method="standard", selector=FixedK(3), N_grid=())
    with pytest.raises(ConfigError, match="needs 'k'"):
        ExperimentConfig(world=w, method="standard")
    with pytest.raises(ConfigError, match="fixed-k"):
        ExperimentConfig(world=w, method="standard", selector=AdaptiveK())
    with pytest.raises(ConfigError, match="adaptive selector"):
        ExperimentConfig(world=w, method="adaptive", selector=FixedK(3))
    with pytest.raises(ConfigError, match="base_seed"):
        ExperimentConfig(world=w, method="standard", selector=FixedK(3), base_seed=-1)
    with pytest.raises(ConfigError, match="norm"):
        ExperimentConfig(world=w, method="standard", selector=FixedK(3), norm="l3")
    with pytest.raises(ConfigError):
        ExperimentConfig(world=w, method="standard", selector=FixedK(3), trials=0)


def test_config_from_dict():
    cfg = ExperimentConfig.from_dict(
        {
            "world": {"kind": "laplace", "eta": "cos5x", "task": "classification"},
            "method": "adaptive",
            "selector": {"K": 2.0, "q": 0.8, "A": 1.0},
            "N_grid": [100, 200],
            "trials": 5,
            "n_test": 50,
            "base_seed": 3,
            "tuning": "none",
        }
    )
    assert cfg.selector == AdaptiveK(scale=2.0, growth=0.8, radius=1.0)
    assert cfg.N_grid == (100, 200)
    assert cfg.world == cls_world()

    std = ExperimentConfig.from_dict(
        {
            "world": {"kind": "laplace", "eta": "sinx", "task": "regression"},
            "method": "standard",
            "selector": {"k": 7},
        }
    )
    assert std.selector == FixedK(7)

    tuned = ExperimentConfig.from_dict(
        {
            "world": {"kind": "laplace", "eta": "cos5x", "task": "classification"},
            "method": "standard",
            "tuning": {"n_anchor": 200, "trials": 10, "grid": [1, 5, 9]},
        }
    )
    assert tuned.tuning == TuningSpec.at_n(200, grid=(1, 5, 9), trials=10)


def test_config_from_dict_rejections():
    base = {
        "world": {"kind": "laplace", "eta": "cos5x", "task": "classification"},
        "method": "adaptive",
    }
    with pytest.raises(ConfigError, match="unknown config key"):
        ExperimentConfig.from_dict({**base, "n_jobs": 4})
    with pytest.raises(ConfigError, match="missing 'world'"):
        ExperimentConfig.from_dict({"method": "adaptive"})
    with pytest.raises(ConfigError, match="missing 'method'"):
        ExperimentConfig.from_dict({"world": base["world"]})
    with pytest.raises(ConfigError, match="bad world config"):
        ExperimentConfig.from_dict({**base, "world": {"kind": "laplace", "eta": "cos5x", "task": "classification", "spin": 1}})
    with pytest.raises(ConfigError, match="world must be an object"):
        ExperimentConfig.from_dict({**base, "world": "laplace"})
    with pytest.raises(ConfigError, match="missing 'kind'"):
        ExperimentConfig.from_dict({**base, "world": {"eta": "cos5x", "task": "classification"}})
    with pytest.raises(ConfigError, match="unknown selector key"):
        ExperimentConfig.from_dict({**base, "selector": {"K": 1.0, "kmax": 3}})
    with pytest.raises(ConfigError, match="mixes"):
        ExperimentConfig.from_dict({**base, "method": "standard", "selector": {"k": 3, "q": 0.5}})
    with pytest.raises(ConfigError, match="unknown tuning key"):
        ExperimentConfig.from_dict({**base, "tuning": {"anchor": 500}})
    with pytest.raises(ConfigError, match="tuning must be"):
        ExperimentConfig.from_dict({**base, "tuning": 500})
    with pytest.raises(ConfigError, match="config must be"):
        ExperimentConfig.from_dict(["world"])


def test_tuning_spec_validation():
    with pytest.raises(ConfigError, match="mode"):
        TuningSpec(mode="cv")
    with pytest.raises(ConfigError, match="empty tuning grid"):
        TuningSpec.at_n(grid=())
    assert TuningSpec.from_value(None) == TuningSpec.none()


# ---------------------------------------------------------------------------
# tuning


def test_tune_prefers_many_neighbors_on_constant_target():
    # constant eta has no bias term, so more votes only reduce variance
    cfg = ExperimentConfig(
        world=const_world(0.5),
        method="standard",
        N_grid=(100,),
        n_test=200,
        base_seed=5,
        tuning=TuningSpec.at_n(100, grid=(1, 50), trials=10),
    )
    assert tune(cfg) == 50
    ada = ExperimentConfig(
        world=const_world(0.5),
        method="adaptive",
        N_grid=(100,),
        n_test=200,
        base_seed=5,
        tuning=TuningSpec.at_n(100, grid=(0.25, 4.0), trials=10),
    )
    assert tune(ada) == 4.0


def test_tune_single_candidate_and_errors():
    cfg = ExperimentConfig(
        world=cls_world(),
        method="standard",
        N_grid=(100,),
        n_test=50,
        tuning=TuningSpec.at_n(80, grid=(7,), trials=3),
    )
    assert tune(cfg) == 7
    with pytest.raises(ConfigError, match="not enabled"):
        tune(
            ExperimentConfig(
                world=cls_world(), method="standard", selector=FixedK(3), N_grid=(100,)
            )
        )
    with pytest.raises(ConfigError, match="empty tuning grid"):
        tune(cfg, candidate_grid=())
    with pytest.raises(ConfigError, match=">= 1"):
        tune(cfg, candidate_grid=(0, 3))
    ada = ExperimentConfig(
        world=cls_world(),
        method="adaptive",
        N_grid=(100,),
        n_test=50,
        tuning=TuningSpec.at_n(80, grid=(1.0,), trials=3),
    )
    with pytest.raises(ConfigError, match="> 0"):
        tune(ada, candidate_grid=(0.0, 1.0))


def test_tune_is_reproducible():
    cfg = ExperimentConfig(
        world=cls_world(),
        method="standard",
        N_grid=(100,),
        n_test=300,
        base_seed=7,
        tuning=TuningSpec.at_n(500, trials=20),
    )
    first = tune(cfg)
    assert tune(cfg) == first
    assert 1 <= first <= 60


# ---------------------------------------------------------------------------
# sweeping


def small_sweep_config(**overrides):
    kwargs = dict(
        world=cls_world(),
        method="standard",
        selector=FixedK(5),
        N_grid=(50, 100, 200),
        trials=8,
        n_test=80,
        base_seed=11,
    )
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)


def test_sweep_shapes_and_fit():
    res = sweep(small_sweep_config())
    assert res.method == "standard"
    assert res.world_name == "laplace1-cos5x-cls"
    assert res.N_grid == (50, 100, 200)
    assert len(res.estimates) == 3
    for est in res.estimates:
        assert est.n_trials == 8
        assert est.mean > 0.0
        assert est.stderr > 0.0
    assert res.slope is not None
    assert res.rate == pytest.approx(-res.slope)
    assert res.points() == [(N, est.mean) for N, est in zip(res.N_grid, res.estimates)]


def test_sweep_is_deterministic_across_workers():
    cfg = small_sweep_config()
    a = sweep(cfg, workers=1)
    b = sweep(cfg, workers=1)
    c = sweep(cfg, workers=3)
    assert a == b == c


def test_sweep_applies_tuned_parameter():
    cfg = small_sweep_config(
        selector=None,
        tuning=TuningSpec.at_n(100, grid=(3, 9), trials=4),
    )
    res = sweep(cfg)
    assert res.tuned_param in (3, 9)
    ada = sweep(
        small_sweep_config(
            method="adaptive",
            selector=AdaptiveK(radius=1.0),
            tuning=TuningSpec.at_n(100, grid=(0.5, 2.0), trials=4),
        )
    )
    assert ada.tuned_param in (0.5, 2.0)


def test_sweep_skips_fit_when_excess_is_zero():
    # amplitude-1 constant target: labels are deterministic, any neighbor
    # vote is unanimous, so the measured excess risk is exactly zero
    res = sweep(
        ExperimentConfig(
            world=const_world(1.0),
            method="standard",
            selector=FixedK(3),
            N_grid=(30, 60, 120),
            trials=3,
            n_test=40,
            base_seed=2,
        )
    )
    assert all(est.mean == 0.0 for est in res.estimates)
    assert res.slope is None and res.rate is None


def test_sweep_stderr_shrinks_with_trials():
    base = dict(N_grid=(100,), n_test=60, base_seed=13)
    few = sweep(small_sweep_config(trials=50, **base))
    many = sweep(small_sweep_config(trials=200, **base))
    ratio = few.estimates[0].stderr / many.estimates[0].stderr
    assert ratio == pytest.approx(2.0, rel=0.3)


def test_trial_failure_is_annotated(monkeypatch):
    def boom(*args, **kwargs):
        raise ValueError("exploded")

    monkeypatch.setattr(harness, "KNNClassifier", boom)
    with pytest.raises(RuntimeError, match=r"trial failed \(N=50, trial=0"):
        sweep(small_sweep_config(N_grid=(50,), trials=1))


# ---------------------------------------------------------------------------
# rate fitting


def test_fit_rate_exact_power_law():
    Ns = [500, 1000, 2000, 4000, 8000]
    pts = [(N, 3.0 * N**-0.7) for N in Ns]
    slope, stderr, intercept = fit_rate(pts)
    assert slope == pytest.approx(-0.7, abs=1e-12)
    assert intercept == pytest.approx(math.log10(3.0), abs=1e-12)
    assert stderr == pytest.approx(0.0, abs=1e-12)


def test_fit_rate_with_noise():
    rng = np.random.default_rng(21)
    Ns = np.array([500, 1000, 2000, 4000, 8000, 16000])
    means = 2.0 * Ns**-0.5 * np.exp(rng.normal(0, 0.03, Ns.size))
    slope, stderr, _ = fit_rate(list(zip(Ns, means)))
    assert slope == pytest.approx(-0.5, abs=4 * stderr + 0.02)
    assert stderr > 0.0


def test_fit_rate_rejections():
    with pytest.raises(ValueError, match=">=3 grid points"):
        fit_rate([(100, 1.0), (200, 0.5)])
    with pytest.raises(ValueError, match="nonpositive"):
        fit_rate([(100, 1.0), (200, 0.0), (400, 0.2)])
    with pytest.raises(ValueError, match="distinct"):
        fit_rate([(100, 1.0), (100, 0.5), (100, 0.25)])


# ---------------------------------------------------------------------------
# CSV round trips


def fake_result():
    from adaknn.worlds import RiskEstimate

    ests = (
        RiskEstimate(0.125, 0.01, 80, 8),
        RiskEstimate(0.0625, 0.005, 80, 8),
        RiskEstimate(1.0 / 3.0, 0.001, 80, 8),
    )
    return SweepResult(
        method="standard",
        world_name="laplace1-cos5x-cls",
        N_grid=(50, 100, 200),
        estimates=ests,
    )


def test_csv_round_trip(tmp_path):
    path = tmp_path / "out.csv"
    emit_csv(fake_result(), str(path))
    text = path.read_text()
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    rows = read_csv(str(path))
    assert [r.N for r in rows] == [50, 100, 200]
    # repr round trip keeps every bit, including the non-terminating third
    assert rows[2].mean_excess == 1.0 / 3.0
    assert rows[0].stderr == 0.01
    assert rows[0].method == "standard"
    assert rows[0].world == "laplace1-cos5x-cls"
    assert rows[0].trials == 8


def test_csv_multiple_results_and_grouping(tmp_path):
    path = tmp_path / "multi.csv"
    other = SweepResult(
        method="adaptive",
        world_name="laplace1-cos5x-cls",
        N_grid=(50,),
        estimates=(harness.RiskEstimate(0.5, 0.1, 80, 8),),
    )
    emit_csv([fake_result(), other], str(path))
    rows = read_csv(str(path))
    groups = group_rows(rows)
    assert list(groups) == [
        ("standard", "laplace1-cos5x-cls"),
        ("adaptive", "laplace1-cos5x-cls"),
    ]
    assert len(groups[("standard", "laplace1-cos5x-cls")]) == 3


def test_csv_header_and_row_validation(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("N,excess,stderr,trials,method,world\n")
    with pytest.raises(ValueError, match="unexpected CSV header"):
        read_csv(str(bad))
    empty = tmp_path / "empty.csv"
    empty.write_text(",".join(CSV_HEADER) + "\n")
    assert read_csv(str(empty)) == []
    torn = tmp_path / "torn.csv"
    torn.write_text(",".join(CSV_HEADER) + "\n100,0.5,0.01\n")
    with pytest.raises(ValueError, match="malformed CSV row"):
        read_csv(str(torn))


def test_csv_row_dataclass():
    row = CsvRow(100, 0.5, 0.01, 8, "standard", "laplace1-cos5x-cls")
    assert row.N == 100 and row.world.endswith("cls")
