import numpy as np
import pytest

from eqscm import scaled_rates
from eqscm.errors import ConfigError
from eqscm.harness import (
    MisspecConfig,
    ScaleRule,
    SOURCE_SCM,
    SOURCE_SSA,
    eval_deterministic,
    eval_misspecification,
    eval_stochastic,
    write_effects_csv,
)
from eqscm.scm import NoiseKind

DELTA_TRUE_EXP1 = -2.973535533749628  # mean-chain difference, exact fractions


def third_rate(net):
    return scaled_rates(net.base_rates(), "activate:K3:E1", 1 / 3)


def test_eval_det_mapk_exp1(mapk1):
    res = eval_deterministic(
        mapk1, mapk1.base_rates(), third_rate(mapk1), "K3", "K", n_draws=500, seed=0
    )
    assert res.delta_true == pytest.approx(DELTA_TRUE_EXP1, abs=1e-9)
    mean_effect = np.mean([e.value for e in res.effects])
    assert abs(mean_effect - res.delta_true) < 0.5
    assert res.intervention_value == pytest.approx(25.0)
    assert all(e.source == SOURCE_SCM for e in res.effects)


def test_eval_det_null_rule(mapk1):
    rates = mapk1.base_rates()
    res = eval_deterministic(mapk1, rates, dict(rates), "K3", "K", n_draws=200, seed=1)
    assert res.delta_true == 0.0
    assert abs(np.mean([e.value for e in res.effects])) < 0.1


def test_eval_det_deterministic_given_seed(mapk1):
    a = eval_deterministic(mapk1, mapk1.base_rates(), third_rate(mapk1), "K3", "K", 100, seed=9)
    b = eval_deterministic(mapk1, mapk1.base_rates(), third_rate(mapk1), "K3", "K", 100, seed=9)
    assert [e.value for e in a.effects] == [e.value for e in b.effects]


def test_eval_det_binomial_kind(mapk1):
    res = eval_deterministic(
        mapk1, mapk1.base_rates(), third_rate(mapk1), "K3", "K",
        n_draws=800, seed=2, transform=NoiseKind.BINOMIAL,
    )
    mean_effect = np.mean([e.value for e in res.effects])
    # integer-valued draws around the same center; looser band than Gaussian
    assert abs(mean_effect - res.delta_true) < 1.0


def test_eval_stoch_null_rule_centers_at_zero(mapk1):
    rates = mapk1.base_rates()
    res = eval_stochastic(
        mapk1, rates, dict(rates), "K3", "K", seeds=range(60), scm_seed=3, t_end=60.0
    )
    ssa = np.mean([e.value for e in res.effects_ssa])
    scm = np.mean([e.value for e in res.effects_scm])
    assert (np.asarray([e.value for e in res.effects_ssa]) == 0).all()  # identical pairs
    assert abs(scm) < 1.0
    assert abs(ssa) < 1e-12


def test_eval_stoch_small_run_reproducible(mapk1):
    kwargs = dict(
        network=mapk1,
        rates=mapk1.base_rates(),
        rates_prime=third_rate(mapk1),
        intervene="K3",
        query="K",
        seeds=range(40),
        scm_seed=5,
        t_end=50.0,
    )
    a = eval_stochastic(**kwargs)
    b = eval_stochastic(**kwargs)
    assert [e.value for e in a.effects_scm] == [e.value for e in b.effects_scm]
    assert [e.value for e in a.effects_ssa] == [e.value for e in b.effects_ssa]
    assert {e.source for e in a.effects_ssa} == {SOURCE_SSA}


def test_eval_stoch_jobs_agree(mapk1):
    kwargs = dict(
        network=mapk1,
        rates=mapk1.base_rates(),
        rates_prime=third_rate(mapk1),
        intervene="K3",
        query="K",
        seeds=range(30),
        scm_seed=5,
        t_end=30.0,
    )
    a = eval_stochastic(**kwargs, jobs=1)
    b = eval_stochastic(**kwargs, jobs=2)
    assert [e.value for e in a.effects_ssa] == [e.value for e in b.effects_ssa]
    assert [e.value for e in a.effects_scm] == [e.value for e in b.effects_scm]


def test_misspec_config_invariants():
    with pytest.raises(ConfigError):
        MisspecConfig("activate:K2:K3", 0.5, 0.5)
    with pytest.raises(ConfigError):
        MisspecConfig("activate:K2:K3", 0.5, 0.1)
    with pytest.raises(ConfigError):
        MisspecConfig("activate:K2:K3", 0.0, 0.5)
    with pytest.raises(ConfigError):
        MisspecConfig("activate:K2:K3", 0.1, 0.5, repetitions=0)


def test_misspec_unknown_rate(mapk1):
    cfg = MisspecConfig("activate:Zed:K3", 0.1, 0.5, repetitions=1)
    with pytest.raises(ConfigError):
        eval_misspecification(mapk1, cfg, ScaleRule("activate:K3:E1", 1 / 3), "K3", "K", 10)


def test_misspec_smoke_and_determinism(mapk1):
    cfg = MisspecConfig("activate:K2:K3", 0.1, 0.5, repetitions=3, seed=11)
    rule = ScaleRule("activate:K3:E1", 1 / 3)
    a = eval_misspecification(mapk1, cfg, rule, "K3", "K", seeds_per_rep=25, t_end=50.0)
    b = eval_misspecification(mapk1, cfg, rule, "K3", "K", seeds_per_rep=25, t_end=50.0)
    assert a.reps == b.reps
    assert len(a.reps) == 3
    for rep in a.reps:
        assert 0.1 <= rep.perturbed_rate <= 0.5
    assert a.avg_gap_scm >= 0 and a.avg_gap_sim >= 0
    assert 0 <= a.scm_closer_count <= 3
    payload = a.to_json(model="x")
    import json

    decoded = json.loads(payload)
    assert set(decoded) >= {"meta", "reps", "avg_gap_scm", "avg_gap_sim"}
    assert set(decoded["reps"][0]) >= {"median_true", "median_scm", "median_sim"}


def test_misspec_jobs_agree(mapk1):
    cfg = MisspecConfig("activate:K2:K3", 0.1, 0.5, repetitions=2, seed=13)
    rule = ScaleRule("activate:K3:E1", 1 / 3)
    a = eval_misspecification(mapk1, cfg, rule, "K3", "K", seeds_per_rep=15, t_end=30.0, jobs=1)
    b = eval_misspecification(mapk1, cfg, rule, "K3", "K", seeds_per_rep=15, t_end=30.0, jobs=2)
    assert a.reps == b.reps


def test_eval_det_effect_mean_converges(mapk1):
    # binomial kind has genuine draw-to-draw spread; the effect mean at small
    # n must sit within Monte-Carlo error of the large-n mean
    small = eval_deterministic(
        mapk1, mapk1.base_rates(), third_rate(mapk1), "K3", "K",
        n_draws=100, seed=21, transform=NoiseKind.BINOMIAL,
    )
    big = eval_deterministic(
        mapk1, mapk1.base_rates(), third_rate(mapk1), "K3", "K",
        n_draws=10_000, seed=22, transform=NoiseKind.BINOMIAL,
    )
    small_vals = np.array([e.value for e in small.effects])
    big_vals = np.array([e.value for e in big.effects])
    assert big_vals.std() > 0
    band = 3 * big_vals.std(ddof=1) / np.sqrt(len(small_vals))
    assert abs(small_vals.mean() - big_vals.mean()) < band


def test_effects_csv_round_trip(tmp_path, mapk1):
    res = eval_deterministic(mapk1, mapk1.base_rates(), third_rate(mapk1), "K3", "K", 10, seed=0)
    out = tmp_path / "effects.csv"
    write_effects_csv(out, res.effects, mapk1, seed=0, delta_true=res.delta_true)
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# eq-scm 0.1.0 model=")
    assert lines[1] == "source,seed_or_draw,value"
    assert len(lines) == 2 + 10
    value = float(lines[2].split(",")[2])
    assert value == res.effects[0].value
