from fractions import Fraction

import numpy as np
import pytest

from eqscm import AUTO, InputSignal, Reaction, ReactionKind, ReactionNetwork, Species, scaled_rates, with_rates
from eqscm.batch import ssa_end_states
from eqscm.equilibrium import derive_equilibrium, equilibrium_means, mean_trajectory
from eqscm.errors import DegenerateTheta, StepTooLarge

ACT = ReactionKind.ACTIVATE
DEACT = ReactionKind.DEACTIVATE


# Independent oracle: the MAPK mean chain evaluated with exact fractions.
def mapk_chain(a3, i3, a2, i2, ak, ik, e1=1, T=100):
    th3 = Fraction(a3) * e1 / (Fraction(a3) * e1 + Fraction(i3))
    m3 = T * th3
    th2 = Fraction(a2) * m3 / (Fraction(a2) * m3 + Fraction(i2))
    m2 = T * th2
    thk = Fraction(ak) * m2 / (Fraction(ak) * m2 + Fraction(ik))
    return {"K3": float(m3), "K2": float(m2), "K": float(T * thk)}


EXP1 = ("1/10", "1/10", "1/10", "2", "1/10", "1")


def test_mapk_exp1_thetas(mapk1):
    model = derive_equilibrium(mapk1)
    inputs = model.input_values()
    assert model.thetas["K3"](inputs) == pytest.approx(0.5)
    assert model.thetas["K2"]({**inputs, "K3": 50.0}) == pytest.approx(5 / 7)
    assert model.thetas["K"]({**inputs, "K2": 100 * 5 / 7}) == pytest.approx(0.8772, abs=1e-4)


def test_toy_symmetric_theta(toy):
    model = derive_equilibrium(toy)
    assert model.thetas["Y"]({"X1": 37.0, "X2": 37.0}) == pytest.approx(0.5)


def test_igf_sos_theta(igf):
    model = derive_equilibrium(igf)
    th = model.thetas["SOS"](model.input_values())
    assert th == pytest.approx(0.42 / 0.92)
    assert th == pytest.approx(0.4565, abs=1e-4)


def test_equilibrium_means_exp1(mapk1):
    means = equilibrium_means(derive_equilibrium(mapk1))
    oracle = mapk_chain(*EXP1)
    for k, v in oracle.items():
        assert means[k] == pytest.approx(v, abs=1e-9)
    assert means["K2"] == pytest.approx(71.43, abs=0.01)
    assert means["K"] == pytest.approx(87.72, abs=0.01)


def test_equilibrium_means_exp1_third_rate(mapk1):
    rates = scaled_rates(mapk1.base_rates(), "activate:K3:E1", Fraction(1, 3))
    means = equilibrium_means(derive_equilibrium(with_rates(mapk1, rates)))
    oracle = mapk_chain(Fraction(1, 30), *EXP1[1:])
    for k, v in oracle.items():
        assert means[k] == pytest.approx(v, abs=1e-9)
    assert means["K3"] == pytest.approx(25.0)
    assert means["K2"] == pytest.approx(55.56, abs=0.01)
    assert means["K"] == pytest.approx(84.75, abs=0.01)


def test_zero_activator_mean_is_zero():
    n = ReactionNetwork(
        "z",
        (Species("A", 10),),
        (InputSignal("E", 0),),
        (Reaction(ACT, "A", "E", 1.0), Reaction(DEACT, "A", AUTO, 0.5)),
    )
    assert equilibrium_means(derive_equilibrium(n))["A"] == 0.0


def test_degenerate_theta_raises():
    # no auto term and the only activator/inhibitor parents sit at zero
    n = ReactionNetwork(
        "d",
        (Species("A", 10), Species("B", 10)),
        (InputSignal("E", 0),),
        (
            Reaction(ACT, "A", "E", 1.0),
            Reaction(DEACT, "A", AUTO, 0.5),
            Reaction(ACT, "B", "A", 1.0),
            Reaction(DEACT, "B", "A", 1.0),
        ),
    )
    with pytest.raises(DegenerateTheta):
        equilibrium_means(derive_equilibrium(n))


def test_rk4_matches_analytic_root_solution(mapk1):
    # independent oracle: dm/dt = a(T - m) - b m with constant input solves to
    # m(t) = m_inf + (m0 - m_inf) exp(-(a + b) t)
    traj = mean_trajectory(mapk1, t_end=100.0, dt=0.01)
    k3 = traj.states[:, traj.species.index("K3")]
    lam = 0.1 * 1 + 0.1
    m_inf = 100.0 * 0.5
    analytic = m_inf * (1.0 - np.exp(-lam * traj.times))
    assert np.abs(k3 - analytic).max() < 1e-6


def test_mean_trajectory_limit_is_fixed_point(mapk1, igf, toy):
    for net in (mapk1, igf, toy):
        model = derive_equilibrium(net)
        means = equilibrium_means(model)
        traj = mean_trajectory(net, t_end=100.0, dt=0.01)
        final = dict(zip(traj.species, traj.states[-1]))
        for name, m in means.items():
            assert final[name] == pytest.approx(m, abs=1e-3), (net.name, name)


def test_mean_trajectory_constant_at_equilibrium_init(mapk1):
    means = equilibrium_means(derive_equilibrium(mapk1))
    start = ReactionNetwork(
        mapk1.name,
        tuple(Species(s.name, s.total, round(means[s.name])) for s in mapk1.species),
        mapk1.inputs,
        mapk1.reactions,
    )
    # integer init is not exactly the fixed point; drift must stay below 1 count
    traj = mean_trajectory(start, t_end=50.0, dt=0.01)
    drift = np.abs(traj.states - traj.states[0]).max()
    assert drift < 1.0


def test_step_guard(mapk1):
    with pytest.raises(StepTooLarge):
        mean_trajectory(mapk1, t_end=10.0, dt=0.5)
    with pytest.raises(StepTooLarge):
        mean_trajectory(mapk1, t_end=10.0, dt=-1.0)


def test_theta_monotonicity_property(igf):
    model = derive_equilibrium(igf)
    rng = np.random.default_rng(2024)
    names = model.species_order
    for _ in range(400):
        point = {**model.input_values(), **{n: rng.uniform(0.0, 100.0) for n in names}}
        target = names[int(rng.integers(len(names)))]
        theta = model.thetas[target]
        base = theta(point)
        for rate, parent in theta.activators:
            if parent is None or parent in model.input_values():
                continue
            bumped = dict(point)
            bumped[parent] += rng.uniform(0.5, 20.0)
            assert theta(bumped) > base
        for rate, parent in theta.inhibitors:
            if parent is None or parent in model.input_values():
                continue
            bumped = dict(point)
            bumped[parent] += rng.uniform(0.5, 20.0)
            assert theta(bumped) < base


def test_mean_chain_matches_ssa_ensemble(mapk1, igf):
    # the plug-in chain ignores the Jensen gap E[theta(X)] vs theta(E[X]),
    # so this is a tolerance-level statement, not exact equality
    for net in (mapk1, igf):
        means = equilibrium_means(derive_equilibrium(net))
        ends = ssa_end_states(net, None, 100.0, list(range(500)))
        for j, name in enumerate(net.species_names()):
            sample = ends[:, j]
            se = sample.std(ddof=1) / np.sqrt(len(sample))
            assert abs(sample.mean() - means[name]) < 3 * se + 1e-9, (net.name, name)


def test_poisson_family_means(toy):
    model = derive_equilibrium(toy, family="poisson", lambdas={"X1": 50, "X2": 50, "Y": 200})
    means = equilibrium_means(model)
    assert means["X1"] == pytest.approx(25.0)  # lambda 50 * theta 0.5
    assert means["Y"] == pytest.approx(200 * 0.5)  # thetas of X1/X2 parents are equal
