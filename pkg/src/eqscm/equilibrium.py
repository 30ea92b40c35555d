"""Closed-form equilibrium of the network and its deterministic mean dynamics.

For a first-order network the expected active count of species ``i`` obeys

    dm_i/dt = A_i(parents) * (T_i - m_i) - B_i(parents) * m_i

where ``A_i`` / ``B_i`` are the total activation and deactivation mass-action
rates per particle.  Holding parents at their own equilibrium values, the
limit of ``m_i / T_i`` is the activation probability

    theta_i = A_i / (A_i + B_i)

and the count itself is Binomial(T_i, theta_i), one theta per species over
the regulation DAG.  ``equilibrium_means`` propagates the plug-in chain
``m_i = T_i * theta_i(parent means)`` in topological order, which is the
deterministic ground truth used throughout the evaluation harness;
``mean_trajectory`` integrates the coupled mean ODEs with fixed-step RK4 for
the transient picture.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DegenerateTheta, StepTooLarge
from .network import (
    Dag,
    ReactionKind,
    ReactionNetwork,
    ensure_valid,
    regulation_dag,
)
from .ssa import Trajectory


@dataclass(frozen=True)
class ThetaFunction:
    """Equilibrium activation probability of one species.

    ``activators`` and ``inhibitors`` are ``(rate, parent)`` terms; a parent
    of ``None`` is the constant factor 1 (auto-deactivation).  The value is
    monotone nondecreasing in every activator parent and nonincreasing in
    every inhibitor parent.
    """

    target: str
    activators: tuple[tuple[float, str | None], ...]
    inhibitors: tuple[tuple[float, str | None], ...]

    def masses(self, values: Mapping[str, float]) -> tuple[float, float]:
        act = sum(r * (1.0 if p is None else float(values[p])) for r, p in self.activators)
        inh = sum(r * (1.0 if p is None else float(values[p])) for r, p in self.inhibitors)
        return act, inh

    def __call__(self, values: Mapping[str, float]) -> float:
        act, inh = self.masses(values)
        total = act + inh
        if total == 0.0:
            raise DegenerateTheta(
                f"total reaction mass for {self.target!r} is zero at this evaluation point"
            )
        return act / total

    def columns(self, values: Mapping[str, "np.ndarray | float"]) -> np.ndarray:
        """Vectorized evaluation over parallel parent-value columns."""
        act = 0.0
        inh = 0.0
        for r, p in self.activators:
            act = act + (r if p is None else r * np.asarray(values[p], dtype=float))
        for r, p in self.inhibitors:
            inh = inh + (r if p is None else r * np.asarray(values[p], dtype=float))
        total = np.asarray(act + inh, dtype=float)
        if np.any(total == 0.0):
            raise DegenerateTheta(
                f"total reaction mass for {self.target!r} is zero at an evaluation point"
            )
        return np.asarray(act, dtype=float) / total


@dataclass(frozen=True)
class EquilibriumModel:
    """Per-species thetas plus the entailed generative factorization."""

    network: ReactionNetwork
    dag: Dag
    species_order: tuple[str, ...]  # topological, species only
    thetas: Mapping[str, ThetaFunction]
    family: str = "binomial"  # or "poisson"
    lambdas: Mapping[str, float] | None = None  # Poisson means at theta == 1

    def input_values(self) -> dict[str, float]:
        return {i.name: float(i.value) for i in self.network.inputs}

    def total(self, name: str) -> int:
        return self.network.total(name)

    def scale(self, name: str) -> float:
        """Expected count at theta == 1: T for binomial, lambda for Poisson."""
        if self.family == "poisson":
            assert self.lambdas is not None
            return float(self.lambdas[name])
        return float(self.network.total(name))


def derive_equilibrium(
    network: ReactionNetwork,
    family: str = "binomial",
    lambdas: Mapping[str, float] | None = None,
) -> EquilibriumModel:
    """Build the closed-form equilibrium model of a validated acyclic network.

    ``family="poisson"`` swaps the Binomial(T, theta) factors for
    Poisson(lambda * theta) ones (unknown-total variant); ``lambdas``
    defaults to each species' total.
    """
    ensure_valid(network)
    dag = regulation_dag(network)
    species = set(network.species_names())
    order = tuple(n for n in dag.order if n in species)
    thetas: dict[str, ThetaFunction] = {}
    for name in order:
        act: list[tuple[float, str | None]] = []
        inh: list[tuple[float, str | None]] = []
        for rx in network.reactions:
            if rx.target != name:
                continue
            (act if rx.kind is ReactionKind.ACTIVATE else inh).append((rx.rate, rx.regulator))
        thetas[name] = ThetaFunction(name, tuple(act), tuple(inh))
    if family not in ("binomial", "poisson"):
        raise ValueError(f"unknown family {family!r}")
    lam = None
    if family == "poisson":
        lam = dict(lambdas) if lambdas else {s.name: float(s.total) for s in network.species}
    return EquilibriumModel(network, dag, order, thetas, family, lam)


def equilibrium_means(model: EquilibriumModel) -> dict[str, float]:
    """Plug-in mean chain: m_i = scale_i * theta_i(parent means), in topological order."""
    values: dict[str, float] = model.input_values()
    out: dict[str, float] = {}
    for name in model.species_order:
        m = model.scale(name) * model.thetas[name](values)
        values[name] = m
        out[name] = m
    return out


def _ode_rhs(model: EquilibriumModel, values: dict[str, float]) -> dict[str, float]:
    rhs = {}
    for name in model.species_order:
        act, inh = model.thetas[name].masses(values)
        t_i = model.total(name)
        m = values[name]
        rhs[name] = act * (t_i - m) - inh * m
    return rhs


def _stability_scale(model: EquilibriumModel) -> float:
    """Largest per-particle relaxation rate A_i + B_i along the mean chain.

    Parent values are taken at the equilibrium means when they exist, else
    at their worst-case caps (totals / input values).
    """
    try:
        values: dict[str, float] = model.input_values()
        values.update(equilibrium_means(model))
    except DegenerateTheta:
        values = model.input_values()
        values.update({s.name: float(s.total) for s in model.network.species})
    worst = 0.0
    for name in model.species_order:
        act, inh = model.thetas[name].masses(values)
        worst = max(worst, act + inh)
    return worst


def mean_trajectory(network: ReactionNetwork, t_end: float, dt: float) -> Trajectory:
    """Integrate the coupled mean ODEs with fixed-step RK4.

    Raises :class:`StepTooLarge` when ``dt`` exceeds the heuristic guard of
    0.1 divided by the largest per-particle relaxation rate; that is far
    inside the true RK4 stability region, chosen so accuracy failures
    surface as errors instead of plausible-looking curves.
    """
    if not t_end > 0 or not dt > 0:
        raise StepTooLarge(f"t_end and dt must be positive, got {t_end}, {dt}")
    model = derive_equilibrium(network)
    scale = _stability_scale(model)
    if scale > 0 and dt > 0.1 / scale:
        raise StepTooLarge(
            f"dt={dt} exceeds stability guard {0.1 / scale:.6g} (rate scale {scale:.6g})"
        )
    names = model.species_order
    inputs = model.input_values()

    def rhs(vec: np.ndarray) -> np.ndarray:
        values = dict(inputs)
        values.update(zip(names, vec.tolist()))
        d = _ode_rhs(model, values)
        return np.asarray([d[n] for n in names])

    sp_map = network.species_map()
    state = np.asarray([float(sp_map[n].init_active) for n in names])
    n_steps = int(np.ceil(round(t_end / dt, 9)))
    times = [0.0]
    states = [state.copy()]
    t = 0.0
    for k in range(n_steps):
        step = min(dt, t_end - t)
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * step * k1)
        k3 = rhs(state + 0.5 * step * k2)
        k4 = rhs(state + step * k3)
        state = state + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = min(t + step, t_end)
        times.append(t)
        states.append(state.copy())

    # report in network declaration order for consistency with the simulator
    decl = network.species_names()
    cols = [names.index(n) for n in decl]
    arr = np.asarray(states)[:, cols]
    return Trajectory(
        times=np.asarray(times),
        states=arr,
        species=decl,
        seed=None,
        mode="mean",
    )
