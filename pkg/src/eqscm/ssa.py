"""Exact stochastic simulation of the reaction-network jump process.

This is the Gillespie direct method: at state ``x`` the total hazard
``H(x)`` sets an exponential waiting time, one reaction is chosen with
probability proportional to its hazard, and the target's active count moves
by +/-1.  Randomness comes from a PCG64 generator (``numpy.random.PCG64``)
seeded with the configured 64-bit seed and nothing else, so a trajectory is
a pure function of (network, rates, config).  Coupled pairs rerun the same
seed under two rate sets; the coupling is seed-level, not event-aligned.

The waiting-time/selection draws consume exactly two uniforms per step, in
blocks of ``_BLK``.  :mod:`eqscm.batch` replays the identical consumption
pattern across many seeds at once; tests hold the two engines bit-identical.
"""

from __future__ import annotations

import csv
from contextlib import nullcontext
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError, RateSetMismatch
from .network import ReactionNetwork, ReactionKind, ensure_valid, model_hash, with_rates

_BLK = 4096  # uniforms per refill; even so wait/selection pairs never straddle

RECORD_MODES = ("full", "end", "grid")


@dataclass(frozen=True)
class SimConfig:
    """Simulation horizon, recording mode, and seed.

    ``record`` is one of ``full`` (every event), ``end`` (initial and final
    state only) or ``grid`` (states sampled every ``grid_dt`` seconds).
    """

    t_end: float
    seed: int = 0
    record: str = "full"
    grid_dt: float | None = None

    def __post_init__(self):
        if not self.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if self.record not in RECORD_MODES:
            raise ConfigError(f"record must be one of {RECORD_MODES}, got {self.record!r}")
        if self.record == "grid" and not (self.grid_dt and self.grid_dt > 0):
            raise ConfigError("grid recording requires grid_dt > 0")


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped active-count states (inputs excluded), tagged with provenance."""

    times: np.ndarray
    states: np.ndarray  # shape (len(times), n_species)
    species: tuple[str, ...]
    seed: int | None
    mode: str  # "stochastic" | "mean"

    def end_state(self) -> np.ndarray:
        return self.states[-1]

    def end_values(self) -> dict[str, float]:
        return dict(zip(self.species, self.states[-1].tolist()))


@dataclass(frozen=True)
class CompiledHazards:
    """Flat mass-action form: hazard_r = coef_r * state[reg_r] * occupancy_r.

    Input-signal regulators are constant, so their values are folded into the
    coefficient; ``reg`` is then -1.  ``vacant`` selects ``T - x`` vs ``x``
    occupancy and doubles as the +/-1 stoichiometry on the target.
    """

    coef: np.ndarray
    reg: np.ndarray  # species index, or -1 for constant factor 1
    tgt: np.ndarray  # species index whose occupancy is consumed / count moves
    vacant: np.ndarray  # bool; True: occupancy T - x and delta +1
    totals: np.ndarray
    init: np.ndarray
    species: tuple[str, ...]


def compile_hazards(network: ReactionNetwork, rates: Mapping[str, float] | None = None) -> CompiledHazards:
    net = network if rates is None else with_rates(network, rates)
    ensure_valid(net)
    order = {name: i for i, name in enumerate(net.species_names())}
    inputs = {i.name: i.value for i in net.inputs}
    coef, reg, tgt, vac = [], [], [], []
    for rx in net.reactions:
        c = rx.rate
        r = -1
        if rx.regulator is not None:
            if rx.regulator in inputs:
                c *= inputs[rx.regulator]
            else:
                r = order[rx.regulator]
        coef.append(c)
        reg.append(r)
        tgt.append(order[rx.target])
        vac.append(rx.kind is ReactionKind.ACTIVATE)
    return CompiledHazards(
        coef=np.asarray(coef, dtype=float),
        reg=np.asarray(reg, dtype=np.int64),
        tgt=np.asarray(tgt, dtype=np.int64),
        vacant=np.asarray(vac, dtype=bool),
        totals=np.asarray([s.total for s in net.species], dtype=float),
        init=np.asarray([s.init_active for s in net.species], dtype=float),
        species=net.species_names(),
    )


def simulate_ssa(
    network: ReactionNetwork, config: SimConfig, rates: Mapping[str, float] | None = None
) -> Trajectory:
    """Run one exact trajectory.  Deterministic given (network, rates, config).

    If the total hazard hits zero the state is absorbing and the trajectory
    is extended flat to ``t_end``.
    """
    ch = compile_hazards(network, rates)
    rng = np.random.Generator(np.random.PCG64(config.seed))
    R = len(ch.coef)
    coef = ch.coef.tolist()
    reg = ch.reg.tolist()
    tgt = ch.tgt.tolist()
    vac = ch.vacant.tolist()
    tot = ch.totals.tolist()
    x = ch.init.tolist()
    t = 0.0
    t_end = config.t_end

    buf = rng.random(_BLK)
    waits = (-np.log1p(-buf)).tolist()
    sels = buf.tolist()
    cur = 0

    full = config.record == "full"
    grid = config.record == "grid"
    times: list[float] = [0.0]
    states: list[list[float]] = [list(x)]
    if grid:
        gdt = float(config.grid_dt)
        next_k = 1  # grid index of the next sample to emit

    while True:
        H = 0.0
        h = []
        for r in range(R):
            ri = reg[r]
            rv = 1.0 if ri < 0 else x[ri]
            ti = tgt[r]
            ov = (tot[ti] - x[ti]) if vac[r] else x[ti]
            hr = coef[r] * rv * ov
            h.append(hr)
            H = H + hr
        if H <= 0.0:
            break  # absorbing state
        if cur >= _BLK:
            buf = rng.random(_BLK)
            waits = (-np.log1p(-buf)).tolist()
            sels = buf.tolist()
            cur = 0
        w = waits[cur]
        u2 = sels[cur + 1]
        cur += 2
        t_new = t + w / H
        if t_new >= t_end:
            break
        if grid:
            while next_k * gdt < t_new and next_k * gdt <= t_end:
                times.append(next_k * gdt)
                states.append(list(x))
                next_k += 1
        t = t_new
        target = u2 * H
        acc = 0.0
        sel = R - 1
        for r in range(R):
            acc = acc + h[r]
            if target < acc:
                sel = r
                break
        if h[sel] > 0.0:
            x[tgt[sel]] += 1.0 if vac[sel] else -1.0
            if full:
                if t > times[-1]:
                    times.append(t)
                    states.append(list(x))
                else:  # zero waiting time from a u == 0 draw; keep times strict
                    states[-1] = list(x)

    if grid:
        while next_k * gdt <= t_end:
            times.append(next_k * gdt)
            states.append(list(x))
            next_k += 1
    if times[-1] < t_end:
        times.append(t_end)
        states.append(list(x))

    return Trajectory(
        times=np.asarray(times),
        states=np.asarray(states, dtype=np.int64),
        species=ch.species,
        seed=config.seed,
        mode="stochastic",
    )


def simulate_coupled_pair(
    network: ReactionNetwork,
    rates_a: Mapping[str, float],
    rates_b: Mapping[str, float],
    config: SimConfig,
) -> tuple[Trajectory, Trajectory]:
    """Simulate the same seed under two rate sets (common-random-number pair)."""
    if set(rates_a) != set(rates_b):
        raise RateSetMismatch(
            f"rate assignments differ: {sorted(set(rates_a) ^ set(rates_b))}"
        )
    return (
        simulate_ssa(network, config, rates=rates_a),
        simulate_ssa(network, config, rates=rates_b),
    )


# ---------------------------------------------------------------------------
# CSV artifacts


def metadata_line(network: ReactionNetwork, **fields) -> str:
    parts = [f"# eq-scm {__version__}", f"model={model_hash(network)}"]
    parts += [f"{k}={v}" for k, v in fields.items()]
    return " ".join(parts)


def _open_out(path_or_file):
    if hasattr(path_or_file, "write"):
        return nullcontext(path_or_file)
    return open(path_or_file, "w", newline="")


def write_trajectory_csv(out, trajectory: Trajectory, network: ReactionNetwork, **meta) -> None:
    with _open_out(out) as fh:
        fh.write(metadata_line(network, mode=trajectory.mode, seed=trajectory.seed, **meta) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["time", *trajectory.species])
        for t, row in zip(trajectory.times, trajectory.states):
            writer.writerow([f"{t:.10g}", *(int(v) if trajectory.mode == "stochastic" else f"{v:.10g}" for v in row)])


def write_end_states_csv(
    out,
    seeds: Sequence[int],
    states: np.ndarray,
    species: Iterable[str],
    network: ReactionNetwork,
    **meta,
) -> None:
    with _open_out(out) as fh:
        fh.write(metadata_line(network, seeds=f"{seeds[0]}..{seeds[-1]}", **meta) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["seed", *species])
        for seed, row in zip(seeds, states):
            writer.writerow([seed, *map(int, row)])
