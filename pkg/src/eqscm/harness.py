"""Evaluation protocols: do the SCM counterfactuals track the jump process?

Three protocols, each emitting causal-effect samples (counterfactual minus
observed/baseline query value at equilibrium):

* ``eval_deterministic`` — observe the deterministic mean chain under the
  base rates, intervene at the alternative rates' equilibrium value, and
  compare SCM counterfactual draws against the deterministic ground truth
  ``delta_true`` (alternative-chain minus base-chain query value).
* ``eval_stochastic`` — per seed, run a common-random-number pair of exact
  simulations under the two rate sets (their end-state difference is the
  simulated causal effect), and in parallel condition the SCM on the base
  end state and draw one counterfactual.  Consistency means the two effect
  histograms overlap.
* ``eval_misspecification`` — repeatedly re-estimate the effect when one
  rate is mis-specified (drawn uniformly from an interval instead of its
  true value): the SCM counterfactual conditions on data from the true
  process, a direct simulation can only use the wrong rates.  Reports
  per-repetition medians and the average absolute median gaps.

Repetitions/seed batches fan out to a process pool when ``jobs > 1``; every
work item is self-contained and results are reassembled in seed order, so
the outputs are a pure function of the seed arguments either way.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import __version__
from .batch import ssa_end_states
from .equilibrium import derive_equilibrium, equilibrium_means
from .errors import ConfigError
from .network import ReactionNetwork, model_hash, scaled_rates, with_rates
from .scm import NoiseKind, Scm, build_scm, counterfactual, counterfactual_batch

SOURCE_SCM = "scm-counterfactual"
SOURCE_SSA = "coupled-ssa"
SOURCE_TRUTH = "deterministic-truth"


@dataclass(frozen=True)
class EffectSample:
    value: float
    source: str
    index: int


@dataclass(frozen=True)
class ScaleRule:
    """Picklable rates -> rates transform: multiply one rate by a factor."""

    key: str
    factor: float

    def __call__(self, rates: Mapping[str, float]) -> dict[str, float]:
        return scaled_rates(rates, self.key, self.factor)


@dataclass(frozen=True)
class MisspecConfig:
    """One mis-specified rate: its key, the uniform interval it is drawn
    from per repetition, the repetition count, and the master seed."""

    rate_key: str
    lo: float
    hi: float
    repetitions: int = 50
    seed: int = 0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigError(f"perturbation interval must satisfy lo < hi, got [{self.lo}, {self.hi}]")
        if self.lo <= 0:
            raise ConfigError("perturbed rates must stay positive; lo must be > 0")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")


@dataclass
class DetEvalResult:
    delta_true: float
    effects: list[EffectSample]
    observation: dict[str, float]
    intervention_value: float


@dataclass
class StochEvalResult:
    effects_ssa: list[EffectSample]
    effects_scm: list[EffectSample]
    intervention_value: float

    def mean_gap(self) -> float:
        ssa = np.mean([e.value for e in self.effects_ssa])
        scm = np.mean([e.value for e in self.effects_scm])
        return float(abs(scm - ssa))


@dataclass
class MisspecRep:
    median_true: float
    median_scm: float
    median_sim: float
    perturbed_rate: float


@dataclass
class MisspecReport:
    reps: list[MisspecRep]
    avg_gap_scm: float
    avg_gap_sim: float
    scm_closer_count: int
    config: MisspecConfig
    seed_manifest: dict[str, int] = field(default_factory=dict)

    def to_json(self, **meta) -> str:
        payload = {
            "meta": {
                "tool": f"eq-scm {__version__}",
                "perturbed_rate_key": self.config.rate_key,
                "perturbation_interval": [self.config.lo, self.config.hi],
                **meta,
                **self.seed_manifest,
            },
            "reps": [asdict(r) for r in self.reps],
            "avg_gap_scm": self.avg_gap_scm,
            "avg_gap_sim": self.avg_gap_sim,
            "scm_closer_count": self.scm_closer_count,
        }
        return json.dumps(payload, indent=2)


def _obs_for_transform(obs: Mapping[str, float], transform: NoiseKind) -> dict[str, float]:
    # inverse-CDF abduction needs integer counts; the mean chain is real-valued
    if transform is NoiseKind.GAUSSIAN:
        return dict(obs)
    return {k: float(round(v)) for k, v in obs.items()}


def _obs_matrix(scm: Scm, states: np.ndarray, species: Sequence[str]) -> np.ndarray:
    cols = [list(species).index(name) for name in scm.species_order]
    return states[:, cols].astype(float)


def eval_deterministic(
    network: ReactionNetwork,
    rates: Mapping[str, float],
    rates_prime: Mapping[str, float],
    intervene: str,
    query: str,
    n_draws: int = 1000,
    seed: int = 0,
    transform: NoiseKind = NoiseKind.GAUSSIAN,
) -> DetEvalResult:
    """Deterministic protocol; see module docstring."""
    base = derive_equilibrium(with_rates(network, rates))
    alt = derive_equilibrium(with_rates(network, rates_prime))
    x = equilibrium_means(base)
    x_prime = equilibrium_means(alt)
    delta_true = x_prime[query] - x[query]
    scm = build_scm(base, transform)
    obs = _obs_for_transform(x, transform)
    draws = counterfactual(scm, obs, (intervene, x_prime[intervene]), query, n_draws, seed)
    effects = [EffectSample(float(v - x[query]), SOURCE_SCM, i) for i, v in enumerate(draws)]
    return DetEvalResult(float(delta_true), effects, dict(x), float(x_prime[intervene]))


def _pair_chunk(args):
    network, rates, rates_prime, t_end, seeds = args
    a = ssa_end_states(network, rates, t_end, seeds)
    b = ssa_end_states(network, rates_prime, t_end, seeds)
    return a, b


def _chunks(items: Sequence, n: int) -> list[list]:
    n = max(1, min(n, len(items)))
    size = (len(items) + n - 1) // n
    return [list(items[i : i + size]) for i in range(0, len(items), size)]


def eval_stochastic(
    network: ReactionNetwork,
    rates: Mapping[str, float],
    rates_prime: Mapping[str, float],
    intervene: str,
    query: str,
    seeds: Sequence[int],
    scm_seed: int = 0,
    t_end: float = 100.0,
    transform: NoiseKind = NoiseKind.GAUSSIAN,
    jobs: int = 1,
) -> StochEvalResult:
    """Stochastic protocol; see module docstring.

    The intervention value handed to the SCM is the deterministic
    equilibrium of the alternative rates (not the per-seed simulated one).
    """
    seeds = list(seeds)
    work = [(network, dict(rates), dict(rates_prime), t_end, c) for c in _chunks(seeds, jobs)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_pair_chunk, work))
    else:
        parts = [_pair_chunk(w) for w in work]
    ends_a = np.concatenate([p[0] for p in parts])
    ends_b = np.concatenate([p[1] for p in parts])

    species = network.species_names()
    qcol = species.index(query)
    delta_ssa = ends_b[:, qcol] - ends_a[:, qcol]

    base = derive_equilibrium(with_rates(network, rates))
    x_det_prime = equilibrium_means(derive_equilibrium(with_rates(network, rates_prime)))
    scm = build_scm(base, transform)
    obs_matrix = _obs_matrix(scm, ends_a, species)
    draws = counterfactual_batch(
        scm, obs_matrix, (intervene, x_det_prime[intervene]), query, seed=scm_seed
    )
    delta_scm = draws - ends_a[:, qcol]

    effects_ssa = [
        EffectSample(float(v), SOURCE_SSA, s) for s, v in zip(seeds, delta_ssa)
    ]
    effects_scm = [
        EffectSample(float(v), SOURCE_SCM, s) for s, v in zip(seeds, delta_scm)
    ]
    return StochEvalResult(effects_ssa, effects_scm, float(x_det_prime[intervene]))


def _rep_seed_sequences(master_seed: int, rep: int) -> dict[str, np.random.SeedSequence]:
    root = np.random.SeedSequence(entropy=master_seed, spawn_key=(rep,))
    names = ("perturb", "observation", "true_pairs", "direct_base", "direct_alt", "scm")
    return dict(zip(names, root.spawn(len(names))))


def _seed_ints(ss: np.random.SeedSequence, n: int) -> list[int]:
    return [int(v) for v in ss.generate_state(n, dtype=np.uint64)]


def _misspec_rep(args) -> MisspecRep:
    (network, misspec, rule, intervene, query, s_per_rep, n_direct, t_end, transform, rep) = args
    seq = _rep_seed_sequences(misspec.seed, rep)
    rates_true = network.base_rates()
    rates_true_prime = rule(rates_true)

    perturbed = float(np.random.default_rng(seq["perturb"]).uniform(misspec.lo, misspec.hi))
    rates_mis = dict(rates_true)
    rates_mis[misspec.rate_key] = perturbed
    rates_mis_prime = rule(rates_mis)

    species = network.species_names()
    qcol = species.index(query)

    true_seeds = _seed_ints(seq["true_pairs"], s_per_rep)
    ends_a = ssa_end_states(network, rates_true, t_end, true_seeds)
    ends_b = ssa_end_states(network, rates_true_prime, t_end, true_seeds)
    median_true = float(np.median(ends_b[:, qcol] - ends_a[:, qcol]))

    obs_state = ssa_end_states(network, rates_true, t_end, _seed_ints(seq["observation"], 1))[0]
    observation = dict(zip(species, (float(v) for v in obs_state)))

    mis_model = derive_equilibrium(with_rates(network, rates_mis))
    scm = build_scm(mis_model, transform)
    x_det_prime = equilibrium_means(derive_equilibrium(with_rates(network, rates_mis_prime)))
    draws = counterfactual(
        scm,
        observation,
        (intervene, x_det_prime[intervene]),
        query,
        n=s_per_rep,
        seed=_seed_ints(seq["scm"], 1)[0],
    )
    median_scm = float(np.median(draws - observation[query]))

    sim_a = ssa_end_states(network, rates_mis, t_end, _seed_ints(seq["direct_base"], n_direct))
    sim_b = ssa_end_states(network, rates_mis_prime, t_end, _seed_ints(seq["direct_alt"], n_direct))
    median_sim = float(np.median(sim_b[:, qcol] - sim_a[:, qcol]))

    return MisspecRep(median_true, median_scm, median_sim, perturbed)


def eval_misspecification(
    network: ReactionNetwork,
    misspec: MisspecConfig,
    rates_prime_rule: Callable[[Mapping[str, float]], dict[str, float]],
    intervene: str,
    query: str,
    seeds_per_rep: int = 200,
    t_end: float = 100.0,
    transform: NoiseKind = NoiseKind.GAUSSIAN,
    jobs: int = 1,
    n_direct: int | None = None,
) -> MisspecReport:
    """Misspecification study; see module docstring.

    Each repetition draws the mis-specified rate from Uniform(lo, hi) — the
    case-study intervals start at the true rate value, so the draw replaces
    the rate rather than adding to it — then holds it fixed within the
    repetition.  ``n_direct`` (default ``seeds_per_rep``) sets how many
    uncoupled simulations compose the direct-simulation effect histogram.
    ``rates_prime_rule`` must be picklable when ``jobs > 1``
    (:class:`ScaleRule` is).
    """
    if misspec.rate_key not in network.base_rates():
        raise ConfigError(f"perturbed rate {misspec.rate_key!r} does not exist in the network")
    n_direct = seeds_per_rep if n_direct is None else n_direct
    work = [
        (network, misspec, rates_prime_rule, intervene, query, seeds_per_rep, n_direct,
         t_end, transform, rep)
        for rep in range(misspec.repetitions)
    ]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reps = list(pool.map(_misspec_rep, work))
    else:
        reps = [_misspec_rep(w) for w in work]

    gaps_scm = [abs(r.median_scm - r.median_true) for r in reps]
    gaps_sim = [abs(r.median_sim - r.median_true) for r in reps]
    closer = sum(1 for s, d in zip(gaps_scm, gaps_sim) if s < d)
    return MisspecReport(
        reps=reps,
        avg_gap_scm=float(np.mean(gaps_scm)),
        avg_gap_sim=float(np.mean(gaps_sim)),
        scm_closer_count=closer,
        config=misspec,
        seed_manifest={"master_seed": misspec.seed, "repetitions": misspec.repetitions},
    )


# ---------------------------------------------------------------------------
# artifacts


def write_effects_csv(out, samples: Sequence[EffectSample], network: ReactionNetwork, **meta) -> None:
    lines = [f"# eq-scm {__version__} model={model_hash(network)} "
             + " ".join(f"{k}={v}" for k, v in meta.items())]
    lines.append("source,seed_or_draw,value")
    for s in samples:
        lines.append(f"{s.source},{s.index},{s.value!r}")
    text = "\n".join(lines) + "\n"
    if hasattr(out, "write"):
        out.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)
