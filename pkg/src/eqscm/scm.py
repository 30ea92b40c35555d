"""Structural causal model over the equilibrium factorization.

Each species gets one structural assignment driven by an independent noise
variable, in one of three monotone forms:

* ``binomial``: N ~ Uniform(0,1), X = F^-1_Binom(N; T, theta(parents)) —
  entails the equilibrium distribution exactly and is monotone in both the
  noise and the parent-induced shift of theta.
* ``gaussian``: N ~ Normal(0,1), X = theta*T + N*sqrt(T*theta*(1-theta)) —
  the differentiable surrogate via the normal approximation plus the
  reparameterization trick; real-valued, not clamped.
* ``poisson``: N ~ Uniform(0,1), X = F^-1_Pois(N; lambda*theta) — the
  unknown-total variant.

Because every assignment is a monotone function of a single noise variable,
abduction is available in closed form: inverting the Gaussian assignment
gives a point-mass noise posterior, and inverting an inverse-CDF assignment
gives the exact uniform interval between neighbouring CDF values.  That
replaces any approximate posterior inference with the exact answer, and
makes counterfactuals reproduce observations identically under a null
intervention.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .distributions import (
    _lgamma_table,
    _poisson_support,
    binom_cdf,
    binom_ppf_vec,
    poisson_cdf,
    poisson_ppf_vec,
)
from .equilibrium import EquilibriumModel, derive_equilibrium, equilibrium_means
from .errors import (
    BoundaryTheta,
    ConfigError,
    IncompleteObservation,
    InfeasibleIntervention,
    InterventionOnInput,
    ObservationOutOfRange,
    UnknownSpecies,
)
from .network import ReactionKind, ReactionNetwork


class NoiseKind(enum.Enum):
    BINOMIAL = "binomial"
    GAUSSIAN = "gaussian"
    POISSON = "poisson"


@dataclass(frozen=True)
class PointMass:
    value: float


@dataclass(frozen=True)
class UniformInterval:
    lo: float
    hi: float


@dataclass(frozen=True)
class SampleBag:
    values: tuple[float, ...]


NoiseMarginal = PointMass | UniformInterval | SampleBag


@dataclass(frozen=True)
class NoisePosterior:
    """Per-species noise distribution conditioned on a full observation."""

    marginals: Mapping[str, NoiseMarginal]

    def to_json(self) -> str:
        def enc(m: NoiseMarginal) -> dict:
            if isinstance(m, PointMass):
                return {"kind": "point-mass", "value": m.value}
            if isinstance(m, UniformInterval):
                return {"kind": "uniform-interval", "lo": m.lo, "hi": m.hi}
            return {"kind": "sample-bag", "values": list(m.values)}

        return json.dumps({k: enc(v) for k, v in self.marginals.items()}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "NoisePosterior":
        raw = json.loads(text)
        out: dict[str, NoiseMarginal] = {}
        for k, v in raw.items():
            kind = v.get("kind")
            if kind == "point-mass":
                out[k] = PointMass(float(v["value"]))
            elif kind == "uniform-interval":
                out[k] = UniformInterval(float(v["lo"]), float(v["hi"]))
            elif kind == "sample-bag":
                out[k] = SampleBag(tuple(float(x) for x in v["values"]))
            else:
                raise ValueError(f"unknown noise marginal kind {kind!r}")
        return cls(out)


@dataclass(frozen=True)
class Scm:
    """Structural assignments over the regulation DAG; immutable.

    ``interventions`` maps species to clamped values; an intervened species'
    assignment is the constant and its noise variable is ignored.
    """

    model: EquilibriumModel
    transform: NoiseKind
    interventions: Mapping[str, float]

    @property
    def species_order(self) -> tuple[str, ...]:
        return self.model.species_order


def build_scm(model: EquilibriumModel, transform: NoiseKind = NoiseKind.BINOMIAL) -> Scm:
    """Convert the generative equilibrium model into an SCM.

    The Gaussian surrogate is refused when any species sits too close to a
    boundary probability at the natural equilibrium (variance guard
    ``T*theta*(1-theta) >= 1``), where the normal approximation collapses.
    """
    if transform is NoiseKind.POISSON and model.family != "poisson":
        model = derive_equilibrium(model.network, family="poisson")
    if transform is NoiseKind.GAUSSIAN:
        means = equilibrium_means(model)
        for name in model.species_order:
            t_i = model.total(name)
            theta = means[name] / t_i
            if t_i * theta * (1.0 - theta) < 1.0:
                raise BoundaryTheta(
                    f"theta({name}) = {theta:.4g} at equilibrium leaves variance "
                    f"{t_i * theta * (1 - theta):.3g} < 1; Gaussian transform unsafe"
                )
    return Scm(model, transform, {})


def do(scm: Scm, target: str, value: float) -> Scm:
    """Return a new SCM with ``target`` clamped to ``value`` (copy-on-write)."""
    if scm.model.network.is_input(target):
        raise InterventionOnInput(target)
    if target not in scm.model.species_order:
        raise UnknownSpecies(target)
    merged = dict(scm.interventions)
    merged[target] = float(value)
    return replace(scm, interventions=merged)


def _propagate(scm: Scm, noise: np.ndarray) -> np.ndarray:
    """Apply the structural assignments to a noise matrix (n, n_species).

    Columns follow ``scm.species_order``.  Intervened species ignore their
    noise column; descendants see the intervened value through their thetas.
    Parent values produced by the Gaussian surrogate may stray outside
    [0, T], so the success probability is clipped before use (samples are
    never clipped).
    """
    order = scm.species_order
    n = noise.shape[0]
    if noise.shape != (n, len(order)):
        raise ValueError("noise matrix must be (n_draws, n_species)")
    values: dict[str, np.ndarray | float] = dict(scm.model.input_values())
    out = np.empty((n, len(order)), dtype=float)
    for j, name in enumerate(order):
        if name in scm.interventions:
            col = np.full(n, scm.interventions[name])
        else:
            theta = scm.model.thetas[name].columns(values)
            theta = np.clip(theta, 0.0, 1.0)
            if scm.transform is NoiseKind.GAUSSIAN:
                t_i = scm.model.total(name)
                col = t_i * theta + noise[:, j] * np.sqrt(t_i * theta * (1.0 - theta))
            elif scm.transform is NoiseKind.BINOMIAL:
                col = binom_ppf_vec(noise[:, j], scm.model.total(name), theta).astype(float)
            else:
                lam = scm.model.scale(name)
                col = poisson_ppf_vec(noise[:, j], lam * theta).astype(float)
        values[name] = col
        out[:, j] = col
    return out


def prior_noise(scm: Scm, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw the independent noise matrix for ``n`` ancestral samples.

    All species' noise is drawn up front in species order, so intervening on
    a node leaves every other node's draws untouched for a given seed.
    """
    if scm.transform is NoiseKind.GAUSSIAN:
        return rng.standard_normal((n, len(scm.species_order)))
    return rng.random((n, len(scm.species_order)))


def sample(scm: Scm, n: int, seed: int) -> np.ndarray:
    """``n`` ancestral samples honoring current interventions; (n, n_species).

    Inverse-CDF assignments produce integer-valued columns (stored as float
    alongside possibly-real intervened values); the Gaussian surrogate is
    real-valued by construction.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    return _propagate(scm, prior_noise(scm, n, rng))


def _check_observation(scm: Scm, observation: Mapping[str, float]) -> dict[str, float]:
    order = scm.species_order
    unknown = set(observation) - set(order)
    if unknown:
        raise UnknownSpecies(f"observation names unknown species {sorted(unknown)}")
    missing = set(order) - set(observation)
    if missing:
        raise IncompleteObservation(
            f"observation must cover every species; missing {sorted(missing)}"
        )
    obs = {k: float(v) for k, v in observation.items()}
    if scm.transform in (NoiseKind.BINOMIAL, NoiseKind.POISSON):
        for name in order:
            x = obs[name]
            if x != int(x):
                raise ObservationOutOfRange(
                    f"{name} = {x} is not an integer; required for inverse-CDF transforms"
                )
            if x < 0 or (scm.transform is NoiseKind.BINOMIAL and x > scm.model.total(name)):
                raise ObservationOutOfRange(f"{name} = {x} outside the assignment support")
    return obs


def abduct(scm: Scm, observation: Mapping[str, float]) -> NoisePosterior:
    """Exact noise posterior given a complete observation.

    Gaussian assignments invert to a point mass per species.  Inverse-CDF
    assignments yield ``N | X = x ~ Uniform(F(x-1), F(x))`` with theta taken
    at the observed parent values (``F(-1) := 0``).
    """
    obs = _check_observation(scm, observation)
    values = {**scm.model.input_values(), **obs}
    marginals: dict[str, NoiseMarginal] = {}
    for name in scm.species_order:
        theta = min(max(scm.model.thetas[name](values), 0.0), 1.0)
        t_i = scm.model.total(name)
        x = obs[name]
        if scm.transform is NoiseKind.GAUSSIAN:
            sd = math.sqrt(t_i * theta * (1.0 - theta))
            if sd == 0.0:
                raise BoundaryTheta(
                    f"theta({name}) = {theta} at the observed parents; Gaussian "
                    "inversion undefined"
                )
            marginals[name] = PointMass((x - theta * t_i) / sd)
        elif scm.transform is NoiseKind.BINOMIAL:
            lo = binom_cdf(int(x) - 1, t_i, theta)
            hi = binom_cdf(int(x), t_i, theta)
            if not hi > lo:
                raise ObservationOutOfRange(
                    f"{name} = {int(x)} has zero probability under theta = {theta}"
                )
            marginals[name] = UniformInterval(lo, hi)
        else:
            mu = scm.model.scale(name) * theta
            lo = poisson_cdf(int(x) - 1, mu)
            hi = poisson_cdf(int(x), mu)
            if not hi > lo:
                raise ObservationOutOfRange(
                    f"{name} = {int(x)} has zero probability under mean {mu}"
                )
            marginals[name] = UniformInterval(lo, hi)
    return NoisePosterior(marginals)


def posterior_noise(
    posterior: NoisePosterior, order: Sequence[str], n: int, rng: np.random.Generator
) -> np.ndarray:
    """Sample a noise matrix from a posterior, species by species."""
    cols = []
    for name in order:
        m = posterior.marginals[name]
        if isinstance(m, PointMass):
            cols.append(np.full(n, m.value))
        elif isinstance(m, UniformInterval):
            cols.append(m.lo + (m.hi - m.lo) * rng.random(n))
        else:
            cols.append(rng.choice(np.asarray(m.values), size=n))
    return np.column_stack(cols)


def counterfactual(
    scm: Scm,
    observation: Mapping[str, float],
    intervention: tuple[str, float] | None,
    query: str,
    n: int,
    seed: int,
) -> np.ndarray:
    """Abduction-action-prediction: draws of ``query`` given the observation.

    ``intervention=None`` runs the pure predict step, which reproduces the
    observation (exactly for the Gaussian kind, with probability one over
    the noise interval for inverse-CDF kinds).
    """
    if query not in scm.species_order:
        raise UnknownSpecies(query)
    posterior = abduct(scm, observation)
    mutated = scm if intervention is None else do(scm, intervention[0], intervention[1])
    rng = np.random.Generator(np.random.PCG64(seed))
    noise = posterior_noise(posterior, scm.species_order, n, rng)
    states = _propagate(mutated, noise)
    return states[:, scm.species_order.index(query)]


def counterfactual_batch(
    scm: Scm,
    observations: np.ndarray,
    intervention: tuple[str, float] | None,
    query: str,
    seed: int,
) -> np.ndarray:
    """One counterfactual draw per observation row.

    ``observations`` has one column per species in ``scm.species_order``.
    Used by the evaluation protocols, where each seed contributes one
    observed equilibrium and one counterfactual.
    """
    if query not in scm.species_order:
        raise UnknownSpecies(query)
    order = scm.species_order
    obs = np.asarray(observations, dtype=float)
    if obs.ndim != 2 or obs.shape[1] != len(order):
        raise ValueError("observations must be (n_rows, n_species)")
    values: dict[str, np.ndarray | float] = dict(scm.model.input_values())
    values.update({name: obs[:, j] for j, name in enumerate(order)})
    rng = np.random.Generator(np.random.PCG64(seed))
    cols = []
    for j, name in enumerate(order):
        theta = np.clip(scm.model.thetas[name].columns(values), 0.0, 1.0)
        theta = np.broadcast_to(np.asarray(theta, dtype=float), (len(obs),)).copy()
        t_i = scm.model.total(name)
        x = obs[:, j]
        if scm.transform is NoiseKind.GAUSSIAN:
            sd = np.sqrt(t_i * theta * (1.0 - theta))
            if np.any(sd == 0.0):
                raise BoundaryTheta(
                    f"theta({name}) hits a boundary for some observation row"
                )
            cols.append((x - theta * t_i) / sd)
        elif scm.transform is NoiseKind.BINOMIAL:
            lo, hi = _binom_cdf_pair(x, t_i, theta)
            _require_support(lo, hi, name)
            cols.append(lo + (hi - lo) * rng.random(len(x)))
        else:
            mu = scm.model.scale(name) * theta
            lo, hi = _poisson_cdf_pair(x, mu)
            _require_support(lo, hi, name)
            cols.append(lo + (hi - lo) * rng.random(len(x)))
    noise = np.column_stack(cols)
    mutated = scm if intervention is None else do(scm, intervention[0], intervention[1])
    states = _propagate(mutated, noise)
    return states[:, order.index(query)]


def _require_support(lo: np.ndarray, hi: np.ndarray, name: str) -> None:
    if np.any(~(hi > lo)):
        raise ObservationOutOfRange(f"some observed {name} has zero probability")


def _binom_cdf_pair(x: np.ndarray, n: int, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(F(x-1), F(x)) rows for per-row success probabilities."""
    if np.any((x < 0) | (x > n) | (x != np.floor(x))):
        raise ObservationOutOfRange("binomial observation outside {0..T}")
    k = np.arange(n + 1)
    lg = _lgamma_table(n)
    logc = lg[n] - lg - lg[::-1]
    pc = np.asarray(p, dtype=float)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logpmf = logc[None, :] + k * np.log(pc) + (n - k) * np.log1p(-pc)
    deg0 = pc[:, 0] == 0.0
    deg1 = pc[:, 0] == 1.0
    if deg0.any() or deg1.any():
        logpmf[deg0] = -np.inf
        logpmf[deg0, 0] = 0.0
        logpmf[deg1] = -np.inf
        logpmf[deg1, n] = 0.0
    cdf = np.cumsum(np.exp(logpmf), axis=1)
    xi = x.astype(int)
    rows = np.arange(len(xi))
    hi = cdf[rows, xi]
    lo = np.where(xi > 0, cdf[rows, np.maximum(xi - 1, 0)], 0.0)
    return lo, hi


def _poisson_cdf_pair(x: np.ndarray, mu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if np.any((x < 0) | (x != np.floor(x))):
        raise ObservationOutOfRange("Poisson observation must be a nonnegative integer")
    kmax = max(int(x.max()), _poisson_support(float(np.max(mu))))
    k = np.arange(kmax + 1)
    lgk = _lgamma_table(kmax)
    mus = np.asarray(mu, dtype=float)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        logpmf = k * np.log(mus) - mus - lgk
    zero = mus[:, 0] == 0.0
    if zero.any():
        logpmf[zero] = -np.inf
        logpmf[zero, 0] = 0.0
    cdf = np.cumsum(np.exp(logpmf), axis=1)
    xi = x.astype(int)
    rows = np.arange(len(xi))
    hi = cdf[rows, xi]
    lo = np.where(xi > 0, cdf[rows, np.maximum(xi - 1, 0)], 0.0)
    return lo, hi


def soft_intervention_rates(
    network: ReactionNetwork, target: str, desired_mean: float, knob: str
) -> dict[str, float]:
    """Rate assignment realizing ``E[target] = desired_mean`` via one knob.

    Solves ``theta = desired_mean / T`` for the knob's rate with every other
    rate and all parent equilibrium values held fixed:

        v = (theta * B - (1 - theta) * A) / ((1 - theta) * a)

    where ``a`` is the knob regulator's equilibrium value, ``A`` the mass of
    the other activators, and ``B`` the inhibitor mass.  Raises
    :class:`InfeasibleIntervention` when no positive rate achieves it.
    """
    rx = network.reaction(knob)
    if rx.kind is not ReactionKind.ACTIVATE or rx.target != target:
        raise ConfigError(f"knob {knob!r} is not an activation reaction targeting {target!r}")
    t_total = network.total(target)
    if not 0.0 < desired_mean < t_total:
        raise InfeasibleIntervention(
            f"desired mean {desired_mean} must lie strictly inside (0, {t_total})"
        )
    model = derive_equilibrium(network)
    values = {**model.input_values(), **equilibrium_means(model)}
    theta = desired_mean / t_total
    a = 1.0 if rx.regulator is None else float(values[rx.regulator])
    if a == 0.0:
        raise InfeasibleIntervention(f"knob regulator {rx.regulator!r} has equilibrium value 0")
    other_act = 0.0
    inh = 0.0
    for other in network.reactions:
        if other.target != target or other.key == knob:
            continue
        val = 1.0 if other.regulator is None else float(values[other.regulator])
        if other.kind is ReactionKind.ACTIVATE:
            other_act += other.rate * val
        else:
            inh += other.rate * val
    v = (theta * inh - (1.0 - theta) * other_act) / ((1.0 - theta) * a)
    if not v > 0.0:
        raise InfeasibleIntervention(
            f"required knob rate {v:.4g} is not positive; other activators already "
            "overshoot the requested mean"
        )
    rates = network.base_rates()
    rates[knob] = v
    return rates
