"""Domain model for binary-state reaction networks.

A network is a set of species, each a conserved pool of ``total`` particles
that are either active or inactive, plus constant input signals and a list of
activation/deactivation reactions with mass-action rates.  Every reaction is
first order: its hazard is ``rate * regulator_count * occupancy_count`` where
the occupancy is the vacant (``T - x``) or active (``x``) count of the target.
That restriction is what makes the closed-form equilibrium derivation in
:mod:`eqscm.equilibrium` possible, so :func:`validate` enforces it along with
acyclicity and the requirement that every species can both gain and lose
activity.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, replace
from typing import Mapping

from .errors import CycleError, UnknownReaction, UnknownSpecies, ValidationError

AUTO = None  # regulator value marking an unregulated (auto) deactivation


class ReactionKind(enum.Enum):
    ACTIVATE = "activate"
    DEACTIVATE = "deactivate"


class Occupancy(enum.Enum):
    """Which pool of the target species a hazard term draws on."""

    VACANT_SITES = "vacant"  # T - x(t)
    ACTIVE_SITES = "active"  # x(t)


@dataclass(frozen=True)
class Species:
    """A conserved particle pool; ``init_active`` of ``total`` start active."""

    name: str
    total: int
    init_active: int = 0


@dataclass(frozen=True)
class InputSignal:
    """A constant particle count that regulates reactions but is never a target."""

    name: str
    value: int


@dataclass(frozen=True)
class Reaction:
    kind: ReactionKind
    target: str
    regulator: str | None  # None == auto-deactivation (constant factor 1)
    rate: float

    @property
    def key(self) -> str:
        """Stable id used for rate assignments, e.g. ``activate:K2:K3``."""
        return f"{self.kind.value}:{self.target}:{self.regulator or 'auto'}"


@dataclass(frozen=True)
class ReactionNetwork:
    name: str
    species: tuple[Species, ...]
    inputs: tuple[InputSignal, ...]
    reactions: tuple[Reaction, ...]

    def species_map(self) -> dict[str, Species]:
        return {s.name: s for s in self.species}

    def input_map(self) -> dict[str, InputSignal]:
        return {s.name: s for s in self.inputs}

    def species_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.species)

    def is_input(self, name: str) -> bool:
        return any(i.name == name for i in self.inputs)

    def total(self, name: str) -> int:
        sp = self.species_map().get(name)
        if sp is None:
            raise UnknownSpecies(name)
        return sp.total

    def base_rates(self) -> dict[str, float]:
        """Rate assignment covering every reaction, keyed by ``Reaction.key``."""
        return {r.key: r.rate for r in self.reactions}

    def reaction(self, key: str) -> Reaction:
        for r in self.reactions:
            if r.key == key:
                return r
        raise UnknownReaction(key)


def with_rates(network: ReactionNetwork, rates: Mapping[str, float]) -> ReactionNetwork:
    """Return a copy of ``network`` with reaction rates replaced.

    ``rates`` must assign a positive rate to exactly the network's reaction
    set; anything else raises :class:`UnknownReaction`.
    """
    keys = {r.key for r in network.reactions}
    extra = set(rates) - keys
    missing = keys - set(rates)
    if extra or missing:
        raise UnknownReaction(
            f"rate assignment mismatch (extra={sorted(extra)}, missing={sorted(missing)})"
        )
    new = tuple(replace(r, rate=float(rates[r.key])) for r in network.reactions)
    return replace(network, reactions=new)


def scaled_rates(rates: Mapping[str, float], key: str, factor: float) -> dict[str, float]:
    """Copy of ``rates`` with one entry multiplied by ``factor``."""
    if key not in rates:
        raise UnknownReaction(key)
    out = dict(rates)
    out[key] = out[key] * factor
    return out


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    code: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}({self.subject}): {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def __str__(self) -> str:
        if self.ok:
            return "OK"
        return "\n".join(str(v) for v in self.violations)


def validate(network: ReactionNetwork) -> ValidationReport:
    """Check every structural invariant; returns all violations, raises nothing.

    An empty report means the network admits the closed-form equilibrium
    conversion: ids resolve, rates are positive, the regulation graph is
    acyclic, and every species has at least one activation and one
    deactivation (otherwise its equilibrium activation probability would be
    pinned to 0 or 1, where the Gaussian noise transform is singular).
    """
    out: list[Violation] = []
    seen: set[str] = set()
    for sp in network.species:
        if not sp.name:
            out.append(Violation("empty-name", "<species>", "species name must be non-empty"))
            continue
        if sp.name in seen:
            out.append(Violation("duplicate-id", sp.name, "id declared more than once"))
        seen.add(sp.name)
        if sp.total <= 0:
            out.append(Violation("bad-total", sp.name, f"total must be positive, got {sp.total}"))
        if not (0 <= sp.init_active <= sp.total):
            out.append(
                Violation(
                    "bad-init",
                    sp.name,
                    f"init_active {sp.init_active} outside [0, {sp.total}]",
                )
            )
    for inp in network.inputs:
        if not inp.name:
            out.append(Violation("empty-name", "<input>", "input name must be non-empty"))
            continue
        if inp.name in seen:
            out.append(Violation("duplicate-id", inp.name, "id declared more than once"))
        seen.add(inp.name)
        if inp.value < 0:
            out.append(Violation("bad-input", inp.name, f"value must be >= 0, got {inp.value}"))

    if not network.species:
        out.append(Violation("empty-network", network.name or "<network>", "no species declared"))

    species_names = {s.name for s in network.species}
    input_names = {i.name for i in network.inputs}
    have_act: set[str] = set()
    have_deact: set[str] = set()
    seen_keys: set[str] = set()
    for rx in network.reactions:
        subject = rx.key
        if not (rx.rate > 0):
            out.append(Violation("nonpositive-rate", subject, f"rate must be positive, got {rx.rate}"))
        if rx.target in input_names:
            out.append(Violation("input-target", subject, "reactions may not target an input signal"))
        elif rx.target not in species_names:
            out.append(Violation("unknown-id", subject, f"unknown target {rx.target!r}"))
        if rx.regulator is AUTO:
            if rx.kind is ReactionKind.ACTIVATE:
                out.append(Violation("auto-activation", subject, "AUTO regulator is only legal for deactivation"))
        elif rx.regulator not in species_names and rx.regulator not in input_names:
            out.append(Violation("unknown-id", subject, f"unknown regulator {rx.regulator!r}"))
        if rx.key in seen_keys:
            out.append(Violation("duplicate-reaction", subject, "same kind/target/regulator declared twice"))
        seen_keys.add(rx.key)
        if rx.kind is ReactionKind.ACTIVATE:
            have_act.add(rx.target)
        else:
            have_deact.add(rx.target)

    for sp in network.species:
        if sp.name not in have_act:
            out.append(Violation("missing-activation", sp.name, "species has no activation reaction"))
        if sp.name not in have_deact:
            out.append(Violation("missing-deactivation", sp.name, "species has no deactivation reaction"))

    cycle = _find_cycle(network)
    if cycle is not None:
        out.append(
            Violation("cycle", ",".join(cycle), "regulation graph must be acyclic")
        )
    return ValidationReport(tuple(out))


def ensure_valid(network: ReactionNetwork) -> None:
    """Raise :class:`ValidationError` unless :func:`validate` is clean."""
    report = validate(network)
    if not report.ok:
        raise ValidationError(report)


def _species_edges(network: ReactionNetwork) -> dict[str, set[str]]:
    """regulator -> {targets}, restricted to species nodes (inputs cannot cycle)."""
    species_names = {s.name for s in network.species}
    edges: dict[str, set[str]] = {name: set() for name in species_names}
    for rx in network.reactions:
        if rx.regulator in species_names and rx.target in species_names:
            edges[rx.regulator].add(rx.target)
    return edges


def _find_cycle(network: ReactionNetwork) -> list[str] | None:
    """Return the node set of one strongly connected cycle, or None."""
    edges = _species_edges(network)
    color: dict[str, int] = {}
    stack: list[str] = []

    def visit(u: str) -> list[str] | None:
        color[u] = 1
        stack.append(u)
        for v in sorted(edges[u]):
            if color.get(v, 0) == 1:
                return stack[stack.index(v):]
            if color.get(v, 0) == 0:
                found = visit(v)
                if found is not None:
                    return found
        stack.pop()
        color[u] = 2
        return None

    for node in sorted(edges):
        if color.get(node, 0) == 0:
            found = visit(node)
            if found is not None:
                return sorted(found)
    return None


# ---------------------------------------------------------------------------
# regulation DAG


@dataclass(frozen=True)
class Dag:
    """Regulation structure: who activates/inhibits whom, plus a topological order.

    ``order`` covers inputs and species; ties are broken lexicographically so
    the same network always yields the same order regardless of how its
    reactions were listed.
    """

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]  # (regulator, target), deduplicated
    activators: Mapping[str, tuple[str, ...]]  # target -> activator parents
    inhibitors: Mapping[str, tuple[str, ...]]  # target -> inhibitor parents
    order: tuple[str, ...]

    def parents(self, name: str) -> tuple[str, ...]:
        return tuple(sorted(set(self.activators.get(name, ())) | set(self.inhibitors.get(name, ()))))


def regulation_dag(network: ReactionNetwork) -> Dag:
    """Derive the regulation DAG; raises :class:`CycleError` on cyclic networks."""
    species_names = set(network.species_names())
    input_names = {i.name for i in network.inputs}
    nodes = tuple(sorted(species_names | input_names))
    acts: dict[str, set[str]] = {}
    inhs: dict[str, set[str]] = {}
    edges: set[tuple[str, str]] = set()
    for rx in network.reactions:
        if rx.regulator is AUTO:
            continue
        if rx.regulator not in species_names and rx.regulator not in input_names:
            raise UnknownSpecies(rx.regulator)
        edges.add((rx.regulator, rx.target))
        bucket = acts if rx.kind is ReactionKind.ACTIVATE else inhs
        bucket.setdefault(rx.target, set()).add(rx.regulator)

    # Kahn's algorithm with a sorted frontier for deterministic tie-breaking.
    indeg = {n: 0 for n in nodes}
    for _, tgt in edges:
        indeg[tgt] += 1
    ready = sorted(n for n, d in indeg.items() if d == 0)
    order: list[str] = []
    while ready:
        u = ready.pop(0)
        order.append(u)
        opened = []
        for reg, tgt in edges:
            if reg == u:
                indeg[tgt] -= 1
                if indeg[tgt] == 0:
                    opened.append(tgt)
        for v in sorted(opened):
            ready.append(v)
        ready.sort()
    if len(order) != len(nodes):
        stuck = sorted(n for n, d in indeg.items() if d > 0)
        raise CycleError(f"regulation graph has a cycle through {{{', '.join(stuck)}}}")
    return Dag(
        nodes=nodes,
        edges=tuple(sorted(edges)),
        activators={k: tuple(sorted(v)) for k, v in acts.items()},
        inhibitors={k: tuple(sorted(v)) for k, v in inhs.items()},
        order=tuple(order),
    )


# ---------------------------------------------------------------------------
# hazards


@dataclass(frozen=True)
class HazardTerm:
    """One mass-action hazard: ``coefficient * regulator_count * occupancy_count``.

    ``regulator`` None means a constant factor of 1 (auto-deactivation).
    """

    coefficient: float
    regulator: str | None
    occupancy: Occupancy
    target: str
    total: int

    def evaluate(self, values: Mapping[str, float]) -> float:
        reg = 1.0 if self.regulator is None else float(values[self.regulator])
        x = float(values[self.target])
        occ = self.total - x if self.occupancy is Occupancy.VACANT_SITES else x
        return self.coefficient * reg * occ


def hazards_for(
    network: ReactionNetwork, target: str
) -> tuple[list[HazardTerm], list[HazardTerm]]:
    """Split the hazard of ``target`` into activation and deactivation terms.

    Activation terms consume vacant sites, deactivation terms consume active
    sites; coefficients are the reaction rates.
    """
    sp = network.species_map().get(target)
    if sp is None:
        raise UnknownSpecies(target)
    act: list[HazardTerm] = []
    deact: list[HazardTerm] = []
    for rx in network.reactions:
        if rx.target != target:
            continue
        if rx.kind is ReactionKind.ACTIVATE:
            act.append(
                HazardTerm(rx.rate, rx.regulator, Occupancy.VACANT_SITES, target, sp.total)
            )
        else:
            deact.append(
                HazardTerm(rx.rate, rx.regulator, Occupancy.ACTIVE_SITES, target, sp.total)
            )
    return act, deact


def model_hash(network: ReactionNetwork) -> str:
    """Short content hash of the canonical model text, for output metadata."""
    # deferred import: dsl depends on this module
    from .dsl import serialize_model

    text = serialize_model(network)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]
