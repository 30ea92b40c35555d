"""``eq-scm``: parse/validate models, simulate, and run the causal protocols.

Exit codes: 0 success, 1 parse or validation failure (diagnostics on
stderr), 2 runtime errors such as infeasible interventions or out-of-range
observations.  Every stochastic subcommand either takes an explicit
``--seed`` or records the generated one in the output metadata line.
"""

from __future__ import annotations

import argparse
import io
import os
import sys

import numpy as np

from . import __version__
from .batch import ssa_end_states
from .builtins import builtin_names, builtin_source
from .dsl import parse_model_bytes
from .equilibrium import derive_equilibrium, equilibrium_means, mean_trajectory
from .errors import EqscmError, ValidationError
from .harness import (
    EffectSample,
    MisspecConfig,
    ScaleRule,
    SOURCE_TRUTH,
    eval_deterministic,
    eval_misspecification,
    eval_stochastic,
    write_effects_csv,
)
from .network import ReactionNetwork, model_hash, scaled_rates, validate
from .scm import NoiseKind, build_scm, counterfactual
from .ssa import SimConfig, metadata_line, simulate_ssa, write_end_states_csv, write_trajectory_csv

KINDS = {k.value: k for k in NoiseKind}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: network failed validation:\n{exc.report}", file=sys.stderr)
        return 1
    except EqscmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eq-scm",
        description="Equilibrium SCMs for reaction networks: simulate, derive, and query.",
    )
    parser.add_argument("--version", action="version", version=f"eq-scm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a model and report every violated invariant")
    p.add_argument("model", help="path to a .rxn file or builtin:<name>")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="run the exact simulator or the deterministic mean ODEs")
    _model_arg(p)
    p.add_argument("--mode", choices=("ssa", "mean"), default="ssa")
    p.add_argument("--t-end", type=float, default=100.0)
    p.add_argument("--seed", type=int, default=None, help="RNG seed (generated and recorded if omitted)")
    p.add_argument("--record", choices=("full", "end", "grid"), default="full")
    p.add_argument("--grid-dt", type=float, default=None)
    p.add_argument("--runs", type=int, default=1,
                   help="with mode=ssa: simulate seeds seed..seed+runs-1 and emit end states")
    p.add_argument("--dt", type=float, default=0.01, help="mean-ODE integrator step")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("equilibrium", help="print the closed-form theta and mean per species")
    _model_arg(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_equilibrium)

    p = sub.add_parser("counterfactual", help="abduction-action-prediction query")
    _model_arg(p)
    p.add_argument("--observe", required=True, help="comma list, e.g. \"K3=50,K2=71,K=88\"")
    p.add_argument("--do", required=True, dest="do_", metavar="DO", help="single name=value intervention")
    p.add_argument("--query", required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--kind", choices=sorted(KINDS), default="gaussian")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_counterfactual)

    p = sub.add_parser("eval-det", help="deterministic counterfactual evaluation")
    _model_arg(p)
    _rates_prime_args(p)
    p.add_argument("--intervene", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--draws", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--kind", choices=sorted(KINDS), default="gaussian")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_eval_det)

    p = sub.add_parser("eval-stoch", help="coupled-simulation counterfactual evaluation")
    _model_arg(p)
    _rates_prime_args(p)
    p.add_argument("--intervene", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--n-seeds", type=int, default=500)
    p.add_argument("--seed", type=int, default=None, help="base seed; simulations use seed..seed+n-1")
    p.add_argument("--scm-seed", type=int, default=None)
    p.add_argument("--t-end", type=float, default=100.0)
    p.add_argument("--kind", choices=sorted(KINDS), default="gaussian")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_eval_stoch)

    p = sub.add_parser("eval-misspec", help="robustness study under a mis-specified rate")
    _model_arg(p)
    p.add_argument("--perturb-rate", required=True, help="reaction key, e.g. activate:K2:K3")
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--reps", type=int, default=50)
    _rates_prime_args(p)
    p.add_argument("--intervene", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--seeds-per-rep", type=int, default=200)
    p.add_argument("--n-direct", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--t-end", type=float, default=100.0)
    p.add_argument("--kind", choices=sorted(KINDS), default="gaussian")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_eval_misspec)

    return parser


def _model_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, help="path to a .rxn file or builtin:<name>")


def _rates_prime_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cf-rate", required=True, help="reaction key scaled in the alternative rate set")
    p.add_argument("--cf-scale", type=float, required=True, help="factor applied to --cf-rate")


def _load_source(spec: str) -> tuple[bytes, str]:
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        try:
            return builtin_source(name).encode(), spec
        except KeyError:
            print(
                f"error: unknown builtin {name!r} (available: {', '.join(builtin_names())})",
                file=sys.stderr,
            )
            raise SystemExit(1)
    try:
        with open(spec, "rb") as fh:
            return fh.read(), spec
    except OSError as exc:
        print(f"error: cannot read {spec}: {exc}", file=sys.stderr)
        raise SystemExit(1)


def _load_network(spec: str, check: bool = True) -> ReactionNetwork:
    data, origin = _load_source(spec)
    result = parse_model_bytes(data, origin)
    if result.diagnostics:
        print(result.format_diagnostics(), file=sys.stderr)
    if not result.ok:
        raise SystemExit(1)
    if check:
        report = validate(result.network)
        if not report.ok:
            for v in report.violations:
                print(f"{origin}: error: {v}", file=sys.stderr)
            raise SystemExit(1)
    return result.network


def _emit(out: str, text: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _seed_or_generated(seed: int | None) -> int:
    if seed is not None:
        return seed
    return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])


def _parse_assignments(text: str, what: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        name, _, value = part.partition("=")
        if not name or not value:
            print(f"error: malformed {what} entry {part!r} (expected name=value)", file=sys.stderr)
            raise SystemExit(2)
        try:
            out[name.strip()] = float(value)
        except ValueError:
            print(f"error: {what} value for {name!r} is not a number: {value!r}", file=sys.stderr)
            raise SystemExit(2)
    if not out:
        print(f"error: empty {what} list", file=sys.stderr)
        raise SystemExit(2)
    return out


def cmd_validate(args) -> int:
    data, origin = _load_source(args.model)
    result = parse_model_bytes(data, origin)
    if result.diagnostics:
        print(result.format_diagnostics(), file=sys.stderr)
    if not result.ok:
        return 1
    report = validate(result.network)
    if report.ok:
        print(f"{origin}: OK ({len(result.network.species)} species, "
              f"{len(result.network.reactions)} reactions)")
        return 0
    for v in report.violations:
        print(f"{origin}: error: {v}", file=sys.stderr)
    return 1


def cmd_simulate(args) -> int:
    network = _load_network(args.model)
    buf = io.StringIO()
    if args.mode == "mean":
        traj = mean_trajectory(network, args.t_end, args.dt)
        write_trajectory_csv(buf, traj, network, t_end=args.t_end, dt=args.dt)
    else:
        seed = _seed_or_generated(args.seed)
        if args.runs > 1:
            seeds = list(range(seed, seed + args.runs))
            ends = ssa_end_states(network, None, args.t_end, seeds)
            write_end_states_csv(buf, seeds, ends, network.species_names(), network,
                                 t_end=args.t_end)
        else:
            cfg = SimConfig(t_end=args.t_end, seed=seed, record=args.record, grid_dt=args.grid_dt)
            traj = simulate_ssa(network, cfg)
            write_trajectory_csv(buf, traj, network, t_end=args.t_end)
    _emit(args.out, buf.getvalue())
    return 0


def cmd_equilibrium(args) -> int:
    network = _load_network(args.model)
    model = derive_equilibrium(network)
    means = equilibrium_means(model)
    values = {**model.input_values(), **means}
    lines = [metadata_line(network, command="equilibrium")]
    lines.append("species,theta,mean")
    for name in model.species_order:
        theta = model.thetas[name](values)
        lines.append(f"{name},{theta:.6f},{means[name]:.6f}")
    _emit(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_counterfactual(args) -> int:
    network = _load_network(args.model)
    observation = _parse_assignments(args.observe, "--observe")
    intervention = _parse_assignments(args.do_, "--do")
    if len(intervention) != 1:
        print("error: --do takes exactly one name=value pair", file=sys.stderr)
        return 2
    ((target, value),) = intervention.items()
    seed = _seed_or_generated(args.seed)
    scm = build_scm(derive_equilibrium(network), KINDS[args.kind])
    draws = counterfactual(scm, observation, (target, value), args.query, args.samples, seed)
    lines = [metadata_line(network, command="counterfactual", kind=args.kind, seed=seed,
                           do=f"{target}={value:g}", query=args.query)]
    lines.append(f"draw,{args.query}")
    lines += [f"{i},{v!r}" for i, v in enumerate(draws.tolist())]
    _emit(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_eval_det(args) -> int:
    network = _load_network(args.model)
    rates = network.base_rates()
    rates_prime = scaled_rates(rates, args.cf_rate, args.cf_scale)
    seed = _seed_or_generated(args.seed)
    res = eval_deterministic(
        network, rates, rates_prime, args.intervene, args.query,
        n_draws=args.draws, seed=seed, transform=KINDS[args.kind],
    )
    truth = [EffectSample(res.delta_true, SOURCE_TRUTH, 0)]
    buf = io.StringIO()
    write_effects_csv(buf, truth + res.effects, network,
                      command="eval-det", seed=seed, kind=args.kind,
                      cf_rate=args.cf_rate, cf_scale=args.cf_scale,
                      delta_true=f"{res.delta_true!r}")
    _emit(args.out, buf.getvalue())
    return 0


def cmd_eval_stoch(args) -> int:
    network = _load_network(args.model)
    rates = network.base_rates()
    rates_prime = scaled_rates(rates, args.cf_rate, args.cf_scale)
    seed = _seed_or_generated(args.seed)
    scm_seed = _seed_or_generated(args.scm_seed)
    res = eval_stochastic(
        network, rates, rates_prime, args.intervene, args.query,
        seeds=range(seed, seed + args.n_seeds), scm_seed=scm_seed,
        t_end=args.t_end, transform=KINDS[args.kind], jobs=args.jobs,
    )
    buf = io.StringIO()
    write_effects_csv(buf, res.effects_ssa + res.effects_scm, network,
                      command="eval-stoch", seed=seed, scm_seed=scm_seed, kind=args.kind,
                      cf_rate=args.cf_rate, cf_scale=args.cf_scale,
                      n_seeds=args.n_seeds, t_end=args.t_end)
    _emit(args.out, buf.getvalue())
    return 0


def cmd_eval_misspec(args) -> int:
    network = _load_network(args.model)
    seed = _seed_or_generated(args.seed)
    cfg = MisspecConfig(args.perturb_rate, args.lo, args.hi, repetitions=args.reps, seed=seed)
    report = eval_misspecification(
        network, cfg, ScaleRule(args.cf_rate, args.cf_scale), args.intervene, args.query,
        seeds_per_rep=args.seeds_per_rep, t_end=args.t_end,
        transform=KINDS[args.kind], jobs=args.jobs, n_direct=args.n_direct,
    )
    _emit(args.out, report.to_json(model=model_hash(network), kind=args.kind,
                                   t_end=args.t_end, seeds_per_rep=args.seeds_per_rep) + "\n")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
