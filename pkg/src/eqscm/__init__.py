"""Equilibrium structural causal models for binary-state reaction networks.

Pipeline: parse a ``.rxn`` model (or use a builtin), validate its structure,
then either simulate the exact jump process (:mod:`eqscm.ssa`,
:mod:`eqscm.batch`), derive the closed-form equilibrium
(:mod:`eqscm.equilibrium`), convert it into a structural causal model and
answer interventional/counterfactual queries (:mod:`eqscm.scm`), or run the
consistency and misspecification protocols (:mod:`eqscm.harness`).  The
``eq-scm`` command line (:mod:`eqscm.cli`) exposes all of it.
"""

__version__ = "0.1.0"

from .network import (
    AUTO,
    Dag,
    HazardTerm,
    InputSignal,
    Occupancy,
    Reaction,
    ReactionKind,
    ReactionNetwork,
    Species,
    ValidationReport,
    Violation,
    ensure_valid,
    hazards_for,
    model_hash,
    regulation_dag,
    scaled_rates,
    validate,
    with_rates,
)
from .dsl import (
    ParseDiagnostic,
    ParseResult,
    canonicalize,
    parse_model,
    parse_model_bytes,
    serialize_model,
)
from .builtins import builtin_names, builtin_source, load_builtin
from .ssa import (
    SimConfig,
    Trajectory,
    simulate_coupled_pair,
    simulate_ssa,
    write_end_states_csv,
    write_trajectory_csv,
)
from .batch import ssa_end_states
from .equilibrium import (
    EquilibriumModel,
    ThetaFunction,
    derive_equilibrium,
    equilibrium_means,
    mean_trajectory,
)
from .scm import (
    NoiseKind,
    NoisePosterior,
    PointMass,
    SampleBag,
    Scm,
    UniformInterval,
    abduct,
    build_scm,
    counterfactual,
    counterfactual_batch,
    do,
    sample,
    soft_intervention_rates,
)
from .harness import (
    EffectSample,
    MisspecConfig,
    MisspecReport,
    ScaleRule,
    eval_deterministic,
    eval_misspecification,
    eval_stochastic,
    write_effects_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")]
