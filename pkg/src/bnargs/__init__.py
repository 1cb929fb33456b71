"""bnargs: extract, score and verbalize arguments from Bayesian networks."""

from .factors import (
    Factor,
    FactorError,
    Variable,
    constant_factor,
    factor_distance,
    implied_logodds,
    indicator_factor,
)
from .model_io import (
    BifSyntaxError,
    DescriptionDictionary,
    DiscreteNetwork,
    FactorGraph,
    NetworkValidationError,
    build_factor_graph,
    load_bif_file,
    load_descriptions,
    network_summary,
    parse_bif,
)
from .inference import (
    BeliefResult,
    ContradictionError,
    enumerate_posterior,
    init_potentials,
    posterior_beliefs,
    prior_odds,
    run_message_passing,
)
from .argument_core import (
    Argument,
    ArgumentError,
    EffectTable,
    UnionClashError,
    UnionCycleError,
    argument_effect,
    argument_strength,
    argument_union,
    chain_argument,
    decompose_simple,
    is_independent,
    is_proper,
    is_subargument,
    step_effect,
)
from .argument_mining import (
    MiningConfig,
    all_local_arguments,
    all_simple_arguments,
    default_config,
)
from .explanation import (
    StepClassification,
    classify_step,
    explain_argument,
    strength_qualifier,
)
from .evaluation import (
    EvalReport,
    QuerySpec,
    approximate_posterior_odds,
    run_study,
    sample_queries,
)

__version__ = "0.1.0"


def fixture_path(name: str):
    """Path to a bundled network or description file (asia.bif, alarm.bif, ...)."""
    from importlib import resources

    return resources.files(__name__).joinpath("data", name)
