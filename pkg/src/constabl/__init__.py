"""constabl: parse, check, simulate and fuzz concurrent statecharts.

The pieces, in dependency order:

  model       the statechart object model and its expression language
  parser      text format -> model, plus the canonical pretty printer
  structural  containment math and the static checks
  cfg         control-flow graphs for code blocks
  transcode   per-step code values, control points and conflicts
  trace       NDJSON run traces and the linearization validator
  engine      the interleaving interpreter
  fuzz        randomized campaigns, oracles, witness minimization
  session     interactive runs (event or instruction stepping)
  server      WebSocket wrapper around sessions
  cli         the `constabl` command
"""

from .diagnostics import Diagnostic, ParseError, errors_of
from .engine import (
    DEFAULT_STEP_BUDGET,
    EngineError,
    Environment,
    EvalError,
    InvalidConfigurationError,
    ModelCheckError,
    NonterminationError,
    RandomScheduler,
    ScriptedScheduler,
    SimulationResult,
    StepOutcome,
    cst,
    cst_states,
    enabled_transitions,
    eval_expr,
    init_model,
    is_valid_configuration,
    simulate,
    simulation_step,
)
from .fuzz import (
    CampaignReport,
    Finding,
    FuzzConfig,
    Witness,
    events_from_bytes,
    fuzz_campaign,
    minimize_witness,
    reproduce,
)
from .model import Model, State, StateType, Storage, Transition
from .parser import parse_expression, parse_model, parse_model_file, pretty_print
from .session import Session, SessionError
from .structural import (
    check_model,
    closest_common_ancestor,
    common_ancestors,
    cca_of_transitions,
    is_ancestor,
    substates,
)
from .trace import Trace, read_ndjson, validate_step
from .transcode import (
    CodeIndex,
    ConflictError,
    code_notation,
    conflict,
    step_code,
    transition_code,
)

__version__ = "0.1.0"

__all__ = [
    "CampaignReport",
    "CodeIndex",
    "ConflictError",
    "DEFAULT_STEP_BUDGET",
    "Diagnostic",
    "EngineError",
    "Environment",
    "EvalError",
    "Finding",
    "FuzzConfig",
    "InvalidConfigurationError",
    "Model",
    "ModelCheckError",
    "NonterminationError",
    "ParseError",
    "RandomScheduler",
    "ScriptedScheduler",
    "Session",
    "SessionError",
    "SimulationResult",
    "State",
    "StateType",
    "StepOutcome",
    "Storage",
    "Trace",
    "Transition",
    "Witness",
    "cca_of_transitions",
    "check_model",
    "closest_common_ancestor",
    "code_notation",
    "common_ancestors",
    "conflict",
    "cst",
    "cst_states",
    "enabled_transitions",
    "errors_of",
    "eval_expr",
    "events_from_bytes",
    "fuzz_campaign",
    "init_model",
    "is_ancestor",
    "is_valid_configuration",
    "minimize_witness",
    "parse_expression",
    "parse_model",
    "parse_model_file",
    "pretty_print",
    "read_ndjson",
    "reproduce",
    "simulate",
    "simulation_step",
    "step_code",
    "substates",
    "transition_code",
    "validate_step",
]
