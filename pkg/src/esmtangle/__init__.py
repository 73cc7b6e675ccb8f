"""esmtangle: an effective-state-machine engine over hash-consed term graphs.

Programs are guarded parallel assignments over a constructor-built domain.
Two interpreters execute them: a fast engine that tracks only the program's
term values inside one maximally shared graph store, and a reference engine
over a full location map that serves as its correctness oracle.  Every step is
metered in abstract RAM operations so the engine's per-step and whole-run cost
bounds can be verified empirically.
"""

from .cost import (
    CostMeter,
    CostReport,
    FrozenBounds,
    StepCost,
    Verdict,
    check_growth,
    check_step_linearity,
    check_total_bound,
    emit_report,
)
from .engine import (
    CriticalState,
    Divergence,
    EngineComparison,
    RefState,
    RunResult,
    StepOutcome,
    compare_engines,
    init_critical,
    init_ref,
    invoke_oracle,
    run,
    step_critical,
    step_ref,
)
from .syntax import (
    Assign,
    Cond,
    CriticalTerms,
    OracleDef,
    Program,
    critical_terms,
    format_program,
    parse_program,
    parse_program_file,
    validate_program,
)
from .tangle import NodeId, Tangle, TangleStats, UndefNodeError, new_tangle
from .terms import (
    Symbol,
    Term,
    TermSyntaxError,
    Vocabulary,
    compact_size,
    decode_nat_binary,
    encode_nat_binary,
    format_term,
    parse_term,
    symbol_count,
)

__all__ = [
    "Assign",
    "Cond",
    "CostMeter",
    "CostReport",
    "CriticalState",
    "CriticalTerms",
    "Divergence",
    "EngineComparison",
    "FrozenBounds",
    "NodeId",
    "OracleDef",
    "Program",
    "RefState",
    "RunResult",
    "StepCost",
    "StepOutcome",
    "Symbol",
    "Tangle",
    "TangleStats",
    "Term",
    "TermSyntaxError",
    "UndefNodeError",
    "Verdict",
    "Vocabulary",
    "check_growth",
    "check_step_linearity",
    "check_total_bound",
    "compact_size",
    "compare_engines",
    "critical_terms",
    "decode_nat_binary",
    "emit_report",
    "encode_nat_binary",
    "format_program",
    "format_term",
    "init_critical",
    "init_ref",
    "invoke_oracle",
    "new_tangle",
    "parse_program",
    "parse_program_file",
    "parse_term",
    "run",
    "step_critical",
    "step_ref",
    "symbol_count",
    "validate_program",
]

__version__ = "0.1.0"
