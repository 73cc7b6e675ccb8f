"""Two interpreters for guarded-assignment programs over shared term stores.

The fast engine keeps exactly one value per tracked term (the program's terms
and their subterms, ordered small to big) inside a maximally shared graph
store.  A transition evaluates guards by id comparisons, collects the enabled
assignments into an update set, and then recomputes the tracked values in
order: constructor applications intern, dynamic reads are resolved against the
update set, the unchanged-argument fast path, or a search across same-symbol
tracked terms whose old argument values match; anything else falls soft to
undef.

The reference engine executes the same programs over a full location map with
recursive lookup and no tracked-value machinery.  It is the semantic oracle
the fast engine is differentially tested against; `compare_engines` runs both
in lockstep and reports the first step where any tracked term's value differs.

Oracle symbols are realized by nested runs of their body programs over the
same store.  In "unit" cost mode a call charges one operation (and its inner
transitions are left out of the reported step count); in "inline" mode the
nested run's full metered cost and transitions are charged.  Results are
memoized per (oracle, argument ids) within a run; memo hits charge one
operation in both modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .cost import CostMeter, CostReport, StepCost
from .syntax import (
    Assign,
    Cond,
    CriticalTerms,
    GAtom,
    GAnd,
    GNot,
    GOr,
    OracleDef,
    Program,
    Stmt,
    critical_terms,
)
from .tangle import NodeId, Tangle, new_tangle
from .terms import (
    KIND_CONSTRUCTOR,
    KIND_DYNAMIC,
    KIND_ORACLE,
    Symbol,
    Term,
    compact_size,
    distinct_subterms,
    format_term,
)

# Run outcomes.
OUTPUT = "output"
UNDEF_OUTPUT = "undef_output"
CLASH = "clash"
FUEL_EXHAUSTED = "fuel_exhausted"

# Step outcome kinds.
NEXT = "next"
TERMINAL = "terminal"
STEP_CLASH = "clash"

# Oracle cost modes.
MODE_UNIT = "unit"
MODE_INLINE = "inline"

_UNDEF_SLOT = -1

_KIND_CONS = 0
_KIND_DYN = 1
_KIND_ORACLE = 2


@dataclass(frozen=True)
class ClashInfo:
    symbol: str
    args: tuple[NodeId, ...]

    def __str__(self):
        inner = ",".join(str(a.index) for a in self.args)
        return f"{self.symbol}({inner})"


@dataclass(frozen=True)
class _Slot:
    kind: int
    sym: Symbol
    child_slots: tuple[int, ...]
    same_head: tuple[int, ...] = ()


@dataclass(frozen=True)
class _CAssign:
    sym: Symbol
    arg_slots: tuple[int, ...]
    rhs_slot: int


@dataclass(frozen=True)
class _CCond:
    test: tuple
    then: tuple
    orelse: tuple


@dataclass
class _OraclePlan:
    symbol: Symbol
    plan: "ExecPlan"


@dataclass
class ExecPlan:
    """A program compiled against its ordered tracked-term list."""

    program: Program
    criticals: CriticalTerms
    slots: tuple[_Slot, ...]
    crules: tuple
    z_slot: int
    input_slots: tuple[int, ...]
    oracle_plans: dict[str, _OraclePlan]
    c_program: int
    init_weight: int  # growth headroom of this plan's own initialization

    @property
    def m(self) -> int:
        return len(self.slots)


def _compile_guard(g, pos) -> tuple:
    if isinstance(g, GAtom):
        l = _UNDEF_SLOT if g.lhs is None else pos[g.lhs]
        r = _UNDEF_SLOT if g.rhs is None else pos[g.rhs]
        return ("atom", l, r)
    if isinstance(g, GNot):
        return ("not", _compile_guard(g.sub, pos))
    if isinstance(g, GAnd):
        return ("and", _compile_guard(g.left, pos), _compile_guard(g.right, pos))
    if isinstance(g, GOr):
        return ("or", _compile_guard(g.left, pos), _compile_guard(g.right, pos))
    raise TypeError(f"unknown guard node {g!r}")


def _compile_stmt(stmt: Stmt, pos) -> object:
    if isinstance(stmt, Assign):
        rhs_slot = _UNDEF_SLOT if stmt.rhs is None else pos[stmt.rhs]
        return _CAssign(stmt.head, tuple(pos[a] for a in stmt.head_args), rhs_slot)
    assert isinstance(stmt, Cond)
    return _CCond(
        _compile_guard(stmt.guard, pos),
        tuple(_compile_stmt(s, pos) for s in stmt.then),
        tuple(_compile_stmt(s, pos) for s in stmt.orelse),
    )


def _assignment_rhs_sizes(stmts: Iterable[Stmt]) -> int:
    total = 0
    for stmt in stmts:
        if isinstance(stmt, Assign):
            total += 0 if stmt.rhs is None else compact_size(stmt.rhs)
        else:
            total += _assignment_rhs_sizes(stmt.then)
            total += _assignment_rhs_sizes(stmt.orelse)
    return total


def build_plan(program: Program) -> ExecPlan:
    ct = critical_terms(program)
    pos = ct.position
    kinds = {KIND_CONSTRUCTOR: _KIND_CONS, KIND_DYNAMIC: _KIND_DYN, KIND_ORACLE: _KIND_ORACLE}

    by_symbol: dict[str, list[int]] = {}
    for i, t in enumerate(ct.terms):
        if t.head.kind == KIND_DYNAMIC:
            by_symbol.setdefault(t.head.name, []).append(i)

    slots = []
    for t in ct.terms:
        kind = kinds[t.head.kind]
        same = tuple(by_symbol.get(t.head.name, ())) if kind == _KIND_DYN else ()
        slots.append(_Slot(kind, t.head, tuple(pos[a] for a in t.args), same))

    oracle_plans = {
        o.symbol.name: _OraclePlan(o.symbol, build_plan(o.body)) for o in program.oracles
    }

    # Growth constant: the sum of right-hand-side compact sizes bounds what a
    # transition can intern.  Each oracle adds the headroom of its own nested
    # initialization and transitions (a per-record bound, hence the max).
    c_program = _assignment_rhs_sizes(program.rules)
    for oplan in oracle_plans.values():
        c_program += max(oplan.plan.c_program, oplan.plan.init_weight)

    init_weight = sum(compact_size(t) for t in ct.terms)
    for a in program.init:
        init_weight += sum(compact_size(arg) for arg in a.head_args)
        init_weight += 0 if a.rhs is None else compact_size(a.rhs)

    return ExecPlan(
        program=program,
        criticals=ct,
        slots=tuple(slots),
        crules=tuple(_compile_stmt(s, pos) for s in program.rules),
        z_slot=pos[Term(program.output)],
        input_slots=tuple(pos[Term(sym)] for sym in program.inputs),
        oracle_plans=oracle_plans,
        c_program=c_program,
        init_weight=init_weight,
    )


# --- Run context --------------------------------------------------------------


class _FuelSignal(Exception):
    pass


class _ClashSignal(Exception):
    def __init__(self, info: ClashInfo):
        self.info = info


@dataclass
class _RunCore:
    """State shared by a whole run, nested oracle runs included."""

    tangle: Tangle
    meter: CostMeter
    mode: str
    fuel_left: int
    memo: dict = field(default_factory=dict)
    series: list[StepCost] = field(default_factory=list)
    steps_reported: int = 0
    record: bool = True
    trace: object = None
    check: bool = False
    n: int = 0
    last_ops: int = 0
    memoize: bool = True

    def record_point(self):
        if self.record:
            ops = self.meter.ram_ops
            st = self.tangle.stats()
            self.series.append(
                StepCost(len(self.series), ops - self.last_ops, st.vertices, st.edges)
            )
            self.last_ops = ops


@dataclass
class RunContext:
    core: _RunCore
    plan: ExecPlan
    engine: str  # "critical" | "reference"


@dataclass
class CriticalState:
    """Fast-engine state: one value (node id or None for undef) per tracked term."""

    ctx: RunContext
    values: list[NodeId | None]
    step_index: int = 0


@dataclass
class RefState:
    """Reference state: finite location map; values kept for comparison."""

    ctx: RunContext
    store: dict[tuple[str, tuple[NodeId, ...]], NodeId]
    values: list[NodeId | None]
    step_index: int = 0


@dataclass(frozen=True)
class StepOutcome:
    kind: str  # next | terminal | clash
    state: "CriticalState | RefState | None" = None
    clash: ClashInfo | None = None


@dataclass
class RunResult:
    outcome: str
    output: Term | None
    steps: int
    n: int
    cost: CostReport
    clash: ClashInfo | None = None


# --- Guard evaluation and update collection -----------------------------------


def _eval_guard(meter: CostMeter, g: tuple, values) -> bool:
    tag = g[0]
    if tag == "atom":
        meter.charge_compare()
        l, r = g[1], g[2]
        if l == _UNDEF_SLOT and r == _UNDEF_SLOT:
            return True
        if l == _UNDEF_SLOT:
            return values[r] is None
        if r == _UNDEF_SLOT:
            return values[l] is None
        a, b = values[l], values[r]
        return a is not None and b is not None and a == b
    if tag == "not":
        return not _eval_guard(meter, g[1], values)
    if tag == "and":
        return _eval_guard(meter, g[1], values) and _eval_guard(meter, g[2], values)
    return _eval_guard(meter, g[1], values) or _eval_guard(meter, g[2], values)


def _collect_enabled(meter: CostMeter, stmts, values, out: list):
    for s in stmts:
        if type(s) is _CAssign:
            out.append(s)
        elif _eval_guard(meter, s.test, values):
            _collect_enabled(meter, s.then, values, out)
        else:
            _collect_enabled(meter, s.orelse, values, out)


def _build_updates(ctx: RunContext, enabled, values):
    """The update set, or a clash.  Assignments whose location has an undef
    argument name no location and contribute nothing (strictness)."""
    meter = ctx.core.meter
    updates: dict[tuple[str, tuple[NodeId, ...]], NodeId | None] = {}
    for ca in enabled:
        argvals = tuple(values[s] for s in ca.arg_slots)
        meter.charge_read(len(argvals) + 1)
        if any(v is None for v in argvals):
            continue
        val = None if ca.rhs_slot == _UNDEF_SLOT else values[ca.rhs_slot]
        key = (ca.sym.name, argvals)
        meter.charge_probe()
        if key in updates:
            if updates[key] != val:
                return None, ClashInfo(ca.sym.name, argvals)
        else:
            updates[key] = val
            meter.charge_write()
    return updates, None


# --- Value recomputation --------------------------------------------------------


def _invoke(ctx: RunContext, name: str, argids: tuple[NodeId, ...]) -> NodeId | None:
    """An oracle call inside a run: memo probe, then a nested run on a miss."""
    core = ctx.core
    meter = core.meter
    oplan = ctx.plan.oracle_plans[name]
    key = (name, argids)
    meter.charge_probe()
    if core.memoize and key in core.memo:
        return core.memo[key]

    nested_ctx = RunContext(core, oplan.plan, ctx.engine)
    if core.mode == MODE_UNIT:
        saved_meter, saved_record = core.meter, core.record
        throwaway = CostMeter()
        core.meter = throwaway
        core.tangle.meter = throwaway
        core.record = False
        try:
            value = _run_nested(nested_ctx, argids)
        finally:
            core.meter, core.record = saved_meter, saved_record
            core.tangle.meter = saved_meter
        core.meter.charge_read()  # the single charged operation for the call
    else:
        value = _run_nested(nested_ctx, argids)
    if core.memoize:
        core.memo[key] = value
    return value


def _run_nested(ctx: RunContext, argids: tuple[NodeId, ...]) -> NodeId | None:
    if ctx.engine == "critical":
        state = _init_state(ctx, input_ids=argids, keep_store=False)
        step = step_critical
    else:
        state = _init_state(ctx, input_ids=argids, keep_store=True)
        step = step_ref
    ctx.core.record_point()
    while True:
        if ctx.core.fuel_left <= 0:
            enabled: list = []
            _collect_enabled(ctx.core.meter, ctx.plan.crules, state.values, enabled)
            if enabled:
                raise _FuelSignal()
            break
        out = step(ctx.plan.program, state)
        if out.kind == TERMINAL:
            break
        if out.kind == STEP_CLASH:
            raise _ClashSignal(out.clash)
        state = out.state
    return state.values[ctx.plan.z_slot]


def _new_values(ctx: RunContext, values, updates, store=None):
    """Recompute every tracked value, small to big, for the successor state.

    With a store (reference engine) dynamic reads consult the location map;
    without one they are resolved within the tracked-value window.
    """
    core = ctx.core
    meter = core.meter
    tangle = core.tangle
    slots = ctx.plan.slots
    new: list[NodeId | None] = [None] * len(slots)
    for i, slot in enumerate(slots):
        kind = slot.kind
        child_slots = slot.child_slots
        childvals = tuple(new[s] for s in child_slots)
        if any(v is None for v in childvals):
            continue  # strict: undef argument forces undef
        if kind == _KIND_CONS:
            new[i] = tangle.intern(slot.sym, childvals)
        elif kind == _KIND_ORACLE:
            new[i] = _invoke(ctx, slot.sym.name, childvals)
        else:
            key = (slot.sym.name, childvals)
            meter.charge_probe()
            if key in updates:
                new[i] = updates[key]
            elif store is not None:
                meter.charge_probe()
                new[i] = store.get(key)
            else:
                meter.charge_compare(max(1, len(child_slots)))
                if childvals == tuple(values[s] for s in child_slots):
                    new[i] = values[i]
                else:
                    for j in slot.same_head:
                        cand = slots[j]
                        meter.charge_compare(max(1, len(cand.child_slots)))
                        if values[j] is None:
                            continue
                        if childvals == tuple(values[s] for s in cand.child_slots):
                            new[i] = values[j]
                            break
    return new


def _check_state(ctx: RunContext, values):
    """Debug assertions: strictness and constructor coherence (unmetered)."""
    core = ctx.core
    saved = core.meter.enabled
    core.meter.enabled = False
    try:
        for i, slot in enumerate(ctx.plan.slots):
            childvals = tuple(values[s] for s in slot.child_slots)
            if any(v is None for v in childvals):
                assert values[i] is None, f"strictness violated at slot {i}"
            elif slot.kind == _KIND_CONS:
                expect = core.tangle.intern(slot.sym, childvals)
                assert values[i] == expect, f"constructor coherence violated at slot {i}"
    finally:
        core.meter.enabled = saved


# --- Initialization --------------------------------------------------------------


def _make_core(
    program: Program,
    plan: ExecPlan,
    *,
    tangle: Tangle | None,
    meter: CostMeter | None,
    fuel: int,
    oracle_mode: str,
    trace=None,
    check_invariants: bool = False,
    memoize_oracles: bool = True,
) -> _RunCore:
    if oracle_mode not in (MODE_UNIT, MODE_INLINE):
        raise ValueError(f"unknown oracle cost mode {oracle_mode!r}")
    if meter is None:
        meter = tangle.meter if tangle is not None else CostMeter()
    if tangle is None:
        tangle = new_tangle(program.vocab, meter)
    else:
        tangle.meter = meter
    core = _RunCore(
        tangle=tangle, meter=meter, mode=oracle_mode, fuel_left=fuel,
        memoize=memoize_oracles,
    )
    core.trace = trace
    core.check = check_invariants
    return core


def _check_inputs(program: Program, inputs: Sequence[Term]):
    if len(inputs) != len(program.inputs):
        raise ValueError(
            f"program {program.name} takes {len(program.inputs)} inputs, "
            f"got {len(inputs)}"
        )
    for sym, t in zip(program.inputs, inputs):
        for sub in distinct_subterms(t):
            if sub.head.kind != KIND_CONSTRUCTOR:
                raise ValueError(
                    f"input {sym.name} = {format_term(t)} uses "
                    f"non-constructor symbol {sub.head.name!r}"
                )


def _init_state(
    ctx: RunContext,
    *,
    input_terms: Sequence[Term] | None = None,
    input_ids: Sequence[NodeId] | None = None,
    keep_store: bool,
):
    """Shared initialization: bind inputs, load the init block, then evaluate
    the tracked terms small to big against the initial location map."""
    core = ctx.core
    meter = core.meter
    tangle = core.tangle
    program = ctx.plan.program

    store: dict[tuple[str, tuple[NodeId, ...]], NodeId] = {}
    if input_ids is None:
        input_ids = [tangle.import_term(t) for t in (input_terms or ())]
    for sym, nid in zip(program.inputs, input_ids):
        store[(sym.name, ())] = nid
        meter.charge_write()
    for a in program.init:
        argids = tuple(tangle.import_term(t) for t in a.head_args)
        assert a.rhs is not None  # validated: init values are constructor terms
        store[(a.head.name, argids)] = tangle.import_term(a.rhs)
        meter.charge_probe()
        meter.charge_write()

    values = _new_values(ctx, [None] * ctx.plan.m, {}, store=store)
    if core.check:
        _check_state(ctx, values)
    if keep_store:
        return RefState(ctx, store, values)
    return CriticalState(ctx, values)


def init_critical(
    program: Program,
    inputs: Sequence[Term] = (),
    *,
    tangle: Tangle | None = None,
    meter: CostMeter | None = None,
    fuel: int = 10**6,
    oracle_mode: str = MODE_INLINE,
    check_invariants: bool = False,
) -> CriticalState:
    """Initial fast-engine state for the given input terms."""
    _check_inputs(program, inputs)
    plan = build_plan(program)
    core = _make_core(
        program, plan, tangle=tangle, meter=meter, fuel=fuel,
        oracle_mode=oracle_mode, check_invariants=check_invariants,
    )
    ctx = RunContext(core, plan, "critical")
    core.n = sum(compact_size(t) for t in inputs)
    state = _init_state(ctx, input_terms=inputs, keep_store=False)
    core.record_point()
    return state


def init_ref(
    program: Program,
    inputs: Sequence[Term] = (),
    *,
    tangle: Tangle | None = None,
    meter: CostMeter | None = None,
    fuel: int = 10**6,
    oracle_mode: str = MODE_INLINE,
    check_invariants: bool = False,
) -> RefState:
    """Initial reference-engine state (full location map)."""
    _check_inputs(program, inputs)
    plan = build_plan(program)
    core = _make_core(
        program, plan, tangle=tangle, meter=meter, fuel=fuel,
        oracle_mode=oracle_mode, check_invariants=check_invariants,
    )
    ctx = RunContext(core, plan, "reference")
    core.n = sum(compact_size(t) for t in inputs)
    state = _init_state(ctx, input_terms=inputs, keep_store=True)
    core.record_point()
    return state


# --- Transitions -----------------------------------------------------------------


def _commit(core: _RunCore):
    core.fuel_left -= 1
    if core.record:
        core.steps_reported += 1
    core.record_point()


def step_critical(program: Program, state: CriticalState) -> StepOutcome:
    """One fast-engine transition; Terminal when no assignment is enabled."""
    ctx = state.ctx
    core = ctx.core
    values = state.values
    enabled: list = []
    _collect_enabled(core.meter, ctx.plan.crules, values, enabled)
    if not enabled:
        return StepOutcome(TERMINAL)
    updates, clash = _build_updates(ctx, enabled, values)
    if clash is not None:
        return StepOutcome(STEP_CLASH, clash=clash)
    new = _new_values(ctx, values, updates, store=None)
    if core.check:
        _check_state(ctx, new)
    nxt = CriticalState(ctx, new, state.step_index + 1)
    _commit(core)
    if core.trace is not None:
        _trace_line(core, nxt.step_index, enabled, updates)
    return StepOutcome(NEXT, nxt)


def step_ref(program: Program, state: RefState) -> StepOutcome:
    """One reference-engine transition over the full location map."""
    ctx = state.ctx
    core = ctx.core
    values = state.values
    enabled: list = []
    _collect_enabled(core.meter, ctx.plan.crules, values, enabled)
    if not enabled:
        return StepOutcome(TERMINAL)
    updates, clash = _build_updates(ctx, enabled, values)
    if clash is not None:
        return StepOutcome(STEP_CLASH, clash=clash)
    store = dict(state.store)
    for key, val in updates.items():
        core.meter.charge_write()
        if val is None:
            store.pop(key, None)  # undef means the location leaves the finite support
        else:
            store[key] = val
    new = _new_values(ctx, values, updates, store=store)
    if core.check:
        _check_state(ctx, new)
    nxt = RefState(ctx, store, new, state.step_index + 1)
    _commit(core)
    if core.trace is not None:
        _trace_line(core, nxt.step_index, enabled, updates)
    return StepOutcome(NEXT, nxt)


def _trace_line(core: _RunCore, index: int, enabled, updates):
    parts = []
    for (name, args), val in updates.items():
        inner = ",".join(str(a.index) for a in args)
        parts.append(f"{name}({inner}):{'undef' if val is None else val.index}")
    st = core.tangle.stats()
    core.trace.write(
        f"i={index} enabled={len(enabled)} updates={';'.join(parts)} "
        f"vertices={st.vertices} edges={st.edges} ops={core.meter.ram_ops}\n"
    )


# --- Whole runs ------------------------------------------------------------------


def run(
    program: Program,
    inputs: Sequence[Term] = (),
    fuel: int = 10**6,
    engine: str = "critical",
    oracle_mode: str = MODE_INLINE,
    *,
    trace=None,
    check_invariants: bool = False,
    tangle: Tangle | None = None,
    meter: CostMeter | None = None,
    memoize_oracles: bool = True,
) -> RunResult:
    """Execute to termination, clash, or fuel exhaustion, and report cost.

    Fuel bounds the total number of transitions executed, nested oracle runs
    included, in both cost modes; the reported step count excludes nested
    transitions in unit mode.
    """
    if engine == "critical":
        init, step = init_critical, step_critical
        keep_store = False
    elif engine == "reference":
        init, step = init_ref, step_ref
        keep_store = True
    else:
        raise ValueError(f"unknown engine {engine!r}")
    _check_inputs(program, inputs)
    plan = build_plan(program)
    core = _make_core(
        program, plan, tangle=tangle, meter=meter, fuel=fuel,
        oracle_mode=oracle_mode, trace=trace, check_invariants=check_invariants,
        memoize_oracles=memoize_oracles,
    )
    ctx = RunContext(core, plan, engine)
    core.n = sum(compact_size(t) for t in inputs)

    outcome = None
    clash = None
    state = None
    baseline_index = -1
    try:
        state = _init_state(ctx, input_terms=inputs, keep_store=keep_store)
        core.record_point()
        baseline_index = len(core.series) - 1
        while True:
            if core.fuel_left <= 0:
                probe: list = []
                _collect_enabled(core.meter, plan.crules, state.values, probe)
                outcome = UNDEF_OUTPUT if not probe else FUEL_EXHAUSTED
                break
            out = step(program, state)
            if out.kind == TERMINAL:
                outcome = UNDEF_OUTPUT
                break
            if out.kind == STEP_CLASH:
                outcome = CLASH
                clash = out.clash
                break
            state = out.state
    except _FuelSignal:
        outcome = FUEL_EXHAUSTED
    except _ClashSignal as sig:
        outcome = CLASH
        clash = sig.info

    # Fold trailing guard-probe ops (terminal detection) into the last record
    # so that total_ops is exactly the sum of the per-step series.  init_ops
    # is everything up to the post-initialization baseline record (for a
    # zero-step run the terminal probe lands there too).
    if core.series:
        tail = core.meter.ram_ops - core.last_ops
        if tail:
            last = core.series[-1]
            core.series[-1] = StepCost(last.i, last.ops + tail, last.vertices, last.edges)
            core.last_ops = core.meter.ram_ops
    init_ops = sum(rec.ops for rec in core.series[: baseline_index + 1])

    output_term = None
    if outcome == UNDEF_OUTPUT:
        z = state.values[plan.z_slot]
        if z is not None:
            outcome = OUTPUT
            output_term = core.tangle.extract_term(z)

    report = CostReport(
        n=core.n,
        steps=core.steps_reported,
        init_ops=init_ops,
        total_ops=core.meter.ram_ops,
        word_bits_max=core.meter.word_bits_max,
        c_program=plan.c_program,
        per_step=core.series,
    )
    return RunResult(outcome, output_term, core.steps_reported, core.n, report, clash)


def invoke_oracle(
    odef: OracleDef,
    args: Sequence[NodeId],
    tangle: Tangle,
    mode: str = MODE_INLINE,
    fuel: int = 10**6,
    engine: str = "critical",
) -> tuple[NodeId | None, int]:
    """Run an oracle body on argument ids already in `tangle`.

    Returns the result id (None for undef) and the RAM operations charged:
    the nested run's full cost in inline mode, exactly one in unit mode.
    """
    if len(args) != odef.symbol.arity:
        raise ValueError(
            f"oracle {odef.symbol.name}/{odef.symbol.arity} called with {len(args)} args"
        )
    args = tuple(args)
    for a in args:
        if a.index == 0:
            raise ValueError("oracle arguments must be defined")
    meter = CostMeter()
    saved = tangle.meter
    tangle.meter = meter
    try:
        core = _RunCore(tangle=tangle, meter=meter, mode=mode, fuel_left=fuel)
        core.record = False
        plan = build_plan(odef.body)
        ctx = RunContext(core, plan, engine)
        before = meter.ram_ops
        if mode == MODE_UNIT:
            throwaway = CostMeter()
            core.meter = throwaway
            tangle.meter = throwaway
            try:
                value = _run_nested(ctx, args)
            finally:
                core.meter = meter
                tangle.meter = meter
            meter.charge_read()
        else:
            value = _run_nested(ctx, args)
        return value, meter.ram_ops - before
    finally:
        tangle.meter = saved


# --- Differential testing ---------------------------------------------------------


@dataclass(frozen=True)
class Divergence:
    step: int
    term: Term | None
    critical_value: str
    reference_value: str
    reason: str


@dataclass
class EngineComparison:
    equivalent: bool
    steps: int
    outcome: str
    divergence: Divergence | None = None


def _valuation_divergence(step, plan, sc: CriticalState, sr: RefState) -> Divergence | None:
    tc = sc.ctx.core.tangle
    tr = sr.ctx.core.tangle
    for i, term in enumerate(plan.criticals.terms):
        a, b = sc.values[i], sr.values[i]
        if a is None and b is None:
            continue
        if (a is None) != (b is None):
            return Divergence(
                step, term,
                "undef" if a is None else format_term(tc.extract_term(a)),
                "undef" if b is None else format_term(tr.extract_term(b)),
                "definedness differs",
            )
        ta = tc.extract_term(a)
        tb = tr.extract_term(b)
        if ta != tb:
            return Divergence(step, term, format_term(ta), format_term(tb), "value differs")
    return None


def compare_engines(
    program: Program,
    inputs: Sequence[Term] = (),
    fuel: int = 10**6,
    oracle_mode: str = MODE_INLINE,
) -> EngineComparison:
    """Run both engines in lockstep; report the first step where they differ."""
    plan = build_plan(program)

    def guarded_init(fn):
        try:
            return fn(program, inputs, fuel=fuel, oracle_mode=oracle_mode), None
        except _FuelSignal:
            return None, FUEL_EXHAUSTED
        except _ClashSignal as sig:
            return None, f"clash {sig.info}"

    sc, fail_c = guarded_init(init_critical)
    sr, fail_r = guarded_init(init_ref)
    if fail_c is not None or fail_r is not None:
        if fail_c == fail_r:
            return EngineComparison(True, 0, f"init {fail_c}")
        return EngineComparison(
            False, 0, "diverged",
            Divergence(0, None, str(fail_c), str(fail_r), "initialization differs"),
        )
    div = _valuation_divergence(0, plan, sc, sr)
    if div is not None:
        return EngineComparison(False, 0, "diverged", div)
    steps = 0
    while True:
        if fuel <= 0:
            return EngineComparison(True, steps, "fuel_limited")
        try:
            oc = step_critical(program, sc)
        except (_FuelSignal,):
            oc = StepOutcome(FUEL_EXHAUSTED)
        except _ClashSignal as sig:
            oc = StepOutcome(STEP_CLASH, clash=sig.info)
        try:
            orf = step_ref(program, sr)
        except (_FuelSignal,):
            orf = StepOutcome(FUEL_EXHAUSTED)
        except _ClashSignal as sig:
            orf = StepOutcome(STEP_CLASH, clash=sig.info)
        if oc.kind != orf.kind:
            return EngineComparison(
                False, steps, "diverged",
                Divergence(steps + 1, None, oc.kind, orf.kind, "outcome differs"),
            )
        if oc.kind == TERMINAL:
            return EngineComparison(True, steps, "terminal")
        if oc.kind == STEP_CLASH:
            same = oc.clash == orf.clash
            return EngineComparison(
                same, steps, "clash",
                None if same else Divergence(
                    steps + 1, None, str(oc.clash), str(orf.clash), "clash differs"
                ),
            )
        if oc.kind == FUEL_EXHAUSTED:
            return EngineComparison(True, steps, "fuel_limited")
        sc, sr = oc.state, orf.state
        steps += 1
        fuel -= 1
        div = _valuation_divergence(steps, plan, sc, sr)
        if div is not None:
            return EngineComparison(False, steps, "diverged", div)
