"""Deterministic seeded execution with runtime contract checking.

Scheduling picks uniformly among enabled moves with splitmix64, a fixed
portable generator, so equal inputs (assembly, entry, arguments, seed,
step budget) give byte-identical traces across runs and platforms.

Preconditions are checked when a service is entered (at init for the
entry service, at the call site for called services); postconditions are
checked whenever a service arrives at one of its final states, with the
``result`` variable bound by its result emission or by assignment.
Contract violations are trace findings and do not abort the run unless
``fatal_contracts`` is set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import KmeliaError
from .exprs import UNKNOWN, eval_partial, render_expr
from .product import UnknownEntry
from .semantics import Engine, SyncLabel


class MissingArgument(KmeliaError):
    pass


class SplitMix64:
    """splitmix64: tiny, fully specified, portable 64-bit generator."""

    _MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = seed & self._MASK

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & self._MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self._MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self._MASK
        return z ^ (z >> 31)

    def pick(self, n: int) -> int:
        return self.next_u64() % n


@dataclass
class ContractViolation:
    service: str  # "Component.service"
    which: str  # 'pre' | 'post'
    predicate_text: str
    store: dict


@dataclass
class TraceEvent:
    step: int
    kind: str  # Internal|Send|Receive|Call|Start|Result|ContractViolation|Terminated
    component: str | None = None
    service: str | None = None
    channel: str | None = None
    message: str | None = None
    store_delta: dict = field(default_factory=dict)  # var -> (old, new)
    detail: ContractViolation | None = None

    def to_json_obj(self) -> dict:
        obj = {
            "step": self.step,
            "kind": self.kind,
            "component": self.component,
            "service": self.service,
            "channel": self.channel,
            "message": self.message,
            "store_delta": {
                name: [_json_value(old), _json_value(new)]
                for name, (old, new) in sorted(self.store_delta.items())
            },
        }
        if self.detail is not None:
            obj["detail"] = {
                "service": self.detail.service,
                "which": self.detail.which,
                "predicate_text": self.detail.predicate_text,
                "store": {k: _json_value(v) for k, v in sorted(self.detail.store.items())},
            }
        return obj


def _json_value(v):
    return "unknown" if v is UNKNOWN else v


@dataclass
class SimSession:
    assembly: object
    engine: Engine
    entry: tuple
    seed: int
    rng: SplitMix64
    config: object
    trace: list = field(default_factory=list)
    sync_trace: list = field(default_factory=list)
    step_count: int = 0
    halted: bool = False
    terminated: str | None = None  # 'success' | 'deadlock'
    fatal_contracts: bool = False
    violations: int = 0

    def _emit(self, kind, **fields) -> TraceEvent:
        event = TraceEvent(step=len(self.trace), kind=kind, **fields)
        self.trace.append(event)
        return event


def init_session(
    assembly,
    entry,
    args: dict | None,
    seed: int,
    fatal_contracts: bool = False,
) -> SimSession:
    """Start a session at the entry service's initial state.

    ``args`` must bind every entry parameter; pass None to leave them
    unknown (used by witness replay, which skips contract checking).
    """
    engine = Engine(assembly)
    key = tuple(entry)
    if key not in engine.specs:
        raise UnknownEntry(f"no service '{key[0]}.{key[1]}' in the assembly")
    spec = engine.specs[key]
    if spec.kind != "provided":
        raise UnknownEntry(f"'{key[0]}.{key[1]}' is not a provided service")
    if args is not None:
        for p, _t in spec.signature.params:
            if p not in args:
                raise MissingArgument(f"entry parameter '{p}' not bound")
    config = engine.initial_config([(key, args)])
    session = SimSession(
        assembly=assembly,
        engine=engine,
        entry=key,
        seed=seed,
        rng=SplitMix64(seed),
        config=config,
        fatal_contracts=fatal_contracts,
    )
    if args is not None:
        store = config.store_of(key)
        if eval_partial(spec.precondition, store) is False:
            session._emit(
                "ContractViolation",
                component=key[0],
                service=key[1],
                detail=ContractViolation(
                    service=f"{key[0]}.{key[1]}",
                    which="pre",
                    predicate_text=render_expr(spec.precondition),
                    store=store,
                ),
            )
            session.violations += 1
            session.halted = True
    return session


def step(session: SimSession) -> TraceEvent:
    """Apply one scheduled move; returns the move's primary trace event.

    Synchronized pairs append a companion event (Receive after Send, Start
    after Call); a Terminated event is emitted when no move is enabled.
    """
    if session.halted or session.terminated:
        raise KmeliaError("session already finished")
    engine = session.engine
    moves = engine.moves(session.config)
    if not moves:
        status = engine.terminal_status(session.config)
        session.terminated = status
        return session._emit("Terminated", message=status)

    move = moves[session.rng.pick(len(moves))]
    return apply_move(session, move)


def apply_move(session: SimSession, move) -> TraceEvent:
    engine = session.engine
    effect = engine.apply(session.config, move)
    session.config = effect.config
    session.sync_trace.append(effect.label)
    session.step_count += 1
    p, q = move.primary, move.partner
    primary = None

    if move.kind == "internal":
        primary = session._emit(
            "Internal",
            component=p[0],
            service=p[1],
            store_delta=effect.deltas.get(p, {}),
        )
    elif move.kind == "message":
        primary = session._emit(
            "Send",
            component=p[0],
            service=p[1],
            channel=move.channel,
            message=move.message,
            store_delta=effect.deltas.get(p, {}),
        )
        session._emit(
            "Receive",
            component=q[0],
            service=q[1],
            channel=move.channel,
            message=move.message,
            store_delta=effect.deltas.get(q, {}),
        )
    elif move.kind == "call":
        primary = session._emit(
            "Call",
            component=p[0],
            service=p[1],
            channel=move.channel,
            message=move.message,
            store_delta=effect.deltas.get(p, {}),
        )
        session._emit(
            "Start",
            component=q[0],
            service=q[1],
            channel=move.channel,
            message=move.message,
            store_delta=effect.deltas.get(q, {}),
        )
        _check_pre(session, q)
    elif move.kind == "result":
        primary = session._emit(
            "Result",
            component=p[0],
            service=p[1],
            channel=move.channel,
            message=move.message,
            store_delta=effect.deltas.get(q, {}),
        )
    _check_posts(session, effect)
    if session.violations and session.fatal_contracts:
        session.halted = True
    return primary


def _check_pre(session: SimSession, key):
    if _replaying(session):
        return
    engine = session.engine
    pre = engine.precondition_of(key)
    store = session.config.store_of(key)
    if eval_partial(pre, store) is False:
        session._emit(
            "ContractViolation",
            component=key[0],
            service=key[1],
            detail=ContractViolation(
                service=f"{key[0]}.{key[1]}",
                which="pre",
                predicate_text=render_expr(pre),
                store=store,
            ),
        )
        session.violations += 1


def _check_posts(session: SimSession, effect):
    if _replaying(session):
        return
    engine = session.engine
    for key, target in effect.moved:
        if not engine.is_final(key, target):
            continue
        post = engine.postcondition_of(key)
        if key == effect.deactivated:
            store = effect.deactivated_store
        else:
            store = session.config.store_of(key)
        value = eval_partial(post, store)
        if value is True:
            continue
        # False, or undecidable (an unassigned result): the obligation fails
        session._emit(
            "ContractViolation",
            component=key[0],
            service=key[1],
            detail=ContractViolation(
                service=f"{key[0]}.{key[1]}",
                which="post",
                predicate_text=render_expr(post),
                store=store,
            ),
        )
        session.violations += 1


def _replaying(session: SimSession) -> bool:
    return session.seed is None


def run(
    assembly,
    entry,
    args: dict | None,
    seed: int,
    max_steps: int,
    fatal_contracts: bool = False,
):
    """Drive a session to completion; outcome is one of success, deadlock,
    violation, step_budget_exhausted."""
    session = init_session(assembly, entry, args, seed, fatal_contracts)
    if session.halted:
        return session.trace, "violation"
    while session.step_count < max_steps and not (session.halted or session.terminated):
        step(session)
    if session.violations:
        outcome = "violation"
    elif session.terminated:
        outcome = session.terminated
    else:
        outcome = "step_budget_exhausted"
    return session.trace, outcome


def replay_witness(assembly, entry, witness) -> SimSession:
    """Re-drive a session along a verdict's witness labels; returns the session
    at the flagged configuration (contract checking is off)."""
    session = init_session(assembly, entry, None, seed=0)
    session.seed = None  # replay marker
    for expected in witness:
        found = None
        for move in session.engine.moves(session.config):
            effect_label = _label_preview(session.engine, session.config, move)
            if effect_label == expected:
                found = move
                break
        if found is None:
            raise KmeliaError(f"witness step not enabled: {expected}")
        apply_move(session, found)
    return session


def _label_preview(engine: Engine, config, move) -> SyncLabel:
    return engine.apply(config, move).label


def write_trace(trace, fp):
    """One JSON object per line; key order and separators are fixed."""
    for event in trace:
        fp.write(json.dumps(event.to_json_obj(), sort_keys=True, separators=(",", ":")))
        fp.write("\n")


def render_trace(trace) -> str:
    import io

    buf = io.StringIO()
    write_trace(trace, buf)
    return buf.getvalue()
