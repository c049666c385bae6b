"""Shared execution semantics for assemblies.

A configuration holds, for every activated service, its current state and
store, plus the stack of open call contexts. Moves are either internal
(a single service takes an elementary transition) or synchronized pairs
of complementary communication actions on one channel:

* ``c!m``  with ``c?m``   -- message send / receive,
* ``c!!s`` with ``c??s``  -- service call / wait-for-start; if the callee
  is not yet activated, the waiting transition is taken from its initial
  state and the callee becomes active with a fresh store,
* ``c!!r`` with ``c??r``  -- result emission by an activated callee toward
  its caller / wait-for-result; the call context closes, and the callee is
  deactivated when the emission lands on one of its final states.

Channels resolve as follows: a named channel is a link channel, or a cal
dependency of the running service (opening a context toward the caller's
component); ``CALLER`` is the channel of the service's open incoming call;
``SELF`` is the per-service internal channel. Guards are evaluated before
the move; a guard over unknown values does not disable the transition
(may-semantics), so analysis over-approximates any concrete run.

Both the synchronized product and the simulator enumerate moves through
this module, which keeps verdicts replayable; independent oracle
implementations live in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import KmeliaError
from .exprs import UNKNOWN, default_value, eval_partial
from .flattening import annotated_closure, flatten_behavior
from .model import (
    Assign,
    CALL,
    Caller,
    Comm,
    Named,
    RECEIVE,
    SEND,
    SelfChannel,
    WAIT,
    comm_actions,
)
from .syntax import render_label

Key = tuple  # (component name, service name)


class EngineError(KmeliaError):
    pass


@dataclass(frozen=True)
class Frame:
    """An open call context: the channel plus both endpoints."""

    channel: str
    caller: Key | None
    callee: Key


@dataclass(frozen=True)
class Configuration:
    locations: tuple  # sorted ((component, service), state)
    stores: tuple  # sorted ((component, service), ((var, value), ...))
    frames: tuple  # of Frame, in opening order

    def location_of(self, key):
        for k, state in self.locations:
            if k == key:
                return state
        return None

    def store_of(self, key) -> dict:
        for k, entries in self.stores:
            if k == key:
                return dict(entries)
        return {}

    def active_keys(self):
        return tuple(k for k, _ in self.locations)

    def frame_of_callee(self, key):
        for f in self.frames:
            if f.callee == key:
                return f
        return None


def _freeze(locations: dict, stores: dict, frames: tuple) -> Configuration:
    return Configuration(
        locations=tuple(sorted(locations.items())),
        stores=tuple(
            (k, tuple(sorted(stores[k].items()))) for k in sorted(stores)
        ),
        frames=frames,
    )


@dataclass(frozen=True)
class Move:
    kind: str  # internal | message | call | result
    primary: Key  # the mover, or the emitting side of a pair
    tindex: int
    partner: Key | None = None
    partner_tindex: int | None = None
    channel: str | None = None
    message: str | None = None
    direction: str | None = None  # emitter-side: '!' or '!!'
    activates: bool = False


@dataclass(frozen=True)
class SyncLabel:
    """Observable description of one product/simulation move; replayable."""

    kind: str
    primary: Key
    primary_tindex: int
    primary_target: str
    partner: Key | None = None
    partner_tindex: int | None = None
    partner_target: str | None = None
    channel: str | None = None
    direction: str | None = None
    message: str | None = None
    text: str = ""

    def witness_entry(self) -> dict:
        return {
            "channel": self.channel,
            "direction": self.direction if self.kind != "internal" else "internal",
            "message": self.message,
            "component": self.primary[0],
            "service": self.primary[1],
        }


@dataclass
class MoveEffect:
    config: Configuration
    label: SyncLabel
    deltas: dict  # key -> {var: (old, new)}
    argv: tuple | None = None
    activated: Key | None = None
    deactivated: Key | None = None
    deactivated_store: dict | None = None
    moved: tuple = ()  # ((key, target state), ...)


@dataclass(frozen=True)
class _Cand:
    key: Key
    tindex: int
    transition: object
    comm: object | None
    channel: str | None
    provider: Key | None


class Engine:
    """Move enumeration and application over an assembly's flattened behaviours."""

    def __init__(self, assembly):
        self.assembly = assembly
        self.specs = {}
        self.flat = {}
        self.outgoing = {}
        self.store_types = {}
        self.findings: list = []
        self._seen_findings = set()
        self.links_by_channel = {l.channel: l for l in assembly.links}
        for c in assembly.components:
            for name, spec in c.services.items():
                key = (c.name, name)
                self.specs[key] = spec
                behavior = flatten_behavior(c, name)
                self.flat[key] = behavior
                adj = {}
                for idx, t in enumerate(behavior.transitions):
                    adj.setdefault(t.source, []).append((idx, t))
                self.outgoing[key] = {s: tuple(v) for s, v in adj.items()}
                types = {p: t for p, t in spec.signature.params}
                for v in spec.locals:
                    types[v.name] = v.type
                for sub in sorted(annotated_closure(c, name)):
                    sub_spec = c.services[sub]
                    for p, t in sub_spec.signature.params:
                        types.setdefault(p, t)
                    for v in sub_spec.locals:
                        types.setdefault(v.name, v.type)
                self.store_types[key] = types

    # -- configurations ------------------------------------------------------
    def fresh_store(self, key) -> dict:
        return {name: default_value(t) for name, t in sorted(self.store_types[key].items())}

    def initial_config(self, entries, frames=()) -> Configuration:
        """Activate ``entries``: pairs (key, args) where args is a store for the
        service's parameters, or None to leave parameters unknown (analysis)."""
        locations, stores = {}, {}
        for key, args in entries:
            spec = self.specs[key]
            store = self.fresh_store(key)
            if args is None:
                for p, _t in spec.signature.params:
                    store[p] = UNKNOWN
            else:
                for p, _t in spec.signature.params:
                    if p in args:
                        store[p] = args[p]
            locations[key] = self.flat[key].initial
            stores[key] = store
        return _freeze(locations, stores, tuple(frames))

    def terminal_status(self, config: Configuration) -> str:
        """Classification of a move-less configuration."""
        all_final = all(
            state in self.flat[key].finals for key, state in config.locations
        )
        return "success" if all_final and not config.frames else "deadlock"

    # -- channel resolution ----------------------------------------------------
    def _resolve(self, key, comm, config):
        """Return (channel id, provider key or None); (None, None) when blocked."""
        ref = comm.channel
        if isinstance(ref, Caller):
            frame = config.frame_of_callee(key)
            if frame is None:
                return None, None
            return frame.channel, None
        if isinstance(ref, SelfChannel):
            comp = key[0]
            provider = (comp, comm.message) if (comp, comm.message) in self.specs else None
            return f"SELF@{key[0]}.{key[1]}", provider
        name = ref.name
        l = self.links_by_channel.get(name)
        if l is not None:
            return name, l.to_endpoint
        spec = self.specs[key]
        if name in spec.dependency.cal:
            frame = config.frame_of_callee(key)
            if frame is None or frame.caller is None:
                return None, None
            provider = (frame.caller[0], name)
            if provider not in self.specs:
                provider = None
            return f"{frame.channel}::cal::{name}", provider
        return None, None

    def _call_message_matches(self, cand: _Cand) -> bool:
        l = self.links_by_channel.get(cand.channel or "")
        if l is not None:
            return cand.comm.message in (l.from_endpoint[1], l.to_endpoint[1])
        return cand.provider is not None and cand.comm.message == cand.provider[1]

    # -- move enumeration -----------------------------------------------------
    def moves(self, config: Configuration) -> list:
        moves: list = []
        emitters: list = []
        receivers: list = []
        active = set(config.active_keys())
        for key, state in config.locations:
            store = config.store_of(key)
            for idx, t in self.outgoing[key].get(state, ()):
                if t.label.guard is not None:
                    if eval_partial(t.label.guard, store) is False:
                        continue
                comms = comm_actions(t.label)
                if len(comms) > 1:
                    raise EngineError(
                        f"{key[0]}.{key[1]}: transition {t.source} -> {t.target} "
                        "has more than one communication action"
                    )
                if not comms:
                    moves.append(Move("internal", key, idx))
                    continue
                comm = comms[0]
                channel, provider = self._resolve(key, comm, config)
                if channel is None:
                    continue
                cand = _Cand(key, idx, t, comm, channel, provider)
                if comm.direction in (SEND, CALL):
                    emitters.append(cand)
                else:
                    receivers.append(cand)

        for e in emitters:
            if e.comm.direction == SEND:
                for r in receivers:
                    if (
                        r.comm.direction == RECEIVE
                        and r.channel == e.channel
                        and r.comm.message == e.comm.message
                        and len(r.comm.args) == len(e.comm.args)
                        and r.key != e.key
                    ):
                        moves.append(
                            Move("message", e.key, e.tindex, r.key, r.tindex,
                                 e.channel, e.comm.message, SEND)
                        )
                continue
            # '!!' -- result emission, call, or generic pair
            frame = config.frame_of_callee(e.key)
            if frame is not None and frame.channel == e.channel:
                for r in receivers:
                    if (
                        r.comm.direction == WAIT
                        and r.channel == e.channel
                        and r.comm.message == e.comm.message
                        and len(r.comm.args) == len(e.comm.args)
                        and r.key == frame.caller
                    ):
                        moves.append(
                            Move("result", e.key, e.tindex, r.key, r.tindex,
                                 e.channel, e.comm.message, CALL)
                        )
                continue
            provider = e.provider
            if provider is not None and self._call_message_matches(e):
                if provider == e.key:
                    self._finding(
                        f"{e.key[0]}.{e.key[1]} attempts to call itself on channel '{e.channel}'"
                    )
                    continue
                if provider not in active:
                    moves.extend(self._activation_moves(e, provider))
                    continue
                if config.frame_of_callee(provider) is not None:
                    self._finding(
                        f"re-entrant activation of {provider[0]}.{provider[1]} "
                        f"attempted by {e.key[0]}.{e.key[1]} on channel '{e.channel}'"
                    )
                    continue
                moves.extend(
                    self._call_moves(
                        e,
                        provider,
                        config.location_of(provider),
                        fresh=False,
                        store=config.store_of(provider),
                    )
                )
                continue
            for r in receivers:
                if (
                    r.comm.direction == WAIT
                    and r.channel == e.channel
                    and r.comm.message == e.comm.message
                    and len(r.comm.args) == len(e.comm.args)
                    and r.key != e.key
                ):
                    moves.append(
                        Move("message", e.key, e.tindex, r.key, r.tindex,
                             e.channel, e.comm.message, CALL)
                    )
        return moves

    def _activation_moves(self, e: _Cand, provider: Key) -> list:
        return self._call_moves(
            e, provider, self.flat[provider].initial, fresh=True,
            store=self.fresh_store(provider),
        )

    def _call_moves(self, e: _Cand, provider: Key, state, fresh: bool, store: dict) -> list:
        found = []
        for idx, t in self.outgoing[provider].get(state, ()):
            comms = comm_actions(t.label)
            if len(comms) != 1:
                continue
            c0 = comms[0]
            if not isinstance(c0.channel, Caller) or c0.direction != WAIT:
                continue
            if c0.message != provider[1] or len(c0.args) != len(e.comm.args):
                continue
            if t.label.guard is not None:
                if eval_partial(t.label.guard, store) is False:
                    continue
            found.append(
                Move("call", e.key, e.tindex, provider, idx,
                     e.channel, e.comm.message, CALL, activates=fresh)
            )
        return found

    def _finding(self, text: str):
        if text not in self._seen_findings:
            self._seen_findings.add(text)
            self.findings.append(text)

    # -- move application -------------------------------------------------------
    def apply(self, config: Configuration, move: Move) -> MoveEffect:
        locations = dict(config.locations)
        stores = {k: dict(v) for k, v in config.stores}
        frames = config.frames
        deltas: dict = {}
        argv = None
        activated = deactivated = None
        deactivated_store = None

        p_key = move.primary
        p_t = self.flat[p_key].transitions[move.tindex]
        before_primary = dict(stores[p_key])

        if move.kind == "internal":
            self._run_actions(p_t.label.actions, stores[p_key])
            locations[p_key] = p_t.target
            moved = ((p_key, p_t.target),)
        else:
            q_key = move.partner
            q_t = self.flat[q_key].transitions[move.partner_tindex]
            if move.activates:
                before_partner = {}
                stores[q_key] = self.fresh_store(q_key)
            else:
                before_partner = dict(stores[q_key])
            argv = self._run_actions(p_t.label.actions, stores[p_key], emit=True)
            if move.kind == "result" and len(argv) == 1:
                stores[p_key]["result"] = argv[0]
            self._run_actions(q_t.label.actions, stores[q_key], bind=argv)
            locations[p_key] = p_t.target
            locations[q_key] = q_t.target
            moved = ((p_key, p_t.target), (q_key, q_t.target))

            if move.kind == "call":
                frames = frames + (Frame(move.channel, p_key, q_key),)
                if move.activates:
                    activated = q_key
            elif move.kind == "result":
                frames = tuple(
                    f for f in frames if not (f.callee == p_key and f.channel == move.channel)
                )
                if p_t.target in self.flat[p_key].finals:
                    deactivated = p_key
                    deactivated_store = dict(stores[p_key])
            deltas[q_key] = _delta(before_partner, stores[q_key])

        deltas[p_key] = _delta(before_primary, stores[p_key])
        deltas = {k: d for k, d in deltas.items() if d}

        if deactivated is not None:
            del locations[deactivated]
            del stores[deactivated]
        new_config = _freeze(locations, stores, frames)
        label = SyncLabel(
            kind=move.kind,
            primary=p_key,
            primary_tindex=move.tindex,
            primary_target=p_t.target,
            partner=move.partner,
            partner_tindex=move.partner_tindex,
            partner_target=None if move.partner is None else
            self.flat[move.partner].transitions[move.partner_tindex].target,
            channel=move.channel,
            direction=move.direction,
            message=move.message,
            text=render_label(p_t.label),
        )
        return MoveEffect(
            config=new_config,
            label=label,
            deltas=deltas,
            argv=argv,
            activated=activated,
            deactivated=deactivated,
            deactivated_store=deactivated_store,
            moved=moved,
        )

    def _run_actions(self, actions, store: dict, emit: bool = False, bind=None):
        """Apply a label's actions in order; returns emitted argument values."""
        argv = ()
        for a in actions:
            if isinstance(a, Assign):
                store[a.target] = eval_partial(a.expr, store)
            elif isinstance(a, Comm):
                if emit:
                    argv = tuple(eval_partial(x, store) for x in a.args)
                elif bind is not None:
                    for name, value in zip(a.args, bind):
                        store[name] = value
            # Enter/Exit are silent
        return argv

    # -- contract hooks ---------------------------------------------------------
    def precondition_of(self, key):
        return self.specs[key].precondition

    def postcondition_of(self, key):
        return self.specs[key].postcondition

    def is_final(self, key, state) -> bool:
        return state in self.flat[key].finals


def _delta(before: dict, after: dict) -> dict:
    out = {}
    for name in sorted(set(before) | set(after)):
        old = before.get(name)
        new = after.get(name)
        if old != new or (name not in before) != (name not in after):
            out[name] = (old, new)
    return out
