"""Verification checks over synchronized products.

Every non-Ok verdict carries a replayable witness: the shortest label
sequence (breadth-first) from the product's initial state to the flagged
configuration. On truncated products an IncompleteProductWarning is
issued and absence answers (no deadlock, unreachable) are one-sided.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .errors import IncompleteProductWarning
from .model import Caller, Comm, Component, Named, ServiceSpec, Signature, VarDecl, comm_actions
from .exprs import infer_types
from .product import DEFAULT_BOUND, ProductLTS, explore, shortest_paths
from .semantics import Configuration, Engine
from . import assembly as asm_mod


@dataclass(frozen=True)
class Verdict:
    kind: str  # Deadlock | Unreachable | ProtocolMismatch | Ok
    witness: tuple | None = None  # of SyncLabel
    state: Configuration | None = None

    def to_report(self, states_explored: int, truncated: bool) -> dict:
        return {
            "kind": self.kind,
            "witness": None
            if self.witness is None
            else [label.witness_entry() for label in self.witness],
            "states_explored": states_explored,
            "truncated": truncated,
        }


def _warn_if_truncated(p: ProductLTS, what: str):
    if p.truncated:
        warnings.warn(
            f"{what} ran on a truncated product ({p.states_explored} states); "
            "found violations are real, absence is not guaranteed",
            IncompleteProductWarning,
            stacklevel=3,
        )


def detect_deadlocks(p: ProductLTS) -> list:
    """One Deadlock verdict per reachable move-less state that is not a
    successful termination, each with a shortest witness."""
    _warn_if_truncated(p, "deadlock detection")
    paths = shortest_paths(p)
    verdicts = []
    order = sorted(paths.items(), key=lambda kv: len(kv[1]))
    for config, path in order:
        if config in p.unexpanded:
            continue
        if p.successors(config):
            continue
        if p.engine.terminal_status(config) == "deadlock":
            verdicts.append(Verdict("Deadlock", witness=path, state=config))
    return verdicts


def check_reachability(p: ProductLTS, goal) -> Verdict:
    """Ok with a shortest witness if some reachable state satisfies ``goal``
    (a predicate over configurations), Unreachable otherwise."""
    paths = shortest_paths(p)
    for config, path in sorted(paths.items(), key=lambda kv: len(kv[1])):
        if goal(config):
            return Verdict("Ok", witness=path, state=config)
    _warn_if_truncated(p, "reachability")
    return Verdict("Unreachable", witness=None, state=None)


def check_protocol_compatibility(
    provider: ServiceSpec,
    consumer_usage,
    channel: str,
    bound: int = DEFAULT_BOUND,
) -> Verdict:
    """Pairwise compatibility of a provider against one client's usage.

    Both behaviours must already be flat. The provider starts activated with
    its incoming call context pre-opened on ``channel``; ProtocolMismatch is
    returned when some deadlock leaves either side waiting on that channel.
    """
    provider_comp = Component(
        name="_provider",
        services={provider.name: provider},
        provided=frozenset((provider.name,)),
    )
    usage_spec = ServiceSpec(
        signature=Signature("usage"),
        locals=tuple(_infer_usage_locals(consumer_usage)),
        behavior=consumer_usage,
        kind="provided",
    )
    peer_spec = ServiceSpec(signature=provider.signature, kind="required")
    consumer_comp = Component(
        name="_consumer",
        services={"usage": usage_spec, provider.name: peer_spec},
        provided=frozenset(("usage",)),
        required=frozenset((provider.name,)),
    )
    assembly = asm_mod.link(
        [provider_comp, consumer_comp],
        [
            asm_mod.Link(
                channel=channel,
                from_endpoint=("_consumer", provider.name),
                to_endpoint=("_provider", provider.name),
            )
        ],
    )
    engine = Engine(assembly)
    provider_key = ("_provider", provider.name)
    usage_key = ("_consumer", "usage")
    # the provider starts activated but with no open incoming call; the
    # consumer's first call on the channel opens the context
    initial = engine.initial_config([(usage_key, None), (provider_key, None)])
    p = explore(engine, initial, bound)
    _warn_if_truncated(p, "protocol compatibility")
    paths = shortest_paths(p)
    for config, path in sorted(paths.items(), key=lambda kv: len(kv[1])):
        if config in p.unexpanded or p.successors(config):
            continue
        if p.engine.terminal_status(config) != "deadlock":
            continue
        if _waits_on_channel(engine, config, provider_key, channel) or _waits_on_channel(
            engine, config, usage_key, channel
        ):
            return Verdict("ProtocolMismatch", witness=path, state=config)
    return Verdict("Ok")


def _waits_on_channel(engine: Engine, config, key, channel: str) -> bool:
    state = config.location_of(key)
    if state is None:
        return False
    if state in engine.flat[key].finals and config.frame_of_callee(key) is None:
        return False  # can terminate; any channel transition here is optional
    frame = config.frame_of_callee(key)
    for _idx, t in engine.outgoing[key].get(state, ()):
        for a in comm_actions(t.label):
            if isinstance(a.channel, Named) and a.channel.name == channel:
                return True
            if isinstance(a.channel, Caller) and frame is not None and frame.channel == channel:
                return True
            if isinstance(a.channel, Caller) and frame is None:
                # blocked forever on the incoming-call channel it never got
                return True
    return False


def _infer_usage_locals(behavior):
    """Declare every variable a bare usage behaviour touches, types inferred."""
    from .exprs import free_vars
    from .model import Assign

    env: dict = {}
    names: list = []
    for t in behavior.transitions:
        if t.label.guard is not None:
            names.extend(sorted(free_vars(t.label.guard)))
            infer_types(t.label.guard, env, want="bool")
        exprs = []
        for a in t.label.actions:
            if isinstance(a, Assign):
                names.append(a.target)
                exprs.append(a.expr)
            elif isinstance(a, Comm):
                for arg in a.args:
                    if isinstance(arg, str):
                        names.append(arg)
                    else:
                        exprs.append(arg)
        for e in exprs:
            names.extend(sorted(free_vars(e)))
            infer_types(e, env)
    for t in behavior.transitions:
        for a in t.label.actions:
            if isinstance(a, Assign) and a.target not in env:
                env[a.target] = _expr_type(a.expr, env)
    decls, seen = [], set()
    for n in names + sorted(env):
        if n not in seen:
            seen.add(n)
            decls.append(VarDecl(n, env.get(n, "int")))
    return decls


def _expr_type(e, env) -> str:
    from .exprs import BinOp, BoolLit, IntLit, Not, Var, ARITH_OPS

    if isinstance(e, IntLit):
        return "int"
    if isinstance(e, BoolLit):
        return "bool"
    if isinstance(e, Not):
        return "bool"
    if isinstance(e, BinOp):
        return "int" if e.op in ARITH_OPS else "bool"
    if isinstance(e, Var):
        return env.get(e.name, "int")
    return "int"
