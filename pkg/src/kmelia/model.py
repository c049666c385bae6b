"""Core domain types: components, services, interfaces and behaviours.

All types are immutable after construction and safe to share between
threads. A component packages named services; each service couples an
interface (signature, precondition, postcondition, local declarations,
dependencies) with a behaviour given as an extended labelled transition
system whose states may be annotated with sub-service names.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .exprs import Expr, TRUE

StateId = str

# Communication directions: send / receive message, call-or-emit / wait.
SEND = "!"
RECEIVE = "?"
CALL = "!!"
WAIT = "??"
EMIT_DIRECTIONS = (SEND, CALL)
BIND_DIRECTIONS = (RECEIVE, WAIT)


@dataclass(frozen=True)
class Signature:
    name: str
    params: tuple = ()  # of (name, 'int'|'bool')
    result: str | None = None


@dataclass(frozen=True)
class VarDecl:
    name: str
    type: str  # 'int' | 'bool'


@dataclass(frozen=True)
class Dependency:
    """Disjoint name sets: sub-services, caller-required, externally required, internal."""

    sub: frozenset = frozenset()
    cal: frozenset = frozenset()
    req: frozenset = frozenset()
    intern: frozenset = frozenset()


@dataclass(frozen=True)
class Named:
    name: str


@dataclass(frozen=True)
class Caller:
    """The channel opened for the incoming call of the running service."""


@dataclass(frozen=True)
class SelfChannel:
    """The channel opened for an internal service call."""


CALLER_REF = Caller()
SELF_REF = SelfChannel()
ChannelRef = Union[Named, Caller, SelfChannel]


@dataclass(frozen=True)
class Assign:
    target: str
    expr: Expr


@dataclass(frozen=True)
class Comm:
    """Communication action ``channel(!|?|!!|??) message(arg*)``.

    ``args`` holds expressions for the emitting directions (! and !!) and
    binder names (plain strings) for the binding directions (? and ??).
    """

    channel: ChannelRef
    direction: str
    message: str
    args: tuple = ()


@dataclass(frozen=True)
class Enter:
    """Silent edge into an inlined sub-service (flattening artifact)."""

    service: str


@dataclass(frozen=True)
class Exit:
    """Silent edge back from an inlined sub-service (flattening artifact)."""

    service: str


Action = Union[Assign, Comm, Enter, Exit]


@dataclass(frozen=True)
class Label:
    guard: Expr | None = None
    actions: tuple = ()  # ordered Actions; may be empty (silent transition)


@dataclass(frozen=True)
class Transition:
    source: StateId
    label: Label
    target: StateId


@dataclass(frozen=True, eq=True)
class BehaviorELTS:
    """Extended LTS: states, transitions, per-state sub-service annotations,
    one initial state and a set of final states."""

    states: frozenset
    transitions: tuple  # of Transition, in declaration order
    annotations: dict = field(default_factory=dict)  # StateId -> frozenset of sub names
    initial: StateId = "s0"
    finals: frozenset = frozenset()

    @property
    def labels(self) -> frozenset:
        return frozenset(t.label for t in self.transitions)

    def is_annotated(self) -> bool:
        return any(self.annotations.values())


def empty_behavior(state: StateId = "s0") -> BehaviorELTS:
    """Single-state behaviour (initial = final); the default for required services."""
    return BehaviorELTS(
        states=frozenset((state,)),
        transitions=(),
        annotations={},
        initial=state,
        finals=frozenset((state,)),
    )


@dataclass(frozen=True)
class ServiceSpec:
    signature: Signature
    precondition: Expr = TRUE
    postcondition: Expr = TRUE
    locals: tuple = ()  # of VarDecl
    dependency: Dependency = Dependency()
    properties: tuple = ()
    behavior: BehaviorELTS = field(default_factory=empty_behavior)
    kind: str = "provided"  # 'provided' | 'required'

    @property
    def name(self) -> str:
        return self.signature.name


@dataclass(frozen=True)
class Component:
    """Named unit exposing provided and required services."""

    name: str
    services: dict  # name -> ServiceSpec
    provided: frozenset = frozenset()
    required: frozenset = frozenset()

    def service(self, name: str) -> ServiceSpec:
        return self.services[name]


def comm_actions(label: Label) -> tuple:
    return tuple(a for a in label.actions if isinstance(a, Comm))

