"""In-memory service registry: registration, discovery, binding, invocation.

Descriptors are published by provider components, discovered by queries
(name glob, arity, result type, property tags, precondition entailment),
bound to clients over fresh channels and invoked through a synthesized
two-party assembly driven by the simulator. Services are volatile:
unregistration invalidates existing bindings, whose later use raises
StaleBinding.

Mutations are serialized under a lock and stamped with a strictly
increasing epoch; discovery works on a consistent snapshot.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field, replace
from fnmatch import fnmatchcase
from itertools import product as iter_product

from . import assembly as asm_mod
from .errors import KmeliaError
from .exprs import Expr, IntLit, eval_expr, infer_types, render_expr
from .model import (
    BehaviorELTS,
    Comm,
    Component,
    Label,
    Named,
    ServiceSpec,
    Signature,
    Transition,
    VarDecl,
)
from .simulator import run
from .syntax import parse_component_file, parse_predicate, render_component

ENTAILMENT_WINDOW = range(-8, 9)  # finite integer domain for implication checking
_MAX_ENTAILMENT_VARS = 6


class DuplicateRegistration(KmeliaError):
    pass


class UnknownId(KmeliaError):
    pass


class StaleBinding(KmeliaError):
    pass


@dataclass(frozen=True)
class ServiceDescriptor:
    id: str | None
    provider: str  # component name
    signature: Signature
    precondition: Expr
    postcondition: Expr
    properties: tuple
    spec: ServiceSpec
    component: Component

    @staticmethod
    def of(component: Component, service: str) -> "ServiceDescriptor":
        spec = component.services[service]
        return ServiceDescriptor(
            id=None,
            provider=component.name,
            signature=spec.signature,
            precondition=spec.precondition,
            postcondition=spec.postcondition,
            properties=spec.properties,
            spec=spec,
            component=component,
        )


@dataclass(frozen=True)
class Query:
    name_pattern: str | None = None
    param_arity: int | None = None
    result_type: str | None = None
    required_properties: tuple = ()
    entailment: Expr | None = None

    def __post_init__(self):
        if (
            self.name_pattern is None
            and self.param_arity is None
            and self.result_type is None
            and not self.required_properties
            and self.entailment is None
        ):
            raise ValueError("a query needs at least one criterion")


@dataclass(frozen=True)
class Binding:
    client: str
    descriptor_id: str
    channel: str
    epoch: int


@dataclass
class _Entry:
    descriptor: ServiceDescriptor
    order: int
    live: bool = True
    unregistered_epoch: int | None = None


class Registry:
    def __init__(self):
        self._lock = threading.Lock()
        self._entries: dict = {}
        self._bindings: set = set()
        self._epoch = 0
        self._counter = 0

    @property
    def epoch(self) -> int:
        return self._epoch

    def __len__(self):
        return sum(1 for e in self._entries.values() if e.live)

    # -- lifecycle -----------------------------------------------------------
    def register(self, descriptor: ServiceDescriptor) -> str:
        with self._lock:
            for entry in self._entries.values():
                if (
                    entry.live
                    and entry.descriptor.provider == descriptor.provider
                    and entry.descriptor.signature == descriptor.signature
                ):
                    raise DuplicateRegistration(
                        f"{descriptor.provider}.{descriptor.signature.name} already registered"
                    )
            self._counter += 1
            new_id = f"svc-{self._counter:04d}"
            stamped = replace(descriptor, id=new_id)
            self._epoch += 1
            self._entries[new_id] = _Entry(stamped, order=self._counter)
            return new_id

    def unregister(self, descriptor_id: str):
        with self._lock:
            entry = self._entries.get(descriptor_id)
            if entry is None or not entry.live:
                raise UnknownId(f"no live descriptor '{descriptor_id}'")
            self._epoch += 1
            entry.live = False
            entry.unregistered_epoch = self._epoch

    def bind(self, client: str, descriptor_id: str) -> Binding:
        with self._lock:
            entry = self._entries.get(descriptor_id)
            if entry is None or not entry.live:
                raise UnknownId(f"no live descriptor '{descriptor_id}'")
            self._counter += 1
            self._epoch += 1
            binding = Binding(
                client=client,
                descriptor_id=descriptor_id,
                channel=f"ch-{self._counter:04d}",
                epoch=self._epoch,
            )
            self._bindings.add(binding)
            return binding

    def unbind(self, binding: Binding):
        with self._lock:
            if binding not in self._bindings:
                raise UnknownId("binding not held by this registry")
            self._epoch += 1
            self._bindings.discard(binding)

    def descriptor(self, descriptor_id: str) -> ServiceDescriptor:
        entry = self._entries.get(descriptor_id)
        if entry is None:
            raise UnknownId(f"no descriptor '{descriptor_id}'")
        return entry.descriptor

    def is_stale(self, binding: Binding) -> bool:
        entry = self._entries.get(binding.descriptor_id)
        if binding not in self._bindings or entry is None:
            return True
        return not entry.live and (entry.unregistered_epoch or 0) > binding.epoch

    # -- discovery -------------------------------------------------------------
    def discover(self, query: Query) -> list:
        with self._lock:
            snapshot = [
                (e.order, e.descriptor) for e in self._entries.values() if e.live
            ]
        matches = [
            (order, d) for order, d in snapshot if _matches(d, query)
        ]
        matches.sort(
            key=lambda pair: (
                -len(set(pair[1].properties) & set(query.required_properties)),
                pair[0],
            )
        )
        return [d for _order, d in matches]

    # -- invocation --------------------------------------------------------------
    def invoke(self, binding: Binding, args: dict, seed: int, max_steps: int = 1000):
        """Call the bound service through a synthesized client stub; returns
        (trace, outcome) from the simulator."""
        with self._lock:
            entry = self._entries.get(binding.descriptor_id)
            if binding not in self._bindings or entry is None or not entry.live:
                raise StaleBinding(
                    f"binding on channel '{binding.channel}' is no longer valid"
                )
            descriptor = entry.descriptor
        assembly = _stub_assembly(descriptor, binding.channel, args)
        return run(assembly, ("_client", "main"), {}, seed, max_steps)

    # -- snapshots ---------------------------------------------------------------
    def export_snapshot(self) -> list:
        with self._lock:
            entries = sorted(self._entries.values(), key=lambda e: e.order)
            return [
                {
                    "id": e.descriptor.id,
                    "provider": e.descriptor.provider,
                    "service": e.descriptor.signature.name,
                    "signature": {
                        "name": e.descriptor.signature.name,
                        "params": [list(p) for p in e.descriptor.signature.params],
                        "result": e.descriptor.signature.result,
                    },
                    "pre": render_expr(e.descriptor.precondition),
                    "post": render_expr(e.descriptor.postcondition),
                    "properties": list(e.descriptor.properties),
                    "live": e.live,
                    "component": render_component(e.descriptor.component),
                }
                for e in entries
            ]

    @staticmethod
    def import_snapshot(doc: list) -> "Registry":
        registry = Registry()
        for item in doc:
            components = parse_component_file(item["component"])
            component = next(c for c in components if c.name == item["provider"])
            descriptor = ServiceDescriptor.of(component, item["service"])
            new_id = registry.register(descriptor)
            if not item.get("live", True):
                registry.unregister(new_id)
        return registry

    def save_snapshot(self, path):
        with open(path, "w", encoding="utf-8") as fp:
            json.dump(self.export_snapshot(), fp, indent=2, sort_keys=True)

    @staticmethod
    def load_snapshot(path) -> "Registry":
        with open(path, encoding="utf-8") as fp:
            return Registry.import_snapshot(json.load(fp))


def _matches(d: ServiceDescriptor, q: Query) -> bool:
    if q.name_pattern is not None and not fnmatchcase(d.signature.name, q.name_pattern):
        return False
    if q.param_arity is not None and len(d.signature.params) != q.param_arity:
        return False
    if q.result_type is not None and d.signature.result != q.result_type:
        return False
    if any(p not in d.properties for p in q.required_properties):
        return False
    if q.entailment is not None and not entails(q.entailment, d.precondition):
        return False
    return True


def entails(antecedent: Expr, consequent: Expr, window=ENTAILMENT_WINDOW) -> bool:
    """Exhaustive implication check over the finite test domain.

    Variable types are inferred from usage (ambiguous names default to int);
    integer variables range over ``window``, booleans over both values.
    """
    env: dict = {}
    infer_types(antecedent, env, want="bool")
    infer_types(consequent, env, want="bool")
    names = sorted(env)
    if len(names) > _MAX_ENTAILMENT_VARS:
        raise ValueError(f"too many variables for exhaustive checking: {names}")
    domains = [
        (False, True) if env[n] == "bool" else tuple(window) for n in names
    ]
    for values in iter_product(*domains):
        store = dict(zip(names, values))
        if eval_expr(antecedent, store) is True and eval_expr(consequent, store) is not True:
            return False
    return True


def _stub_assembly(descriptor: ServiceDescriptor, channel: str, args: dict):
    """Two-party assembly: a generated client stub calling the bound provider."""
    from .simulator import MissingArgument

    sig = descriptor.signature
    arg_exprs = []
    for p, ptype in sig.params:
        if p not in args:
            raise MissingArgument(f"missing argument '{p}' for {sig.name}")
        arg_exprs.append(_literal(args[p], ptype))
    call = Comm(Named(channel), "!!", sig.name, tuple(arg_exprs))
    if sig.result is not None:
        transitions = (
            Transition("m0", Label(None, (call,)), "m1"),
            Transition("m1", Label(None, (Comm(Named(channel), "??", "result", ("res",)),)), "m2"),
        )
        states, finals = frozenset(("m0", "m1", "m2")), frozenset(("m2",))
        locals_ = (VarDecl("res", sig.result),)
    else:
        transitions = (
            Transition("m0", Label(None, (call,)), "m1"),
            Transition("m1", Label(None, (Comm(Named(channel), "??", "result", ()),)), "m2"),
        )
        states, finals = frozenset(("m0", "m1", "m2")), frozenset(("m2",))
        locals_ = ()
    driver = ServiceSpec(
        signature=Signature("main"),
        locals=locals_,
        behavior=BehaviorELTS(
            states=states, transitions=transitions, annotations={}, initial="m0", finals=finals
        ),
        kind="provided",
    )
    peer = ServiceSpec(signature=sig, kind="required")
    client = Component(
        name="_client",
        services={"main": driver, sig.name: peer},
        provided=frozenset(("main",)),
        required=frozenset((sig.name,)),
    )
    return asm_mod.link(
        [client, descriptor.component],
        [
            asm_mod.Link(
                channel=channel,
                from_endpoint=("_client", sig.name),
                to_endpoint=(descriptor.provider, sig.name),
            )
        ],
    )


def _literal(value, ptype: str) -> Expr:
    from .exprs import BoolLit

    if ptype == "bool":
        return BoolLit(bool(value))
    return IntLit(int(value))


class FederatedRegistry:
    """Fans discovery out to child registries and merges with the same ordering."""

    def __init__(self, children):
        self.children = list(children)

    def discover(self, query: Query) -> list:
        ranked = []
        for child_index, child in enumerate(self.children):
            with child._lock:
                snapshot = [
                    (e.order, e.descriptor)
                    for e in child._entries.values()
                    if e.live
                ]
            for order, d in snapshot:
                if _matches(d, query):
                    overlap = len(set(d.properties) & set(query.required_properties))
                    ranked.append(((-overlap, child_index, order), d))
        ranked.sort(key=lambda pair: pair[0])
        return [d for _rank, d in ranked]
