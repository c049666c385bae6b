"""Well-formedness checking for components.

Violations are report entries, not failures; an empty report means the
component satisfies every invariant of the core types. ``structural``
entries concern the shape of the data (unresolved states, overlapping
dependency sets); ``semantic`` entries concern name/typing rules that a
parser cannot see locally (undeclared variables, channel legality).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .exprs import free_vars
from .model import (
    BIND_DIRECTIONS,
    CALL,
    Assign,
    Caller,
    Comm,
    Component,
    EMIT_DIRECTIONS,
    Named,
    SelfChannel,
    ServiceSpec,
)


@dataclass(frozen=True)
class ValidationIssue:
    location: str
    message: str
    kind: str  # 'structural' | 'semantic'

    def __str__(self):
        return f"{self.location}: {self.message}"


@dataclass
class ValidationReport:
    issues: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def structural(self):
        return [i for i in self.issues if i.kind == "structural"]

    def add(self, location, message, kind="structural"):
        self.issues.append(ValidationIssue(location, message, kind))

    def __iter__(self):
        return iter(self.issues)

    def __len__(self):
        return len(self.issues)


def validate_component(c: Component) -> ValidationReport:
    """Check every invariant of the core types; one entry per violation."""
    report = ValidationReport()
    where = f"component {c.name}"

    for name in sorted(c.provided | c.required):
        if name not in c.services:
            report.add(where, f"interface lists unknown service '{name}'")

    for name, spec in c.services.items():
        _check_service(c, name, spec, report)
    return report


def _check_service(c: Component, name: str, spec: ServiceSpec, report: ValidationReport):
    where = f"component {c.name} / service {name}"

    if spec.signature.name != name:
        report.add(where, f"signature name '{spec.signature.name}' differs from key")
    params = [p for p, _ in spec.signature.params]
    if len(params) != len(set(params)):
        report.add(where, "duplicate parameter names")
    local_names = [v.name for v in spec.locals]
    if len(local_names) != len(set(local_names)):
        report.add(where, "duplicate local declarations")

    _check_dependency_sets(c, spec, where, report)
    _check_behavior(c, spec, where, report)
    _check_variables(c, spec, where, report)
    _check_channels(c, spec, where, report)

    if spec.kind == "provided" and not spec.behavior.transitions and len(spec.behavior.states) == 1:
        report.add(where, "provided service has no behaviour", kind="semantic")


def _check_dependency_sets(c, spec, where, report):
    dep = spec.dependency
    sets = [("sub", dep.sub), ("cal", dep.cal), ("req", dep.req), ("int", dep.intern)]
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            overlap = sets[i][1] & sets[j][1]
            if overlap:
                names = ", ".join(sorted(overlap))
                report.add(where, f"dependency sets not disjoint: {sets[i][0]}/{sets[j][0]} share {names}")
    for kind, names in (("sub", dep.sub), ("int", dep.intern)):
        for n in sorted(names):
            if n not in c.services:
                report.add(where, f"{kind} dependency '{n}' is not a service of {c.name}")


def _check_behavior(c, spec, where, report):
    b = spec.behavior
    if b.initial not in b.states:
        report.add(where, f"initial state '{b.initial}' not declared")
    for s in sorted(b.finals - b.states):
        report.add(where, f"final state '{s}' not declared")
    for t in b.transitions:
        for endpoint in (t.source, t.target):
            if endpoint not in b.states:
                report.add(where, f"transition uses undeclared state '{endpoint}'")
        comms = [a for a in t.label.actions if isinstance(a, Comm)]
        if len(comms) > 1:
            report.add(where, f"transition {t.source} -> {t.target} has more than one communication action")
        for a in comms:
            if a.direction in EMIT_DIRECTIONS:
                bad = [x for x in a.args if isinstance(x, str)]
                if bad:
                    report.add(where, f"'{a.direction}' action on message '{a.message}' carries binders instead of expressions")
            elif a.direction in BIND_DIRECTIONS:
                bad = [x for x in a.args if not isinstance(x, str)]
                if bad:
                    report.add(where, f"'{a.direction}' action on message '{a.message}' carries expressions instead of binders")
            else:
                report.add(where, f"unknown communication direction '{a.direction}'")
    for state, subs in sorted(b.annotations.items()):
        if state not in b.states:
            report.add(where, f"annotation on undeclared state '{state}'")
        for sub in sorted(subs):
            if sub not in spec.dependency.sub:
                report.add(where, f"state '{state}' annotated with '{sub}' which is not in the sub set")


def _check_variables(c, spec, where, report):
    declared = set(p for p, _ in spec.signature.params) | {v.name for v in spec.locals}
    post_scope = declared | ({"result"} if spec.signature.result is not None else set())

    def check(expr, scope, what):
        for v in sorted(free_vars(expr) - scope):
            report.add(where, f"{what} references undeclared variable '{v}'", kind="semantic")

    check(spec.precondition, declared, "precondition")
    check(spec.postcondition, post_scope, "postcondition")
    assignable = declared | ({"result"} if spec.signature.result is not None else set())
    for t in spec.behavior.transitions:
        if t.label.guard is not None:
            check(t.label.guard, declared, f"guard on {t.source}")
        for a in t.label.actions:
            if isinstance(a, Assign):
                if a.target not in assignable:
                    report.add(where, f"assignment to undeclared variable '{a.target}'", kind="semantic")
                check(a.expr, declared, f"assignment to '{a.target}'")
            elif isinstance(a, Comm):
                for arg in a.args:
                    if isinstance(arg, str):
                        if arg not in declared:
                            report.add(where, f"binder '{arg}' on message '{a.message}' is not declared", kind="semantic")
                    else:
                        check(arg, declared, f"argument of message '{a.message}'")


def _check_channels(c, spec, where, report):
    for t in spec.behavior.transitions:
        for a in t.label.actions:
            if not isinstance(a, Comm):
                continue
            ref = a.channel
            if isinstance(ref, Caller) and spec.kind != "provided":
                report.add(where, "CALLER used outside a provided service", kind="semantic")
            if isinstance(ref, SelfChannel):
                if a.direction == CALL and a.message not in spec.dependency.intern:
                    report.add(
                        where,
                        f"SELF call of '{a.message}' which is not an internal service",
                        kind="semantic",
                    )
                elif not spec.dependency.intern:
                    report.add(where, "SELF used but the service declares no internal services", kind="semantic")
            if isinstance(ref, Named) and ref.name in c.services and ref.name not in (
                spec.dependency.cal | spec.dependency.req | c.required
            ):
                # a channel named after a local provided service is the scope
                # rule's concern (assembly-level), not flagged here
                pass
