"""Flattening of annotated behaviours into plain transition systems.

A state annotated with sub-service names offers those behaviours
optionally: the state keeps its own transitions, and for each annotated
name an ``enter`` edge leads to a fresh inlined copy of the sub-service's
behaviour whose final states lead back via ``exit`` edges. Flattening is
idempotent on unannotated behaviours.
"""

from __future__ import annotations

from .errors import KmeliaError
from .model import BehaviorELTS, Component, Enter, Exit, Label, Transition

DEFAULT_DEPTH_LIMIT = 16


class DepthExceeded(KmeliaError):
    def __init__(self, service: str, limit: int):
        super().__init__(f"sub-service nesting of '{service}' exceeds depth limit {limit}")
        self.service = service
        self.limit = limit


def flatten_behavior(c: Component, svc: str, depth_limit: int = DEFAULT_DEPTH_LIMIT) -> BehaviorELTS:
    """Expand all state annotations of ``c.services[svc]`` into enter/exit edges."""
    spec = c.services[svc]
    if not spec.behavior.is_annotated():
        return spec.behavior
    return _expand(c, svc, spec.behavior, 0, depth_limit)


def _expand(c: Component, svc: str, b: BehaviorELTS, depth: int, limit: int) -> BehaviorELTS:
    if depth > limit:
        raise DepthExceeded(svc, limit)
    states = set(b.states)
    transitions = list(b.transitions)
    for state in sorted(b.annotations):
        for sub in sorted(b.annotations[state]):
            sub_flat = _expand(c, sub, c.services[sub].behavior, depth + 1, limit)
            rename = {
                s: _fresh(f"{state}_{sub}_{s}", states) for s in sorted(sub_flat.states)
            }
            states.update(rename.values())
            for t in sub_flat.transitions:
                transitions.append(Transition(rename[t.source], t.label, rename[t.target]))
            transitions.append(
                Transition(state, Label(None, (Enter(sub),)), rename[sub_flat.initial])
            )
            for f in sorted(sub_flat.finals):
                transitions.append(Transition(rename[f], Label(None, (Exit(sub),)), state))
    return BehaviorELTS(
        states=frozenset(states),
        transitions=tuple(transitions),
        annotations={},
        initial=b.initial,
        finals=b.finals,
    )


def _fresh(base: str, taken) -> str:
    name = base
    n = 2
    while name in taken:
        name = f"{base}_{n}"
        n += 1
    return name


def annotated_closure(c: Component, svc: str, depth_limit: int = DEFAULT_DEPTH_LIMIT) -> frozenset:
    """All sub-service names reachable transitively through state annotations."""
    seen = set()
    frontier = [(svc, 0)]
    while frontier:
        name, depth = frontier.pop()
        if depth > depth_limit:
            raise DepthExceeded(name, depth_limit)
        for subs in c.services[name].behavior.annotations.values():
            for sub in subs:
                if sub not in seen:
                    seen.add(sub)
                    frontier.append((sub, depth + 1))
    return frozenset(seen)
