"""Synchronized product: breadth-first exploration of an assembly's joint behaviour."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import KmeliaError
from .semantics import Configuration, Engine, SyncLabel

DEFAULT_BOUND = 100_000


class UnknownEntry(KmeliaError):
    pass


@dataclass(eq=False)
class ProductLTS:
    """Reachable composite states and their synchronized transitions.

    ``truncated`` marks a bound-limited exploration; states left in
    ``unexpanded`` were discovered but their successors were not computed,
    so absence-of-behaviour conclusions do not extend to them.
    """

    initial: Configuration
    states: frozenset
    transitions: dict  # Configuration -> tuple of (SyncLabel, Configuration)
    truncated: bool
    unexpanded: frozenset
    findings: tuple
    engine: Engine = field(repr=False)

    @property
    def states_explored(self) -> int:
        return len(self.states)

    def successors(self, config):
        return self.transitions.get(config, ())

    def transition_count(self) -> int:
        return sum(len(v) for v in self.transitions.values())


def explore(engine: Engine, initial: Configuration, bound: int = DEFAULT_BOUND) -> ProductLTS:
    """BFS over the engine's move relation, stopping at ``bound`` states."""
    states = {initial}
    transitions: dict = {}
    queue = deque((initial,))
    truncated = False
    unexpanded: set = set()
    while queue:
        config = queue.popleft()
        if len(states) > bound:
            truncated = True
            unexpanded.add(config)
            unexpanded.update(queue)
            break
        out = []
        for move in engine.moves(config):
            effect = engine.apply(config, move)
            out.append((effect.label, effect.config))
            if effect.config not in states:
                states.add(effect.config)
                queue.append(effect.config)
        transitions[config] = tuple(out)
    return ProductLTS(
        initial=initial,
        states=frozenset(states),
        transitions=transitions,
        truncated=truncated,
        unexpanded=frozenset(unexpanded),
        findings=tuple(engine.findings),
        engine=engine,
    )


def synchronized_product(assembly, entry, bound: int = DEFAULT_BOUND) -> ProductLTS:
    """Product reachable from ``entry`` (a provided service, given as a
    (component, service) pair) with its parameters left unknown."""
    engine = Engine(assembly)
    key = tuple(entry)
    if key not in engine.specs:
        raise UnknownEntry(f"no service '{key[0]}.{key[1]}' in the assembly")
    if engine.specs[key].kind != "provided":
        raise UnknownEntry(f"'{key[0]}.{key[1]}' is not a provided service")
    initial = engine.initial_config([(key, None)])
    return explore(engine, initial, bound)


def shortest_paths(p: ProductLTS) -> dict:
    """Configuration -> tuple of SyncLabels along one shortest path from the initial state."""
    paths = {p.initial: ()}
    queue = deque((p.initial,))
    while queue:
        config = queue.popleft()
        base = paths[config]
        for label, succ in p.successors(config):
            if succ not in paths:
                paths[succ] = base + (label,)
                queue.append(succ)
    return paths
