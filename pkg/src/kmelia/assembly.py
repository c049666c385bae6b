"""Assemblies: components linked by channels binding required to provided services.

The assembly file format is JSON::

    {
      "components": ["calendar.kmelia", "booking.kmelia"],
      "links": [
        {"channel": "cal", "from": "Booking.calendar", "to": "Calendar.calendar"}
      ]
    }

Component paths are resolved relative to the assembly file. Endpoint
strings are ``Component.service``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import KmeliaError
from .model import Caller, Comm, Component, Named
from .syntax import parse_component_file


class UnresolvedEndpoint(KmeliaError):
    pass


class SignatureMismatch(KmeliaError):
    pass


class DuplicateChannel(KmeliaError):
    pass


@dataclass(frozen=True)
class Link:
    channel: str
    from_endpoint: tuple  # (component, required service)
    to_endpoint: tuple  # (component, provided service)


@dataclass(frozen=True)
class Assembly:
    components: tuple
    links: tuple

    def component(self, name: str) -> Component:
        for c in self.components:
            if c.name == name:
                return c
        raise UnresolvedEndpoint(f"no component named '{name}'")

    def service(self, key):
        comp, svc = key
        c = self.component(comp)
        if svc not in c.services:
            raise UnresolvedEndpoint(f"no service '{svc}' in component '{comp}'")
        return c.services[svc]

    def link_for(self, channel: str):
        for l in self.links:
            if l.channel == channel:
                return l
        return None


def link(components, links) -> Assembly:
    """Validate and build an assembly; raises on unresolved endpoints,
    incompatible signatures and duplicate channel names."""
    components = tuple(components)
    names = [c.name for c in components]
    if len(names) != len(set(names)):
        raise UnresolvedEndpoint(f"duplicate component names: {sorted(names)}")
    by_name = {c.name: c for c in components}

    seen_channels = set()
    checked = []
    for l in links:
        if l.channel in seen_channels:
            raise DuplicateChannel(f"channel '{l.channel}' declared twice")
        seen_channels.add(l.channel)
        fc, fs = l.from_endpoint
        tc, ts = l.to_endpoint
        for comp, svc, side in ((fc, fs, "from"), (tc, ts, "to")):
            if comp not in by_name:
                raise UnresolvedEndpoint(f"link '{l.channel}': unknown component '{comp}'")
            if svc not in by_name[comp].services:
                raise UnresolvedEndpoint(f"link '{l.channel}': no service '{comp}.{svc}'")
        if fs not in by_name[fc].required:
            raise UnresolvedEndpoint(f"link '{l.channel}': '{fc}.{fs}' is not a required service")
        if ts not in by_name[tc].provided:
            raise UnresolvedEndpoint(f"link '{l.channel}': '{tc}.{ts}' is not a provided service")
        _check_signatures(l, by_name[fc].services[fs], by_name[tc].services[ts])
        checked.append(l)

    asm = Assembly(components=components, links=tuple(checked))
    _check_channel_refs(asm)
    return asm


def _check_signatures(l: Link, required, provided):
    rs, ps = required.signature, provided.signature
    if len(rs.params) != len(ps.params):
        raise SignatureMismatch(
            f"link '{l.channel}': arity {len(rs.params)} vs {len(ps.params)}"
        )
    for (rn, rt), (pn, pt) in zip(rs.params, ps.params):
        if rt != pt:
            raise SignatureMismatch(
                f"link '{l.channel}': parameter '{rn}' is {rt} but '{pn}' is {pt}"
            )
    if rs.result != ps.result:
        raise SignatureMismatch(
            f"link '{l.channel}': result {rs.result} vs {ps.result}"
        )


def _check_channel_refs(asm: Assembly):
    """Every named channel used by a linked component's behaviour must match a
    link channel or a cal/req dependency name."""
    channels = {l.channel for l in asm.links}
    linked_components = {l.from_endpoint[0] for l in asm.links} | {
        l.to_endpoint[0] for l in asm.links
    }
    for c in asm.components:
        if asm.links and c.name not in linked_components:
            continue
        for svc_name, spec in c.services.items():
            allowed = channels | spec.dependency.cal | spec.dependency.req | c.required
            for t in spec.behavior.transitions:
                for a in t.label.actions:
                    if isinstance(a, Comm) and isinstance(a.channel, Named):
                        if a.channel.name not in allowed:
                            raise UnresolvedEndpoint(
                                f"{c.name}.{svc_name}: channel '{a.channel.name}' matches no link or dependency"
                            )


@dataclass(frozen=True)
class DependencyFinding:
    kind: str  # 'caller-missing' | 'scope'
    location: str
    message: str

    def __str__(self):
        return f"{self.location}: {self.message}"


@dataclass
class DependencyReport:
    findings: list

    @property
    def ok(self) -> bool:
        return not self.findings

    def __iter__(self):
        return iter(self.findings)

    def __len__(self):
        return len(self.findings)


def check_dependencies(asm: Assembly) -> DependencyReport:
    """Static dependency rules over a valid assembly.

    Flags (i) a provided service whose cal set names a service some linked
    caller component does not provide, and (ii) a reference to a service
    listed in another service's sub set from outside that service's scope.
    """
    findings = []
    for l in asm.links:
        provider = asm.service(l.to_endpoint)
        caller_component = asm.component(l.from_endpoint[0])
        for r in sorted(provider.dependency.cal):
            if r not in caller_component.provided:
                findings.append(
                    DependencyFinding(
                        "caller-missing",
                        f"{l.to_endpoint[0]}.{l.to_endpoint[1]}",
                        f"cal dependency '{r}' is not provided by linked caller '{caller_component.name}'",
                    )
                )
    for c in asm.components:
        for r_name, r_spec in c.services.items():
            scope = _scope_of(c, r_name)
            for q in sorted(r_spec.dependency.sub):
                if q in c.provided:
                    continue  # exported services are not scope-restricted
                for s_name, s_spec in c.services.items():
                    if s_name in scope or s_name == q:
                        continue
                    if _references_service(s_spec, q):
                        findings.append(
                            DependencyFinding(
                                "scope",
                                f"{c.name}.{s_name}",
                                f"references '{q}' which is accessible only during an interaction with '{r_name}'",
                            )
                        )
    return DependencyReport(findings)


def _scope_of(c: Component, root: str) -> frozenset:
    seen = {root}
    frontier = [root]
    while frontier:
        name = frontier.pop()
        dep = c.services[name].dependency
        for n in dep.sub | dep.intern:
            if n in c.services and n not in seen:
                seen.add(n)
                frontier.append(n)
    return frozenset(seen)


def _references_service(spec, target: str) -> bool:
    for t in spec.behavior.transitions:
        for a in t.label.actions:
            if isinstance(a, Comm):
                if isinstance(a.channel, Named) and a.channel.name == target:
                    return True
                if a.message == target and not isinstance(a.channel, Caller):
                    return True
    return False


def parse_endpoint(text: str) -> tuple:
    parts = text.split(".")
    if len(parts) != 2 or not all(parts):
        raise UnresolvedEndpoint(f"endpoint '{text}' is not of the form Component.service")
    return (parts[0], parts[1])


def load_assembly(doc: dict, base_dir: str | Path = ".") -> Assembly:
    """Build an assembly from a parsed JSON document."""
    base = Path(base_dir)
    components = []
    for rel in doc.get("components", []):
        text = (base / rel).read_text(encoding="utf-8")
        components.extend(parse_component_file(text))
    links = [
        Link(
            channel=entry["channel"],
            from_endpoint=parse_endpoint(entry["from"]),
            to_endpoint=parse_endpoint(entry["to"]),
        )
        for entry in doc.get("links", [])
    ]
    return link(components, links)


def load_assembly_file(path: str | Path) -> Assembly:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    return load_assembly(doc, path.parent)
