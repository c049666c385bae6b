"""Command-line interface.

Subcommands: parse, check, flatten, analyze, simulate, registry-demo.
Exit codes: 0 clean, 1 findings (parse errors, validation issues,
deadlocks, contract violations), 2 usage or internal errors. The
environment variable KMELIA_BOUND overrides the default analysis bound.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .analysis import check_reachability, detect_deadlocks
from .assembly import load_assembly_file, parse_endpoint
from .errors import KmeliaError
from .exprs import eval_partial
from .flattening import flatten_behavior
from .product import DEFAULT_BOUND, synchronized_product
from .registry import Binding, Query, Registry, ServiceDescriptor
from .simulator import run, write_trace
from .syntax import ParseError, parse_component_file, parse_predicate, render_behavior, render_component
from .validation import validate_component

FINDINGS_EXIT = 1
USAGE_EXIT = 2


def entry() -> None:
    raise SystemExit(main(sys.argv[1:]))


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE_EXIT if e.code not in (0, None) else 0
    try:
        return ns.func(ns)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return FINDINGS_EXIT
    except (FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE_EXIT
    except KmeliaError as e:
        print(f"error: {e}", file=sys.stderr)
        return ns.kmelia_error_exit if hasattr(ns, "kmelia_error_exit") else FINDINGS_EXIT


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kmelia", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a .kmelia file and echo its canonical form")
    p.add_argument("file")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("check", help="validate components; report every violated invariant")
    p.add_argument("files", nargs="+")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("flatten", help="expand a service's state annotations")
    p.add_argument("file")
    p.add_argument("--service", required=True)
    p.add_argument("--component", default=None)
    p.add_argument("--depth", type=int, default=16)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_flatten)

    p = sub.add_parser("analyze", help="explore an assembly and run verification checks")
    p.add_argument("assembly")
    p.add_argument("--entry", required=True, metavar="COMPONENT.SERVICE")
    p.add_argument("--deadlocks", action="store_true")
    p.add_argument("--reach", metavar="EXPR", default=None)
    p.add_argument("--bound", type=int, default=None)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("simulate", help="run a seeded simulation; emits a JSON-lines trace")
    p.add_argument("assembly")
    p.add_argument("--entry", required=True, metavar="COMPONENT.SERVICE")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-steps", type=int, default=1000)
    p.add_argument("--arg", action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--out", default=None, help="trace file (default: stdout)")
    p.add_argument("--fatal-contracts", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("registry-demo", help="run a scripted registry session")
    p.add_argument("script")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_registry_demo)
    return parser


# -- parse / check / flatten ---------------------------------------------------


def _cmd_parse(ns) -> int:
    text = Path(ns.file).read_text(encoding="utf-8")
    try:
        components = parse_component_file(text)
    except ParseError as e:
        if ns.format == "json":
            print(json.dumps({"error": str(e), "line": e.line, "column": e.column}))
        else:
            print(f"{ns.file}:{e.line}:{e.column}: expected {e.expected}, found {e.found}")
        return FINDINGS_EXIT
    if ns.format == "json":
        print(json.dumps({"components": [c.name for c in components]}))
    for c in components:
        sys.stdout.write(render_component(c))
    return 0


def _cmd_check(ns) -> int:
    findings = 0
    results = []
    for name in ns.files:
        text = Path(name).read_text(encoding="utf-8")
        entry_issues = []
        try:
            components = parse_component_file(text)
        except ParseError as e:
            entry_issues.append(
                {"location": f"{name}:{e.line}:{e.column}", "message": str(e), "kind": "parse"}
            )
            components = []
        for c in components:
            for issue in validate_component(c):
                entry_issues.append(
                    {"location": issue.location, "message": issue.message, "kind": issue.kind}
                )
        findings += len(entry_issues)
        results.append({"file": name, "issues": entry_issues})
    if ns.format == "json":
        print(json.dumps(results, indent=2, sort_keys=True))
    else:
        for result in results:
            if not result["issues"]:
                print(f"{result['file']}: ok")
            else:
                print(f"{result['file']}: {len(result['issues'])} issue(s)")
                for issue in result["issues"]:
                    print(f"  {issue['location']}: {issue['message']}")
    return FINDINGS_EXIT if findings else 0


def _cmd_flatten(ns) -> int:
    text = Path(ns.file).read_text(encoding="utf-8")
    components = parse_component_file(text)
    hosts = [c for c in components if ns.service in c.services]
    if ns.component is not None:
        hosts = [c for c in hosts if c.name == ns.component]
    if not hosts:
        print(f"error: no service '{ns.service}' found", file=sys.stderr)
        return USAGE_EXIT
    if len(hosts) > 1:
        print(f"error: service '{ns.service}' is ambiguous; use --component", file=sys.stderr)
        return USAGE_EXIT
    flat = flatten_behavior(hosts[0], ns.service, ns.depth)
    if ns.format == "json":
        print(
            json.dumps(
                {
                    "states": sorted(flat.states),
                    "initial": flat.initial,
                    "finals": sorted(flat.finals),
                    "transitions": [
                        {"source": t.source, "label": _label_text(t), "target": t.target}
                        for t in flat.transitions
                    ],
                },
                indent=2,
                sort_keys=True,
            )
        )
    else:
        print(render_behavior(flat))
    return 0


def _label_text(t) -> str:
    from .syntax import render_label

    return render_label(t.label)


# -- analyze ---------------------------------------------------------------------


def _cmd_analyze(ns) -> int:
    assembly = load_assembly_file(ns.assembly)
    entry_key = parse_endpoint(ns.entry)
    bound = ns.bound
    if bound is None:
        bound = int(os.environ.get("KMELIA_BOUND", DEFAULT_BOUND))
    product = synchronized_product(assembly, entry_key, bound)

    verdicts = []
    run_deadlocks = ns.deadlocks or ns.reach is None
    if run_deadlocks:
        verdicts.extend(detect_deadlocks(product))
    if ns.reach is not None:
        goal = _parse_reach_goal(ns.reach)
        verdicts.append(check_reachability(product, goal))

    reports = [v.to_report(product.states_explored, product.truncated) for v in verdicts]
    if ns.format == "json":
        print(json.dumps(reports, indent=2, sort_keys=True))
    else:
        print(
            f"explored {product.states_explored} states"
            + (" (truncated)" if product.truncated else "")
        )
        for finding in product.findings:
            print(f"finding: {finding}")
        if not verdicts:
            print("no deadlocks")
        for v in verdicts:
            if v.kind == "Ok":
                print(f"Ok: witness of length {len(v.witness or ())}")
            elif v.witness is not None:
                steps = ", ".join(_witness_step(w) for w in v.witness) or "(initial state)"
                print(f"{v.kind}: via {steps}")
            else:
                print(v.kind)
    bad = any(v.kind in ("Deadlock", "Unreachable", "ProtocolMismatch") for v in verdicts)
    return FINDINGS_EXIT if bad or product.findings else 0


def _witness_step(label) -> str:
    if label.kind == "internal":
        return f"{label.primary[0]}.{label.primary[1]}"
    return f"{label.channel}{label.direction}{label.message}"


def _parse_reach_goal(text: str):
    """Goal forms: 'C.S' (service activated), 'C.S@state', 'C.S:<predicate over its store>'."""
    state = predicate = None
    head = text
    if ":" in text:
        head, _, tail = text.partition(":")
        predicate = parse_predicate(tail)
    elif "@" in text:
        head, _, state = text.partition("@")
    key = parse_endpoint(head)

    def goal(config) -> bool:
        location = config.location_of(key)
        if location is None:
            return False
        if state is not None and location != state:
            return False
        if predicate is not None:
            return eval_partial(predicate, config.store_of(key)) is True
        return True

    return goal


# -- simulate ----------------------------------------------------------------------


def _cmd_simulate(ns) -> int:
    assembly = load_assembly_file(ns.assembly)
    entry_key = parse_endpoint(ns.entry)
    args = {}
    for item in ns.arg:
        if "=" not in item:
            print(f"error: --arg expects NAME=VALUE, got '{item}'", file=sys.stderr)
            return USAGE_EXIT
        name, _, raw = item.partition("=")
        args[name] = _parse_value(raw)
    ns.kmelia_error_exit = USAGE_EXIT  # bad entry/arguments are invocation errors
    trace, outcome = run(
        assembly, entry_key, args, ns.seed, ns.max_steps, fatal_contracts=ns.fatal_contracts
    )
    if ns.out is not None:
        with open(ns.out, "w", encoding="utf-8") as fp:
            write_trace(trace, fp)
    else:
        write_trace(trace, sys.stdout)
    print(f"outcome: {outcome}", file=sys.stderr)
    return FINDINGS_EXIT if outcome in ("deadlock", "violation") else 0


def _parse_value(raw: str):
    if raw in ("true", "True"):
        return True
    if raw in ("false", "False"):
        return False
    return int(raw)


# -- registry demo -----------------------------------------------------------------


def _cmd_registry_demo(ns) -> int:
    script_path = Path(ns.script)
    doc = json.loads(script_path.read_text(encoding="utf-8"))
    ops = doc["ops"] if isinstance(doc, dict) else doc
    registry = Registry()
    refs: dict = {}
    results = []
    findings = 0
    for op in ops:
        result = {"op": op.get("op")}
        try:
            result.update(_run_registry_op(registry, op, refs, script_path.parent))
        except KmeliaError as e:
            result["error"] = type(e).__name__
            result["message"] = str(e)
            findings += 1
        if result.get("outcome") in ("violation", "deadlock"):
            findings += 1
        results.append(result)
    if ns.format == "json":
        print(json.dumps(results, indent=2, sort_keys=True))
    else:
        for result in results:
            print(json.dumps(result, sort_keys=True))
    return FINDINGS_EXIT if findings else 0


def _run_registry_op(registry: Registry, op: dict, refs: dict, base: Path) -> dict:
    kind = op["op"]
    out: dict = {}

    def deref(value):
        if isinstance(value, str) and value.startswith("$"):
            return refs[value[1:]]
        return value

    if kind == "register":
        text = (base / op["component"]).read_text(encoding="utf-8")
        components = parse_component_file(text)
        component = next(
            c for c in components if op["service"] in c.services
        )
        new_id = registry.register(ServiceDescriptor.of(component, op["service"]))
        out["id"] = new_id
    elif kind == "discover":
        q = op.get("query", {})
        entailment = q.get("entailment")
        query = Query(
            name_pattern=q.get("name_pattern"),
            param_arity=q.get("param_arity"),
            result_type=q.get("result_type"),
            required_properties=tuple(q.get("required_properties", ())),
            entailment=None if entailment is None else parse_predicate(entailment),
        )
        matches = registry.discover(query)
        out["matches"] = [d.id for d in matches]
    elif kind == "bind":
        binding = registry.bind(op["client"], deref(op["id"]))
        out["channel"] = binding.channel
        out["epoch"] = binding.epoch
        out["binding"] = {
            "client": binding.client,
            "descriptor_id": binding.descriptor_id,
            "channel": binding.channel,
            "epoch": binding.epoch,
        }
    elif kind == "unbind":
        registry.unbind(_binding_from(deref(op["binding"])))
        out["ok"] = True
    elif kind == "unregister":
        registry.unregister(deref(op["id"]))
        out["ok"] = True
    elif kind == "invoke":
        binding = _binding_from(deref(op["binding"]))
        trace, outcome = registry.invoke(
            binding,
            op.get("args", {}),
            op.get("seed", 0),
            op.get("max_steps", 1000),
        )
        out["outcome"] = outcome
        out["events"] = len(trace)
    elif kind == "snapshot":
        registry.save_snapshot(base / op["path"])
        out["ok"] = True
    else:
        raise KmeliaError(f"unknown registry op '{kind}'")

    if "as" in op:
        stored = out.get("id") or out.get("binding") or out.get("matches")
        refs[op["as"]] = stored
    return out


def _binding_from(value) -> Binding:
    if isinstance(value, Binding):
        return value
    return Binding(
        client=value["client"],
        descriptor_id=value["descriptor_id"],
        channel=value["channel"],
        epoch=value["epoch"],
    )


if __name__ == "__main__":
    sys.exit(main())
