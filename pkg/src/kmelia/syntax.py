"""Concrete textual syntax: parsing and canonical pretty-printing.

Files use the ``.kmelia`` extension, UTF-8 text, ``--`` line comments.
Keywords are case-insensitive and reserved. A file holds one or more
component blocks::

    component Name
        provides a, b
        requires c
        service a(x: int): int
            interface
                subs p
                cals q
                reqs r
                ints h
                variables v: int
            properties tag1
            pre x > 0
            post result >= 0
            behaviour
                states s0, s1
                init s0
                final s1
                annot s0: p
                s0 --- [v > 0] v := v + 1; c!msg(v) ---> s1
        end
    end

Transitions are written ``source --- label ---> target`` where the label
is ``[guard] action (; action)*``, both parts optional. Communication
actions are ``channel(!|?|!!|??) message(arg*)``: emitting directions
(! and !!) carry expressions, binding directions (? and ??) carry
variable names. ``CALLER`` and ``SELF`` are channel placeholders.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import KmeliaError
from .exprs import BinOp, BoolLit, Expr, IntLit, Not, TRUE, Var, render_expr
from .model import (
    Assign,
    BehaviorELTS,
    CALLER_REF,
    Caller,
    Comm,
    Component,
    Dependency,
    Enter,
    Exit,
    Label,
    Named,
    SELF_REF,
    SelfChannel,
    ServiceSpec,
    Signature,
    Transition,
    VarDecl,
    empty_behavior,
)

KEYWORDS = frozenset(
    """component provides requires service interface subs cals reqs ints
       variables properties pre post behaviour behavior states init final
       annot end true false and or not caller self enter exit int bool
    """.split()
)

_MULTI_OPS = (":=", "<=", ">=", "!=", "/=", "!!", "??")
_SINGLE_OPS = "()[],;:!?=<>+*"


class ParseError(KmeliaError):
    """Syntax error with position inside the input text."""

    def __init__(self, line: int, column: int, expected: str, found: str):
        super().__init__(f"{line}:{column}: expected {expected}, found {found}")
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT | INT | KW | OP | EOF
    value: object
    line: int
    column: int

    def describe(self) -> str:
        if self.kind == "EOF":
            return "end of input"
        return f"'{self.value}'"


def tokenize(text: str) -> list:
    tokens = []
    line, col, i, n = 1, 1, 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "-":
            run = 0
            while i + run < n and text[i + run] == "-":
                run += 1
            if run == 2:  # comment to end of line
                while i < n and text[i] != "\n":
                    i += 1
                continue
            if run == 3:
                if i + 3 < n and text[i + 3] == ">":
                    tokens.append(Token("OP", "--->", line, col))
                    i += 4
                    col += 4
                else:
                    tokens.append(Token("OP", "---", line, col))
                    i += 3
                    col += 3
                continue
            if run == 1:
                tokens.append(Token("OP", "-", line, col))
                i += 1
                col += 1
                continue
            raise ParseError(line, col, "'-', '--' comment or '---' arrow", "-" * run)
        two = text[i : i + 2]
        if two in _MULTI_OPS:
            tokens.append(Token("OP", "!=" if two == "/=" else two, line, col))
            i += 2
            col += 2
            continue
        if ch in _SINGLE_OPS:
            tokens.append(Token("OP", ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("INT", int(text[i:j]), line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            low = word.lower()
            if low in KEYWORDS:
                tokens.append(Token("KW", low, line, col))
            else:
                tokens.append(Token("IDENT", word, line, col))
            col += j - i
            i = j
            continue
        raise ParseError(line, col, "a token", repr(ch))
    tokens.append(Token("EOF", None, line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token plumbing ----------------------------------------------------
    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def at_kw(self, *words) -> bool:
        t = self.peek()
        return t.kind == "KW" and t.value in words

    def at_op(self, op) -> bool:
        t = self.peek()
        return t.kind == "OP" and t.value == op

    def accept_kw(self, *words):
        if self.at_kw(*words):
            return self.advance()
        return None

    def accept_op(self, op):
        if self.at_op(op):
            return self.advance()
        return None

    def expect_kw(self, word) -> Token:
        if not self.at_kw(word):
            self.fail(f"'{word}'")
        return self.advance()

    def expect_op(self, op) -> Token:
        if not self.at_op(op):
            self.fail(f"'{op}'")
        return self.advance()

    def expect_ident(self, what="an identifier") -> Token:
        if self.peek().kind != "IDENT":
            self.fail(what)
        return self.advance()

    def fail(self, expected: str):
        t = self.peek()
        raise ParseError(t.line, t.column, expected, t.describe())

    # -- grammar -----------------------------------------------------------
    def file(self) -> list:
        components = [self.component()]
        while self.at_kw("component"):
            components.append(self.component())
        if self.peek().kind != "EOF":
            self.fail("'component' or end of input")
        return components

    def component(self) -> Component:
        self.expect_kw("component")
        name = self.expect_ident("a component name").value
        provided: list = []
        required: list = []
        while True:
            if self.accept_kw("provides"):
                provided.extend(self.ident_list())
            elif self.accept_kw("requires"):
                required.extend(self.ident_list())
            else:
                break
        services: dict = {}
        while self.at_kw("service"):
            tok = self.tokens[self.pos + 1]
            spec = self.service(frozenset(required))
            if spec.name in services:
                raise ParseError(tok.line, tok.column, "a fresh service name", f"'{spec.name}'")
            services[spec.name] = spec
        self.expect_kw("end")
        return Component(
            name=name,
            services=services,
            provided=frozenset(provided),
            required=frozenset(required),
        )

    def service(self, required: frozenset) -> ServiceSpec:
        self.expect_kw("service")
        name = self.expect_ident("a service name").value
        params: list = []
        if self.accept_op("("):
            if not self.at_op(")"):
                params = self.var_decl_list()
            self.expect_op(")")
        result = None
        if self.accept_op(":"):
            result = self.type_name()
        dependency, local_decls = Dependency(), []
        if self.accept_kw("interface"):
            dependency, local_decls = self.interface()
        properties: tuple = ()
        if self.accept_kw("properties"):
            properties = tuple(self.ident_list())
        pre = TRUE
        if self.accept_kw("pre"):
            pre = self.expression()
        post = TRUE
        if self.accept_kw("post"):
            post = self.expression()
        behavior = None
        if self.accept_kw("behaviour", "behavior"):
            behavior = self.behaviour()
        self.expect_kw("end")
        return ServiceSpec(
            signature=Signature(name, tuple(params), result),
            precondition=pre,
            postcondition=post,
            locals=tuple(VarDecl(n, t) for n, t in local_decls),
            dependency=dependency,
            properties=properties,
            behavior=behavior if behavior is not None else empty_behavior(),
            kind="required" if name in required else "provided",
        )

    def interface(self):
        sets = {"subs": [], "cals": [], "reqs": [], "ints": []}
        local_decls: list = []
        while True:
            if self.at_kw("subs", "cals", "reqs", "ints"):
                which = self.advance().value
                sets[which].extend(self.ident_list())
            elif self.accept_kw("variables"):
                local_decls.extend(self.var_decl_list())
            else:
                break
        dependency = Dependency(
            sub=frozenset(sets["subs"]),
            cal=frozenset(sets["cals"]),
            req=frozenset(sets["reqs"]),
            intern=frozenset(sets["ints"]),
        )
        return dependency, local_decls

    def behaviour(self) -> BehaviorELTS:
        declared: list = []
        if self.accept_kw("states"):
            declared = self.ident_list()
        self.expect_kw("init")
        initial = self.expect_ident("an initial state").value
        finals: list = []
        if self.accept_kw("final"):
            finals = self.ident_list()
        annotations: dict = {}
        transitions: list = []
        while True:
            if self.accept_kw("annot"):
                state = self.expect_ident("a state name").value
                self.expect_op(":")
                names = self.ident_list()
                annotations[state] = annotations.get(state, frozenset()) | frozenset(names)
            elif self.peek().kind == "IDENT":
                transitions.append(self.transition())
            else:
                break
        states = set(declared) | {initial} | set(finals) | set(annotations)
        for t in transitions:
            states.add(t.source)
            states.add(t.target)
        return BehaviorELTS(
            states=frozenset(states),
            transitions=tuple(transitions),
            annotations=annotations,
            initial=initial,
            finals=frozenset(finals),
        )

    def transition(self) -> Transition:
        source = self.expect_ident("a state name").value
        self.expect_op("---")
        guard = None
        if self.accept_op("["):
            guard = self.expression()
            self.expect_op("]")
        actions: list = []
        if not self.at_op("--->"):
            actions.append(self.action())
            while self.accept_op(";"):
                actions.append(self.action())
        self.expect_op("--->")
        target = self.expect_ident("a state name").value
        return Transition(source, Label(guard, tuple(actions)), target)

    def action(self):
        if self.accept_kw("enter"):
            return Enter(self.expect_ident("a sub-service name").value)
        if self.accept_kw("exit"):
            return Exit(self.expect_ident("a sub-service name").value)
        if self.accept_kw("caller"):
            channel = CALLER_REF
        elif self.accept_kw("self"):
            channel = SELF_REF
        else:
            name = self.expect_ident("an action").value
            if self.accept_op(":="):
                return Assign(name, self.expression())
            channel = Named(name)
        direction = None
        for op in ("!!", "??", "!", "?"):
            if self.accept_op(op):
                direction = op
                break
        if direction is None:
            self.fail("':=' or a communication direction (!, ?, !!, ??)")
        message = self.expect_ident("a message name").value
        args: list = []
        if self.accept_op("("):
            if not self.at_op(")"):
                if direction in ("!", "!!"):
                    args.append(self.expression())
                    while self.accept_op(","):
                        args.append(self.expression())
                else:
                    args = [t.value for t in self.ident_list_tokens()]
            self.expect_op(")")
        return Comm(channel, direction, message, tuple(args))

    # -- expressions ---------------------------------------------------------
    def expression(self) -> Expr:
        return self.or_expr()

    def or_expr(self) -> Expr:
        e = self.and_expr()
        while self.accept_kw("or"):
            e = BinOp("or", e, self.and_expr())
        return e

    def and_expr(self) -> Expr:
        e = self.not_expr()
        while self.accept_kw("and"):
            e = BinOp("and", e, self.not_expr())
        return e

    def not_expr(self) -> Expr:
        if self.accept_kw("not"):
            return Not(self.not_expr())
        return self.comparison()

    def comparison(self) -> Expr:
        e = self.additive()
        for op in ("=", "!=", "<=", ">=", "<", ">"):
            if self.accept_op(op):
                return BinOp(op, e, self.additive())
        return e

    def additive(self) -> Expr:
        e = self.multiplicative()
        while True:
            if self.accept_op("+"):
                e = BinOp("+", e, self.multiplicative())
            elif self.accept_op("-"):
                e = BinOp("-", e, self.multiplicative())
            else:
                return e

    def multiplicative(self) -> Expr:
        e = self.unary()
        while self.accept_op("*"):
            e = BinOp("*", e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.accept_op("-"):
            operand = self.unary()
            if isinstance(operand, IntLit):
                return IntLit(-operand.value)
            return BinOp("-", IntLit(0), operand)
        return self.atom()

    def atom(self) -> Expr:
        t = self.peek()
        if t.kind == "INT":
            self.advance()
            return IntLit(t.value)
        if self.accept_kw("true"):
            return BoolLit(True)
        if self.accept_kw("false"):
            return BoolLit(False)
        if t.kind == "IDENT":
            self.advance()
            return Var(t.value)
        if self.accept_op("("):
            e = self.expression()
            self.expect_op(")")
            return e
        self.fail("an expression")

    # -- small lists ---------------------------------------------------------
    def ident_list_tokens(self) -> list:
        items = [self.expect_ident()]
        while self.accept_op(","):
            items.append(self.expect_ident())
        return items

    def ident_list(self) -> list:
        return [t.value for t in self.ident_list_tokens()]

    def var_decl_list(self) -> list:
        decls = [self.var_decl()]
        while self.accept_op(","):
            decls.append(self.var_decl())
        return decls

    def var_decl(self):
        name = self.expect_ident("a variable name").value
        self.expect_op(":")
        return name, self.type_name()

    def type_name(self) -> str:
        if self.accept_kw("int"):
            return "int"
        if self.accept_kw("bool"):
            return "bool"
        self.fail("'int' or 'bool'")


def parse_component_file(text: str) -> list:
    """Parse all component blocks of a ``.kmelia`` source; raises ParseError."""
    return _Parser(text).file()


def parse_predicate(text: str) -> Expr:
    """Parse a standalone predicate/expression; raises ParseError."""
    parser = _Parser(text)
    e = parser.expression()
    if parser.peek().kind != "EOF":
        parser.fail("end of expression")
    return e


# --------------------------------------------------------------------------
# canonical rendering


def render_channel(ref) -> str:
    if isinstance(ref, Named):
        return ref.name
    if isinstance(ref, Caller):
        return "CALLER"
    if isinstance(ref, SelfChannel):
        return "SELF"
    raise TypeError(f"not a channel ref: {ref!r}")


def render_action(a) -> str:
    if isinstance(a, Assign):
        return f"{a.target} := {render_expr(a.expr)}"
    if isinstance(a, Comm):
        args = ", ".join(x if isinstance(x, str) else render_expr(x) for x in a.args)
        return f"{render_channel(a.channel)}{a.direction}{a.message}({args})"
    if isinstance(a, Enter):
        return f"enter {a.service}"
    if isinstance(a, Exit):
        return f"exit {a.service}"
    raise TypeError(f"not an action: {a!r}")


def render_label(label: Label) -> str:
    parts = []
    if label.guard is not None:
        parts.append(f"[{render_expr(label.guard)}]")
    if label.actions:
        parts.append("; ".join(render_action(a) for a in label.actions))
    return " ".join(parts)


def render_behavior(b: BehaviorELTS, indent: str = "") -> str:
    lines = [f"{indent}states {', '.join(sorted(b.states))}"]
    lines.append(f"{indent}init {b.initial}")
    if b.finals:
        lines.append(f"{indent}final {', '.join(sorted(b.finals))}")
    for state in sorted(b.annotations):
        if b.annotations[state]:
            lines.append(f"{indent}annot {state}: {', '.join(sorted(b.annotations[state]))}")
    for t in b.transitions:
        label = render_label(t.label)
        middle = f" {label} " if label else " "
        lines.append(f"{indent}{t.source} ---{middle}---> {t.target}")
    return "\n".join(lines)


def render_service(spec: ServiceSpec, indent: str = "    ") -> str:
    sig = spec.signature
    header = f"{indent}service {sig.name}"
    if sig.params:
        header += "(" + ", ".join(f"{n}: {t}" for n, t in sig.params) + ")"
    if sig.result is not None:
        header += f": {sig.result}"
    lines = [header]
    inner = indent + "    "
    dep = spec.dependency
    if dep.sub or dep.cal or dep.req or dep.intern or spec.locals:
        lines.append(f"{inner}interface")
        deep = inner + "    "
        for kw, names in (("subs", dep.sub), ("cals", dep.cal), ("reqs", dep.req), ("ints", dep.intern)):
            if names:
                lines.append(f"{deep}{kw} {', '.join(sorted(names))}")
        if spec.locals:
            decls = ", ".join(f"{v.name}: {v.type}" for v in spec.locals)
            lines.append(f"{deep}variables {decls}")
    if spec.properties:
        lines.append(f"{inner}properties {', '.join(spec.properties)}")
    if spec.precondition != TRUE:
        lines.append(f"{inner}pre {render_expr(spec.precondition)}")
    if spec.postcondition != TRUE:
        lines.append(f"{inner}post {render_expr(spec.postcondition)}")
    if spec.behavior != empty_behavior() or spec.kind == "provided":
        lines.append(f"{inner}behaviour")
        lines.append(render_behavior(spec.behavior, inner + "    "))
    lines.append(f"{indent}end")
    return "\n".join(lines)


def render_component(c: Component) -> str:
    """Canonical textual form; its parse is structurally equal to ``c``."""
    lines = [f"component {c.name}"]
    if c.provided:
        lines.append(f"    provides {', '.join(sorted(c.provided))}")
    if c.required:
        lines.append(f"    requires {', '.join(sorted(c.required))}")
    for name in c.services:
        lines.append("")
        lines.append(render_service(c.services[name]))
    lines.append("end")
    return "\n".join(lines) + "\n"

