"""Textual formula grammar and the general formula AST.

Grammar (whitespace-insensitive)::

    expr   := and (("∨" | "||") and)*
    and    := unary (("∧" | "&&") unary)*
    unary  := ("¬" | "!") unary | "(" expr ")" | "true" | "false" | atom
    atom   := NAME [("∈" | "in") "{" VALUE ("," VALUE)* "}"]

A bare ``NAME`` stands for ``NAME ∈ {1}`` and is only valid for boolean
(``0``/``1``) options. The AST allows arbitrary nesting; templates are a
subset handled in :mod:`cfginfer.interaction`.
"""

from __future__ import annotations

import re
from collections.abc import Mapping
from dataclasses import dataclass

from .config_space import ConfigSpace, SpaceError


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at offset {pos} in {text!r}")
        self.text = text
        self.pos = pos


@dataclass(frozen=True)
class Const:
    value: bool

    def evaluate(self, config: Mapping[str, str]) -> bool:
        return self.value

    def options(self) -> set[str]:
        return set()


@dataclass(frozen=True)
class Member:
    option: str
    values: frozenset[str]

    def evaluate(self, config: Mapping[str, str]) -> bool:
        return config[self.option] in self.values

    def options(self) -> set[str]:
        return {self.option}


@dataclass(frozen=True)
class Not:
    child: Formula

    def evaluate(self, config: Mapping[str, str]) -> bool:
        return not self.child.evaluate(config)

    def options(self) -> set[str]:
        return self.child.options()


@dataclass(frozen=True)
class And:
    children: tuple[Formula, ...]

    def evaluate(self, config: Mapping[str, str]) -> bool:
        return all(c.evaluate(config) for c in self.children)

    def options(self) -> set[str]:
        return set().union(*(c.options() for c in self.children))


@dataclass(frozen=True)
class Or:
    children: tuple[Formula, ...]

    def evaluate(self, config: Mapping[str, str]) -> bool:
        return any(c.evaluate(config) for c in self.children)

    def options(self) -> set[str]:
        return set().union(*(c.options() for c in self.children))


Formula = Const | Member | Not | And | Or

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<op>&&|\|\||∧|∨|¬|!|\(|\)|\{|\}|,|∈)
      | (?P<word>[A-Za-z0-9_.:+\-/@]+)
    )""",
    re.VERBOSE,
)
_CANON = {"&&": "∧", "||": "∨", "!": "¬"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = len(text) - len(text[pos:].lstrip())
            raise FormulaSyntaxError(f"unexpected character {text[start]!r}", text, start)
        if m.group("op"):
            tokens.append(("op", _CANON.get(m.group("op"), m.group("op")), m.start("op")))
        else:
            tokens.append(("word", m.group("word"), m.start("word")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, space: ConfigSpace | None):
        self.text = text
        self.space = space
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, val, pos = self.take()
        if val != value or kind == "word":
            raise FormulaSyntaxError(f"expected {value!r}, found {val or 'end of input'!r}", self.text, pos)

    def parse(self) -> Formula:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise FormulaSyntaxError(f"unexpected {val!r}", self.text, pos)
        return node

    def expr(self) -> Formula:
        parts = [self.conj()]
        while self.peek()[:2] == ("op", "∨"):
            self.take()
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conj(self) -> Formula:
        parts = [self.unary()]
        while self.peek()[:2] == ("op", "∧"):
            self.take()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def unary(self) -> Formula:
        kind, val, pos = self.peek()
        if kind == "op" and val == "¬":
            self.take()
            return Not(self.unary())
        if kind == "op" and val == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        if kind == "word":
            self.take()
            if val == "true":
                return Const(True)
            if val == "false":
                return Const(False)
            return self.atom(val, pos)
        raise FormulaSyntaxError(f"unexpected {val or 'end of input'!r}", self.text, pos)

    def atom(self, name: str, pos: int) -> Formula:
        kind, val, _ = self.peek()
        if (kind == "op" and val == "∈") or (kind == "word" and val == "in"):
            self.take()
            self.expect("{")
            values = []
            while True:
                k, v, p = self.take()
                if k != "word":
                    raise FormulaSyntaxError(f"expected a value, found {v or 'end of input'!r}", self.text, p)
                values.append(v)
                k, v, p = self.take()
                if (k, v) == ("op", "}"):
                    break
                if (k, v) != ("op", ","):
                    raise FormulaSyntaxError(f"expected ',' or '}}', found {v or 'end of input'!r}", self.text, p)
            return self.member(name, frozenset(values), pos)
        if self.space is not None:
            if name not in self.space:
                raise SpaceError(f"unknown option {name!r}")
            if not self.space.domain(name).is_boolean:
                raise SpaceError(f"bare option {name!r} is only allowed for boolean (0/1) options")
        return self.member(name, frozenset({"1"}), pos)

    def member(self, name: str, values: frozenset[str], pos: int) -> Member:
        if self.space is not None:
            if name not in self.space:
                raise SpaceError(f"unknown option {name!r}")
            bad = values - self.space.domain_set(name)
            if bad:
                raise SpaceError(f"values {sorted(bad)} are not in the domain of {name!r}")
        return Member(name, values)


def parse_formula(text: str, space: ConfigSpace | None = None) -> Formula:
    """Parse ``text``; when ``space`` is given, options and values are validated."""
    return _Parser(text, space).parse()


def render_formula(node: Formula, space: ConfigSpace | None = None, ascii: bool = True) -> str:
    AND, OR, NOT = (" && ", " || ", "!") if ascii else (" ∧ ", " ∨ ", "¬")

    def go(n: Formula, parent: str) -> str:
        if isinstance(n, Const):
            return "true" if n.value else "false"
        if isinstance(n, Member):
            return _render_member(n.option, n.values, space, ascii)
        if isinstance(n, Not):
            return NOT + go(n.child, "not")
        op = AND if isinstance(n, And) else OR
        kind = "and" if isinstance(n, And) else "or"
        body = op.join(go(c, kind) for c in n.children)
        return body if parent in ("top", kind) else f"({body})"

    return go(node, "top")


def _render_member(option: str, values: frozenset[str], space: ConfigSpace | None, ascii: bool) -> str:
    if space is not None and option in space:
        dom = space.domain(option)
        if dom.is_boolean and len(values) == 1:
            return option if "1" in values else ("!" if ascii else "¬") + option
        ordered = [v for v in dom.values if v in values]
    else:
        ordered = sorted(values)
    body = ",".join(ordered)
    return f"{option} in {{{body}}}" if ascii else f"{option}∈{{{body}}}"
