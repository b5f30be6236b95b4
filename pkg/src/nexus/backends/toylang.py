"""A tiny integer-equality proof language standing in for Lean.

Grammar (comments use the Lean syntax ``--`` and ``/- -/``)::

    file      := statement*
    statement := "lemma" NAME ":" expr "=" expr ":=" tactic
    tactic    := "eval" | "sorry" | "by_lemma" NAME | "trans" NAME NAME+
    expr      := term (("+" | "-") term)*
    term      := factor ("*" factor)*
    factor    := INT | "-" factor | "(" expr ")"

``eval`` closes a goal iff both sides evaluate to the same integer.
``by_lemma h`` closes it iff an earlier lemma ``h`` states the token-identical
equality.  ``trans h1 h2 ...`` closes ``a = c`` from a chain ``a = b``,
``b = ...``, ``... = c`` of earlier lemmas, compared token by token.  ``sorry``
leaves the statement open and reports it as ``⊢ <lhs> = <rhs>``.  A lemma
closed by ``sorry`` may still be cited, as in Lean.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from ..sketch import mask_comments
from .types import Diagnostics, ProverBudget, ProverOutcome

TURNSTILE = "⊢"
TACTICS = ("eval", "sorry", "by_lemma", "trans")


class ToyParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(message)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # "int" | "name" | "op" | "eof"
    value: str
    line: int
    col: int


_OPS = ("+", "-", "*", "(", ")", ":", "=")


_SPACE = re.compile(r"[^\S\n]+")


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if c.isspace():
            j = _SPACE.match(text, i).end()
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("int", text[i:j], line, col))
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_'."):
                j += 1
            tokens.append(Token("name", text[i:j], line, col))
        elif text.startswith(":=", i):
            j = i + 2
            tokens.append(Token("op", ":=", line, col))
        elif c in _OPS:
            j = i + 1
            tokens.append(Token("op", c, line, col))
        elif c == TURNSTILE:
            j = i + 1
            tokens.append(Token("op", c, line, col))
        else:
            raise ToyParseError(f"unexpected character {c!r}", line, col)
        col += j - i
        i = j
    tokens.append(Token("eof", "", line, col))
    return tokens


# AST: ("int", value) | ("neg", node) | (op, left, right)
Expr = Union[tuple]


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str, value: str | None = None) -> Token:
        t = self.tok
        if t.kind != kind or (value is not None and t.value != value):
            want = value if value is not None else kind
            got = t.value or t.kind
            raise ToyParseError(f"expected {want!r}, found {got!r}", t.line, t.col)
        return self.advance()

    def at(self, kind: str, value: str | None = None) -> bool:
        return self.tok.kind == kind and (value is None or self.tok.value == value)

    def expr(self) -> Expr:
        node = self.term()
        while self.at("op", "+") or self.at("op", "-"):
            op = self.advance().value
            node = (op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.at("op", "*"):
            self.advance()
            node = ("*", node, self.factor())
        return node

    def factor(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return ("int", int(t.value))
        if self.at("op", "-"):
            self.advance()
            return ("neg", self.factor())
        if self.at("op", "("):
            self.advance()
            node = self.expr()
            self.expect("op", ")")
            return node
        raise ToyParseError(f"expected an expression, found {t.value or t.kind!r}", t.line, t.col)

    def expr_tokens(self) -> tuple[Expr, tuple[str, ...]]:
        start = self.pos
        node = self.expr()
        return node, tuple(t.value for t in self.tokens[start:self.pos])


def evaluate(node: Expr) -> int:
    tag = node[0]
    if tag == "int":
        return node[1]
    if tag == "neg":
        return -evaluate(node[1])
    a, b = evaluate(node[1]), evaluate(node[2])
    if tag == "+":
        return a + b
    if tag == "-":
        return a - b
    return a * b


def count_operations(node: Expr) -> int:
    tag = node[0]
    if tag == "int":
        return 0
    if tag == "neg":
        return 1 + count_operations(node[1])
    return 1 + count_operations(node[1]) + count_operations(node[2])


def render_tokens(tokens: tuple[str, ...]) -> str:
    """Canonical spacing-free rendering; adjacent minus signs keep a space so
    the result never contains a comment opener."""
    out = ""
    for t in tokens:
        if out.endswith("-") and t.startswith("-"):
            out += " "
        out += t
    return out


@dataclass(frozen=True)
class Statement:
    name: str
    lhs: tuple[str, ...]
    rhs: tuple[str, ...]
    lhs_ast: Expr
    rhs_ast: Expr
    tactic: str
    args: tuple[str, ...]
    line: int
    col: int

    @property
    def goal_text(self) -> str:
        return f"{TURNSTILE} {render_tokens(self.lhs)} = {render_tokens(self.rhs)}"


def _statement(p: _Parser) -> Statement:
    kw = p.expect("name", "lemma")
    name = p.expect("name").value
    p.expect("op", ":")
    lhs_ast, lhs = p.expr_tokens()
    p.expect("op", "=")
    rhs_ast, rhs = p.expr_tokens()
    p.expect("op", ":=")
    tac = p.expect("name")
    if tac.value not in TACTICS:
        raise ToyParseError(f"unknown tactic {tac.value!r}", tac.line, tac.col)
    args: list[str] = []
    if tac.value == "by_lemma":
        args.append(p.expect("name").value)
    elif tac.value == "trans":
        while p.at("name") and p.tok.value != "lemma":
            args.append(p.advance().value)
        if len(args) < 2:
            raise ToyParseError("trans needs at least two lemma names", tac.line, tac.col)
    return Statement(name, lhs, rhs, lhs_ast, rhs_ast, tac.value, tuple(args), kw.line, kw.col)


def parse_file(text: str) -> list[Statement]:
    """Parse a toy-language file; comments are ignored. Raises ToyParseError."""
    p = _Parser(tokenize(mask_comments(text)))
    statements = []
    while not p.at("eof"):
        statements.append(_statement(p))
    return statements


def toy_check(sketch_text: str) -> Diagnostics:
    """Compile a toy-language file and report errors and open goals."""
    try:
        statements = parse_file(sketch_text)
    except ToyParseError as exc:
        return Diagnostics(False, ((f"{exc.line}:{exc.col}", f"parse error: {exc}"),))
    errors: list[tuple[str, str]] = []
    goals: list[str] = []
    known: dict[str, Statement] = {}
    for st in statements:
        loc = f"{st.line}:{st.col}"
        err = None
        if st.name in known:
            err = f"lemma {st.name}: duplicate declaration"
        elif st.tactic == "eval":
            lv, rv = evaluate(st.lhs_ast), evaluate(st.rhs_ast)
            if lv != rv:
                err = f"lemma {st.name}: eval failed, {lv} ≠ {rv}"
        elif st.tactic == "by_lemma":
            ref = known.get(st.args[0])
            if ref is None:
                err = f"lemma {st.name}: unknown lemma {st.args[0]}"
            elif (ref.lhs, ref.rhs) != (st.lhs, st.rhs):
                err = f"lemma {st.name}: statement of {ref.name} does not match"
        elif st.tactic == "trans":
            err = _check_chain(st, known)
        else:
            goals.append(st.goal_text)
        if err:
            errors.append((loc, err))
        else:
            known[st.name] = st
    return Diagnostics(not errors, tuple(errors), tuple(goals) if not errors else ())


def _check_chain(st: Statement, known: dict[str, Statement]) -> str | None:
    chain = []
    for name in st.args:
        ref = known.get(name)
        if ref is None:
            return f"lemma {st.name}: unknown lemma {name}"
        chain.append(ref)
    if chain[0].lhs != st.lhs:
        return f"lemma {st.name}: {chain[0].name} does not start from the left-hand side"
    for a, b in zip(chain, chain[1:]):
        if a.rhs != b.lhs:
            return f"lemma {st.name}: {a.name} and {b.name} do not chain"
    if chain[-1].rhs != st.rhs:
        return f"lemma {st.name}: {chain[-1].name} does not end at the right-hand side"
    return None


def parse_goal(goal_text: str) -> tuple[Expr, Expr]:
    """Parse ``⊢ lhs = rhs`` (turnstile optional)."""
    p = _Parser(tokenize(goal_text))
    if p.at("op", TURNSTILE):
        p.advance()
    lhs = p.expr()
    p.expect("op", "=")
    rhs = p.expr()
    p.expect("eof")
    return lhs, rhs


def simulate_prove(goal_text: str, budget: ProverBudget) -> ProverOutcome:
    """Decide a toy goal by evaluation, spending one simulation per operation."""
    try:
        lhs, rhs = parse_goal(goal_text)
    except ToyParseError as exc:
        return ProverOutcome("failed", feedback=f"unparseable goal: {exc}")
    steps = count_operations(lhs) + count_operations(rhs)
    if steps > budget.simulations:
        return ProverOutcome(
            "failed", feedback=f"budget exhausted ({steps} reductions needed, {budget.simulations} allowed)"
        )
    lv, rv = evaluate(lhs), evaluate(rhs)
    if lv == rv:
        return ProverOutcome("proved", script="eval")
    return ProverOutcome("disproved", script="eval", feedback=f"left side is {lv}, right side is {rv}")
