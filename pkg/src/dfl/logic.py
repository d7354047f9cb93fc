"""Function-free prenex first-order formulas and weighted knowledge bases.

Surface syntax (ASCII, line oriented):

    formula := "forall" ident ("," ident)* ":" expr
    expr    := or ("->" expr)?          # right-associative
    or      := and ("|" and)*
    and     := unary ("&" unary)*
    unary   := "~" unary | atom | "(" expr ")"
    atom    := ident "(" ident ("," ident)* ")"

Precedence: ~ binds tightest, then &, then |, then ->.  Quantifiers are
prenex only; `exists` is reserved and rejected.  A knowledge-base file
(`.dfl`) holds one `[weight] formula` per line, `#` comments, weight
defaulting to 1.0.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

__all__ = [
    "Atom", "Not", "And", "Or", "Implies", "ForAll", "Formula",
    "ParseError", "KnowledgeBase",
    "parse_formula", "parse_kb", "print_formula",
    "free_and_bound", "quantifier_rank", "validate_formula",
]


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple

    def __str__(self):
        return f"{self.pred}({', '.join(self.args)})"


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Or:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"


@dataclass(frozen=True)
class ForAll:
    vars: tuple
    body: "Formula"


Formula = Atom | Not | And | Or | Implies | ForAll


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 1, col: int = 1):
        super().__init__(f"line {line}, col {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(r"->|[()~&|,:]|[A-Za-z_][A-Za-z0-9_]*|\S")


def _tokenize(text: str, line: int = 1):
    tokens = []
    for match in _TOKEN_RE.finditer(text):
        tokens.append((match.group(), line, match.start() + 1))
    return tokens


class _Parser:
    def __init__(self, tokens, line=1):
        self.tokens = tokens
        self.pos = 0
        self.line = line

    def peek(self):
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def loc(self):
        if self.pos < len(self.tokens):
            _, line, col = self.tokens[self.pos]
            return line, col
        if self.tokens:
            _, line, col = self.tokens[-1]
            return line, col + 1
        return self.line, 1

    def error(self, message):
        line, col = self.loc()
        raise ParseError(message, line, col)

    def take(self, expected=None):
        token = self.peek()
        if token is None:
            self.error("unexpected end of input"
                       + (f" (expected {expected!r})" if expected else ""))
        if expected is not None and token != expected:
            self.error(f"expected {expected!r}, got {token!r}")
        self.pos += 1
        return token

    def ident(self, what):
        token = self.peek()
        if token is None or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", token):
            self.error(f"expected {what}, got {token!r}")
        if token in ("forall", "exists"):
            self.error(f"keyword {token!r} cannot be used as {what}")
        self.pos += 1
        return token

    def parse_formula(self):
        if self.peek() == "exists":
            self.error("existential quantifiers are not supported; "
                       "only universally quantified prenex formulas are accepted")
        self.take("forall")
        vars_ = [self.ident("a variable")]
        while self.peek() == ",":
            self.take(",")
            vars_.append(self.ident("a variable"))
        if len(set(vars_)) != len(vars_):
            self.error(f"duplicate quantifier variable in {vars_}")
        self.take(":")
        body = self.parse_expr()
        if self.peek() is not None:
            self.error(f"unexpected trailing token {self.peek()!r}")
        return ForAll(tuple(vars_), body)

    def parse_expr(self):
        lhs = self.parse_or()
        if self.peek() == "->":
            self.take("->")
            return Implies(lhs, self.parse_expr())
        return lhs

    def parse_or(self):
        node = self.parse_and()
        while self.peek() == "|":
            self.take("|")
            node = Or(node, self.parse_and())
        return node

    def parse_and(self):
        node = self.parse_unary()
        while self.peek() == "&":
            self.take("&")
            node = And(node, self.parse_unary())
        return node

    def parse_unary(self):
        token = self.peek()
        if token == "~":
            self.take("~")
            return Not(self.parse_unary())
        if token == "(":
            self.take("(")
            node = self.parse_expr()
            self.take(")")
            return node
        if token in ("forall", "exists"):
            if token == "exists":
                self.error("existential quantifiers are not supported")
            self.error("quantifiers must be prenex (a single leading "
                       "'forall' chain)")
        pred = self.ident("a predicate")
        self.take("(")
        args = [self.ident("a variable")]
        while self.peek() == ",":
            self.take(",")
            args.append(self.ident("a variable"))
        self.take(")")
        return Atom(pred, tuple(args))


def validate_formula(f: ForAll, signature: dict | None = None,
                     line: int = 1) -> dict:
    """Check bound variables and arity consistency; returns the (possibly
    updated) predicate signature table."""
    if not isinstance(f, ForAll):
        raise ParseError("formula must be universally quantified", line)
    signature = dict(signature or {})
    bound = set(f.vars)

    def walk(node):
        if isinstance(node, Atom):
            for arg in node.args:
                if arg not in bound:
                    raise ParseError(
                        f"unbound variable {arg!r} in {node}", line)
            arity = signature.get(node.pred)
            if arity is None:
                signature[node.pred] = len(node.args)
            elif arity != len(node.args):
                raise ParseError(
                    f"arity conflict for {node.pred!r}: "
                    f"{len(node.args)} vs {arity}", line)
        elif isinstance(node, Not):
            walk(node.child)
        elif isinstance(node, (And, Or, Implies)):
            walk(node.lhs)
            walk(node.rhs)
        elif isinstance(node, ForAll):
            raise ParseError("quantifiers must be prenex", line)
        else:
            raise ParseError(f"unknown node {node!r}", line)

    walk(f.body)
    return signature


def parse_formula(text: str, line: int = 1) -> ForAll:
    parser = _Parser(_tokenize(text, line), line)
    formula = parser.parse_formula()
    validate_formula(formula, line=line)
    return formula


_PREC = {Implies: 1, Or: 2, And: 3, Not: 4, Atom: 5}


def _print_expr(node, parent_prec=0, right_of=None) -> str:
    prec = _PREC[type(node)]
    if isinstance(node, Atom):
        return f"{node.pred}({', '.join(node.args)})"
    if isinstance(node, Not):
        child = _print_expr(node.child, prec)
        return f"~{child}"
    if isinstance(node, Implies):
        # right-associative: parenthesize an Implies on the left
        lhs = _print_expr(node.lhs, prec + 1)
        rhs = _print_expr(node.rhs, prec)
        text = f"{lhs} -> {rhs}"
    elif isinstance(node, Or):
        lhs = _print_expr(node.lhs, prec)
        rhs = _print_expr(node.rhs, prec + 1)  # left-associative
        text = f"{lhs} | {rhs}"
    else:  # And
        lhs = _print_expr(node.lhs, prec)
        rhs = _print_expr(node.rhs, prec + 1)
        text = f"{lhs} & {rhs}"
    if prec < parent_prec:
        return f"({text})"
    return text


def print_formula(f: ForAll) -> str:
    """Canonical text; ``parse_formula(print_formula(f)) == f``."""
    if not isinstance(f, ForAll):
        return _print_expr(f)
    return f"forall {', '.join(f.vars)}: {_print_expr(f.body)}"


def free_and_bound(f: ForAll):
    """Quantifier variables in declaration order plus all atoms in
    left-to-right order."""
    vars_: list = []
    node = f
    while isinstance(node, ForAll):
        vars_.extend(node.vars)
        node = node.body
    atoms: list = []

    def walk(n):
        if isinstance(n, Atom):
            atoms.append(n)
        elif isinstance(n, Not):
            walk(n.child)
        elif isinstance(n, (And, Or, Implies)):
            walk(n.lhs)
            walk(n.rhs)

    walk(node)
    return tuple(vars_), atoms


def quantifier_rank(f: Formula) -> int:
    """Number of quantified variables (the d in the b**d grounding cost)."""
    if isinstance(f, ForAll):
        return len(f.vars) + quantifier_rank(f.body)
    if isinstance(f, Not):
        return quantifier_rank(f.child)
    if isinstance(f, (And, Or, Implies)):
        return quantifier_rank(f.lhs) + quantifier_rank(f.rhs)
    return 0


@dataclass
class KnowledgeBase:
    entries: list = field(default_factory=list)  # (formula, weight) pairs
    signature: dict = field(default_factory=dict)  # predicate -> arity

    def __len__(self):
        return len(self.entries)

    def formulas(self):
        return [f for f, _ in self.entries]

    def add(self, formula: ForAll, weight: float = 1.0, line: int = 1):
        weight = float(weight)
        if not math.isfinite(weight) or weight <= 0.0:
            raise ParseError(f"formula weight must be positive and finite, "
                             f"got {weight!r}", line)
        self.signature = validate_formula(formula, self.signature, line)
        self.entries.append((formula, weight))
        return self


_WEIGHT_RE = re.compile(r"^\s*([0-9]+(?:\.[0-9]*)?(?:[eE][+-]?[0-9]+)?|"
                        r"-[0-9.][0-9.eE+-]*)\s+(.*)$")


def parse_kb(text: str) -> KnowledgeBase:
    """Parse a knowledge-base file: `[weight] formula` lines, `#` comments."""
    kb = KnowledgeBase()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        weight = 1.0
        match = _WEIGHT_RE.match(line)
        if match:
            weight = float(match.group(1))
            line = match.group(2)
        formula = _Parser(_tokenize(line, lineno), lineno).parse_formula()
        kb.add(formula, weight, lineno)
    return kb
