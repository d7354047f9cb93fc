"""Valuation engine: grounding construction, recursive formula valuation
over a fresh autodiff tape, and the weighted knowledge-base loss.

The quantifier block of a prenex formula is enumerated over a sampled
batch of objects in lexicographic object-index order.  Nested quantifier
variables aggregate innermost-first, i.e. ``forall x, y`` becomes
A_x(A_y(...)).  The log-product aggregator is the one exception: its
output lives in (-inf, 0] and may not feed another connective, so the
whole quantifier block collapses into a single flat aggregation over all
b**d instances (the two shapes agree exactly because log turns the
nested product into a sum).
"""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field

from .autodiff import Node, Tape
from .logic import And, Atom, ForAll, Implies, KnowledgeBase, Not, Or, ParseError
from .operators import OperatorConfig, OperatorError

__all__ = [
    "SemanticError", "Domain", "LookupInterpretation", "GroundingTable",
    "InstanceRecord", "sample_batch", "build_grounding", "valuate",
    "dfl_loss", "atom_gradients", "parse_grounding", "CLAMP_EPS",
]

CLAMP_EPS = 1e-7


class SemanticError(ValueError):
    """Well-formed input that cannot be valuated (unresolvable atom,
    log-product output consumed by a connective, scorer out of range)."""


@dataclass
class Domain:
    """Finite support of the object distribution plus a uniform sampler.

    ``points`` optionally carries one embedding vector per object (any
    sequence indexed like ``names``); lookup-table interpretations leave
    it as None.
    """

    names: list
    points: object = None

    def __len__(self):
        return len(self.names)

    def index_of(self, name: str) -> int:
        return self.names.index(name)


class LookupInterpretation:
    """Interpretation backed by a fixed table of atom probabilities."""

    def __init__(self, table: dict):
        # keys: (pred, tuple of object indices) -> probability
        self.table = dict(table)

    def score(self, pred: str, objs: tuple) -> float:
        try:
            return self.table[(pred, objs)]
        except KeyError:
            raise SemanticError(
                f"no probability for ground atom {pred}{objs}") from None


@dataclass
class GroundingTable:
    """Tape-backed truth values for every ground atom over a batch."""

    nodes: dict
    batch: list
    tape: Tape
    raw: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.nodes)

    def node(self, pred: str, objs: tuple) -> Node:
        try:
            return self.nodes[(pred, tuple(objs))]
        except KeyError:
            raise SemanticError(
                f"ground atom {pred}{tuple(objs)} missing from grounding "
                f"(signature mismatch?)") from None

    def atoms(self):
        return list(self.nodes)


def sample_batch(domain: Domain, b: int, seed: int) -> list:
    """Uniform sample of b object indices without replacement, sorted."""
    n = len(domain)
    if not 1 <= b <= n:
        raise ValueError(f"batch size {b} out of range 1..{n}")
    rng = random.Random(seed)
    return sorted(rng.sample(range(n), b))


def build_grounding(interp, domain: Domain, signature: dict, batch: list,
                    tape: Tape | None = None,
                    clamp_eps: float = CLAMP_EPS) -> GroundingTable:
    """Score every ground atom over the batch and record it as a tape leaf.

    Raw scores may stray 1e-6 outside [0, 1] (model arithmetic); anything
    worse is an error.  Stored values are clamped to [eps, 1-eps], which
    keeps log-product and Goguen kernels finite.
    """
    if not batch:
        raise SemanticError("batch must be non-empty")
    tape = tape if tape is not None else Tape()
    nodes = {}
    raw_values = {}
    for pred in sorted(signature):
        arity = signature[pred]
        for objs in itertools.product(batch, repeat=arity):
            raw = float(interp.score(pred, objs))
            if raw < -1e-6 or raw > 1.0 + 1e-6:
                raise SemanticError(
                    f"scorer output {raw!r} for {pred}{objs} is outside [0, 1]")
            clamped = min(max(raw, clamp_eps), 1.0 - clamp_eps)
            key = (pred, objs)
            nodes[key] = tape.leaf(clamped, label=f"{pred}{objs}")
            raw_values[key] = raw
    return GroundingTable(nodes, list(batch), tape, raw_values)


@dataclass
class InstanceRecord:
    """One quantifier instance of a formula whose body is an implication;
    used by the gradient-quality metrics."""

    assignment: dict
    antecedent: Node
    consequent: Node
    antecedent_formula: object
    consequent_formula: object


def _collapse_forall(f: ForAll):
    vars_ = []
    node = f
    while isinstance(node, ForAll):
        vars_.extend(node.vars)
        node = node.body
    return tuple(vars_), node


def valuate(f, g: GroundingTable, ops: OperatorConfig, mu: dict | None = None,
            instances: list | None = None) -> Node:
    """Fuzzy truth value of ``f`` under grounding ``g`` and operators ``ops``.

    ``mu`` maps already-bound variables to object indices.  When
    ``instances`` is a list and the quantifier body is an implication,
    one InstanceRecord per enumerated instance is appended; the
    antecedent/consequent nodes are per-instance pass-through slots, so
    their adjoints are exactly the per-instance derivatives even when a
    ground atom is shared between slots.
    """
    mu = dict(mu or {})
    return _eval(f, g, ops, mu, instances, at_root=True)


def _eval(node, g, ops, mu, instances, at_root=False):
    tape = g.tape
    if isinstance(node, Atom):
        try:
            objs = tuple(mu[a] for a in node.args)
        except KeyError as exc:
            raise SemanticError(f"unbound variable {exc} in {node}") from None
        return g.node(node.pred, objs)
    if isinstance(node, Not):
        child = _eval(node.child, g, ops, mu, instances)
        return tape.record("N_C", [child], 1.0 - child.value, [-1.0])
    if isinstance(node, And):
        lhs = _eval(node.lhs, g, ops, mu, instances)
        rhs = _eval(node.rhs, g, ops, mu, instances)
        v, partials = ops.tnorm_kernel(lhs.value, rhs.value)
        return tape.record(f"T_{ops.tnorm}", [lhs, rhs], v, partials)
    if isinstance(node, Or):
        lhs = _eval(node.lhs, g, ops, mu, instances)
        rhs = _eval(node.rhs, g, ops, mu, instances)
        v, partials = ops.tconorm_kernel(lhs.value, rhs.value)
        return tape.record(f"S_{ops.tconorm}", [lhs, rhs], v, partials)
    if isinstance(node, Implies):
        lhs = _eval(node.lhs, g, ops, mu, instances)
        rhs = _eval(node.rhs, g, ops, mu, instances)
        v, partials = ops.implication_kernel(lhs.value, rhs.value)
        return tape.record(f"I_{ops.implication}", [lhs, rhs], v, partials)
    if isinstance(node, ForAll):
        if ops.aggregator == "log_product" and not at_root:
            raise SemanticError(
                "log_product produces a log-space truth value; it may only "
                "appear as the outermost quantifier of a prenex formula")
        vars_, body = _collapse_forall(node)
        return _eval_quantifier(vars_, body, g, ops, mu, instances)
    raise SemanticError(f"cannot valuate node {node!r}")


def _eval_body(body, g, ops, mu, instances):
    if instances is not None and isinstance(body, Implies):
        ante = _eval(body.lhs, g, ops, mu, instances)
        cons = _eval(body.rhs, g, ops, mu, instances)
        # fresh pass-through slots: adjoints stay per-instance even when the
        # same ground atom serves as antecedent here and consequent elsewhere
        ante_slot = g.tape.record("ante", [ante], ante.value, [1.0])
        cons_slot = g.tape.record("cons", [cons], cons.value, [1.0])
        v, partials = ops.implication_kernel(ante_slot.value, cons_slot.value)
        out = g.tape.record(f"I_{ops.implication}", [ante_slot, cons_slot],
                            v, partials)
        instances.append(InstanceRecord(dict(mu), ante_slot, cons_slot,
                                        body.lhs, body.rhs))
        return out
    return _eval(body, g, ops, mu, instances)


def _eval_quantifier(vars_, body, g, ops, mu, instances):
    tape = g.tape
    batch = g.batch
    if ops.aggregator == "log_product":
        values = []
        for combo in itertools.product(batch, repeat=len(vars_)):
            mu.update(zip(vars_, combo))
            values.append(_eval_body(body, g, ops, mu, instances))
        for var in vars_:
            mu.pop(var, None)
        v, partials = ops.aggregate_kernel([n.value for n in values])
        return tape.record("A_log_product", values, v, partials)

    def agg_over(remaining):
        if not remaining:
            return _eval_body(body, g, ops, mu, instances)
        var = remaining[0]
        children = []
        for idx in batch:
            mu[var] = idx
            children.append(agg_over(remaining[1:]))
        del mu[var]
        v, partials = ops.aggregate_kernel([n.value for n in children])
        return tape.record(f"A_{ops.aggregator}", children, v, partials)

    return agg_over(list(vars_))


def dfl_loss(kb: KnowledgeBase, g: GroundingTable, ops: OperatorConfig,
             instances: list | None = None) -> Node:
    """L = -sum over formulas of weight * valuation; root of the tape."""
    tape = g.tape
    if not kb.entries:
        return tape.leaf(0.0, label="loss")
    vals = []
    weights = []
    for formula, weight in kb.entries:
        vals.append(valuate(formula, g, ops, instances=instances))
        weights.append(weight)
    total = -sum(w * n.value for w, n in zip(weights, vals))
    return tape.record("loss", vals, total, [-w for w in weights])


def atom_gradients(kb: KnowledgeBase, g: GroundingTable,
                   ops: OperatorConfig) -> dict:
    """dL/datom for every grounding entry (Example-2 style table).

    The returned sign convention is the loss gradient for plain descent:
    L = -sum w * valuation, so a NEGATIVE entry means descent increases
    that atom.  d(valuation-sum)/datom is the negation of each entry.
    """
    loss = dfl_loss(kb, g, ops)
    grads = g.tape.backward(loss)
    return {key: grads[node] for key, node in g.nodes.items()}


_GROUNDING_LINE = re.compile(
    r"^([A-Za-z_][A-Za-z0-9_]*)\(([^)]*)\)\s*=\s*([0-9.eE+-]+)$")


def parse_grounding(text: str):
    """Parse lookup-table grounding lines ``pred(o1,o2)=0.95``.

    Object names are declared implicitly, ordered by first appearance.
    Returns (domain, interpretation, signature).
    """
    names: list = []
    table = {}
    signature: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = _GROUNDING_LINE.match(line)
        if not match:
            raise ParseError(f"bad grounding line {line!r}", lineno)
        pred, arg_text, value_text = match.groups()
        args = [a.strip() for a in arg_text.split(",") if a.strip()]
        if not args:
            raise ParseError(f"atom {pred}() needs at least one object", lineno)
        try:
            value = float(value_text)
        except ValueError:
            raise ParseError(f"bad probability {value_text!r}", lineno) from None
        if not 0.0 <= value <= 1.0:
            raise ParseError(f"probability {value} outside [0, 1]", lineno)
        arity = signature.setdefault(pred, len(args))
        if arity != len(args):
            raise ParseError(
                f"arity conflict for {pred!r}: {len(args)} vs {arity}", lineno)
        for name in args:
            if name not in names:
                names.append(name)
        key = (pred, tuple(names.index(a) for a in args))
        if key in table:
            raise ParseError(f"duplicate grounding entry for {line!r}", lineno)
        table[key] = value
    return Domain(names), LookupInterpretation(table), signature
