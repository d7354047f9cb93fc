"""Exact Semantic Loss by world enumeration, and the equivalence check
against the product-configuration fuzzy valuation.

A world assigns {0,1} to every ground atom appearing in the grounded
knowledge base; atoms that never appear marginalize out and are not
enumerated.  The satisfying-world probability mass is accumulated with
``math.fsum`` (exactly rounded), so results are independent of
enumeration order.  The 20-atom cap (about a million worlds) keeps the
oracle exact rather than sampled; larger groundings are rejected.

The fuzzy side of the comparison uses product t-norm/t-conorm, the
Reichenbach implication and the log-product aggregator, exponentiated
back into probability space.  When every ground atom occurs at most
once in the grounded knowledge base the two sides agree; repeated atoms
make the fuzzy side drift (the P AND NOT(P AND Q) example).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .analysis import classical_truth
from .logic import And, Atom, ForAll, Implies, KnowledgeBase, Not, Or
from .operators import OperatorConfig
from .valuation import (CLAMP_EPS, Domain, LookupInterpretation,
                        build_grounding, valuate)

__all__ = [
    "WorldCapError", "AtomOccurrence", "EquivalenceReport",
    "WORLD_ATOM_CAP", "DPFL_CONFIG",
    "ground_instances", "occurrence_census", "semantic_probability",
    "semantic_loss", "dpfl_valuation", "equivalence_report", "world_table",
]

WORLD_ATOM_CAP = 20

DPFL_CONFIG = OperatorConfig(tnorm="product", tconorm="product",
                             implication="reichenbach",
                             aggregator="log_product")


class WorldCapError(ValueError):
    """Grounded knowledge base exceeds the exact-enumeration atom cap."""


def _collapse(formula: ForAll):
    vars_ = []
    node = formula
    while isinstance(node, ForAll):
        vars_.extend(node.vars)
        node = node.body
    return tuple(vars_), node


def ground_instances(kb: KnowledgeBase, batch: list):
    """All (body, assignment) instances of every formula, in knowledge-base
    order then lexicographic object order."""
    out = []
    for formula, _ in kb.entries:
        vars_, body = _collapse(formula)
        for combo in itertools.product(batch, repeat=len(vars_)):
            out.append((body, dict(zip(vars_, combo))))
    return out


def _appearing_atoms(kb: KnowledgeBase, batch: list):
    """Ground atoms of the grounded KB in first-appearance order, plus
    per-atom occurrence counts."""
    order: list = []
    counts: dict = {}

    def walk(node, mu):
        if isinstance(node, Atom):
            key = (node.pred, tuple(mu[a] for a in node.args))
            if key not in counts:
                counts[key] = 0
                order.append(key)
            counts[key] += 1
        elif isinstance(node, Not):
            walk(node.child, mu)
        elif isinstance(node, (And, Or, Implies)):
            walk(node.lhs, mu)
            walk(node.rhs, mu)

    for body, mu in ground_instances(kb, batch):
        walk(body, mu)
    return order, counts


@dataclass
class AtomOccurrence:
    """Occurrence count of each ground atom within the grounded KB."""

    counts: dict
    single_occurrence: bool

    def __getitem__(self, key):
        return self.counts[key]


def occurrence_census(kb: KnowledgeBase, batch: list) -> AtomOccurrence:
    _, counts = _appearing_atoms(kb, batch)
    return AtomOccurrence(counts, all(v <= 1 for v in counts.values()))


def _prob_lookup(probs):
    if isinstance(probs, LookupInterpretation):
        return probs.score
    if isinstance(probs, dict):
        table = LookupInterpretation(probs)
        return table.score
    return probs.score


def _enumerate_worlds(kb: KnowledgeBase, probs, batch: list):
    atoms, _ = _appearing_atoms(kb, batch)
    if len(atoms) > WORLD_ATOM_CAP:
        raise WorldCapError(
            f"{len(atoms)} ground atoms exceed the {WORLD_ATOM_CAP}-atom "
            f"world-enumeration cap")
    score = _prob_lookup(probs)
    p = [float(score(pred, objs)) for pred, objs in atoms]
    instances = ground_instances(kb, batch)
    for bits in itertools.product((0, 1), repeat=len(atoms)):
        world = dict(zip(atoms, bits))
        atom_fn = lambda pred, objs: world[(pred, objs)]
        satisfied = all(classical_truth(body, mu, atom_fn)
                        for body, mu in instances)
        weight = 1.0
        for pi, bit in zip(p, bits):
            weight *= pi if bit else (1.0 - pi)
        yield bits, satisfied, weight


def world_table(kb: KnowledgeBase, probs, batch: list):
    """(atoms, rows) where each row is (bits, satisfied, probability)."""
    atoms, _ = _appearing_atoms(kb, batch)
    return atoms, list(_enumerate_worlds(kb, probs, batch))


def semantic_probability(kb: KnowledgeBase, probs, batch: list) -> float:
    """Probability of sampling a world consistent with the grounded KB
    under independent atom probabilities."""
    return math.fsum(weight for _, ok, weight
                     in _enumerate_worlds(kb, probs, batch) if ok)


def semantic_loss(kb: KnowledgeBase, probs, batch: list) -> float:
    """-log of the consistent-world probability (inf when unsatisfiable)."""
    prob = semantic_probability(kb, probs, batch)
    if prob <= 0.0:
        return math.inf
    return -math.log(prob)


class _DefaultingInterp:
    """Scores appearing atoms from the table; grounding slots the KB never
    touches get a placeholder value."""

    def __init__(self, score, appearing):
        self._score = score
        self._appearing = set(appearing)

    def score(self, pred, objs):
        if (pred, objs) in self._appearing:
            return self._score(pred, objs)
        return 0.5


def dpfl_valuation(kb: KnowledgeBase, probs, batch: list) -> float:
    """Product-config valuation of the KB, exponentiated back to
    probability space.  Formula weights are ignored: the comparison is
    between probabilities, not losses."""
    appearing, _ = _appearing_atoms(kb, batch)
    interp = _DefaultingInterp(_prob_lookup(probs), appearing)
    domain = Domain([f"o{i}" for i in range(max(batch) + 1)])
    g = build_grounding(interp, domain, kb.signature, batch)
    log_total = 0.0
    for formula, _ in kb.entries:
        log_total += valuate(formula, g, DPFL_CONFIG).value
    return math.exp(log_total)


@dataclass
class EquivalenceReport:
    exact: float
    dpfl: float
    gap: float
    single_occurrence: bool


def equivalence_report(kb: KnowledgeBase, probs, batch: list) -> EquivalenceReport:
    exact = semantic_probability(kb, probs, batch)
    fuzzy = dpfl_valuation(kb, probs, batch)
    census = occurrence_census(kb, batch)
    return EquivalenceReport(exact, fuzzy, abs(exact - fuzzy),
                             census.single_occurrence)
