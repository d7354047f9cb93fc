"""Empirical verification of operator derivative behaviour.

Monte-Carlo estimates of the fraction of the unit hypercube on which a
kernel has a nonvanishing derivative (checked against closed forms where
known), single-passing audits, derivative surfaces for implications, and
the consequent/antecedent gradient-quality metrics used by the training
harness.

Fractions are computed from integer hit counts so that estimates are
reduction-order independent and bit-reproducible under a fixed seed
(PCG64 via numpy's default generator).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .logic import And, Atom, ForAll, Implies, Not, Or
from .operators import OperatorConfig, OperatorDescriptor, OperatorError, descriptor
from .valuation import GroundingTable, valuate
from .autodiff import Tape

__all__ = [
    "FractionEstimate", "GradientQuality",
    "estimate_nonvanishing_fraction", "single_passing_audit", "composed",
    "gradient_quality", "labeling_from_atoms", "classical_truth",
    "derivative_surface", "yager_tnorm_fraction_check",
    "implication_aggregator_interaction",
    "lukasiewicz_fraction", "nilpotent_fraction", "yager_tnorm_fraction",
    "yager_p2_fraction_candidates",
]

PARTIAL_EPS = 1e-12


# ---------------------------------------------------------------------------
# closed forms

def lukasiewicz_fraction(n: int) -> float:
    return 1.0 / math.factorial(n)


def nilpotent_fraction(n: int) -> float:
    return 1.0 / 2 ** (n - 1)


def yager_tnorm_fraction(p: float) -> float:
    """Fraction of the unit square where the Yager t-norm derivative is
    nonvanishing: sqrt(pi) 4^(-1/p) Gamma(1/p) / (p Gamma(1/2 + 1/p))."""
    return (math.sqrt(math.pi) * 4.0 ** (-1.0 / p) * math.gamma(1.0 / p)
            / (p * math.gamma(0.5 + 1.0 / p)))


def yager_p2_fraction_candidates(n: int) -> dict:
    """Both closed-form candidates for the p=2 Yager aggregator fraction.

    The orthant volume of the unit n-ball is pi^(n/2) / (2^n Gamma(n/2+1));
    a Gamma(n/2 + 1/2) variant also circulates.  At n=2 they differ
    (pi/4 vs ~0.886) and Monte Carlo arbitrates.
    """
    top = math.pi ** (n / 2.0) / 2 ** n
    return {
        "gamma(n/2+1)": top / math.gamma(n / 2.0 + 1.0),
        "gamma(n/2+1/2)": top / math.gamma(n / 2.0 + 0.5),
    }


# ---------------------------------------------------------------------------
# vectorized nonvanishing-region masks
#
# Each mask states where at least one analytic partial exceeds 1e-12,
# written as the kernel's region condition.  test_analysis cross-checks
# these masks against the scalar kernels on random points.

def _ones(X):
    return np.ones(len(X), dtype=bool)


def _zeros(X):
    return np.zeros(len(X), dtype=bool)


def _nonvanishing_mask(desc: OperatorDescriptor, X: np.ndarray) -> np.ndarray:
    name = desc.name
    p = desc.p
    n = X.shape[1]
    if desc.family == "aggregator":
        if name in ("min", "max", "log_product", "prob_sum", "product",
                    "mae", "pme", "pmean", "rmse"):
            return _ones(X)
        if name == "lukasiewicz":
            return X.sum(axis=1) - (n - 1) >= 0.0
        if name == "bounded_sum":
            return X.sum(axis=1) <= 1.0
        if name == "yager":
            return ((1.0 - X) ** p).sum(axis=1) <= 1.0
        if name == "nilpotent":
            smallest_two = np.partition(X, 1, axis=1)[:, :2]
            return smallest_two.sum(axis=1) > 1.0
    elif desc.family == "tnorm":
        a, b = X[:, 0], X[:, 1]
        if name == "godel":
            return _ones(X)
        if name == "product":
            return np.maximum(a, b) > PARTIAL_EPS
        if name == "lukasiewicz":
            return a + b >= 1.0
        if name == "drastic":
            return (a == 1.0) | (b == 1.0)
        if name == "nilpotent":
            return a + b > 1.0
        if name == "yager":
            return (1.0 - a) ** p + (1.0 - b) ** p <= 1.0
    elif desc.family == "tconorm":
        a, b = X[:, 0], X[:, 1]
        if name == "godel":
            return _ones(X)
        if name == "product":
            return np.minimum(a, b) < 1.0 - PARTIAL_EPS
        if name == "lukasiewicz":
            return a + b <= 1.0
        if name == "drastic":
            return (a == 0.0) | (b == 0.0)
        if name == "nilpotent":
            return a + b < 1.0
        if name == "yager":
            return a ** p + b ** p <= 1.0
    elif desc.family == "implication":
        a, c = X[:, 0], X[:, 1]
        if name in ("kleene_dienes", "reichenbach"):
            return _ones(X)
        if name in ("lukasiewicz",):
            return c <= a
        if name in ("godel", "goguen", "fodor", "yager_r"):
            return a > c
        if name == "weber":
            return a >= 1.0
        if name == "dubois_prade":
            return (a == 1.0) | (c == 0.0)
        if name == "yager_s":
            return (1.0 - a) ** p + c ** p <= 1.0
        if name == "sigmoidal":
            base = descriptor("implication", dict(desc.params)["base"], p=p)
            return _nonvanishing_mask(base, X)
    raise OperatorError(f"no nonvanishing mask for {desc.family}:{name}")


def _closed_form(desc: OperatorDescriptor, n: int):
    name, p = desc.name, desc.p
    if desc.family == "aggregator":
        if name == "lukasiewicz":
            return lukasiewicz_fraction(n)
        if name == "nilpotent":
            return nilpotent_fraction(n)
        if name == "yager" and n == 2:
            return yager_tnorm_fraction(p)
        if name in ("min", "max", "product", "log_product", "prob_sum",
                    "mae", "rmse", "pme", "pmean"):
            return 1.0
        return None
    if desc.family in ("tnorm", "tconorm"):
        return {
            "godel": 1.0, "product": 1.0, "lukasiewicz": 0.5,
            "drastic": 0.0, "nilpotent": 0.5,
            "yager": yager_tnorm_fraction(p) if p else None,
        }.get(name)
    if desc.family == "implication":
        return {
            "kleene_dienes": 1.0, "reichenbach": 1.0, "lukasiewicz": 0.5,
            "godel": 0.5, "goguen": 0.5, "fodor": 0.5, "yager_r": 0.5,
            "weber": 0.0, "dubois_prade": 0.0,
            "yager_s": yager_tnorm_fraction(p) if p else None,
        }.get(name)
    return None


@dataclass
class FractionEstimate:
    """Monte-Carlo estimate of the nonvanishing-derivative fraction."""

    operator: str
    n: int
    samples: int
    estimate: float
    std_error: float
    closed_form: float | None = None
    candidates: dict = field(default_factory=dict)
    supported: str | None = None

    @property
    def z_score(self):
        if self.closed_form is None:
            return None
        se = max(self.std_error, 1e-15)
        return (self.estimate - self.closed_form) / se


def estimate_nonvanishing_fraction(desc: OperatorDescriptor, n: int,
                                   samples: int, seed: int) -> FractionEstimate:
    """Draw uniform points from [0,1]^n and count where at least one
    partial is nonzero (threshold 1e-12)."""
    if samples < 10_000:
        raise ValueError("fraction estimates need samples >= 10_000")
    if desc.family in ("tnorm", "tconorm", "implication") and n != 2:
        raise ValueError(f"{desc.family} kernels are binary; got n={n}")
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = 200_000
    remaining = samples
    while remaining > 0:
        m = min(chunk, remaining)
        X = rng.random((m, n))
        hits += int(_nonvanishing_mask(desc, X).sum())
        remaining -= m
    estimate = hits / samples
    std_error = math.sqrt(max(estimate * (1.0 - estimate), 0.0) / samples)
    out = FractionEstimate(f"{desc.family}:{desc.label()}", n, samples,
                           estimate, std_error, _closed_form(desc, n))
    if desc.family == "aggregator" and desc.name == "yager" and desc.p == 2.0:
        out.candidates = yager_p2_fraction_candidates(n)
        se = max(std_error, 1e-15)
        out.supported = min(out.candidates,
                            key=lambda k: abs(estimate - out.candidates[k]) / se)
        out.closed_form = out.candidates[out.supported]
    return out


# ---------------------------------------------------------------------------
# single-passing

def composed(outer: OperatorDescriptor, inners: list):
    """Point function for outer(inner_1(xs_1), ..., inner_k(xs_k)); the
    input vector is split between the inner operators in order."""
    arities = []
    for inner in inners:
        arities.append(2 if inner.family in ("tnorm", "tconorm", "implication")
                       else None)

    def fn(xs):
        tape = Tape()
        leaves = [tape.leaf(x) for x in xs]
        per = len(xs) // len(inners)
        nodes = []
        for i, inner in enumerate(inners):
            part = leaves[i * per:(i + 1) * per]
            v, partials = inner.kernel(*[n.value for n in part])
            nodes.append(tape.record(inner.label(), part, v, partials))
        v, partials = outer.kernel(*[n.value for n in nodes])
        root = tape.record(outer.label(), nodes, v, partials)
        grads = tape.backward(root)
        return root.value, [grads[leaf] for leaf in leaves]

    return fn


def single_passing_audit(op, n: int, samples: int = 10_000, seed: int = 0):
    """True iff at most one input has |partial| > 1e-12 at every sampled
    point; otherwise returns the first violating point as witness."""
    if samples < 10_000:
        raise ValueError("single-passing audits need samples >= 10_000")
    rng = np.random.default_rng(seed)
    if isinstance(op, OperatorDescriptor):
        kernel = op.kernel

        def fn(xs):
            return kernel(*xs)
    else:
        fn = op
    for _ in range(samples):
        xs = rng.random(n).tolist()
        _, partials = fn(xs)
        live = sum(1 for d in partials if abs(d) > PARTIAL_EPS)
        if live > 1:
            return False, tuple(xs)
    return True, None


# ---------------------------------------------------------------------------
# gradient quality

def classical_truth(formula, assignment: dict, atom_fn) -> bool:
    """Boolean truth of a quantifier-free subformula under data labels."""
    if isinstance(formula, Atom):
        objs = tuple(assignment[a] for a in formula.args)
        return bool(atom_fn(formula.pred, objs))
    if isinstance(formula, Not):
        return not classical_truth(formula.child, assignment, atom_fn)
    if isinstance(formula, And):
        return (classical_truth(formula.lhs, assignment, atom_fn)
                and classical_truth(formula.rhs, assignment, atom_fn))
    if isinstance(formula, Or):
        return (classical_truth(formula.lhs, assignment, atom_fn)
                or classical_truth(formula.rhs, assignment, atom_fn))
    if isinstance(formula, Implies):
        return (not classical_truth(formula.lhs, assignment, atom_fn)
                or classical_truth(formula.rhs, assignment, atom_fn))
    raise ValueError(f"not a quantifier-free formula: {formula!r}")


def labeling_from_atoms(atom_fn):
    """Lift a ground-atom labelling (pred, objs) -> {0,1} to arbitrary
    quantifier-free subformula instances."""
    def label(formula, assignment):
        return int(classical_truth(formula, assignment, atom_fn))
    return label


@dataclass
class GradientQuality:
    """Consequent/antecedent derivative magnitudes and ratios."""

    cons_magnitude: float
    ant_magnitude: float
    cons_pct: float
    cu_cons_pct: float
    cu_ant_pct: float
    formulas_used: int
    formulas_skipped: int


def gradient_quality(kb, g: GroundingTable, ops: OperatorConfig,
                     labels) -> GradientQuality:
    """Per-step |cons|, |ant| and the cons%/cu_cons%/cu_ant% ratios.

    ``labels(formula, assignment)`` must return the {0,1} data truth of a
    quantifier-free subformula instance (see ``labeling_from_atoms``).
    Formulas whose quantifier body is not an implication are skipped.
    Ratios with a zero denominator are returned as nan.
    """
    total_cons = total_ant = total_cu_cons = total_cu_ant = 0.0
    used = skipped = 0
    for formula, _ in kb.entries:
        body = formula
        while isinstance(body, ForAll):
            body = body.body
        if not isinstance(body, Implies):
            skipped += 1
            continue
        used += 1
        instances: list = []
        root = valuate(formula, g, ops, instances=instances)
        grads = g.tape.backward(root)
        for rec in instances:
            d_cons = grads[rec.consequent]
            d_ant = -grads[rec.antecedent]
            total_cons += d_cons
            total_ant += d_ant
            total_cu_cons += labels(rec.consequent_formula, rec.assignment) * d_cons
            total_cu_ant += labels(Not(rec.antecedent_formula),
                                   rec.assignment) * d_ant
    denom = total_cons + total_ant
    return GradientQuality(
        cons_magnitude=total_cons,
        ant_magnitude=total_ant,
        cons_pct=total_cons / denom if denom > 0 else float("nan"),
        cu_cons_pct=total_cu_cons / total_cons if total_cons > 0 else float("nan"),
        cu_ant_pct=total_cu_ant / total_ant if total_ant > 0 else float("nan"),
        formulas_used=used,
        formulas_skipped=skipped,
    )


# ---------------------------------------------------------------------------
# derivative surfaces

def _grid(step: float):
    count = round(1.0 / step)
    if abs(count * step - 1.0) > 1e-9:
        raise ValueError(f"grid step {step} does not divide 1")
    return [i * step for i in range(count + 1)]


def derivative_surface(name: str, step: float, p: float | None = None,
                       s: float | None = None, b0: float | None = None,
                       base: str | None = None) -> list:
    """Dense (a, c, d_Ic, d_Inot_a) table for an implication kernel."""
    from .operators import implication_kernel

    rows = []
    for a in _grid(step):
        for c in _grid(step):
            _, (dia, dic) = implication_kernel(name, a, c, p=p, s=s, b0=b0,
                                               base=base)
            rows.append((a, c, dic, -dia))
    return rows


def yager_tnorm_fraction_check(p: float, samples: int, seed: int):
    """(MC estimate, closed form, z-score) for the Yager t-norm fraction."""
    desc = descriptor("tnorm", "yager", p=p)
    est = estimate_nonvanishing_fraction(desc, 2, samples, seed)
    cf = yager_tnorm_fraction(p)
    se = max(est.std_error, 1e-15)
    return est.estimate, cf, (est.estimate - cf) / se


def implication_aggregator_interaction(agg: str, impl: str, step: float,
                                       p: float | None = None) -> list:
    """Composite d(aggregated value)/d(negated antecedent) over a grid.

    Two instances feed the aggregator: the probed (a, c) and a fixed
    companion with 1 - I_RC = sqrt(0.9) (so its squared error is 0.9,
    the plotting convention for the n=2 rmse surface).  Grid inputs are
    clamped like grounding atoms, so corner rows show the engine's real
    (finite) behaviour.
    """
    from .operators import aggregate_kernel, implication_kernel
    from .valuation import CLAMP_EPS

    if agg not in ("log_product", "rmse"):
        raise ValueError("interaction surfaces are defined for log_product/rmse")
    a1 = math.sqrt(0.9)
    c1 = 0.0
    rows = []
    for a in _grid(step):
        for c in _grid(step):
            ac = min(max(a, CLAMP_EPS), 1.0 - CLAMP_EPS)
            cc = min(max(c, CLAMP_EPS), 1.0 - CLAMP_EPS)
            tape = Tape()
            la = tape.leaf(ac)
            lc = tape.leaf(cc)
            v1, _ = implication_kernel("reichenbach", a1, c1)
            n1 = tape.leaf(v1)
            v2, partials = implication_kernel(impl, ac, cc, p=p)
            n2 = tape.record("I", [la, lc], v2, partials)
            av, apart = aggregate_kernel(agg, [n1.value, n2.value])
            root = tape.record(f"A_{agg}", [n1, n2], av, apart)
            grads = tape.backward(root)
            rows.append((a, c, -grads[la]))
    return rows
