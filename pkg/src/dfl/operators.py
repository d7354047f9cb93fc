"""Fuzzy operator catalog: values plus analytic partial derivatives.

Every kernel is a pure function returning ``(value, partials)`` where
``partials[i]`` is the derivative of the value with respect to input i.
Inputs must already lie in [0, 1]; nothing is clamped here (the
valuation layer clamps model outputs before they reach a kernel).

Subgradient convention at ties: min/max assign the whole partial to the
FIRST argument when arguments are equal, and piecewise kernels keep the
boundary in the branch listed first below.  These choices only matter on
measure-zero sets; finite-difference checks skip a neighbourhood of each
kernel's declared nondifferentiable locus (see ``near_locus``).

Known singular partials (Goguen as a -> 0, Yager-style kernels as the
radicand -> 0 with p > 1) are computed as written; they can be huge or
infinite.  Recording an infinite partial on a tape raises, which is the
intended failure mode for un-clamped boundary inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

__all__ = [
    "OperatorError",
    "ConfigError",
    "OperatorDescriptor",
    "OperatorConfig",
    "negation",
    "negation_kernel",
    "tnorm",
    "tnorm_kernel",
    "tconorm",
    "tconorm_kernel",
    "aggregate",
    "aggregate_kernel",
    "implication",
    "implication_kernel",
    "sigmoidal_implication",
    "sigmoidal_kernel",
    "d_Ic",
    "d_Inot_a",
    "tnorm_duality_check",
    "property_audit",
    "parse_operator_config",
    "catalog",
    "TNORM_NAMES",
    "TCONORM_NAMES",
    "AGGREGATOR_NAMES",
    "IMPLICATION_NAMES",
]


class OperatorError(ValueError):
    """Unknown operator, bad parameter, or input outside [0, 1]."""


class ConfigError(ValueError):
    """Malformed operator-config assignment."""


def _check_unit(x: float, what: str = "input") -> float:
    x = float(x)
    if not (0.0 <= x <= 1.0):
        raise OperatorError(f"{what} must be in [0, 1], got {x!r}")
    return x


def _pow(base: float, exp: float) -> float:
    # 0 ** negative is a genuine singularity; surface it as inf so the
    # tape rejects it instead of raising ZeroDivisionError mid-kernel.
    if base == 0.0 and exp < 0.0:
        return math.inf
    return base ** exp


# ---------------------------------------------------------------------------
# negation

def negation_kernel(a: float):
    return 1.0 - a, (-1.0,)


def negation(a: float) -> float:
    _check_unit(a)
    return 1.0 - a


# ---------------------------------------------------------------------------
# t-norms

def _t_godel(a, b, p=None):
    if a <= b:
        return a, (1.0, 0.0)
    return b, (0.0, 1.0)


def _t_product(a, b, p=None):
    return a * b, (b, a)


def _t_lukasiewicz(a, b, p=None):
    if a == 1.0:  # neutral element, kept exact; matches the generic branch
        return b, (1.0, 1.0)
    if b == 1.0:
        return a, (1.0, 1.0)
    s = a + b - 1.0
    if s >= 0.0:
        return s, (1.0, 1.0)
    return 0.0, (0.0, 0.0)


def _t_drastic(a, b, p=None):
    if a == 1.0 or b == 1.0:
        v, _ = _t_godel(a, b)
        da = 1.0 if b == 1.0 and a < 1.0 else 0.0
        db = 1.0 if a == 1.0 and b < 1.0 else 0.0
        if a == 1.0 and b == 1.0:
            da = 1.0  # min tie goes to the first argument
        return v, (da, db)
    return 0.0, (0.0, 0.0)


def _t_nilpotent(a, b, p=None):
    if a + b > 1.0:
        return _t_godel(a, b)
    return 0.0, (0.0, 0.0)


def _t_yager(a, b, p):
    if a == 1.0 and b != 1.0:  # neutral element, kept exact
        return b, (0.0 if p > 1.0 else 1.0, 1.0)
    if b == 1.0 and a != 1.0:
        return a, (1.0, 0.0 if p > 1.0 else 1.0)
    s = (1.0 - a) ** p + (1.0 - b) ** p
    if s == 0.0:
        # corner a = b = 1: declared subgradient, the diagonal limit
        d = _pow(2.0, 1.0 / p - 1.0)
        return 1.0, (d, d)
    if s <= 1.0:
        scale = _pow(s, 1.0 / p - 1.0)
        return (1.0 - _pow(s, 1.0 / p),
                (scale * _pow(1.0 - a, p - 1.0), scale * _pow(1.0 - b, p - 1.0)))
    return 0.0, (0.0, 0.0)


_TNORMS = {
    "godel": _t_godel,
    "product": _t_product,
    "lukasiewicz": _t_lukasiewicz,
    "drastic": _t_drastic,
    "nilpotent": _t_nilpotent,
    "yager": _t_yager,
}

TNORM_NAMES = tuple(_TNORMS)


def _need_p(name: str, p):
    if p is None:
        raise OperatorError(f"{name} requires parameter p")
    p = float(p)
    if p < 1.0:
        raise OperatorError(f"{name} requires p >= 1, got {p}")
    return p


def tnorm_kernel(name: str, a: float, b: float, p: float | None = None):
    fn = _TNORMS.get(name)
    if fn is None:
        raise OperatorError(f"unknown t-norm {name!r}")
    _check_unit(a)
    _check_unit(b)
    if name == "yager":
        p = _need_p("yager t-norm", p)
    elif p is not None:
        raise OperatorError(f"t-norm {name} takes no parameter p")
    return fn(a, b, p)


def tnorm(name: str, a: float, b: float, p: float | None = None) -> float:
    return tnorm_kernel(name, a, b, p)[0]


# ---------------------------------------------------------------------------
# t-conorms (N_C-duals of the t-norms above)

def _s_godel(a, b, p=None):
    if a >= b:
        return a, (1.0, 0.0)
    return b, (0.0, 1.0)


def _s_product(a, b, p=None):
    return a + b - a * b, (1.0 - b, 1.0 - a)


def _s_lukasiewicz(a, b, p=None):
    if a == 0.0:  # neutral element, kept exact; matches the generic branch
        return b, (1.0, 1.0)
    if b == 0.0:
        return a, (1.0, 1.0)
    s = a + b
    if s <= 1.0:
        return s, (1.0, 1.0)
    return 1.0, (0.0, 0.0)


def _s_drastic(a, b, p=None):
    if a == 0.0 or b == 0.0:
        v, _ = _s_godel(a, b)
        da = 1.0 if b == 0.0 and a > 0.0 else 0.0
        db = 1.0 if a == 0.0 and b > 0.0 else 0.0
        if a == 0.0 and b == 0.0:
            da = 1.0
        return v, (da, db)
    return 1.0, (0.0, 0.0)


def _s_nilpotent(a, b, p=None):
    if a + b < 1.0:
        return _s_godel(a, b)
    return 1.0, (0.0, 0.0)


def _s_yager(a, b, p):
    if a == 0.0 and b != 0.0:  # neutral element, kept exact
        return b, (0.0 if p > 1.0 else 1.0, 1.0)
    if b == 0.0 and a != 0.0:
        return a, (1.0, 0.0 if p > 1.0 else 1.0)
    s = a ** p + b ** p
    if s == 0.0:
        # corner a = b = 0: declared subgradient, the diagonal limit
        d = _pow(2.0, 1.0 / p - 1.0)
        return 0.0, (d, d)
    if s <= 1.0:
        scale = _pow(s, 1.0 / p - 1.0)
        return _pow(s, 1.0 / p), (scale * _pow(a, p - 1.0), scale * _pow(b, p - 1.0))
    return 1.0, (0.0, 0.0)


_TCONORMS = {
    "godel": _s_godel,
    "product": _s_product,
    "lukasiewicz": _s_lukasiewicz,
    "drastic": _s_drastic,
    "nilpotent": _s_nilpotent,
    "yager": _s_yager,
}

TCONORM_NAMES = tuple(_TCONORMS)


def tconorm_kernel(name: str, a: float, b: float, p: float | None = None):
    fn = _TCONORMS.get(name)
    if fn is None:
        raise OperatorError(f"unknown t-conorm {name!r}")
    _check_unit(a)
    _check_unit(b)
    if name == "yager":
        p = _need_p("yager t-conorm", p)
    elif p is not None:
        raise OperatorError(f"t-conorm {name} takes no parameter p")
    return fn(a, b, p)


def tconorm(name: str, a: float, b: float, p: float | None = None) -> float:
    return tconorm_kernel(name, a, b, p)[0]


# ---------------------------------------------------------------------------
# aggregators

def _argmin_first(xs):
    best = 0
    for i in range(1, len(xs)):
        if xs[i] < xs[best]:
            best = i
    return best


def _argmax_first(xs):
    best = 0
    for i in range(1, len(xs)):
        if xs[i] > xs[best]:
            best = i
    return best


def _a_min(xs, p=None):
    i = _argmin_first(xs)
    partials = [0.0] * len(xs)
    partials[i] = 1.0
    return xs[i], partials


def _a_max(xs, p=None):
    i = _argmax_first(xs)
    partials = [0.0] * len(xs)
    partials[i] = 1.0
    return xs[i], partials


def _a_product(xs, p=None):
    n = len(xs)
    # prefix/suffix products keep partials exact when some x is 0
    prefix = [1.0] * (n + 1)
    for i, x in enumerate(xs):
        prefix[i + 1] = prefix[i] * x
    suffix = [1.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] * xs[i]
    partials = [prefix[i] * suffix[i + 1] for i in range(n)]
    return prefix[n], partials


def _a_log_product(xs, p=None):
    for x in xs:
        if x <= 0.0:
            raise OperatorError("log_product is undefined at 0; clamp inputs first")
    return math.fsum(math.log(x) for x in xs), [1.0 / x for x in xs]


def _a_lukasiewicz(xs, p=None):
    n = len(xs)
    s = math.fsum(xs) - (n - 1)
    if s >= 0.0:
        return s, [1.0] * n
    return 0.0, [0.0] * n


def _a_bounded_sum(xs, p=None):
    s = math.fsum(xs)
    if s <= 1.0:
        return s, [1.0] * len(xs)
    return 1.0, [0.0] * len(xs)


def _a_prob_sum(xs, p=None):
    ones = [1.0 - x for x in xs]
    prod, partials = _a_product(ones)
    return 1.0 - prod, partials


def _a_yager(xs, p):
    s = math.fsum((1.0 - x) ** p for x in xs)
    if s == 0.0:
        # all-ones corner: declared subgradient, the diagonal limit
        d = _pow(float(len(xs)), 1.0 / p - 1.0)
        return 1.0, [d] * len(xs)
    if s <= 1.0:
        scale = _pow(s, 1.0 / p - 1.0)
        return (1.0 - _pow(s, 1.0 / p),
                [scale * _pow(1.0 - x, p - 1.0) for x in xs])
    return 0.0, [0.0] * len(xs)


def _a_nilpotent(xs, p=None):
    n = len(xs)
    if n == 1:
        return xs[0], [1.0]
    lo = _argmin_first(xs)
    second = None
    for i in range(n):
        if i == lo:
            continue
        if second is None or xs[i] < xs[second]:
            second = i
    if xs[lo] + xs[second] > 1.0:
        partials = [0.0] * n
        partials[lo] = 1.0
        return xs[lo], partials
    return 0.0, [0.0] * n


def _a_pme(xs, p):
    n = len(xs)
    s = math.fsum((1.0 - x) ** p for x in xs)
    if s == 0.0:
        # all-ones corner: declared subgradient, the diagonal limit
        return 1.0, [1.0 / n] * n
    v = 1.0 - _pow(s / n, 1.0 / p)
    scale = _pow(s / n, 1.0 / p - 1.0) / n
    return v, [scale * _pow(1.0 - x, p - 1.0) for x in xs]


def _a_pmean(xs, p):
    n = len(xs)
    s = math.fsum(x ** p for x in xs)
    if s == 0.0:
        # all-zeros corner: declared subgradient, the diagonal limit
        return 0.0, [1.0 / n] * n
    v = _pow(s / n, 1.0 / p)
    scale = _pow(s / n, 1.0 / p - 1.0) / n
    return v, [scale * _pow(x, p - 1.0) for x in xs]


_AGGREGATORS = {
    "min": (_a_min, None),
    "max": (_a_max, None),
    "product": (_a_product, None),
    "log_product": (_a_log_product, None),
    "lukasiewicz": (_a_lukasiewicz, None),
    "bounded_sum": (_a_bounded_sum, None),
    "prob_sum": (_a_prob_sum, None),
    "yager": (_a_yager, "yager"),
    "nilpotent": (_a_nilpotent, None),
    "pme": (_a_pme, "positive"),
    "pmean": (_a_pmean, "positive"),
    "mae": (_a_pme, 1.0),
    "rmse": (_a_pme, 2.0),
}

AGGREGATOR_NAMES = tuple(_AGGREGATORS)


def aggregate_kernel(name: str, xs: Sequence[float], p: float | None = None):
    entry = _AGGREGATORS.get(name)
    if entry is None:
        raise OperatorError(f"unknown aggregator {name!r}")
    fn, p_rule = entry
    xs = [float(x) for x in xs]
    if not xs:
        raise OperatorError("aggregate requires at least one input")
    for x in xs:
        _check_unit(x)
    if p_rule is None:
        if p is not None:
            raise OperatorError(f"{name} takes no parameter p")
        p_eff = None
    elif p_rule == "yager":
        p_eff = _need_p("yager aggregator", p)
    elif p_rule == "positive":
        if p is None:
            raise OperatorError(f"{name} requires parameter p")
        p_eff = float(p)
        if p_eff <= 0.0:
            raise OperatorError(f"{name} requires p > 0, got {p_eff}")
    else:  # fixed-p alias (mae/rmse)
        if p is not None:
            raise OperatorError(f"{name} takes no parameter p")
        p_eff = p_rule
    return fn(xs, p_eff)


def aggregate(name: str, xs: Sequence[float], p: float | None = None) -> float:
    return aggregate_kernel(name, xs, p)[0]


# ---------------------------------------------------------------------------
# implications
#
# Kernels return (value, (dI/da, dI/dc)).  The derivative with respect to
# the negated antecedent is d_Inot_a = -dI/da.

def _i_kleene_dienes(a, c, p=None):
    na = 1.0 - a
    if na >= c:
        return na, (-1.0, 0.0)
    return c, (0.0, 1.0)


def _i_reichenbach(a, c, p=None):
    return (1.0 - a) + a * c, (c - 1.0, a)


def _i_lukasiewicz(a, c, p=None):
    if a == 1.0:  # left-neutral edge, kept exact; matches the generic branch
        return c, (-1.0, 1.0)
    u = 1.0 - a + c
    if u <= 1.0:
        return u, (-1.0, 1.0)
    return 1.0, (0.0, 0.0)


def _i_dubois_prade(a, c, p=None):
    # branch order fixes the corner (1, 0) subgradient: a = 1 wins, so at
    # most one partial is ever live and the kernel stays single-passing
    if a == 1.0:
        return c, (0.0, 1.0)
    if c == 0.0:
        return 1.0 - a, (-1.0, 0.0)
    return 1.0, (0.0, 0.0)


def _i_fodor(a, c, p=None):
    if a <= c:
        return 1.0, (0.0, 0.0)
    return _i_kleene_dienes(a, c)


def _i_godel(a, c, p=None):
    if a <= c:
        return 1.0, (0.0, 0.0)
    return c, (0.0, 1.0)


def _i_goguen(a, c, p=None):
    if a <= c:
        return 1.0, (0.0, 0.0)
    return c / a, (-c / (a * a), 1.0 / a)


def _i_weber(a, c, p=None):
    if a < 1.0:
        return 1.0, (0.0, 0.0)
    return c, (0.0, 1.0)


def _i_yager_s(a, c, p):
    if a == 1.0 and c == 0.0:
        # corner: declared subgradient, the diagonal limit
        d = _pow(2.0, 1.0 / p - 1.0)
        return 0.0, (-d, d)
    if a == 1.0:  # left-neutral edge, kept exact
        return c, (-1.0 if p == 1.0 else 0.0, 1.0)
    u = (1.0 - a) ** p + c ** p
    if u <= 1.0:
        scale = _pow(u, 1.0 / p - 1.0)
        return (_pow(u, 1.0 / p),
                (-scale * _pow(1.0 - a, p - 1.0), scale * _pow(c, p - 1.0)))
    return 1.0, (0.0, 0.0)


def _i_yager_r(a, c, p):
    if a <= c:
        return 1.0, (0.0, 0.0)
    u = (1.0 - c) ** p - (1.0 - a) ** p
    v = 1.0 - _pow(u, 1.0 / p)
    scale = _pow(u, 1.0 / p - 1.0)
    return v, (-scale * _pow(1.0 - a, p - 1.0), scale * _pow(1.0 - c, p - 1.0))


_IMPLICATIONS = {
    "kleene_dienes": (_i_kleene_dienes, False),
    "reichenbach": (_i_reichenbach, False),
    "lukasiewicz": (_i_lukasiewicz, False),
    "dubois_prade": (_i_dubois_prade, False),
    "fodor": (_i_fodor, False),
    "godel": (_i_godel, False),
    "goguen": (_i_goguen, False),
    "weber": (_i_weber, False),
    "yager_s": (_i_yager_s, True),
    "yager_r": (_i_yager_r, True),
}

IMPLICATION_NAMES = tuple(_IMPLICATIONS) + ("sigmoidal",)


def implication_kernel(name: str, a: float, c: float, p: float | None = None,
                       s: float | None = None, b0: float | None = None,
                       base: str | None = None):
    if name == "sigmoidal":
        return sigmoidal_kernel(base, s, b0, a, c, p=p)
    entry = _IMPLICATIONS.get(name)
    if entry is None:
        raise OperatorError(f"unknown implication {name!r}")
    fn, needs_p = entry
    _check_unit(a)
    _check_unit(c)
    if needs_p:
        p = _need_p(name, p)
    elif p is not None:
        raise OperatorError(f"implication {name} takes no parameter p")
    return fn(a, c, p)


def implication(name: str, a: float, c: float, p: float | None = None,
                s: float | None = None, b0: float | None = None,
                base: str | None = None) -> float:
    return implication_kernel(name, a, c, p=p, s=s, b0=b0, base=base)[0]


def d_Ic(name: str, a: float, c: float, **kw) -> float:
    """Derivative of the implication with respect to the consequent."""
    return implication_kernel(name, a, c, **kw)[1][1]


def d_Inot_a(name: str, a: float, c: float, **kw) -> float:
    """Derivative with respect to the negated antecedent (= -dI/da)."""
    return -implication_kernel(name, a, c, **kw)[1][0]


def _sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def sigmoidal_kernel(base: str | None, s: float, b0: float, a: float, c: float,
                     p: float | None = None):
    """Sigmoid-warped implication; keeps the base's 0/1 level sets.

    value = d * ((1 + e^(-b0 s)) * sigmoid(s (I + b0)) - 1)
    with d = (1 + e^(-s (1 + b0))) / (e^(-b0 s) - e^(-s (1 + b0))),
    an increasing map sending I=0 to 0 and I=1 to 1.
    """
    if base is None:
        raise OperatorError("sigmoidal implication requires a base implication")
    if base == "sigmoidal":
        raise OperatorError("sigmoidal base cannot itself be sigmoidal")
    if s is None or float(s) <= 0.0:
        raise OperatorError(f"sigmoidal implication requires s > 0, got {s!r}")
    s = float(s)
    b0 = -0.5 if b0 is None else float(b0)
    iv, (dia, dic) = implication_kernel(base, a, c, p=p)
    try:
        e_top = math.exp(-s * (1.0 + b0))
        e_bot = math.exp(-s * b0)
    except OverflowError as exc:
        raise OperatorError(f"sigmoidal parameters overflow: s={s}, b0={b0}") from exc
    denom = e_bot - e_top
    if denom <= 0.0:
        raise OperatorError(f"degenerate sigmoidal scaling for s={s}, b0={b0}")
    d = (1.0 + e_top) / denom
    h = 1.0 + e_bot
    y = _sigmoid(s * (iv + b0))
    value = d * (h * y - 1.0)
    # float dust can push the 0/1 level sets a few ulps outside [0, 1]
    value = min(max(value, 0.0), 1.0)
    dvdi = d * h * s * y * (1.0 - y)
    return value, (dvdi * dia, dvdi * dic)


def sigmoidal_implication(base: str, s: float, b0: float, a: float, c: float,
                          p: float | None = None) -> float:
    return sigmoidal_kernel(base, s, b0, a, c, p=p)[0]


# ---------------------------------------------------------------------------
# descriptors

@dataclass(frozen=True)
class OperatorDescriptor:
    """Catalog entry: family, name, parameters, declared properties and
    the locus finite differences must stay away from."""

    family: str
    name: str
    params: tuple = ()
    properties: frozenset = frozenset()
    locus: str = "none"
    near_locus: Callable = field(default=lambda xs, margin: False, repr=False)

    @property
    def p(self):
        return dict(self.params).get("p")

    def label(self) -> str:
        if self.params:
            inner = ",".join(f"{k}={v}" for k, v in self.params)
            return f"{self.name}({inner})"
        return self.name

    def kernel(self, *xs):
        kw = dict(self.params)
        if self.family == "negation":
            return negation_kernel(*xs)
        if self.family == "tnorm":
            return tnorm_kernel(self.name, xs[0], xs[1], kw.get("p"))
        if self.family == "tconorm":
            return tconorm_kernel(self.name, xs[0], xs[1], kw.get("p"))
        if self.family == "aggregator":
            return aggregate_kernel(self.name, xs, kw.get("p"))
        if self.family == "implication":
            return implication_kernel(self.name, xs[0], xs[1], **kw)
        raise OperatorError(f"unknown family {self.family!r}")

    def value(self, *xs) -> float:
        return self.kernel(*xs)[0]


def _near(u, margin):
    return abs(u) < margin


def _two_smallest_sum(xs):
    ys = sorted(xs)
    return ys[0] + ys[1]


def _mk_locus(kind: str, p=None):
    # Each predicate answers: is this point too close to a kink or a
    # derivative singularity for a central-difference check at h=1e-5?
    # Steepness guards (for 1/a-style partials) use a fixed 0.05 band.
    guard = 0.05
    if kind == "tie":
        return lambda xs, m: _near(xs[0] - xs[1], m)
    if kind == "sum1":
        return lambda xs, m: _near(math.fsum(xs) - 1.0, m)
    if kind == "luk-agg":
        return lambda xs, m: _near(math.fsum(xs) - (len(xs) - 1), m)
    if kind == "tie-or-sum1":
        return lambda xs, m: _near(xs[0] - xs[1], m) or _near(math.fsum(xs) - 1.0, m)
    if kind == "nilp-agg":
        def pred(xs, m):
            ys = sorted(xs)
            return _near(ys[0] + ys[1] - 1.0, m) or (
                len(ys) > 1 and _near(ys[0] - ys[1], m))
        return pred
    if kind == "min-tie":
        def pred(xs, m):
            ys = sorted(xs)
            return len(ys) > 1 and _near(ys[0] - ys[1], m)
        return pred
    if kind == "max-tie":
        def pred(xs, m):
            ys = sorted(xs)
            return len(ys) > 1 and _near(ys[-1] - ys[-2], m)
        return pred
    if kind == "drastic-t":
        return lambda xs, m: xs[0] > 1.0 - m or xs[1] > 1.0 - m
    if kind == "drastic-s":
        return lambda xs, m: xs[0] < m or xs[1] < m
    if kind == "yager-t":
        def pred(xs, m):
            srad = math.fsum((1.0 - x) ** p for x in xs)
            return _near(srad - 1.0, m) or srad < guard
        return pred
    if kind == "yager-s":
        def pred(xs, m):
            srad = math.fsum(x ** p for x in xs)
            return _near(srad - 1.0, m) or srad < guard
        return pred
    if kind == "pme":
        def pred(xs, m):
            srad = math.fsum((1.0 - x) ** p for x in xs)
            if p > 1.0 and srad / len(xs) < guard:
                return True
            if p < 1.0 and any(x > 1.0 - guard for x in xs):
                return True
            return False
        return pred
    if kind == "pmean":
        def pred(xs, m):
            srad = math.fsum(x ** p for x in xs)
            if p > 1.0 and srad / len(xs) < guard:
                return True
            if p < 1.0 and any(x < guard for x in xs):
                return True
            return False
        return pred
    if kind == "kd":
        return lambda xs, m: _near(1.0 - xs[0] - xs[1], m)
    if kind == "a=c":
        return lambda xs, m: _near(xs[0] - xs[1], m)
    if kind == "fodor":
        return lambda xs, m: _near(xs[0] - xs[1], m) or _near(1.0 - xs[0] - xs[1], m)
    if kind == "goguen":
        # 1/a and c/a^2 partials: third derivatives defeat h=1e-5
        # central differences once a is small
        return lambda xs, m: _near(xs[0] - xs[1], m) or xs[0] < 0.15
    if kind == "yager-rimpl":
        def pred(xs, m):
            a, c = xs
            if _near(a - c, m):
                return True
            u = (1.0 - c) ** p - (1.0 - a) ** p
            return a > c and abs(u) < guard
        return pred
    if kind == "yager-simpl":
        def pred(xs, m):
            a, c = xs
            u = (1.0 - a) ** p + c ** p
            return _near(u - 1.0, m) or u < guard
        return pred
    if kind == "weber":
        return lambda xs, m: xs[0] > 1.0 - m
    if kind == "dubois":
        return lambda xs, m: xs[0] > 1.0 - m or xs[1] < m
    if kind == "log-product":
        return lambda xs, m: any(x < guard for x in xs)
    if kind == "none":
        return lambda xs, m: False
    raise ValueError(kind)


_T_DEFINITIONAL = frozenset({"commutative", "associative", "neutral", "monotone"})
_I_DEFINITIONAL = frozenset({"boundary", "monotone"})


def _tnorm_descriptor(name, p=None):
    extra = {
        "godel": {"idempotent", "continuous", "left-continuous", "single-passing"},
        "product": {"strict", "continuous", "left-continuous"},
        "lukasiewicz": {"continuous", "left-continuous"},
        "drastic": {"single-passing"},
        "nilpotent": {"left-continuous", "single-passing"},
        "yager": {"continuous", "left-continuous"},
    }[name]
    locus = {
        "godel": ("a = b", _mk_locus("tie")),
        "product": ("none", _mk_locus("none")),
        "lukasiewicz": ("a + b = 1", _mk_locus("sum1")),
        "drastic": ("a = 1 or b = 1", _mk_locus("drastic-t")),
        "nilpotent": ("a + b = 1 or a = b", _mk_locus("tie-or-sum1")),
        "yager": ("(1-a)^p + (1-b)^p = 1, or -> 0", _mk_locus("yager-t", p)),
    }[name]
    params = (("p", p),) if name == "yager" else ()
    return OperatorDescriptor("tnorm", name, params,
                              _T_DEFINITIONAL | frozenset(extra),
                              locus[0], locus[1])


def _tconorm_descriptor(name, p=None):
    extra = {
        "godel": {"idempotent", "continuous", "single-passing"},
        "product": {"strict", "continuous"},
        "lukasiewicz": {"continuous"},
        "drastic": {"single-passing"},
        "nilpotent": {"single-passing"},
        "yager": {"continuous"},
    }[name]
    locus = {
        "godel": ("a = b", _mk_locus("tie")),
        "product": ("none", _mk_locus("none")),
        "lukasiewicz": ("a + b = 1", _mk_locus("sum1")),
        "drastic": ("a = 0 or b = 0", _mk_locus("drastic-s")),
        "nilpotent": ("a + b = 1 or a = b", _mk_locus("tie-or-sum1")),
        "yager": ("a^p + b^p = 1, or -> 0", _mk_locus("yager-s", p)),
    }[name]
    params = (("p", p),) if name == "yager" else ()
    return OperatorDescriptor("tconorm", name, params,
                              _T_DEFINITIONAL | frozenset(extra),
                              locus[0], locus[1])


def _aggregator_descriptor(name, p=None):
    extra = {
        "min": {"idempotent", "single-passing"},
        "max": {"idempotent", "single-passing"},
        "product": set(),
        "log_product": set(),
        "lukasiewicz": set(),
        "bounded_sum": set(),
        "prob_sum": set(),
        "yager": set(),
        "nilpotent": {"single-passing"},
        "pme": {"idempotent"},
        "pmean": {"idempotent"},
        "mae": {"idempotent"},
        "rmse": {"idempotent"},
    }[name]
    locus = {
        "min": ("tie of two smallest", _mk_locus("min-tie")),
        "max": ("tie of two largest", _mk_locus("max-tie")),
        "product": ("none", _mk_locus("none")),
        "log_product": ("x = 0 (singular 1/x partials)", _mk_locus("log-product")),
        "lukasiewicz": ("sum = n-1", _mk_locus("luk-agg")),
        "bounded_sum": ("sum = 1", _mk_locus("sum1")),
        "prob_sum": ("none", _mk_locus("none")),
        "yager": ("sum (1-x)^p = 1, or -> 0", _mk_locus("yager-t", p)),
        "nilpotent": ("two smallest sum to 1, or tie", _mk_locus("nilp-agg")),
        "pme": ("radicand -> 0", _mk_locus("pme", p)),
        "pmean": ("radicand -> 0", _mk_locus("pmean", p)),
        "mae": ("none", _mk_locus("none")),
        "rmse": ("radicand -> 0", _mk_locus("pme", 2.0)),
    }[name]
    params = (("p", p),) if p is not None else ()
    base_props = {"symmetric", "monotone"}
    if name != "log_product":
        base_props.add("boundary")
    return OperatorDescriptor("aggregator", name, params,
                              frozenset(base_props) | frozenset(extra),
                              locus[0], locus[1])


def _implication_descriptor(name, p=None, s=None, b0=None, base=None):
    extra = {
        "kleene_dienes": {"LN", "EP", "CP", "single-passing"},
        "reichenbach": {"LN", "EP", "CP"},
        "lukasiewicz": {"LN", "EP", "IP", "CP"},
        "dubois_prade": {"LN", "EP", "IP", "CP", "single-passing"},
        "fodor": {"LN", "EP", "IP", "CP", "single-passing"},
        "godel": {"LN", "EP", "IP", "single-passing"},
        "goguen": {"LN", "EP", "IP"},
        "weber": {"LN", "EP", "IP", "single-passing"},
        "yager_s": {"LN", "EP", "CP"},
        "yager_r": {"LN", "EP", "IP"},
        "sigmoidal": set(),
    }[name]
    if name == "yager_s" and p is not None and p <= 1.0:
        extra = extra | {"IP"}
    if name == "yager_r" and p == 1.0:
        extra = extra | {"CP"}
    locus = {
        "kleene_dienes": ("1 - a = c", _mk_locus("kd")),
        "reichenbach": ("none", _mk_locus("none")),
        "lukasiewicz": ("a = c", _mk_locus("a=c")),
        "dubois_prade": ("a = 1 or c = 0", _mk_locus("dubois")),
        "fodor": ("a = c or 1 - a = c", _mk_locus("fodor")),
        "godel": ("a = c", _mk_locus("a=c")),
        "goguen": ("a = c, singular a -> 0", _mk_locus("goguen")),
        "weber": ("a = 1", _mk_locus("weber")),
        "yager_s": ("(1-a)^p + c^p = 1, or -> 0", _mk_locus("yager-simpl", p)),
        "yager_r": ("a = c (singular for p > 1)", _mk_locus("yager-rimpl", p)),
    }
    if name == "sigmoidal":
        base_desc = _implication_descriptor(base, p=p)
        loc = (base_desc.locus, base_desc.near_locus)
        params = (("base", base), ("s", s), ("b0", b0)) + (
            (("p", p),) if p is not None else ())
        if "CP" in base_desc.properties:
            extra = {"CP"}
        if "IP" in base_desc.properties:
            extra = set(extra) | {"IP"}
    else:
        loc = locus[name]
        params = (("p", p),) if p is not None else ()
    return OperatorDescriptor("implication", name, params,
                              _I_DEFINITIONAL | frozenset(extra), loc[0], loc[1])


def descriptor(family: str, name: str, **params) -> OperatorDescriptor:
    if family == "negation":
        return OperatorDescriptor("negation", "classic", (),
                                  frozenset({"strict", "strong", "boundary",
                                             "single-passing"}),
                                  "none", _mk_locus("none"))
    if family == "tnorm":
        return _tnorm_descriptor(name, params.get("p"))
    if family == "tconorm":
        return _tconorm_descriptor(name, params.get("p"))
    if family == "aggregator":
        return _aggregator_descriptor(name, params.get("p"))
    if family == "implication":
        return _implication_descriptor(name, **params)
    raise OperatorError(f"unknown family {family!r}")


def catalog(yager_ps=(1.0, 2.0, 5.0), pme_ps=(0.5, 1.0, 2.0)) -> list:
    """Every catalog operator at representative parameter values."""
    out = [descriptor("negation", "classic")]
    for name in TNORM_NAMES:
        if name == "yager":
            out += [descriptor("tnorm", name, p=p) for p in yager_ps]
        else:
            out.append(descriptor("tnorm", name))
    for name in TCONORM_NAMES:
        if name == "yager":
            out += [descriptor("tconorm", name, p=p) for p in yager_ps]
        else:
            out.append(descriptor("tconorm", name))
    for name in AGGREGATOR_NAMES:
        if name == "yager":
            out += [descriptor("aggregator", name, p=p) for p in yager_ps]
        elif name in ("pme", "pmean"):
            out += [descriptor("aggregator", name, p=p) for p in pme_ps]
        else:
            out.append(descriptor("aggregator", name))
    for name in _IMPLICATIONS:
        if name in ("yager_s", "yager_r"):
            out += [descriptor("implication", name, p=p) for p in yager_ps]
        else:
            out.append(descriptor("implication", name))
    for s in (0.01, 9.0, 20.0):
        out.append(descriptor("implication", "sigmoidal",
                              base="reichenbach", s=s, b0=-0.5))
    return out


# ---------------------------------------------------------------------------
# duality

_DUALITY_EXCLUDE = {
    "godel": _mk_locus("tie"),
    "product": _mk_locus("none"),
    "lukasiewicz": _mk_locus("sum1"),
    "drastic": lambda xs, m: min(xs) < m or max(xs) > 1.0 - m,
    "nilpotent": _mk_locus("tie-or-sum1"),
    "yager": None,  # filled per-p below
}


def tnorm_duality_check(name: str, samples: int = 10_000, p: float | None = None,
                        seed: int = 0) -> float:
    """Max abs error of S(a,b) = 1 - T(1-a, 1-b) and d_S(a,b) = d_T(1-a, 1-b)
    over uniform samples, skipping subgradient tie loci."""
    import random as _random

    if name not in _TNORMS:
        raise OperatorError(f"unknown t-norm {name!r}")
    exclude = _DUALITY_EXCLUDE[name]
    if name == "yager":
        p = _need_p("yager", p)
        yag_t = _mk_locus("yager-t", p)
        yag_s = _mk_locus("yager-s", p)
        exclude = lambda xs, m: yag_t([1 - xs[0], 1 - xs[1]], m) or yag_s(xs, m)
    rng = _random.Random(seed)
    worst = 0.0
    taken = 0
    while taken < samples:
        a, b = rng.random(), rng.random()
        if exclude((a, b), 1e-9):
            continue
        taken += 1
        sv, (dsa, _) = tconorm_kernel(name, a, b, p)
        tv, (dta, _) = tnorm_kernel(name, 1.0 - a, 1.0 - b, p)
        worst = max(worst, abs(sv - (1.0 - tv)), abs(dsa - dta))
    return worst


# ---------------------------------------------------------------------------
# property audit

def _audit_binary(desc: OperatorDescriptor, rng, samples, tol):
    """Battery for t-norms / t-conorms."""
    val = desc.value
    neutral = 1.0 if desc.family == "tnorm" else 0.0
    checks = []

    def run(prop, gen, expr):
        worst, witness = 0.0, None
        for _ in range(samples):
            point = gen()
            err = expr(*point)
            if err > worst:
                worst, witness = err, point
        checks.append((prop, worst <= tol, None if worst <= tol else witness))

    u = rng.random
    run("commutative", lambda: (u(), u()), lambda a, b: abs(val(a, b) - val(b, a)))
    run("associative", lambda: (u(), u(), u()),
        lambda a, b, c: abs(val(val(a, b), c) - val(a, val(b, c))))
    run("neutral", lambda: (u(),), lambda a: abs(val(neutral, a) - a))
    run("idempotent", lambda: (u(),), lambda a: abs(val(a, a) - a))

    def mono_err(a, b1, b2):
        lo, hi = (b1, b2) if b1 <= b2 else (b2, b1)
        return max(0.0, val(a, lo) - val(a, hi))

    run("monotone", lambda: (u(), u(), u()), mono_err)
    return checks


def _audit_aggregator(desc: OperatorDescriptor, rng, samples, tol):
    val = desc.value
    checks = []
    u = rng.random
    log = desc.name == "log_product"

    def run(prop, gen, expr):
        worst, witness = 0.0, None
        for _ in range(samples):
            point = gen()
            err = expr(point)
            if err > worst:
                worst, witness = err, point
        checks.append((prop, worst <= tol, None if worst <= tol else witness))

    def perm_err(xs):
        shuffled = list(xs)
        rng.shuffle(shuffled)
        return abs(val(*xs) - val(*shuffled))

    def interior(n):
        return [0.05 + 0.9 * u() for _ in range(n)] if log else [u() for _ in range(n)]

    run("symmetric", lambda: interior(rng.randint(2, 5)), perm_err)

    def mono_err(xs):
        i = rng.randrange(len(xs))
        bumped = list(xs)
        bumped[i] = min(1.0, xs[i] + u() * (1.0 - xs[i]))
        return max(0.0, val(*xs) - val(*bumped))

    run("monotone", lambda: interior(rng.randint(2, 5)), mono_err)
    if not log:
        run("idempotent", lambda: [u()] * rng.randint(2, 5),
            lambda xs: abs(val(*xs) - xs[0]))
        checks.append(("boundary",
                       val(0.0, 0.0, 0.0) == 0.0 and val(1.0, 1.0, 1.0) == 1.0,
                       None))
    return checks


def _audit_implication(desc: OperatorDescriptor, rng, samples, tol):
    val = desc.value
    checks = []

    def u():
        # mix exact endpoints in: several table properties only fail on
        # the boundary lines (e.g. Weber's CP at a = 1)
        r = rng.random()
        if r < 0.15:
            return 0.0
        if r < 0.30:
            return 1.0
        return rng.random()

    def run(prop, gen, expr):
        worst, witness = 0.0, None
        for _ in range(samples):
            point = gen()
            err = expr(*point)
            if err > worst:
                worst, witness = err, point
        checks.append((prop, worst <= tol, None if worst <= tol else witness))

    checks.append(("boundary",
                   abs(val(0.0, 0.0) - 1.0) <= tol
                   and abs(val(1.0, 1.0) - 1.0) <= tol
                   and abs(val(1.0, 0.0)) <= tol, None))
    run("LN", lambda: (u(),), lambda c: abs(val(1.0, c) - c))
    run("EP", lambda: (u(), u(), u()),
        lambda a, b, c: abs(val(a, val(b, c)) - val(b, val(a, c))))
    run("IP", lambda: (u(),), lambda a: abs(val(a, a) - 1.0))
    run("CP", lambda: (u(), u()),
        lambda a, c: abs(val(a, c) - val(1.0 - c, 1.0 - a)))

    def mono_err(a1, a2, c1, c2):
        alo, ahi = (a1, a2) if a1 <= a2 else (a2, a1)
        clo, chi = (c1, c2) if c1 <= c2 else (c2, c1)
        err_a = max(0.0, val(ahi, c1) - val(alo, c1))  # decreasing in a
        err_c = max(0.0, val(a1, clo) - val(a1, chi))  # increasing in c
        return max(err_a, err_c)

    run("monotone", lambda: (u(), u(), u(), u()), mono_err)
    return checks


def _audit_single_passing(desc: OperatorDescriptor, rng, samples, tol):
    arity = {"negation": 1, "tnorm": 2, "tconorm": 2, "implication": 2}.get(
        desc.family, 3)
    for _ in range(samples):
        xs = [rng.random() for _ in range(arity)]
        _, partials = desc.kernel(*xs)
        live = sum(1 for d in partials if abs(d) > 1e-12)
        if live > 1:
            return ("single-passing", False, tuple(xs))
    return ("single-passing", True, None)


def property_audit(desc: OperatorDescriptor, samples: int = 2000, seed: int = 0,
                   tol: float = 1e-9) -> list:
    """Statistically test the audit battery on uniform samples.

    Returns [(property, passed, witness-or-None), ...] covering
    commutativity/associativity/neutrality/idempotency/monotonicity for
    norms, symmetry/monotonicity/idempotency/boundary for aggregators,
    and boundary/LN/EP/IP/CP/monotonicity for implications, plus a
    single-passing probe everywhere.  A failure carries the worst
    sampled counterexample as witness.
    """
    import random as _random

    rng = _random.Random(seed)
    if desc.family in ("tnorm", "tconorm"):
        checks = _audit_binary(desc, rng, samples, tol)
    elif desc.family == "aggregator":
        checks = _audit_aggregator(desc, rng, samples, tol)
    elif desc.family == "implication":
        checks = _audit_implication(desc, rng, samples, tol)
    elif desc.family == "negation":
        checks = [("boundary", negation(0.0) == 1.0 and negation(1.0) == 0.0, None)]
    else:
        raise OperatorError(f"unknown family {desc.family!r}")
    if desc.name != "log_product":
        checks.append(_audit_single_passing(desc, rng, min(samples, 2000), tol))
    return checks


# ---------------------------------------------------------------------------
# operator configuration grammar
#
#   tnorm=yager:p=2
#   implication=sigmoidal:base=reichenbach,s=9,b0=-0.5
#   aggregator=log_product

_CONFIG_KEYS = ("tnorm", "tconorm", "implication", "aggregator", "negation")


@dataclass(frozen=True)
class OperatorConfig:
    """The (N, T, S, I, A) selection with parameters."""

    tnorm: str = "product"
    tnorm_p: float | None = None
    tconorm: str = "product"
    tconorm_p: float | None = None
    implication: str = "reichenbach"
    implication_p: float | None = None
    sigmoid_base: str | None = None
    sigmoid_s: float | None = None
    sigmoid_b0: float | None = None
    aggregator: str = "product"
    aggregator_p: float | None = None

    def tnorm_kernel(self, a, b):
        return tnorm_kernel(self.tnorm, a, b, self.tnorm_p)

    def tconorm_kernel(self, a, b):
        return tconorm_kernel(self.tconorm, a, b, self.tconorm_p)

    def implication_kernel(self, a, c):
        return implication_kernel(self.implication, a, c, p=self.implication_p,
                                  s=self.sigmoid_s, b0=self.sigmoid_b0,
                                  base=self.sigmoid_base)

    def aggregate_kernel(self, xs):
        return aggregate_kernel(self.aggregator, xs, self.aggregator_p)

    def describe(self) -> str:
        parts = [f"tnorm={self.tnorm}" + (f":p={self.tnorm_p}" if self.tnorm_p else ""),
                 f"tconorm={self.tconorm}" + (f":p={self.tconorm_p}" if self.tconorm_p else "")]
        if self.implication == "sigmoidal":
            parts.append(f"implication=sigmoidal:base={self.sigmoid_base},"
                         f"s={self.sigmoid_s},b0={self.sigmoid_b0}")
        else:
            parts.append(f"implication={self.implication}"
                         + (f":p={self.implication_p}" if self.implication_p else ""))
        parts.append(f"aggregator={self.aggregator}"
                     + (f":p={self.aggregator_p}" if self.aggregator_p else ""))
        return " ".join(parts)

    def validate(self) -> "OperatorConfig":
        self.tnorm_kernel(0.5, 0.5)
        self.tconorm_kernel(0.5, 0.5)
        self.implication_kernel(0.5, 0.5)
        self.aggregate_kernel([0.5, 0.5])
        return self


def product_config(log: bool = False) -> OperatorConfig:
    return OperatorConfig(aggregator="log_product" if log else "product")


def godel_config() -> OperatorConfig:
    return OperatorConfig(tnorm="godel", tconorm="godel",
                          implication="kleene_dienes", aggregator="min")


def lukasiewicz_config() -> OperatorConfig:
    return OperatorConfig(tnorm="lukasiewicz", tconorm="lukasiewicz",
                          implication="lukasiewicz", aggregator="lukasiewicz")


def _parse_params(text: str, where: str) -> dict:
    params = {}
    for piece in text.split(","):
        if "=" not in piece:
            raise ConfigError(f"{where}: expected key=value, got {piece!r}")
        key, _, raw = piece.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key == "base":
            params[key] = raw
        elif key in ("p", "s", "b0"):
            try:
                params[key] = float(raw)
            except ValueError:
                raise ConfigError(f"{where}: bad number {raw!r} for {key}") from None
        else:
            raise ConfigError(f"{where}: unknown parameter key {key!r}")
    return params


def parse_operator_config(text: str, base: OperatorConfig | None = None) -> OperatorConfig:
    """Parse assignments like ``tnorm=yager:p=2``.

    Assignments are separated by whitespace, semicolons or newlines.
    Unknown keys are errors.
    """
    cfg = dict(
        tnorm=(base.tnorm if base else "product", base.tnorm_p if base else None),
        tconorm=(base.tconorm if base else "product", base.tconorm_p if base else None),
        aggregator=(base.aggregator if base else "product",
                    base.aggregator_p if base else None),
    )
    impl = dict(name=base.implication if base else "reichenbach",
                p=base.implication_p if base else None,
                s=base.sigmoid_s if base else None,
                b0=base.sigmoid_b0 if base else None,
                base=base.sigmoid_base if base else None)
    tokens = text.replace(";", " ").split()
    for token in tokens:
        if "=" not in token:
            raise ConfigError(f"expected key=value, got {token!r}")
        key, _, rest = token.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown operator key {key!r}")
        name, _, param_text = rest.partition(":")
        name = name.strip()
        params = _parse_params(param_text, token) if param_text else {}
        if key == "negation":
            if name != "classic":
                raise ConfigError(f"unknown negation {name!r} (only 'classic')")
            continue
        if key == "tnorm":
            if name not in _TNORMS:
                raise ConfigError(f"unknown t-norm {name!r}")
            cfg["tnorm"] = (name, params.get("p"))
        elif key == "tconorm":
            if name not in _TCONORMS:
                raise ConfigError(f"unknown t-conorm {name!r}")
            cfg["tconorm"] = (name, params.get("p"))
        elif key == "aggregator":
            if name not in _AGGREGATORS:
                raise ConfigError(f"unknown aggregator {name!r}")
            cfg["aggregator"] = (name, params.get("p"))
        elif key == "implication":
            if name == "sigmoidal":
                impl.update(name=name, p=params.get("p", impl["p"]),
                            s=params.get("s"), b0=params.get("b0", -0.5),
                            base=params.get("base"))
                if impl["base"] is None:
                    raise ConfigError("sigmoidal implication needs base=<name>")
                if impl["base"] not in _IMPLICATIONS:
                    raise ConfigError(f"unknown sigmoidal base {impl['base']!r}")
                if impl["s"] is None:
                    raise ConfigError("sigmoidal implication needs s=<positive>")
            elif name in _IMPLICATIONS:
                impl.update(name=name, p=params.get("p"), s=None, b0=None, base=None)
            else:
                raise ConfigError(f"unknown implication {name!r}")
        if key != "implication":
            for pk in params:
                if pk != "p":
                    raise ConfigError(f"{token!r}: parameter {pk!r} not valid here")
    out = OperatorConfig(
        tnorm=cfg["tnorm"][0], tnorm_p=cfg["tnorm"][1],
        tconorm=cfg["tconorm"][0], tconorm_p=cfg["tconorm"][1],
        implication=impl["name"], implication_p=impl["p"],
        sigmoid_base=impl["base"], sigmoid_s=impl["s"], sigmoid_b0=impl["b0"],
        aggregator=cfg["aggregator"][0], aggregator_p=cfg["aggregator"][1],
    )
    try:
        return out.validate()
    except OperatorError as exc:
        raise ConfigError(str(exc)) from None
