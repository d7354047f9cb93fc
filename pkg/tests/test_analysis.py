import math

import numpy as np
import pytest

from dfl.analysis import (
    FractionEstimate,
    classical_truth,
    composed,
    derivative_surface,
    estimate_nonvanishing_fraction,
    gradient_quality,
    implication_aggregator_interaction,
    labeling_from_atoms,
    lukasiewicz_fraction,
    nilpotent_fraction,
    single_passing_audit,
    yager_p2_fraction_candidates,
    yager_tnorm_fraction,
    yager_tnorm_fraction_check,
    _nonvanishing_mask,
)
from dfl.logic import parse_formula, parse_kb
from dfl.operators import OperatorConfig, catalog, descriptor, parse_operator_config
from dfl.valuation import LookupInterpretation, Domain, build_grounding

SAMPLES = 40_000


def _estimate(family, name, n, p=None, seed=42):
    return estimate_nonvanishing_fraction(descriptor(family, name, p=p),
                                          n, SAMPLES, seed)


def _assert_within(est, target, sigmas=4):
    se = max(est.std_error, 1e-12)
    assert abs(est.estimate - target) <= sigmas * se, (est, target)


# ---------------------------------------------------------------------------
# fraction estimates vs closed forms

def test_lukasiewicz_aggregator_fractions():
    for n in (2, 3, 5):
        est = _estimate("aggregator", "lukasiewicz", n)
        _assert_within(est, lukasiewicz_fraction(n))
    assert lukasiewicz_fraction(3) == pytest.approx(1 / 6)


def test_nilpotent_aggregator_fractions():
    for n in (2, 3, 4):
        est = _estimate("aggregator", "nilpotent", n)
        _assert_within(est, nilpotent_fraction(n))
    assert nilpotent_fraction(2) == 0.5


def test_yager_aggregator_p2_resolves_gamma_candidates():
    est = _estimate("aggregator", "yager", 2, p=2.0)
    cands = yager_p2_fraction_candidates(2)
    assert cands["gamma(n/2+1)"] == pytest.approx(math.pi / 4)
    assert est.supported == "gamma(n/2+1)"
    _assert_within(est, math.pi / 4)


def test_yager_aggregator_p2_n3_ball_volume():
    est = _estimate("aggregator", "yager", 3, p=2.0)
    _assert_within(est, yager_p2_fraction_candidates(3)["gamma(n/2+1)"])


def test_yager_tnorm_fraction_closed_form_values():
    assert yager_tnorm_fraction(1.0) == pytest.approx(0.5)
    assert yager_tnorm_fraction(2.0) == pytest.approx(math.pi / 4)
    # Dirichlet form of the same orthant volume
    for p in (1.0, 2.0, 5.0, 20.0):
        dirichlet = math.gamma(1 / p + 1) ** 2 / math.gamma(2 / p + 1)
        assert yager_tnorm_fraction(p) == pytest.approx(dirichlet, rel=1e-12)


def test_yager_tnorm_fraction_check():
    est, cf, z = yager_tnorm_fraction_check(1.0, SAMPLES, seed=3)
    assert cf == pytest.approx(0.5)
    assert abs(z) < 4
    est, cf, z = yager_tnorm_fraction_check(2.0, SAMPLES, seed=4)
    assert cf == pytest.approx(math.pi / 4)
    assert abs(z) < 4
    est, cf, z = yager_tnorm_fraction_check(20.0, SAMPLES, seed=5)
    assert est > 0.95


def test_drastic_family_fractions_are_zero():
    assert _estimate("tnorm", "drastic", 2).estimate == 0.0
    assert _estimate("tconorm", "drastic", 2).estimate == 0.0
    assert _estimate("implication", "weber", 2).estimate == 0.0
    assert _estimate("implication", "dubois_prade", 2).estimate == 0.0


def test_lukasiewicz_tnorm_fraction_half():
    _assert_within(_estimate("tnorm", "lukasiewicz", 2), 0.5)
    _assert_within(_estimate("tconorm", "lukasiewicz", 2), 0.5)


def test_fraction_estimate_requires_enough_samples():
    with pytest.raises(ValueError):
        estimate_nonvanishing_fraction(descriptor("tnorm", "product"), 2, 100, 0)


def test_fraction_estimate_reproducible():
    a = _estimate("aggregator", "lukasiewicz", 3, seed=7)
    b = _estimate("aggregator", "lukasiewicz", 3, seed=7)
    assert a.estimate == b.estimate


def test_std_error_formula():
    est = _estimate("tnorm", "lukasiewicz", 2)
    assert est.std_error == pytest.approx(
        math.sqrt(est.estimate * (1 - est.estimate) / est.samples))


# ---------------------------------------------------------------------------
# the vectorized masks agree with the scalar kernels

@pytest.mark.parametrize("desc", [d for d in catalog() if d.family != "negation"],
                         ids=lambda d: f"{d.family}:{d.label()}")
def test_mask_matches_scalar_kernels(desc):
    rng = np.random.default_rng(abs(hash(desc.label())) % 10_000)
    n = 2 if desc.family != "aggregator" else 3
    X = rng.random((400, n))
    mask = _nonvanishing_mask(desc, X)
    for i in range(len(X)):
        _, partials = desc.kernel(*X[i].tolist())
        scalar = any(abs(d) > 1e-12 for d in partials)
        assert scalar == bool(mask[i]), (desc.label(), X[i])


# ---------------------------------------------------------------------------
# single-passing

def test_min_aggregator_single_passing():
    ok, witness = single_passing_audit(descriptor("aggregator", "min"), 4)
    assert ok and witness is None


def test_product_aggregator_not_single_passing():
    ok, witness = single_passing_audit(descriptor("aggregator", "product"), 2)
    assert not ok
    assert witness is not None and all(0 <= x <= 1 for x in witness)


def test_composition_of_single_passing_is_single_passing():
    godel = descriptor("tnorm", "godel")
    fn = composed(godel, [godel, godel])
    ok, _ = single_passing_audit(fn, 4)
    assert ok


def test_composition_with_product_is_not_single_passing():
    product = descriptor("tnorm", "product")
    godel = descriptor("tnorm", "godel")
    fn = composed(product, [godel, godel])
    ok, _ = single_passing_audit(fn, 4)
    assert not ok


def test_godel_implication_single_passing():
    ok, _ = single_passing_audit(descriptor("implication", "godel"), 2)
    assert ok


# ---------------------------------------------------------------------------
# gradient quality

def _single_instance_setup(a, b):
    kb = parse_kb("forall x: p(x) -> q(x)")
    domain = Domain(["o1"])
    table = {("p", (0,)): a, ("q", (0,)): b}
    g = build_grounding(LookupInterpretation(table), domain,
                        {"p": 1, "q": 1}, [0])
    return kb, g


def test_quality_lukasiewicz_balanced():
    kb, g = _single_instance_setup(0.8, 0.3)
    ops = parse_operator_config(
        "tnorm=lukasiewicz tconorm=lukasiewicz implication=lukasiewicz "
        "aggregator=mae")
    q = gradient_quality(kb, g, ops, labeling_from_atoms(lambda p, o: 1))
    assert q.cons_magnitude == pytest.approx(q.ant_magnitude)
    assert q.cons_pct == pytest.approx(0.5)


def test_quality_godel_no_antecedent():
    kb, g = _single_instance_setup(0.8, 0.3)
    ops = parse_operator_config("implication=godel aggregator=min")
    q = gradient_quality(kb, g, ops, labeling_from_atoms(lambda p, o: 1))
    assert q.ant_magnitude == 0.0
    assert q.cons_pct == pytest.approx(1.0)
    assert math.isnan(q.cu_ant_pct)


def test_quality_all_true_consequents():
    kb, g = _single_instance_setup(0.9, 0.2)
    ops = OperatorConfig()  # product config
    q = gradient_quality(kb, g, ops, labeling_from_atoms(lambda p, o: 1))
    assert q.cu_cons_pct == pytest.approx(1.0)


def test_quality_skips_non_implication_formulas():
    kb = parse_kb("forall x: p(x) -> q(x)\nforall x: p(x) & q(x)")
    domain = Domain(["o1"])
    table = {("p", (0,)): 0.8, ("q", (0,)): 0.3}
    g = build_grounding(LookupInterpretation(table), domain,
                        {"p": 1, "q": 1}, [0])
    q = gradient_quality(kb, g, OperatorConfig(),
                         labeling_from_atoms(lambda p, o: 1))
    assert q.formulas_used == 1 and q.formulas_skipped == 1


def test_quality_shared_atom_instances_stay_separate():
    # symmetry formula: same(x,y) -> same(y,x); with x=y the same ground
    # atom is antecedent and consequent of one instance
    kb = parse_kb("forall x, y: same(x, y) -> same(y, x)")
    domain = Domain(["o1", "o2"])
    table = {("same", (0, 0)): 0.3, ("same", (0, 1)): 0.9,
             ("same", (1, 0)): 0.2, ("same", (1, 1)): 0.4}
    g = build_grounding(LookupInterpretation(table), domain, {"same": 2},
                        [0, 1])
    ops = parse_operator_config("aggregator=log_product")
    q = gradient_quality(kb, g, ops, labeling_from_atoms(lambda p, o: 1))
    # all four instances contribute a consequent derivative a/I > 0
    assert q.cons_magnitude > 0
    assert q.cu_cons_pct == pytest.approx(1.0)


def test_classical_truth():
    f = parse_formula("forall x, y: p(x) & ~q(y) -> r(x, y)")
    atom_fn = lambda pred, objs: {"p": 1, "q": 0, "r": 0}[pred]
    body = f.body
    mu = {"x": 0, "y": 1}
    assert classical_truth(body.lhs, mu, atom_fn) is True
    assert classical_truth(body, mu, atom_fn) is False


# ---------------------------------------------------------------------------
# derivative surfaces

def test_surface_reichenbach():
    rows = derivative_surface("reichenbach", 0.25)
    assert len(rows) == 25
    for a, c, dic, dnota in rows:
        assert dic == pytest.approx(a)
        assert dnota == pytest.approx(1 - c)


def test_surface_godel_antecedent_zero():
    rows = derivative_surface("godel", 0.25)
    assert all(row[3] == 0.0 for row in rows)


def test_surface_kleene_dienes_case():
    rows = derivative_surface("kleene_dienes", 0.1)
    lookup = {(round(a, 10), round(c, 10)): (dic, dnota)
              for a, c, dic, dnota in rows}
    dic, dnota = lookup[(0.3, 0.8)]
    assert dic == 1.0 and dnota == 0.0


def test_surface_step_must_divide_one():
    with pytest.raises(ValueError):
        derivative_surface("reichenbach", 0.3)


# ---------------------------------------------------------------------------
# implication-aggregator interaction

def test_interaction_log_product_corner():
    rows = implication_aggregator_interaction("log_product", "reichenbach", 0.25)
    at = {(a, c): d for a, c, d in rows}
    assert at[(0.0, 0.0)] == pytest.approx(1.0, abs=1e-6)


def test_interaction_rmse_corner():
    rows = implication_aggregator_interaction("rmse", "reichenbach", 0.25)
    at = {(a, c): d for a, c, d in rows}
    assert at[(0.0, 0.0)] == pytest.approx(0.0, abs=1e-6)


def test_interaction_log_product_formula():
    # d(log-aggregated)/d(neg antecedent) = (1-c) / (1 - a + a c)
    rows = implication_aggregator_interaction("log_product", "reichenbach", 0.125)
    for a, c, d in rows:
        if 0 < a < 1 and 0 < c < 1:
            expected = (1 - c) / (1 - a + a * c)
            assert d == pytest.approx(expected, abs=1e-9)


def test_interaction_rmse_formula():
    # (1-c)(a - a c) / sqrt(n sum_j (a_j - a_j c_j)^2) with companion 0.9
    rows = implication_aggregator_interaction("rmse", "reichenbach", 0.125)
    for a, c, d in rows:
        if 0 < a < 1 and 0 < c < 1:
            err = a - a * c
            expected = (1 - c) * err / math.sqrt(2 * (err ** 2 + 0.9))
            assert d == pytest.approx(expected, abs=1e-9)


def test_interaction_rejects_other_aggregators():
    with pytest.raises(ValueError):
        implication_aggregator_interaction("min", "reichenbach", 0.25)
