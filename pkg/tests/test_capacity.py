import math
from fractions import Fraction

import numpy as np
import pytest

from egkcap.capacity import (QuadratureSpec, Scheme, aux_c, aux_c_closed_form, aux_c_foxh,
                             aux_c_meijer, aux_c_rmsc_closed_form, capacity_mrc_baselines,
                             combiner_params, ergodic_capacity_inid, ergodic_capacity_joint,
                             integrate_semi_infinite, map_semi_infinite)
from egkcap.egk import (egk_generalized_mgf, egk_generalized_mgf_derivative, mgf_specs,
                        named_special_case)
from egkcap.errors import DivergentIntegralError, DomainError, InputContractError
from egkcap.montecarlo import SimulationPlan, simulate_capacity
from egkcap.special import cosine_integral, exp_integral_e1, exp_integral_ei

RAYLEIGH_10DB_CLASSICAL = math.e ** 0.1 * exp_integral_e1(0.1) / math.log(2)


@pytest.fixture(scope="module")
def rayleigh10():
    return named_special_case("rayleigh", 10.0)


# -- scheme table -----------------------------------------------------------

def test_exact_scheme_triples():
    def triple(s, L):
        c = combiner_params(s, L)
        return c.eta, c.p, c.q
    assert triple("MRC", 4) == (4, 1, 1)
    assert triple("EGC", 3) == (3, 0.5, 2)
    assert triple("RMSC", 2) == pytest.approx((math.sqrt(2), 2, 0.5))
    assert triple("AF_MULTIHOP", 3) == pytest.approx((1 / 3, -1, -1))


@pytest.mark.parametrize("order", [2, 8, 16])
def test_limit_scheme_couplings(order):
    sc = combiner_params("SC", 2, order)
    assert (sc.p, sc.p * sc.q, sc.eta) == (order, 1, 1)
    mn = combiner_params("MIN_BOUND", 2, order)
    assert (mn.p, mn.p * mn.q) == (-order, 1)
    ca = combiner_params("CASCADED", 3, order)
    assert (ca.q, ca.p * ca.q) == pytest.approx((order, 3))
    gm = combiner_params("GEOMETRIC_MEAN", 3, order)
    assert (gm.q, gm.p * gm.q) == pytest.approx((order, 1))
    below = combiner_params("GEOMETRIC_MEAN", 3, order, approach="below")
    assert (below.q, below.p * below.q) == pytest.approx((-order, 1))


def test_default_surrogate_order_and_errors():
    assert combiner_params("SC", 2).surrogate_order == 8
    with pytest.raises(DomainError):
        combiner_params("MRC", 2, 8)
    with pytest.raises(DomainError):
        combiner_params("SC", 2, 2.5)
    with pytest.raises(DomainError):
        combiner_params("SC", 2, approach="below")
    with pytest.raises(DomainError):
        combiner_params("nope", 2)
    assert Scheme.parse("gm") is Scheme.GEOMETRIC_MEAN


def test_combine_limits():
    g = np.array([[0.5, 2.0, 7.0]])
    assert combiner_params("SC", 3, 64).combine(g)[0] == pytest.approx(7.0, rel=0.02)
    assert combiner_params("MIN_BOUND", 3, 64).combine(g)[0] == pytest.approx(0.5, rel=0.02)
    # product of the branches; the power mean approaches it slowly
    gaps = [abs(combiner_params("CASCADED", 3, o).combine(g)[0] - 7.0) for o in (8, 64, 512)]
    assert gaps[0] > gaps[1] > gaps[2] and gaps[2] < 0.02 * 7.0
    assert combiner_params("GEOMETRIC_MEAN", 3, 512).combine(g)[0] == pytest.approx(
        7.0 ** (1 / 3), rel=2e-3)
    assert combiner_params("MRC", 3).combine(g)[0] == pytest.approx(9.5)


# -- auxiliary function ------------------------------------------------------

def test_aux_examples():
    assert aux_c(combiner_params("MRC", 1), 1.0) == pytest.approx(-0.2193839343955203, rel=1e-12)
    assert aux_c(combiner_params("EGC", 4), 1.0) == pytest.approx(2 * cosine_integral(2.0))
    assert aux_c(combiner_params("EGC", 4), 1.0) == pytest.approx(0.8459617, rel=1e-6)
    assert abs(aux_c(combiner_params("AF_MULTIHOP", 2), 1e-9)) < 1e-8


@pytest.mark.parametrize("scheme,L", [("MRC", 2), ("MRC", 3), ("EGC", 2), ("EGC", 4),
                                      ("AF_MULTIHOP", 2), ("AF_MULTIHOP", 3)])
@pytest.mark.parametrize("s", [1e-2, 1e-1, 1.0, 10.0, 1e2])
def test_closed_forms_match_foxh(scheme, L, s):
    c = combiner_params(scheme, L)
    closed = aux_c_closed_form(c.eta, c.q, c.L, s)
    assert aux_c_foxh(c.eta, c.q, c.L, s) == pytest.approx(closed, rel=1e-6, abs=1e-14)


@pytest.mark.parametrize("q", [Fraction(1, 2), Fraction(2), Fraction(-1, 2), Fraction(1, 8),
                               Fraction(-3, 2)])
@pytest.mark.parametrize("s", [0.05, 1.0, 20.0])
def test_meijer_form_matches_foxh(q, s):
    assert aux_c_meijer(1.3, q, 2, s) == pytest.approx(aux_c_foxh(1.3, float(q), 2, s),
                                                      rel=1e-8, abs=1e-13)


@pytest.mark.parametrize("s", [0.01, 0.3, 1.0, 4.0])
def test_rmsc_closed_form(s):
    c = combiner_params("RMSC", 2)
    assert aux_c_rmsc_closed_form(s) == pytest.approx(aux_c_foxh(c.eta, c.q, c.L, s), rel=1e-8)


def test_aux_requires_positive_s():
    with pytest.raises(DomainError):
        aux_c(combiner_params("MRC", 1), 0.0)


# -- outer quadrature ----------------------------------------------------------

def _rule(quad, n, f):
    s, w = map_semi_infinite(quad, n)
    return float(np.sum(w * np.array([f(x) for x in s])))


E_E1 = math.e * exp_integral_e1(1.0)


def test_map_semi_infinite_examples():
    quad = QuadratureSpec(node_count=128)
    assert _rule(quad, 128, lambda s: math.exp(-s)) == pytest.approx(1.0, abs=1e-6)
    assert _rule(quad, 128, lambda s: math.exp(-s) / (1 + s)) == pytest.approx(E_E1, abs=1e-6)
    assert E_E1 == pytest.approx(0.5963474, abs=1e-7)


@pytest.mark.parametrize("mapping", ["exp_sinh", "gauss_chebyshev"])
def test_doubling_reduces_error(mapping):
    quad = QuadratureSpec(mapping=mapping)
    for f, exact in ((lambda s: math.exp(-s), 1.0), (lambda s: math.exp(-s) / (1 + s), E_E1)):
        errs = [abs(_rule(quad, n, f) - exact) for n in (16, 32, 64)]
        assert errs[0] > errs[1] > errs[2]


def test_integrate_semi_infinite_reports_nodes():
    val, err, n = integrate_semi_infinite(lambda s: s * math.exp(-s), QuadratureSpec())
    assert val == pytest.approx(1.0, rel=1e-12)
    assert err < 1e-8 and n >= 256


def test_quadrature_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(node_count=8)
    with pytest.raises(DomainError):
        QuadratureSpec(mapping="simpson")


# -- capacity ----------------------------------------------------------------

def test_rayleigh_single_branch(rayleigh10):
    res = ergodic_capacity_inid([rayleigh10], combiner_params("MRC", 1))
    assert res.capacity == pytest.approx(2.90, abs=0.02)
    # m_s = 50 stands in for "no shadowing"; residual bias is about -0.34 %
    assert res.capacity == pytest.approx(RAYLEIGH_10DB_CLASSICAL, rel=0.005)
    assert res.error_estimate < 1e-8


def test_single_branch_direct_quadrature():
    from scipy import integrate
    from egkcap.egk import egk_pdf
    b = named_special_case("generalized_k(2,3)", 3.0)
    ref, _ = integrate.quad(lambda t: math.log2(1 + math.exp(t)) * egk_pdf(b, math.exp(t))
                            * math.exp(t), -40, 8, epsrel=1e-11, limit=300)
    got = ergodic_capacity_inid([b], combiner_params("MRC", 1)).capacity
    assert got == pytest.approx(ref, rel=1e-4)


def test_all_schemes_collapse_at_one_branch(rayleigh10):
    caps = []
    for s in Scheme:
        order = 2 if s in (Scheme.CASCADED, Scheme.GEOMETRIC_MEAN) else (8 if s.is_limit else None)
        caps.append(ergodic_capacity_inid([rayleigh10], combiner_params(s, 1, order)).capacity)
    assert max(caps) - min(caps) < 1e-4 * caps[0]


def test_baselines(rayleigh10):
    a, b = capacity_mrc_baselines([rayleigh10])
    assert a.capacity == pytest.approx(2.90, abs=0.02)
    assert abs(a.capacity - b.capacity) < 1e-6 * a.capacity
    nak = named_special_case("nakagami_m(2)", 10.0)
    a, b = capacity_mrc_baselines([nak, nak])
    c = ergodic_capacity_inid([nak, nak], combiner_params("MRC", 2))
    assert a.capacity == pytest.approx(c.capacity, rel=1e-6)
    assert b.capacity == pytest.approx(c.capacity, rel=1e-6)


def test_mrc_two_branch_against_monte_carlo():
    nak = named_special_case("nakagami_m(2)", 10.0)
    cap = ergodic_capacity_inid([nak, nak], combiner_params("MRC", 2)).capacity
    mc = simulate_capacity(SimulationPlan([nak, nak], "MRC", 10 ** 6, 2024))
    assert abs(cap - mc.estimate) < 3 * mc.standard_error


def test_inid_branches():
    bs = [named_special_case("rayleigh", 5.0), named_special_case("generalized_k(2,3)", 12.0)]
    cap = ergodic_capacity_inid(bs, combiner_params("EGC", 2)).capacity
    mc = simulate_capacity(SimulationPlan(bs, "EGC", 10 ** 6, 99))
    assert abs(cap - mc.estimate) < 3 * mc.standard_error


def test_joint_mgf_matches_inid(rayleigh10):
    nak = named_special_case("nakagami_m(2)", 4.0)
    spec = combiner_params("MRC", 2)
    sa, sb = mgf_specs(rayleigh10, 1.0), mgf_specs(nak, 1.0)

    def joint(s):
        ma, mb = (egk_generalized_mgf(rayleigh10, 1, s, specs=sa),
                  egk_generalized_mgf(nak, 1, s, specs=sb))
        da, db = (egk_generalized_mgf_derivative(rayleigh10, 1, s, specs=sa),
                  egk_generalized_mgf_derivative(nak, 1, s, specs=sb))
        return ma * mb, da * mb + ma * db

    j = ergodic_capacity_joint(joint, spec).capacity
    i = ergodic_capacity_inid([rayleigh10, nak], spec).capacity
    assert j == pytest.approx(i, rel=1e-8)


def test_joint_single_rayleigh_classical():
    g = 10.0
    res = ergodic_capacity_joint(lambda s: (1 / (1 + g * s), -g / (1 + g * s) ** 2),
                                 combiner_params("MRC", 1))
    assert res.capacity == pytest.approx(RAYLEIGH_10DB_CLASSICAL, rel=1e-8)


def test_joint_degenerate_and_contract():
    spec = combiner_params("MRC", 1)
    assert ergodic_capacity_joint(lambda s: (1.0, 0.0), spec).capacity == 0.0
    with pytest.raises(InputContractError):
        ergodic_capacity_joint(lambda s: (1.5, -0.1), spec)
    with pytest.raises(InputContractError):
        ergodic_capacity_joint(lambda s: (0.5, 0.1), spec)


def test_divergent_order_rejected(rayleigh10):
    with pytest.raises(DivergentIntegralError):
        ergodic_capacity_inid([rayleigh10] * 2, combiner_params("CASCADED", 2, 8))


def test_ordering_and_monotonicity():
    caps = {}
    for db in (0.0, 10.0):
        b = named_special_case("nakagami_m(2)", 10 ** (db / 10))
        for s in ("MIN_BOUND", "SC", "MRC"):
            caps[(s, db)] = ergodic_capacity_inid([b, b], combiner_params(s, 2)).capacity
    for db in (0.0, 10.0):
        assert 0 <= caps[("MIN_BOUND", db)] <= caps[("SC", db)] <= caps[("MRC", db)]
    for s in ("MIN_BOUND", "SC", "MRC"):
        assert caps[(s, 10.0)] > caps[(s, 0.0)]


def test_bandwidth_scales_capacity(rayleigh10):
    spec = combiner_params("MRC", 1)
    one = ergodic_capacity_inid([rayleigh10], spec).capacity
    assert ergodic_capacity_inid([rayleigh10], spec, bandwidth=2e6).capacity == pytest.approx(
        2e6 * one, rel=1e-12)


def test_branch_count_mismatch(rayleigh10):
    with pytest.raises(DomainError):
        ergodic_capacity_inid([rayleigh10], combiner_params("MRC", 2))


def test_geometric_mean_brackets_from_both_sides(rayleigh10):
    b = [rayleigh10, rayleigh10]
    above = ergodic_capacity_inid(b, combiner_params("GEOMETRIC_MEAN", 2, 2)).capacity
    below = ergodic_capacity_inid(
        b, combiner_params("GEOMETRIC_MEAN", 2, 2, approach="below")).capacity
    exact = simulate_capacity(SimulationPlan(b, "GEOMETRIC_MEAN", 10 ** 6, 8)).estimate
    assert below < exact < above


def test_cosine_kernel_uses_fourier_split(rayleigh10):
    res = ergodic_capacity_inid([rayleigh10], combiner_params("EGC", 1))
    assert res.diagnostics["mapping"] == "split_fourier"
    ref = ergodic_capacity_inid([rayleigh10], combiner_params("MRC", 1)).capacity
    assert res.capacity == pytest.approx(ref, rel=1e-8)


def test_gauss_chebyshev_mapping_runs(rayleigh10):
    quad = QuadratureSpec(mapping="gauss_chebyshev", node_count=512, tolerance=1e-4,
                          max_doublings=2)
    res = ergodic_capacity_inid([rayleigh10], combiner_params("MRC", 1), quad=quad)
    ref = ergodic_capacity_inid([rayleigh10], combiner_params("MRC", 1)).capacity
    assert res.capacity == pytest.approx(ref, rel=1e-4)
