import math

import mpmath
import numpy as np
import pytest

from egkcap.errors import CoincidentPolesError, DomainError, NoConvergentSectorError
from egkcap.hyper import (ContourSpec, FoxHSpec, eval_foxh, eval_meijer_g, foxh, meijer_spec,
                          validate_foxh)
from egkcap.special import EULER_GAMMA, cosine_integral, exp_integral_ei

EXP_SPEC = FoxHSpec(1, 0, (), ((0.0, 1.0),))


def test_validate_single_family():
    v = validate_foxh(EXP_SPEC)
    assert v.strip[0] < v.default_contour.offset
    assert v.a_star == pytest.approx(1.0)


def test_validate_coincident_poles():
    bad = FoxHSpec(1, 1, ((1.0, 1.0),), ((0.0, 1.0),))
    with pytest.raises(CoincidentPolesError, match="perturb"):
        validate_foxh(bad)


def test_validate_mgf_instance_reports_sector():
    spec = FoxHSpec(2, 1, ((1.0, 1.0),), ((0.5, 1.0), (1.0, 1.0)))
    v = validate_foxh(spec)
    assert "z" in v.convergent_sector


def test_no_convergent_sector():
    # a* <= 0 and Delta == 0
    spec = FoxHSpec(0, 1, ((0.5, 1.0),), ((0.0, 1.0),))
    with pytest.raises(NoConvergentSectorError):
        validate_foxh(spec)


def test_slopes_must_be_positive():
    with pytest.raises(DomainError):
        FoxHSpec(1, 0, (), ((0.0, -1.0),))


@pytest.mark.parametrize("z", np.geomspace(1e-2, 20, 9))
def test_exponential_reduction(z):
    assert foxh(EXP_SPEC, z) == pytest.approx(math.exp(-z), rel=1e-8)


def test_exponential_at_one():
    assert foxh(EXP_SPEC, 1.0) == pytest.approx(0.36787944117144233, rel=1e-12)


def test_ei_instance():
    spec = FoxHSpec(1, 2, ((1, 1), (1, 1), (1, 1)), ((1, 1), (0, 1)))
    assert abs(foxh(spec, 1.0)) == pytest.approx(abs(exp_integral_ei(-1.0)), rel=1e-10)


def test_empty_numerator_is_zero():
    spec = FoxHSpec(0, 0, ((0.3, 1.0),), ((0.1, 1.0), (0.2, 2.0)))
    assert foxh(spec, 1.7) == 0.0


def test_meijer_examples():
    assert eval_meijer_g(1, 0, [], [0], 2.0).value == pytest.approx(0.1353352832366127, rel=1e-10)
    assert eval_meijer_g(0, 2, [1, 1], [0], 2.0).value == pytest.approx(0.5597735947761608,
                                                                       rel=1e-10)
    g = eval_meijer_g(1, 2, [1, 1], [1, 0, 0], 1.0).value
    assert abs(g) == pytest.approx(0.7965996, rel=1e-6)
    assert g == pytest.approx(-(exp_integral_ei(-1.0) - EULER_GAMMA), rel=1e-10)


@pytest.mark.parametrize("s", [1e-2, 0.3, 1.0, 7.0, 1e2])
def test_meijer_closed_form_pairs(s):
    # G^{0,2}_{2,1}[1/s | 1,1; 0] = -Ei(-s)
    assert eval_meijer_g(0, 2, [1, 1], [0], 1 / s).value == pytest.approx(
        -exp_integral_ei(-s), rel=1e-8)
    # G^{1,2}_{2,3}[s | 1,1; 1,0,0] = -(Ei(-s) - ln s - C)
    assert eval_meijer_g(1, 2, [1, 1], [1, 0, 0], s).value == pytest.approx(
        -(exp_integral_ei(-s) - math.log(s) - EULER_GAMMA), rel=1e-8)
    # G^{2,0}_{0,2}[x^2/4 | -; 0,0] = 2 K0(x)
    x = s
    assert eval_meijer_g(2, 0, [], [0, 0], x * x / 4).value == pytest.approx(
        2 * float(mpmath.besselk(0, x)), rel=1e-8)


@pytest.mark.parametrize("s", [1e-2, 1.0, 1e2])
def test_cosine_integral_instance(s):
    # H^{1,2}_{3,2}[1/s^2 | (1,1),(1,1),(1,2); (1,1),(0,1)] = -2 Ci(s)
    spec = FoxHSpec(1, 2, ((1, 1), (1, 1), (1, 2)), ((1, 1), (0, 1)))
    assert foxh(spec, 1 / s ** 2) == pytest.approx(-2 * cosine_integral(s), rel=1e-8)


def test_contour_invariance():
    spec = FoxHSpec(2, 1, ((1.0, 1.0),), ((1.5, 1.0), (2.0, 0.5)))
    v = validate_foxh(spec)
    lo, hi = v.strip
    vals = [eval_foxh(spec, 0.8, ContourSpec(c, 60.0, 2048)).value
            for c in np.linspace(lo + 0.1, hi - 0.1, 5)]
    assert max(vals) - min(vals) < 1e-9 * abs(vals[0])


def test_node_doubling_within_error_estimate():
    spec = FoxHSpec(2, 1, ((1.0, 1.0),), ((1.5, 1.0), (2.0, 0.5)))
    a = eval_foxh(spec, 0.8, ContourSpec(-0.3, 40.0, 640))
    b = eval_foxh(spec, 0.8, ContourSpec(-0.3, 40.0, 1280))
    assert abs(a.value - b.value) <= max(a.error_estimate, 1e-15)


def test_imaginary_residual_bound():
    spec = FoxHSpec(2, 1, ((1.0, 0.5),), ((0.5, 1.0), (3.0, 1.0)))
    r = eval_foxh(spec, 2.0, check_imag=True)
    assert r.imag_residual < 1e-8 * abs(r.value) + 1e-12


def test_meijer_spec_unit_slopes():
    spec = meijer_spec(1, 2, [1, 1], [1, 0, 0])
    assert all(A == 1 for _, A in spec.upper) and all(B == 1 for _, B in spec.lower)


def test_bad_argument():
    with pytest.raises(DomainError):
        eval_foxh(EXP_SPEC, -1.0)


def test_against_mpmath_meijerg():
    for z in (0.05, 0.7, 4.0):
        ref = float(mpmath.meijerg([[], [0.5]], [[1.0, 0.25], [0.75]], z))
        got = eval_meijer_g(2, 0, [0.5], [1.0, 0.25, 0.75], z).value
        assert got == pytest.approx(ref, rel=1e-9)
