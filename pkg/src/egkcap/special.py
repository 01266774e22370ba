"""Scalar special functions: complex log-gamma, Ei, Ci, 2F2, extended incomplete gamma.

The log-gamma routines come in two flavours. :func:`ln_gamma_complex` returns the
principal branch and is the public entry point. :func:`log_gamma_mod` is the
vectorised kernel used inside Mellin-Barnes integrands, where only the value
modulo ``2*pi*i`` matters because the result is exponentiated once.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy import integrate, optimize
from scipy.special import sici

from .errors import ConvergenceError, DivergentIntegralError, DomainError, PoleError

EULER_GAMMA = 0.57721566490153286060651209
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)

# B_{2k} / (2k (2k-1)), k = 1..10
_BERNOULLI = [
    Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30), Fraction(5, 66),
    Fraction(-691, 2730), Fraction(7, 6), Fraction(-3617, 510), Fraction(43867, 798),
    Fraction(-174611, 330),
]
_STIRLING = [float(b / ((2 * k) * (2 * k - 1))) for k, b in enumerate(_BERNOULLI, start=1)]

STIRLING_SHIFT = 12.0


def _stirling(z):
    """Asymptotic series for ln Gamma(z); accurate to ~1e-16 once Re z >= 12."""
    w = 1.0 / (z * z)
    acc = np.zeros_like(z)
    for c in reversed(_STIRLING):
        acc = acc * w + c
    return (z - 0.5) * np.log(z) - z + _HALF_LOG_2PI + acc / z


def _check_poles(z):
    bad = (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))
    if np.any(bad):
        raise PoleError(f"log-gamma pole at non-positive integer {z[bad][0].real:g}")


def ln_gamma_complex(z, shift: float = STIRLING_SHIFT):
    """Principal-branch log-gamma of a complex argument.

    The argument is shifted up with ``ln Gamma(z) = ln Gamma(z + N) - sum ln(z + k)``
    until ``Re z >= shift``, then the 10-term Stirling series is applied. Principal
    logs in the shift sum keep the result on the principal branch.

    Accepts scalars or arrays; returns the same shape.
    """
    scalar = np.isscalar(z)
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    _check_poles(zz)
    nshift = np.maximum(0, np.ceil(shift - zz.real)).astype(int)
    acc = np.zeros_like(zz)
    for k in range(int(nshift.max(initial=0))):
        mask = k < nshift
        acc[mask] += np.log(zz[mask] + k)
    out = _stirling(zz + nshift) - acc
    if not np.all(np.isfinite(out)):
        raise OverflowError("log-gamma result not representable")
    return complex(out[0]) if scalar else out.reshape(np.shape(z))


def _log_sin_pi(z):
    """ln sin(pi z) modulo 2 pi i, without overflow for large |Im z|."""
    out = np.empty_like(z)
    up = z.imag >= 0
    zu = z[up]
    out[up] = -1j * np.pi * zu + np.log(np.exp(2j * np.pi * zu) - 1.0)
    zd = z[~up]
    out[~up] = 1j * np.pi * zd + np.log(1.0 - np.exp(-2j * np.pi * zd))
    return out - np.log(2j)


def log_gamma_mod(z):
    """Vectorised ln Gamma(z) modulo 2 pi i (reflection for Re z < 1/2).

    Poles evaluate to ``inf`` real part rather than raising; callers place
    contours away from poles.
    """
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    left = z.real < 0.5
    if np.any(left):
        zl = z[left]
        out[left] = _LOG_PI - _log_sin_pi(zl) - _log_gamma_right(1.0 - zl)
    if np.any(~left):
        out[~left] = _log_gamma_right(z[~left])
    return out


def _log_gamma_right(z):
    # Re z >= 1/2 here, so at most 12 shift steps
    nshift = np.maximum(0, np.ceil(STIRLING_SHIFT - z.real)).astype(int)
    prod = np.ones_like(z)
    for k in range(int(nshift.max(initial=0))):
        mask = k < nshift
        prod = np.where(mask, prod * (z + k), prod)
    return _stirling(z + nshift) - np.log(prod)


def digamma_complex(z):
    """Vectorised complex digamma; used for contour step sizing and saddle search."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    left = z.real < 0.5
    if np.any(left):
        zl = z[left]
        out[left] = _digamma_right(1.0 - zl) - np.pi * _cot_pi(zl)
    if np.any(~left):
        out[~left] = _digamma_right(z[~left])
    return out


def _cot_pi(z):
    out = np.empty_like(z)
    up = z.imag >= 0
    w = np.exp(2j * np.pi * z[up])
    out[up] = 1j * (w + 1.0) / (w - 1.0)
    w = np.exp(-2j * np.pi * z[~up])
    out[~up] = 1j * (1.0 + w) / (1.0 - w)
    return out


def _digamma_right(z):
    nshift = np.maximum(0, np.ceil(STIRLING_SHIFT - z.real)).astype(int)
    acc = np.zeros_like(z)
    for k in range(int(nshift.max(initial=0))):
        mask = k < nshift
        acc = np.where(mask, acc + 1.0 / (z + k), acc)
    x = z + nshift
    w = 1.0 / (x * x)
    tail = w * (1 / 12 - w * (1 / 120 - w * (1 / 252 - w * (1 / 240 - w / 132))))
    return np.log(x) - 0.5 / x - tail - acc


# ---------------------------------------------------------------------------
# exponential and cosine integrals

_FPMIN = 1e-300
_EPS = 1e-16
_MAXIT = 1000

# crossovers picked where the series and the continued fraction/asymptotic
# forms have equal rounding error
E1_SERIES_MAX = 1.0
EI_SERIES_MAX = 40.0
CI_SERIES_MAX = 4.0


def _e1(x: float) -> float:
    if x <= E1_SERIES_MAX:
        term, total, k = 1.0, 0.0, 0
        while True:
            k += 1
            term *= -x / k
            contrib = term / k
            total += contrib
            if abs(contrib) < _EPS * abs(total) or k > _MAXIT:
                break
        return -EULER_GAMMA - math.log(x) - total
    if x > 745.0:
        return 0.0
    # modified Lentz continued fraction
    b = x + 1.0
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAXIT):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h * math.exp(-x)
    raise ConvergenceError(f"E1 continued fraction failed at x={x}")


def _ei_positive(x: float) -> float:
    if x > 709.0:
        raise OverflowError(f"Ei({x}) overflows")
    if x <= EI_SERIES_MAX:
        term, total, k = 1.0, 0.0, 0
        while True:
            k += 1
            term *= x / k
            contrib = term / k
            total += contrib
            if contrib < _EPS * total:
                break
        return EULER_GAMMA + math.log(x) + total
    # asymptotic series, truncated at its smallest term
    term, total, k = 1.0, 1.0, 0
    while True:
        k += 1
        nxt = term * k / x
        if nxt > term or nxt < _EPS * total:
            break
        term = nxt
        total += term
    return math.exp(x) / x * total


def exp_integral_ei(x):
    """Exponential integral Ei(x) (principal value); ``Ei(x) = -E1(-x)`` for x < 0."""
    if np.ndim(x):
        return np.vectorize(exp_integral_ei, otypes=[float])(x)
    x = float(x)
    if x == 0.0:
        raise PoleError("Ei has a logarithmic singularity at 0")
    if x < 0:
        return -_e1(-x)
    return _ei_positive(x)


def exp_integral_e1(x):
    """E1(x) for x > 0."""
    if np.ndim(x):
        return np.vectorize(exp_integral_e1, otypes=[float])(x)
    if x <= 0:
        raise DomainError("E1 requires x > 0")
    return _e1(float(x))


CI_ASYMPTOTIC_MIN = 1.0e3


def _fg_asymptotic(x: float):
    inv2 = 1.0 / (x * x)
    f, g, tf, tg, k = 1.0, 1.0, 1.0, 1.0, 0
    while True:
        k += 1
        tf *= -(2 * k - 1) * (2 * k) * inv2
        tg *= -(2 * k) * (2 * k + 1) * inv2
        f += tf
        g += tg
        if abs(tf) < _EPS and abs(tg) < _EPS:
            break
    return f / x, g / (x * x)


def sine_cosine_auxiliary(x):
    """Auxiliary functions f, g with Ci(x) = f sin x - g cos x, for x > 0.

    Both are smooth and monotone (f ~ 1/x, g ~ 1/x^2), which lets oscillatory
    integrals against Ci be handed to a Fourier-weighted quadrature.
    """
    x = float(x)
    if x <= 0:
        raise DomainError("auxiliary functions require x > 0")
    if x > CI_ASYMPTOTIC_MIN:
        return _fg_asymptotic(x)
    si_, ci_ = sici(x)
    si_ -= 0.5 * math.pi
    sn, cs = math.sin(x), math.cos(x)
    return ci_ * sn - si_ * cs, -ci_ * cs - si_ * sn


def cosine_integral(x):
    """Cosine integral Ci(x) = C + ln x + int_0^x (cos t - 1)/t dt for x > 0."""
    if np.ndim(x):
        return np.vectorize(cosine_integral, otypes=[float])(x)
    x = float(x)
    if x <= 0:
        raise DomainError("Ci requires x > 0")
    if x <= CI_SERIES_MAX:
        x2 = x * x
        term, total, k = 1.0, 0.0, 0
        while True:
            k += 1
            term *= -x2 / ((2 * k - 1) * (2 * k))
            contrib = term / (2 * k)
            total += contrib
            if abs(contrib) < _EPS * max(abs(total), 1e-300):
                break
        return EULER_GAMMA + math.log(x) + total
    if x > CI_ASYMPTOTIC_MIN:
        f, g = _fg_asymptotic(x)
        return f * math.sin(x) - g * math.cos(x)
    # continued fraction for E1(ix); Ci(x) = -Re E1(ix)
    b = complex(1.0, x)
    c = complex(1.0 / _FPMIN)
    d = 1.0 / b
    h = d
    for i in range(2, _MAXIT):
        a = -float((i - 1) ** 2)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta.real - 1.0) + abs(delta.imag) < _EPS:
            break
    else:
        raise ConvergenceError(f"Ci continued fraction failed at x={x}")
    h *= complex(math.cos(x), -math.sin(x))
    return -h.real


def hyp2f2(a1, a2, b1, b2, x, tol: float = 1e-12, max_terms: int = 100_000) -> float:
    """Generalized hypergeometric 2F2(a1, a2; b1, b2; x) by direct series summation."""
    for b in (b1, b2):
        if b <= 0 and float(b).is_integer():
            raise PoleError(f"2F2 lower parameter {b} is a non-positive integer")
    term, total = 1.0, 1.0
    for k in range(max_terms):
        ratio = (a1 + k) * (a2 + k) / ((b1 + k) * (b2 + k) * (k + 1)) * x
        term *= ratio
        total += term
        if term == 0.0:
            return total
        if abs(ratio) < 1.0 and abs(term) < tol * abs(total):
            return total
    raise ConvergenceError(f"2F2 series did not converge in {max_terms} terms (x={x})")


# ---------------------------------------------------------------------------
# extended incomplete gamma

def extended_incomplete_gamma(alpha, x, b, beta, rtol: float = 1e-8) -> float:
    """Gamma(alpha, x, b, beta) = int_x^inf r^(alpha-1) exp(-r - b r^(-beta)) dr.

    Integrated in ``v = ln r`` where the integrand is a single log-concave bump;
    the peak is located first and the bump is scaled out before quadrature.
    """
    if x < 0 or b < 0:
        raise DomainError("extended incomplete gamma needs x >= 0 and b >= 0")
    if x == 0 and not ((b > 0 and beta > 0) or alpha > 0):
        raise DivergentIntegralError(
            f"integral diverges at r=0 for alpha={alpha}, b={b}, beta={beta}")

    def _exp(t):
        return math.exp(min(t, 700.0))

    def g(v):
        return alpha * v - _exp(v) - (b * _exp(-beta * v) if b else 0.0)

    def dg(v):
        return alpha - _exp(v) + (beta * b * _exp(-beta * v) if b else 0.0)

    v_lo = math.log(x) if x > 0 else -math.inf

    # g is concave: the peak is where dg changes sign (or at the left end)
    if v_lo > -math.inf and dg(v_lo) <= 0:
        v_peak = v_lo
    else:
        hi = max(1.0, math.log(abs(alpha) + 1.0) + 1.0)
        while dg(hi) > 0:
            hi = 2 * hi + 1
        lo = hi - 1.0 if v_lo == -math.inf else v_lo
        while dg(lo) < 0:
            lo = 2 * lo - 1 if lo < 0 else lo - 1.0
            if v_lo > -math.inf:
                lo = max(lo, v_lo)
        v_peak = optimize.brentq(dg, lo, hi, xtol=1e-14, rtol=1e-14)
    g_peak = g(v_peak)

    def curvature_step(v):
        c = _exp(v) + (beta * beta * b * _exp(-beta * v) if b else 0.0)
        return 1.0 / math.sqrt(max(c, 1e-12))

    drop = 60.0
    right = v_peak + curvature_step(v_peak)
    while g(right) - g_peak > -drop:
        right += max(right - v_peak, 1e-3)
    if v_peak == v_lo:
        left = v_lo
    else:
        left = v_peak - curvature_step(v_peak)
        while g(left) - g_peak > -drop:
            left -= max(v_peak - left, 1e-3)
        if v_lo > left:
            left = v_lo

    val, _ = integrate.quad(lambda v: math.exp(g(v) - g_peak), left, right,
                            points=[v_peak] if left < v_peak < right else None,
                            epsabs=0.0, epsrel=rtol * 1e-2, limit=200)
    if g_peak > 709.0:
        raise OverflowError("extended incomplete gamma overflows")
    return math.exp(g_peak) * val


def phi(p: float) -> float:
    """Coefficient function U(p)/|p| + U(-p) with U the unit step."""
    if p == 0:
        raise DomainError("phi(p) is undefined at p = 0")
    return 1.0 / abs(p) if p > 0 else 1.0
