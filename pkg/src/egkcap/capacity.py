"""Ergodic capacity of combining / relaying schemes from branch MGFs.

Every scheme maps branch SNRs to ``eta * (mean_l gamma_l^p)^q``. With
``X = sum_l gamma_l^p`` the capacity kernel ``ln(1 + eta (X/L)^q)`` is written as
``-int_0^inf C(s) X exp(-s X) ds`` so that

    capacity = W / ln 2 * int_0^inf C(s) d/ds E[exp(-s X)] ds

and independence of the branches turns ``E[exp(-s X)]`` into a product of
per-branch generalized MGFs.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .egk import EgkParams, egk_generalized_mgf, egk_generalized_mgf_derivative, mgf_specs
from .errors import (ConvergenceError, DivergentIntegralError, DomainError,
                     InputContractError)
from .hyper import FoxHSpec, eval_foxh, eval_meijer_g, validate_foxh
from .special import (EULER_GAMMA, cosine_integral, exp_integral_ei, hyp2f2,
                       sine_cosine_auxiliary)

DEFAULT_SURROGATE_ORDER = 8


class Scheme(str, enum.Enum):
    MRC = "MRC"
    EGC = "EGC"
    SC = "SC"
    RMSC = "RMSC"
    CASCADED = "CASCADED"
    GEOMETRIC_MEAN = "GEOMETRIC_MEAN"
    AF_MULTIHOP = "AF_MULTIHOP"
    MIN_BOUND = "MIN_BOUND"

    @classmethod
    def parse(cls, name) -> "Scheme":
        if isinstance(name, Scheme):
            return name
        key = str(name).strip().upper().replace("-", "_")
        aliases = {"AF": "AF_MULTIHOP", "MULTIHOP": "AF_MULTIHOP", "GM": "GEOMETRIC_MEAN",
                   "MIN": "MIN_BOUND", "CASCADE": "CASCADED"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise DomainError(f"unknown scheme {name!r}; choose from "
                              f"{[s.value for s in cls]}") from None

    @property
    def is_limit(self) -> bool:
        return self in LIMIT_SCHEMES


LIMIT_SCHEMES = frozenset({Scheme.SC, Scheme.CASCADED, Scheme.GEOMETRIC_MEAN, Scheme.MIN_BOUND})


@dataclass(frozen=True)
class CombinerSpec:
    scheme: Scheme
    L: int
    eta: float
    p: float
    q: float
    surrogate_order: int | None = None

    def __post_init__(self):
        if self.L < 1:
            raise DomainError("branch count L must be >= 1")
        if not self.eta > 0:
            raise DomainError("eta must be positive")
        if self.p == 0 or self.q == 0:
            raise DomainError("p and q must be non-zero")

    def combine(self, snrs) -> np.ndarray:
        """Power-mean combination eta * (mean gamma^p)^q along the last axis."""
        g = np.asarray(snrs, dtype=float)
        logs = self.p * np.log(g)
        # log of the mean of gamma^p, computed stably
        peak = np.max(logs, axis=-1, keepdims=True)
        log_mean = np.log(np.mean(np.exp(logs - peak), axis=-1)) + peak[..., 0]
        return self.eta * np.exp(self.q * log_mean)


def combiner_params(scheme, L: int, surrogate_order: int | None = None, *,
                    approach: str = "above") -> CombinerSpec:
    """Scheme triple (eta, p, q) for ``L`` branches.

    Limit schemes use a finite ``surrogate_order`` (default 8). For the
    geometric mean, ``approach="below"`` takes the power mean with negative
    exponent instead, which converges to the same limit from the other side.
    """
    scheme = Scheme.parse(scheme)
    L = int(L)
    if L < 1:
        raise DomainError("branch count L must be >= 1")
    if not scheme.is_limit:
        if surrogate_order is not None:
            raise DomainError(f"{scheme.value} is exact; surrogate_order does not apply")
        table = {
            Scheme.MRC: (L, 1.0, 1.0),
            Scheme.EGC: (L, 0.5, 2.0),
            Scheme.RMSC: (math.sqrt(L), 2.0, 0.5),
            Scheme.AF_MULTIHOP: (1.0 / L, -1.0, -1.0),
        }
        eta, p, q = table[scheme]
        return CombinerSpec(scheme, L, float(eta), p, q)

    order = DEFAULT_SURROGATE_ORDER if surrogate_order is None else surrogate_order
    if int(order) != order or order < 1:
        raise DomainError(f"surrogate_order must be a positive integer, got {order}")
    order = int(order)
    if approach not in ("above", "below"):
        raise DomainError("approach must be 'above' or 'below'")
    if approach == "below" and scheme is not Scheme.GEOMETRIC_MEAN:
        raise DomainError("approach='below' is only defined for GEOMETRIC_MEAN")
    if scheme is Scheme.SC:
        p, q = float(order), 1.0 / order
    elif scheme is Scheme.MIN_BOUND:
        p, q = -float(order), -1.0 / order
    elif scheme is Scheme.CASCADED:
        q = float(order)
        p = L / q
    else:
        q = float(order) if approach == "above" else -float(order)
        p = 1.0 / q
    return CombinerSpec(scheme, L, 1.0, p, q, order)


# ---------------------------------------------------------------------------
# auxiliary function C(s)

def aux_foxh_spec(q: float) -> FoxHSpec:
    """Kernel of C(s) = -H[eta / (L s)^q]; zero-slope gamma factors are dropped."""
    upper = [(1.0, 1.0), (1.0, 1.0)]
    lower = [(1.0, 1.0), (0.0, 1.0)]
    if q > 0:
        upper.append((1.0, float(q)))
    else:
        lower.append((0.0, float(-q)))
    return FoxHSpec(1, 2, tuple(upper), tuple(lower))


def _aux_log_z(eta, q, L, s):
    return math.log(eta) - q * (math.log(L) + math.log(s))


def aux_c_foxh(eta: float, q: float, L: int, s: float, **kw) -> float:
    """C(s) through its Mellin-Barnes representation."""
    if not s > 0:
        raise DomainError("aux function needs s > 0")
    kw.setdefault("estimate_error", False)
    return -eval_foxh(aux_foxh_spec(q), log_z=_aux_log_z(eta, q, L, s), **kw).value


def aux_c_meijer(eta: float, q, L: int, s: float, **kw) -> float:
    """C(s) as a Meijer G function for rational q = k/l (Gauss multiplication)."""
    if not s > 0:
        raise DomainError("aux function needs s > 0")
    frac = Fraction(q).limit_denominator(64) if not isinstance(q, Fraction) else q
    k, l = abs(frac.numerator), frac.denominator
    if k == 0:
        raise DomainError("q must be non-zero")
    ones_l = [(i + 1) / l for i in range(l)]
    zeros_l = [i / l for i in range(l)]
    const = math.sqrt((2 * math.pi) ** (k + 1) / ((2 * math.pi) ** (2 * l) * k))
    kw.setdefault("estimate_error", False)
    if frac > 0:
        log_z = l * math.log(eta) + k * math.log(k) - k * (math.log(L) + math.log(s))
        upper = ones_l + ones_l + [(i + 1) / k for i in range(k)]
        lower = ones_l + zeros_l
    else:
        log_z = l * math.log(eta) - k * math.log(k) + k * (math.log(L) + math.log(s))
        upper = ones_l + ones_l
        lower = ones_l + zeros_l + [i / k for i in range(k)]
    return -const * eval_meijer_g(l, 2 * l, upper, lower, log_z=log_z, **kw).value


def aux_c_closed_form(eta: float, q: float, L: int, s: float) -> float | None:
    """Elementary closed form of C(s) when one exists, else None.

    Covered: q = 1 and q = -1 (exponential integral, with a logarithmic
    correction for q = -1) and q = +-2 (cosine integral), for any eta and L.
    """
    if not s > 0:
        raise DomainError("aux function needs s > 0")
    if q == 1.0:
        a = L / eta                      # kernel ln(1 + x/a)
        return float(exp_integral_ei(-a * s))
    if q == -1.0:
        b = eta * L                      # kernel ln(1 + b/x)
        return float(exp_integral_ei(-b * s)) - math.log(b * s) - EULER_GAMMA
    if q == 2.0:
        a = L / math.sqrt(eta)           # kernel ln(1 + (x/a)^2)
        return 2.0 * cosine_integral(a * s)
    if q == -2.0:
        b = L * math.sqrt(eta)           # kernel ln(1 + (b/x)^2)
        return 2.0 * cosine_integral(b * s) - 2.0 * math.log(b * s) - 2.0 * EULER_GAMMA
    return None


def aux_c_rmsc_closed_form(s: float) -> float:
    """Hypergeometric closed form of C(s) for eta = sqrt(L), q = 1/2.

    C(s) = (Ei(s) - 4 sqrt(s/pi) 2F2(1/2, 1; 3/2, 3/2; s)) / 2. Both terms grow
    like e^s, so the expression loses about s/ln(10) digits; use it for s <~ 10.
    """
    if not s > 0:
        raise DomainError("aux function needs s > 0")
    return 0.5 * (float(exp_integral_ei(s))
                  - 4.0 * math.sqrt(s / math.pi) * hyp2f2(0.5, 1.0, 1.5, 1.5, s))


def aux_c(spec: CombinerSpec, s: float) -> float:
    """Auxiliary function of ``spec`` at ``s`` (closed form where available)."""
    if not s > 0:
        raise DomainError("aux function needs s > 0")
    closed = aux_c_closed_form(spec.eta, spec.q, spec.L, s)
    if closed is not None:
        return closed
    return aux_c_foxh(spec.eta, spec.q, spec.L, s)


def _aux_evaluator(spec: CombinerSpec, use_closed_form: bool = True) -> Callable[[float], float]:
    if use_closed_form and aux_c_closed_form(spec.eta, spec.q, spec.L, 1.0) is not None:
        return lambda s: aux_c_closed_form(spec.eta, spec.q, spec.L, s)
    v = validate_foxh(aux_foxh_spec(spec.q))

    def f(s):
        log_z = _aux_log_z(spec.eta, spec.q, spec.L, s)
        return -eval_foxh(v.spec, log_z=log_z, validated=v, estimate_error=False).value
    return f


# ---------------------------------------------------------------------------
# outer quadrature on (0, inf)

@dataclass(frozen=True)
class QuadratureSpec:
    """Rule for int_0^inf.

    ``mapping="exp_sinh"`` (default): s = exp(pi/2 sinh t) with a trapezoid
    rule in t over s in [s_min, s_max]; a coarse probe first trims that range
    to where the integrand is not negligible. ``mapping="gauss_chebyshev"``:
    first-kind Gauss-Chebyshev nodes on (-1, 1) mapped by s = (1+t)/(1-t).
    The error estimate compares against the rule with half the nodes; if it
    exceeds ``tolerance`` (relative) the node count is doubled up to
    ``max_doublings`` times.
    """

    node_count: int = 256
    mapping: str = "exp_sinh"
    tolerance: float = 1e-8
    max_doublings: int = 3
    s_min: float = 1e-300
    s_max: float = 1e150

    def __post_init__(self):
        if self.node_count < 32:
            raise DomainError("node_count must be >= 32")
        if self.mapping not in ("exp_sinh", "gauss_chebyshev"):
            raise DomainError(f"unknown mapping {self.mapping!r}")
        if not self.tolerance > 0:
            raise DomainError("tolerance must be positive")
        if not 0 < self.s_min < self.s_max:
            raise DomainError("need 0 < s_min < s_max")


def _exp_sinh_t_range(quad: QuadratureSpec):
    return (math.asinh(2.0 / math.pi * math.log(quad.s_min)),
            math.asinh(2.0 / math.pi * math.log(quad.s_max)))


def map_semi_infinite(quad: QuadratureSpec, node_count: int | None = None, t_range=None):
    """Nodes and weights approximating int_0^inf f(s) ds = sum w_i f(s_i).

    ``t_range`` overrides the exp-sinh parameter interval (default: the one
    spanned by ``s_min``..``s_max``).
    """
    n = quad.node_count if node_count is None else node_count
    if quad.mapping == "gauss_chebyshev":
        i = np.arange(1, n + 1)
        t = np.cos((2 * i - 1) * np.pi / (2 * n))
        w = np.pi / n * np.sqrt(1 - t * t) * 2.0 / (1 - t) ** 2
        s = (1 + t) / (1 - t)
        order = np.argsort(s)
        return s[order], w[order]
    t_lo, t_hi = t_range if t_range is not None else _exp_sinh_t_range(quad)
    t = np.linspace(t_lo, t_hi, n)
    h = (t_hi - t_lo) / (n - 1)
    s = np.exp(0.5 * np.pi * np.sinh(t))
    w = h * s * 0.5 * np.pi * np.cosh(t)
    return s, w


PROBE_NODES = 97
NEGLIGIBLE = 1e-18


def integrate_semi_infinite(f: Callable[[float], float], quad: QuadratureSpec):
    """Apply the mapped rule with doubling refinement.

    Returns (value, error_estimate, nodes_used). Function values are cached by
    node so the exp-sinh refinement reuses earlier evaluations.
    """
    cache: dict[float, float] = {}

    def values(s):
        out = np.empty(len(s))
        for i, si in enumerate(s):
            key = float(si)
            if key not in cache:
                cache[key] = float(f(key))
            out[i] = cache[key]
        return out

    t_range, edge = None, 0.0
    if quad.mapping == "exp_sinh":
        # trim the parameter interval to where |w f| matters
        lo, hi = _exp_sinh_t_range(quad)
        s, w = map_semi_infinite(quad, PROBE_NODES, (lo, hi))
        c = np.abs(w * values(s))
        big = np.nonzero(c > NEGLIGIBLE * max(c.max(), 1e-300))[0]
        if len(big):
            t = np.linspace(lo, hi, PROBE_NODES)
            i0, i1 = max(big[0] - 1, 0), min(big[-1] + 1, PROBE_NODES - 1)
            t_range = (t[i0], t[i1])
            # mass beyond the hard limits cannot be trimmed; count it as error
            edge = (c[0] if i0 == 0 else 0.0) + (c[-1] if i1 == PROBE_NODES - 1 else 0.0)

    def rule(n):
        s, w = map_semi_infinite(quad, n, t_range)
        # fixed ascending-node summation order
        return float(np.sum(w * values(s)))

    n = quad.node_count
    if quad.mapping == "exp_sinh" and n % 2 == 0:
        n += 1                           # odd count: the half rule is nested
    prev = rule(n // 2 + 1 if quad.mapping == "exp_sinh" else n // 2)
    for _ in range(quad.max_doublings + 1):
        cur = rule(n)
        err = abs(cur - prev) + edge
        if err <= quad.tolerance * abs(cur) + 1e-14:
            return cur, err, n
        prev = cur
        n = 2 * n - 1 if quad.mapping == "exp_sinh" else 2 * n
    raise ConvergenceError(
        f"outer quadrature error {err:.3g} above tolerance {quad.tolerance:g} "
        f"after {quad.max_doublings} doublings")


# ---------------------------------------------------------------------------
# capacity

@dataclass(frozen=True)
class CapacityResult:
    capacity: float
    error_estimate: float
    diagnostics: dict = field(default_factory=dict)

    def __float__(self):
        return self.capacity


def _check_convergent(spec: CombinerSpec):
    if abs(spec.q) > 2.0 + 1e-12:
        raise DivergentIntegralError(
            f"|q| = {abs(spec.q):g} > 2: C(s) grows exponentially while the MGF derivative "
            f"decays algebraically, so the capacity integral diverges; use a surrogate order "
            f"with |q| <= 2")


def _finish(total, err, nodes, spec, bandwidth, extra=None):
    scale = bandwidth / math.log(2.0)
    cap = total * scale
    warnings = []
    if cap < 0:
        if cap < -10 * err * scale - 1e-12:
            warnings.append(f"negative capacity {cap:.3g} clipped to 0")
        cap = 0.0
    diag = {"nodes": nodes, "warnings": warnings,
            "surrogate": {"eta": spec.eta, "p": spec.p, "q": spec.q,
                          "surrogate_order": spec.surrogate_order}}
    if extra:
        diag.update(extra)
    return CapacityResult(cap, err * scale, diag)


def _integrate_kernel(derivative: Callable[[float], float], spec: CombinerSpec,
                      quad: QuadratureSpec, use_closed_form: bool):
    """int_0^inf C(s) D(s) ds for D = d/ds of the joint MGF.

    Returns (value, error, evaluations, method).
    """
    if use_closed_form and abs(spec.q) == 2.0:
        return _integrate_cosine_kernel(derivative, spec, quad)
    aux = _aux_evaluator(spec, use_closed_form)

    def integrand(s):
        d = derivative(s)
        return 0.0 if d == 0.0 else aux(s) * d

    val, err, nodes = integrate_semi_infinite(integrand, quad)
    return val, err, nodes, quad.mapping


def _integrate_cosine_kernel(derivative, spec: CombinerSpec, quad: QuadratureSpec):
    """|q| = 2: C(s) = 2 Ci(a s) [- 2 ln(a s) - 2 C_euler for q = -2].

    The Ci factor oscillates while D(s) decays only algebraically, so mapped
    trapezoid rules converge slowly. Split at s0 = pi/a: adaptive quadrature
    below, and above it Ci = f sin - g cos with smooth f, g, so each piece is a
    Fourier integral for QUADPACK's QAWF.
    """
    a = spec.L / math.sqrt(spec.eta) if spec.q > 0 else spec.L * math.sqrt(spec.eta)
    cache: dict[float, float] = {}

    def d(s):
        if s not in cache:
            cache[s] = derivative(s)
        return cache[s]

    s0 = math.pi / a
    rel = 0.1 * quad.tolerance
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            head, e_head = integrate.quad(lambda s: 2.0 * cosine_integral(a * s) * d(s), 0.0, s0,
                                          epsabs=0.0, epsrel=rel, limit=200)
            rest, e_rest, n_rest = 0.0, 0.0, 0
            if spec.q < 0:
                rest, e_rest, n_rest = integrate_semi_infinite(
                    lambda s: -2.0 * (math.log(a * s) + EULER_GAMMA) * d(s), quad)
            scale = max(abs(head), abs(rest), 1e-300)
            sin_part, e_sin = integrate.quad(
                lambda s: 2.0 * sine_cosine_auxiliary(a * s)[0] * d(s), s0, np.inf,
                weight="sin", wvar=a, epsabs=rel * scale, limlst=200)
            cos_part, e_cos = integrate.quad(
                lambda s: 2.0 * sine_cosine_auxiliary(a * s)[1] * d(s), s0, np.inf,
                weight="cos", wvar=a, epsabs=rel * scale, limlst=200)
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"oscillatory cosine-integral kernel: {exc}") from None
    val = head + rest + sin_part - cos_part
    err = e_head + e_rest + e_sin + e_cos
    if err > quad.tolerance * abs(val) + 1e-14:
        raise ConvergenceError(f"oscillatory kernel error {err:.3g} above tolerance "
                               f"{quad.tolerance:g}")
    return val, err, len(cache), "split_fourier"


def ergodic_capacity_inid(branches: Sequence[EgkParams], spec: CombinerSpec,
                          bandwidth: float = 1.0, quad: QuadratureSpec | None = None,
                          *, use_closed_form: bool = True) -> CapacityResult:
    """Capacity over independent (not necessarily identical) EGK branches."""
    quad = quad or QuadratureSpec()
    if len(branches) != spec.L:
        raise DomainError(f"{len(branches)} branches given for L = {spec.L}")
    if not bandwidth > 0:
        raise DomainError("bandwidth must be positive")
    _check_convergent(spec)

    # identical branches share one MGF evaluation
    distinct: list[EgkParams] = []
    index = []
    for b in branches:
        if b not in distinct:
            distinct.append(b)
        index.append(distinct.index(b))
    specs = [mgf_specs(b, spec.p) for b in distinct]
    p = spec.p

    def joint_derivative(s):
        m = [egk_generalized_mgf(b, p, s, specs=sp) for b, sp in zip(distinct, specs)]
        dm = [egk_generalized_mgf_derivative(b, p, s, specs=sp) for b, sp in zip(distinct, specs)]
        total = 0.0
        for l, il in enumerate(index):
            term = dm[il]
            for k, ik in enumerate(index):
                if k != l:
                    term *= m[ik]
            total += term
        return total

    val, err, nodes, method = _integrate_kernel(joint_derivative, spec, quad, use_closed_form)
    return _finish(val, err, nodes, spec, bandwidth, {"mapping": method})


def ergodic_capacity_joint(joint_mgf: Callable[[float], tuple], spec: CombinerSpec,
                           bandwidth: float = 1.0, quad: QuadratureSpec | None = None,
                           *, use_closed_form: bool = True) -> CapacityResult:
    """Capacity from a joint generalized MGF ``s -> (E[exp(-s X)], d/ds E[exp(-s X)])``.

    X = sum_l gamma_l^p. The callable is checked at every node: the value must
    lie in [0, 1] and the derivative must not be positive.
    """
    quad = quad or QuadratureSpec()
    if not bandwidth > 0:
        raise DomainError("bandwidth must be positive")
    _check_convergent(spec)
    slack = 1e-9

    def derivative(s):
        value, deriv = joint_mgf(s)
        value, deriv = float(value), float(deriv)
        if not (-slack <= value <= 1.0 + slack) or not math.isfinite(value):
            raise InputContractError(f"joint MGF value {value!r} at s={s:.6g} outside [0, 1]")
        if not deriv <= 0.0 or not math.isfinite(deriv):
            raise InputContractError(f"joint MGF derivative {deriv!r} at s={s:.6g} is positive")
        return deriv

    val, err, nodes, method = _integrate_kernel(derivative, spec, quad, use_closed_form)
    return _finish(val, err, nodes, spec, bandwidth, {"mapping": method})


def capacity_mrc_baselines(branches: Sequence[EgkParams], bandwidth: float = 1.0,
                           quad: QuadratureSpec | None = None):
    """MRC capacity by the two classical MGF formulas.

    First: int (e^-s / s) (1 - M(s)) ds. Second: int Ei(-s) M'(s) ds. M is the
    MGF of the summed SNR (product of branch MGFs).
    """
    quad = quad or QuadratureSpec()
    spec = combiner_params(Scheme.MRC, len(branches))
    distinct = list(dict.fromkeys(branches))
    specs = {b: mgf_specs(b, 1.0) for b in distinct}

    def mgf(s):
        vals = {b: egk_generalized_mgf(b, 1.0, s, specs=specs[b]) for b in distinct}
        return math.prod(vals[b] for b in branches)

    def dmgf(s):
        vals = {b: egk_generalized_mgf(b, 1.0, s, specs=specs[b]) for b in distinct}
        ders = {b: egk_generalized_mgf_derivative(b, 1.0, s, specs=specs[b]) for b in distinct}
        total = 0.0
        for l, bl in enumerate(branches):
            term = ders[bl]
            for k, bk in enumerate(branches):
                if k != l:
                    term *= vals[bk]
            total += term
        return total

    def first(s):
        # 1 - M(s) loses digits for tiny s; -expm1(sum log M) keeps them
        logm = 0.0
        for b in branches:
            m = egk_generalized_mgf(b, 1.0, s, specs=specs[b])
            if m <= 0.0:
                return math.exp(-s) / s
            logm += math.log(m)
        return math.exp(-s) / s * (-math.expm1(logm))

    def second(s):
        d = dmgf(s)
        return 0.0 if d == 0.0 else float(exp_integral_ei(-s)) * d

    v1, e1, n1 = integrate_semi_infinite(first, quad)
    v2, e2, n2 = integrate_semi_infinite(second, quad)
    return (_finish(v1, e1, n1, spec, bandwidth, {"formula": "laplace_kernel"}),
            _finish(v2, e2, n2, spec, bandwidth, {"formula": "exponential_integral_kernel"}))
