"""Fox H and Meijer G functions by numerical Mellin-Barnes contour integration.

Convention (Kilbas-Saigo / Prudnikov 8.3.1)::

    H^{m,n}_{p,q}[z] = 1/(2 pi i) * int_L Theta(u) z^(-u) du

    Theta(u) = prod_{j<m} G(b_j + B_j u) prod_{j<n} G(1 - a_j - A_j u)
               / prod_{j>=m} G(1 - b_j - B_j u) / prod_{j>=n} G(a_j + A_j u)

The contour leaves from the real axis at the saddle point of ``|Theta(u) z^-u|``
inside the pole-free strip, runs vertically, and (when ``Delta = sum B - sum A``
is non-zero) bends into the half plane where the integrand decays
super-exponentially. Real parameters and real ``z`` make the lower half of the
contour the mirror image of the upper half, so only the upper half is evaluated
unless a residual check is requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import optimize, special

from .errors import (CoincidentPolesError, DomainError, FoxHValidationError,
                     NoConvergentSectorError, TruncationBudgetError)
from .special import digamma_complex, log_gamma_mod

COINCIDENT_TOL = 1e-9
NEAR_COINCIDENT_TOL = 1e-6

GL_ORDER = 32
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)
_GL16_X, _GL16_W = np.polynomial.legendre.leggauss(GL_ORDER // 2)

DEFAULT_HALF_EXTENT = 40.0
MAX_HALF_EXTENT = 640.0
NODES_PER_UNIT = 16
# log-magnitude drop (below the saddle value) at which the tail is cut
TAIL_DROP = 42.0
MAX_TAIL_LENGTH = 2.0e4
UNDERFLOW_LOG = -900.0


@dataclass(frozen=True)
class FoxHSpec:
    """Index quadruple and parameter pairs of one H-function instance.

    ``upper`` holds the (a_j, A_j) pairs, ``lower`` the (b_j, B_j) pairs; p and q
    are their lengths.
    """

    m: int
    n: int
    upper: tuple = ()
    lower: tuple = ()

    def __post_init__(self):
        upper = tuple((float(a), float(A)) for a, A in self.upper)
        lower = tuple((float(b), float(B)) for b, B in self.lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "lower", lower)
        if not 0 <= self.n <= len(upper):
            raise FoxHValidationError(f"n={self.n} outside [0, {len(upper)}]")
        if not 0 <= self.m <= len(lower):
            raise FoxHValidationError(f"m={self.m} outside [0, {len(lower)}]")
        for a, A in upper:
            if not A > 0:
                raise FoxHValidationError(f"upper slope A={A} must be positive")
        for b, B in lower:
            if not B > 0:
                raise FoxHValidationError(f"lower slope B={B} must be positive")

    @property
    def p(self) -> int:
        return len(self.upper)

    @property
    def q(self) -> int:
        return len(self.lower)

    def reduced(self) -> "FoxHSpec":
        """Cancel gamma factors that appear identically in numerator and denominator."""
        num_b = list(self.lower[:self.m])
        den_b = list(self.lower[self.m:])
        num_a = list(self.upper[:self.n])
        den_a = list(self.upper[self.n:])
        # G(b + B u) on top against G(a + A u) below
        for pair in list(num_b):
            if pair in den_a:
                num_b.remove(pair)
                den_a.remove(pair)
        # G(1 - a - A u) on top against G(1 - b - B u) below
        for pair in list(num_a):
            if pair in den_b:
                num_a.remove(pair)
                den_b.remove(pair)
        return FoxHSpec(len(num_b), len(num_a), tuple(num_a + den_a), tuple(num_b + den_b))

    def log_kernel(self, u):
        """ln Theta(u) modulo 2 pi i, vectorised over ``u``."""
        u = np.asarray(u, dtype=complex)
        out = np.zeros_like(u)
        for j, (b, B) in enumerate(self.lower):
            if j < self.m:
                out += log_gamma_mod(b + B * u)
            else:
                out -= log_gamma_mod(1.0 - b - B * u)
        for j, (a, A) in enumerate(self.upper):
            if j < self.n:
                out += log_gamma_mod(1.0 - a - A * u)
            else:
                out -= log_gamma_mod(a + A * u)
        return out

    def real_log_kernel_slope(self, c: float) -> float:
        """d/dc ln|Theta(c)| for real c off the poles."""
        out = 0.0
        for j, (b, B) in enumerate(self.lower):
            out += B * float(special.psi(b + B * c) if j < self.m else special.psi(1.0 - b - B * c))
        for j, (a, A) in enumerate(self.upper):
            out -= A * float(special.psi(1.0 - a - A * c) if j < self.n else special.psi(a + A * c))
        return out

    def log_kernel_derivative(self, u):
        u = np.asarray(u, dtype=complex)
        out = np.zeros_like(u)
        for j, (b, B) in enumerate(self.lower):
            if j < self.m:
                out += B * digamma_complex(b + B * u)
            else:
                out += B * digamma_complex(1.0 - b - B * u)
        for j, (a, A) in enumerate(self.upper):
            if j < self.n:
                out -= A * digamma_complex(1.0 - a - A * u)
            else:
                out -= A * digamma_complex(a + A * u)
        return out


@dataclass(frozen=True)
class ContourSpec:
    """Vertical part of the integration path: Re u = offset, |Im u| <= half_extent."""

    offset: float
    half_extent: float = DEFAULT_HALF_EXTENT
    node_count: int = int(2 * DEFAULT_HALF_EXTENT * NODES_PER_UNIT)

    def __post_init__(self):
        if not self.half_extent > 0:
            raise DomainError("half_extent must be positive")
        if self.node_count < 64:
            raise DomainError("node_count must be at least 64")


@dataclass(frozen=True)
class ValidatedFoxH:
    """A spec that passed validation, with its convergence indicators."""

    spec: FoxHSpec          # reduced form actually integrated
    original: FoxHSpec
    a_star: float
    delta: float
    mu: float
    strip: tuple            # (sup of left poles, inf of right poles)
    default_contour: ContourSpec

    @property
    def tail_direction(self) -> complex:
        if self.delta < 0:
            return complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
        if self.delta > 0:
            return complex(math.cos(3 * math.pi / 4), math.sin(3 * math.pi / 4))
        return 1j

    @property
    def convergent_sector(self) -> str:
        if self.a_star > 0:
            return f"|arg z| < {self.a_star * math.pi / 2:.6g} (vertical line)"
        side = "right" if self.delta < 0 else "left"
        return f"all z > 0 (loop contour opening to the {side})"


@dataclass(frozen=True)
class FoxHValue:
    value: float
    error_estimate: float
    imag_residual: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def __float__(self):
        return self.value


def _left_poles(spec, upto):
    out = []
    for b, B in spec.lower[:spec.m]:
        k = 0
        while True:
            pole = -(b + k) / B
            if pole < upto:
                break
            out.append(pole)
            k += 1
    return out


def _right_poles(spec, upto):
    out = []
    for a, A in spec.upper[:spec.n]:
        k = 0
        while True:
            pole = (1.0 - a + k) / A
            if pole > upto:
                break
            out.append(pole)
            k += 1
    return out


def validate_foxh(spec: FoxHSpec) -> ValidatedFoxH:
    """Check pole separation and convergence; attach indicators and a default contour."""
    red = spec.reduced()
    lo = max((-b / B for b, B in red.lower[:red.m]), default=-math.inf)
    hi = min(((1.0 - a) / A for a, A in red.upper[:red.n]), default=math.inf)

    if not hi - lo > NEAR_COINCIDENT_TOL:
        lefts = _left_poles(red, hi - 1.0)
        rights = _right_poles(red, lo + 1.0)
        for x in lefts:
            for y in rights:
                if abs(x - y) < NEAR_COINCIDENT_TOL:
                    kind = "coincide" if abs(x - y) < COINCIDENT_TOL else "nearly coincide"
                    raise CoincidentPolesError(
                        f"left and right poles {kind} at u={x:.12g}; perturb the "
                        f"parameters by ~1e-4 to separate them")
        raise FoxHValidationError(
            f"pole families interleave (sup left={lo:.6g} >= inf right={hi:.6g}); "
            "no vertical line separates them")

    sum_a_top = sum(A for _, A in red.upper[:red.n])
    sum_a_bot = sum(A for _, A in red.upper[red.n:])
    sum_b_top = sum(B for _, B in red.lower[:red.m])
    sum_b_bot = sum(B for _, B in red.lower[red.m:])
    a_star = sum_a_top - sum_a_bot + sum_b_top - sum_b_bot
    delta = sum_b_top + sum_b_bot - sum_a_top - sum_a_bot
    mu = (sum(b for b, _ in red.lower) - sum(a for a, _ in red.upper)
          + (red.p - red.q) / 2.0)
    if a_star <= 0 and abs(delta) < 1e-14:
        raise NoConvergentSectorError(
            f"a*={a_star:.6g} <= 0 with Delta=0: no contour converges")

    if math.isfinite(lo) and math.isfinite(hi):
        offset = 0.5 * (lo + hi)
    elif math.isfinite(lo):
        offset = lo + 1.0
    elif math.isfinite(hi):
        offset = hi - 1.0
    else:
        offset = 0.0
    return ValidatedFoxH(red, spec, a_star, delta, mu, (lo, hi), ContourSpec(offset))


# ---------------------------------------------------------------------------
# evaluation

def _saddle(spec: FoxHSpec, log_z: float, lo: float, hi: float) -> float:
    """Real point in (lo, hi) minimising |Theta(c) z^-c|."""
    width = hi - lo
    # keep off the poles, but allow the saddle to approach a dominant pole
    # as closely as the z^-u factor demands
    guard = min(0.02, 0.5 / (1.0 + abs(log_z)))
    if math.isfinite(width):
        guard = min(guard, 0.25 * width)

    def slope(c):
        return spec.real_log_kernel_slope(c) - log_z

    a = lo + guard if math.isfinite(lo) else None
    b = hi - guard if math.isfinite(hi) else None
    if a is None:
        step, a = 1.0, (b - 1.0)
        while slope(a) > 0:
            step *= 2
            a = b - step
            if step > 1e300:
                return b
    if b is None:
        step, b = 1.0, a + 1.0
        while slope(b) < 0:
            step *= 2
            b = a + step
            if step > 1e300:
                return a
    sa, sb = slope(a), slope(b)
    if sa >= 0:
        return a
    if sb <= 0:
        return b
    return optimize.brentq(slope, a, b, xtol=1e-10, rtol=1e-12)


def _panels_along(rate_fn, start, length, h_max, h_min=1e-6):
    """Panel boundaries on [start, start+length] with h <= min(h_max, rate_fn)."""
    if length <= 0:
        return np.array([start])
    # coarse geometric + uniform sampling of the admissible step
    probe = np.unique(np.concatenate([
        np.linspace(0.0, length, 400),
        length * np.geomspace(1e-6, 1.0, 200),
    ]))
    h = np.clip(rate_fn(start + probe), h_min, h_max)
    # number of panels as a function of position: cumulative int dt/h
    dens = 1.0 / h
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(probe))])
    npan = max(1, int(math.ceil(cum[-1])))
    targets = np.linspace(0.0, cum[-1], npan + 1)
    return start + np.interp(targets, cum, probe)


def _gl_nodes(edges, order_x, order_w):
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = (mid[:, None] + half[:, None] * order_x[None, :]).ravel()
    w = (half[:, None] * order_w[None, :]).ravel()
    return x, w


def _integrate_path(spec, log_z, shift, c, tail_start, direction, vert_edges, tail_edges,
                    with_error, conj=False):
    """Integrate f(u) du over the vertical part [c, c + i tail_start] and the tail."""
    sign = -1.0 if conj else 1.0
    total, total16, absum = 0j, 0j, 0.0

    def piece(param_x, param_w, to_u, du):
        u = to_u(param_x)
        f = np.exp(spec.log_kernel(u) - u * log_z - shift)
        vals = f * du
        return np.sum(vals * param_w), np.sum(np.abs(vals) * param_w)

    segments = []
    if len(vert_edges) > 1:
        segments.append((vert_edges, lambda t: c + sign * 1j * t, sign * 1j))
    if tail_edges is not None and len(tail_edges) > 1:
        d = direction if not conj else direction.conjugate()
        base = complex(c, sign * tail_start)
        segments.append((tail_edges, lambda r, base=base, d=d: base + r * d, d))

    for edges, to_u, du in segments:
        x, w = _gl_nodes(edges, _GL_X, _GL_W)
        s, sa = piece(x, w, to_u, du)
        total += s
        absum += sa
        if with_error:
            x, w = _gl_nodes(edges, _GL16_X, _GL16_W)
            total16 += piece(x, w, to_u, du)[0]
    return total, total16, absum


def eval_foxh(spec: FoxHSpec, z: float | None = None, contour: ContourSpec | None = None, *,
              log_z: float | None = None, validated: ValidatedFoxH | None = None,
              estimate_error: bool = True, check_imag: bool = False,
              log_prefactor: float = 0.0,
              rel_tol: float = 1e-12) -> FoxHValue:
    """Evaluate H^{m,n}_{p,q}[z] for real z > 0.

    ``log_z`` may be given instead of ``z`` when z itself would over/underflow.
    With ``contour=None`` the offset is the saddle point of the integrand on the
    real axis; otherwise the contour's offset, extent and node density are
    honoured (the extent is doubled up to 640 if the truncated tail is still
    above ``rel_tol``). The result is multiplied by ``exp(log_prefactor)``
    inside the log-space scaling, so large normalising constants cannot overflow.
    """
    if log_z is None:
        if z is None or not z > 0:
            raise DomainError("eval_foxh requires z > 0")
        log_z = math.log(z)
    v = validated if validated is not None else validate_foxh(spec)
    red = v.spec
    if red.m == 0 and red.n == 0:
        # no poles on either side: closing the contour encloses nothing
        return FoxHValue(0.0, 0.0, 0.0, {"reason": "empty numerator"})

    lo, hi = v.strip
    drop = max(TAIL_DROP, 14.0 - math.log(rel_tol))
    if contour is None:
        s_lo, s_hi = lo, hi
        if v.a_star <= 0:
            # bent contour: stay near the finite edge of the strip, where the
            # integrand is not yet dominated by cancellation along the bend
            if not math.isfinite(lo):
                s_lo = hi - 1.0
            if not math.isfinite(hi):
                s_hi = lo + 1.0
        c = _saddle(red, log_z, s_lo, s_hi)
        h_max = 2.0 * GL_ORDER / (2.0 * NODES_PER_UNIT)
        base_extent = None
    else:
        c = float(contour.offset)
        if not lo < c < hi:
            raise DomainError(f"contour offset {c} outside the pole-free strip ({lo}, {hi})")
        h_max = 2.0 * contour.half_extent * GL_ORDER / contour.node_count
        base_extent = float(contour.half_extent)

    shift = float((red.log_kernel(np.array([c + 0j]))[0] - c * log_z).real)
    direction = v.tail_direction
    dist0 = min(c - lo, hi - c)

    def phase_rate(u):
        return np.abs(red.log_kernel_derivative(u) - log_z)

    def relmag(u):
        return (red.log_kernel(u) - u * log_z).real - shift

    if shift + log_prefactor < UNDERFLOW_LOG:
        # even the peak of the integrand is far below the smallest double
        return FoxHValue(0.0, 0.0, 0.0, {"offset": c, "reason": "underflow"})

    # ---- where the vertical part ends and the tail takes over
    if v.a_star > 0 or abs(v.delta) < 1e-14:
        # the vertical line converges absolutely: no tail needed
        if base_extent is not None:
            t_end = base_extent
            while relmag(np.array([c + 1j * t_end]))[0] > -drop:
                t_end *= 2.0
                if t_end > MAX_HALF_EXTENT * (1 + 1e-12):
                    raise TruncationBudgetError(
                        f"integrand not negligible at |Im u| = {MAX_HALF_EXTENT}")
        else:
            t_cap = max(MAX_HALF_EXTENT, 10.0 * abs(c))
            probe = np.concatenate([[0.0], np.geomspace(1e-3, t_cap, 500)])
            above = np.flatnonzero(relmag(c + 1j * probe) > -drop)
            if above[-1] + 1 >= len(probe):
                raise TruncationBudgetError(
                    f"integrand not negligible at |Im u| = {t_cap:.6g}")
            t_end = float(probe[above[-1] + 1])
        t_switch, tail_len = t_end, 0.0
    else:
        cand = np.concatenate([[0.0], 2.0 ** np.arange(-2, 14, 0.25)])
        if base_extent is not None:
            cand = np.array([base_extent])
        rate = (red.log_kernel_derivative(c + 1j * cand) - log_z) * direction
        good = rate.real < -1.0
        # smallest candidate beyond which every candidate decays
        ok = np.flatnonzero(~good)
        if base_extent is not None:
            t_switch = base_extent
        elif len(ok) == 0:
            t_switch = 0.0
        elif ok[-1] + 1 < len(cand):
            t_switch = float(cand[ok[-1] + 1])
        else:
            raise TruncationBudgetError("no decaying tail found within the extent cap")
        # tail length: march outward until the magnitude has dropped far enough
        base = complex(c, t_switch)
        r_probe = np.concatenate([[0.0], np.geomspace(1e-2, MAX_TAIL_LENGTH, 600)])
        mags = relmag(base + r_probe * direction)
        below = mags < -drop
        # first index after which all probes stay below the drop level
        above = np.flatnonzero(~below)
        if len(above) and above[-1] + 1 >= len(r_probe):
            raise TruncationBudgetError("contour tail does not decay within the length cap")
        tail_len = float(r_probe[above[-1] + 1]) if len(above) else float(r_probe[1])
        t_end = t_switch

    # ---- panels
    def vert_step(t):
        u = c + 1j * np.asarray(t)
        pole_d = np.sqrt(dist0 ** 2 + np.asarray(t) ** 2)
        return np.minimum(10.0 / (phase_rate(u) + 1e-300), 0.5 * pole_d)

    vert_edges = _panels_along(vert_step, 0.0, t_end, h_max, h_min=1e-3 * dist0)
    tail_edges = None
    if tail_len > 0:
        base = complex(c, t_switch)

        def tail_step(r):
            u = base + np.asarray(r) * direction
            return 10.0 / (phase_rate(u) + 1e-300)

        tail_edges = _panels_along(tail_step, 0.0, tail_len, h_max)

    total, total16, absum = _integrate_path(red, log_z, shift, c, t_switch, direction,
                                            vert_edges, tail_edges, estimate_error)
    log_scale = shift + log_prefactor
    scale = math.exp(log_scale) if log_scale < 709 else math.inf
    if not math.isfinite(scale):
        raise OverflowError("Fox H value overflows double precision")
    value = total.imag / math.pi * scale

    err = 0.0
    if estimate_error:
        end_u = (complex(c, t_switch) + tail_len * direction) if tail_len > 0 else complex(c, t_end)
        tail_mag = math.exp(relmag(np.array([end_u]))[0])
        err = (abs(total.imag - total16.imag) / math.pi + tail_mag
               + 1e-15 * absum) * scale

    imag_res = 0.0
    if check_imag:
        lower, _, _ = _integrate_path(red, log_z, shift, c, t_switch, direction,
                                      vert_edges, tail_edges, False, conj=True)
        # upper half runs c -> c+i*inf, lower half (conj path) runs c -> c-i*inf
        full = (total - lower) / (2j * math.pi) * scale
        imag_res = abs(full.imag)
        if imag_res > 1e-8 * abs(full.real) + 1e-12:
            raise FoxHValidationError(
                f"imaginary residue {imag_res:.3g} exceeds bound for real-valued target")
        value = full.real

    diag = {
        "offset": c,
        "vertical_extent": t_end,
        "tail_length": tail_len,
        "nodes": GL_ORDER * ((len(vert_edges) - 1) + (len(tail_edges) - 1 if tail_edges is not None else 0)),
        "condition": absum / math.pi * scale / max(abs(value), 1e-300),
    }
    return FoxHValue(float(value), float(err), float(imag_res), diag)


def foxh(spec: FoxHSpec, z: float, **kw) -> float:
    """Plain float value of :func:`eval_foxh`."""
    kw.setdefault("estimate_error", False)
    return eval_foxh(spec, z, **kw).value


def meijer_spec(m: int, n: int, upper: Sequence[float], lower: Sequence[float]) -> FoxHSpec:
    return FoxHSpec(m, n, tuple((a, 1.0) for a in upper), tuple((b, 1.0) for b in lower))


def eval_meijer_g(m: int, n: int, upper: Sequence[float], lower: Sequence[float],
                  z: float | None = None, **kw) -> FoxHValue:
    """Meijer G^{m,n}_{p,q}[z | upper; lower] as the unit-slope Fox H."""
    return eval_foxh(meijer_spec(m, n, upper, lower), z, **kw)
