"""Extended generalized-K (EGK) composite fading.

The instantaneous SNR is modelled as

    gamma = mean_snr * (G1^(1/xi) / beta) * (G2^(1/xi_s) / beta_s)

with G1 ~ Gamma(m, 1) and G2 ~ Gamma(m_s, 1) independent. beta and beta_s
normalise each factor to unit mean, so E[gamma] = mean_snr. Writing
kappa = beta * beta_s / mean_snr, the Mellin transform is

    E[gamma^t] = kappa^(-t) Gamma(m + t/xi) Gamma(m_s + t/xi_s) / (Gamma(m) Gamma(m_s))

and every analytic quantity below follows from it.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .hyper import FoxHSpec, ValidatedFoxH, eval_foxh, validate_foxh
from .special import extended_incomplete_gamma

NO_SHADOWING_M_S = 50.0
NO_SHADOWING_XI_S = 1.0


@dataclass(frozen=True)
class EgkParams:
    m: float
    xi: float
    m_s: float
    xi_s: float
    mean_snr: float

    def __post_init__(self):
        for name in ("m", "xi", "m_s", "xi_s", "mean_snr"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise DomainError(f"{name} must be finite, got {val}")
            object.__setattr__(self, name, val)
        if self.m < 0.5 or self.m_s < 0.5:
            raise DomainError(f"m and m_s must be >= 0.5 (got m={self.m}, m_s={self.m_s})")
        if self.xi <= 0 or self.xi_s <= 0:
            raise DomainError(f"xi and xi_s must be > 0 (got xi={self.xi}, xi_s={self.xi_s})")
        if self.mean_snr <= 0:
            raise DomainError(f"mean_snr must be > 0, got {self.mean_snr}")

    @property
    def beta(self) -> float:
        return math.exp(math.lgamma(self.m + 1.0 / self.xi) - math.lgamma(self.m))

    @property
    def beta_s(self) -> float:
        return math.exp(math.lgamma(self.m_s + 1.0 / self.xi_s) - math.lgamma(self.m_s))

    @property
    def kappa(self) -> float:
        return self.beta * self.beta_s / self.mean_snr

    def with_mean_snr(self, mean_snr: float) -> "EgkParams":
        return EgkParams(self.m, self.xi, self.m_s, self.xi_s, mean_snr)

    def _log_norm(self) -> float:
        return math.lgamma(self.m) + math.lgamma(self.m_s)


def egk_pdf(params: EgkParams, gamma: float) -> float:
    """Density of the instantaneous SNR at ``gamma`` (> 0)."""
    if not gamma > 0:
        raise DomainError("egk_pdf requires gamma > 0")
    m, xi, ms, xis = params.m, params.xi, params.m_s, params.xi_s
    w = params.kappa * gamma
    log_w = math.log(w)
    inner = extended_incomplete_gamma(ms - m * xi / xis, 0.0, math.exp(xi * log_w), xi / xis)
    if inner <= 0:
        return 0.0
    log_pdf = (math.log(xi) + math.log(params.kappa) + (m * xi - 1.0) * log_w
               + math.log(inner) - params._log_norm())
    return math.exp(log_pdf)


def egk_pdf_foxh(params: EgkParams, gamma: float) -> float:
    """Same density through its Mellin-Barnes form (used as a cross-check)."""
    if not gamma > 0:
        raise DomainError("egk_pdf_foxh requires gamma > 0")
    spec = FoxHSpec(2, 0, (), ((params.m, 1.0 / params.xi), (params.m_s, 1.0 / params.xi_s)))
    return eval_foxh(spec, log_z=math.log(params.kappa * gamma), estimate_error=False,
                     log_prefactor=-math.log(gamma) - params._log_norm()).value


def mgf_specs(params: EgkParams, p: float) -> tuple[ValidatedFoxH, ValidatedFoxH]:
    """Validated H specs for E[exp(-s gamma^p)] and for E[s gamma^p exp(-s gamma^p)].

    Both are evaluated at z = kappa / s^(1/p).
    """
    if p == 0:
        raise DomainError("p must be non-zero")
    fading = ((params.m, 1.0 / params.xi), (params.m_s, 1.0 / params.xi_s))
    slope = 1.0 / abs(p)
    if p > 0:
        mgf = FoxHSpec(2, 1, ((1.0, slope),), fading)
        dmgf = FoxHSpec(2, 1, ((0.0, slope),), fading)
    else:
        mgf = FoxHSpec(3, 0, (), fading + ((0.0, slope),))
        dmgf = FoxHSpec(3, 0, (), fading + ((1.0, slope),))
    return validate_foxh(mgf), validate_foxh(dmgf)


def _mgf_log_z(params: EgkParams, p: float, s: float) -> float:
    return math.log(params.kappa) - math.log(s) / p


def egk_generalized_mgf(params: EgkParams, p: float, s: float, *, specs=None) -> float:
    """E[exp(-s gamma^p)] for s > 0."""
    if p == 0:
        raise DomainError("p must be non-zero")
    if not s > 0:
        raise DomainError("s must be > 0")
    v, _ = specs if specs is not None else mgf_specs(params, p)
    return eval_foxh(v.spec, log_z=_mgf_log_z(params, p, s), validated=v, estimate_error=False,
                     log_prefactor=-math.log(abs(p)) - params._log_norm()).value


def egk_generalized_mgf_derivative(params: EgkParams, p: float, s: float, *, specs=None) -> float:
    """d/ds E[exp(-s gamma^p)] = -E[gamma^p exp(-s gamma^p)], strictly negative."""
    if p == 0:
        raise DomainError("p must be non-zero")
    if not s > 0:
        raise DomainError("s must be > 0")
    _, v = specs if specs is not None else mgf_specs(params, p)
    return -eval_foxh(v.spec, log_z=_mgf_log_z(params, p, s), validated=v, estimate_error=False,
                      log_prefactor=-math.log(abs(p) * s) - params._log_norm()).value


def egk_sample(params: EgkParams, rng: np.random.Generator, size=None):
    """Draw SNR samples; ``rng`` is an explicit numpy Generator."""
    g1 = rng.standard_gamma(params.m, size)
    g2 = rng.standard_gamma(params.m_s, size)
    return params.mean_snr * (g1 ** (1.0 / params.xi) / params.beta) * (
        g2 ** (1.0 / params.xi_s) / params.beta_s)


def named_special_case(name: str, mean_snr: float, *args: float,
                       shadow_m_s: float = NO_SHADOWING_M_S,
                       shadow_xi_s: float = NO_SHADOWING_XI_S) -> EgkParams:
    """EGK encoding of a named fading model.

    ``name`` may carry its arguments inline, e.g. ``"nakagami_m(2)"`` or
    ``"generalized_k(2, 3)"``. Models without shadowing use the surrogate
    ``m_s = shadow_m_s``, ``xi_s = shadow_xi_s``.
    """
    match = re.fullmatch(r"\s*([a-z_]+)\s*(?:\((.*)\))?\s*", name.lower())
    if not match:
        raise DomainError(f"unknown fading model {name!r}")
    key = match.group(1)
    if match.group(2):
        if args:
            raise DomainError("give model arguments either inline or positionally, not both")
        args = tuple(float(a) for a in match.group(2).split(",") if a.strip())

    expected = {"rayleigh": 0, "nakagami_m": 1, "generalized_nakagami": 2,
                "generalized_k": 2, "egk": 4}
    if key not in expected:
        raise DomainError(f"unknown fading model {name!r}; choose from {sorted(expected)}")
    if len(args) != expected[key]:
        raise DomainError(f"{key} takes {expected[key]} argument(s), got {len(args)}")

    if key == "rayleigh":
        return EgkParams(1.0, 1.0, shadow_m_s, shadow_xi_s, mean_snr)
    if key == "nakagami_m":
        return EgkParams(args[0], 1.0, shadow_m_s, shadow_xi_s, mean_snr)
    if key == "generalized_nakagami":
        return EgkParams(args[0], args[1], shadow_m_s, shadow_xi_s, mean_snr)
    if key == "generalized_k":
        return EgkParams(args[0], 1.0, args[1], 1.0, mean_snr)
    m, xi, m_s, xi_s = args
    return EgkParams(m, xi, m_s, xi_s, mean_snr)
