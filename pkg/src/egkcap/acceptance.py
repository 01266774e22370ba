"""End-to-end acceptance checks, shared by the test-suite and ``egkcap validate``.

Each check returns a :class:`CriterionResult`. Tolerances live in
``DEFAULT_TOLERANCES`` and can be overridden per run.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special, stats

from .capacity import (QuadratureSpec, Scheme, aux_c_closed_form, aux_c_foxh,
                       capacity_mrc_baselines, combiner_params, ergodic_capacity_inid)
from .egk import (EgkParams, egk_generalized_mgf, egk_generalized_mgf_derivative, egk_pdf,
                  egk_sample, mgf_specs, named_special_case)
from .montecarlo import SimulationPlan, simulate_capacity

DEFAULT_TOLERANCES = {
    "aux_rel": 1e-6,            # closed form vs Mellin-Barnes
    "baseline_rel": 1e-6,       # three MRC formulas
    "rayleigh_rel": 0.02,       # single branch vs classical Rayleigh formula
    "mc_sigma": 3.0,            # analytic vs Monte Carlo, in standard errors
    "surrogate_rel": 0.02,      # SC / MIN_BOUND surrogate vs exact Monte Carlo
    "derivative_rel": 1e-5,     # MGF derivative vs finite difference
    "pdf_norm": 1e-6,           # density normalisation
    "ks_alpha": 0.01,           # sampler goodness of fit level
    "mean_sigma": 3.0,          # sample mean vs mean SNR
    "ordering_slack": 1e-9,     # relative slack for capacity ordering
}

# the capacity integral only converges for |q| <= 2; product-type limits use that order
CONVERGENT_PRODUCT_ORDER = 2

FADING_GRID = [(m, ms, xi, xis) for m in (0.5, 1.0, 2.5) for ms in (1.0, 3.0, 50.0)
               for xi, xis in ((1.0, 1.0), (2.0, 0.75))]


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    seconds: float = 0.0
    details: list = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number} [{status}] {self.title} ({self.seconds:.1f}s)"


def _pmap(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _order_for(scheme: Scheme):
    if scheme in (Scheme.CASCADED, Scheme.GEOMETRIC_MEAN):
        return CONVERGENT_PRODUCT_ORDER
    return None


# ---------------------------------------------------------------------------
# 1: closed forms against the Mellin-Barnes evaluation

def check_closed_forms(tol, workers=1):
    s_grid = (1e-2, 1e-1, 1.0, 10.0, 100.0)
    cases = [(Scheme.MRC, 2), (Scheme.MRC, 3), (Scheme.EGC, 2), (Scheme.EGC, 4),
             (Scheme.AF_MULTIHOP, 2), (Scheme.AF_MULTIHOP, 3)]
    ok, details = True, []
    for scheme, L in cases:
        spec = combiner_params(scheme, L)
        worst = 0.0
        for s in s_grid:
            closed = aux_c_closed_form(spec.eta, spec.q, spec.L, s)
            general = aux_c_foxh(spec.eta, spec.q, spec.L, s)
            worst = max(worst, abs(general - closed) / abs(closed))
        good = worst <= tol["aux_rel"]
        ok &= good
        details.append(f"{scheme.value} L={L}: max rel diff {worst:.2e}")
    return ok, details


# ---------------------------------------------------------------------------
# 2: baseline equivalence

def _baseline_job(args):
    L, m, snr_db = args
    b = named_special_case("nakagami_m", db_to_linear(snr_db), m)
    first, second = capacity_mrc_baselines([b] * L)
    unified = ergodic_capacity_inid([b] * L, combiner_params(Scheme.MRC, L))
    vals = [first.capacity, second.capacity, unified.capacity]
    return args, vals, (max(vals) - min(vals)) / max(vals)


def check_baselines(tol, workers=1):
    jobs = [(L, m, db) for L in (1, 2, 3) for m in (1.0, 2.0) for db in (0.0, 10.0, 20.0)]
    ok, details = True, []
    for (L, m, db), vals, rel in _pmap(_baseline_job, jobs, workers):
        good = rel <= tol["baseline_rel"]
        ok &= good
        if not good or L == 2:
            details.append(f"L={L} m={m:g} {db:g} dB: {vals[2]:.10f} spread {rel:.1e}"
                           + ("" if good else "  <-- exceeds tolerance"))
    return ok, details


# ---------------------------------------------------------------------------
# 3: classical Rayleigh capacity

def check_rayleigh(tol, workers=1):
    g = db_to_linear(10.0)
    ref = math.log2(math.e) * math.exp(1.0 / g) * special.exp1(1.0 / g)
    residuals = []
    details = [f"classical value {ref:.6f}"]
    for ms in (50.0, 100.0, 200.0):
        b = EgkParams(1.0, 1.0, ms, 1.0, g)
        cap = ergodic_capacity_inid([b], combiner_params(Scheme.MRC, 1)).capacity
        residuals.append(abs(cap - ref) / ref)
        details.append(f"m_s={ms:g}: {cap:.6f} (rel residual {residuals[-1]:.2e})")
    shrinking = all(a > b for a, b in zip(residuals, residuals[1:]))
    ok = residuals[0] <= tol["rayleigh_rel"] and shrinking
    if not shrinking:
        details.append("residual does not shrink monotonically with m_s")
    return ok, details


# ---------------------------------------------------------------------------
# 4: analytic vs Monte Carlo

MC_SCHEMES = (Scheme.MRC, Scheme.EGC, Scheme.RMSC, Scheme.AF_MULTIHOP, Scheme.CASCADED)
MC_FADINGS = ("rayleigh", "nakagami_m(2)", "generalized_k(2,3)")


def _mc_job(args):
    scheme, fading, snr_db, L, samples, seed = args
    b = named_special_case(fading, db_to_linear(snr_db))
    spec = combiner_params(scheme, L, _order_for(scheme))
    try:
        analytic = ergodic_capacity_inid([b] * L, spec).capacity
        err = None
    except Exception as exc:  # reported, never hidden
        analytic, err = math.nan, f"{type(exc).__name__}: {exc}"
    mc = simulate_capacity(SimulationPlan([b] * L, scheme, samples, seed))
    return args, analytic, mc.estimate, mc.standard_error, err


def check_monte_carlo(tol, workers=1, samples=10 ** 6):
    jobs = []
    idx = 0
    for scheme in MC_SCHEMES:
        for fading in MC_FADINGS:
            for db in (0.0, 10.0, 20.0):
                for L in (2, 3):
                    jobs.append((scheme, fading, db, L, samples, 1000 + idx))
                    idx += 1
    results = _pmap(_mc_job, jobs, workers)
    ok, details = True, []
    per_scheme = {}
    for (scheme, fading, db, L, _, _), analytic, est, se, err in results:
        z = (analytic - est) / se if math.isfinite(analytic) else math.inf
        good = abs(z) <= tol["mc_sigma"]
        ok &= good
        tally = per_scheme.setdefault(scheme.value, [0, 0])
        tally[0] += good
        tally[1] += 1
        if not good:
            why = err or f"analytic {analytic:.5f} vs MC {est:.5f} +- {se:.5f} ({z:+.1f} sigma)"
            details.append(f"{scheme.value} {fading} {db:g} dB L={L}: {why}")
    summary = [f"{k}: {v[0]}/{v[1]} within {tol['mc_sigma']:g} sigma"
               for k, v in per_scheme.items()]
    return ok, summary + details


# ---------------------------------------------------------------------------
# 5: limit-scheme surrogates

def _surrogate_job(args):
    scheme, order = args
    b = named_special_case("rayleigh", db_to_linear(10.0))
    return args, ergodic_capacity_inid([b, b], combiner_params(scheme, 2, order)).capacity


def check_surrogates(tol, workers=1, samples=10 ** 6):
    b = named_special_case("rayleigh", db_to_linear(10.0))
    orders = (2, 4, 8, 16)
    jobs = [(s, o) for s in (Scheme.SC, Scheme.MIN_BOUND) for o in orders]
    caps = dict(_pmap(_surrogate_job, jobs, workers))
    ok, details = True, []
    for scheme in (Scheme.SC, Scheme.MIN_BOUND):
        exact = simulate_capacity(SimulationPlan([b, b], scheme, samples, 77)).estimate
        gaps = [abs(caps[(scheme, o)] - exact) / exact for o in orders]
        monotone = all(x > y for x, y in zip(gaps, gaps[1:]))
        within = gaps[orders.index(8)] <= tol["surrogate_rel"]
        ok &= monotone and within
        details.append(f"{scheme.value}: exact MC {exact:.5f}; relative gaps "
                       + ", ".join(f"order {o}: {g:.4f}" for o, g in zip(orders, gaps))
                       + ("" if within else f"  <-- order 8 gap above {tol['surrogate_rel']:g}")
                       + ("" if monotone else "  <-- not monotone"))
    return ok, details


# ---------------------------------------------------------------------------
# 6: derivative identity

def check_derivative(tol, workers=1):
    worst, where = 0.0, None
    for m, ms, xi, xis in FADING_GRID:
        b = EgkParams(m, xi, ms, xis, 1.0)
        for p in (-1.0, 0.5, 1.0, 2.0):
            specs = mgf_specs(b, p)
            for s in (0.1, 1.0, 10.0):
                h = 1e-5 * s
                fd = (egk_generalized_mgf(b, p, s + h, specs=specs)
                      - egk_generalized_mgf(b, p, s - h, specs=specs)) / (2 * h)
                d = egk_generalized_mgf_derivative(b, p, s, specs=specs)
                rel = abs(d - fd) / abs(fd)
                if rel > worst:
                    worst, where = rel, (m, ms, xi, xis, p, s)
    return worst <= tol["derivative_rel"], [f"max rel diff {worst:.2e} at {where}"]


# ---------------------------------------------------------------------------
# 7: distribution integrity

def _pdf_cdf_table(b: EgkParams, n=1500):
    """CDF on a log grid from the density (independent of the sampler)."""
    lo, hi = math.log(b.mean_snr) - 40.0, math.log(b.mean_snr) + 8.0
    t = np.linspace(lo, hi, n)
    dens = np.array([egk_pdf(b, math.exp(v)) * math.exp(v) for v in t])
    cdf = integrate.cumulative_trapezoid(dens, t, initial=0.0)
    return t, cdf


def _integrity_job(args):
    m, ms, xi, xis, seed = args
    b = EgkParams(m, xi, ms, xis, 1.0)
    norm = integrate.quad(lambda v: egk_pdf(b, math.exp(v)) * math.exp(v), -60, 10,
                          limit=400, epsabs=0, epsrel=1e-10)[0]
    t, cdf = _pdf_cdf_table(b)
    rng = np.random.Generator(np.random.Philox(seed))
    x = egk_sample(b, rng, 10 ** 5)
    ks = stats.kstest(x, lambda v: np.interp(np.log(v), t, cdf, left=0.0, right=1.0))
    big = egk_sample(b, rng, 10 ** 6)
    z = (big.mean() - b.mean_snr) / (big.std(ddof=1) / math.sqrt(len(big)))
    return args, norm, ks.statistic, ks.pvalue, z


def check_distribution(tol, workers=1):
    jobs = [g + (500 + i,) for i, g in enumerate(FADING_GRID)]
    ok, details = True, []
    crit = stats.kstwo.ppf(1 - tol["ks_alpha"], 10 ** 5)
    worst = [0.0, 0.0, 0.0]
    for args, norm, d, pval, z in _pmap(_integrity_job, jobs, workers):
        good = (abs(norm - 1) <= tol["pdf_norm"] and d <= crit and abs(z) <= tol["mean_sigma"])
        ok &= good
        worst = [max(worst[0], abs(norm - 1)), max(worst[1], d), max(worst[2], abs(z))]
        if not good:
            details.append(f"(m, m_s, xi, xi_s)={args[:4]}: norm err {abs(norm - 1):.1e}, "
                           f"KS {d:.4f} (crit {crit:.4f}), mean z {z:+.2f}")
    details.insert(0, f"worst: norm err {worst[0]:.1e}, KS {worst[1]:.4f} (crit {crit:.4f}), "
                      f"|mean z| {worst[2]:.2f}")
    return ok, details


# ---------------------------------------------------------------------------
# 8: ordering and monotonicity

ORDER_GRID_DB = (0.0, 5.0, 10.0, 15.0, 20.0)


def _order_job(args):
    scheme, db = args
    b = named_special_case("nakagami_m(2)", db_to_linear(db))
    return args, ergodic_capacity_inid([b, b], combiner_params(scheme, 2, _order_for(scheme))).capacity


def check_ordering(tol, workers=1):
    jobs = [(s, db) for s in Scheme for db in ORDER_GRID_DB]
    caps = dict(_pmap(_order_job, jobs, workers))
    slack = tol["ordering_slack"]
    ok, details = True, []
    for db in ORDER_GRID_DB:
        lo, mid, hi = (caps[(Scheme.MIN_BOUND, db)], caps[(Scheme.SC, db)], caps[(Scheme.MRC, db)])
        good = lo <= mid * (1 + slack) and mid <= hi * (1 + slack)
        ok &= good
        if not good:
            details.append(f"{db:g} dB: MIN {lo:.5f}, SC {mid:.5f}, MRC {hi:.5f} out of order")
    for scheme in Scheme:
        series = [caps[(scheme, db)] for db in ORDER_GRID_DB]
        good = all(b > a for a, b in zip(series, series[1:]))
        ok &= good
        if not good:
            details.append(f"{scheme.value} not increasing: {series}")
    details.insert(0, f"{len(jobs)} capacities over {ORDER_GRID_DB} dB")
    return ok, details


# ---------------------------------------------------------------------------
# 9: determinism of the capacity command

def check_determinism(tol, workers=1):
    from . import cli
    args = ["capacity", "--scheme", "MRC", "--branches", "2", "--fading", "nakagami_m(2)",
            "--snr-db", "0:10:5", "--mc-samples", "20000", "--seed", "42", "--format", "csv"]
    outs = []
    for w in (1, 4, 1):
        code, text = cli.run_to_string(args + ["--workers", str(w)])
        outs.append((code, text))
    same = all(o == outs[0] for o in outs) and outs[0][0] == 0
    return same, [f"{len(outs)} runs (workers 1, 4, 1): "
                  + ("byte-identical" if same else "outputs differ")]


CRITERIA: dict[int, tuple[str, Callable]] = {
    1: ("closed forms match the Mellin-Barnes auxiliary function", check_closed_forms),
    2: ("three MRC capacity formulas agree", check_baselines),
    3: ("single-branch Rayleigh capacity vs classical formula", check_rayleigh),
    4: ("analytic capacity vs Monte Carlo", check_monte_carlo),
    5: ("limit-scheme surrogates vs exact combiners", check_surrogates),
    6: ("MGF derivative vs finite difference", check_derivative),
    7: ("density normalisation, sampler fit and mean", check_distribution),
    8: ("scheme ordering and monotonicity in mean SNR", check_ordering),
    9: ("capacity command is deterministic", check_determinism),
}


def run_criterion(number: int, tolerances: dict | None = None, workers: int = 1) -> CriterionResult:
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    title, fn = CRITERIA[number]
    start = time.perf_counter()
    try:
        passed, details = fn(tol, workers=workers)
    except Exception as exc:
        passed, details = False, [f"raised {type(exc).__name__}: {exc}"]
    return CriterionResult(number, title, bool(passed), time.perf_counter() - start, details)


def run_acceptance(numbers=None, tolerances=None, workers: int = 1, log=None):
    results = []
    for n in numbers or sorted(CRITERIA):
        res = run_criterion(n, tolerances, workers)
        results.append(res)
        if log:
            log(res.line())
            for d in res.details:
                log(f"    {d}")
    return results
