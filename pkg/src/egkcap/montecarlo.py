"""Monte-Carlo ground truth for ergodic capacity.

Samples come in fixed-size blocks; block ``k`` is drawn from a Philox generator
keyed by the seed with its counter offset by ``k``. A sample's value therefore
depends only on (seed, index), and block statistics are merged in a fixed
pairwise tree, so the estimate is bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .capacity import CombinerSpec, Scheme
from .egk import EgkParams, egk_sample
from .errors import DomainError

BLOCK_SIZE = 1 << 16
Z95 = 1.959963984540054


def combine_snr(scheme, snrs) -> np.ndarray | float:
    """Exact end-to-end SNR of ``scheme`` over the last axis of ``snrs``."""
    scheme = Scheme.parse(scheme)
    g = np.asarray(snrs, dtype=float)
    if g.size == 0 or g.shape[-1] == 0:
        raise DomainError("need at least one branch SNR")
    if np.any(~(g > 0)):
        raise DomainError("branch SNRs must be positive")
    L = g.shape[-1]
    if scheme is Scheme.MRC:
        out = g.sum(axis=-1)
    elif scheme is Scheme.EGC:
        out = np.sqrt(g).sum(axis=-1) ** 2 / L
    elif scheme is Scheme.SC:
        out = g.max(axis=-1)
    elif scheme is Scheme.RMSC:
        out = np.sqrt((g * g).sum(axis=-1))
    elif scheme is Scheme.CASCADED:
        out = np.exp(np.log(g).sum(axis=-1))
    elif scheme is Scheme.GEOMETRIC_MEAN:
        out = np.exp(np.log(g).mean(axis=-1))
    elif scheme is Scheme.AF_MULTIHOP:
        out = 1.0 / (1.0 / g).sum(axis=-1)
    else:
        out = g.min(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SimulationPlan:
    branches: tuple
    scheme: Scheme
    sample_count: int
    seed: int
    bandwidth: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if not self.branches:
            raise DomainError("at least one branch is required")
        if self.sample_count < 1000:
            raise DomainError("sample_count must be >= 1000")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if not self.bandwidth > 0:
            raise DomainError("bandwidth must be positive")


@dataclass(frozen=True)
class SimulationResult:
    estimate: float
    standard_error: float
    ci95: tuple
    sample_count: int


@dataclass(frozen=True)
class SurrogateBiasReport:
    exact_estimate: float
    surrogate_estimate: float
    absolute_gap: float
    relative_gap: float
    gap_standard_error: float
    surrogate: CombinerSpec


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, 0, block]))


def _block_snrs(branches: Sequence[EgkParams], seed: int, block: int, n: int) -> np.ndarray:
    """Branch SNRs of samples [block*B, block*B + n); always draws the full block."""
    rng = _block_rng(seed, block)
    cols = [egk_sample(b, rng, BLOCK_SIZE) for b in branches]
    return np.stack(cols, axis=-1)[:n]


def _stats(x: np.ndarray):
    mean = float(np.mean(x))
    return len(x), mean, float(np.sum((x - mean) ** 2))


def _merge(a, b):
    """Chan et al. pairwise update of (count, mean, M2)."""
    na, ma, sa = a
    nb, mb, sb = b
    n = na + nb
    d = mb - ma
    return n, ma + d * nb / n, sa + sb + d * d * na * nb / n


def _tree(stats):
    while len(stats) > 1:
        nxt = [_merge(stats[i], stats[i + 1]) for i in range(0, len(stats) - 1, 2)]
        if len(stats) % 2:
            nxt.append(stats[-1])
        stats = nxt
    return stats[0]


def _block_sizes(n: int):
    full, rest = divmod(n, BLOCK_SIZE)
    return [BLOCK_SIZE] * full + ([rest] if rest else [])


def _capacity_block(args):
    branches, scheme, seed, block, n, bandwidth = args
    g = combine_snr(scheme, _block_snrs(branches, seed, block, n))
    return _stats(bandwidth * np.log1p(g) / math.log(2.0))


def _bias_block(args):
    branches, scheme, spec, seed, block, n, bandwidth = args
    snrs = _block_snrs(branches, seed, block, n)
    exact = bandwidth * np.log1p(combine_snr(scheme, snrs)) / math.log(2.0)
    surr = bandwidth * np.log1p(spec.combine(snrs)) / math.log(2.0)
    return _stats(exact), _stats(surr), _stats(surr - exact)


def _run(fn, jobs, workers):
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _summary(stat) -> SimulationResult:
    n, mean, m2 = stat
    se = math.sqrt(m2 / (n - 1) / n) if n > 1 else math.inf
    return SimulationResult(mean, se, (mean - Z95 * se, mean + Z95 * se), n)


def simulate_capacity(plan: SimulationPlan, workers: int = 1) -> SimulationResult:
    """Sample-mean estimate of W log2(1 + gamma_end) with a normal 95% interval."""
    jobs = [(plan.branches, plan.scheme, plan.seed, k, n, plan.bandwidth)
            for k, n in enumerate(_block_sizes(plan.sample_count))]
    return _summary(_tree(_run(_capacity_block, jobs, workers)))


def simulate_surrogate_bias(plan: SimulationPlan, spec: CombinerSpec,
                            workers: int = 1) -> SurrogateBiasReport:
    """Capacity gap between the power-mean surrogate and the exact limit combiner.

    Both are evaluated on the same sample stream; the exact combiner is the
    plan's scheme.
    """
    if not Scheme.parse(spec.scheme).is_limit:
        raise DomainError(f"{spec.scheme} is not a limit scheme")
    if spec.L != len(plan.branches):
        raise DomainError("surrogate branch count does not match the plan")
    jobs = [(plan.branches, plan.scheme, spec, plan.seed, k, n, plan.bandwidth)
            for k, n in enumerate(_block_sizes(plan.sample_count))]
    parts = _run(_bias_block, jobs, workers)
    exact = _summary(_tree([p[0] for p in parts]))
    surr = _summary(_tree([p[1] for p in parts]))
    diff = _summary(_tree([p[2] for p in parts]))
    gap = surr.estimate - exact.estimate
    rel = gap / exact.estimate if exact.estimate else 0.0
    return SurrogateBiasReport(exact.estimate, surr.estimate, abs(gap), rel,
                               diff.standard_error, spec)
