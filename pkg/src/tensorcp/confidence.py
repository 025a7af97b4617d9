"""Confidence intervals for detected change-point locations.

The location error of a single change is approximated by
``(zeta / a)^2 * argmax_r {-|r|/2 + W(r)}`` with ``W`` a two-sided Brownian
motion. ``a`` and ``zeta`` are plug-in estimates from the two segments
adjacent to the change; the argmax quantiles come from Monte Carlo.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .detector import Detection, DetectorConfig
from .tensor import TensorSeq

__all__ = [
    "GridSpec",
    "GridTooSmall",
    "JumpEstimate",
    "CIResult",
    "estimate_jump",
    "brownian_argmax_draws",
    "brownian_argmax_quantiles",
    "argmax_cdf",
    "argmax_quantile",
    "ci_for_changepoint",
]

LAMBDA_FLOOR = 1e-6
BOUNDARY_TOLERANCE = 1e-3


class GridTooSmall(RuntimeError):
    """Too many simulated argmaxes landed on the grid edge."""

    def __init__(self, radius: float, fraction: float):
        self.radius = radius
        self.fraction = fraction
        self.suggested_radius = 2 * radius
        super().__init__(
            f"argmax hit the grid edge in {fraction:.3%} of paths at radius {radius}; "
            f"try radius >= {self.suggested_radius}"
        )


@dataclass(frozen=True)
class GridSpec:
    """Random-walk grid on ``[-radius, radius]`` with spacing ``step``."""

    step: float = 0.05
    radius: float = 50.0

    def __post_init__(self):
        if not (self.step > 0 and self.radius > self.step):
            raise ValueError(f"need 0 < step < radius, got step={self.step}, radius={self.radius}")

    @property
    def points_per_side(self) -> int:
        return int(round(self.radius / self.step))


@dataclass(frozen=True, eq=False)
class JumpEstimate:
    k: int
    support: np.ndarray
    jump: np.ndarray
    a_k: float
    zeta_k: float
    flags: tuple[str, ...] = ()

    @property
    def scale(self) -> float:
        """``(zeta_k / a_k)^2``."""
        return (self.zeta_k / self.a_k) ** 2


@dataclass(frozen=True)
class CIResult:
    k: int
    level: float
    center: int
    lower: int | None
    upper: int | None
    q_lo: float | None = None
    q_hi: float | None = None
    scale: float | None = None
    alpha: int | None = None
    paths: int = 0
    grid: GridSpec = field(default_factory=GridSpec)
    seed: int | None = None
    flags: tuple[str, ...] = ()

    @property
    def available(self) -> bool:
        return self.lower is not None

    @property
    def normalized(self) -> tuple[float, float] | None:
        """Endpoints divided by the window size."""
        if not self.available or not self.alpha:
            return None
        return self.lower / self.alpha, self.upper / self.alpha

    def covers(self, z: int) -> bool:
        return self.available and self.lower <= z <= self.upper

    def to_dict(self) -> dict:
        d = asdict(self)
        d["flags"] = list(self.flags)
        return d


def _segment_bounds(detection: Detection, k: int, n: int) -> tuple[int, int, int]:
    locs = detection.locations
    if not 1 <= k <= len(locs):
        raise IndexError(f"change {k} not among the {len(locs)} detected")
    left = locs[k - 2] if k >= 2 else 0
    right = locs[k] if k < len(locs) else n
    return left, locs[k - 1], right


def estimate_jump(
    seq: TensorSeq,
    detection: Detection,
    k: int,
    hard_threshold: float | None = None,
) -> JumpEstimate:
    """Plug-in jump, support and scale constants for the ``k``-th change.

    Segment means are taken over ``(z_{k-1}, z_k]`` and ``(z_k, z_{k+1}]``
    using the detected locations. ``Lambda`` is the diagonal of residual
    standard deviations and ``Sigma`` the residual covariance, both restricted
    to the support ``{j : |jump_j| > hard_threshold}``.

    Parameters
    ----------
    hard_threshold : float, optional
        Defaults to ``sqrt(l_n(s))`` of the detection's configuration.
    """
    left, z, right = _segment_bounds(detection, k, seq.n)
    alpha = detection.alpha
    if z - left < alpha or right - z < alpha:
        raise ValueError(
            f"segments around change {k} have lengths {z - left} and {right - z}; "
            f"both must be >= alpha = {alpha}"
        )
    if hard_threshold is None:
        config = detection.config or DetectorConfig()
        hard_threshold = math.sqrt(config.screening_params(seq.n).threshold)
    before, after = seq.data[left:z], seq.data[z:right]
    jump_full = after.mean(axis=0) - before.mean(axis=0)
    support = np.flatnonzero(np.abs(jump_full) > hard_threshold)
    flags: list[str] = []
    if support.size == 0:
        return JumpEstimate(k, support, jump_full[support], 0.0, 0.0, ("empty support",))

    resid = np.vstack([before - before.mean(axis=0), after - after.mean(axis=0)])[:, support]
    dof = resid.shape[0] - 2
    sd = np.sqrt((resid * resid).sum(axis=0) / dof)
    if np.any(sd < LAMBDA_FLOOR):
        flags.append("residual variance floored")
        sd = np.maximum(sd, LAMBDA_FLOOR)
    # correlation-type matrix Lambda^-1 Sigma Lambda^-1 on the support
    std_resid = resid / sd
    corr = std_resid.T @ std_resid / dof
    m = support.size
    if np.linalg.eigvalsh(corr)[0] <= 1e-12 * max(np.trace(corr), 1.0):
        flags.append("covariance regularized")
        corr = corr + 1e-8 * np.trace(corr) / m * np.eye(m)
    gamma = jump_full[support] / sd
    a_k = float(gamma @ gamma)
    zeta_sq = float(gamma @ corr @ gamma)
    return JumpEstimate(k, support, jump_full[support], a_k, math.sqrt(max(zeta_sq, 0.0)), tuple(flags))


def _argmax_block(seed_seq: np.random.SeedSequence, paths: int, grid: GridSpec) -> tuple[np.ndarray, int]:
    rng = np.random.Generator(np.random.Philox(seed_seq))
    m, h = grid.points_per_side, grid.step
    drift = (-0.5 * h * np.arange(1, m + 1)).astype(np.float32)
    root_h = np.float32(math.sqrt(h))
    best = np.zeros(paths, dtype=np.float32)
    where = np.zeros(paths)
    edge = np.zeros(paths, dtype=bool)
    for sign in (1.0, -1.0):
        walk = np.cumsum(rng.standard_normal((paths, m), dtype=np.float32), axis=1) * root_h + drift
        idx = walk.argmax(axis=1)
        peak = walk[np.arange(paths), idx]
        better = peak > best
        best = np.where(better, peak, best)
        where = np.where(better, sign * (idx + 1) * h, where)
        edge = np.where(better, idx == m - 1, edge)
    return where, int(edge.sum())


def brownian_argmax_draws(
    paths: int = 100_000,
    grid: GridSpec | None = None,
    seed: int = 0,
    block: int = 2_000,
    workers: int = 1,
) -> tuple[np.ndarray, int]:
    """Simulated ``argmax_r {-|r|/2 + W(r)}`` and the count of edge hits.

    Paths are split into blocks with seeds spawned from ``seed``, so the draws
    depend on ``(paths, grid, seed, block)`` only, not on ``workers``, and the
    draws for ``2 * paths`` start with the draws for ``paths``.
    """
    grid = grid or GridSpec()
    sizes = [block] * (paths // block) + ([paths % block] if paths % block else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(seeds, sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: _argmax_block(job[0], job[1], grid), jobs))
    else:
        results = [_argmax_block(s, b, grid) for s, b in jobs]
    draws = np.concatenate([r[0] for r in results])
    return draws, sum(r[1] for r in results)


def brownian_argmax_quantiles(
    scale: float = 1.0,
    level: float = 0.05,
    paths: int = 100_000,
    grid: GridSpec | None = None,
    seed: int = 0,
    widen: bool = True,
    workers: int = 1,
) -> tuple[float, float]:
    """``level/2`` and ``1 - level/2`` quantiles of ``scale * argmax``.

    ``level`` is the miscoverage, so ``0.05`` gives a 95% interval. The law
    is symmetric, so both tails are estimated together from ``|argmax|`` and
    ``q_lo = -q_hi``. When more than 0.1% of paths peak on the grid edge the
    radius is doubled (up to three times) if ``widen``, otherwise
    :class:`GridTooSmall` is raised.
    """
    if paths < 10_000:
        raise ValueError(f"need at least 10000 paths, got {paths}")
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    grid = grid or GridSpec()
    for attempt in range(4):
        draws, edges = brownian_argmax_draws(paths, grid, seed, workers=workers)
        fraction = edges / paths
        if fraction <= BOUNDARY_TOLERANCE:
            break
        if not widen or attempt == 3:
            raise GridTooSmall(grid.radius, fraction)
        grid = GridSpec(grid.step, 2 * grid.radius)
    q_hi = float(np.quantile(np.abs(draws), 1 - level))
    return -scale * q_hi, scale * q_hi


def _phi_tail(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2))


def argmax_cdf(x: float) -> float:
    """Closed-form ``P(argmax_r {-|r|/2 + W(r)} <= x)``."""
    if x < 0:
        return 1.0 - argmax_cdf(-x)
    if x > 600:
        return 1.0
    r = math.sqrt(x)
    return (
        1.0
        + math.sqrt(x / (2 * math.pi)) * math.exp(-x / 8)
        - (x + 5) / 2 * _phi_tail(r / 2)
        + 1.5 * math.exp(x) * _phi_tail(1.5 * r)
    )


def argmax_quantile(prob: float, tol: float = 1e-10) -> float:
    """Inverse of :func:`argmax_cdf` by bisection."""
    if not 0 < prob < 1:
        raise ValueError(f"prob must lie in (0, 1), got {prob}")
    if prob < 0.5:
        return -argmax_quantile(1 - prob, tol)
    lo, hi = 0.0, 600.0
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if argmax_cdf(mid) < prob:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def ci_for_changepoint(
    seq: TensorSeq,
    detection: Detection,
    k: int,
    level: float = 0.95,
    paths: int = 100_000,
    grid: GridSpec | None = None,
    seed: int = 0,
    hard_threshold: float | None = None,
    quantiles: tuple[float, float] | None = None,
    workers: int = 1,
) -> CIResult:
    """Confidence interval ``[z - floor(q_hi) - 1, z - floor(q_lo) + 1]``.

    ``level`` is the confidence level. ``quantiles`` may carry precomputed
    unit-scale argmax quantiles ``(q_lo, q_hi)`` to skip the simulation; they
    are multiplied by the change's own scale. A change with an empty support
    returns an unavailable interval instead of raising.
    """
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    grid = grid or GridSpec()
    est = estimate_jump(seq, detection, k, hard_threshold)
    z = detection.locations[k - 1]
    base = dict(k=k, level=level, center=z, alpha=detection.alpha, paths=paths, grid=grid, seed=seed)
    if est.support.size == 0 or est.a_k <= 0:
        return CIResult(lower=None, upper=None, flags=est.flags + ("ci unavailable",), **base)
    scale = est.scale
    if quantiles is None:
        q_lo, q_hi = brownian_argmax_quantiles(scale, 1 - level, paths, grid, seed, workers=workers)
    else:
        q_lo, q_hi = scale * quantiles[0], scale * quantiles[1]
    lower = z - math.floor(q_hi) - 1
    upper = z - math.floor(q_lo) + 1
    return CIResult(
        lower=lower, upper=upper, q_lo=q_lo, q_hi=q_hi, scale=scale, flags=est.flags, **base
    )
