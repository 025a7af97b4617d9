"""Moving-sum differences of a tensor sequence.

For window size ``alpha`` the MOSUM at (1-based) time ``i`` is

    D(i) = (sum_{t=i}^{i+alpha-1} X_t - sum_{t=i+alpha}^{i+2alpha-1} X_t) / alpha

computed element-wise over the flattened tensors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tensor import Shape, TensorSeq

__all__ = [
    "SequenceTooShort",
    "MosumField",
    "mosum_field",
    "mosum_naive",
    "population_mosum",
    "piecewise_mean",
]

# n * alpha beyond which compensated summation is switched on automatically
COMPENSATE_ABOVE = 10_000_000


class SequenceTooShort(ValueError):
    """Raised when ``n < 3 * alpha``."""

    def __init__(self, n: int, alpha: int):
        self.n, self.alpha, self.minimum = n, alpha, 3 * alpha
        super().__init__(
            f"sequence of length {n} is too short for window {alpha}: "
            f"need n >= 3*alpha = {3 * alpha}"
        )


@dataclass(frozen=True, eq=False)
class MosumField:
    """MOSUM rows for ``i = 1 .. n - 2*alpha + 1``.

    ``values[i - 1]`` is the flattened ``D_n(i)``.
    """

    alpha: int
    n: int
    shape: Shape
    values: np.ndarray

    @property
    def start(self) -> int:
        return 1

    @property
    def end(self) -> int:
        return self.n - 2 * self.alpha + 1

    def row(self, i: int) -> np.ndarray:
        if not self.start <= i <= self.end:
            raise IndexError(f"i={i} outside valid range {self.start}..{self.end}")
        return self.values[i - 1]


def _check(n: int, alpha: int) -> None:
    if alpha < 1:
        raise ValueError(f"window size must be >= 1, got {alpha}")
    if n < 3 * alpha:
        raise SequenceTooShort(n, alpha)


def _window_sums(x: np.ndarray, alpha: int, compensated: bool) -> np.ndarray:
    """Sums of ``x[j : j + alpha]`` for every start ``j``, by sliding update."""
    n = x.shape[0]
    out = np.empty((n - alpha + 1, x.shape[1]))
    s = x[:alpha].sum(axis=0)
    out[0] = s
    if not compensated:
        for j in range(1, n - alpha + 1):
            s = s + x[j + alpha - 1] - x[j - 1]
            out[j] = s
        return out
    comp = np.zeros_like(s)
    for j in range(1, n - alpha + 1):
        for v in (x[j + alpha - 1], -x[j - 1]):
            y = v - comp
            t = s + y
            comp = (t - s) - y
            s = t
        out[j] = s
    return out


def _field_from_array(x: np.ndarray, alpha: int, compensated: bool | None) -> np.ndarray:
    n = x.shape[0]
    if compensated is None:
        compensated = n * alpha > COMPENSATE_ABOVE
    w = _window_sums(x, alpha, compensated)
    m = n - 2 * alpha + 1
    return (w[:m] - w[alpha : alpha + m]) / alpha


def mosum_field(seq: TensorSeq, alpha: int, compensated: bool | None = None) -> MosumField:
    """MOSUM of every element for all valid ``i``.

    Parameters
    ----------
    seq : TensorSeq
    alpha : int
        Window size; ``seq.n >= 3 * alpha`` is required because downstream
        ratios also look at ``D_n(i + alpha)``.
    compensated : bool, optional
        Kahan-compensated window updates. Defaults to on only when
        ``n * alpha`` exceeds ``COMPENSATE_ABOVE``.
    """
    _check(seq.n, alpha)
    values = _field_from_array(seq.data, alpha, compensated)
    return MosumField(alpha=alpha, n=seq.n, shape=seq.shape, values=values)


def mosum_naive(seq: TensorSeq, alpha: int, i: int) -> np.ndarray:
    """Direct double loop evaluation of ``D_n(i)``; test oracle only."""
    _check(seq.n, alpha)
    if not 1 <= i <= seq.n - 2 * alpha + 1:
        raise IndexError(f"i={i} outside valid range 1..{seq.n - 2 * alpha + 1}")
    x = seq.data
    out = np.zeros(seq.p)
    for j in range(seq.p):
        first = 0.0
        second = 0.0
        for t in range(i, i + alpha):
            first += x[t - 1, j]
        for t in range(i + alpha, i + 2 * alpha):
            second += x[t - 1, j]
        out[j] = (first - second) / alpha
    return out


def _check_changepoints(changepoints: Sequence[int], n: int) -> list[int]:
    cps = [int(z) for z in changepoints]
    prev = 1
    for z in cps:
        if z <= prev or z >= n:
            raise ValueError(
                f"change points must satisfy 1 < z_1 < ... < z_K < n={n}, got {cps}"
            )
        prev = z
    return cps


def piecewise_mean(means: Sequence, changepoints: Sequence[int], n: int) -> np.ndarray:
    """``(n, p)`` array with ``E(X_i) = means[k]`` for ``z_k < i <= z_{k+1}``."""
    cps = _check_changepoints(changepoints, n)
    means = [np.ravel(np.asarray(m, dtype=np.float64)) for m in means]
    if len(means) != len(cps) + 1:
        raise ValueError(f"{len(cps)} change points need {len(cps) + 1} segment means")
    bounds = [0] + cps + [n]
    out = np.empty((n, means[0].size))
    for k, m in enumerate(means):
        out[bounds[k] : bounds[k + 1]] = m
    return out


def population_mosum(
    means: Sequence,
    changepoints: Sequence[int],
    n: int,
    alpha: int,
    shape=None,
) -> MosumField:
    """Exact MOSUM of a piecewise-constant mean sequence.

    Computed from prefix sums of the segment means in closed form, independent
    of the sliding update used by :func:`mosum_field`.
    """
    _check(n, alpha)
    mu = piecewise_mean(means, changepoints, n)
    shape = Shape(shape) if shape is not None else Shape((mu.shape[1],))
    cps = [int(z) for z in changepoints]
    bounds = [0] + cps + [n]
    seg_means = [np.ravel(np.asarray(m, dtype=np.float64)) for m in means]

    def window(a: int, b: int) -> np.ndarray:
        # sum of E(X_t) for 1-based t in a..b
        total = np.zeros(mu.shape[1])
        for k, m in enumerate(seg_means):
            lo, hi = max(a, bounds[k] + 1), min(b, bounds[k + 1])
            if hi >= lo:
                total += (hi - lo + 1) * m
        return total

    rows = n - 2 * alpha + 1
    values = np.empty((rows, mu.shape[1]))
    for i in range(1, rows + 1):
        values[i - 1] = (window(i, i + alpha - 1) - window(i + alpha, i + 2 * alpha - 1)) / alpha
    return MosumField(alpha=alpha, n=n, shape=shape, values=values)
