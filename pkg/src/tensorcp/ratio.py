"""Ridge-ratio signal statistics built on screened MOSUM norms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mosum import MosumField, mosum_field
from .screening import ScreeningParams, screening_norms
from .tensor import TensorSeq, slice_columns

__all__ = [
    "RatioSeries",
    "ridge_value",
    "ridge_values",
    "ratio_series_sfd",
    "ratio_series_msfd",
    "ratio_from_norms",
]


@dataclass(frozen=True, eq=False)
class RatioSeries:
    """Ratio statistic for ``i = 1 .. n - 3*alpha + 1`` (``t[i - 1]``).

    For the slice-wise statistic, ``slice_t``, ``ridge`` and ``in_s`` have one
    row per slice and ``t`` is their column-wise minimum. For the pooled
    statistic they are 1-D and ``slice_t`` is ``None``.
    """

    alpha: int
    n: int
    t: np.ndarray
    ridge: np.ndarray
    in_s: np.ndarray
    norms: np.ndarray
    slice_t: np.ndarray | None = None
    structural_mode: int | None = None

    @property
    def start(self) -> int:
        return 1

    @property
    def end(self) -> int:
        return self.n - 3 * self.alpha + 1

    def __len__(self) -> int:
        return self.t.shape[0]

    def at(self, i: int) -> float:
        return float(self.t[i - 1])

    def indices(self) -> np.ndarray:
        return np.arange(1, len(self) + 1)


def ridge_value(in_s: bool, params: ScreeningParams) -> float:
    """``s1 eps_n g(n) / (1{i in S} + 1/n)``."""
    return params.ridge_scale / (float(bool(in_s)) + 1.0 / params.n)


def ridge_values(in_s: np.ndarray, params: ScreeningParams) -> np.ndarray:
    return params.ridge_scale / (in_s.astype(np.float64) + 1.0 / params.n)


def ratio_from_norms(
    norms: np.ndarray, in_s: np.ndarray, alpha: int, params: ScreeningParams
) -> tuple[np.ndarray, np.ndarray]:
    """Ratios and ridges from per-``i`` norms over the last axis.

    ``norms[..., i-1]`` is the screened norm of ``D_n(i)``; the ridge uses
    membership of the numerator index only.
    """
    length = norms.shape[-1] - alpha
    ridge = ridge_values(in_s[..., :length], params)
    t = (norms[..., :length] + ridge) / (norms[..., alpha : alpha + length] + ridge)
    return t, ridge


def ratio_series_sfd(field: MosumField, params: ScreeningParams) -> RatioSeries:
    """Pooled statistic ``T_n(i)`` screening all tensor elements together."""
    if field.alpha != params.alpha:
        raise ValueError(f"field window {field.alpha} != params window {params.alpha}")
    norms, in_s = screening_norms(field.values, params.threshold, params.n)
    t, ridge = ratio_from_norms(norms, in_s, field.alpha, params)
    return RatioSeries(
        alpha=field.alpha,
        n=field.n,
        t=t,
        ridge=ridge,
        in_s=in_s[: t.shape[0]],
        norms=norms,
    )


def ratio_series_msfd(
    seq: TensorSeq,
    structural_mode: int,
    params: ScreeningParams,
    field: MosumField | None = None,
) -> RatioSeries:
    """Slice-wise statistic ``T_n^v(i) = min_l T_nl(i)`` along ``structural_mode``.

    The MOSUM is element-wise, so each slice's MOSUM is a column group of the
    full field; it is computed once and regrouped.
    """
    if field is None:
        field = mosum_field(seq, params.alpha)
    grouped = slice_columns(field.values, seq.shape, structural_mode)
    norms, in_s = screening_norms(grouped, params.threshold, params.n)
    # (rows, slices) -> (slices, rows)
    norms, in_s = norms.T, in_s.T
    slice_t, ridge = ratio_from_norms(norms, in_s, field.alpha, params)
    return RatioSeries(
        alpha=field.alpha,
        n=field.n,
        t=slice_t.min(axis=0),
        ridge=ridge,
        in_s=in_s[:, : slice_t.shape[1]],
        norms=norms,
        slice_t=slice_t,
        structural_mode=structural_mode,
    )
