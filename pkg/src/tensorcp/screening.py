"""Signal-screening norm and its tuning constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from enum import Enum
from typing import Mapping

import numpy as np

__all__ = [
    "Mode",
    "ConfigError",
    "ScreeningParams",
    "default_alpha",
    "derive_params",
    "screening_norm",
    "screening_norms",
    "in_signal_set",
]


class ConfigError(ValueError):
    """Invalid tuning constant or detector configuration."""


class Mode(str, Enum):
    SFD = "sfd"
    MSFD = "msfd"


def default_alpha(n: int) -> int:
    """Recommended window ``floor(2 n^{3/4} / 9)``."""
    return math.floor(2 * n**0.75 / 9)


@dataclass(frozen=True)
class ScreeningParams:
    """Window and thresholds shared by the screening norm and the ridge.

    ``eps_n = (log n)^(1/2 + eps) / sqrt(alpha)`` and
    ``threshold = s * eps_n * sqrt(log n)``. ``ridge_growth`` selects the
    factor multiplying ``s1 * eps_n`` in the ridge: ``"log"`` uses
    ``(log n)^nu`` and ``"power"`` uses ``n^nu``.
    """

    n: int
    alpha: int
    eps: float = 0.05
    s: float = 0.05
    s1: float = 0.02
    nu: float = 0.55
    ridge_growth: str = "log"

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"n must be >= 2, got {self.n}")
        if self.alpha < 1:
            raise ConfigError(f"alpha must be >= 1, got {self.alpha}")
        if not self.eps > 0:
            raise ConfigError(f"eps must be > 0, got {self.eps}")
        if not self.nu > 0.5:
            raise ConfigError(f"nu must be > 1/2, got {self.nu}")
        if not (self.s > 0 and self.s1 > 0):
            raise ConfigError(f"s and s1 must be > 0, got s={self.s}, s1={self.s1}")
        if self.ridge_growth not in ("log", "power"):
            raise ConfigError(f"ridge_growth must be 'log' or 'power', got {self.ridge_growth!r}")

    @property
    def eps_n(self) -> float:
        return math.log(self.n) ** (0.5 + self.eps) / math.sqrt(self.alpha)

    @property
    def threshold(self) -> float:
        """``l_n(s)``; squared MOSUM entries must exceed it to count as signal."""
        return self.s * self.eps_n * math.sqrt(math.log(self.n))

    @property
    def ridge_scale(self) -> float:
        """Ridge numerator ``s1 * eps_n * g(n)``."""
        growth = math.log(self.n) if self.ridge_growth == "log" else float(self.n)
        return self.s1 * self.eps_n * growth**self.nu


def derive_params(
    n: int,
    shape=None,
    mode: Mode | str = Mode.SFD,
    overrides: Mapping[str, object] | None = None,
) -> ScreeningParams:
    """Recommended constants for a sequence of length ``n``.

    ``s1 = 1/50`` in both modes; ``s = 2.5 * s1`` for SFD and ``10 * s1`` for
    MSFD. When ``overrides`` sets ``s1`` but not ``s``, ``s`` follows the
    per-mode multiple of the new ``s1``. ``shape`` is accepted for symmetry
    with the detector configuration and does not affect the defaults.
    """
    if n < 30:
        raise ConfigError(f"n must be >= 30 for the default window, got {n}")
    mode = Mode(mode)
    overrides = dict(overrides or {})
    known = {f.name for f in fields(ScreeningParams)} - {"n"}
    unknown = set(overrides) - known
    if unknown:
        raise ConfigError(f"unknown screening parameters: {sorted(unknown)}")
    if overrides.get("alpha") in (None, "auto"):
        overrides.pop("alpha", None)
    s1 = float(overrides.get("s1", 0.02))
    multiple = 2.5 if mode is Mode.SFD else 10.0
    base = dict(alpha=default_alpha(n), eps=0.05, s=multiple * s1, s1=s1, nu=0.55)
    base.update(overrides)
    try:
        params = ScreeningParams(n=n, **base)
        params = replace(params, alpha=int(params.alpha))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return params


def screening_norm(values, l: float, n: int) -> float:
    """``sum(v^2 [v^2 > l]) / (#{v^2 > l} + 1/n)`` for one flattened tensor.

    >>> round(screening_norm([2.0], 1.0, 100), 6)
    3.960396
    """
    norm, _ = screening_norms(np.ravel(np.asarray(values, dtype=np.float64)), l, n)
    return float(norm)


def screening_norms(values: np.ndarray, l: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise screening norm over the last axis, plus signal-set membership.

    Works for ``(m, p)`` fields and for ``(m, slices, q)`` slice groupings.
    """
    sq = values * values
    keep = sq > l
    num = np.where(keep, sq, 0.0).sum(axis=-1)
    count = keep.sum(axis=-1)
    return num / (count + 1.0 / n), count > 0


def in_signal_set(values, l: float) -> bool:
    """True iff some element has ``v^2 > l``."""
    v = np.ravel(np.asarray(values, dtype=np.float64))
    return bool(np.any(v * v > l))
