"""Seeded piecewise-constant tensor sequences for simulation studies."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .mosum import piecewise_mean
from .screening import default_alpha
from .tensor import Shape, TensorSeq

__all__ = [
    "NoiseModel",
    "SimSpec",
    "DESIGN_N",
    "DESIGN_CHANGEPOINTS",
    "make_rng",
    "spawn_seeds",
    "ar_covariance",
    "alternating_means",
    "gen_custom",
    "gen_dense_order1",
    "gen_sparse_order1",
    "gen_null",
    "gen_order2",
    "order2_means",
]

DESIGN_N = 1800
DESIGN_CHANGEPOINTS = (200, 400, 600, 800, 1000, 1200, 1400, 1600)


def make_rng(seed) -> np.random.Generator:
    """Counter-based generator so replications can use independent streams."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn_seeds(master_seed: int, count: int) -> list[int]:
    """Deterministic per-replication seeds derived from ``master_seed``."""
    children = np.random.SeedSequence(master_seed).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def ar_covariance(p: int, rho: float = 0.8) -> np.ndarray:
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


@dataclass
class NoiseModel:
    """Additive noise: ``iid`` N(0, sigma^2), ``row`` (last-mode vectors ~ N(0, cov))
    or ``elementwise`` (independent N(0, sigma_j^2) per element)."""

    kind: str = "iid"
    sigma: float | np.ndarray = 1.0
    cov: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("iid", "row", "elementwise"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "row" and self.cov is None:
            raise ValueError("row noise needs a covariance matrix")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "sigma": np.asarray(self.sigma).tolist()}
        if self.cov is not None:
            d["cov"] = np.asarray(self.cov).tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        sigma = d.get("sigma", 1.0)
        sigma = float(sigma) if np.ndim(sigma) == 0 else np.asarray(sigma, dtype=float)
        cov = d.get("cov")
        return cls(kind=d.get("kind", "iid"), sigma=sigma,
                   cov=None if cov is None else np.asarray(cov, dtype=float))


@dataclass
class SimSpec:
    """Ground truth for a simulated sequence."""

    n: int
    shape: Shape
    changepoints: list[int]
    means: list[np.ndarray]
    noise: NoiseModel = field(default_factory=NoiseModel)
    seed: int = 0
    label: str = ""

    def __post_init__(self):
        self.shape = self.shape if isinstance(self.shape, Shape) else Shape(self.shape)
        self.changepoints = [int(z) for z in self.changepoints]
        self.means = [np.asarray(m, dtype=np.float64).reshape(self.shape.dims) for m in self.means]

    @property
    def K(self) -> int:
        return len(self.changepoints)

    @property
    def min_spacing(self) -> int:
        bounds = [0] + self.changepoints + [self.n]
        return min(b - a for a, b in zip(bounds, bounds[1:]))

    def validate(self) -> list[str]:
        """Raise on structural errors, return (and warn) soft problems."""
        piecewise_mean(self.means, self.changepoints, self.n)
        if self.noise.kind == "row":
            q = self.shape.dims[-1]
            if np.shape(self.noise.cov) != (q, q):
                raise ValueError(f"row covariance must be {q}x{q}")
        if self.noise.kind == "elementwise" and np.size(self.noise.sigma) != self.shape.size:
            raise ValueError("elementwise sigma needs one value per tensor element")
        issues = []
        alpha = default_alpha(self.n) if self.n >= 30 else 1
        if self.K and self.min_spacing < 2 * alpha:
            issues.append(
                f"minimum spacing {self.min_spacing} < 2*alpha = {2 * alpha}; "
                "consistency is not guaranteed"
            )
        for k in range(self.K):
            if np.array_equal(self.means[k], self.means[k + 1]):
                issues.append(f"segments {k + 1} and {k + 2} share a mean; change {k + 1} is void")
        for msg in issues:
            warnings.warn(msg, stacklevel=2)
        return issues

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "shape": list(self.shape.dims),
            "changepoints": self.changepoints,
            "means": [m.tolist() for m in self.means],
            "noise": self.noise.to_dict(),
            "seed": int(self.seed),
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimSpec":
        return cls(
            n=int(d["n"]),
            shape=Shape(d["shape"]),
            changepoints=d["changepoints"],
            means=d["means"],
            noise=NoiseModel.from_dict(d.get("noise", {})),
            seed=int(d.get("seed", 0)),
            label=d.get("label", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SimSpec":
        return cls.from_dict(json.loads(text))


def _noise(spec: SimSpec, rng: np.random.Generator) -> np.ndarray:
    n, dims = spec.n, spec.shape.dims
    z = rng.standard_normal((n,) + dims)
    nm = spec.noise
    if nm.kind == "iid":
        return z * float(nm.sigma)
    if nm.kind == "elementwise":
        return z * np.asarray(nm.sigma, dtype=float).reshape(dims)
    cov = np.asarray(nm.cov, dtype=float)
    if np.array_equal(cov, np.eye(cov.shape[0])):
        return z
    chol = np.linalg.cholesky(cov)
    return z @ chol.T


def gen_custom(spec: SimSpec, seed=None) -> TensorSeq:
    """``X_i = M^(seg(i)) + noise``; deterministic in ``(spec, seed)``."""
    spec.validate()
    mu = piecewise_mean(spec.means, spec.changepoints, spec.n)
    rng = make_rng(spec.seed if seed is None else seed)
    noise = _noise(spec, rng).reshape(spec.n, spec.shape.size)
    return TensorSeq(mu + noise, spec.shape)


def alternating_means(a, b, k: int = len(DESIGN_CHANGEPOINTS)) -> list[np.ndarray]:
    """``k + 1`` segment means ``a, b, a, b, ...``."""
    return [np.asarray(a if j % 2 == 0 else b, dtype=float) for j in range(k + 1)]


def gen_dense_order1(p: int, signal: float = 0.4, seed=0, sigma: float = 1.0):
    """Nine segments alternating all-``1 + signal`` and all-``1`` means."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    spec = SimSpec(
        n=DESIGN_N,
        shape=Shape((p,)),
        changepoints=list(DESIGN_CHANGEPOINTS),
        means=alternating_means(np.full(p, 1.0 + signal), np.ones(p)),
        noise=NoiseModel("iid", sigma),
        seed=seed,
        label=f"dense p={p} signal={signal}",
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return gen_custom(spec), spec


def gen_sparse_order1(p: int, signal: float = 0.4, fraction: float = 0.1, seed=0):
    """Like :func:`gen_dense_order1` but only the first ``ceil(fraction*p)``
    coordinates change."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    q = int(np.ceil(fraction * p))
    high = np.ones(p)
    high[:q] += signal
    spec = SimSpec(
        n=DESIGN_N,
        shape=Shape((p,)),
        changepoints=list(DESIGN_CHANGEPOINTS),
        means=alternating_means(high, np.ones(p)),
        seed=seed,
        label=f"sparse p={p} signal={signal} fraction={fraction}",
    )
    return gen_custom(spec), spec


def gen_null(shape: Sequence[int], n: int = DESIGN_N, seed=0):
    """No change at all: constant mean one plus N(0, 1) noise."""
    shape = Shape(shape)
    spec = SimSpec(n=n, shape=shape, changepoints=[], means=[np.ones(shape.dims)],
                   seed=seed, label=f"null {shape.dims}")
    return gen_custom(spec), spec


def order2_means(p1: int, p2: int, design: str) -> tuple[np.ndarray, np.ndarray]:
    """Means of the odd and even segments of the matrix designs."""
    if design == "symmetric":
        if p2 != p1:
            raise ValueError(f"symmetric design needs p2 == p1, got {p1}x{p2}")
        return np.full((p1, p2), 1.4), np.ones((p1, p2))
    if design == "asymmetric":
        if p2 != 16 * p1:
            raise ValueError(f"asymmetric design needs p2 == 16*p1, got {p1}x{p2}")
        i = np.arange(1, p1 + 1)[:, None]
        j = np.arange(1, p2 + 1)[None, :]
        first = np.where(j <= i, 0.8 ** np.abs(i - j), 1.0)
        return first, np.ones((p1, p2))
    raise ValueError(f"unknown design {design!r}")


def gen_order2(
    p1: int,
    p2: int,
    design: str = "symmetric",
    correlated_rows: bool = True,
    seed=0,
    cov: np.ndarray | None = None,
):
    """Matrix sequences ``X_i = Sigma_i + E_i`` with independent rows of ``E_i``.

    With ``correlated_rows`` each row is N(0, cov) where ``cov`` defaults to
    ``0.8^|i-j|`` (``p2 x p2``); otherwise rows are N(0, I).
    """
    first, second = order2_means(p1, p2, design)
    if correlated_rows:
        cov = ar_covariance(p2) if cov is None else np.asarray(cov, dtype=float)
    else:
        cov = np.eye(p2)
    spec = SimSpec(
        n=DESIGN_N,
        shape=Shape((p1, p2)),
        changepoints=list(DESIGN_CHANGEPOINTS),
        means=alternating_means(first, second),
        noise=NoiseModel("row", cov=cov),
        seed=seed,
        label=f"order2 {design} {p1}x{p2}" + (" row-corr" if correlated_rows else ""),
    )
    return gen_custom(spec), spec
