"""Shapes, flat row-major storage and mode slicing for tensor sequences.

Public indices (multi-indices, slice numbers, modes) are 1-based; storage is a
plain ``(n, p)`` float64 array holding one flattened tensor per time point.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Sequence

import numpy as np

__all__ = [
    "Shape",
    "TensorSeq",
    "SliceSeq",
    "flatten_index",
    "unflatten_index",
    "slice_mode",
    "slice_columns",
]


@dataclass(frozen=True)
class Shape:
    """Dimensions ``(p_1, ..., p_kappa)`` of one tensor in a sequence."""

    dims: tuple[int, ...]

    def __init__(self, dims: Sequence[int]):
        dims = tuple(int(d) for d in dims)
        if len(dims) < 1:
            raise ValueError("a tensor shape needs at least one mode")
        if any(d < 1 for d in dims):
            raise ValueError(f"every dimension must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def order(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return prod(self.dims)

    def without_mode(self, mode: int) -> "Shape | None":
        """Shape left after fixing ``mode``; ``None`` for an order-1 tensor."""
        rest = self.dims[: mode - 1] + self.dims[mode:]
        return Shape(rest) if rest else None

    def __iter__(self):
        return iter(self.dims)

    def __len__(self) -> int:
        return len(self.dims)


def _as_shape(shape) -> Shape:
    return shape if isinstance(shape, Shape) else Shape(shape)


def flatten_index(multi_index: Sequence[int], shape) -> int:
    """Row-major linear index (0-based) of a 1-based multi-index.

    >>> flatten_index((2, 3), (3, 4))
    6
    """
    shape = _as_shape(shape)
    if len(multi_index) != shape.order:
        raise IndexError(
            f"multi-index has {len(multi_index)} components, shape has {shape.order}"
        )
    flat = 0
    for idx, dim in zip(multi_index, shape.dims):
        if not 1 <= idx <= dim:
            raise IndexError(f"index {tuple(multi_index)} out of range for {shape.dims}")
        flat = flat * dim + (idx - 1)
    return flat


def unflatten_index(flat: int, shape) -> tuple[int, ...]:
    """Inverse of :func:`flatten_index`."""
    shape = _as_shape(shape)
    if not 0 <= flat < shape.size:
        raise IndexError(f"linear index {flat} out of range for {shape.dims}")
    out = []
    for dim in reversed(shape.dims):
        flat, rem = divmod(flat, dim)
        out.append(rem + 1)
    return tuple(reversed(out))


@dataclass(frozen=True, eq=False)
class TensorSeq:
    """An immutable sequence of ``n`` tensors sharing one shape.

    Parameters
    ----------
    data : array_like
        Either ``(n, p)`` flattened rows or ``(n, p_1, ..., p_kappa)``.
    shape : Shape or sequence of int, optional
        Required when ``data`` is already flat and the tensors are not vectors.
    """

    data: np.ndarray
    shape: Shape

    def __init__(self, data, shape=None):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None]
        if shape is None:
            shape = Shape(arr.shape[1:])
        shape = _as_shape(shape)
        n = arr.shape[0]
        if arr.size != n * shape.size:
            raise ValueError(
                f"data holds {arr.size} values, expected n*p = {n}*{shape.size}"
            )
        arr = arr.reshape(n, shape.size)
        bad = ~np.isfinite(arr)
        if bad.any():
            t, j = np.argwhere(bad)[0]
            raise ValueError(
                f"non-finite value at time {t + 1}, element {unflatten_index(int(j), shape)}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "shape", shape)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.shape.size

    def tensors(self) -> np.ndarray:
        """Read-only view with shape ``(n, p_1, ..., p_kappa)``."""
        return self.data.reshape((self.n,) + self.shape.dims)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other):
        if not isinstance(other, TensorSeq):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class SliceSeq:
    """The mode-``mode`` slices at index ``l`` of a parent sequence.

    ``data`` is a strided view into the parent, never a copy.
    """

    parent_shape: Shape
    mode: int
    l: int
    data: np.ndarray

    @property
    def shape(self) -> Shape | None:
        return self.parent_shape.without_mode(self.mode)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def size(self) -> int:
        return self.parent_shape.size // self.parent_shape.dims[self.mode - 1]

    def flat(self) -> np.ndarray:
        """Slices as an ``(n, p / p_mode)`` array (copies if non-contiguous)."""
        return self.data.reshape(self.n, self.size)

    def as_seq(self) -> TensorSeq:
        return TensorSeq(self.flat(), self.shape or (1,))


def _check_mode(shape: Shape, mode: int) -> None:
    if not 1 <= mode <= shape.order:
        raise ValueError(f"mode must be in 1..{shape.order}, got {mode}")


def slice_mode(seq: TensorSeq, mode: int, l: int) -> SliceSeq:
    """Fix index ``l`` of mode ``mode`` (both 1-based) in every tensor."""
    _check_mode(seq.shape, mode)
    p_mode = seq.shape.dims[mode - 1]
    if not 1 <= l <= p_mode:
        raise ValueError(f"slice index must be in 1..{p_mode}, got {l}")
    view = seq.tensors()[(slice(None),) * mode + (l - 1,)]
    return SliceSeq(seq.shape, mode, l, view)


def slice_columns(values: np.ndarray, shape: Shape, mode: int) -> np.ndarray:
    """Regroup flattened rows ``(m, p)`` into ``(m, p_mode, p / p_mode)``.

    Row ``[:, l-1, :]`` holds the flattened mode-``mode`` slice ``l``.
    """
    _check_mode(shape, mode)
    m = values.shape[0]
    full = values.reshape((m,) + shape.dims)
    moved = np.moveaxis(full, mode, 1)
    return moved.reshape(m, shape.dims[mode - 1], shape.size // shape.dims[mode - 1])
