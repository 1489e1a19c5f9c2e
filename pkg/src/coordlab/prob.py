"""
Finite-alphabet probability arithmetic.

Distributions are dense numpy arrays wrapped in small immutable containers:

* ``JointTable`` -- a k-way joint distribution, one numpy axis per variable.
* ``Pmf``        -- a one-axis ``JointTable``.
* ``Channel``    -- a row-stochastic ``in_size x out_size`` table.

All information quantities are in bits.  File I/O uses the JSON layout
``{"axes": [sizes...], "probs": [row-major flat list]}`` with the last axis
varying fastest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

MASS_TOL = 1e-12
MI_CLAMP = 1e-10


class ShapeError(ValueError):
    """Raised when two tables live on incompatible alphabets."""


def _mass_tol(size: int) -> float:
    # accumulated rounding of long sums grows with the number of cells
    return MASS_TOL + 1e-15 * size


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class JointTable:
    """Joint pmf over a product of finite alphabets (axis ``i`` = variable ``i``)."""

    probs: np.ndarray

    def __post_init__(self):
        arr = _freeze(self.probs)
        if arr.ndim == 0 or arr.size == 0:
            raise ValueError("a joint table needs at least one non-empty axis")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
            raise ValueError("probabilities must be finite and non-negative")
        total = float(arr.sum())
        if abs(total - 1.0) > _mass_tol(arr.size):
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        object.__setattr__(self, "probs", arr)

    @property
    def axis_sizes(self) -> tuple:
        return tuple(self.probs.shape)

    @property
    def ndim(self) -> int:
        return self.probs.ndim

    @classmethod
    def from_flat(cls, axes: Sequence[int], probs: Sequence[float]) -> "JointTable":
        axes = [int(a) for a in axes]
        if any(a <= 0 for a in axes):
            raise ValueError("axis sizes must be positive")
        flat = np.asarray(probs, dtype=np.float64)
        if flat.size != int(np.prod(axes)):
            raise ShapeError(f"expected {int(np.prod(axes))} probabilities for axes {axes}, got {flat.size}")
        return cls(flat.reshape(axes))

    def to_json(self) -> dict:
        return {"axes": list(self.axis_sizes), "probs": self.probs.ravel().tolist()}

    def __repr__(self):
        return f"{type(self).__name__}(axes={list(self.axis_sizes)})"


class Pmf(JointTable):
    """Distribution of a single variable."""

    def __post_init__(self):
        super().__post_init__()
        if self.probs.ndim != 1:
            raise ShapeError("a Pmf has exactly one axis")

    @property
    def alphabet_size(self) -> int:
        return self.probs.shape[0]


@dataclass(frozen=True, eq=False)
class Channel:
    """Conditional distribution; ``rows[i, j] = P(out=j | in=i)``."""

    rows: np.ndarray = field()

    def __post_init__(self):
        arr = _freeze(self.rows)
        if arr.ndim != 2 or arr.size == 0:
            raise ShapeError("a channel is a non-empty 2-d table")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
            raise ValueError("channel entries must be finite and non-negative")
        sums = arr.sum(axis=1)
        bad = np.abs(sums - 1.0) > _mass_tol(arr.shape[1])
        if np.any(bad):
            raise ValueError(f"channel rows {np.flatnonzero(bad).tolist()} do not sum to 1")
        object.__setattr__(self, "rows", arr)

    @property
    def in_size(self) -> int:
        return self.rows.shape[0]

    @property
    def out_size(self) -> int:
        return self.rows.shape[1]

    @classmethod
    def identity(cls, size: int) -> "Channel":
        return cls(np.eye(size))

    @classmethod
    def constant(cls, in_size: int, out: Union[Pmf, Sequence[float]]) -> "Channel":
        out = np.asarray(out.probs if isinstance(out, JointTable) else out, dtype=np.float64)
        return cls(np.tile(out, (in_size, 1)))

    def to_json(self) -> dict:
        return {"axes": [self.in_size, self.out_size], "probs": self.rows.ravel().tolist()}

    def __repr__(self):
        return f"Channel({self.in_size}->{self.out_size})"


TableLike = Union[JointTable, np.ndarray, Sequence]


def as_table(p: TableLike) -> JointTable:
    if isinstance(p, JointTable):
        return p
    return JointTable(np.asarray(p, dtype=np.float64))


def as_channel(ch) -> Channel:
    if isinstance(ch, Channel):
        return ch
    return Channel(np.asarray(ch, dtype=np.float64))


def _axes(keep: Iterable[int], ndim: int) -> tuple:
    keep = tuple(int(a) for a in keep)
    for a in keep:
        if not 0 <= a < ndim:
            raise ValueError(f"axis {a} out of range for a {ndim}-axis table")
    if len(set(keep)) != len(keep):
        raise ValueError(f"repeated axis in {keep}")
    return keep


# ----------------------------------------------------------------------------
# distances and information measures
# ----------------------------------------------------------------------------


def tv_distance(p: TableLike, q: TableLike) -> float:
    """Total variation distance ``(1/2) sum |p - q|``."""
    pa = p.probs if isinstance(p, JointTable) else np.asarray(p, dtype=np.float64)
    qa = q.probs if isinstance(q, JointTable) else np.asarray(q, dtype=np.float64)
    if pa.shape != qa.shape:
        raise ShapeError(f"incompatible alphabets {pa.shape} vs {qa.shape}")
    return float(0.5 * np.abs(pa - qa).sum())


def _entropy_array(arr: np.ndarray) -> float:
    nz = arr[arr > 0.0]
    return float(-(nz * np.log2(nz)).sum())


def entropy(p: TableLike) -> float:
    """Shannon entropy in bits, with ``0 log 0 = 0``."""
    return max(_entropy_array(as_table(p).probs), 0.0)


def binary_entropy(t: float) -> float:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"binary entropy is defined on [0, 1], got {t!r}")
    if t == 0.0 or t == 1.0:
        return 0.0
    return float(-t * np.log2(t) - (1.0 - t) * np.log2(1.0 - t))


def marginalize(p: TableLike, keep: Iterable[int]) -> JointTable:
    """Sum out every axis not in ``keep``; kept axes appear in the order given."""
    p = as_table(p)
    keep = _axes(keep, p.ndim)
    if not keep:
        raise ValueError("marginalize needs at least one axis to keep")
    drop = tuple(a for a in range(p.ndim) if a not in keep)
    arr = p.probs.sum(axis=drop) if drop else p.probs
    remaining = [a for a in range(p.ndim) if a in keep]
    order = [remaining.index(a) for a in keep]
    return JointTable(np.transpose(arr, order))


def _group_entropy(arr: np.ndarray, group: tuple) -> float:
    if not group:
        return 0.0
    drop = tuple(a for a in range(arr.ndim) if a not in group)
    return _entropy_array(arr.sum(axis=drop) if drop else arr)


def _clamp(value: float) -> float:
    if -MI_CLAMP <= value < 0.0:
        return 0.0
    return value


def mutual_information(p: TableLike, group_a: Iterable[int], group_b: Iterable[int]) -> float:
    """``I(A;B)`` between two disjoint groups of axes (others marginalized)."""
    arr = as_table(p).probs
    a = _axes(group_a, arr.ndim)
    b = _axes(group_b, arr.ndim)
    if set(a) & set(b):
        raise ValueError(f"axis groups overlap: {a} and {b}")
    if not a or not b:
        raise ValueError("both axis groups must be non-empty")
    value = _group_entropy(arr, a) + _group_entropy(arr, b) - _group_entropy(arr, a + b)
    return _clamp(value)


def conditional_mutual_information(
    p: TableLike, group_a: Iterable[int], group_b: Iterable[int], given: Iterable[int]
) -> float:
    """``I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)``."""
    arr = as_table(p).probs
    a = _axes(group_a, arr.ndim)
    b = _axes(group_b, arr.ndim)
    c = _axes(given, arr.ndim)
    if set(a) & set(b) or set(a) & set(c) or set(b) & set(c):
        raise ValueError("axis groups must be pairwise disjoint")
    if not a or not b:
        raise ValueError("both axis groups must be non-empty")
    value = (
        _group_entropy(arr, a + c)
        + _group_entropy(arr, b + c)
        - _group_entropy(arr, a + b + c)
        - _group_entropy(arr, c)
    )
    return _clamp(value)


# ----------------------------------------------------------------------------
# constructions
# ----------------------------------------------------------------------------


def compose(m: TableLike, ch) -> JointTable:
    """Joint of ``(input, output)``: ``m(i) * ch(j | i)``."""
    m = as_table(m)
    ch = as_channel(ch)
    if m.ndim != 1:
        raise ShapeError("compose expects a single-variable distribution")
    if m.probs.shape[0] != ch.in_size:
        raise ShapeError(f"pmf has {m.probs.shape[0]} symbols, channel expects {ch.in_size}")
    return JointTable(m.probs[:, None] * ch.rows)


def attach_channel(p: TableLike, axis: int, ch) -> JointTable:
    """Append a new last axis drawn from ``ch`` given the variable on ``axis``."""
    p = as_table(p)
    ch = as_channel(ch)
    (axis,) = _axes([axis], p.ndim)
    if p.axis_sizes[axis] != ch.in_size:
        raise ShapeError(f"axis {axis} has {p.axis_sizes[axis]} symbols, channel expects {ch.in_size}")
    shape = [1] * p.ndim + [ch.out_size]
    shape[axis] = ch.in_size
    return JointTable(p.probs[..., None] * ch.rows.reshape(shape))


def conditional(p: TableLike, given: int, target: int) -> Channel:
    """Channel ``P(target | given)``; rows with zero mass are set uniform."""
    pair = marginalize(p, [given, target]).probs
    mass = pair.sum(axis=1, keepdims=True)
    rows = np.where(mass > 0.0, pair / np.where(mass > 0.0, mass, 1.0), 1.0 / pair.shape[1])
    return Channel(rows)


def product(*tables: TableLike) -> JointTable:
    """Independent joint of several tables, axes concatenated."""
    out = np.ones(())
    for t in tables:
        arr = as_table(t).probs
        out = np.multiply.outer(out, arr)
    return JointTable(out)


def iid_power(p: TableLike, n: int) -> JointTable:
    """``p^{(x) n}`` with axes grouped by variable: ``(v1_1..v1_n, v2_1..v2_n, ...)``."""
    p = as_table(p)
    if n < 1:
        raise ValueError("blocklength must be positive")
    k = p.ndim
    arr = np.ones(())
    for _ in range(n):
        arr = np.multiply.outer(arr, p.probs)
    # current axis order: (t=1: v1..vk, t=2: v1..vk, ...) -> group by variable
    order = [t * k + v for v in range(k) for t in range(n)]
    return JointTable(np.transpose(arr, order))


def markov_chain_joint(q_xz: TableLike, w_given_z, y_given_w) -> JointTable:
    """Joint over ``(X, Z, W, Y)`` for the chain ``X - Z - W - Y``."""
    q_xz = as_table(q_xz)
    w_given_z = as_channel(w_given_z)
    y_given_w = as_channel(y_given_w)
    if q_xz.ndim != 2:
        raise ShapeError("q_xz must be a two-axis table")
    if q_xz.axis_sizes[1] != w_given_z.in_size:
        raise ShapeError("Z alphabet of q_xz does not match the W|Z channel")
    if w_given_z.out_size != y_given_w.in_size:
        raise ShapeError("W alphabet of the two channels differs")
    arr = np.einsum("xz,zw,wy->xzwy", q_xz.probs, w_given_z.rows, y_given_w.rows)
    return JointTable(arr)


# ----------------------------------------------------------------------------
# JSON I/O
# ----------------------------------------------------------------------------


def table_from_json(obj: dict) -> JointTable:
    if not isinstance(obj, dict):
        raise ValueError("expected an object with 'axes' and 'probs'")
    for key in ("axes", "probs"):
        if key not in obj:
            raise ValueError(f"missing field '{key}'")
    return JointTable.from_flat(obj["axes"], obj["probs"])


def channel_from_json(obj: dict) -> Channel:
    t = np.asarray(obj.get("probs", []), dtype=np.float64)
    axes = obj.get("axes")
    if axes is None or len(axes) != 2:
        raise ValueError("field 'axes' of a channel must list exactly two sizes")
    if t.size != axes[0] * axes[1]:
        raise ShapeError("field 'probs' does not match 'axes'")
    return Channel(t.reshape(axes))


def load_table(path: Union[str, Path]) -> JointTable:
    with open(path) as fh:
        return table_from_json(json.load(fh))


def save_table(table: Union[JointTable, Channel], path: Union[str, Path]) -> None:
    with open(path, "w") as fh:
        json.dump(table.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
