"""
Compatibility of a source pair ``(q_XZ, q_XY)``.

A pair is feasible when some channel ``q_{Y|Z}`` reproduces the target,
``sum_z q_XZ(x, z) q_{Y|Z}(y | z) = q_XY(x, y)``.  That is a linear
feasibility problem in the channel entries; we solve the min-max-violation LP
with HiGHS and always re-derive the residual from the returned channel.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.optimize import linprog

from .prob import Channel, JointTable, ShapeError, as_channel, as_table

FEASIBLE_TOL = 1e-9
MARGINAL_BAND = 1e-6


class SolverFailure(RuntimeError):
    """The LP backend did not return a usable answer (distinct from infeasibility)."""


class InfeasiblePairError(ValueError):
    """No channel ``Y|Z`` is compatible with the pair."""


@dataclass(frozen=True)
class CompatibilityResult:
    feasible: bool
    witness_channel: Optional[Channel]
    residual: float
    status: str = "feasible"  # feasible | marginal | infeasible
    warning: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "feasible": bool(self.feasible),
            "residual": float(self.residual),
            "status": self.status,
            "witness": None if self.witness_channel is None else self.witness_channel.to_json(),
        }


def _check_pair(q_xz: JointTable, q_xy: JointTable) -> None:
    if q_xz.ndim != 2 or q_xy.ndim != 2:
        raise ShapeError("q_xz and q_xy must both be two-axis tables")
    if q_xz.axis_sizes[0] != q_xy.axis_sizes[0]:
        raise ShapeError(f"X alphabets differ: {q_xz.axis_sizes[0]} vs {q_xy.axis_sizes[0]}")


def reconstruction(q_xz, ch) -> np.ndarray:
    """``p_XY`` obtained by passing ``Z`` through ``ch``."""
    q_xz = as_table(q_xz)
    ch = as_channel(ch)
    return q_xz.probs @ ch.rows


def max_violation(q_xz, q_xy, ch) -> float:
    return float(np.max(np.abs(reconstruction(q_xz, ch) - as_table(q_xy).probs)))


def _embed(rows_active: np.ndarray, active: np.ndarray, nz: int, ny: int) -> Channel:
    rows = np.full((nz, ny), 1.0 / ny)
    rows[active] = rows_active
    return Channel(rows)


def _clean_rows(rows: np.ndarray) -> np.ndarray:
    rows = np.clip(rows, 0.0, None)
    return rows / rows.sum(axis=1, keepdims=True)


def find_compatible_channel(q_xz, q_xy, tol: float = FEASIBLE_TOL) -> CompatibilityResult:
    """Search for ``q_{Y|Z}`` with ``q_XZ . q_{Y|Z} = q_XY``.

    Residual is the max absolute violation of the ``|X| |Y|`` equalities.
    ``residual <= tol`` is feasible, up to ``1e-6`` is reported as marginal
    (feasible, with a warning), anything above is infeasible.
    """
    q_xz = as_table(q_xz)
    q_xy = as_table(q_xy)
    _check_pair(q_xz, q_xy)
    if tol <= 0:
        raise ValueError("tol must be positive")
    nx, nz = q_xz.axis_sizes
    ny = q_xy.axis_sizes[1]
    qz = q_xz.probs.sum(axis=0)
    active = np.flatnonzero(qz > 0.0)
    na = active.size
    nv = na * ny
    # variables: c[z_active, y] row-major, then the violation bound t
    M = np.zeros((nx * ny, nv))
    for x in range(nx):
        for y in range(ny):
            for k, z in enumerate(active):
                M[x * ny + y, k * ny + y] = q_xz.probs[x, z]
    b = q_xy.probs.ravel()
    ones = np.ones((nx * ny, 1))
    A_ub = np.vstack([np.hstack([M, -ones]), np.hstack([-M, -ones])])
    b_ub = np.concatenate([b, -b])
    A_eq = np.zeros((na, nv + 1))
    for k in range(na):
        A_eq[k, k * ny : (k + 1) * ny] = 1.0
    cost = np.zeros(nv + 1)
    cost[-1] = 1.0
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=np.ones(na), bounds=[(0, None)] * (nv + 1), method="highs")
    if res.status != 0 or res.x is None:
        raise SolverFailure(f"LP backend failed: {res.message}")
    rows = _clean_rows(res.x[:nv].reshape(na, ny))
    ch = _embed(rows, active, nz, ny)
    residual = max_violation(q_xz, q_xy, ch)
    if residual <= tol:
        return CompatibilityResult(True, ch, residual)
    if residual <= MARGINAL_BAND:
        msg = f"pair is only marginally feasible (residual {residual:.3e})"
        return CompatibilityResult(True, ch, residual, status="marginal", warning=msg)
    return CompatibilityResult(False, None, residual, status="infeasible")


def compatible_joint(q_xz, ch) -> JointTable:
    """Joint over ``(X, Z, Y)`` with ``Y`` drawn from ``ch`` given ``Z``."""
    q_xz = as_table(q_xz)
    ch = as_channel(ch)
    if q_xz.ndim != 2:
        raise ShapeError("q_xz must be a two-axis table")
    if ch.in_size != q_xz.axis_sizes[1]:
        raise ShapeError(f"channel expects {ch.in_size} inputs, Z has {q_xz.axis_sizes[1]} symbols")
    return JointTable(q_xz.probs[:, :, None] * ch.rows[None, :, :])


def compatible_polytope_vertices(q_xz, q_xy, tol: float = FEASIBLE_TOL, max_subsets: int = 20000) -> List[Channel]:
    """Vertices of the set of compatible channels (basic feasible solutions).

    Exhaustive when the number of candidate bases is at most ``max_subsets``;
    otherwise the enumeration stops there and a ``RuntimeWarning`` says so.
    Rows of zero-probability ``z`` are fixed to uniform.
    """
    q_xz = as_table(q_xz)
    q_xy = as_table(q_xy)
    check = find_compatible_channel(q_xz, q_xy, tol)
    if not check.feasible:
        raise InfeasiblePairError(f"pair is infeasible (residual {check.residual:.3e})")
    nx, nz = q_xz.axis_sizes
    ny = q_xy.axis_sizes[1]
    qz = q_xz.probs.sum(axis=0)
    active = np.flatnonzero(qz > 0.0)
    na = active.size
    nv = na * ny
    rows = []
    rhs = []
    for x in range(nx):
        for y in range(ny):
            r = np.zeros(nv)
            for k, z in enumerate(active):
                r[k * ny + y] = q_xz.probs[x, z]
            rows.append(r)
            rhs.append(q_xy.probs[x, y])
    for k in range(na):
        r = np.zeros(nv)
        r[k * ny : (k + 1) * ny] = 1.0
        rows.append(r)
        rhs.append(1.0)
    A = np.array(rows)
    b = np.array(rhs)
    # drop linearly dependent equations
    _, sv, vt = np.linalg.svd(A)
    rank = int((sv > 1e-10 * sv[0]).sum())
    basis_rows = _independent_rows(A, rank)
    A = A[basis_rows]
    b = b[basis_rows]

    found: List[np.ndarray] = []
    checked = 0
    truncated = False
    # heavy slack: tolerance for accepting a basic solution
    slack = max(10 * tol, 1e-9)
    for cols in itertools.combinations(range(nv), rank):
        if checked >= max_subsets:
            truncated = True
            break
        checked += 1
        sub = A[:, cols]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        v = np.zeros(nv)
        v[list(cols)] = np.linalg.solve(sub, b)
        if np.any(v < -slack):
            continue
        v = np.clip(v, 0.0, None)
        ch_rows = _clean_rows(v.reshape(na, ny))
        if np.max(np.abs(q_xz.probs[:, active] @ ch_rows - q_xy.probs)) > slack:
            continue
        if not any(np.max(np.abs(ch_rows - f)) < 1e-9 for f in found):
            found.append(ch_rows)
    if truncated:
        warnings.warn(f"vertex enumeration capped after {max_subsets} bases; list may be incomplete", RuntimeWarning)
    return [_embed(f, active, nz, ny) for f in found]


def _independent_rows(A: np.ndarray, rank: int) -> List[int]:
    keep: List[int] = []
    for i in range(A.shape[0]):
        trial = keep + [i]
        if np.linalg.matrix_rank(A[trial], tol=1e-10) == len(trial):
            keep.append(i)
        if len(keep) == rank:
            break
    return keep
