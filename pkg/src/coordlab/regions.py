"""
Minimum compression rates on the remote and direct synthesis boundaries.

Both problems share one kernel (see ``kernels``): minimize
``max(I(Z;W), I(A,Y;W) - rc)`` over channels ``W|Z`` and ``Y|W`` subject to
``p_AY = q_AY``.  Remote synthesis uses ``A = X`` with source ``q_XZ``;
direct synthesis uses ``A = Z`` with source ``diag(q_Z)``.  The optimizer is
local, so every value here is a best-found upper bound on the true minimum.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .feasibility import (
    InfeasiblePairError,
    compatible_joint,
    compatible_polytope_vertices,
    find_compatible_channel,
)
from .prob import (
    Channel,
    JointTable,
    ShapeError,
    as_table,
    conditional,
    conditional_mutual_information,
    marginalize,
    markov_chain_joint,
    mutual_information,
    tv_distance,
)

MARKOV_TOL = 1e-8
REGION_TOL = 1e-9

# penalty schedule: augmented Lagrangian, mu geometric from MU_START to MU_FINAL
MU_START = 1e3
MU_FINAL = 1e6
BETA_START = 20.0
BETA_MAX = 1e4
INNER_ITERS = 300
INNER_GTOL = 1e-10
START_SCALE = 1.0
KICK_SCALE = 0.3


class NonConvergenceError(RuntimeError):
    """No start reached the marginal tolerance."""

    def __init__(self, message: str, best_residual: float):
        super().__init__(message)
        self.best_residual = best_residual


class MarkovViolationError(ValueError):
    pass


@dataclass
class SolverOptions:
    starts: int = 32
    seed: int = 0
    marginal_tol: float = 1e-4
    max_outer: int = 18
    threads: int = 1

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("starts must be at least 1")
        if self.max_outer < 1:
            raise ValueError("max_outer must be at least 1")
        if not self.marginal_tol > 0:
            raise ValueError("marginal_tol must be positive")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("threads")
        return d

    @classmethod
    def from_json(cls, obj: dict, threads: int = 1) -> "SolverOptions":
        unknown = set(obj) - {"starts", "seed", "marginal_tol", "max_outer"}
        if unknown:
            raise ValueError(f"unknown solver option(s): {sorted(unknown)}")
        return cls(threads=threads, **obj)


@dataclass(frozen=True)
class RatePoint:
    r: float
    rc: float

    def __post_init__(self):
        for name in ("r", "rc"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v}")


@dataclass(frozen=True, eq=False)
class RegionWitness:
    """A joint over ``(X, Z, W, Y)`` with its three rate quantities."""

    joint: JointTable
    i_zw: float
    i_xyw: float
    i_zyw: float
    marginal_residual: float

    @classmethod
    def from_joint(cls, joint, marginal_residual: float) -> "RegionWitness":
        joint = as_table(joint)
        if joint.ndim != 4:
            raise ShapeError("witness joint must have axes (X, Z, W, Y)")
        return cls(
            joint=joint,
            i_zw=mutual_information(joint, [1], [2]),
            i_xyw=mutual_information(joint, [0, 3], [2]),
            i_zyw=mutual_information(joint, [1, 3], [2]),
            marginal_residual=float(marginal_residual),
        )

    @property
    def w_size(self) -> int:
        return self.joint.axis_sizes[2]

    def w_given_z(self) -> Channel:
        return conditional(self.joint, 1, 2)

    def y_given_w(self) -> Channel:
        return conditional(self.joint, 2, 3)

    def markov_violation(self) -> float:
        """Largest of ``I(X;W,Y|Z)`` and ``I(X,Z;Y|W)``."""
        return max(
            conditional_mutual_information(self.joint, [0], [2, 3], [1]),
            conditional_mutual_information(self.joint, [0, 1], [3], [2]),
        )

    def rcs_value(self, rc: float) -> float:
        return max(self.i_zw, self.i_xyw - rc)

    def dcs_value(self, rc: float) -> float:
        return max(self.i_zw, self.i_zyw - rc)


# ----------------------------------------------------------------------------
# multi-start engine
# ----------------------------------------------------------------------------


@dataclass
class _Problem:
    q_xz: JointTable  # joint used to build the witness
    s: np.ndarray  # kernel source (A, Z)
    q: np.ndarray  # kernel target (A, Y)
    rc: float
    kind: str  # "rcs" or "dcs"
    nw: int = field(init=False)

    def __post_init__(self):
        self.nw = self.q.shape[1] * self.s.shape[1] + 1

    def residual(self, joint: JointTable) -> float:
        keep = [0, 3] if self.kind == "rcs" else [1, 3]
        return tv_distance(marginalize(joint, keep).probs, self.q)

    def witness(self, A: np.ndarray, B: np.ndarray) -> RegionWitness:
        joint = markov_chain_joint(self.q_xz, Channel(A), Channel(B))
        return RegionWitness.from_joint(joint, self.residual(joint))

    def value(self, w: RegionWitness) -> float:
        return w.rcs_value(self.rc) if self.kind == "rcs" else w.dcs_value(self.rc)


def _channel_logits(rows: np.ndarray) -> np.ndarray:
    return np.log(np.clip(rows, 1e-9, None))


def _start_points(prob: _Problem, opts: SolverOptions, helper: Optional[np.ndarray], extra: int):
    """Starting logits and per-start kick schedules, all from generators seeded ``seed + index``."""
    nz = prob.s.shape[1]
    ny = prob.q.shape[1]
    nw = prob.nw
    size = nz * nw + nw * ny
    n_kicks = (2 * opts.max_outer) // 3
    points = []
    kicks = []
    for k in range(opts.starts + extra):
        rng = np.random.default_rng(opts.seed + k)
        if k == 0:
            points.append(np.zeros(size))
        elif k == 1:
            # identity-like: W copies Z, Y drawn from a compatible channel
            ta = np.zeros((nz, nw))
            ta[np.arange(nz), np.arange(nz) % nw] = 4.0
            tb = np.zeros((nw, ny))
            if helper is not None:
                tb[:nz] = _channel_logits(helper)
            else:
                tb[np.arange(nw), np.arange(nw) % ny] = 4.0
            points.append(np.concatenate([ta.ravel(), tb.ravel()]))
        elif k < opts.starts:
            points.append(rng.normal(0.0, START_SCALE, size))
        kicks.append(rng.normal(0.0, KICK_SCALE, (n_kicks, size)))
    return points, kicks


def _pad_channels(w: RegionWitness, nw: int) -> Tuple[np.ndarray, np.ndarray]:
    A = w.w_given_z().rows
    B = w.y_given_w().rows
    if A.shape[1] > nw:
        raise ShapeError(f"warm start uses |W|={A.shape[1]} > {nw}")
    if A.shape[1] < nw:
        pad = nw - A.shape[1]
        A = np.hstack([A, np.zeros((A.shape[0], pad))])
        B = np.vstack([B, np.full((pad, B.shape[1]), 1.0 / B.shape[1])])
    return A, B


def _run(prob: _Problem, opts: SolverOptions, helper=None, warm_starts: Sequence[RegionWitness] = ()):
    nz = prob.s.shape[1]
    nw = prob.nw
    growth = (MU_FINAL / MU_START) ** (1.0 / max(opts.max_outer - 1, 1))
    s = np.ascontiguousarray(prob.s, dtype=np.float64)
    q = np.ascontiguousarray(prob.q, dtype=np.float64)

    kick_tol = opts.marginal_tol / 10.0

    def solve(job):
        theta0, kicks = job
        theta = kernels.solve_start(
            theta0,
            s,
            q,
            float(prob.rc),
            nw,
            MU_START,
            growth,
            opts.max_outer,
            BETA_START,
            BETA_MAX,
            INNER_ITERS,
            INNER_GTOL,
            kicks,
            kick_tol,
        )
        A = kernels.softmax_rows(theta[: nz * nw].reshape(nz, nw))
        B = kernels.softmax_rows(theta[nz * nw :].reshape(nw, -1))
        return prob.witness(A, B)

    points, kicks = _start_points(prob, opts, helper, len(warm_starts))
    fixed: List[RegionWitness] = []
    for w in warm_starts:
        A, B = _pad_channels(w, nw)
        fixed.append(prob.witness(A, B))
        points.append(np.concatenate([_channel_logits(A).ravel(), _channel_logits(B).ravel()]))

    if opts.threads > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            solved = list(pool.map(solve, zip(points, kicks)))
    else:
        solved = [solve(job) for job in zip(points, kicks)]
    # warm-start witnesses themselves are candidates, ranked after the solves
    candidates = solved + fixed

    best = None
    best_key = None
    min_res = math.inf
    for idx, w in enumerate(candidates):
        min_res = min(min_res, w.marginal_residual)
        if w.marginal_residual > opts.marginal_tol:
            continue
        key = (round(prob.value(w), 12), w.marginal_residual, idx)
        if best_key is None or key < best_key:
            best, best_key = w, key
    if best is None:
        raise NonConvergenceError(
            f"no start reached marginal tolerance {opts.marginal_tol:g} (best residual {min_res:.3e})", min_res
        )
    return max(prob.value(best), 0.0), best


# ----------------------------------------------------------------------------
# public solvers
# ----------------------------------------------------------------------------


def _check_rc(rc: float) -> float:
    rc = float(rc)
    if not math.isfinite(rc) or rc < 0:
        raise ValueError(f"rc must be finite and non-negative, got {rc}")
    return rc


def min_rate_rcs(q_xz, q_xy, rc: float, opts: Optional[SolverOptions] = None, warm_starts: Sequence[RegionWitness] = ()):
    """Best-found ``min max(I(Z;W), I(X,Y;W) - rc)`` over the remote feasible set.

    ``warm_starts`` are witnesses (for instance from the direct solver) used
    both as candidates in their own right and as extra starting points.
    Returns ``(value, witness)``.
    """
    opts = opts or SolverOptions()
    rc = _check_rc(rc)
    q_xz = as_table(q_xz)
    q_xy = as_table(q_xy)
    compat = find_compatible_channel(q_xz, q_xy)
    if not compat.feasible:
        raise InfeasiblePairError(f"pair is infeasible (residual {compat.residual:.3e})")
    prob = _Problem(q_xz, q_xz.probs, q_xy.probs, rc, "rcs")
    return _run(prob, opts, helper=compat.witness_channel.rows, warm_starts=warm_starts)


def _split_xzy(q_xzy: JointTable) -> Tuple[JointTable, JointTable]:
    if q_xzy.ndim != 3:
        raise ShapeError("q_xzy must have axes (X, Z, Y)")
    cmi = conditional_mutual_information(q_xzy, [0], [2], [1])
    if cmi > MARKOV_TOL:
        raise MarkovViolationError(f"input violates X - Z - Y: I(X;Y|Z) = {cmi:.3e}")
    return marginalize(q_xzy, [0, 1]), marginalize(q_xzy, [1, 2])


def min_rate_dcs(q_xzy, rc: float, opts: Optional[SolverOptions] = None, warm_starts: Sequence[RegionWitness] = ()):
    """Best-found ``min max(I(Z;W), I(Z,Y;W) - rc)`` over the direct feasible set."""
    opts = opts or SolverOptions()
    rc = _check_rc(rc)
    q_xz, q_zy = _split_xzy(as_table(q_xzy))
    qz = q_zy.probs.sum(axis=1)
    ny = q_zy.axis_sizes[1]
    prob = _Problem(q_xz, np.diag(qz), q_zy.probs, rc, "dcs")
    helper = conditional(q_zy, 0, 1).rows
    assert helper.shape[1] == ny
    return _run(prob, opts, helper=helper, warm_starts=warm_starts)


def identity_source(q_zy) -> JointTable:
    """``q_XZY`` with ``X = Z``, used to run the direct solver on a bare ``q_ZY``."""
    q_zy = as_table(q_zy)
    if q_zy.ndim != 2:
        raise ShapeError("q_zy must be a two-axis table")
    nz = q_zy.axis_sizes[0]
    arr = np.zeros((nz,) + q_zy.axis_sizes)
    arr[np.arange(nz), np.arange(nz), :] = q_zy.probs
    return JointTable(arr)


def wyner_common_information(q_zy, opts: Optional[SolverOptions] = None) -> float:
    """Best-found Wyner common information of ``q_ZY`` (direct rate at ``rc = 0``)."""
    return min_rate_dcs(identity_source(q_zy), 0.0, opts)[0]


def min_rate_dcs_over_compatible(
    q_xz, q_xy, rc: float, opts: Optional[SolverOptions] = None, warm_starts: Sequence[RegionWitness] = ()
):
    """Minimize the direct rate over channels compatible with ``(q_XZ, q_XY)``.

    All polytope vertices are tried, then points on the segments from the best
    vertex toward each other vertex.  Witnesses in ``warm_starts`` compete as
    well (their own ``Y|Z`` channel is reported for them).
    Returns ``(value, channel, witness)``.
    """
    opts = opts or SolverOptions()
    rc = _check_rc(rc)
    q_xz = as_table(q_xz)
    q_xy = as_table(q_xy)
    vertices = compatible_polytope_vertices(q_xz, q_xy)
    results = []
    last_error = None

    def attempt(ch: Channel):
        nonlocal last_error
        try:
            v, w = min_rate_dcs(compatible_joint(q_xz, ch), rc, opts)
        except NonConvergenceError as exc:
            last_error = exc
            return None
        results.append((v, len(results), ch, w))
        return v

    for ch in vertices:
        attempt(ch)
    if results and len(vertices) > 1:
        best_ch = min(results, key=lambda t: (t[0], t[1]))[2]
        for other in vertices:
            if other is best_ch:
                continue
            for t in (0.25, 0.5, 0.75):
                attempt(Channel((1 - t) * best_ch.rows + t * other.rows))
    for w in warm_starts:
        if w.marginal_residual <= opts.marginal_tol:
            ch = conditional(w.joint, 1, 3)
            results.append((max(w.dcs_value(rc), 0.0), len(results), ch, w))
    if not results:
        raise last_error or NonConvergenceError("no compatible channel could be solved", math.inf)
    v, _, ch, w = min(results, key=lambda t: (round(t[0], 12), t[3].marginal_residual, t[1]))
    return v, ch, w


@dataclass(frozen=True)
class BoundaryRow:
    rc: float
    r_rcs: float
    r_dcs: float
    residual_rcs: float
    residual_dcs: float


BOUNDARY_HEADER = "rc,r_rcs,r_dcs,residual_rcs,residual_dcs"


def region_boundary(q_xz, q_xy, rc_grid: Iterable[float], opts: Optional[SolverOptions] = None) -> List[BoundaryRow]:
    """Sweep both boundaries over ``rc_grid`` (ascending).

    Each solve is warm-started from the previous grid point, and the remote
    solve also from the direct witness, so both columns are non-increasing and
    ``r_rcs <= r_dcs`` holds row by row.
    """
    opts = opts or SolverOptions()
    grid = [_check_rc(rc) for rc in rc_grid]
    if not grid:
        raise ValueError("rc_grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("rc_grid must be sorted ascending")
    rows = []
    prev_rcs = prev_dcs = None
    for rc in grid:
        r_dcs, _, w_dcs = min_rate_dcs_over_compatible(q_xz, q_xy, rc, opts, [prev_dcs] if prev_dcs else [])
        warm = [w_dcs] + ([prev_rcs] if prev_rcs else [])
        r_rcs, w_rcs = min_rate_rcs(q_xz, q_xy, rc, opts, warm)
        rows.append(BoundaryRow(rc, r_rcs, r_dcs, w_rcs.marginal_residual, w_dcs.marginal_residual))
        prev_rcs, prev_dcs = w_rcs, w_dcs
    return rows


def boundary_csv(rows: Sequence[BoundaryRow]) -> str:
    lines = [BOUNDARY_HEADER]
    for r in rows:
        lines.append(f"{r.rc:.6f},{r.r_rcs:.6f},{r.r_dcs:.6f},{r.residual_rcs:.6f},{r.residual_dcs:.6f}")
    return "\n".join(lines) + "\n"


def check_in_region(witness: RegionWitness, point: RatePoint, kind: str) -> bool:
    """Does ``witness`` certify ``point`` for the remote (``rcs``) or direct (``dcs``) region?"""
    if kind == "rcs":
        total = witness.i_xyw
    elif kind == "dcs":
        total = witness.i_zyw
    else:
        raise ValueError(f"kind must be 'rcs' or 'dcs', got {kind!r}")
    return point.r >= witness.i_zw - REGION_TOL and point.r + point.rc >= total - REGION_TOL


# ----------------------------------------------------------------------------
# brute-force oracle
# ----------------------------------------------------------------------------


def _simplex_grid(k: int, nw: int) -> np.ndarray:
    if nw == 1:
        return np.ones((1, 1))
    pts = []
    for c in _compositions(k, nw):
        pts.append([ci / k for ci in c])
    return np.array(pts)


def _compositions(k: int, parts: int):
    if parts == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(k - first, parts - 1):
            yield (first,) + rest


def grid_oracle_min_rate(q_xz, q_xy, rc: float, w_size: int, step: float, mode: str = "exact") -> float:
    """Brute-force the remote rate over small binary instances.

    ``mode="exact"`` puts the encoder ``W|Z`` and ``nw - 2`` decoder entries on
    the grid and solves the remaining two decoder entries from the marginal
    constraint, so kept candidates are exactly feasible.  ``mode="band"``
    grids every parameter and keeps candidates within ``tv <= 2 step`` of the
    target; that band admits infeasible points and tends to read low.

    Either way the answer is a grid estimate, not a certified optimum.
    Returns ``inf`` when no candidate survives.
    """
    q_xz = as_table(q_xz)
    q_xy = as_table(q_xy)
    if q_xz.ndim != 2 or q_xy.ndim != 2:
        raise ShapeError("q_xz and q_xy must be two-axis tables")
    if q_xz.axis_sizes != (2, 2) or q_xy.axis_sizes != (2, 2):
        raise ShapeError("grid oracle supports binary X, Z, Y only")
    if w_size not in (1, 2, 3):
        raise ValueError("w_size must be 1, 2 or 3")
    if not 0.01 - 1e-12 <= step <= 0.1 + 1e-12:
        raise ValueError("step must lie in [0.01, 0.1]")
    rc = _check_rc(rc)
    k = int(round(1.0 / step))
    rows_a = _simplex_grid(k, w_size)
    bvals = np.linspace(0.0, 1.0, k + 1)
    s = np.ascontiguousarray(q_xz.probs)
    q = np.ascontiguousarray(q_xy.probs)
    if mode == "exact":
        best, _ = kernels.grid_search_exact(s, q, rc, rows_a, bvals)
    elif mode == "band":
        best, _ = kernels.grid_search(s, q, rc, rows_a, bvals, 2.0 * step)
    else:
        raise ValueError(f"mode must be 'exact' or 'band', got {mode!r}")
    return float(max(best, 0.0)) if math.isfinite(best) else math.inf
