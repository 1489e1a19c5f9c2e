"""
Exact small-blocklength runs of the random-codebook synthesis scheme.

A codebook holds ``m_size * j_size`` words of length ``n`` drawn i.i.d. from
``p_W``.  The decoder outputs ``Y^n`` through ``p_{Y|W}`` applied letterwise
to the selected word; the encoder picks ``m`` with the likelihood encoder.
Every distribution below is computed exactly as a dense table, which limits
the runs to tiny ``n``.  Sizes are guarded by a cell budget (``2**20`` by
default, ``COORDLAB_BUDGET_CELLS`` overrides it).

Sequence tables use the first letter as the most significant digit and are
returned with axes grouped by variable, as ``prob.iid_power`` does.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .prob import (
    Channel,
    JointTable,
    Pmf,
    ShapeError,
    as_table,
    conditional,
    conditional_mutual_information,
    iid_power,
    marginalize,
    mutual_information,
    table_from_json,
    tv_distance,
)

DEFAULT_BUDGET = 2**20
SIZE_SLACK = 1e-9
SOFT_COVERING_HEADER = "n,mean_tv_xy,min_tv_xy,mean_tv_jz,mean_tv_pxy,stderr_pxy"


class BudgetExceeded(ValueError):
    pass


def budget_cells() -> int:
    raw = os.environ.get("COORDLAB_BUDGET_CELLS")
    if raw is None or raw.strip() == "":
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"COORDLAB_BUDGET_CELLS must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError("COORDLAB_BUDGET_CELLS must be positive")
    return value


def _require(cells: int, what: str) -> None:
    limit = budget_cells()
    if cells > limit:
        raise BudgetExceeded(f"{what} needs {cells} cells, above the budget of {limit} (COORDLAB_BUDGET_CELLS)")


def _floor_pow2(x: float) -> int:
    # tiny slack so that e.g. 2**(4*1.0) is not floored to 15
    return max(int(math.floor(2.0**x + SIZE_SLACK)), 1)


# ----------------------------------------------------------------------------
# spec and codebook
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SchemeSpec:
    """Single-letter witness ``p`` over ``(X, Z, W, Y)`` plus rates and blocklength."""

    p: JointTable
    r: float
    rc: float
    eps: float = 0.0
    n: int = 1

    def __post_init__(self):
        p = as_table(self.p)
        object.__setattr__(self, "p", p)
        if p.ndim != 4:
            raise ShapeError("scheme witness must have axes (X, Z, W, Y)")
        for name in ("r", "rc", "eps"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("blocklength n must be a positive integer")
        viol = max(
            conditional_mutual_information(p, [0], [2, 3], [1]),
            conditional_mutual_information(p, [0, 1], [3], [2]),
        )
        if viol > 1e-8:
            raise ValueError(f"witness violates X - Z - W - Y (conditional MI {viol:.3e})")

    @property
    def sizes(self) -> Tuple[int, int, int, int]:
        return self.p.axis_sizes

    @property
    def m_size(self) -> int:
        return _floor_pow2(self.n * (self.r + self.eps))

    @property
    def j_size(self) -> int:
        return _floor_pow2(self.n * self.rc)

    @property
    def code_rates(self) -> Tuple[float, float]:
        """Rates actually realized by the floored sizes."""
        return math.log2(self.m_size) / self.n, math.log2(self.j_size) / self.n

    def p_w(self) -> np.ndarray:
        return marginalize(self.p, [2]).probs

    def z_given_w(self) -> np.ndarray:
        return conditional(self.p, 2, 1).rows

    def y_given_w(self) -> np.ndarray:
        return conditional(self.p, 2, 3).rows

    def x_given_z(self) -> np.ndarray:
        return conditional(self.p, 1, 0).rows

    def q_xz(self) -> JointTable:
        return marginalize(self.p, [0, 1])

    def q_xy(self) -> JointTable:
        return marginalize(self.p, [0, 3])

    def xy_given_w(self) -> np.ndarray:
        """``p(x, y | w)`` flattened to ``(|W|, |X| |Y|)``."""
        k = np.einsum("wz,zx,wy->wxy", self.z_given_w(), self.x_given_z(), self.y_given_w())
        return k.reshape(k.shape[0], -1)

    def inside_region(self) -> bool:
        r_m, r_j = self.code_rates
        i_zw = mutual_information(self.p, [1], [2])
        i_xyw = mutual_information(self.p, [0, 3], [2])
        return r_m >= i_zw - 1e-9 and r_m + r_j >= i_xyw - 1e-9

    def to_json(self) -> dict:
        return {"p": self.p.to_json(), "r": self.r, "rc": self.rc, "eps": self.eps, "n": self.n}

    @classmethod
    def from_json(cls, obj: dict) -> "SchemeSpec":
        if not isinstance(obj, dict):
            raise ValueError("scheme spec must be a JSON object")
        for key in ("p", "r", "rc"):
            if key not in obj:
                raise ValueError(f"scheme spec is missing field '{key}'")
        unknown = set(obj) - {"p", "r", "rc", "eps", "n"}
        if unknown:
            raise ValueError(f"unknown field(s) in scheme spec: {sorted(unknown)}")
        return cls(
            p=table_from_json(obj["p"]),
            r=float(obj["r"]),
            rc=float(obj["rc"]),
            eps=float(obj.get("eps", 0.0)),
            n=int(obj.get("n", 1)),
        )


@dataclass(frozen=True, eq=False)
class Codebook:
    n: int
    m_size: int
    j_size: int
    words: np.ndarray  # (n, m_size, j_size)
    seed: int

    def flat_words(self) -> np.ndarray:
        """Codewords as rows, ordered ``j``-major then ``m``: row ``j * m_size + m``."""
        return np.ascontiguousarray(self.words.transpose(2, 1, 0).reshape(-1, self.n))

    def word(self, m: int, j: int) -> np.ndarray:
        if not (0 <= m < self.m_size and 0 <= j < self.j_size):
            raise IndexError(f"codeword ({m}, {j}) outside {self.m_size} x {self.j_size}")
        return self.words[:, m, j]


def sample_codebook(spec: SchemeSpec, seed: int) -> Codebook:
    m, j, n = spec.m_size, spec.j_size, spec.n
    _require(m * j * n, "codebook")
    pw = spec.p_w()
    rng = np.random.default_rng(seed)
    if pw.size == 1:
        words = np.zeros((n, m, j), dtype=np.int64)
    else:
        words = rng.choice(pw.size, size=(n, m, j), p=pw).astype(np.int64)
    return Codebook(n=n, m_size=m, j_size=j, words=words, seed=int(seed))


# ----------------------------------------------------------------------------
# exact distributions
# ----------------------------------------------------------------------------


def _seq(words: np.ndarray, K: np.ndarray) -> np.ndarray:
    return kernels.sequence_table(words, np.ascontiguousarray(K, dtype=np.float64))


def _mean_rows(words: np.ndarray, K: np.ndarray, what: str) -> np.ndarray:
    """Average over codewords of the letterwise product table, chunked to stay in budget."""
    C, n = words.shape
    cells = K.shape[1] ** n
    _require(cells, what)
    chunk = max(1, budget_cells() // cells)
    acc = np.zeros(cells)
    for lo in range(0, C, chunk):
        acc += _seq(words[lo : lo + chunk], K).sum(axis=0)
    return acc / C


def _group_axes(arr: np.ndarray, sizes: Sequence[int], n: int) -> np.ndarray:
    """Reshape an interleaved sequence index ``(v1_1 v2_1 .. v1_2 ..)`` into grouped axes."""
    k = len(sizes)
    arr = arr.reshape(tuple(sizes) * n)
    order = [t * k + v for v in range(k) for t in range(n)]
    return np.transpose(arr, order)


def exact_q_xy(cb: Codebook, p) -> JointTable:
    """Codebook-averaged output ``Q(x^n, y^n)``; axes ``(x_1..x_n, y_1..y_n)``."""
    spec = p if isinstance(p, SchemeSpec) else SchemeSpec(p, 0.0, 0.0, n=cb.n)
    nx, _, _, ny = spec.sizes
    flat = _mean_rows(cb.flat_words(), spec.xy_given_w(), "Q(x^n, y^n)")
    return JointTable(_group_axes(flat, (nx, ny), cb.n))


def exact_q_jz(cb: Codebook, p) -> JointTable:
    """``Q(j, z^n)``; axes ``(j, z_1..z_n)``."""
    spec = p if isinstance(p, SchemeSpec) else SchemeSpec(p, 0.0, 0.0, n=cb.n)
    nz = spec.sizes[1]
    K = spec.z_given_w()
    _require(cb.j_size * nz**cb.n, "Q(j, z^n)")
    out = np.empty((cb.j_size, nz**cb.n))
    words = cb.flat_words()
    for j in range(cb.j_size):
        out[j] = _mean_rows(words[j * cb.m_size : (j + 1) * cb.m_size], K, "Q(j, z^n)") / cb.j_size
    return JointTable(out.reshape((cb.j_size,) + (nz,) * cb.n))


def exact_q_jxz(cb: Codebook, p) -> JointTable:
    """``Q(j, x^n, z^n)``: ``Q(j, z^n)`` with ``X`` attached letterwise through ``q_{X|Z}``."""
    spec = p if isinstance(p, SchemeSpec) else SchemeSpec(p, 0.0, 0.0, n=cb.n)
    nx, nz = spec.sizes[:2]
    n = cb.n
    _require(cb.j_size * (nx * nz) ** n, "Q(j, x^n, z^n)")
    qjz = exact_q_jz(cb, spec).probs.reshape(cb.j_size, nz**n)
    xz = _letterwise(spec.x_given_z(), n)  # (z^n, x^n)
    arr = qjz[:, None, :] * xz.T[None, :, :]
    return JointTable(arr.reshape((cb.j_size,) + (nx,) * n + (nz,) * n))


def ideal_jxz(spec: SchemeSpec, j_size: int, n: int) -> JointTable:
    q = iid_power(spec.q_xz(), n).probs
    return JointTable(np.broadcast_to(q / j_size, (j_size,) + q.shape).copy())


def _letterwise(K: np.ndarray, n: int) -> np.ndarray:
    """n-fold Kronecker power of a channel matrix: rows ``a^n``, columns ``b^n``."""
    out = np.ones((1, 1))
    for _ in range(n):
        out = np.kron(out, K)
    return out


@dataclass(frozen=True)
class EncoderOutput:
    probs: Pmf
    fallback: bool


def likelihood_encoder(cb: Codebook, p, j: int, z_seq: Sequence[int]) -> EncoderOutput:
    """Distribution of the message ``m`` given ``j`` and ``z^n``.

    Falls back to uniform (``fallback=True``) when every codeword has zero
    likelihood.
    """
    spec = p if isinstance(p, SchemeSpec) else SchemeSpec(p, 0.0, 0.0, n=cb.n)
    z = np.asarray(z_seq, dtype=np.int64)
    nz = spec.sizes[1]
    if z.shape != (cb.n,):
        raise ShapeError(f"z sequence must have length {cb.n}")
    if np.any(z < 0) or np.any(z >= nz):
        raise IndexError("z symbol out of range")
    if not 0 <= j < cb.j_size:
        raise IndexError(f"j={j} outside [0, {cb.j_size})")
    K = spec.z_given_w()
    lik = np.prod(K[cb.words[:, :, j], z[:, None]], axis=0)
    tot = lik.sum()
    if tot > 0:
        return EncoderOutput(Pmf(lik / tot), False)
    return EncoderOutput(Pmf(np.full(cb.m_size, 1.0 / cb.m_size)), True)


def _encoder_tables(cb: Codebook, spec: SchemeSpec):
    """Per-``j`` likelihood-encoder matrices ``E[j, m, z^n]`` and the fallback count."""
    nz = spec.sizes[1]
    n = cb.n
    _require(cb.j_size * cb.m_size * nz**n, "likelihood encoder table")
    L = _seq(cb.flat_words(), spec.z_given_w()).reshape(cb.j_size, cb.m_size, nz**n)
    tot = L.sum(axis=1, keepdims=True)
    zero = tot == 0.0
    E = np.where(zero, 1.0 / cb.m_size, L / np.where(zero, 1.0, tot))
    return E, int(zero.sum())


def induced_decoder(cb: Codebook, spec: SchemeSpec) -> Tuple[np.ndarray, int]:
    """Channel ``P(y^n | z^n)`` realized by encoder + decoder, plus fallback count."""
    ny = spec.sizes[3]
    n = cb.n
    _require((spec.sizes[1] * ny) ** n, "P(y^n | z^n)")
    E, fallbacks = _encoder_tables(cb, spec)
    Ly = _seq(cb.flat_words(), spec.y_given_w()).reshape(cb.j_size, cb.m_size, ny**n)
    D = np.zeros((E.shape[2], ny**n))
    for j in range(cb.j_size):
        D += E[j].T @ Ly[j]
    return D / cb.j_size, fallbacks


def induced_p_xy(cb: Codebook, spec: SchemeSpec) -> JointTable:
    """Exact code distribution ``P(x^n, y^n)``; axes ``(x_1..x_n, y_1..y_n)``."""
    nx, nz, _, ny = spec.sizes
    n = cb.n
    _require((nx * ny) ** n, "P(x^n, y^n)")
    _require((nx * nz) ** n, "q(x^n, z^n)")
    D, _ = induced_decoder(cb, spec)
    qxz = iid_power(spec.q_xz(), n).probs.reshape(nx**n, nz**n)
    P = qxz @ D
    return JointTable(P.reshape((nx,) * n + (ny,) * n))


def coordination_error(p_xy, q_xy, n: int) -> float:
    """TV distance between an n-letter joint and ``q_XY^{(x) n}``."""
    p_xy = as_table(p_xy)
    target = iid_power(q_xy, n)
    if p_xy.axis_sizes != target.axis_sizes:
        raise ShapeError(f"table axes {p_xy.axis_sizes} do not match the n-letter target {target.axis_sizes}")
    return tv_distance(p_xy, target)


# ----------------------------------------------------------------------------
# full joints over (j, m, x^n, z^n, y^n)
# ----------------------------------------------------------------------------


def _full_sizes(cb: Codebook, spec: SchemeSpec) -> Tuple[int, int, int]:
    nx, nz, _, ny = spec.sizes
    n = cb.n
    cells = cb.j_size * cb.m_size * (nx * nz * ny) ** n
    _require(cells, "full code joint")
    return nx**n, nz**n, ny**n


def full_joint_q(cb: Codebook, spec: SchemeSpec) -> np.ndarray:
    """Auxiliary ``Q(j, m, x^n, z^n, y^n)``: uniform index, letterwise channels."""
    X, Z, Y = _full_sizes(cb, spec)
    nx, nz, _, ny = spec.sizes
    words = cb.flat_words()
    Lz = _seq(words, spec.z_given_w())  # (C, z^n)
    Ly = _seq(words, spec.y_given_w())  # (C, y^n)
    xz = _letterwise(spec.x_given_z(), cb.n)  # (z^n, x^n)
    arr = Lz[:, None, :, None] * xz.T[None, :, :, None] * Ly[:, None, None, :]
    arr = arr / (cb.j_size * cb.m_size)
    return arr.reshape(cb.j_size, cb.m_size, X, Z, Y)


def full_joint_p(cb: Codebook, spec: SchemeSpec) -> np.ndarray:
    """Code distribution ``P(j, m, x^n, z^n, y^n)`` under the likelihood encoder."""
    X, Z, Y = _full_sizes(cb, spec)
    qxz = iid_power(spec.q_xz(), cb.n).probs.reshape(X, Z)
    E, _ = _encoder_tables(cb, spec)  # (j, m, z^n)
    Ly = _seq(cb.flat_words(), spec.y_given_w()).reshape(cb.j_size, cb.m_size, Y)
    arr = qxz[None, None, :, :, None] * E[:, :, None, :, None] * Ly[:, :, None, None, :]
    return arr / cb.j_size


# ----------------------------------------------------------------------------
# Monte-Carlo over codebooks
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialResult:
    tv_xy: float
    tv_jz: float
    tv_pxy: float
    fallbacks: int


def run_trial(spec: SchemeSpec, seed: int) -> TrialResult:
    cb = sample_codebook(spec, seed)
    n = spec.n
    tv_xy = coordination_error(exact_q_xy(cb, spec), spec.q_xy(), n)
    q_z = marginalize(spec.p, [1])
    ideal = np.broadcast_to(iid_power(q_z, n).probs.ravel() / cb.j_size, (cb.j_size, q_z.probs.size**n))
    tv_jz = tv_distance(exact_q_jz(cb, spec).probs.reshape(cb.j_size, -1), ideal)
    D, fallbacks = induced_decoder(cb, spec)
    nx, nz, _, ny = spec.sizes
    _require((nx * nz) ** n, "q(x^n, z^n)")
    qxz = iid_power(spec.q_xz(), n).probs.reshape(nx**n, nz**n)
    P = JointTable((qxz @ D).reshape((nx,) * n + (ny,) * n))
    return TrialResult(tv_xy, tv_jz, coordination_error(P, spec.q_xy(), n), fallbacks)


@dataclass(frozen=True)
class CurveRow:
    n: int
    mean_tv_xy: float
    min_tv_xy: float
    mean_tv_jz: float
    mean_tv_pxy: float
    stderr_pxy: float
    min_tv_pxy: float
    fallbacks: int


@dataclass(frozen=True)
class CurveResult:
    rows: List[CurveRow]
    truncated_at: Optional[int] = None
    reason: Optional[str] = None

    @property
    def truncated(self) -> bool:
        return self.truncated_at is not None

    def to_csv(self) -> str:
        lines = [SOFT_COVERING_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.n},{r.mean_tv_xy:.6f},{r.min_tv_xy:.6f},{r.mean_tv_jz:.6f},{r.mean_tv_pxy:.6f},{r.stderr_pxy:.6f}"
            )
        if self.truncated:
            lines.append(f"# truncated at n={self.truncated_at}: {self.reason}")
        return "\n".join(lines) + "\n"


def soft_covering_curve(
    spec: SchemeSpec, n_list: Sequence[int], trials: int, base_seed: int = 0, threads: int = 1
) -> CurveResult:
    """Codebook-averaged TV figures per blocklength; trial ``i`` uses seed ``base_seed + i``.

    Stops at the first ``n`` that exceeds the cell budget and marks the
    result as truncated.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rows: List[CurveRow] = []
    for n in n_list:
        s_n = replace(spec, n=int(n))
        seeds = [base_seed + i for i in range(trials)]
        try:
            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    res = list(pool.map(lambda sd: run_trial(s_n, sd), seeds))
            else:
                res = [run_trial(s_n, sd) for sd in seeds]
        except BudgetExceeded as exc:
            return CurveResult(rows, truncated_at=int(n), reason=str(exc))
        pxy = np.array([r.tv_pxy for r in res])
        xy = np.array([r.tv_xy for r in res])
        stderr = float(pxy.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        rows.append(
            CurveRow(
                n=int(n),
                mean_tv_xy=float(xy.mean()),
                min_tv_xy=float(xy.min()),
                mean_tv_jz=float(np.mean([r.tv_jz for r in res])),
                mean_tv_pxy=float(pxy.mean()),
                stderr_pxy=stderr,
                min_tv_pxy=float(pxy.min()),
                fallbacks=sum(r.fallbacks for r in res),
            )
        )
    return CurveResult(rows)


# ----------------------------------------------------------------------------
# converse side
# ----------------------------------------------------------------------------


def g_epsilon(eps: float, x_size: int, y_size: int) -> float:
    """``4 eps (log|X| + log|Y| + log 1/eps)`` in bits."""
    if not 0.0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    if x_size < 1 or y_size < 1:
        raise ValueError("alphabet sizes must be positive")
    return 4.0 * eps * (math.log2(x_size) + math.log2(y_size) + math.log2(1.0 / eps))


@dataclass(frozen=True, eq=False)
class SingleLetter:
    joint: JointTable  # (X_T, Z_T, W', Y_T), W' = (T, J, M) flattened
    i_zw: float
    i_xyw: float


def single_letterize(cb: Optional[Codebook], spec: SchemeSpec, seed: int = 0) -> SingleLetter:
    """Exact single-letter joint with a uniform time index ``T`` and ``W' = (M, J, T)``.

    ``W'`` is flattened as ``(t * j_size + j) * m_size + m``.  When ``cb`` is
    None a codebook is drawn with ``seed``.
    """
    if cb is None:
        cb = sample_codebook(spec, seed)
    nx, nz, _, ny = spec.sizes
    n = cb.n
    full = full_joint_p(cb, spec).reshape((cb.j_size, cb.m_size) + (nx,) * n + (nz,) * n + (ny,) * n)
    nw = n * cb.j_size * cb.m_size
    out = np.zeros((nx, nz, nw, ny))
    for t in range(n):
        keep = (0, 1, 2 + t, 2 + n + t, 2 + 2 * n + t)
        drop = tuple(a for a in range(full.ndim) if a not in keep)
        pt = full.sum(axis=drop)  # (j, m, x, z, y)
        block = np.transpose(pt, (2, 3, 0, 1, 4)).reshape(nx, nz, cb.j_size * cb.m_size, ny)
        lo = t * cb.j_size * cb.m_size
        out[:, :, lo : lo + cb.j_size * cb.m_size, :] = block / n
    joint = JointTable(out)
    return SingleLetter(joint, mutual_information(joint, [1], [2]), mutual_information(joint, [0, 3], [2]))


@dataclass(frozen=True)
class AuditReport:
    eps_obs: float
    i_zw: float
    i_xyw: float
    bounds_ok: bool
    chain_ok: bool
    rate_m: float
    rate_j: float
    chain_violation: float

    def to_json(self) -> dict:
        return {
            "bounds_ok": bool(self.bounds_ok),
            "chain_ok": bool(self.chain_ok),
            "eps_obs": float(self.eps_obs),
            "i_xyw": float(self.i_xyw),
            "i_zw": float(self.i_zw),
        }


def converse_audit(cb: Optional[Codebook], spec: SchemeSpec, seed: int = 0) -> AuditReport:
    """Check the single-letter converse inequalities and the Markov chain on one code.

    The rate checks use the realized rates ``log2(m_size)/n`` and
    ``log2(j_size)/n``.  When the observed TV is ``>= 1/2`` the second bound
    is vacuous and counts as satisfied.
    """
    if cb is None:
        cb = sample_codebook(spec, seed)
    sl = single_letterize(cb, spec)
    nx, _, _, ny = spec.sizes
    eps_obs = tv_distance(marginalize(sl.joint, [0, 3]), spec.q_xy())
    rate_m = math.log2(cb.m_size) / cb.n
    rate_j = math.log2(cb.j_size) / cb.n
    ok_zw = sl.i_zw <= rate_m + 1e-9
    e = max(eps_obs, 1e-6)
    if e < 0.5:
        ok_xyw = sl.i_xyw <= rate_m + rate_j + 2.0 * g_epsilon(e, nx, ny) + 1e-9
    else:
        ok_xyw = True
    chain = max(
        conditional_mutual_information(sl.joint, [0], [2, 3], [1]),
        conditional_mutual_information(sl.joint, [0, 1], [3], [2]),
    )
    return AuditReport(eps_obs, sl.i_zw, sl.i_xyw, ok_zw and ok_xyw, chain <= 1e-8, rate_m, rate_j, chain)


# ----------------------------------------------------------------------------
# convenience
# ----------------------------------------------------------------------------


def case5_scheme_spec(theta: float = 0.2, tau: float = 0.1, margin: float = 0.15, n: int = 2) -> SchemeSpec:
    """Case-5 BSC cascade with both rates ``margin`` bits past the corner point.

    The corner is ``(I(Z;W), I(X,Y;W) - I(Z;W))``.
    """
    from .dsbs import GapInputs, case5_witness

    w = case5_witness(GapInputs(theta, tau))
    r = w.i_zw + margin
    rc = max(w.i_xyw - w.i_zw, 0.0) + margin
    return SchemeSpec(w.joint, r, rc, 0.0, n)
