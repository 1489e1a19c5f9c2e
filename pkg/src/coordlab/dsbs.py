"""
Closed forms for the doubly binary symmetric setting.

``theta`` is the crossover between ``Z`` and ``Y``, ``tau`` the crossover
between ``X`` and ``Z``.  With ``X - Z - Y`` both binary symmetric, ``X`` and
``Y`` differ with probability ``tau + (1 - 2 tau) theta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .prob import Channel, JointTable, binary_entropy as h, marginalize, markov_chain_joint, tv_distance
from .regions import RegionWitness

FIGURE4_HEADER = "theta,tau,gap_bits"
DEFAULT_RANGE = (0.01, 0.49)


class DomainError(ValueError):
    pass


def _unit(name: str, v: float, hi: float = 1.0) -> float:
    v = float(v)
    if not (0.0 <= v <= hi):
        raise DomainError(f"{name} must lie in [0, {hi:g}], got {v}")
    return v


def dsbs_joint(theta: float) -> JointTable:
    t = _unit("theta", theta)
    return JointTable(np.array([[1 - t, t], [t, 1 - t]]) / 2.0)


def bsc(t: float) -> Channel:
    t = _unit("t", t)
    return Channel(np.array([[1 - t, t], [t, 1 - t]]))


def wyner_theta_tilde(theta: float) -> float:
    """Crossover of each half of a BSC cascade that composes to ``BSC(theta)``."""
    theta = _unit("theta", theta, 0.5)
    return 0.5 - 0.5 * math.sqrt(1.0 - 2.0 * theta)


def _open(name: str, v: float) -> float:
    v = float(v)
    if not (0.0 < v < 0.5):
        raise DomainError(f"{name} must lie in the open interval (0, 1/2), got {v}")
    return v


def dsbs_wyner_ci(theta: float) -> float:
    theta = _open("theta", theta)
    return 1.0 + h(theta) - 2.0 * h(wyner_theta_tilde(theta))


@dataclass(frozen=True)
class GapInputs:
    theta: float
    tau: float

    def __post_init__(self):
        _open("theta", self.theta)
        _open("tau", self.tau)

    @property
    def xy_crossover(self) -> float:
        return self.tau + (1 - 2 * self.tau) * self.theta


def rcs_gap_lower_bound(g: GapInputs) -> float:
    """Lower bound on (direct rate - remote rate) at zero common randomness."""
    theta, tau = g.theta, g.tau
    root = math.sqrt(1.0 - 2.0 * theta)
    return h(theta) + h(0.5 - (0.5 - tau) * root) - h(wyner_theta_tilde(theta)) - h(tau + (1 - 2 * tau) * theta)


def case5_witness(g: GapInputs) -> RegionWitness:
    """BSC cascade ``Z -> W -> Y`` (both halves ``BSC(theta~)``) under ``q_XZ = DSBS(tau)``."""
    tt = wyner_theta_tilde(g.theta)
    joint = markov_chain_joint(dsbs_joint(g.tau), bsc(tt), bsc(tt))
    residual = tv_distance(marginalize(joint, [0, 3]), dsbs_joint(g.xy_crossover))
    return RegionWitness.from_joint(joint, residual)


def case5_rate(g: GapInputs) -> float:
    w = case5_witness(g)
    return max(w.i_zw, w.i_xyw)


def _axis(rng: Sequence[float], steps: int, name: str) -> np.ndarray:
    lo, hi = (float(v) for v in rng)
    _open(f"{name} lower end", lo)
    _open(f"{name} upper end", hi)
    if hi < lo:
        raise DomainError(f"{name} range is reversed")
    if steps == 1:
        if hi != lo:
            raise DomainError(f"a single-step {name} axis needs equal range ends")
        return np.array([lo])
    return np.linspace(lo, hi, steps)


def figure4_grid(
    theta_range: Sequence[float] = DEFAULT_RANGE, tau_range: Sequence[float] = DEFAULT_RANGE, steps: int = 25
) -> List[Tuple[float, float, float]]:
    """Gap lower bound on a ``steps x steps`` grid, theta-major, ends inclusive."""
    if int(steps) != steps or steps < 1:
        raise DomainError("steps must be a positive integer")
    thetas = _axis(theta_range, int(steps), "theta")
    taus = _axis(tau_range, int(steps), "tau")
    return [(float(t), float(u), rcs_gap_lower_bound(GapInputs(t, u))) for t in thetas for u in taus]


def figure4_csv(rows: Sequence[Tuple[float, float, float]]) -> str:
    out = [FIGURE4_HEADER]
    out += [f"{t:.6f},{u:.6f},{g:.6f}" for t, u, g in rows]
    return "\n".join(out) + "\n"


def concave_gap(a: float, b: float, c: float, d: float) -> float:
    """``-h(a) + h(b) + h(c) - h(d)``; positive whenever ``a < min(b,c)``, ``d > max(b,c)``, ``b + c > a + d``."""
    return -h(a) + h(b) + h(c) - h(d)


def third_condition_terms(theta: float, tau: float) -> Tuple[float, float]:
    """Both sides of the slack identity behind the last lemma condition."""
    root = math.sqrt(1.0 - 2.0 * theta)
    lhs = theta + (0.5 - (0.5 - tau) * root) - wyner_theta_tilde(theta) - (tau + (1 - 2 * tau) * theta)
    rhs = tau * root - tau * (1.0 - 2.0 * theta)
    return lhs, rhs


def xy_crossover(theta: float, tau: float) -> float:
    """``P(X != Y)`` for binary symmetric ``X - Z - Y``; no domain restriction."""
    return tau * (1 - theta) + (1 - tau) * theta
