"""Landau free-energy landscape of a single-domain FE/AFE film.

Everything works in normalized units: ``p`` and ``e`` are dimensionless and
``LgdParams.p_scale`` / ``e_scale`` map them to C/m^2 and V/m.  The energy is

    G(p) = alpha/2 p^2 + beta/4 p^4 + xi/6 p^6 - e p

and equilibria are the real roots of ``alpha p + beta p^3 + xi p^5 = e``.
Quasi-static history is carried by ``AfeBranchState``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from . import _kernels as K


class LgdError(RuntimeError):
    """Raised when the root solver fails to produce a valid equilibrium."""

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = tuple(residuals)


@dataclass(frozen=True)
class LgdParams:
    alpha: float = 1.0
    beta: float = -1.8
    xi: float = 1.0
    p_scale: float = 1.0
    e_scale: float = 1.0

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError("xi must be positive (energy bounded below)")
        if not (self.p_scale > 0 and self.e_scale > 0):
            raise ValueError("p_scale and e_scale must be positive")
        if self.alpha == 0:
            raise ValueError("alpha must be nonzero (AFE: >0, FE: <0)")

    @property
    def regime(self) -> str:
        return "AFE" if self.alpha > 0 else "FE"

    def critical_points(self) -> np.ndarray:
        """Zeros of dG'/dp, i.e. the saddle-node (turning) polarizations."""
        buf = np.empty(4)
        n = K.critical_points(self.alpha, self.beta, self.xi, buf)
        return buf[:n].copy()

    def turning_fields(self) -> np.ndarray:
        """Fields at which a branch appears or vanishes, ascending."""
        pc = self.critical_points()
        return np.sort(pc * (self.alpha + self.beta * pc**2 + self.xi * pc**4))


REFERENCE_AFE = LgdParams()


@dataclass(frozen=True)
class Equilibrium:
    p: float
    stable: bool
    energy: float


@dataclass(frozen=True)
class AfeBranchState:
    p: float = 0.0
    e_last: float = 0.0
    switched: bool = False


def free_energy(params: LgdParams, p, e):
    """G at (p, e); accepts scalars or broadcastable arrays."""
    p = np.asarray(p, dtype=float)
    p2 = p * p
    g = p2 * (0.5 * params.alpha + p2 * (0.25 * params.beta + params.xi * p2 / 6.0)) - e * p
    return float(g) if g.ndim == 0 else g


def force(params: LgdParams, p):
    p = np.asarray(p, dtype=float)
    return p * (params.alpha + p * p * (params.beta + params.xi * p * p))


def curvature(params: LgdParams, p):
    """Second derivative of G with respect to p."""
    p = np.asarray(p, dtype=float)
    return params.alpha + p * p * (3.0 * params.beta + 5.0 * params.xi * p * p)


def equilibria(params: LgdParams, e: float, tol: float = 1e-9) -> List[Equilibrium]:
    """All real equilibria at field ``e``, sorted by p."""
    buf = np.empty(5)
    n = K.solve_roots(params.alpha, params.beta, params.xi, float(e), buf)
    roots = buf[:n]
    res = np.abs(force(params, roots) - e)
    scale = 1.0 + abs(e)
    if n == 0 or np.any(res > tol * scale):
        raise LgdError("root solver produced no valid equilibrium", res)
    out = [Equilibrium(float(p), bool(K.is_stable(params.alpha, params.beta, params.xi, p)),
                       free_energy(params, p, e)) for p in roots]
    if not any(q.stable for q in out):
        raise LgdError("no stable equilibrium found", res)
    return out


def stable_roots(params: LgdParams, e: float) -> np.ndarray:
    return np.array([q.p for q in equilibria(params, e) if q.stable])


def step_quasistatic(state: AfeBranchState, params: LgdParams, e_new: float) -> AfeBranchState:
    """Advance the film to ``e_new`` along its current hysteresis branch.

    If the branch has vanished the film drops into the adjacent minimum in
    the downhill direction and ``switched`` is set on the returned state.
    """
    p, sw = K.relax(params.alpha, params.beta, params.xi, float(state.p), float(e_new))
    return AfeBranchState(float(p), float(e_new), bool(sw))


def trace_pe_loop(params: LgdParams, e_waveform: Sequence[float],
                  initial: AfeBranchState | None = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fold ``step_quasistatic`` over a field waveform.

    Returns arrays (e, p, switched) with one entry per waveform sample.
    """
    e = np.ascontiguousarray(e_waveform, dtype=float)
    if e.ndim != 1 or e.size == 0:
        raise ValueError("waveform must be a non-empty 1-D sequence")
    initial = initial or AfeBranchState()
    p = np.empty_like(e)
    sw = np.zeros(e.size, dtype=np.bool_)
    K.trace_loop(params.alpha, params.beta, params.xi, e, float(initial.p), p, sw)
    return e, p, sw


def triangle(amplitude: float, step: float, *, bipolar: bool = True, cycles: int = 1) -> np.ndarray:
    """Triangular waveform starting at 0: 0 -> +A -> (-A ->) 0."""
    n = int(round(abs(amplitude) / step))
    if n < 1:
        raise ValueError("step larger than amplitude")
    up = np.linspace(0.0, amplitude, n + 1)
    legs = [up, up[-2::-1]]
    if bipolar:
        legs += [-up[1:], -up[-2::-1]]
    one = np.concatenate(legs)
    return np.concatenate([one] + [one[1:]] * (cycles - 1))


def switching_fields(e: Iterable[float], switched: Iterable[bool]) -> np.ndarray:
    e = np.asarray(list(e), dtype=float)
    return e[np.asarray(list(switched), dtype=bool)]
