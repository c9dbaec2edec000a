"""Phenomenological retention drift, endurance fitting and cycling stress.

Retention: each state's threshold moves by ``rate * log10(1 + t/t0)`` while
the clamp bias is applied; without it the programmed current collapses onto
the depolarized one with time constant ``fast_depol_tau``.

Fits are straight lines in log10 space, extrapolated to a failure criterion.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np

HORIZON_S = 1e10
HORIZON_CYCLES = 1e15


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class DriftModel:
    rate_p: float  # V/decade, programmed-state V_TH (positive = rises)
    rate_e: float  # V/decade, erased-state V_TH (negative = falls)
    t0: float = 1.0
    fast_depol_tau: float = 1e-3

    def __post_init__(self):
        if not (self.t0 > 0 and self.fast_depol_tau > 0):
            raise ValueError("t0 and fast_depol_tau must be positive")

    def shift(self, t: float) -> Tuple[float, float]:
        d = math.log10(1.0 + max(t, 0.0) / self.t0)
        return self.rate_p * d, self.rate_e * d


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    extrapolated_crossing: float  # inf when beyond the horizon
    exceeds_horizon: bool = False
    slope_off: float = float("nan")
    intercept_off: float = float("nan")

    def as_dict(self) -> dict:
        d = {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "extrapolated_crossing": None if self.exceeds_horizon else self.extrapolated_crossing,
            "exceeds_horizon": self.exceeds_horizon,
        }
        if not math.isnan(self.slope_off):
            d["slope_off"] = self.slope_off
            d["intercept_off"] = self.intercept_off
        return d


class SubthresholdReader:
    """Exponential I(V) stand-in: current changes one decade per ``swing`` volts."""

    def __init__(self, swing: float = 0.1):
        self.swing = swing

    def __call__(self, which: str, i0: float, dv: float) -> float:
        return i0 * 10.0 ** (-dv / self.swing)


def drift_sample(model: DriftModel, state0: Tuple[float, float], device=None,
                 t: float = 0.0, held: bool = True) -> Tuple[float, float]:
    """Currents (i_on, i_off) after ``t`` seconds.

    ``device(which, i0, dv)`` maps a threshold shift ``dv`` of state ``which``
    ('on' or 'off') to a new read current; the default is a 100 mV/decade
    exponential.
    """
    i_on, i_off = state0
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return i_on, i_off
    if not held:
        w = math.exp(-t / model.fast_depol_tau)
        return math.exp(math.log(i_off) + (math.log(i_on) - math.log(i_off)) * w), i_off
    reader = device or SubthresholdReader()
    dv_p, dv_e = model.shift(t)
    return reader("on", i_on, dv_p), reader("off", i_off, dv_e)


def retention_curve(model: DriftModel, state0, device, times: Sequence[float],
                    held: bool = True) -> np.ndarray:
    return np.array([drift_sample(model, state0, device, float(t), held) for t in times])


def retention_crossing(model: DriftModel, state0, device=None, ratio_min: float = 10.0,
                       t_max: float = HORIZON_S) -> float:
    """First held time at which i_on/i_off falls to ``ratio_min`` (inf if never)."""
    from scipy.optimize import brentq

    def g(logt):
        on, off = drift_sample(model, state0, device, 10.0**logt, True)
        return math.log10(on / off) - math.log10(ratio_min)

    if g(-6.0) <= 0:
        return 0.0
    grid = np.linspace(-6.0, math.log10(t_max), 161)
    vals = [g(x) for x in grid]
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa > 0 >= fb:
            return 10.0 ** brentq(g, a, b, xtol=1e-12)
    return math.inf


def _linfit(x: np.ndarray, y: np.ndarray) -> Tuple[float, float, float]:
    if x.size < 3:
        raise FitError("need at least 3 samples")
    if np.ptp(x) == 0:
        raise FitError("degenerate fit: all abscissae equal")
    a = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(a, y, rcond=None)
    ss_res = float(np.sum((y - (slope * x + icpt)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return float(slope), float(icpt), r2


def _check_increasing(x, what):
    if np.any(np.diff(x) <= 0):
        raise FitError(f"{what} must be strictly increasing")


def fit_retention(samples_on: Iterable[Tuple[float, float]], samples_off: Iterable[Tuple[float, float]],
                  ratio_min: float = 10.0) -> FitResult:
    """Fit log10(i) against log10(t) per state; extrapolate the ratio crossing.

    The returned slope/intercept describe log10(i_on/i_off) vs log10(t).
    """
    on = np.asarray(list(samples_on), dtype=float)
    off = np.asarray(list(samples_off), dtype=float)
    for arr, nm in ((on, "on"), (off, "off")):
        if arr.ndim != 2 or arr.shape[0] < 3:
            raise FitError(f"need at least 3 {nm}-state samples")
        if np.any(arr[:, 0] <= 0) or np.any(arr[:, 1] <= 0):
            raise FitError("times and currents must be positive")
        if np.ptp(arr[:, 0]) == 0:
            raise FitError("degenerate fit: all times equal")
        _check_increasing(arr[:, 0], "t")
    s_on, b_on, r_on = _linfit(np.log10(on[:, 0]), np.log10(on[:, 1]))
    s_off, b_off, r_off = _linfit(np.log10(off[:, 0]), np.log10(off[:, 1]))
    slope = s_on - s_off
    icpt = b_on - b_off
    target = math.log10(ratio_min)
    crossing = math.inf
    if slope < 0:
        crossing = 10.0 ** ((target - icpt) / slope) if (target - icpt) / slope < 308 else math.inf
    elif icpt <= target:
        crossing = 0.0
    exceeds = crossing > HORIZON_S
    return FitResult(slope, icpt, min(r_on, r_off), math.inf if exceeds else crossing,
                     exceeds, s_off, b_off)


def fit_endurance(points: Iterable[Tuple[float, float]], mw0: Optional[float] = None) -> FitResult:
    """Linear fit of MW against log10(cycles); crossing where MW = mw0/2."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise FitError("need at least 3 endurance points")
    if np.any(pts[:, 0] <= 0):
        raise FitError("cycle counts must be positive")
    _check_increasing(pts[:, 0], "n_cycles")
    if mw0 is None:
        mw0 = float(pts[0, 1])
    slope, icpt, r2 = _linfit(np.log10(pts[:, 0]), pts[:, 1])
    if np.all(np.diff(pts[:, 1]) >= 0) or slope >= 0:
        return FitResult(slope, icpt, r2, math.inf, True)
    x = (0.5 * mw0 - icpt) / slope
    crossing = 10.0**x if x < 308 else math.inf
    exceeds = crossing > HORIZON_CYCLES
    return FitResult(slope, icpt, r2, math.inf if exceeds else crossing, exceeds)


@dataclass(frozen=True)
class CyclingModel:
    shift_per_decade: float = 0.02  # parallel V_TH shift, V/decade
    mw_loss_per_decade: float = 0.04  # MW shrink, V/decade

    def degradation(self, n_pulses: float) -> Tuple[float, float]:
        d = math.log10(1.0 + max(n_pulses, 0.0))
        return self.shift_per_decade * d, self.mw_loss_per_decade * d


def cycling_stress(device, n_pulses: float, pulse: Tuple[float, float] = (6.0, 10e-6),
                   model: CyclingModel = CyclingModel()):
    """Device aged by ``n_pulses`` unipolar pulses.

    Both states shift in parallel; the window shrinks by a separate amount.
    ``device`` must provide ``aged(vth_shift, mw_loss)``.  The pulse shape is
    recorded for bookkeeping only: the coefficients are calibrated at 6 V / 10 us.
    """
    if n_pulses < 0:
        raise ValueError("n_pulses must be non-negative")
    if n_pulses == 0:
        return device
    shift, loss = model.degradation(n_pulses)
    return device.aged(shift, loss)


def endurance_dataset(measure: Callable[[float], float], cycles: Sequence[float]) -> np.ndarray:
    return np.array([(float(n), float(measure(n))) for n in cycles])


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def read_retention_csv(path) -> Tuple[list, list]:
    """Rows (t_seconds, current_A, state) with state in {on, off, P, E, 1, 0}."""
    on, off = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            t = float(row["t_seconds"])
            i = float(row["current_A"])
            st = row["state"].strip().lower()
            if st in ("on", "p", "1", "programmed"):
                on.append((t, i))
            elif st in ("off", "e", "0", "erased"):
                off.append((t, i))
            else:
                raise FitError(f"unknown state label {row['state']!r}")
    return on, off


def read_endurance_csv(path) -> list:
    with open(path, newline="") as fh:
        return [(float(r["cycles"]), float(r["mw_V"])) for r in csv.DictReader(fh)]


def write_retention_csv(path, samples_on, samples_off):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_seconds", "current_A", "state"])
        for t, i in samples_on:
            w.writerow([repr(float(t)), repr(float(i)), "on"])
        for t, i in samples_off:
            w.writerow([repr(float(t)), repr(float(i)), "off"])


def write_endurance_csv(path, points):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cycles", "mw_V"])
        for n, mw in points:
            w.writerow([repr(float(n)), repr(float(mw))])
