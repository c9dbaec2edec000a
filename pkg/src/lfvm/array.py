"""Array-level retention power and refresh stall model.

    P(n) = p_cell * n + c_parasitic * n**1.5 + rows * e_refresh_row / t_retention_cell

Square arrays are assumed (rows = cols = sqrt(n_bits)); sizes are keyed by bit
count.  The last term and the stall fraction exist only for eDRAM.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

SRAM6T = "SRAM6T"
EDRAM2T = "EDRAM2T"
AF2T1 = "AF2T1"
TECHS = (SRAM6T, EDRAM2T, AF2T1)

PARASITIC_EXPONENT = 1.5

# published endpoints, (n_bits, W)
SRAM_ENDPOINTS = ((1024, 48.1e-6), (262144, 12.3e-3))
EDRAM_ENDPOINTS = ((1024, 2.8e-6), (262144, 11.5e-3))
AF_ENDPOINTS = ((1024, 11.5e-9), (262144, 11.8e-6))
CLAIMED_SAVINGS = {SRAM6T: 4178.0, EDRAM2T: 7805.0}

# assumed eDRAM refresh timing (not published)
EDRAM_T_RETENTION = 40e-6
EDRAM_T_REFRESH_ROW = 1e-9
EDRAM_E_REFRESH_ROW = 8e-15


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class ArrayConfig:
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be >= 1")

    @property
    def n_bits(self) -> int:
        return self.rows * self.cols

    @classmethod
    def square(cls, n_bits: int) -> "ArrayConfig":
        r = math.isqrt(n_bits)
        if r * r != n_bits:
            raise ValueError(f"{n_bits} is not a perfect square")
        return cls(r, r)

    @property
    def label(self) -> str:
        kb = self.n_bits / 1024
        return f"{kb:g}Kb" if kb >= 1 else f"{self.n_bits}b"


@dataclass(frozen=True)
class TechParams:
    tech: str
    p_cell: float = 0.0
    c_parasitic: float = 0.0
    e_refresh_row: float = 0.0
    t_retention_cell: float = 0.0
    t_refresh_row: float = 0.0
    residual: float = 0.0

    def __post_init__(self):
        if self.tech not in TECHS:
            raise ValueError(f"unknown technology {self.tech!r}")
        vals = (self.p_cell, self.c_parasitic, self.e_refresh_row,
                self.t_retention_cell, self.t_refresh_row)
        if any(v < 0 for v in vals):
            raise ValueError("technology parameters must be non-negative")
        if self.tech != EDRAM2T and (self.e_refresh_row or self.t_retention_cell or self.t_refresh_row):
            raise ValueError("refresh fields apply to eDRAM only")

    @property
    def refreshes(self) -> bool:
        return self.tech == EDRAM2T and self.t_retention_cell > 0


def retention_power(tech: TechParams, arr: ArrayConfig) -> float:
    n = arr.n_bits
    p = tech.p_cell * n + tech.c_parasitic * n**PARASITIC_EXPONENT
    if tech.refreshes:
        p += arr.rows * tech.e_refresh_row / tech.t_retention_cell
    return p


def inaccessible_fraction(tech: TechParams, arr: ArrayConfig) -> float:
    if not tech.refreshes:
        return 0.0
    return arr.rows * tech.t_refresh_row / tech.t_retention_cell


_SHAPES = {
    "linear": lambda n: float(n),
    "parasitic": lambda n: float(n) ** PARASITIC_EXPONENT,
}


def calibrate_power_model(endpoints: Sequence[Tuple[int, float]], model_shape: Sequence[str],
                          tech: str = AF2T1, base: Optional[TechParams] = None) -> TechParams:
    """Fit the named coefficients to (n_bits, W) endpoints.

    ``model_shape`` lists the free terms ('linear', 'parasitic').  Terms not
    listed keep their value from ``base`` and are subtracted first, so a fixed
    refresh cost can be held while the remaining terms absorb the rest.  The
    fit minimizes relative error and is exact when square.
    """
    base = base or TechParams(tech)
    shape = list(model_shape)
    for s in shape:
        if s not in _SHAPES:
            raise CalibrationError(f"unknown model term {s!r}")
    if len(endpoints) < len(shape):
        raise CalibrationError("fewer endpoints than free coefficients")
    ns = [int(n) for n, _ in endpoints]
    if len(set(ns)) != len(ns):
        raise CalibrationError("singular system: duplicate n_bits")
    fixed = replace(base, **{_field(s): 0.0 for s in shape})
    rows, rhs = [], []
    for n, w in endpoints:
        arr = ArrayConfig.square(int(n))
        rest = w - retention_power(fixed, arr)
        rows.append([_SHAPES[s](n) / w for s in shape])
        rhs.append(rest / w)
    a = np.array(rows)
    b = np.array(rhs)
    if np.linalg.matrix_rank(a) < len(shape):
        raise CalibrationError("singular system")
    coef, *_ = np.linalg.lstsq(a, b, rcond=None)
    out = replace(fixed, **{_field(s): float(c) for s, c in zip(shape, coef)}) if np.all(coef >= 0) else None
    if out is None:
        raise CalibrationError(f"negative coefficient(s) {coef.tolist()} for shape {shape}")
    rel = [abs(retention_power(out, ArrayConfig.square(int(n))) / w - 1.0) for n, w in endpoints]
    return replace(out, residual=max(rel))


def _field(term: str) -> str:
    return {"linear": "p_cell", "parasitic": "c_parasitic"}[term]


def calibrated_techs() -> Dict[str, TechParams]:
    sram = calibrate_power_model(SRAM_ENDPOINTS[:1], ["linear"], SRAM6T)
    edram_base = TechParams(EDRAM2T, e_refresh_row=EDRAM_E_REFRESH_ROW,
                            t_retention_cell=EDRAM_T_RETENTION, t_refresh_row=EDRAM_T_REFRESH_ROW)
    edram = calibrate_power_model(EDRAM_ENDPOINTS, ["parasitic"], EDRAM2T, edram_base)
    af = calibrate_power_model(AF_ENDPOINTS, ["linear", "parasitic"], AF2T1)
    return {SRAM6T: sram, EDRAM2T: edram, AF2T1: af}


@dataclass(frozen=True)
class GateLeakModel:
    """Per-cell gate current i0 * exp(v / v0), fitted to two array anchors."""

    i0: float
    v0: float

    @classmethod
    def fit(cls, anchors=((1.0, 5e-12), (2.0, 20e-12)), n_bits: int = 1024) -> "GateLeakModel":
        (v1, p1), (v2, p2) = anchors
        i1 = p1 / (n_bits * v1)
        i2 = p2 / (n_bits * v2)
        v0 = (v2 - v1) / math.log(i2 / i1)
        return cls(i1 * math.exp(-v1 / v0), v0)

    def current(self, v: float) -> float:
        return self.i0 * math.exp(v / self.v0)


def vm_leakage(arr: ArrayConfig, v_m: float, gate_leak_model: Optional[GateLeakModel] = None) -> float:
    m = gate_leak_model or GateLeakModel.fit()
    return arr.n_bits * m.current(v_m) * v_m


@dataclass(frozen=True)
class PowerRow:
    n_bits: int
    rows: int
    tech: str
    power_w: float
    inaccessible_fraction: float
    savings_vs_af: Optional[float]


@dataclass
class PowerReport:
    rows: List[PowerRow] = field(default_factory=list)
    claimed_savings: Dict[str, float] = field(default_factory=dict)

    def ratio(self, tech: str, n_bits: int) -> Optional[float]:
        for r in self.rows:
            if r.tech == tech and r.n_bits == n_bits:
                return r.savings_vs_af
        raise KeyError((tech, n_bits))

    def power(self, tech: str, n_bits: int) -> float:
        for r in self.rows:
            if r.tech == tech and r.n_bits == n_bits:
                return r.power_w
        raise KeyError((tech, n_bits))

    def max_savings(self, tech: str) -> Optional[float]:
        vals = [r.savings_vs_af for r in self.rows if r.tech == tech and r.savings_vs_af is not None]
        return max(vals) if vals else None


def compare(configs: Sequence[ArrayConfig], techs: Sequence[TechParams]) -> PowerReport:
    """Power, stall fraction and savings over 2T1AF for every (size, tech)."""
    af = next((t for t in techs if t.tech == AF2T1), None)
    rep = PowerReport(claimed_savings=dict(CLAIMED_SAVINGS) if af else {})
    for arr in configs:
        p_af = retention_power(af, arr) if af else None
        for t in techs:
            p = retention_power(t, arr)
            ratio = None
            if af is not None and t.tech != AF2T1 and p_af > 0:
                ratio = p / p_af
            rep.rows.append(PowerRow(arr.n_bits, arr.rows, t.tech, p,
                                     inaccessible_fraction(t, arr), ratio))
    return rep


def standard_sizes(lo: int = 1024, hi: int = 262144) -> List[ArrayConfig]:
    out = []
    n = lo
    while n <= hi:
        out.append(ArrayConfig.square(n))
        n *= 4
    return out
