"""MFMIS AFeFET: floating-gate charge balance, I_D-V_GS / C-V sweeps, extraction.

The AFE capacitor (area A_AFE) and the MOS gate (area A_MOS = W * L) share a
floating gate.  Per unit AFE area the balance is

    eps E + p_scale P(E / e_scale) + q = AR * Q_mos(v_int),
    E = (v_gs - v_fb - v_int) / t_afe

where ``q`` is the trapped plus residual floating-gate charge.  The residual
part is a simple ratchet: it is set whenever the film is polarized and is
released only by driving the gate below ``v_release_start`` (fully at
``v_release_full``).  This is what distinguishes a 0 V erase from a -2 V one.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from . import _kernels as K
from .lgd import AfeBranchState, LgdParams

EPS0 = 8.8541878128e-12
THERMAL_VOLTAGE = K.THERMAL_VOLTAGE
CV_STEP = 1e-3
MAX_STEP = 5e-3


class SolverError(RuntimeError):
    """Outer charge-balance solve failed; carries the last residual."""

    def __init__(self, message, residual=float("nan"), index=-1):
        super().__init__(message)
        self.residual = residual
        self.index = index


class ExtractionError(ValueError):
    def __init__(self, message, branch=None):
        super().__init__(message)
        self.branch = branch


@dataclass(frozen=True)
class StackConfig:
    ar: float = 16.0
    t_afe: float = 10e-9
    eps_afe: float = 25 * EPS0
    c_ox: float = 20 * EPS0 / 7e-9
    v_fb: float = 0.0
    q_trap: float = 0.0
    c_min_frac: float = 1e-3
    q_residual: float = 0.0
    v_release_start: float = 0.0
    v_release_full: float = -2.0
    dvfb_polar: float = 0.0  # extra flat-band shift on polar branches (aging)

    def __post_init__(self):
        if not (self.ar > 0 and self.t_afe > 0 and self.c_ox > 0):
            raise ValueError("ar, t_afe and c_ox must be positive")
        if self.q_residual < 0:
            raise ValueError("q_residual must be non-negative")
        if self.q_residual > 0 and not self.v_release_full < self.v_release_start:
            raise ValueError("v_release_full must lie below v_release_start")


@dataclass(frozen=True)
class TransistorParams:
    w: float = 10e-6
    l_ch: float = 5e-6
    mu_cox: float = 1e-5
    v_t0: float = 0.5
    n_ss: float = 2.0
    i_gmin: float = 1e-6
    v_t_lin: float = 0.1

    def __post_init__(self):
        if min(self.w, self.l_ch, self.mu_cox, self.i_gmin, self.v_t_lin) <= 0:
            raise ValueError("transistor parameters must be positive")
        if self.n_ss < 1:
            raise ValueError("n_ss must be >= 1")

    @property
    def k_drive(self) -> float:
        return self.w / self.l_ch * self.mu_cox

    @property
    def floor(self) -> float:
        return self.w * self.i_gmin

    @property
    def swing(self) -> float:
        """Subthreshold swing in V/decade."""
        return self.n_ss * THERMAL_VOLTAGE * math.log(10.0)


def drain_current(trans: TransistorParams, v_int, v_ds: float = 0.1):
    """Drain current (A); smooth exponential-to-square-law in v_int.

    One swing ``n_ss * v_t * ln 10`` of v_int multiplies the subthreshold
    part by ten.
    """
    if v_ds < 0:
        raise ValueError("v_ds must be non-negative")
    v = np.asarray(v_int, dtype=float)
    two_nvt = 2.0 * trans.n_ss * THERMAL_VOLTAGE
    q = two_nvt * np.logaddexp(0.0, (v - trans.v_t0) / two_nvt)
    i = trans.k_drive * q * q * math.tanh(v_ds / trans.v_t_lin) + trans.floor
    return float(i) if i.ndim == 0 else i


@dataclass(frozen=True)
class Device:
    lgd: LgdParams
    stack: StackConfig = StackConfig()
    trans: TransistorParams = TransistorParams()

    @property
    def a_mos(self) -> float:
        return self.trans.w * self.trans.l_ch

    @property
    def a_afe(self) -> float:
        return self.a_mos / self.stack.ar

    def vector(self) -> np.ndarray:
        s, t, g = self.stack, self.trans, self.lgd
        d = np.zeros(K.N_DEVICE)
        d[K.D_ALPHA] = g.alpha
        d[K.D_BETA] = g.beta
        d[K.D_XI] = g.xi
        d[K.D_PSCALE] = g.p_scale
        d[K.D_ESCALE] = g.e_scale
        d[K.D_AR] = s.ar
        d[K.D_TAFE] = s.t_afe
        d[K.D_EPS] = s.eps_afe
        d[K.D_COX] = s.c_ox
        d[K.D_CMIN] = s.c_min_frac * s.c_ox
        d[K.D_VFB] = s.v_fb
        d[K.D_QTRAP] = s.q_trap
        d[K.D_NSS] = t.n_ss
        d[K.D_VT0] = t.v_t0
        d[K.D_KDRIVE] = t.k_drive
        d[K.D_FLOOR] = t.floor
        d[K.D_VTLIN] = t.v_t_lin
        d[K.D_AAFE] = self.a_afe
        d[K.D_QRES] = s.q_residual
        d[K.D_VREL_START] = s.v_release_start
        d[K.D_VREL_FULL] = s.v_release_full
        d[K.D_DVFB_POLAR] = s.dvfb_polar
        return d

    def with_ar(self, ar: float) -> "Device":
        return replace(self, stack=replace(self.stack, ar=float(ar)))

    def aged(self, vth_shift: float, mw_loss: float) -> "Device":
        """Both thresholds move up by ``vth_shift``; the window closes by ``mw_loss``."""
        s = self.stack
        st = replace(s, v_fb=s.v_fb + vth_shift - 0.5 * mw_loss, dvfb_polar=s.dvfb_polar + mw_loss)
        return replace(self, stack=st)

    def up_switch_voltage(self) -> float:
        """Film voltage at the low-to-high turning point."""
        return float(self.lgd.turning_fields()[-1]) * self.lgd.e_scale * self.stack.t_afe

    def release_cap(self, v_gs: float) -> float:
        return float(K.release_cap(self.vector(), float(v_gs)))

    def is_polar(self, p_norm: float) -> bool:
        return bool(K.is_polar(self.vector(), float(p_norm)))


@dataclass(frozen=True)
class StackSolution:
    v_afe: float
    v_int: float
    p: float  # C/m^2
    switching: bool
    residual: float = 0.0
    q_res: float = 0.0
    v_fb: float = 0.0

    @property
    def v_gs(self) -> float:
        return self.v_afe + self.v_int + self.v_fb


@dataclass(frozen=True)
class DeviceState:
    """Hysteresis memory of a device between bias points."""

    afe: AfeBranchState = AfeBranchState()
    q_res: float = 0.0


def solve_stack(device: Device, afe: AfeBranchState, v_gs: float,
                q_res: Optional[float] = None) -> Tuple[StackSolution, AfeBranchState]:
    """Charge balance at one gate bias, continuing the film branch from ``afe``.

    ``q_res`` is the residual floating-gate charge carried by the caller
    (defaults to none).  Raises SolverError when the outer loop fails.
    """
    sol, st, _ = _step(device, device.vector(), DeviceState(afe, q_res or 0.0), float(v_gs))
    return sol, st.afe


def step(device: Device, state: DeviceState, v_gs: float) -> Tuple[StackSolution, DeviceState]:
    sol, st, _ = _step(device, device.vector(), state, float(v_gs))
    return sol, st


def _step(device, dev, state, v_gs):
    v_int, v_afe, p, q, sw, res, status = K.step_device(dev, v_gs, float(state.afe.p), float(state.q_res))
    if status != K.OK:
        raise SolverError(f"stack solve failed at v_gs={v_gs:g} V (status {status})", res)
    e_norm = v_afe / device.stack.t_afe / device.lgd.e_scale
    sol = StackSolution(v_afe, v_int, p * device.lgd.p_scale, bool(sw), res, q, v_gs - v_afe - v_int)
    return sol, DeviceState(AfeBranchState(p, e_norm, bool(sw)), q), status


def frozen_current(device: Device, state: DeviceState, v_gs: float, v_ds: float = 0.1) -> float:
    """Read current with the film pinned to the branch of ``state``."""
    dev = device.vector()
    crit = np.empty(4)
    m = K.critical_points(dev[K.D_ALPHA], dev[K.D_BETA], dev[K.D_XI], crit)
    k = K.branch_id(crit, m, float(state.afe.p))
    v_int, p, res, st = K.solve_frozen(dev, float(v_gs), k, dev[K.D_QTRAP] + state.q_res)
    if st != K.OK:
        raise SolverError(f"frozen solve failed at v_gs={v_gs:g} V", res)
    return float(K.device_current(dev, v_int, v_ds))


class FrozenReader:
    """Maps a threshold shift of a stored state to its read current.

    A shift ``dv`` is applied as a gate offset: the state is read at
    ``v_m - dv`` with its film branch pinned.  Used by the drift model.
    """

    def __init__(self, device: Device, states: dict, v_m: float, v_ds: float = 0.1):
        self.device = device
        self.states = states
        self.v_m = v_m
        self.v_ds = v_ds
        self._ref = {k: frozen_current(device, s, v_m, v_ds) for k, s in states.items()}

    def __call__(self, which: str, i0: float, dv: float) -> float:
        i = frozen_current(self.device, self.states[which], self.v_m - dv, self.v_ds)
        return i0 * i / self._ref[which]


@dataclass
class SweepTrace:
    v_gs: np.ndarray
    i_d: np.ndarray
    c_gg: np.ndarray
    p: np.ndarray
    v_int: np.ndarray
    v_afe: np.ndarray
    direction: np.ndarray  # +1 rising, -1 falling, 0 flat
    switched: np.ndarray
    q_res: np.ndarray
    w: float = 10e-6
    final: DeviceState = field(default_factory=DeviceState)

    def __len__(self):
        return self.v_gs.size

    def segment(self, sign: int, which: int = -1) -> np.ndarray:
        """Indices of the ``which``-th monotone run with direction ``sign``."""
        runs = _runs(self.direction, sign)
        if not runs:
            return np.array([], dtype=int)
        return runs[which]

    def to_rows(self):
        branch = np.where(self.direction > 0, "up", np.where(self.direction < 0, "down", "flat"))
        for i in range(len(self)):
            yield (self.v_gs[i], self.i_d[i], self.c_gg[i], self.p[i], self.v_int[i], branch[i])

    CSV_HEADER = ("v_gs_V", "i_d_A", "c_gg_F", "p_C_per_m2", "v_int_V", "branch")


def _runs(direction, sign):
    idx = np.flatnonzero(direction == sign)
    if idx.size == 0:
        return []
    cuts = np.flatnonzero(np.diff(idx) > 1) + 1
    return np.split(idx, cuts)


def _directions(v: np.ndarray) -> np.ndarray:
    d = np.zeros(v.size, dtype=int)
    if v.size > 1:
        dv = np.sign(np.diff(v)).astype(int)
        d[1:] = dv
        d[0] = dv[0]
    return d


def sweep_idvg(device: Device, waveform: Sequence[float], v_ds: float = 0.1,
               initial: Optional[DeviceState] = None, c_v: bool = True) -> SweepTrace:
    """Quasi-static I_D-V_GS (and C-V) sweep along ``waveform``."""
    w = np.ascontiguousarray(waveform, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("waveform must be a non-empty 1-D sequence")
    if v_ds < 0:
        raise ValueError("v_ds must be non-negative")
    st0 = initial or DeviceState()
    dev = device.vector()
    out = np.empty((w.size, 8))
    p, q, status, idx = K.sweep(dev, w, float(st0.afe.p), float(st0.q_res), float(v_ds),
                                CV_STEP if c_v else 0.0, out)
    if status != K.OK:
        raise SolverError(f"stack solve failed at sample {idx} (v_gs={w[idx]:g} V)", index=int(idx))
    e_last = out[-1, 1] / device.stack.t_afe / device.lgd.e_scale
    final = DeviceState(AfeBranchState(float(p), float(e_last), bool(out[-1, 5])), float(q))
    return SweepTrace(
        v_gs=w.copy(), i_d=out[:, 3].copy(), c_gg=out[:, 4].copy(),
        p=out[:, 2] * device.lgd.p_scale, v_int=out[:, 0].copy(), v_afe=out[:, 1].copy(),
        direction=_directions(w), switched=out[:, 5].astype(bool), q_res=out[:, 6].copy(),
        w=device.trans.w, final=final)


def triangle_sweep(v_low: float, v_high: float, step: float = MAX_STEP, cycles: int = 1) -> np.ndarray:
    """v_low -> v_high -> v_low, repeated ``cycles`` times, shared endpoints."""
    n = int(round((v_high - v_low) / step))
    if n < 1:
        raise ValueError("v_high must exceed v_low by at least one step")
    up = np.linspace(v_low, v_high, n + 1)
    one = np.concatenate([up, up[-2::-1]])
    return np.concatenate([one] + [one[1:]] * (cycles - 1))


def _crossing(v, i, i_crit, rising):
    """Log-linear interpolation of the first sample pair straddling ``i_crit``."""
    li = np.log(i)
    lc = math.log(i_crit)
    above = li >= lc if rising else li < lc
    hits = np.flatnonzero(above)
    if hits.size == 0 or hits[0] == 0:
        return None
    j = hits[0]
    a, b = li[j - 1], li[j]
    if b == a:
        return float(v[j])
    return float(v[j - 1] + (lc - a) / (b - a) * (v[j] - v[j - 1]))


def extract_vth(trace: SweepTrace, i_crit_per_width: float = 1e-3) -> Tuple[float, float]:
    """(V_TH,E, V_TH,P) at the constant-current criterion.

    ``i_crit_per_width`` is in A/m (1e-3 A/m = 1e-3 uA/um).  The last rising
    run gives the erased threshold, the last falling run the programmed one.
    """
    i_crit = i_crit_per_width * trace.w
    out = []
    for sign, name in ((1, "up"), (-1, "down")):
        seg = trace.segment(sign)
        if seg.size < 2:
            raise ExtractionError(f"trace has no {name} branch", name)
        v = trace.v_gs[seg]
        i = trace.i_d[seg]
        x = _crossing(v, i, i_crit, rising=sign > 0)
        if x is None:
            raise ExtractionError(f"no crossing of {i_crit:.3g} A on the {name} branch", name)
        out.append(x)
    return out[0], out[1]


@dataclass(frozen=True)
class WindowMetrics:
    mw: float
    on_off: float
    i_on: float
    i_off: float
    v_th_p: float
    v_th_e: float


def branch_current(trace: SweepTrace, sign: int, v) -> np.ndarray:
    seg = trace.segment(sign)
    x = trace.v_gs[seg]
    y = np.log(trace.i_d[seg])
    o = np.argsort(x, kind="stable")
    return np.exp(np.interp(v, x[o], y[o]))


def extract_window_metrics(trace: SweepTrace, v_m: float = 1.5, i_crit: float = 1e-3) -> WindowMetrics:
    """Memory window and ON/OFF ratio at read bias ``v_m``."""
    if not trace.v_gs.min() <= v_m <= trace.v_gs.max():
        raise ValueError(f"v_m={v_m} outside the sweep range")
    v_e, v_p = extract_vth(trace, i_crit)
    i_on = float(branch_current(trace, -1, v_m))
    i_off = float(branch_current(trace, 1, v_m))
    return WindowMetrics(v_e - v_p, i_on / i_off, i_on, i_off, v_p, v_e)


def measure(device: Device, v_low: float = -2.0, v_high: float = 4.0, step: float = MAX_STEP,
            v_ds: float = 0.1, c_v: bool = False) -> SweepTrace:
    """Preconditioned double sweep; returns the second (steady-state) cycle."""
    wave = triangle_sweep(v_low, v_high, step, cycles=2)
    tr = sweep_idvg(device, wave, v_ds, c_v=c_v)
    n = (wave.size - 1) // 2
    sl = slice(n, None)
    return SweepTrace(tr.v_gs[sl], tr.i_d[sl], tr.c_gg[sl], tr.p[sl], tr.v_int[sl], tr.v_afe[sl],
                      _directions(tr.v_gs[sl]), tr.switched[sl], tr.q_res[sl], tr.w, tr.final)


# ---------------------------------------------------------------------------
# parameter files
# ---------------------------------------------------------------------------

_SECTIONS = (("lgd", LgdParams), ("stack", StackConfig), ("transistor", TransistorParams))


def device_to_text(device: Device) -> str:
    lines = []
    for name, cls in _SECTIONS:
        obj = getattr(device, "trans" if name == "transistor" else name)
        lines.append(f"[{name}]")
        for f in fields(cls):
            lines.append(f"{f.name} = {getattr(obj, f.name)!r}")
        lines.append("")
    return "\n".join(lines)


def save_device(device: Device, path) -> None:
    Path(path).write_text(device_to_text(device))


def parse_sections(text: str, source: str = "<string>") -> dict:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read_string(text, source=source)
    return {s: dict(cp[s]) for s in cp.sections()}


def device_from_sections(sections: dict, base: Optional[Device] = None) -> Device:
    base = base or calibrated_device()
    parts = {}
    for name, cls in _SECTIONS:
        attr = "trans" if name == "transistor" else name
        obj = getattr(base, attr)
        vals = sections.get(name, {})
        known = {f.name for f in fields(cls)}
        bad = set(vals) - known
        if bad:
            raise KeyError(f"unknown key(s) in [{name}]: {', '.join(sorted(bad))}")
        parts[attr] = replace(obj, **{k: float(v) for k, v in vals.items()})
    return Device(parts["lgd"], parts["stack"], parts["trans"])


def load_device(path, base: Optional[Device] = None) -> Device:
    p = Path(path)
    return device_from_sections(parse_sections(p.read_text(), str(p)), base)


from .calibrated import calibrated_device  # noqa: E402  (needs the classes above)
