"""2T1AF cell: write/erase through T_w, read through T_r, clamped hold at V_m.

The storage node is the AFeFET gate.  Writes ramp the node quasi-statically
to the bitline level and back to V_m; holds leave it at V_m (or at an
override) and advance the drift clock.  Reads never touch the gate.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import calibrated
from .device import MAX_STEP, Device, DeviceState, frozen_current, step
from .reliability import DriftModel

CLAMP_TOL = 10e-6
PULSE_WIDTH = 10e-3


class ConfigError(ValueError):
    pass


class ScriptError(ValueError):
    def __init__(self, message, line=None, column=None):
        super().__init__(message if line is None else f"line {line}, col {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class OperatingVoltages:
    v_w: float = 4.0
    v_e: float = -2.0
    v_h: float = 5.5
    v_m: float = 1.5
    vdd_read: float = 1.0
    access_vth: float = 0.7


@dataclass(frozen=True)
class AccessTransistor:
    on_resistance: float = 10e3
    off_conductance: float = 1e-12
    gate_leak: float = 10e-12

    def __post_init__(self):
        if self.on_resistance <= 0 or self.off_conductance < 0 or self.gate_leak < 0:
            raise ValueError("invalid access transistor")


@dataclass(frozen=True)
class CellState:
    node_v: float
    dev: DeviceState = DeviceState()
    drift_clock: float = 0.0
    stored_bit_intent: Optional[int] = None
    erase_depth: float = 0.0  # 0 = full (bipolar) erase, 1 = 0 V erase

    @property
    def afe(self):
        return self.dev.afe


@dataclass(frozen=True)
class HoldReport:
    ds_leakage_power: float
    hold_power: float
    v_source: float
    v_drain: float


@dataclass(frozen=True)
class HoldWindow:
    v_down: float  # programmed state collapses below this gate bias
    v_up: float  # erased state switches above this gate bias

    def margin(self, v_m: float) -> float:
        return min(v_m - self.v_down, self.v_up - v_m)


def _ramp(a: float, b: float, step_v: float = MAX_STEP) -> np.ndarray:
    n = max(1, int(math.ceil(abs(b - a) / step_v)))
    return np.linspace(a, b, n + 1)[1:]


class CellModel:
    """Device plus peripheral parameters shared by every cell of an array."""

    def __init__(self, device: Optional[Device] = None, access: AccessTransistor = AccessTransistor(),
                 drift_bipolar: Optional[DriftModel] = None, drift_unipolar: Optional[DriftModel] = None,
                 v_ds_read: float = 0.1, reference_volts: OperatingVoltages = OperatingVoltages()):
        self.device = device or calibrated.calibrated_device()
        self.access = access
        self.drift_bipolar = drift_bipolar or calibrated.drift_bipolar()
        self.drift_unipolar = drift_unipolar or calibrated.drift_unipolar()
        self.v_ds_read = v_ds_read
        self._ref_volts = reference_volts
        self._sense: Dict[float, float] = {}
        self._window: Optional[HoldWindow] = None

    # -- state helpers -----------------------------------------------------
    def fresh(self, volts: OperatingVoltages = OperatingVoltages()) -> CellState:
        st = DeviceState()
        for v in _ramp(0.0, volts.v_m):
            _, st = step(self.device, st, v)
        return CellState(volts.v_m, st)

    def drive(self, cell: CellState, target: float, volts: OperatingVoltages) -> CellState:
        st = cell.dev
        for v in _ramp(cell.node_v, target):
            _, st = step(self.device, st, v)
        for v in _ramp(target, volts.v_m):
            _, st = step(self.device, st, v)
        return replace(cell, node_v=volts.v_m, dev=st)

    def drift_model(self, cell: CellState) -> DriftModel:
        a, b = self.drift_bipolar, self.drift_unipolar
        f = min(max(cell.erase_depth, 0.0), 1.0)
        return DriftModel(a.rate_p + f * (b.rate_p - a.rate_p), a.rate_e + f * (b.rate_e - a.rate_e),
                          a.t0, a.fast_depol_tau)

    def is_programmed_state(self, cell: CellState) -> bool:
        return self.device.is_polar(cell.dev.afe.p)

    def current(self, cell: CellState, v_m: float) -> float:
        """Read current with drift applied as a gate offset on the frozen branch."""
        dv_p, dv_e = self.drift_model(cell).shift(cell.drift_clock)
        dv = dv_p if self.is_programmed_state(cell) else dv_e
        return frozen_current(self.device, cell.dev, v_m - dv, self.v_ds_read)

    def sense_threshold(self, volts: OperatingVoltages) -> float:
        """Geometric mean of fresh programmed and fully-erased currents at v_m."""
        key = round(volts.v_m, 9)
        if key not in self._sense:
            ref = replace(self._ref_volts, v_m=volts.v_m)
            c = self.fresh(ref)
            on = self.current(self.drive(c, ref.v_w, ref), ref.v_m)
            off = self.current(self.drive(c, ref.v_e, ref), ref.v_m)
            self._sense[key] = math.sqrt(on * off)
        return self._sense[key]

    def hold_window(self, volts: OperatingVoltages = OperatingVoltages()) -> HoldWindow:
        """Gate biases at which a held programmed / erased state is lost."""
        if self._window is None:
            from .device import measure

            tr = measure(self.device, volts.v_e, volts.v_w)
            up = tr.segment(1)
            dn = tr.segment(-1)
            v_up = tr.v_gs[up][tr.switched[up]]
            v_dn = tr.v_gs[dn][tr.switched[dn]]
            self._window = HoldWindow(float(v_dn[0]) if v_dn.size else -math.inf,
                                      float(v_up[0]) if v_up.size else math.inf)
        return self._window


_DEFAULT: Optional[CellModel] = None


def default_model() -> CellModel:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = CellModel()
    return _DEFAULT


def validate(volts: OperatingVoltages) -> None:
    if not volts.v_h > volts.v_w + volts.access_vth:
        raise ConfigError(f"v_h={volts.v_h} V must exceed v_w + V_TH = {volts.v_w + volts.access_vth} V")
    if volts.vdd_read <= 0:
        raise ConfigError("vdd_read must be positive")


def write(cell: CellState, volts: OperatingVoltages, bit: int, model: Optional[CellModel] = None) -> CellState:
    """Drive the node to v_w (1) or ground (0) for one pulse, then re-clamp."""
    validate(volts)
    m = model or default_model()
    target = volts.v_w if bit else 0.0
    out = m.drive(cell, target, volts)
    depth = cell.erase_depth
    if not bit:
        depth = out.dev.q_res / m.device.stack.q_residual if m.device.stack.q_residual > 0 else 0.0
    return replace(out, drift_clock=0.0, stored_bit_intent=1 if bit else 0, erase_depth=depth)


def erase(cell: CellState, volts: OperatingVoltages, model: Optional[CellModel] = None) -> CellState:
    validate(volts)
    m = model or default_model()
    out = m.drive(cell, volts.v_e, volts)
    q_max = m.device.stack.q_residual
    depth = out.dev.q_res / q_max if q_max > 0 else 0.0
    return replace(out, drift_clock=0.0, stored_bit_intent=0, erase_depth=depth)


def read(cell: CellState, volts: OperatingVoltages, model: Optional[CellModel] = None) -> Tuple[int, CellState]:
    """Precharge RBL, let the AFeFET discharge it; the gate stays at v_m."""
    m = model or default_model()
    if abs(cell.node_v - volts.v_m) > CLAMP_TOL:
        raise ValueError("read requires the cell to be held at v_m")
    i = m.current(cell, volts.v_m)
    return (1 if i > m.sense_threshold(volts) else 0), cell


def hold(cell: CellState, volts: OperatingVoltages, dt: float, model: Optional[CellModel] = None,
         v_hold: Optional[float] = None) -> Tuple[CellState, HoldReport]:
    """Clamp both sides of T_w at the hold bias for ``dt`` seconds.

    ``v_hold`` overrides the clamp level (e.g. 0 to remove V_m); the node is
    returned to v_m afterwards.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    m = model or default_model()
    vh = volts.v_m if v_hold is None else v_hold
    rep = HoldReport(0.0, m.access.gate_leak * vh, vh, vh)
    if dt == 0:
        return cell, rep
    out = cell
    if vh != volts.v_m:
        out = m.drive(cell, vh, volts)
        if m.is_programmed_state(cell) and not m.is_programmed_state(out):
            out = replace(out, erase_depth=out.dev.q_res / m.device.stack.q_residual
                          if m.device.stack.q_residual > 0 else 0.0)
    # write transistor: source = WBL = v_hold, drain = node = v_hold
    rep = HoldReport((rep.v_drain - rep.v_source) ** 2 * m.access.off_conductance,
                     rep.hold_power, rep.v_source, rep.v_drain)
    return replace(out, drift_clock=out.drift_clock + dt), rep


# ---------------------------------------------------------------------------
# small arrays, scripts and disturb analysis
# ---------------------------------------------------------------------------

@dataclass
class CellArray:
    rows: int
    cols: int
    model: CellModel
    volts: OperatingVoltages
    cells: List[List[CellState]] = field(default_factory=list)

    def __post_init__(self):
        if not self.cells:
            c = self.model.fresh(self.volts)
            self.cells = [[c for _ in range(self.cols)] for _ in range(self.rows)]


@dataclass(frozen=True)
class Op:
    kind: str
    args: Tuple[float, ...] = ()
    opts: Tuple[Tuple[str, float], ...] = ()


_OPS = {"WRITE": 3, "ERASE": 2, "READ": 2, "HOLD": 1}


def parse_script(text: str) -> List[Op]:
    """Parse WRITE r c b / ERASE r c / READ r c / HOLD seconds [v_m=V] lines."""
    ops = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        toks = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]
        name, col = toks[0]
        kind = name.upper()
        if kind not in _OPS:
            raise ScriptError(f"unknown command {name!r}", ln, col)
        pos = [t for t in toks[1:] if "=" not in t[0]]
        kw = [t for t in toks[1:] if "=" in t[0]]
        if len(pos) != _OPS[kind]:
            raise ScriptError(f"{kind} takes {_OPS[kind]} argument(s), got {len(pos)}", ln, col)
        args = []
        for tok, c in pos:
            try:
                args.append(float(tok))
            except ValueError:
                raise ScriptError(f"bad number {tok!r}", ln, c) from None
        if kind != "HOLD":
            if any(a != int(a) or a < 0 for a in args):
                raise ScriptError("indices and bits must be non-negative integers", ln, col)
            if kind == "WRITE" and args[2] not in (0, 1):
                raise ScriptError("bit must be 0 or 1", ln, pos[2][1])
        elif args[0] < 0:
            raise ScriptError("hold time must be non-negative", ln, pos[0][1])
        opts = []
        for tok, c in kw:
            k, _, v = tok.partition("=")
            if kind != "HOLD" or k.lower() != "v_m":
                raise ScriptError(f"unexpected option {tok!r}", ln, c)
            try:
                opts.append(("v_m", float(v)))
            except ValueError:
                raise ScriptError(f"bad number {v!r}", ln, c) from None
        ops.append(Op(kind, tuple(args), tuple(opts)))
    return ops


def run_script(ops: Sequence[Op], arr: CellArray) -> List[dict]:
    """Apply ``ops`` to ``arr`` in order; one log record per op."""
    log = []
    m, volts = arr.model, arr.volts
    for op in ops:
        rec = {"op": op.kind, "args": list(op.args)}
        if op.kind == "HOLD":
            vh = dict(op.opts).get("v_m")
            power = 0.0
            for r in range(arr.rows):
                for c in range(arr.cols):
                    arr.cells[r][c], rep = hold(arr.cells[r][c], volts, op.args[0], m, vh)
                    power += rep.hold_power
            rec.update(node_v=volts.v_m if vh is None else vh, p=None, bit_read=None, hold_power=power)
        else:
            r, c = int(op.args[0]), int(op.args[1])
            if r >= arr.rows or c >= arr.cols:
                raise ScriptError(f"cell ({r}, {c}) outside the {arr.rows}x{arr.cols} array")
            cell = arr.cells[r][c]
            bit = None
            if op.kind == "WRITE":
                cell = write(cell, volts, int(op.args[2]), m)
            elif op.kind == "ERASE":
                cell = erase(cell, volts, m)
            else:
                bit, cell = read(cell, volts, m)
            arr.cells[r][c] = cell
            rec.update(node_v=cell.node_v, p=cell.dev.afe.p * m.device.lgd.p_scale, bit_read=bit,
                       hold_power=m.access.gate_leak * volts.v_m)
        log.append(rec)
    return log


@dataclass(frozen=True)
class DisturbReport:
    worst_excursion_v: float
    switching_events: int
    margin_v: float
    margin_ok: bool

    @property
    def disturbed(self) -> bool:
        return self.switching_events > 0 or not self.margin_ok


def check_disturb(pattern: Sequence[Op], volts: OperatingVoltages, rows: int = 2, cols: int = 2,
                  model: Optional[CellModel] = None) -> DisturbReport:
    """Replay ``pattern`` and watch every cell that is not the target.

    With WWL off the node is isolated, and unselected columns see WBL = v_m, so
    half-selected gates never move.  The disturb flag also trips when v_m sits
    within 0.1 V of a hold-window edge.
    """
    m = model or default_model()
    arr = CellArray(rows, cols, m, volts)
    worst = 0.0
    events = 0
    for op in pattern:
        before = [[arr.cells[r][c] for c in range(cols)] for r in range(rows)]
        run_script([op], arr)
        tgt = (int(op.args[0]), int(op.args[1])) if op.kind != "HOLD" else None
        for r in range(rows):
            for c in range(cols):
                if (r, c) == tgt:
                    continue
                # unselected gate bias during this op
                if tgt is not None and r == tgt[0]:
                    v_gate = volts.v_m  # WBL of unselected columns held at v_m
                else:
                    v_gate = before[r][c].node_v  # WWL off: isolated node
                worst = max(worst, abs(v_gate - volts.v_m))
                a = before[r][c].dev.afe.p
                b = arr.cells[r][c].dev.afe.p
                if op.kind != "HOLD" and m.device.is_polar(a) != m.device.is_polar(b):
                    events += 1
    margin = m.hold_window(volts).margin(volts.v_m)
    return DisturbReport(worst, events, margin, margin >= 0.1)
