"""Reproduce the constants frozen in ``lfvm/calibrated.py``.

Two stages:

    python3 benchmarks/calibrate.py device [--start params.json] [--maxfev N]
    python3 benchmarks/calibrate.py reliability

``device`` runs a bounded Nelder-Mead search on the window metrics (slow on
one core: roughly 0.5 s per evaluation).  ``reliability`` solves the drift and
cycling rates for the device currently frozen in the package.  Both print
Python assignments ready to paste.
"""

import argparse
import json
import math
import sys
from dataclasses import replace

import numpy as np
from scipy.optimize import brentq, minimize

from lfvm import calibrated
from lfvm.cell import CellModel, OperatingVoltages, erase, write
from lfvm.device import FrozenReader, extract_window_metrics, measure
from lfvm.reliability import (CyclingModel, DriftModel, cycling_stress, endurance_dataset, fit_endurance,
                              retention_crossing)

W, L = 10e-6, 5e-6
NAMES = ["up_v", "p_s", "eps_r", "n_ss", "v_t0", "v_fb", "q_trap", "q_res", "lfloor", "lk", "lcmin"]
BOUNDS = [(2.6, 5.0), (0.01, 0.065), (10, 60), (1.5, 5), (-1.5, 1.5), (-2, 2), (-0.15, 0.0), (0, 0.06),
          (-13, -9), (-6, -2), (-3, -0.5)]
VM = np.linspace(1.0, 2.0, 21)
STEP = 0.01  # coarser than the package default, for speed

# targets (window of the acceptance criteria, slightly tightened)
MW_TARGET, RATIO_TARGET = 1.0, 700.0
BI_LOW, BI_HIGH, BI_PEAK_V = 3.2e3, 1e5, 1.8
UNI_CROSSING_S = 3e4
BI_CROSSING_S = 3.15e9
BI_ENDURANCE, UNI_ENDURANCE = 1e12, 1e10


def device_from(x, ar=16.0):
    kw = dict(zip(NAMES, x))
    base = calibrated.calibrated_device(ar)
    lgd = replace(base.lgd, p_scale=kw["p_s"], e_scale=kw["up_v"] / (calibrated.T_AFE * calibrated.UP_FIELD_NORM))
    stack = replace(base.stack, eps_afe=kw["eps_r"] * calibrated.EPS0, v_fb=kw["v_fb"], q_trap=kw["q_trap"],
                    q_residual=kw["q_res"], c_min_frac=10 ** kw["lcmin"])
    trans = replace(base.trans, n_ss=kw["n_ss"], v_t0=kw["v_t0"], i_gmin=10 ** kw["lfloor"] / W,
                    mu_cox=10 ** kw["lk"] * L / W)
    return replace(base, lgd=lgd, stack=stack, trans=trans)


def _ratios(tr):
    return np.array([extract_window_metrics(tr, v).on_off for v in VM])


def objective(x, verbose=False):
    h = lambda v: max(0.0, v)  # noqa: E731
    lg = np.log10
    try:
        uni = measure(device_from(x), 0.0, 4.0, STEP)
        bi = measure(device_from(x), -2.0, 4.0, STEP)
        u8 = extract_window_metrics(measure(device_from(x, 8), 0.0, 4.0, STEP))
        u24 = extract_window_metrics(measure(device_from(x, 24), 0.0, 4.0, STEP))
        mu, mb = extract_window_metrics(uni).mw, extract_window_metrics(bi).mw
        ru, rb = _ratios(uni), _ratios(bi)
    except Exception:
        return 1e4
    r15 = ru[10]
    e = (h(abs(mu - MW_TARGET) - 0.15) / 0.02) ** 2 + (h(abs(lg(r15 / RATIO_TARGET)) - 0.09) / 0.01) ** 2
    e += (np.sum(np.clip(np.diff(lg(ru)) + 0.01, 0, None)) / 0.01) ** 2
    k = int(np.argmax(rb))
    e += (h(abs(VM[k] - BI_PEAK_V) - 0.12) / 0.03) ** 2 + (h(lg(rb[6]) - lg(rb[16]) + 0.05) / 0.05) ** 2
    e += (h(abs(lg(rb.min() / BI_LOW)) - 0.35) / 0.05) ** 2 + (h(abs(lg(rb.max() / BI_HIGH)) - 0.35) / 0.05) ** 2
    e += (h(mu + 0.1 - mb) / 0.02) ** 2
    e += (h(u8.mw - mu + 0.02) / 0.01) ** 2 + (h(lg(u24.on_off) - lg(r15) + 0.05) / 0.02) ** 2
    e += 0.1 * ((mu - MW_TARGET) / 0.1) ** 2 + 0.1 * (lg(r15 / RATIO_TARGET) / 0.05) ** 2
    if verbose:
        print(f"MW uni {mu:.3f} bi {mb:.3f} MW8 {u8.mw:.3f}; on/off(1.5) {r15:.4g} AR24 {u24.on_off:.4g}; "
              f"bi peak {rb.max():.3g} at {VM[k]:.2f} V", file=sys.stderr)
    return e


def current_x():
    d = calibrated
    return [d.FILM_UP_VOLTAGE, d.P_SCALE, d.EPS_R, d.N_SS, d.V_T0, d.V_FB, d.Q_TRAP, d.Q_RESIDUAL,
            math.log10(d.I_GMIN * W), math.log10(d.MU_COX * W / L), math.log10(d.C_MIN_FRAC)]


def run_device(start, maxfev):
    lo, hi = np.array(BOUNDS).T
    f = lambda x: objective(np.clip(x, lo, hi))  # noqa: E731
    r = minimize(f, start, method="Nelder-Mead", options=dict(maxfev=maxfev, adaptive=True))
    x = np.clip(r.x, lo, hi)
    objective(x, verbose=True)
    p = dict(zip(NAMES, x))
    print(f"FILM_UP_VOLTAGE = {p['up_v']:.6g}\nP_SCALE = {p['p_s']:.6g}\nEPS_R = {p['eps_r']:.6g}\n"
          f"N_SS = {p['n_ss']:.6g}\nV_T0 = {p['v_t0']:.6g}\nV_FB = {p['v_fb']:.6g}\nQ_TRAP = {p['q_trap']:.6g}\n"
          f"Q_RESIDUAL = {p['q_res']:.6g}\nI_GMIN = {10 ** p['lfloor'] / W:.6g}\n"
          f"MU_COX = {10 ** p['lk'] * L / W:.6g}\nC_MIN_FRAC = {10 ** p['lcmin']:.6g}")


def _crossing_for_rate(rate, unipolar):
    m = CellModel(drift_bipolar=DriftModel(rate, -rate, calibrated.DRIFT_T0, calibrated.FAST_DEPOL_TAU),
                  drift_unipolar=DriftModel(rate, -rate, calibrated.DRIFT_T0, calibrated.FAST_DEPOL_TAU))
    v = OperatingVoltages()
    c0 = m.fresh(v)
    on_c = write(c0, v, 1, m)
    # a 0 V erase only differs from a -2 V one after the film has been polar
    off_c = write(on_c, v, 0, m) if unipolar else erase(on_c, v, m)
    reader = FrozenReader(m.device, {"on": on_c.dev, "off": off_c.dev}, v.v_m)
    state0 = (m.current(on_c, v.v_m), m.current(off_c, v.v_m))
    return retention_crossing(m.drift_model(off_c), state0, reader, 10.0, 1e12)


def solve_drift(target, unipolar):
    g = lambda r: math.log10(_crossing_for_rate(r, unipolar)) - math.log10(target)  # noqa: E731
    return brentq(g, 2e-3, 0.2, xtol=1e-6)


def _endurance_for(loss, v_low, shift=0.01):
    base = calibrated.calibrated_device()
    model = CyclingModel(shift, loss)

    def mw(n):
        return extract_window_metrics(measure(cycling_stress(base, n, model=model), v_low, 4.0)).mw

    return fit_endurance(endurance_dataset(mw, np.logspace(0, 8, 5))).extrapolated_crossing


def solve_cycling(target, v_low):
    g = lambda loss: math.log10(_endurance_for(loss, v_low)) - math.log10(target)  # noqa: E731
    return brentq(g, 1e-3, 0.2, xtol=1e-5)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("stage", choices=("device", "reliability"))
    ap.add_argument("--start", help="JSON dict of starting knobs (default: current frozen values)")
    ap.add_argument("--maxfev", type=int, default=1500)
    a = ap.parse_args(argv)
    if a.stage == "device":
        x0 = current_x() if not a.start else [json.load(open(a.start))[k] for k in NAMES]
        run_device(np.array(x0), a.maxfev)
        return
    r_uni = solve_drift(UNI_CROSSING_S, True)
    r_bi = solve_drift(BI_CROSSING_S, False)
    c_bi = solve_cycling(BI_ENDURANCE, -2.0)
    c_uni = solve_cycling(UNI_ENDURANCE, 0.0)
    print(f"DRIFT_BIPOLAR = ({r_bi:.4g}, {-r_bi:.4g})\nDRIFT_UNIPOLAR = ({r_uni:.4g}, {-r_uni:.4g})")
    print(f"CYCLING_BIPOLAR = (0.01, {c_bi:.4g})\nCYCLING_UNIPOLAR = (0.01, {c_uni:.4g})")


if __name__ == "__main__":
    main()
