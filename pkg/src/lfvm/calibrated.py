"""Frozen calibration of the reference AR = 16 device and its drift rates.

Values come from a least-squares fit of the window metrics to the published
MW / ON-OFF targets (script: benchmarks/calibrate.py).  They are not physical
extractions.
"""

from __future__ import annotations

from .lgd import LgdParams

EPS0 = 8.8541878128e-12
T_AFE = 10e-9
UP_FIELD_NORM = 0.3064910313053752

# fitted knobs
FILM_UP_VOLTAGE = 3.87294  # film voltage at the up-switch, V
P_SCALE = 0.0337687  # C/m^2
EPS_R = 25.4402
N_SS = 3.31489
V_T0 = 0.298121
V_FB = -1.23114
Q_TRAP = -0.112832
Q_RESIDUAL = 0.0243444
I_GMIN = 5.39913e-06  # A/m
MU_COX = 0.000621963  # A/V^2
C_MIN_FRAC = 0.0314634


def calibrated_lgd() -> LgdParams:
    return LgdParams(1.0, -1.8, 1.0, P_SCALE, FILM_UP_VOLTAGE / (T_AFE * UP_FIELD_NORM))


def calibrated_device(ar: float = 16.0):
    from .device import Device, StackConfig, TransistorParams

    stack = StackConfig(ar=ar, t_afe=T_AFE, eps_afe=EPS_R * EPS0, c_ox=20 * EPS0 / 7e-9,
                        v_fb=V_FB, q_trap=Q_TRAP, c_min_frac=C_MIN_FRAC, q_residual=Q_RESIDUAL,
                        v_release_start=0.0, v_release_full=-2.0)
    trans = TransistorParams(w=10e-6, l_ch=5e-6, mu_cox=MU_COX, v_t0=V_T0, n_ss=N_SS,
                             i_gmin=I_GMIN, v_t_lin=0.1)
    return Device(calibrated_lgd(), stack, trans)


# drift rates, V/decade (programmed rises, erased falls)
DRIFT_T0 = 1.0
FAST_DEPOL_TAU = 1e-3
DRIFT_BIPOLAR = (0.07703, -0.07703)
DRIFT_UNIPOLAR = (0.07301, -0.07301)


def drift_bipolar():
    from .reliability import DriftModel

    return DriftModel(*DRIFT_BIPOLAR, t0=DRIFT_T0, fast_depol_tau=FAST_DEPOL_TAU)


def drift_unipolar():
    from .reliability import DriftModel

    return DriftModel(*DRIFT_UNIPOLAR, t0=DRIFT_T0, fast_depol_tau=FAST_DEPOL_TAU)


# cycling wear, V per decade of cycles: (mean V_TH shift, MW loss)
CYCLING_BIPOLAR = (0.01, 0.05809)
CYCLING_UNIPOLAR = (0.01, 0.04915)


def cycling_bipolar():
    from .reliability import CyclingModel

    return CyclingModel(*CYCLING_BIPOLAR)


def cycling_unipolar():
    from .reliability import CyclingModel

    return CyclingModel(*CYCLING_UNIPOLAR)
