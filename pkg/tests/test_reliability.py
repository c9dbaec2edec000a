import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lfvm.reliability import (CyclingModel, DriftModel, FitError, SubthresholdReader, cycling_stress,
                              drift_sample, fit_endurance, fit_retention, read_endurance_csv,
                              read_retention_csv, retention_crossing, write_endurance_csv,
                              write_retention_csv)

M = DriftModel(rate_p=0.05, rate_e=-0.05, t0=1.0, fast_depol_tau=1e-3)


def test_drift_model_validation():
    with pytest.raises(ValueError):
        DriftModel(0.1, -0.1, t0=0.0)
    with pytest.raises(ValueError):
        DriftModel(0.1, -0.1, fast_depol_tau=0.0)


class TestDriftSample:
    def test_t_zero(self):
        assert drift_sample(M, (1e-6, 1e-9), None, 0.0, True) == (1e-6, 1e-9)
        assert drift_sample(M, (1e-6, 1e-9), None, 0.0, False) == (1e-6, 1e-9)

    def test_unheld_merges(self):
        on, off = drift_sample(M, (1e-6, 1e-9), None, 1.0, False)
        assert on / off == pytest.approx(1.0, abs=1e-9)

    def test_unheld_relaxation_in_log_domain(self):
        on, off = drift_sample(M, (1e-6, 1e-9), None, M.fast_depol_tau, False)
        assert math.log10(on) == pytest.approx(-9 + 3 * math.exp(-1))

    def test_held_closed_form(self):
        # 100 mV/decade reader: current moves 0.5 decade per decade of time
        on, off = drift_sample(M, (1e-6, 1e-9), SubthresholdReader(0.1), 99.0, True)
        assert math.log10(on) == pytest.approx(-7.0)
        assert math.log10(off) == pytest.approx(-8.0)

    @settings(max_examples=60, deadline=None)
    @given(t1=st.floats(0, 1e9), t2=st.floats(0, 1e9))
    def test_monotone_in_t(self, t1, t2):
        lo, hi = sorted((t1, t2))
        on1, off1 = drift_sample(M, (1e-6, 1e-9), None, lo, True)
        on2, off2 = drift_sample(M, (1e-6, 1e-9), None, hi, True)
        assert on2 <= on1 and off2 >= off1

    def test_continuous_at_zero(self):
        on, off = drift_sample(M, (1e-6, 1e-9), None, 1e-12, True)
        assert on == pytest.approx(1e-6, rel=1e-9)
        assert off == pytest.approx(1e-9, rel=1e-9)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            drift_sample(M, (1e-6, 1e-9), None, -1.0, True)

    def test_crossing_closed_form(self):
        # ratio 1e3 loses 1 decade per decade of (1 + t): ratio 10 at t = 99
        assert retention_crossing(M, (1e-6, 1e-9), SubthresholdReader(0.1)) == pytest.approx(99.0, rel=1e-9)

    def test_crossing_never(self):
        flat = DriftModel(0.0, 0.0)
        assert retention_crossing(flat, (1e-6, 1e-9)) == math.inf


class TestFitRetention:
    t = np.logspace(0, 4, 9)

    def test_parallel_lines_never_cross(self):
        on = [(t, 7e-7) for t in self.t]
        off = [(t, 1e-9) for t in self.t]
        r = fit_retention(on, off, 10.0)
        assert r.exceeds_horizon and r.extrapolated_crossing == math.inf

    def test_closed_form_crossing(self):
        # off rises one decade per four decades, ratio 1e3 at 1 s -> 10 at 1e8 s
        on = [(t, 1e-6) for t in self.t]
        off = [(t, 1e-9 * t**0.25) for t in self.t]
        r = fit_retention(on, off, 10.0)
        assert r.extrapolated_crossing == pytest.approx(1e8, rel=1e-6)
        assert r.slope == pytest.approx(-0.25, abs=1e-12)
        assert r.intercept == pytest.approx(3.0, abs=1e-12)
        assert r.r_squared == pytest.approx(1.0)

    @settings(max_examples=50, deadline=None)
    @given(s_on=st.floats(-0.5, 0.0), s_off=st.floats(0.0, 0.5), b=st.floats(1.5, 4))
    def test_exact_recovery(self, s_on, s_off, b):
        on = [(t, 10 ** (-6 + s_on * math.log10(t))) for t in self.t]
        off = [(t, 10 ** (-6 - b + s_off * math.log10(t))) for t in self.t]
        r = fit_retention(on, off, 10.0)
        assert abs(r.slope - (s_on - s_off)) <= 1e-12
        assert abs(r.intercept - b) <= 1e-12

    @settings(max_examples=50, deadline=None)
    @given(r1=st.floats(2, 500), r2=st.floats(2, 500))
    def test_monotone_threat(self, r1, r2):
        on = [(t, 1e-6 * t**-0.1) for t in self.t]
        off = [(t, 1e-10 * t**0.2) for t in self.t]
        lo, hi = sorted((r1, r2))
        assert fit_retention(on, off, hi).extrapolated_crossing <= fit_retention(on, off, lo).extrapolated_crossing

    def test_too_few_samples(self):
        with pytest.raises(FitError):
            fit_retention([(1, 1e-6), (2, 1e-6)], [(1, 1e-9), (2, 1e-9), (3, 1e-9)])

    def test_degenerate_times(self):
        with pytest.raises(FitError):
            fit_retention([(1, 1e-6)] * 3, [(1, 1e-9)] * 3)

    def test_csv_roundtrip(self, tmp_path):
        on = [(t, 1e-6) for t in self.t]
        off = [(t, 1e-9 * t**0.25) for t in self.t]
        p = tmp_path / "ret.csv"
        write_retention_csv(p, on, off)
        a, b = read_retention_csv(p)
        assert fit_retention(a, b) == fit_retention(on, off)


class TestFitEndurance:
    n = np.logspace(0, 9, 10)

    def test_closed_form(self):
        pts = [(n, 1.0 - 0.05 * math.log10(n)) for n in self.n]
        r = fit_endurance(pts, 1.0)
        assert r.extrapolated_crossing == pytest.approx(1e10, rel=1e-6)

    def test_flat_exceeds_horizon(self):
        r = fit_endurance([(n, 1.0) for n in self.n], 1.0)
        assert r.exceeds_horizon

    def test_needs_three_points(self):
        with pytest.raises(FitError):
            fit_endurance([(1, 1.0), (10, 0.9)], 1.0)

    def test_increasing_n(self):
        with pytest.raises(FitError):
            fit_endurance([(10, 1.0), (1, 0.9), (100, 0.8)], 1.0)

    def test_csv_roundtrip(self, tmp_path):
        pts = [(n, 1.0 - 0.05 * math.log10(n)) for n in self.n]
        p = tmp_path / "end.csv"
        write_endurance_csv(p, pts)
        assert fit_endurance(read_endurance_csv(p), 1.0) == fit_endurance(pts, 1.0)


class _Dev:
    def __init__(self):
        self.calls = []

    def aged(self, shift, loss):
        self.calls.append((shift, loss))
        return (shift, loss)


class TestCycling:
    def test_zero_pulses_identity(self):
        d = _Dev()
        assert cycling_stress(d, 0) is d

    def test_log_law(self):
        m = CyclingModel(0.02, 0.04)
        shift, loss = cycling_stress(_Dev(), 1e9 - 1, model=m)
        assert shift == pytest.approx(0.18)
        assert loss == pytest.approx(0.36)

    def test_negative(self):
        with pytest.raises(ValueError):
            cycling_stress(_Dev(), -1)
