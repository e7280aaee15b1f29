import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sqzest import __version__
from sqzest.channel import ChannelParams
from sqzest.collective import is_psd_2x2, observable_covariance
from sqzest.estimation import (CSV_HEADER, FIG2_EXPONENTS, NORMALIZATION, SingularJacobianError,
                               UnidentifiablePhaseError, balance_exponent, estimator_covariance,
                               expansion_diagnostics, fundamental_bound, inv2, log_grid,
                               predicted_slopes, product_bound, propagate, protocol_report,
                               read_csv, records_to_csv, sweep, sweep_point)
from sqzest.moments import SqueezingConfig


class TestInverse:
    def test_inv2(self):
        m = np.array([[2.0, 1.0], [0.5, 3.0]])
        assert np.allclose(inv2(m) @ m, np.eye(2))

    def test_singular(self):
        with pytest.raises(SingularJacobianError):
            inv2(np.array([[1.0, 2.0], [2.0, 4.0]]))
        with pytest.raises(SingularJacobianError):
            inv2(np.zeros((2, 2)))

    def test_tiny_but_regular(self):
        m = np.diag([1e-200, 1e-150])
        assert np.allclose(inv2(m) @ m, np.eye(2))

    def test_propagate_matches_information_form(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            d = rng.normal(size=(2, 2))
            a = rng.normal(size=(2, 2))
            s = a @ a.T + 0.1 * np.eye(2)
            ref = np.linalg.inv(d.T @ np.linalg.inv(s) @ d)
            assert np.allclose(propagate(d, s), ref, rtol=1e-9)


class TestBounds:
    def test_values(self):
        assert np.allclose(fundamental_bound(100, 0.8), np.diag([0.0036, 0.005625]))
        assert np.allclose(fundamental_bound(7, 1.0), np.zeros((2, 2)))

    def test_product_ratio(self):
        for eta in (0.2, 0.8, 0.95):
            r = product_bound(10, eta)[1, 1] / fundamental_bound(10, eta)[1, 1]
            assert r == pytest.approx(1 / (1 - eta**2))

    def test_zero_eta(self):
        assert math.isinf(fundamental_bound(10, 0.0)[1, 1])
        assert math.isinf(product_bound(10, 0.0)[1, 1])

    @pytest.mark.parametrize("n, eta", [(0, 0.5), (10, 1.5), (10, -0.1)])
    def test_bad_args(self, n, eta):
        with pytest.raises(ValueError):
            fundamental_bound(n, eta)


class TestEstimatorCovariance:
    @given(st.integers(2, 10**8), st.floats(0.05, 1.0))
    @settings(max_examples=60, deadline=None)
    def test_chi_zero_phase_variance(self, n, eta):
        cov, _ = estimator_covariance(SqueezingConfig(n, 0.0), ChannelParams(eta))
        assert cov[1, 1] * n * eta**2 == pytest.approx(1.0, abs=1e-12)

    def test_diagonal(self):
        cov, _ = estimator_covariance(SqueezingConfig(1000, 0.01), ChannelParams(0.8))
        assert cov[0, 1] == 0.0 and cov[1, 0] == 0.0

    def test_zero_eta(self):
        with pytest.raises(UnidentifiablePhaseError):
            estimator_covariance(SqueezingConfig(100, 0.01), ChannelParams(0.0))

    def test_noiseless_limit(self):
        cov, flags = estimator_covariance(SqueezingConfig(100, 0.01), ChannelParams(1.0))
        assert "noiseless_limit" in flags
        assert cov[0, 0] == 0.0
        assert cov[1, 1] > 0.0

    def test_psd_and_dominance(self):
        rep = protocol_report(SqueezingConfig(10**5, (10**5) ** (-5 / 6)), ChannelParams(0.8))
        assert is_psd_2x2(rep.est_cov)
        assert rep.dominates_bound

    def test_large_n_window(self):
        n = 10**8
        rep = protocol_report(SqueezingConfig.from_exponent(n, -5 / 6), ChannelParams(0.8))
        assert 1.0 <= rep.normalized[0] <= 1.2

    def test_explicit_stats(self):
        cfg, p = SqueezingConfig(50, 0.05), ChannelParams(0.7)
        stats = observable_covariance(cfg, p)
        a, _ = estimator_covariance(cfg, p, stats=stats)
        b, _ = estimator_covariance(cfg, p)
        assert np.array_equal(a, b)


class TestReport:
    def test_json(self):
        rep = protocol_report(SqueezingConfig.from_exponent(10**5, -0.8333), ChannelParams(0.8))
        data = rep.to_json()
        assert data["version"] == __version__
        assert data["normalization"] == NORMALIZATION
        assert data["normalized"]["norm_var_eta"] > 1 and data["normalized"]["norm_var_phi"] > 1

    def test_chi_zero_phase_entry(self):
        rep = protocol_report(SqueezingConfig(100, 0.0), ChannelParams(0.8))
        assert rep.normalized[1] == pytest.approx(1 / 0.36, abs=1e-12)

    def test_noiseless_report(self):
        rep = protocol_report(SqueezingConfig(100, 0.01), ChannelParams(1.0))
        data = rep.to_json()
        assert "noiseless_limit" in data["flags"]
        assert data["normalized"]["norm_var_eta"] is None


class TestSweep:
    def test_sorted_and_sentinel(self):
        recs = sweep(0.8, [-0.75, -math.inf], [1000, 100])
        assert [(r.p, r.n) for r in recs] == [(-math.inf, 100), (-math.inf, 1000), (-0.75, 100), (-0.75, 1000)]
        assert recs[0].chi == 0.0
        assert recs[2].chi == pytest.approx(100**-0.75, rel=1e-15)

    def test_csv(self):
        text = records_to_csv(sweep(0.8, [-math.inf, -5 / 6], [100, 1000]))
        lines = text.splitlines()
        assert lines[0].startswith("#") and __version__ in lines[0]
        assert lines[1] == ",".join(CSV_HEADER) == "n,p,chi,eta,norm_var_eta,norm_var_phi"
        assert lines[2].split(",")[1] == "inf"
        rows = read_csv(text)
        assert len(rows) == 4 and float(rows[0]["norm_var_phi"]) == pytest.approx(1 / 0.36)

    def test_csv_deterministic(self):
        a = records_to_csv(sweep(0.8, FIG2_EXPONENTS, log_grid(1e2, 1e8, 13)))
        b = records_to_csv(sweep(0.8, FIG2_EXPONENTS[::-1], log_grid(1e2, 1e8, 13)[::-1]))
        assert a == b

    def test_zero_eta_flagged(self):
        r = sweep_point(100, -0.75, 0.0)
        assert "phase_unidentifiable" in r.flags

    def test_log_grid(self):
        g = log_grid(1e2, 1e8, 7)
        assert g == [10**k for k in range(2, 9)]

    def test_monotone_trends(self):
        grid = log_grid(1e4, 1e8, 9)
        div = [sweep_point(n, -2 / 3, 0.8).normalized_eta_var for n in grid]
        assert all(b > a for a, b in zip(div, div[1:]))
        conv = [sweep_point(n, -5 / 6, 0.8) for n in grid]
        for attr in ("normalized_eta_var", "normalized_phi_var"):
            v = [getattr(r, attr) for r in conv]
            assert all(b < a for a, b in zip(v, v[1:]))

    def test_chi_zero_flat(self):
        vals = [sweep_point(n, -math.inf, 0.8).normalized_phi_var for n in log_grid(1e2, 1e8, 13)]
        assert max(abs(v - 1 / 0.36) for v in vals) <= 1e-6

    def test_tradeoff_ordering(self):
        n = 10**8
        phi = {p: sweep_point(n, p, 0.8).normalized_phi_var for p in FIG2_EXPONENTS}
        eta = {p: sweep_point(n, p, 0.8).normalized_eta_var for p in FIG2_EXPONENTS}
        assert phi[-3 / 4] < phi[-5 / 6] < phi[-math.inf]
        assert eta[-math.inf] < eta[-5 / 6] < eta[-2 / 3]


class TestDiagnostics:
    def test_predictions(self):
        assert predicted_slopes(-0.75)["phi"] == pytest.approx(-0.5)
        assert predicted_slopes(-5 / 6)["eta"] == pytest.approx(-1 / 3)
        assert predicted_slopes(-5 / 6)["phi"] == pytest.approx(-1 / 3)
        p = balance_exponent()
        assert 2 + 4 * p == pytest.approx(-2 - 2 * p)

    def test_phase_slope_at_three_quarters(self):
        d = expansion_diagnostics(-0.75)
        assert d["slope_phi"] == pytest.approx(-0.5, abs=0.05)

    def test_eta_slope_at_five_sixths(self):
        d = expansion_diagnostics(-5 / 6)
        assert d["slope_eta"] == pytest.approx(-1 / 3, abs=0.05)

    def test_inadmissible_exponent(self):
        with pytest.raises(ValueError):
            expansion_diagnostics(-0.4)
