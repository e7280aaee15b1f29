import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import output_stats
from sqzest import oracle
from sqzest.channel import ChannelParams
from sqzest.collective import (NegativeVarianceError, _clamp_variance, cov_by_enumeration,
                               cov_j2_components, fourth_moment_combinatorics, is_psd_2x2, jacobian,
                               leading_var_j2, mean_j2, mean_jy, observable_covariance,
                               occurrence_counts, var_j2, var_jy)
from sqzest.moments import AXES, SqueezingConfig, output_moments, roat_moments


def cfg(n, chi):
    return SqueezingConfig(n, chi)


class TestMeans:
    def test_jy_vanishes_at_zero_phase(self):
        assert mean_jy(cfg(8, 0.3), ChannelParams(0.7)) == 0.0

    def test_jy_product_state(self):
        assert mean_jy(cfg(4, 0.0), ChannelParams(0.5, math.pi / 2)) == pytest.approx(1.0, abs=1e-15)

    def test_jy_oracle(self):
        ref = output_stats(6, 0.2, 0.8, 0.3).mean_jy
        assert abs(mean_jy(cfg(6, 0.2), ChannelParams(0.8, 0.3)) - ref) <= 1e-12

    def test_j2_noiseless(self):
        for n, chi in ((5, 0.4), (100, 0.01)):
            assert mean_j2(cfg(n, chi), ChannelParams(1.0)) == pytest.approx(n / 2 * (n / 2 + 1), rel=1e-14)

    def test_j2_product_state(self):
        assert mean_j2(cfg(4, 0.0), ChannelParams(0.5)) == pytest.approx(3.75, abs=1e-14)
        assert abs(output_stats(4, 0.0, 0.5).mean_j2 - 3.75) <= 1e-12

    def test_j2_phase_independent(self):
        vals = [mean_j2(cfg(7, 0.3), ChannelParams(0.6, phi)) for phi in (0.0, 0.7, 2.1)]
        assert max(vals) - min(vals) <= 1e-14


class TestVarJy:
    @pytest.mark.parametrize("eta", [0.0, 0.4, 1.0])
    def test_uncorrelated(self, eta):
        assert var_jy(cfg(9, 0.0), ChannelParams(eta)) == pytest.approx(9 / 4)

    def test_full_dephasing(self):
        assert var_jy(cfg(9, 0.3), ChannelParams(0.0)) == pytest.approx(9 / 4)

    def test_oracle_and_squeezed(self):
        v = var_jy(cfg(8, 0.25), ChannelParams(0.8))
        assert abs(v - output_stats(8, 0.25, 0.8).var_jy) <= 1e-12
        assert v < 8 / 4

    def test_nonzero_phase_rejected(self):
        with pytest.raises(ValueError):
            var_jy(cfg(8, 0.25), ChannelParams(0.8, 0.1))

    @pytest.mark.parametrize("n", [20, 50, 100, 200])
    def test_sublinear_scaling(self, n):
        assert var_jy(cfg(n, n ** (-2 / 3)), ChannelParams(0.9)) < n / 4


class TestFourthMoments:
    @pytest.mark.parametrize("n", range(4, 13))
    def test_counts_partition_hypercube(self, n):
        assert sum(c for _, c in occurrence_counts(n, True)) == n**4
        assert sum(c for _, c in occurrence_counts(n, False)) == n**4

    def test_noiseless_product_state(self):
        c = cov_j2_components(output_moments(roat_moments(6, 0.0), ChannelParams(1.0)), 6)
        assert abs(c.sum()) <= 1e-12

    def test_components_against_oracle(self):
        ref = output_stats(6, 0.2, 0.8).cov_j2_components
        for a, i in enumerate(AXES):
            for b, j in enumerate(AXES):
                got = fourth_moment_combinatorics(i, j, cfg(6, 0.2), ChannelParams(0.8))
                assert abs(got - ref[a, b]) <= 1e-10 * max(1.0, abs(ref[a, b]))

    @pytest.mark.parametrize("n, chi, eta, phi", [(5, 0.7, 0.5, 0.0), (7, 0.05, 0.9, 1.3), (4, 0.3, 0.0, 0.0)])
    def test_collected_equals_enumeration(self, n, chi, eta, phi):
        out = output_moments(roat_moments(n, chi), ChannelParams(eta, phi))
        for i in AXES:
            for j in AXES:
                a = fourth_moment_combinatorics(i, j, cfg(n, chi), ChannelParams(eta, phi))
                b = cov_by_enumeration(i, j, out, n)
                assert a == pytest.approx(b, rel=1e-10, abs=1e-10)

    def test_bad_axis(self):
        with pytest.raises(ValueError):
            fourth_moment_combinatorics("x", "w", cfg(5, 0.1), ChannelParams(0.5))


class TestVarJ2:
    def test_noiseless_is_zero(self):
        for n in (4, 10, 100, 1000, 10**4):
            for chi in (0.0, n ** -0.75, n ** (-5 / 6)):
                assert abs(var_j2(cfg(n, chi), ChannelParams(1.0))) <= 1e-6 * n**3

    def test_oracle(self):
        ref = output_stats(8, 0.25, 0.8).var_j2
        assert var_j2(cfg(8, 0.25), ChannelParams(0.8)) == pytest.approx(ref, rel=1e-10)

    def test_phase_invariant(self):
        ref = output_stats(6, 0.3, 0.7, 1.1).var_j2
        assert var_j2(cfg(6, 0.3), ChannelParams(0.7, 1.1)) == pytest.approx(ref, rel=1e-10)

    def test_leading_order(self):
        n = 10**4
        got = var_j2(cfg(n, n ** (-5 / 6)), ChannelParams(0.8))
        assert got == pytest.approx(leading_var_j2(n, 0.8), rel=0.1)

    def test_leading_order_improves(self):
        devs = []
        for n in (10**3, 10**4, 10**5, 10**6):
            got = var_j2(cfg(n, n ** (-5 / 6)), ChannelParams(0.8))
            devs.append(abs(got / leading_var_j2(n, 0.8) - 1))
        assert all(b < a for a, b in zip(devs, devs[1:]))


@pytest.mark.parametrize("n", [4, 6, 9])
@pytest.mark.parametrize("chi", [0.05, 0.3, 0.7])
@pytest.mark.parametrize("eta", [0.0, 0.5, 0.8, 1.0])
def test_observable_covariance_against_oracle(n, chi, eta):
    st_ = observable_covariance(cfg(n, chi), ChannelParams(eta))
    ref = output_stats(n, chi, eta)
    for got, want in ((st_.mean_j2, ref.mean_j2), (st_.mean_jy, ref.mean_jy), (st_.var_jy, ref.var_jy),
                      (st_.var_j2, ref.var_j2), (st_.cov_j2_jy, ref.cov_j2_jy)):
        tol = 1e-12 if abs(want) <= 1 else 1e-10 * abs(want)
        # var_j2 at eta = 1 is zero up to the rounding of n^4-sized terms
        assert abs(got - want) <= max(tol, 1e-12 * n**4)


class TestJacobian:
    def test_diagonal(self):
        d = jacobian(cfg(10, 0.3), ChannelParams(0.8))
        assert d[0, 1] == 0.0 and d[1, 0] == 0.0

    def test_product_state_value(self):
        assert np.allclose(jacobian(cfg(4, 0.0), ChannelParams(0.5)), np.diag([3.0, 1.0]), atol=1e-15)

    def test_product_state_finite_differences(self):
        model = oracle.ExactModel(cfg(4, 0.0), "density")
        fd = model.jacobian(ChannelParams(0.5))
        assert np.max(np.abs(fd - np.diag([3.0, 1.0]))) <= 1e-6

    def test_noiseless_limit(self):
        s = observable_covariance(cfg(6, 0.3), ChannelParams(1.0))
        assert s.var_j2 == 0.0


class TestClamping:
    def test_small_negative_clamped(self, caplog):
        with caplog.at_level(logging.WARNING):
            assert _clamp_variance(-1e-12, 1.0, "thing") == 0.0
        assert "clamped" in caplog.text

    def test_large_negative_raises(self):
        with pytest.raises(NegativeVarianceError):
            _clamp_variance(-1e-3, 1.0, "thing")

    @given(st.integers(4, 10**7), st.floats(0.0, 1.4), st.floats(0.0, 1.0))
    @settings(max_examples=80, deadline=None)
    def test_covariance_psd(self, n, chi, eta):
        s = observable_covariance(cfg(n, chi), ChannelParams(eta), precision="auto")
        assert s.var_jy >= 0 and s.var_j2 >= 0
        assert is_psd_2x2(s.covariance, slack=1e-9 * n**4)
