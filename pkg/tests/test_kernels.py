import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sqzest import _kernels as K

needs_numba = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed or disabled")


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def test_masks():
    assert K.masks_for({0: "x", 1: "y", 3: "z"}) == (0b011, 0b1010, 1)
    with pytest.raises(ValueError):
        K.masks_for({0: "q"})


def test_popcount():
    assert list(K.popcount(3)) == [0, 1, 1, 2, 1, 2, 2, 3]
    assert list(K.popcount_of(np.array([0, 7, 8, 255]))) == [0, 3, 1, 8]


def test_pauli_expectation_against_dense():
    n = 3
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]])
    z = np.diag([1.0 + 0j, -1.0])
    mats = {"x": x, "y": y, "z": z, "i": np.eye(2)}
    psi = random_state(n, 1)
    for word in ("xiy", "zzi", "yyx", "ixz"):
        # qubit k is bit k, so the leftmost kron factor is qubit n-1
        full = np.kron(np.kron(mats[word[2]], mats[word[1]]), mats[word[0]])
        sites = {k: a for k, a in enumerate(word) if a != "i"}
        got = K.pauli_expect_state_np(psi, *K.masks_for(sites))
        assert got == pytest.approx(np.vdot(psi, full @ psi).real, abs=1e-13)


@needs_numba
class TestBackendsAgree:
    @given(st.integers(1, 6), st.floats(0, 1), st.floats(-7, 7), st.integers(0, 2**31))
    @settings(max_examples=30, deadline=None)
    def test_dephase(self, n, eta, phi, seed):
        v = random_state(n, seed)
        rho = np.outer(v, v.conj())
        a = K.dephase_density_np(rho, n, eta, phi)
        b = K.dephase_density_nb(rho, n, eta, phi)
        assert np.max(np.abs(a - b)) <= 1e-14

    @given(st.integers(1, 7), st.integers(0, 2**31), st.data())
    @settings(max_examples=40, deadline=None)
    def test_expectations(self, n, seed, data):
        v = random_state(n, seed)
        rho = np.outer(v, v.conj())
        k = data.draw(st.integers(1, min(4, n)))
        sites = data.draw(st.lists(st.integers(0, n - 1), min_size=k, max_size=k, unique=True))
        axes = data.draw(st.lists(st.sampled_from("xyz"), min_size=k, max_size=k))
        masks = K.masks_for(dict(zip(sites, axes)))
        a = K.pauli_expect_state_np(v, *masks)
        assert K.pauli_expect_state_nb(v, *masks) == pytest.approx(a, abs=1e-13)
        assert K.pauli_expect_density_np(rho, *masks) == pytest.approx(a, abs=1e-13)
        assert K.pauli_expect_density_nb(rho, *masks) == pytest.approx(a, abs=1e-13)

    @pytest.mark.parametrize("n", [1, 4, 7])
    def test_site_unitary(self, n):
        v = random_state(n, n)
        u = np.array([[0.6, 0.8j], [0.8j, 0.6]])
        assert np.allclose(K.apply_uniform_site_unitary_np(v, n, u), K.apply_uniform_site_unitary_nb(v, n, u), atol=1e-14)

    @pytest.mark.parametrize("n", [2, 5, 8])
    def test_swap_sum(self, n):
        v = random_state(n, 10 + n)
        assert np.allclose(K.swap_sum_np(v, n), K.swap_sum_nb(v, n), atol=1e-13)

    @pytest.mark.parametrize("axis", [0, 1, 2])
    def test_pauli_sum(self, axis):
        n = 5
        v = np.column_stack([random_state(n, s) for s in range(3)])
        assert np.allclose(K.pauli_sum_np(v, n, axis), K.pauli_sum_nb(v, n, axis), atol=1e-13)
        assert np.allclose(K.pauli_sum_np(v[:, 0], n, axis), K.pauli_sum_nb(v[:, 0], n, axis), atol=1e-13)


def test_env_flag_selects_numpy():
    env = dict(os.environ, SQZEST_DISABLE_NUMBA="1")
    code = ("from sqzest import _kernels as K, oracle; from sqzest.channel import ChannelParams;"
            "print(K.BACKEND, K.HAVE_NUMBA);"
            "r = oracle.evolve_density(oracle.build_roat_state(4, 0.3), ChannelParams(0.8, 0.5));"
            "print(round(oracle.exact_moment(r, 'xx'), 12))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, value = out.stdout.split("\n")[:2]
    assert backend == "numpy False"
    from sqzest import oracle
    from sqzest.channel import ChannelParams
    r = oracle.evolve_density(oracle.build_roat_state(4, 0.3), ChannelParams(0.8, 0.5))
    assert float(value) == pytest.approx(oracle.exact_moment(r, "xx"), abs=1e-12)
