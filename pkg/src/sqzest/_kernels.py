"""Hot loops of the dense oracle.

Every kernel exists twice: a numba ``@njit`` version and a vectorised numpy
version with identical semantics. ``SQZEST_DISABLE_NUMBA=1`` (or a missing
numba install) binds the public names to the numpy versions.

Qubit ``k`` is bit ``k`` of the computational-basis index, and bit value 0 is
the +1 eigenstate of sigma_z.
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("SQZEST_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("disabled by SQZEST_DISABLE_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def popcount(n_bits: int) -> np.ndarray:
    idx = np.arange(1 << n_bits, dtype=np.int64)
    out = np.zeros_like(idx)
    for k in range(n_bits):
        out += (idx >> k) & 1
    return out


def masks_for(word_on_sites: dict[int, str]) -> tuple[int, int, int]:
    """(flip mask, sign mask, number of y's) of a Pauli string given as {site: axis}."""
    flip = sign = 0
    ny = 0
    for site, axis in word_on_sites.items():
        bit = 1 << site
        if axis == "x":
            flip |= bit
        elif axis == "y":
            flip |= bit
            sign |= bit
            ny += 1
        elif axis == "z":
            sign |= bit
        else:
            raise ValueError(f"bad axis {axis!r}")
    return flip, sign, ny


# -- numpy reference implementations ----------------------------------------

def dephase_density_np(rho, n, eta, phi):
    pc = popcount(n)
    dim = 1 << n
    idx = np.arange(dim)
    hamming = pc[idx[:, None] ^ idx[None, :]]
    factor = np.power(eta, hamming) * np.exp(-1j * phi * (pc[None, :] - pc[:, None]))
    return rho * factor


def pauli_expect_state_np(psi, flip, sign, ny):
    idx = np.arange(psi.shape[0])
    par = popcount_of(idx & sign)
    vals = np.conj(psi[idx ^ flip]) * psi * np.where(par & 1, -1.0, 1.0)
    return (vals.sum() * (1j**ny)).real


def pauli_expect_density_np(rho, flip, sign, ny):
    idx = np.arange(rho.shape[0])
    par = popcount_of(idx & sign)
    vals = rho[idx, idx ^ flip] * np.where(par & 1, -1.0, 1.0)
    return (vals.sum() * (1j**ny)).real


def popcount_of(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    out = np.zeros_like(values)
    v = values.copy()
    while np.any(v):
        out += v & 1
        v >>= 1
    return out


def apply_uniform_site_unitary_np(psi, n, u):
    t = psi.reshape((2,) * n)
    # axis 0 of the reshaped tensor is the most significant bit, i.e. qubit n-1
    for axis in range(n):
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


def swap_sum_np(vec, n):
    idx = np.arange(vec.shape[0])
    out = np.zeros_like(vec)
    for k in range(n):
        for l in range(k + 1, n):
            bk = (idx >> k) & 1
            bl = (idx >> l) & 1
            swapped = idx ^ ((bk ^ bl) * ((1 << k) | (1 << l)))
            out += vec[swapped]
    return out


def pauli_sum_np(vecs, n, axis):
    """sum over sites of sigma_axis acting on the columns of ``vecs``."""
    vecs = np.asarray(vecs)
    idx = np.arange(vecs.shape[0])
    out = np.zeros(vecs.shape, dtype=complex)
    for k in range(n):
        bit = (idx >> k) & 1
        sgn = (1 - 2 * bit).astype(float)
        if vecs.ndim == 2:
            sgn = sgn[:, None]
        if axis == 0:
            out += vecs[idx ^ (1 << k)]
        elif axis == 1:
            # <b|sigma_y|b^1> = i(-1)^{b^1} = -i(-1)^b
            out += -1j * sgn * vecs[idx ^ (1 << k)]
        else:
            out += sgn * vecs
    return out


# -- numba kernels ----------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _pc(v):
        c = 0
        while v:
            c += v & 1
            v >>= 1
        return c

    @njit(cache=True)
    def dephase_density_nb(rho, n, eta, phi):
        dim = rho.shape[0]
        out = np.empty_like(rho)
        eta_pow = np.empty(n + 1)
        for k in range(n + 1):
            eta_pow[k] = eta**k
        ph = np.empty(2 * n + 1, dtype=np.complex128)
        for d in range(-n, n + 1):
            ph[d + n] = np.exp(-1j * phi * d)
        for a in range(dim):
            pa = _pc(a)
            for b in range(dim):
                out[a, b] = rho[a, b] * eta_pow[_pc(a ^ b)] * ph[_pc(b) - pa + n]
        return out

    @njit(cache=True)
    def pauli_expect_state_nb(psi, flip, sign, ny):
        acc = 0.0 + 0.0j
        for b in range(psi.shape[0]):
            v = np.conj(psi[b ^ flip]) * psi[b]
            if _pc(b & sign) & 1:
                acc -= v
            else:
                acc += v
        return (acc * (1j**ny)).real

    @njit(cache=True)
    def pauli_expect_density_nb(rho, flip, sign, ny):
        acc = 0.0 + 0.0j
        for b in range(rho.shape[0]):
            v = rho[b, b ^ flip]
            if _pc(b & sign) & 1:
                acc -= v
            else:
                acc += v
        return (acc * (1j**ny)).real

    @njit(cache=True)
    def apply_uniform_site_unitary_nb(psi, n, u):
        out = psi.copy()
        dim = psi.shape[0]
        for k in range(n):
            bit = 1 << k
            for b in range(dim):
                if b & bit:
                    continue
                a0 = out[b]
                a1 = out[b | bit]
                out[b] = u[0, 0] * a0 + u[0, 1] * a1
                out[b | bit] = u[1, 0] * a0 + u[1, 1] * a1
        return out

    @njit(cache=True)
    def swap_sum_nb(vec, n):
        out = np.zeros_like(vec)
        for b in range(vec.shape[0]):
            acc = 0.0 * vec[0]
            for k in range(n):
                bk = (b >> k) & 1
                for l in range(k + 1, n):
                    if bk != ((b >> l) & 1):
                        acc += vec[b ^ ((1 << k) | (1 << l))]
                    else:
                        acc += vec[b]
            out[b] = acc
        return out

    @njit(cache=True)
    def _pauli_sum_2d_nb(vecs, n, axis):
        dim, m = vecs.shape
        out = np.zeros((dim, m), dtype=np.complex128)
        for b in range(dim):
            for k in range(n):
                bit = (b >> k) & 1
                s = 1.0 - 2.0 * bit
                src = b ^ (1 << k)
                for c in range(m):
                    if axis == 0:
                        out[b, c] += vecs[src, c]
                    elif axis == 1:
                        out[b, c] += -1j * s * vecs[src, c]
                    else:
                        out[b, c] += s * vecs[b, c]
        return out

    def pauli_sum_nb(vecs, n, axis):
        vecs = np.ascontiguousarray(vecs, dtype=np.complex128)
        if vecs.ndim == 1:
            return _pauli_sum_2d_nb(vecs[:, None], n, axis)[:, 0]
        return _pauli_sum_2d_nb(vecs, n, axis)


IMPLEMENTATIONS = {
    "numpy": {
        "dephase_density": dephase_density_np,
        "pauli_expect_state": pauli_expect_state_np,
        "pauli_expect_density": pauli_expect_density_np,
        "apply_uniform_site_unitary": apply_uniform_site_unitary_np,
        "swap_sum": swap_sum_np,
        "pauli_sum": pauli_sum_np,
    }
}
if HAVE_NUMBA:
    IMPLEMENTATIONS["numba"] = {
        "dephase_density": dephase_density_nb,
        "pauli_expect_state": pauli_expect_state_nb,
        "pauli_expect_density": pauli_expect_density_nb,
        "apply_uniform_site_unitary": apply_uniform_site_unitary_nb,
        "swap_sum": swap_sum_nb,
        "pauli_sum": pauli_sum_nb,
    }

BACKEND = "numba" if HAVE_NUMBA else "numpy"
_impl = IMPLEMENTATIONS[BACKEND]

dephase_density = _impl["dephase_density"]
pauli_expect_state = _impl["pauli_expect_state"]
pauli_expect_density = _impl["pauli_expect_density"]
apply_uniform_site_unitary = _impl["apply_uniform_site_unitary"]
swap_sum = _impl["swap_sum"]
pauli_sum = _impl["pauli_sum"]
