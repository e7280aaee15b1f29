"""Single-qubit phase rotation with dephasing.

The channel rotates the Bloch vector by ``phi`` about z and shrinks its
equatorial components by ``eta``. Kraus, Schrodinger and Heisenberg (dual)
pictures are provided together with the single-qubit QFI matrix and SLDs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# numeric policy shared by the whole package
COMPLETENESS_TOL = 1e-15
TRACE_TOL = 1e-12
PSD_SLACK = 1e-12

TWO_PI = 2.0 * math.pi

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

PLUS_STATE = np.full((2, 2), 0.5, dtype=complex)


class InvalidDensityError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelParams:
    """Dephasing strength ``eta`` in [0, 1] and phase ``phi`` (stored mod 2 pi)."""

    eta: float
    phi: float = 0.0

    def __post_init__(self):
        eta = float(self.eta)
        if not (0.0 <= eta <= 1.0) or math.isnan(eta):
            raise ValueError(f"eta must lie in [0, 1], got {self.eta!r}")
        phi = float(self.phi)
        if not math.isfinite(phi):
            raise ValueError(f"phi must be finite, got {self.phi!r}")
        phi = math.fmod(phi, TWO_PI)
        if phi < 0.0:
            phi += TWO_PI
        if phi >= TWO_PI:
            phi = 0.0
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "phi", phi)

    @property
    def at_zero_phase(self) -> bool:
        return self.phi == 0.0

    def replace(self, **kw) -> "ChannelParams":
        return ChannelParams(kw.get("eta", self.eta), kw.get("phi", self.phi))


@dataclass(frozen=True)
class PauliCombo:
    """Real coefficients over the ordered basis (1, sigma_x, sigma_y, sigma_z)."""

    identity: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.identity, self.x, self.y, self.z)

    def as_dict(self) -> dict[str, float]:
        """Nonzero single-site components keyed by axis label, identity excluded."""
        return {a: c for a, c in zip("xyz", (self.x, self.y, self.z)) if c != 0.0}

    def matrix(self) -> np.ndarray:
        return (self.identity * IDENTITY + self.x * SIGMA_X
                + self.y * SIGMA_Y + self.z * SIGMA_Z)

    @classmethod
    def from_matrix(cls, a: np.ndarray) -> "PauliCombo":
        a = np.asarray(a, dtype=complex)
        coeffs = [np.trace(p @ a).real / 2.0 for p in (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z)]
        return cls(*coeffs)


@dataclass
class QfiReport:
    f_matrix: np.ndarray
    sld_eta: np.ndarray
    sld_phi: np.ndarray
    commutator_trace: float
    divergent: bool = False
    flags: list[str] = field(default_factory=list)


def phase_unitary(phi: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def kraus_ops(params: ChannelParams) -> list[np.ndarray]:
    """Kraus operators ``[U_phi K0, U_phi K1]`` of the composed channel."""
    u = phase_unitary(params.phi)
    k0 = math.sqrt((1.0 + params.eta) / 2.0) * IDENTITY
    k1 = math.sqrt((1.0 - params.eta) / 2.0) * SIGMA_Z
    return [u @ k0, u @ k1]


def kraus_ops_reversed(params: ChannelParams) -> list[np.ndarray]:
    """Same channel with the rotation applied before the dephasing."""
    u = phase_unitary(params.phi)
    k0 = math.sqrt((1.0 + params.eta) / 2.0) * IDENTITY
    k1 = math.sqrt((1.0 - params.eta) / 2.0) * SIGMA_Z
    return [k0 @ u, k1 @ u]


def check_density(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidDensityError(f"expected a square matrix, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > TRACE_TOL:
        raise InvalidDensityError("density operator is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidDensityError(f"trace deviates from 1 by {tr - 1.0:.3e}")
    lam_min = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lam_min < -PSD_SLACK:
        raise InvalidDensityError(f"negative eigenvalue {lam_min:.3e}")
    return rho


def apply_channel(rho: np.ndarray, params: ChannelParams) -> np.ndarray:
    rho = check_density(rho)
    if rho.shape != (2, 2):
        raise InvalidDensityError("apply_channel acts on a single qubit")
    return sum(k @ rho @ k.conj().T for k in kraus_ops(params))


def dual_map(a: np.ndarray, params: ChannelParams) -> np.ndarray:
    """Heisenberg-picture action sum_k K^dag A K."""
    a = np.asarray(a, dtype=complex)
    return sum(k.conj().T @ a @ k for k in kraus_ops(params))


def dual_pauli(axis: str, params: ChannelParams) -> PauliCombo:
    """Closed-form image of a Pauli operator under the dual channel."""
    c, s, eta = math.cos(params.phi), math.sin(params.phi), params.eta
    if axis == "x":
        return PauliCombo(0.0, eta * c, -eta * s, 0.0)
    if axis == "y":
        return PauliCombo(0.0, eta * s, eta * c, 0.0)
    if axis == "z":
        return PauliCombo(0.0, 0.0, 0.0, 1.0)
    raise ValueError(f"axis must be one of 'x', 'y', 'z', got {axis!r}")


def channel_derivatives(rho: np.ndarray, params: ChannelParams) -> tuple[np.ndarray, np.ndarray]:
    """Exact (d/d eta, d/d phi) of the output state for input ``rho``."""
    rho = np.asarray(rho, dtype=complex)
    off = rho[0, 1] * np.exp(-1j * params.phi)
    d_eta = np.array([[0, off], [np.conj(off), 0]])
    d_phi_off = -1j * params.eta * off
    d_phi = np.array([[0, d_phi_off], [np.conj(d_phi_off), 0]])
    return d_eta, d_phi


def solve_sld(rho: np.ndarray, drho: np.ndarray) -> np.ndarray:
    """Brute-force solve of d rho = (rho L + L rho) / 2 as a linear system.

    Uses the minimum-norm least-squares solution, which is the conventional
    choice on the kernel of a rank-deficient ``rho``.
    """
    d = rho.shape[0]
    eye = np.eye(d)
    # row-major vec: vec(A X B) = (A kron B^T) vec(X)
    lhs = 0.5 * (np.kron(rho, eye) + np.kron(eye, rho.T))
    sol, *_ = np.linalg.lstsq(lhs, drho.reshape(-1), rcond=None)
    sld = sol.reshape(d, d)
    return 0.5 * (sld + sld.conj().T)


def qfi_from_slds(rho: np.ndarray, slds: list[np.ndarray]) -> np.ndarray:
    k = len(slds)
    f = np.empty((k, k))
    for a in range(k):
        for b in range(k):
            f[a, b] = np.trace(rho @ slds[a] @ slds[b]).real
    return 0.5 * (f + f.T)


def single_qubit_qfi(params: ChannelParams) -> QfiReport:
    """QFI matrix and SLDs for the optimal equatorial input |+><+|.

    The closed-form SLDs are the phi = 0 ones, conjugated by the phase
    rotation to move them to the operating point.
    """
    eta = params.eta
    u = phase_unitary(params.phi)
    rho_out = apply_channel(PLUS_STATE, params)
    sld_phi = u @ (eta * SIGMA_Y) @ u.conj().T
    flags = []
    if eta >= 1.0:
        f = np.array([[np.inf, 0.0], [0.0, 1.0]])
        sld_eta = np.full((2, 2), np.nan, dtype=complex)
        flags.append("divergent_eta_qfi")
        comm = 0.0
        return QfiReport(f, sld_eta, sld_phi, comm, divergent=True, flags=flags)
    sld_eta = u @ ((SIGMA_X - eta * IDENTITY) / (1.0 - eta**2)) @ u.conj().T
    f = np.diag([1.0 / (1.0 - eta**2), eta**2])
    comm = np.trace(rho_out @ (sld_eta @ sld_phi - sld_phi @ sld_eta))
    return QfiReport(f, sld_eta, sld_phi, float(abs(comm)), flags=flags)


def numeric_qfi(params: ChannelParams, rho_in: np.ndarray = PLUS_STATE) -> tuple[np.ndarray, list[np.ndarray]]:
    """QFI matrix from numerically solved SLDs (independent of the closed forms)."""
    rho_out = apply_channel(rho_in, params)
    d_eta, d_phi = channel_derivatives(rho_in, params)
    slds = [solve_sld(rho_out, d_eta), solve_sld(rho_out, d_phi)]
    return qfi_from_slds(rho_out, slds), slds
