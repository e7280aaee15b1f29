"""Brute-force ground truth on 2**n amplitudes.

Everything here is exact linear algebra on explicit states: twisted and
rotated states, the product channel acting on a density matrix, Pauli-string
expectation values, the simultaneous eigenbasis of (J^2, J_y), exact joint
outcome distributions, seeded shot sampling and a Monte-Carlo
method-of-moments experiment.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from . import _kernels as K
from .channel import ChannelParams, kraus_ops, kraus_ops_reversed
from .moments import MAX_ORDER, MomentTable, SqueezingConfig, all_words, canonical, epsilon_angle, roat_moments

log = logging.getLogger(__name__)

MAX_DENSITY_QUBITS = 12
MAX_PURE_QUBITS = 16
RNG_ALGORITHM = "numpy.random.Philox"
FD_STEP = 1e-5
J2_CLUSTER_TOL = 1e-8
OFF_BLOCK_TOL = 1e-9
EIGVAL_TOL = 1e-10


class OracleSizeError(ValueError):
    pass


class DegeneracyError(RuntimeError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@dataclass
class DenseState:
    n: int
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        dim = 1 << self.n
        if self.data.shape not in ((dim,), (dim, dim)):
            raise ValueError(f"shape {self.data.shape} does not match n = {self.n}")

    @property
    def is_pure(self) -> bool:
        return self.data.ndim == 1

    def density(self) -> np.ndarray:
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def check(self) -> None:
        if self.is_pure:
            if abs(np.linalg.norm(self.data) - 1.0) > 1e-12:
                raise ValueError("pure state is not normalised")
            return
        rho = self.data
        if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-12:
            raise ValueError("density matrix trace differs from 1")
        if np.linalg.eigvalsh(rho)[0] < -1e-10:
            raise ValueError("density matrix has a negative eigenvalue")


# -- state preparation ------------------------------------------------------

def _check_pure_size(n):
    if n < 1 or n > MAX_PURE_QUBITS:
        raise OracleSizeError(f"pure-state oracle supports 1..{MAX_PURE_QUBITS} qubits, got {n}")


def jz_diagonal(n: int) -> np.ndarray:
    return n / 2.0 - K.popcount(n)


def build_oat_state(n: int, chi: float) -> DenseState:
    _check_pure_size(n)
    m = jz_diagonal(n)
    psi = np.exp(-1j * chi * m**2) / 2.0 ** (n / 2)
    return DenseState(n, psi)


def x_rotation_unitary(theta: float) -> np.ndarray:
    """Single-site factor of e^{i theta J_x}."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, 1j * s], [1j * s, c]])


def rotate_x(state: DenseState, theta: float) -> DenseState:
    if not state.is_pure:
        raise ValueError("rotate_x acts on pure states")
    return DenseState(state.n, K.apply_uniform_site_unitary(state.data, state.n, x_rotation_unitary(theta)))


def build_roat_state(n: int, chi: float) -> DenseState:
    """e^{i J_x (eps + pi/2)} e^{-i chi J_z^2} |+>^n."""
    return rotate_x(build_oat_state(n, chi), epsilon_angle(n, chi) + math.pi / 2)


def apply_phase(state: DenseState, phi: float) -> DenseState:
    """Product of phase rotations, e^{-i phi J_z}."""
    phase = np.exp(-1j * phi * jz_diagonal(state.n))
    if state.is_pure:
        return DenseState(state.n, phase * state.data)
    return DenseState(state.n, phase[:, None] * state.data * phase.conj()[None, :])


def _apply_local_kraus(rho: np.ndarray, n: int, kraus: list[np.ndarray]) -> np.ndarray:
    t = rho.reshape((2,) * (2 * n))
    for axis in range(n):
        acc = 0
        for k in kraus:
            u = np.moveaxis(np.tensordot(k, t, axes=([1], [axis])), 0, axis)
            u = np.moveaxis(np.tensordot(k.conj(), u, axes=([1], [n + axis])), 0, n + axis)
            acc = acc + u
        t = acc
    return t.reshape(rho.shape)


def evolve_density(state: DenseState, params: ChannelParams, method: str = "kernel",
                   order: str = "dephase_first") -> DenseState:
    """Apply the channel to every qubit.

    ``method="kernel"`` multiplies coherences by their closed-form factors;
    ``method="kraus"`` conjugates site by site with explicit Kraus operators
    (``order`` picks which of rotation and dephasing comes first).
    """
    n = state.n
    if n > MAX_DENSITY_QUBITS:
        raise OracleSizeError(f"density oracle supports at most {MAX_DENSITY_QUBITS} qubits, got {n}")
    rho = state.density()
    if method == "kernel":
        out = K.dephase_density(np.ascontiguousarray(rho), n, params.eta, params.phi)
    elif method == "kraus":
        ops = kraus_ops(params) if order == "dephase_first" else kraus_ops_reversed(params)
        out = _apply_local_kraus(rho, n, ops)
    else:
        raise ValueError(f"unknown method {method!r}")
    return DenseState(n, out)


# -- expectation values -----------------------------------------------------

def exact_moment(state: DenseState, word: str, sites=None) -> float:
    """Expectation of a Pauli word placed on explicit, distinct sites."""
    if sites is None:
        sites = range(len(word))
    sites = list(sites)
    if len(sites) != len(word):
        raise ValueError("need one site per Pauli label")
    if len(set(sites)) != len(sites):
        raise ValueError(f"repeated site indices {sites}; contract same-site products first")
    if any(s < 0 or s >= state.n for s in sites):
        raise ValueError(f"sites {sites} out of range for n = {state.n}")
    flip, sign, ny = K.masks_for(dict(zip(sites, word)))
    if state.is_pure:
        return K.pauli_expect_state(state.data, flip, sign, ny)
    return K.pauli_expect_density(state.data, flip, sign, ny)


def oracle_table(state: DenseState, frame: str, config: SqueezingConfig,
                 params: ChannelParams | None = None) -> MomentTable:
    entries = {w: exact_moment(state, w) for w in all_words(min(state.n, MAX_ORDER))}
    return MomentTable(frame, entries, config, params)


def apply_j(vecs: np.ndarray, n: int, axis: str) -> np.ndarray:
    return 0.5 * K.pauli_sum(vecs, n, "xyz".index(axis))


def apply_j2(vec: np.ndarray, n: int) -> np.ndarray:
    """J^2 = 3n/4 - n(n-1)/4 + sum_{k<l} SWAP_kl."""
    return (0.75 * n - 0.25 * n * (n - 1)) * vec + K.swap_sum(vec, n)


def _left_apply(rho: np.ndarray, n: int, ops: str) -> np.ndarray:
    """Apply a product of J components (rightmost first) to the rows of rho."""
    out = rho
    for axis in reversed(ops):
        out = apply_j(out, n, axis)
    return out


@dataclass
class OracleStats:
    mean_j2: float
    mean_jy: float
    var_j2: float
    var_jy: float
    cov_j2_jy: float
    cov_j2_components: np.ndarray  # 3x3 symmetrised Cov(J_i^2, J_j^2)


def operator_stats(state: DenseState) -> OracleStats:
    """Means and (co)variances of J^2, J_y from operator products on rho."""
    n = state.n
    rho = state.density()
    sq = {a: _left_apply(rho, n, a + a) for a in "xyz"}
    mean_sq = {a: np.trace(sq[a]).real for a in "xyz"}
    cov = np.empty((3, 3))
    for i, a in enumerate("xyz"):
        for j, b in enumerate("xyz"):
            # Re Tr(J_a^2 J_b^2 rho) is the symmetrised product
            val = np.trace(_left_apply(sq[b], n, a + a)).real
            cov[i, j] = val - mean_sq[a] * mean_sq[b]
    cov = 0.5 * (cov + cov.T)
    jy_rho = apply_j(rho, n, "y")
    mean_jy = np.trace(jy_rho).real
    var_jy = np.trace(apply_j(jy_rho, n, "y")).real - mean_jy**2
    j2_rho = sq["x"] + sq["y"] + sq["z"]
    mean_j2 = np.trace(j2_rho).real
    cross = np.trace(apply_j(j2_rho, n, "y")).real
    return OracleStats(mean_j2, mean_jy, float(cov.sum()), var_jy, cross - mean_j2 * mean_jy, cov)


# -- simultaneous (J^2, J_y) eigenbasis --------------------------------------

@dataclass
class JointBasis:
    n: int
    sectors: list  # (j, m values, column vectors)

    def outcomes(self) -> list[tuple[float, float]]:
        out = set()
        for j, ms, _ in self.sectors:
            out.update((j, float(m)) for m in ms)
        return sorted(out)


def _j_from_eigenvalue(lam: float) -> float:
    return round(math.sqrt(1.0 + 4.0 * max(lam, 0.0)) - 1.0) / 2.0


def multiplicity(n: int, j: float) -> int:
    """Number of spin-j irreps in n spin-1/2 (Schur-Weyl counting)."""
    k = int(round(n / 2 - j))
    if k < 0:
        return 0
    return math.comb(n, k) - (math.comb(n, k - 1) if k >= 1 else 0)


def joint_measurement_basis(n: int) -> JointBasis:
    """Orthonormal common eigenvectors of J^2 and J_y.

    J^2 commutes with J_z, so its spectral decomposition is done block by
    block in J_z sectors; eigenvalues are clustered into j(j+1) values and
    J_y is then diagonalised inside each cluster.
    """
    if n < 1 or n > MAX_DENSITY_QUBITS:
        raise OracleSizeError(f"joint basis supports 1..{MAX_DENSITY_QUBITS} qubits, got {n}")
    dim = 1 << n
    pc = K.popcount(n)
    idx_all = np.arange(dim)
    const = 0.75 * n - 0.25 * n * (n - 1)
    clusters: dict[float, list[np.ndarray]] = {}
    for w in range(n + 1):
        idx = np.flatnonzero(pc == w)
        pos = np.full(dim, -1)
        pos[idx] = np.arange(idx.size)
        block = const * np.eye(idx.size)
        cols = np.arange(idx.size)
        for k, l in itertools.combinations(range(n), 2):
            flip = ((idx >> k) & 1) ^ ((idx >> l) & 1)
            swapped = idx ^ (flip * ((1 << k) | (1 << l)))
            np.add.at(block, (pos[swapped], cols), 1.0)
        lam, vec = np.linalg.eigh(block)
        for value, column in zip(lam, vec.T):
            j = _j_from_eigenvalue(value)
            if abs(value - j * (j + 1)) > J2_CLUSTER_TOL:
                raise DegeneracyError(f"J^2 eigenvalue {value} is not of the form j(j+1)")
            full = np.zeros(dim, dtype=complex)
            full[idx] = column
            clusters.setdefault(j, []).append(full)
    sectors = []
    for j in sorted(clusters):
        v = np.array(clusters[j]).T
        jy_v = apply_j(v, n, "y")
        a = v.conj().T @ jy_v
        a = 0.5 * (a + a.conj().T)
        resid = np.linalg.norm(jy_v - v @ a)
        if resid > OFF_BLOCK_TOL:
            raise DegeneracyError(f"J_y leaks out of the j = {j} cluster (residual {resid:.2e})")
        ms, u = np.linalg.eigh(a)
        rounded = np.round(2 * ms) / 2
        if np.max(np.abs(ms - rounded)) > EIGVAL_TOL or np.max(np.abs(rounded)) > j + EIGVAL_TOL:
            raise DegeneracyError(f"J_y eigenvalues in sector j = {j} are not in -j..j")
        expected = multiplicity(n, j)
        counts = np.unique(rounded, return_counts=True)[1]
        if len(counts) != int(round(2 * j + 1)) or np.any(counts != expected):
            raise DegeneracyError(f"unexpected J_y multiplicities in sector j = {j}")
        sectors.append((j, rounded, v @ u))
    return JointBasis(n, sectors)


@dataclass
class JointDistribution:
    n: int
    j: np.ndarray
    m: np.ndarray
    prob: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def j2(self) -> np.ndarray:
        return self.j * (self.j + 1)

    def means(self) -> tuple[float, float]:
        return float(self.prob @ self.j2), float(self.prob @ self.m)

    def covariance(self) -> np.ndarray:
        mj2, mjy = self.means()
        dj2 = self.j2 - mj2
        djy = self.m - mjy
        c = np.array([[self.prob @ (dj2 * dj2), self.prob @ (dj2 * djy)],
                      [self.prob @ (dj2 * djy), self.prob @ (djy * djy)]])
        return c

    def as_rows(self) -> list[dict]:
        return [{"j": float(a), "m": float(b), "p": float(c)} for a, b, c in zip(self.j, self.m, self.prob)]


def _finalize_distribution(n, table: dict, meta=None) -> JointDistribution:
    keys = sorted(table)
    prob = np.array([table[k] for k in keys])
    if prob.min(initial=0.0) < -1e-12:
        raise ValueError(f"negative outcome probability {prob.min():.3e}")
    prob = np.clip(prob, 0.0, None)
    if abs(prob.sum() - 1.0) > 1e-10:
        raise ValueError(f"outcome probabilities sum to {prob.sum()!r}")
    j = np.array([k[0] for k in keys])
    m = np.array([k[1] for k in keys])
    return JointDistribution(n, j, m, prob, dict(meta or {}))


def joint_distribution(state: DenseState, basis: JointBasis) -> JointDistribution:
    if state.n != basis.n:
        raise ValueError("state and basis sizes differ")
    table: dict[tuple[float, float], float] = {}
    for j, ms, v in basis.sectors:
        if state.is_pure:
            p = np.abs(v.conj().T @ state.data) ** 2
        else:
            p = np.einsum("ij,ij->j", v.conj(), state.data @ v).real
        for m in np.unique(ms):
            table[(j, float(m))] = table.get((j, float(m)), 0.0) + float(p[ms == m].sum())
    return _finalize_distribution(state.n, table, {"path": "density"})


# -- pure-state distribution without a dense basis --------------------------

def pure_joint_distribution(state: DenseState) -> dict[tuple[float, float], float]:
    """p(j, m) for a pure state via simultaneous per-sector Lanczos on J^2.

    The state is rotated so J_y becomes J_z; J^2 preserves J_z sectors, so one
    J^2 application advances the Krylov sequence of every sector at once.
    """
    n = state.n
    psi = K.apply_uniform_site_unitary(state.data, n, x_rotation_unitary(-math.pi / 2))
    sector = K.popcount(n)  # m = n/2 - popcount
    nsec = n + 1

    def sec_dot(a, b):
        return np.bincount(sector, weights=(np.conj(a) * b).real, minlength=nsec)

    norms = np.sqrt(sec_dot(psi, psi))
    active = norms > 1e-15
    q = np.where(active[sector], psi / np.where(active, norms, 1.0)[sector], 0.0)
    basis_vecs = [q]
    alphas, betas = [], []
    max_steps = n // 2 + 1
    live = active.copy()
    steps = np.zeros(nsec, dtype=int)
    for _ in range(max_steps):
        steps[live] += 1
        w = apply_j2(q, n)
        alpha = sec_dot(q, w)
        alphas.append(alpha)
        for qq in basis_vecs:
            c = np.bincount(sector, weights=(np.conj(qq) * w).real, minlength=nsec)
            ci = np.bincount(sector, weights=(np.conj(qq) * w).imag, minlength=nsec)
            w = w - (c + 1j * ci)[sector] * qq
        beta = np.sqrt(sec_dot(w, w))
        live = live & (beta > 1e-9 * np.maximum(1.0, np.abs(alpha)))
        betas.append(np.where(live, beta, 0.0))
        if not live.any():
            break
        q = np.where(live[sector], w / np.where(live, beta, 1.0)[sector], 0.0)
        basis_vecs.append(q)
    table: dict[tuple[float, float], float] = {}
    for s in np.flatnonzero(active):
        k = steps[s]
        t = np.diag([alphas[i][s] for i in range(k)])
        for i in range(k - 1):
            t[i, i + 1] = t[i + 1, i] = betas[i][s]
        theta, vec = np.linalg.eigh(t)
        weights = vec[0, :] ** 2 * norms[s] ** 2
        m = n / 2 - s
        for lam, wgt in zip(theta, weights):
            j = _j_from_eigenvalue(lam)
            if abs(lam - j * (j + 1)) > 1e-6 or j < abs(m) - 1e-9:
                if wgt > 1e-12:
                    raise DegeneracyError(f"Ritz value {lam} does not match any allowed j (weight {wgt:.2e})")
                continue
            table[(j, m)] = table.get((j, m), 0.0) + float(wgt)
    return table


@dataclass
class TrajectoryModel:
    """Outcome law of the trajectory picture: the number of sigma_z flips is
    Binomial(n, (1 - eta)/2) and, by permutation symmetry, the conditional
    (J^2, J_y) law depends on that number only."""

    n: int
    flip_prob: float
    outcomes: list
    conditionals: np.ndarray  # (n+1, n_outcomes)

    def flip_weights(self) -> np.ndarray:
        return stats.binom.pmf(np.arange(self.n + 1), self.n, self.flip_prob)

    def distribution(self) -> JointDistribution:
        table = dict(zip(self.outcomes, self.flip_weights() @ self.conditionals))
        return _finalize_distribution(self.n, table, {"path": "trajectory"})

    def sample(self, m_shots: int, rng: np.random.Generator) -> np.ndarray:
        """Per-shot trajectories: draw every site's flip, then the outcome."""
        flips = (rng.random((m_shots, self.n)) < self.flip_prob).sum(axis=1)
        idx = np.empty(m_shots, dtype=np.int64)
        for k in np.unique(flips):
            sel = np.flatnonzero(flips == k)
            idx[sel] = rng.choice(len(self.outcomes), size=sel.size, p=self.conditionals[k])
        return idx


def trajectory_model(config: SqueezingConfig, params: ChannelParams) -> TrajectoryModel:
    n = config.n
    _check_pure_size(n)
    psi = build_roat_state(n, config.chi)
    conds = []
    for k in range(n + 1):
        signs = np.ones(1 << n)
        for site in range(k):
            signs = signs * (1 - 2 * ((np.arange(1 << n) >> site) & 1))
        flipped = apply_phase(DenseState(n, signs * psi.data), params.phi)
        conds.append(pure_joint_distribution(flipped))
    outcomes = sorted(set().union(*conds))
    mat = np.array([[c.get(o, 0.0) for o in outcomes] for c in conds])
    return TrajectoryModel(n, (1.0 - params.eta) / 2.0, outcomes, mat)


# -- sampling and estimation --------------------------------------------------

def sample_shots(dist: JointDistribution, m_shots: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """i.i.d. (j, m) outcomes; identical for identical seeds."""
    if m_shots < 1:
        raise ValueError("m_shots must be >= 1")
    rng = make_rng(seed)
    idx = rng.choice(len(dist.prob), size=m_shots, p=dist.prob / dist.prob.sum())
    return dist.j[idx], dist.m[idx]


@dataclass
class Estimate:
    eta: float
    phi: float
    flags: list[str] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return "estimation_failure" in self.flags


def invert_moments(mean_j2_emp: float, mean_jy_emp: float, config: SqueezingConfig,
                   table: MomentTable | None = None) -> Estimate:
    """Method-of-moments inverse of the closed-form mean maps."""
    t = table if table is not None else roat_moments(config, precision="double")
    n = config.n
    flags = []
    sq = (4.0 * (mean_j2_emp - 0.75 * n) / (n * (n - 1)) - float(t["zz"])) / float(t["xx"] + t["yy"])
    if not math.isfinite(sq) or sq < 0.0:
        return Estimate(0.0, math.nan, ["estimation_failure", "negative_eta_root"])
    eta = math.sqrt(sq)
    if eta > 1.0:
        eta = 1.0
        flags.append("eta_clamped")
    if eta == 0.0:
        return Estimate(0.0, math.nan, flags + ["estimation_failure", "phase_unidentifiable"])
    arg = 2.0 * mean_jy_emp / (n * eta * float(t["x"]))
    if abs(arg) > 1.0:
        arg = math.copysign(1.0, arg)
        flags.append("phi_clamped")
    return Estimate(eta, math.asin(arg), flags)


class ExactModel:
    """Exact outcome law of the protocol at one configuration, for any params."""

    def __init__(self, config: SqueezingConfig, path: str = "auto"):
        n = config.n
        if path == "auto":
            path = "density" if n <= MAX_DENSITY_QUBITS else "trajectory"
        if path == "density" and n > MAX_DENSITY_QUBITS:
            raise OracleSizeError(f"density path supports at most {MAX_DENSITY_QUBITS} qubits")
        _check_pure_size(n)
        self.config = config
        self.path = path
        self.psi = build_roat_state(n, config.chi)
        self.basis = joint_measurement_basis(n) if path == "density" else None

    def distribution(self, params: ChannelParams) -> JointDistribution:
        if self.path == "density":
            rho = evolve_density(self.psi, params)
            return joint_distribution(rho, self.basis)
        return trajectory_model(self.config, params).distribution()

    def means(self, eta: float, phi: float) -> np.ndarray:
        return np.array(self.distribution(ChannelParams(eta, phi)).means())

    def jacobian(self, params: ChannelParams, step: float = FD_STEP) -> np.ndarray:
        """Central differences of (<J^2>, <J_y>) in (eta, phi); one-sided at eta = 1."""
        eta, phi = params.eta, params.phi
        if eta + step <= 1.0:
            d_eta = (self.means(eta + step, phi) - self.means(eta - step, phi)) / (2 * step)
        else:
            d_eta = (self.means(eta, phi) - self.means(eta - step, phi)) / step
        d_phi = (self.means(eta, phi + step) - self.means(eta, phi - step)) / (2 * step)
        return np.column_stack([d_eta, d_phi])


@dataclass
class McResult:
    n: int
    chi: float
    eta: float
    phi: float
    shots_per_experiment: int
    experiments: int
    seed: int
    rng_algorithm: str
    path: str
    empirical_cov: np.ndarray
    predicted_cov: np.ndarray
    bias: np.ndarray
    bias_stderr: np.ndarray
    flags: dict
    failures: int

    @property
    def diag_ratio(self) -> np.ndarray:
        return np.diag(self.empirical_cov) / np.diag(self.predicted_cov)

    @property
    def offdiag_sigma(self) -> float:
        """Off-diagonal empirical covariance in units of its standard error."""
        c = self.empirical_cov
        se = math.sqrt((c[0, 0] * c[1, 1] + c[0, 1] ** 2) / max(self.experiments - 1, 1))
        return float(c[0, 1] / se) if se > 0 else 0.0

    def to_json(self) -> dict:
        def mat(a):
            return [[float(x) for x in row] for row in np.atleast_2d(a)]
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = [float(x) for x in self.diag_ratio]
        return {
            "n": self.n, "chi": self.chi, "eta": self.eta, "phi": self.phi,
            "shots_per_experiment": self.shots_per_experiment,
            "experiments": self.experiments,
            "seed": self.seed,
            "rng_algorithm": self.rng_algorithm,
            "path": self.path,
            "empirical_cov": mat(self.empirical_cov),
            "predicted_cov": mat(self.predicted_cov),
            "diag_ratio": [r if math.isfinite(r) else None for r in ratio],
            "offdiag_sigma": self.offdiag_sigma,
            "bias": [float(b) for b in self.bias],
            "bias_stderr": [float(b) for b in self.bias_stderr],
            "flags": self.flags,
            "failures": self.failures,
        }


def _experiment_means(model: ExactModel, dist: JointDistribution, params, m_shots, repetitions, rng):
    if model.path == "density":
        counts = rng.multinomial(m_shots, dist.prob, size=repetitions)
        return counts @ dist.j2 / m_shots, counts @ dist.m / m_shots
    traj = trajectory_model(model.config, params)
    j2 = np.array([o[0] * (o[0] + 1) for o in traj.outcomes])
    m = np.array([o[1] for o in traj.outcomes])
    w = traj.flip_weights()
    w = w / w.sum()
    mj2 = np.empty(repetitions)
    mjy = np.empty(repetitions)
    for r in range(repetitions):
        # counts of flip numbers, then outcomes given flips: same law as per-shot trajectories
        per_k = rng.multinomial(m_shots, w)
        counts = np.zeros(len(traj.outcomes))
        for k in np.flatnonzero(per_k):
            p = traj.conditionals[k] / traj.conditionals[k].sum()
            counts += rng.multinomial(per_k[k], p)
        mj2[r] = counts @ j2 / m_shots
        mjy[r] = counts @ m / m_shots
    return mj2, mjy


def predicted_estimator_cov(model: ExactModel, params: ChannelParams, dist=None) -> np.ndarray:
    """Single-shot error-propagation covariance D^-1 Sigma D^-T from exact statistics."""
    dist = dist if dist is not None else model.distribution(params)
    sigma = dist.covariance()
    d_inv = np.linalg.inv(model.jacobian(params))
    return d_inv @ sigma @ d_inv.T


def mc_experiment(n: int, chi: float, params: ChannelParams, m_shots: int, repetitions: int,
                  seed: int, path: str = "auto") -> McResult:
    config = SqueezingConfig(n, chi)
    model = ExactModel(config, path)
    dist = model.distribution(params)
    predicted = predicted_estimator_cov(model, params, dist) / m_shots
    rng = make_rng(seed)
    mj2, mjy = _experiment_means(model, dist, params, m_shots, repetitions, rng)
    table = roat_moments(config, precision="double")
    est = np.empty((repetitions, 2))
    flags: dict[str, int] = {}
    failures = 0
    for r in range(repetitions):
        e = invert_moments(mj2[r], mjy[r], config, table)
        for f in e.flags:
            flags[f] = flags.get(f, 0) + 1
        if e.failed:
            failures += 1
            est[r] = np.nan
        else:
            est[r] = (e.eta, e.phi)
    good = est[~np.isnan(est).any(axis=1)]
    if len(good) >= 2:
        emp = np.cov(good.T, ddof=1)
        bias = good.mean(axis=0) - np.array([params.eta, _wrap_phase(params.phi)])
        stderr = good.std(axis=0, ddof=1) / math.sqrt(len(good))
    else:
        emp = np.full((2, 2), np.nan)
        bias = np.full(2, np.nan)
        stderr = np.full(2, np.nan)
    return McResult(n, chi, params.eta, params.phi, m_shots, repetitions, seed, RNG_ALGORITHM,
                    model.path, emp, predicted, bias, stderr, flags, failures)


def _wrap_phase(phi: float) -> float:
    return phi - 2 * math.pi if phi > math.pi else phi


# -- epsilon by brute force -----------------------------------------------------

def variance_jy(state: DenseState) -> float:
    v = state.data
    jy = apply_j(v, state.n, "y")
    mean = np.vdot(v, jy).real
    return float(np.vdot(jy, jy).real - mean**2)


def brute_force_epsilon(n: int, chi: float, grid: int = 401) -> float:
    """Rotation offset minimising Var(J_y): grid scan then golden-section refinement."""
    oat = build_oat_state(n, chi)

    def f(theta):
        return variance_jy(rotate_x(oat, theta))

    thetas = np.linspace(math.pi / 2, math.pi, grid)
    vals = np.array([f(t) for t in thetas])
    i = int(np.argmin(vals))
    lo = thetas[max(i - 1, 0)]
    hi = thetas[min(i + 1, grid - 1)]
    if i in (0, grid - 1):
        res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    else:
        res = optimize.minimize_scalar(f, bracket=(lo, thetas[i], hi), method="golden", tol=1e-12)
    return float(res.x - math.pi / 2)
