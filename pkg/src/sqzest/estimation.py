"""Error-propagation covariance of the (eta, phi) estimators and the bounds it is judged against."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .channel import ChannelParams
from .collective import ObservableStats, is_psd_2x2, observable_covariance
from .moments import SqueezingConfig

CSV_HEADER = ("n", "p", "chi", "eta", "norm_var_eta", "norm_var_phi")
NORMALIZATION = ("norm_var_eta = n Var(eta~) / (1 - eta^2); "
                 "norm_var_phi = n eta^2 Var(phi~) / (1 - eta^2); the fundamental bound is 1")
FIG2_EXPONENTS = (-math.inf, -2 / 3, -3 / 4, -5 / 6)
BOUND_SLACK = 1e-9
DET_GUARD = 1e-300


class UnidentifiablePhaseError(ValueError):
    pass


class SingularJacobianError(ArithmeticError):
    pass


def inv2(m: np.ndarray) -> np.ndarray:
    """Closed-form 2x2 inverse; entries are rescaled first so det cannot under- or overflow."""
    m = np.asarray(m, dtype=float)
    scale = float(np.max(np.abs(m)))
    if scale == 0.0 or not math.isfinite(scale):
        raise SingularJacobianError("2x2 matrix is zero or not finite")
    a, b, c, d = (m / scale).ravel()
    det = a * d - b * c
    if abs(det) <= DET_GUARD * max(abs(a * d), abs(b * c)) or det == 0.0:
        raise SingularJacobianError(f"2x2 matrix is singular (scaled det = {det!r})")
    return np.array([[d, -b], [-c, a]]) / (det * scale)


def propagate(jac: np.ndarray, obs_cov: np.ndarray) -> np.ndarray:
    """[D^T S^-1 D]^-1, evaluated as D^-1 S D^-T so a singular S is allowed."""
    d_inv = inv2(jac)
    out = d_inv @ obs_cov @ d_inv.T
    return 0.5 * (out + out.T)


def estimator_covariance(config: SqueezingConfig, params: ChannelParams, precision: str = "auto",
                         stats: ObservableStats | None = None) -> tuple[np.ndarray, list[str]]:
    """Per-repetition covariance of the (eta, phi) estimators at phi = 0."""
    if params.eta == 0.0:
        raise UnidentifiablePhaseError("eta = 0 erases all phase information")
    stats = stats if stats is not None else observable_covariance(config, params, precision)
    flags = []
    if params.eta == 1.0:
        flags.append("noiseless_limit")
    cov = propagate(stats.jacobian, stats.covariance)
    return cov, flags


def fundamental_bound(n: int, eta: float) -> np.ndarray:
    """n^-1 diag(1 - eta^2, (1 - eta^2) / eta^2); inf phase entry at eta = 0."""
    _check_bound_args(n, eta)
    phi = math.inf if eta == 0 else (1 - eta**2) / eta**2
    return np.diag([1 - eta**2, phi]) / n


def product_bound(n: int, eta: float) -> np.ndarray:
    _check_bound_args(n, eta)
    phi = math.inf if eta == 0 else 1 / eta**2
    return np.diag([1 - eta**2, phi]) / n


def _check_bound_args(n, eta):
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")


def normalized_variances(n: int, eta: float, cov: np.ndarray) -> tuple[float, float]:
    if eta >= 1.0:
        return math.nan, math.nan
    return (float(n * cov[0, 0] / (1 - eta**2)), float(n * eta**2 * cov[1, 1] / (1 - eta**2)))


@dataclass
class ProtocolReport:
    config: SqueezingConfig
    params: ChannelParams
    stats: ObservableStats
    est_cov: np.ndarray
    bound_general: np.ndarray
    bound_product: np.ndarray
    normalized: tuple[float, float]
    flags: list[str] = field(default_factory=list)

    @property
    def dominates_bound(self) -> bool:
        return is_psd_2x2(self.est_cov - self.bound_general, slack=BOUND_SLACK * float(np.max(np.abs(self.bound_general))))

    def to_json(self) -> dict:
        def mat(a):
            return [[_json_num(x) for x in row] for row in a]
        return {
            "version": __version__,
            "n": self.config.n,
            "chi": self.config.chi,
            "p": _p_label(self.config.p),
            "epsilon": self.config.epsilon,
            "eta": self.params.eta,
            "phi": self.params.phi,
            "stats": self.stats.to_json(),
            "est_cov": mat(self.est_cov),
            "bound_general": mat(self.bound_general),
            "bound_product": mat(self.bound_product),
            "normalized": {"norm_var_eta": _json_num(self.normalized[0]),
                           "norm_var_phi": _json_num(self.normalized[1])},
            "normalization": NORMALIZATION,
            "flags": list(self.flags),
        }


def _json_num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _p_label(p):
    if p is None:
        return None
    return "inf" if p == -math.inf else p


def protocol_report(config: SqueezingConfig, params: ChannelParams, precision: str = "auto") -> ProtocolReport:
    stats = observable_covariance(config, params, precision)
    cov, flags = estimator_covariance(config, params, precision, stats)
    if params.eta == 1.0:
        flags.append("normalization_undefined")
    return ProtocolReport(
        config=config,
        params=params,
        stats=stats,
        est_cov=cov,
        bound_general=fundamental_bound(config.n, params.eta),
        bound_product=product_bound(config.n, params.eta),
        normalized=normalized_variances(config.n, params.eta, cov),
        flags=flags,
    )


@dataclass(frozen=True)
class SweepRecord:
    n: int
    p: float
    chi: float
    eta: float
    normalized_eta_var: float
    normalized_phi_var: float
    flags: tuple[str, ...] = ()

    def csv_row(self) -> list[str]:
        return [str(self.n), "inf" if self.p == -math.inf else repr(float(self.p)), repr(float(self.chi)),
                repr(float(self.eta)), repr(float(self.normalized_eta_var)), repr(float(self.normalized_phi_var))]


def log_grid(n_min: float, n_max: float, points: int) -> list[int]:
    grid = np.unique(np.rint(np.logspace(math.log10(n_min), math.log10(n_max), points)).astype(np.int64))
    return [int(n) for n in grid if n >= 2]


def sweep_point(n: int, p: float, eta: float, precision: str = "auto") -> SweepRecord:
    config = SqueezingConfig.from_exponent(n, p)
    params = ChannelParams(eta, 0.0)
    try:
        cov, flags = estimator_covariance(config, params, precision)
    except UnidentifiablePhaseError:
        return SweepRecord(n, p, config.chi, eta, math.inf, math.inf, ("phase_unidentifiable",))
    ne, nphi = (float(v) for v in normalized_variances(n, eta, cov))
    if eta == 1.0:
        flags = flags + ["normalization_undefined"]
    return SweepRecord(n, p, config.chi, eta, ne, nphi, tuple(flags))


def sweep(eta: float, p_list, n_grid, precision: str = "auto") -> list[SweepRecord]:
    """One record per (n, p), sorted by p (chi = 0 first) then n."""
    records = [sweep_point(int(n), float(p), eta, precision) for p in p_list for n in n_grid]
    return sorted(records, key=lambda r: (r.p, r.n))


def records_to_csv(records, version_comment: bool = True) -> str:
    buf = io.StringIO()
    if version_comment:
        buf.write(f"# sqzest {__version__}; {NORMALIZATION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# -- correction-order diagnostics ---------------------------------------------

def predicted_slopes(p: float) -> dict[str, float]:
    """Exponents of |normalized - 1| in n along chi = n**p."""
    return {"eta": 3 + 4 * p, "phi": max(1 + 2 * p, -2 - 2 * p), "var_jy_balance": (2 + 4 * p, -2 - 2 * p)}


def expansion_diagnostics(p: float, eta: float = 0.8, n_grid=None, precision: str = "auto") -> dict:
    """Fit log-log slopes of |normalized - 1| against n and compare to the predicted orders."""
    if not -1.0 < p < -0.5:
        raise ValueError("expansion diagnostics need p in (-1, -1/2)")
    n_grid = n_grid if n_grid is not None else log_grid(1e6, 1e8, 9)
    recs = [sweep_point(n, p, eta, precision) for n in n_grid]
    logn = np.log([r.n for r in recs])
    dev_eta = np.abs(np.array([r.normalized_eta_var for r in recs]) - 1.0)
    dev_phi = np.abs(np.array([r.normalized_phi_var for r in recs]) - 1.0)
    slope_eta = float(np.polyfit(logn, np.log(dev_eta), 1)[0])
    slope_phi = float(np.polyfit(logn, np.log(dev_phi), 1)[0])
    pred = predicted_slopes(p)
    return {
        "p": p,
        "eta": eta,
        "n": [r.n for r in recs],
        "dev_eta": dev_eta.tolist(),
        "dev_phi": dev_phi.tolist(),
        "slope_eta": slope_eta,
        "slope_phi": slope_phi,
        "predicted_eta": pred["eta"],
        "predicted_phi": pred["phi"],
    }


def balance_exponent() -> float:
    """p at which the two Var(J_y) error terms n^(2+4p) and n^(-2-2p) balance."""
    # 2 + 4p = -2 - 2p
    return -4.0 / 6.0
