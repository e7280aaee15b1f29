"""Collective spin statistics of the channel output, from permutation-invariant moments.

All second-order quantities are exposed at the phi = 0 operating point only;
general phases go through :mod:`sqzest.oracle`.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _arith
from .channel import ChannelParams
from .moments import AXES, MomentTable, SqueezingConfig, output_moments, roat_moments

log = logging.getLogger(__name__)

NEGATIVE_VARIANCE_SLACK = 1e-9


class NegativeVarianceError(ArithmeticError):
    pass


def _require_zero_phase(params: ChannelParams) -> None:
    if not params.at_zero_phase:
        raise ValueError("closed-form second moments are only available at phi = 0")


def _tables(config: SqueezingConfig, params: ChannelParams, precision: str):
    roat = roat_moments(config, precision=precision)
    return roat, output_moments(roat, params)


def _clamp_variance(value, scale: float, what: str) -> float:
    value = float(value)
    if value >= 0.0:
        return value
    if value >= -NEGATIVE_VARIANCE_SLACK * scale:
        # a few ulps of the largest cancelling term is ordinary rounding; say so quietly
        level = logging.DEBUG if -value <= 64 * np.finfo(float).eps * scale else logging.WARNING
        log.log(level, "%s = %.3e is rounding noise below zero; clamped to 0", what, value)
        return 0.0
    raise NegativeVarianceError(f"{what} = {value:.6e} is negative beyond rounding slack")


def mean_jy(config: SqueezingConfig, params: ChannelParams, precision: str = "auto") -> float:
    """<J_y> = (n eta / 2) [cos(phi) <s_y> + sin(phi) <s_x>] on the rotated state."""
    _, out = _tables(config, params, precision)
    return float(config.n * out["y"] / 2)


def mean_j2(config: SqueezingConfig, params: ChannelParams, precision: str = "auto") -> float:
    roat = roat_moments(config, precision=precision)
    return float(_mean_j2(roat, config.n, params.eta))


def _mean_j2(roat: MomentTable, n: int, eta):
    arith = _arith.select(roat.precision, n)
    eta = arith.num(eta)
    pair = roat["zz"] if n >= 2 else 0
    return arith.num(3 * n) / 4 + arith.num(n * (n - 1)) / 4 * (eta**2 * (roat["xx"] + roat["yy"]) + pair)


def var_jy(config: SqueezingConfig, params: ChannelParams, precision: str = "auto") -> float:
    """Var(J_y) = [n + eta^2 n(n-1) <s_y s_y>] / 4 at phi = 0."""
    _require_zero_phase(params)
    roat = roat_moments(config, precision=precision)
    n = config.n
    arith = _arith.select(roat.precision, n)
    value = (arith.num(n) + arith.num(params.eta) ** 2 * n * (n - 1) * roat["yy"]) / 4
    return _clamp_variance(value, n * n / 4.0, "Var(J_y)")


# -- fourth moments ---------------------------------------------------------

def occurrence_counts(n: int, same_axis: bool) -> list[tuple[str, int]]:
    """Index classes of sum_{k,l,m,n} s_i^(k) s_i^(l) s_j^(m) s_j^(n) and their sizes."""
    if same_axis:
        return [
            ("all distinct", n * (n - 1) * (n - 2) * (n - 3)),
            ("one pair", 6 * n * (n - 1) * (n - 2)),
            ("one triple", 4 * n * (n - 1)),
            ("two pairs", 3 * n * (n - 1)),
            ("all equal", n),
        ]
    return [
        ("all distinct", n * (n - 1) * (n - 2) * (n - 3)),
        ("one cross coincidence", 4 * n * (n - 1) * (n - 2)),
        ("k = l only", n * n * (n - 1)),
        ("m = n only", n * n * (n - 1)),
        ("two cross pairs", 2 * n * (n - 1)),
        ("k = l and m = n", n * n),
    ]


def _third_axis(i: str, j: str) -> str:
    return next(a for a in AXES if a not in (i, j))


def cov_by_enumeration(i: str, j: str, out: MomentTable, n: int):
    """Symmetrised Cov(J_i^2, J_j^2) summed class by class over the index hypercube.

    Same-site products are contracted before looking up moments:
    s_i s_i = 1 and s_i s_j = i eps_ijk s_k; the imaginary single-coincidence
    class cancels in the symmetrised product.
    """
    counts = dict(occurrence_counts(n, i == j))

    def q(word):
        return out[word] if len(word) <= n else 0

    if i == j:
        ii, iiii = q(i + i), q(i * 4)
        second = (counts["all distinct"] * iiii
                  + (counts["one pair"] + counts["one triple"]) * ii
                  + counts["two pairs"] + counts["all equal"])
        mean_sq = (n + n * (n - 1) * ii) / 4
        return second / 16 - mean_sq**2
    k = _third_axis(i, j)
    ii, jj, kk, iijj = q(i + i), q(j + j), q(k + k), q(i + i + j + j)
    second = (counts["all distinct"] * iijj
              + counts["k = l only"] * jj
              + counts["m = n only"] * ii
              - counts["two cross pairs"] * kk
              + counts["k = l and m = n"])
    mean_i = (n + n * (n - 1) * ii) / 4
    mean_j = (n + n * (n - 1) * jj) / 4
    return second / 16 - mean_i * mean_j


def _cov_collected(i: str, j: str, out: MomentTable, n: int):
    """Same covariance, grouped by powers of n so that the leading n^4 term
    multiplies the connected combination <iijj> - <ii><jj>."""
    n2, n3, n4 = n * n, n**3, n**4
    if i == j:
        q = out[i + i]
        q4 = out[i * 4] if n >= 4 else 0
        total = (n4 * (q4 - q * q) + n3 * (4 * q + 2 * q * q - 6 * q4)
                 + n2 * (2 - 12 * q - q * q + 11 * q4) + n * (-2 + 8 * q - 6 * q4))
        return total / 16
    k = _third_axis(i, j)
    qi, qj, qk = out[i + i], out[j + j], out[k + k]
    q4 = out[i + i + j + j] if n >= 4 else 0
    total = (n4 * (q4 - qi * qj) + n3 * (2 * qi * qj - 6 * q4)
             + n2 * (11 * q4 - 2 * qk - qi * qj) + n * (2 * qk - 6 * q4))
    return total / 16


def fourth_moment_combinatorics(i: str, j: str, config: SqueezingConfig, params: ChannelParams,
                                precision: str = "auto") -> float:
    """Symmetrised Cov(J_i^2, J_j^2) on the channel output."""
    if i not in AXES or j not in AXES:
        raise ValueError("axes must be among 'x', 'y', 'z'")
    _, out = _tables(config, params, precision)
    return float(_cov_collected(i, j, out, config.n))


def cov_j2_components(out: MomentTable, n: int) -> np.ndarray:
    return np.array([[float(_cov_collected(a, b, out, n)) for b in AXES] for a in AXES])


def _var_j2(out: MomentTable, n: int):
    total = 0
    for a in AXES:
        for b in AXES:
            total = total + _cov_collected(a, b, out, n)
    return total


def var_j2(config: SqueezingConfig, params: ChannelParams, precision: str = "auto") -> float:
    """Var(J^2) as the sum of all nine Cov(J_i^2, J_j^2).

    J^2 commutes with the phase rotation, so the value does not depend on phi.
    """
    _, out = _tables(config, params, precision)
    n = config.n
    return _clamp_variance(_var_j2(out, n), n**4 / 16.0, "Var(J^2)")


# -- assembled statistics ---------------------------------------------------

@dataclass
class ObservableStats:
    mean_jy: float
    mean_j2: float
    var_jy: float
    var_j2: float
    cov_j2_jy: float
    jacobian: np.ndarray  # rows (J^2, J_y), columns (eta, phi)
    precision: str = "double"

    @property
    def covariance(self) -> np.ndarray:
        return np.array([[self.var_j2, self.cov_j2_jy], [self.cov_j2_jy, self.var_jy]])

    def to_json(self) -> dict:
        return {
            "mean_jy": self.mean_jy,
            "mean_j2": self.mean_j2,
            "var_jy": self.var_jy,
            "var_j2": self.var_j2,
            "cov_j2_jy": self.cov_j2_jy,
            "jacobian": [[float(x) for x in row] for row in self.jacobian],
            "precision": self.precision,
        }


def jacobian(config: SqueezingConfig, params: ChannelParams, precision: str = "auto") -> np.ndarray:
    _require_zero_phase(params)
    roat = roat_moments(config, precision=precision)
    n, eta = config.n, params.eta
    d_j2_eta = n * (n - 1) / 2 * eta * float(roat["xx"] + roat["yy"])
    d_jy_phi = n * eta / 2 * float(roat["x"])
    # d<J^2>/dphi vanishes identically and d<J_y>/deta carries sin(phi)
    return np.array([[d_j2_eta, 0.0], [0.0, d_jy_phi]])


def observable_covariance(config: SqueezingConfig, params: ChannelParams,
                          precision: str = "auto") -> ObservableStats:
    _require_zero_phase(params)
    roat, out = _tables(config, params, precision)
    n = config.n
    arith = _arith.select(roat.precision, n)
    vjy = (arith.num(n) + arith.num(params.eta) ** 2 * n * (n - 1) * roat["yy"]) / 4
    return ObservableStats(
        mean_jy=0.0,
        mean_j2=float(_mean_j2(roat, n, params.eta)),
        var_jy=_clamp_variance(vjy, n * n / 4.0, "Var(J_y)"),
        var_j2=_clamp_variance(_var_j2(out, n), n**4 / 16.0, "Var(J^2)"),
        cov_j2_jy=0.0,
        jacobian=jacobian(config, params, precision),
        precision=roat.precision,
    )


def leading_var_j2(n: int, eta: float) -> float:
    return n**3 * eta**2 * (1 - eta**2) / 4


def is_psd_2x2(m: np.ndarray, slack: float = 0.0) -> bool:
    a, b, d = m[0, 0], 0.5 * (m[0, 1] + m[1, 0]), m[1, 1]
    tr = a + d
    det = a * d - b * b
    return a >= -slack and d >= -slack and det >= -slack * max(1.0, abs(tr)) ** 2 and math.isfinite(tr)
