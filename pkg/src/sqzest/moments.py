"""Permutation-invariant Pauli moments of one-axis-twisted states.

A moment is the expectation value of a product of Pauli operators acting on
distinct (unspecified) qubits. Permutation invariance of the states means a
word like ``"xyy"`` fully identifies the moment, so tables are keyed by the
sorted label string.

Three frames are supported: ``OAT`` (the twisted state), ``ROAT`` (rotated
about x so the minimal-variance direction is y) and ``OUTPUT`` (after one
use of the dephasing channel on every qubit).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from types import MappingProxyType
from typing import Callable, Mapping

from . import _arith
from .channel import ChannelParams

MAX_ORDER = 4
AXES = "xyz"
FRAMES = ("OAT", "ROAT", "OUTPUT")


class IncompleteTableError(KeyError):
    pass


class InvalidWordError(ValueError):
    pass


def canonical(word: str) -> str:
    word = "".join(sorted(word))
    if not word or len(word) > MAX_ORDER or set(word) - set(AXES):
        raise InvalidWordError(f"not a Pauli word of length 1..{MAX_ORDER}: {word!r}")
    return word


def all_words(max_len: int = MAX_ORDER) -> list[str]:
    out = []
    for k in range(1, max_len + 1):
        out.extend("".join(w) for w in itertools.combinations_with_replacement(AXES, k))
    return out


def odd_yz(word: str) -> bool:
    """True when the word is odd under the pi rotation about x."""
    return (word.count("y") + word.count("z")) % 2 == 1


@dataclass(frozen=True)
class SqueezingConfig:
    """Particle number and twisting strength, optionally via chi = n**p.

    ``p = -inf`` encodes the untwisted (chi = 0) protocol.
    """

    n: int
    chi: float
    p: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        chi = float(self.chi)
        if not (0.0 <= chi < math.pi / 2):
            raise ValueError(f"chi must lie in [0, pi/2), got {self.chi!r}")
        object.__setattr__(self, "chi", chi)

    @classmethod
    def from_exponent(cls, n: int, p: float) -> "SqueezingConfig":
        if p > 0:
            raise ValueError("scaling exponent p must be <= 0")
        chi = 0.0 if p == -math.inf else float(n) ** p
        return cls(n, chi, p)

    @property
    def epsilon(self) -> float:
        return epsilon_angle(self.n, self.chi)


def epsilon_angle(n: int, chi: float, arith=_arith.DOUBLE):
    """Rotation offset that minimises Var(J_y) of the twisted state.

    Uses atan2 so the n = 2 case (zero denominator) and chi -> 0 (0/0, taken
    as pi/4 by continuity) need no special branches beyond chi == 0.
    """
    chi = arith.num(chi)
    if chi == 0:
        return arith.pi / 4
    num = 4 * arith.sin(chi) * arith.cospow(n - 2, chi)
    den = arith.one_minus_cospow(n - 2, 2 * chi)
    return arith.atan2(num, den) / 2


def _oat_formulas(a, n, chi) -> dict[str, Callable[[], object]]:
    c, s = a.cospow, a.sin
    om = a.one_minus_cospow
    s1, s2, s3 = s(chi), s(2 * chi), s(3 * chi)
    return {
        "x": lambda: c(n - 1, chi),
        "xx": lambda: 1 - om(n - 2, 2 * chi) / 2,
        "yy": lambda: om(n - 2, 2 * chi) / 2,
        "yz": lambda: s1 * c(n - 2, chi),
        "zz": lambda: 0,
        "xxx": lambda: 1 - (3 * om(n - 3, chi) + om(n - 3, 3 * chi)) / 4,
        "xyy": lambda: (om(n - 3, 3 * chi) - om(n - 3, chi)) / 4,
        "xyz": lambda: s2 * c(n - 3, 2 * chi) / 2,
        "xzz": lambda: -s1**2 * c(n - 3, chi),
        "xxxx": lambda: 1 - (4 * om(n - 4, 2 * chi) + om(n - 4, 4 * chi)) / 8,
        "xxyy": lambda: om(n - 4, 4 * chi) / 8,
        "xxyz": lambda: (s1 * c(n - 4, chi) + c(n - 4, 3 * chi) * s3) / 4,
        "xxzz": lambda: -s2**2 * c(n - 4, 2 * chi) / 2,
        "yyyy": lambda: (4 * om(n - 4, 2 * chi) - om(n - 4, 4 * chi)) / 8,
        "yyyz": lambda: (3 * s1 * c(n - 4, chi) - c(n - 4, 3 * chi) * s3) / 4,
        "yyzz": lambda: s2**2 * c(n - 4, 2 * chi) / 2,
        "yzzz": lambda: -s1**3 * c(n - 4, chi),
        "zzzz": lambda: 0,
    }


def oat_moment(word: str, n: int, chi: float, arith=_arith.DOUBLE):
    """Exact moment of e^{-i chi J_z^2}|+>^n for a Pauli word on distinct sites."""
    word = canonical(word)
    if len(word) > n:
        raise InvalidWordError(f"word {word!r} needs {len(word)} sites but n = {n}")
    if odd_yz(word):
        return arith.num(0)
    value = _oat_formulas(arith, n, arith.num(chi))[word]()
    return arith.num(value)


@dataclass(frozen=True)
class MomentTable:
    frame: str
    entries: Mapping[str, object]
    config: SqueezingConfig
    params: ChannelParams | None = None
    precision: str = "double"
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise ValueError(f"unknown frame {self.frame!r}")
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def __getitem__(self, word: str):
        key = canonical(word)
        try:
            return self.entries[key]
        except KeyError:
            raise IncompleteTableError(f"{self.frame} table has no entry for {key!r}") from None

    def __contains__(self, word: str) -> bool:
        return canonical(word) in self.entries

    def floats(self) -> dict[str, float]:
        return {w: float(v) for w, v in self.entries.items()}

    def to_json(self) -> dict:
        return {
            "frame": self.frame,
            "n": self.config.n,
            "chi": self.config.chi,
            "eta": None if self.params is None else self.params.eta,
            "phi": None if self.params is None else self.params.phi,
            "precision": self.precision,
            "entries": [{"word": w, "value": float(v)} for w, v in sorted(
                self.entries.items(), key=lambda kv: (len(kv[0]), kv[0]))],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, data: dict) -> "MomentTable":
        params = None
        if data.get("eta") is not None:
            params = ChannelParams(data["eta"], data.get("phi") or 0.0)
        return cls(
            frame=data["frame"],
            entries={canonical(e["word"]): float(e["value"]) for e in data["entries"]},
            config=SqueezingConfig(data["n"], data["chi"]),
            params=params,
            precision=data.get("precision", "double"),
        )


def oat_table(config: SqueezingConfig, arith=_arith.DOUBLE) -> MomentTable:
    n = config.n
    entries = {w: oat_moment(w, n, config.chi, arith) for w in all_words(min(n, MAX_ORDER))}
    return MomentTable("OAT", entries, config, precision=arith.name)


def _expand(word: str, subst: Mapping[str, Mapping[str, object]]) -> dict[str, object]:
    """Multilinear expansion of a word under a per-label linear substitution."""
    terms: dict[str, object] = {"": 1}
    for label in word:
        nxt: dict[str, object] = {}
        for w, coef in terms.items():
            for new_label, c in subst[label].items():
                key = "".join(sorted(w + new_label))
                nxt[key] = nxt.get(key, 0) + coef * c
        terms = nxt
    return terms


def _substitute(table: MomentTable, words, subst) -> dict[str, object]:
    out = {}
    for w in words:
        total = 0
        for term, coef in _expand(w, subst).items():
            if coef == 0:
                continue
            if term not in table.entries:
                raise IncompleteTableError(
                    f"expanding {w!r} needs {term!r}, missing from the {table.frame} table")
            total = total + coef * table.entries[term]
        out[w] = total
    return out


def rotate_moments(table: MomentTable, theta, arith=_arith.DOUBLE, words=None) -> MomentTable:
    """Moments after the site-wise rotation e^{i theta sigma_x / 2} on every qubit.

    Heisenberg picture: sigma_y -> cos sigma_y + sin sigma_z and
    sigma_z -> cos sigma_z - sin sigma_y, sigma_x unchanged.
    """
    theta = arith.num(theta)
    c, s = arith.cos(theta), arith.sin(theta)
    return _rotate(table, c, s, words)


def _rotate(table, c, s, words=None):
    subst = {"x": {"x": 1}, "y": {"y": c, "z": s}, "z": {"z": c, "y": -s}}
    words = list(table.entries) if words is None else [canonical(w) for w in words]
    entries = _substitute(table, words, subst)
    return MomentTable("ROAT", entries, table.config, precision=table.precision)


@lru_cache(maxsize=256)
def _roat_cached(n: int, chi: float, precision: str) -> MomentTable:
    arith = _arith.select(precision, n)
    config = SqueezingConfig(n, chi)
    if chi == 0.0:
        # rotation about x leaves |+>^n invariant up to a global phase
        entries = {w: arith.num(1 if set(w) == {"x"} else 0)
                   for w in all_words(min(n, MAX_ORDER))}
        return MomentTable("ROAT", entries, config, precision=arith.name)
    eps = epsilon_angle(n, chi, arith)
    # theta = eps + pi/2, written without adding pi/2 in floating point
    table = _rotate(oat_table(config, arith), -arith.sin(eps), arith.cos(eps))
    return MomentTable("ROAT", table.entries, config, precision=arith.name,
                       meta={"epsilon": float(eps)})


def roat_moments(config: SqueezingConfig | int, chi: float | None = None,
                 precision: str = "auto") -> MomentTable:
    """Moment table of the optimally rotated twisted state."""
    if not isinstance(config, SqueezingConfig):
        config = SqueezingConfig(config, chi)
    arith = _arith.select(precision, config.n)
    return _roat_cached(config.n, config.chi, arith.name)


def output_moments(roat: MomentTable, params: ChannelParams, words=None) -> MomentTable:
    """Moments on the channel output, via the dual channel on every site."""
    if roat.frame != "ROAT":
        raise ValueError(f"expected a ROAT table, got {roat.frame}")
    arith = _arith.select(roat.precision, roat.config.n)
    eta = arith.num(params.eta)
    if params.phi == 0.0:
        c, s = arith.num(1), arith.num(0)
    else:
        c, s = arith.cos(arith.num(params.phi)), arith.sin(arith.num(params.phi))
    subst = {
        "x": {"x": eta * c, "y": -eta * s},
        "y": {"x": eta * s, "y": eta * c},
        "z": {"z": 1},
    }
    words = list(roat.entries) if words is None else [canonical(w) for w in words]
    entries = _substitute(roat, words, subst)
    return MomentTable("OUTPUT", entries, roat.config, params, precision=roat.precision)


# -- diagnostics ------------------------------------------------------------

def roat_leading_orders(n: int, chi: float) -> dict[str, float]:
    """Leading terms of the large-n expansions of selected ROAT moments.

    Diagnostic only; the pipeline always uses the exact tables.
    """
    nc2 = n * chi**2
    return {
        "x": 1 - nc2 / 2,
        "xx": 1 - nc2,
        "yy": -1.0 / n,
        "zz": nc2 + 1.0 / n,
        "xxx": 1 - 1.5 * nc2,
        "xyy": -1.0 / n,
        "xzz": nc2 + 1.0 / n,
        "xxxx": 1 - 2 * nc2,
        "xxyy": -1.0 / n,
        "xxzz": nc2 + 1.0 / n,
    }


def gaussian_defect(n: int, chi: float, precision: str = "auto") -> float:
    """max over i, j of |<s_i s_i s_j s_j> - <s_i s_i><s_j s_j>| on the ROAT state."""
    t = roat_moments(SqueezingConfig(n, chi), precision=precision)
    worst = 0.0
    for i, j in itertools.combinations_with_replacement(AXES, 2):
        d = t[i + i + j + j] - t[i + i] * t[j + j]
        worst = max(worst, abs(float(d)))
    return worst


def fit_gaussian_constant(ns, exponent: float = -0.75) -> dict[str, object]:
    """Fit C in defect <= C n^2 chi^4 along chi = n**exponent."""
    ratios = []
    for n in ns:
        chi = float(n) ** exponent
        ratios.append(gaussian_defect(int(n), chi) / (n**2 * chi**4))
    return {"ns": list(ns), "ratios": ratios, "constant": max(ratios)}
