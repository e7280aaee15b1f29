"""Scalar arithmetic backends for the closed-form pipeline.

Two backends share one interface: ``DOUBLE`` works in IEEE doubles with
compensated powers of cosines, ``EXTENDED`` runs the same formulas in a
private mpmath context. The closed-form modules never call ``math`` or
``mpmath`` directly, so switching precision is a single argument.
"""
from __future__ import annotations

import math

import mpmath

EXTENDED_DPS = 50
# above this particle count the closed forms default to the extended backend
EXTENDED_THRESHOLD = 10**6


class DoubleArith:
    name = "double"
    pi = math.pi

    @staticmethod
    def num(x):
        return float(x)

    cos = staticmethod(math.cos)
    sin = staticmethod(math.sin)
    sqrt = staticmethod(math.sqrt)
    atan2 = staticmethod(math.atan2)

    @staticmethod
    def _log_abs_cos(x):
        """Return (log|cos x|, sign of cos x) without cancellation near |cos x| = 1."""
        c = math.cos(x)
        if c > 0.5:
            return math.log1p(-2.0 * math.sin(0.5 * x) ** 2), 1.0
        if c < -0.5:
            return math.log1p(-2.0 * math.cos(0.5 * x) ** 2), -1.0
        if c == 0.0:
            return -math.inf, 0.0
        return math.log(abs(c)), math.copysign(1.0, c)

    @classmethod
    def cospow(cls, m: int, x):
        """cos(x)**m for integer m >= 0."""
        if m == 0:
            return 1.0
        log_c, sign = cls._log_abs_cos(x)
        if sign == 0.0:
            return 0.0
        value = math.exp(m * log_c)
        return -value if (sign < 0 and m % 2) else value

    @classmethod
    def one_minus_cospow(cls, m: int, x):
        """1 - cos(x)**m, accurate to relative precision when cos(x)**m is near 1."""
        if m == 0:
            return 0.0
        log_c, sign = cls._log_abs_cos(x)
        if sign == 0.0:
            return 1.0
        if sign < 0 and m % 2:
            return 1.0 + math.exp(m * log_c)
        return -math.expm1(m * log_c)

    @staticmethod
    def to_float(x) -> float:
        return float(x)


class ExtendedArith:
    name = "extended"

    def __init__(self, dps: int = EXTENDED_DPS):
        self.ctx = mpmath.MPContext()
        self.ctx.dps = dps
        self.pi = self.ctx.pi
        self.cos = self.ctx.cos
        self.sin = self.ctx.sin
        self.sqrt = self.ctx.sqrt
        self.atan2 = self.ctx.atan2

    def num(self, x):
        return self.ctx.mpf(x)

    def cospow(self, m: int, x):
        if m == 0:
            return self.ctx.mpf(1)
        return self.ctx.cos(x) ** m

    def one_minus_cospow(self, m: int, x):
        if m == 0:
            return self.ctx.mpf(0)
        c = self.ctx.cos(x)
        if c > 0:
            # cos x = 1 - 2 sin^2(x/2); keeps the difference exact-ish even at 50 digits
            return -self.ctx.expm1(m * self.ctx.log1p(-2 * self.ctx.sin(x / 2) ** 2))
        return 1 - c**m

    @staticmethod
    def to_float(x) -> float:
        return float(x)


DOUBLE = DoubleArith()
EXTENDED = ExtendedArith()


def select(precision: str, n: int):
    """Resolve ``"double"``, ``"extended"`` or ``"auto"`` to a backend."""
    if precision == "double":
        return DOUBLE
    if precision == "extended":
        return EXTENDED
    if precision == "auto":
        return EXTENDED if n > EXTENDED_THRESHOLD else DOUBLE
    raise ValueError(f"unknown precision {precision!r}")
