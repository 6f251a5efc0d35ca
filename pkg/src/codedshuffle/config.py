"""System parameters shared by the placement, delay and simulation code."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InfeasibleConfig


def as_fraction(value) -> Fraction:
    """Exact rational from an int, Fraction, or string like ``"1/2"``/``"0.75"``.

    Floats are converted through ``repr`` so ``0.1`` becomes ``1/10`` rather
    than its binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


@dataclass(frozen=True)
class SystemConfig:
    """K devices, storage fraction mu, N functions of degree d over m rows.

    ``gamma`` is the compute-to-communicate time ratio and ``alpha`` the CSI
    accuracy exponent (0 = no CSI, 1 = perfect CSI).
    """

    K: int
    mu: Fraction
    N: int
    m: int
    d: int
    gamma: Fraction = Fraction(1)
    alpha: Fraction = Fraction(1)

    def __post_init__(self):
        for name in ("mu", "gamma", "alpha"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        for name in ("K", "N", "m", "d"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise InfeasibleConfig(f"{name} must be a positive integer, got {v!r}")
        if not Fraction(1, self.K) <= self.mu <= 1:
            raise InfeasibleConfig(f"mu={self.mu} outside [1/K, 1] for K={self.K}")
        if self.mu * self.m < 1:
            raise InfeasibleConfig(f"mu*m = {self.mu * self.m} < 1: devices store nothing")
        if not 0 <= self.alpha <= 1:
            raise InfeasibleConfig(f"alpha={self.alpha} outside [0, 1]")
        if self.gamma < 0:
            raise InfeasibleConfig(f"gamma={self.gamma} is negative")

    @property
    def max_r2(self) -> int:
        """Largest repetition factor allowed by storage, floor(mu K)."""
        return int(self.mu * self.K)

    def replace(self, **changes) -> "SystemConfig":
        values = {k: getattr(self, k) for k in ("K", "mu", "N", "m", "d", "gamma", "alpha")}
        values.update(changes)
        return SystemConfig(**values)


# K=30 devices at half storage, 120 functions over 600 rows
REFERENCE_SYSTEM = SystemConfig(K=30, mu=Fraction(1, 2), N=120, m=600, d=1,
                                gamma=Fraction(1), alpha=Fraction(3, 4))
