"""Analytic test functions on the real line.

A ``RealTestFunction`` represents ``x -> c * B^(m)(a x)`` where ``B`` is a
base profile (a smooth bump or a Gaussian times a polynomial), ``m`` the
derivative order, ``a`` the argument scale and ``c`` the outer factor.
Derivatives and scalings only touch ``(m, a, c)``, so they are exact.
Linear combinations are ``Combination`` objects.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable

import numpy as np
from numpy.polynomial import Polynomial

from .errors import UsageError

BUMP = "bump"
GAUSS_POLY = "gauss_poly"
CUTOFF_REL = 1e-16


@lru_cache(maxsize=None)
def _bump_numerator(m: int) -> Polynomial:
    """N_m with d^m/ds^m exp(-1/(1-s^2)) = N_m(s) exp(-1/q) / q^(2m), q = 1 - s^2."""
    q = Polynomial([1.0, 0.0, -1.0])
    s = Polynomial([0.0, 1.0])
    if m == 0:
        return Polynomial([1.0])
    prev = _bump_numerator(m - 1)
    k = m - 1
    return prev.deriv() * q * q + 4 * k * s * q * prev - 2 * s * prev


@lru_cache(maxsize=None)
def _gauss_factor(coeffs: tuple[float, ...], m: int) -> Polynomial:
    """P_m with d^m/dt^m [P(t) exp(-t^2)] = P_m(t) exp(-t^2)."""
    if m == 0:
        return Polynomial(coeffs)
    prev = _gauss_factor(coeffs, m - 1)
    return prev.deriv() - 2 * Polynomial([0.0, 1.0]) * prev


@lru_cache(maxsize=None)
def _gauss_extent(coeffs: tuple[float, ...], m: int) -> tuple[float, float]:
    """(T, max) such that |P_m(t) e^{-t^2}| < CUTOFF_REL * max for |t| > T."""
    p = _gauss_factor(coeffs, m)
    t = np.linspace(-40.0, 40.0, 160001)
    vals = np.abs(p(t)) * np.exp(-t * t)
    peak = float(vals.max())
    if peak == 0.0:
        return 0.0, 0.0
    big = np.nonzero(vals >= CUTOFF_REL * peak)[0]
    T = max(abs(t[big[0]]), abs(t[big[-1]])) + 0.01
    return float(T), peak


@lru_cache(maxsize=None)
def _bump_peak(m: int) -> float:
    s = np.linspace(-1.0, 1.0, 20001)[1:-1]
    return float(np.max(np.abs(_bump_values(s, m))))


def _bump_values(s: np.ndarray, m: int) -> np.ndarray:
    out = np.zeros_like(s, dtype=float)
    inside = np.abs(s) < 1.0
    si = s[inside]
    q = 1.0 - si * si
    out[inside] = _bump_numerator(m)(si) * np.exp(-1.0 / q - 2 * m * np.log(q))
    return out


@dataclass(frozen=True)
class RealTestFunction:
    """``x -> outer * base^(order)(scale * x)`` for a preset base profile.

    ``params`` is ``(center, radius)`` for ``kind="bump"`` (base
    ``exp(-1/(1-s^2))`` with ``s = (t - center)/radius``) and the ascending
    polynomial coefficients for ``kind="gauss_poly"`` (base ``P(t) e^{-t^2}``).
    """

    kind: str
    params: tuple[float, ...]
    order: int = 0
    scale: float = 1.0
    outer: complex = 1.0

    def __post_init__(self):
        if self.kind not in (BUMP, GAUSS_POLY):
            raise UsageError(f"unknown test function kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind == BUMP and (len(self.params) != 2 or self.params[1] <= 0):
            raise UsageError("bump needs (center, radius > 0)")
        if self.kind == GAUSS_POLY and not self.params:
            raise UsageError("gauss_poly needs at least one coefficient")
        if self.order < 0 or not self.scale > 0:
            raise UsageError("order must be >= 0 and scale > 0")

    # constructors ---------------------------------------------------------

    @classmethod
    def bump(cls, center: float = 0.0, radius: float = 1.0) -> "RealTestFunction":
        return cls(BUMP, (center, radius))

    @classmethod
    def gauss_poly(cls, coeffs: Iterable[float]) -> "RealTestFunction":
        return cls(GAUSS_POLY, tuple(coeffs))

    @classmethod
    def gaussian(cls) -> "RealTestFunction":
        return cls(GAUSS_POLY, (1.0,))

    # exact operations -----------------------------------------------------

    def derivative(self, m: int = 1) -> "RealTestFunction":
        if m < 0:
            raise UsageError("derivative order must be >= 0")
        return replace(self, order=self.order + m, outer=self.outer * self.scale ** m)

    def scaled(self, a: float, c: complex = 1.0) -> "RealTestFunction":
        """x -> c * f(a x)."""
        if not a > 0:
            raise UsageError("scale must be positive")
        return replace(self, scale=self.scale * a, outer=self.outer * c)

    def times(self, c: complex) -> "RealTestFunction":
        return replace(self, outer=self.outer * c)

    def conj(self) -> "RealTestFunction":
        return replace(self, outer=complex(self.outer).conjugate())

    def base_key(self) -> tuple:
        return (self.kind, self.params, self.order, self.scale)

    # evaluation -----------------------------------------------------------

    def __call__(self, x) -> np.ndarray:
        t = self.scale * np.asarray(x, dtype=float)
        if self.kind == BUMP:
            center, radius = self.params
            base = _bump_values((t - center) / radius, self.order) / radius ** self.order
        else:
            base = _gauss_factor(self.params, self.order)(t) * np.exp(-t * t)
        return self.outer * base

    def support(self) -> tuple[float, float]:
        """Interval outside which |f| < 1e-16 max|f| (exactly zero for bumps)."""
        if self.kind == BUMP:
            center, radius = self.params
            return (center - radius) / self.scale, (center + radius) / self.scale
        T, _ = _gauss_extent(self.params, self.order)
        return -T / self.scale, T / self.scale

    def max_abs(self) -> float:
        if self.kind == BUMP:
            peak = _bump_peak(self.order) / self.params[1] ** self.order
        else:
            peak = _gauss_extent(self.params, self.order)[1]
        return abs(self.outer) * peak

    def breakpoints(self) -> list[float]:
        lo, hi = self.support()
        return [lo, hi]

    def __add__(self, other):
        return as_combination(self) + other

    def __radd__(self, other):
        return as_combination(self).__radd__(other)

    def __sub__(self, other):
        return as_combination(self) - other

    def __mul__(self, c):
        return as_combination(self) * c

    __rmul__ = __mul__

    def __neg__(self):
        return as_combination(self) * -1


@dataclass(frozen=True)
class Combination:
    """Finite linear combination of ``RealTestFunction`` terms."""

    terms: tuple[tuple[complex, RealTestFunction], ...] = ()

    def simplified(self) -> "Combination":
        acc: dict[tuple, list] = {}
        for w, f in self.terms:
            key = f.base_key()
            weight = complex(w) * complex(f.outer)
            if key in acc:
                acc[key][0] += weight
            else:
                acc[key] = [weight, replace(f, outer=1.0)]
        terms = tuple((w, f) for w, f in acc.values() if w != 0)
        return Combination(terms)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for w, f in self.terms:
            out += w * f(x)
        return out

    def derivative(self, m: int = 1) -> "Combination":
        return Combination(tuple((w, f.derivative(m)) for w, f in self.terms))

    def scaled(self, a: float, c: complex = 1.0) -> "Combination":
        return Combination(tuple((w, f.scaled(a, c)) for w, f in self.terms))

    def conj(self) -> "Combination":
        return Combination(tuple((complex(w).conjugate(), f.conj()) for w, f in self.terms))

    def support(self) -> tuple[float, float]:
        if not self.terms:
            return 0.0, 0.0
        sups = [f.support() for _, f in self.terms]
        return min(s[0] for s in sups), max(s[1] for s in sups)

    def breakpoints(self) -> list[float]:
        pts = sorted({p for _, f in self.terms for p in f.breakpoints()})
        return pts

    def max_abs(self) -> float:
        return sum(abs(w) * f.max_abs() for w, f in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other):
        other = as_combination(other)
        return Combination(self.terms + other.terms).simplified()

    def __radd__(self, other):
        if isinstance(other, (int, float)) and other == 0:
            return self
        return as_combination(other) + self

    def __sub__(self, other):
        return self + as_combination(other) * -1

    def __mul__(self, c):
        c = complex(c)
        if c == 0:
            return Combination()
        return Combination(tuple((w * c, f) for w, f in self.terms))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1


def as_combination(f) -> Combination:
    if isinstance(f, Combination):
        return f
    if isinstance(f, RealTestFunction):
        return Combination(((1.0, f),))
    raise UsageError(f"not a test function: {f!r}")


def derivative_at(f, k: int, x0: float = 0.0) -> complex:
    """Exact k-th derivative of a preset (or combination) at ``x0``."""
    return complex(as_combination(f).derivative(k)(np.array([x0]))[0])


def parse_preset(text: str, psi: RealTestFunction | None = None) -> Combination:
    """Parse preset strings such as ``gauss``, ``gauss_poly:1,1``, ``bump:0.3,0.8``,
    ``psi`` and ``psi_derivative:2`` (the latter two need the normalized bump)."""
    name, _, args = text.partition(":")
    vals = [float(v) for v in args.split(",")] if args else []
    name = name.strip().lower()
    if name == "gauss":
        return as_combination(RealTestFunction.gaussian())
    if name == "gauss_poly":
        return as_combination(RealTestFunction.gauss_poly(vals))
    if name == "bump":
        if len(vals) != 2:
            raise UsageError("bump preset needs center,radius")
        return as_combination(RealTestFunction.bump(*vals))
    if name in ("psi", "psi_derivative", "bump_derivative"):
        if psi is None:
            raise UsageError(f"preset {name!r} needs the normalized bump")
        b = int(vals[0]) if vals else (0 if name == "psi" else 1)
        return as_combination(psi.derivative(b))
    raise UsageError(f"unknown preset {text!r}")


def preset_from_config(obj, psi: RealTestFunction | None = None) -> Combination:
    """Presets given as strings or as dicts ``{"kind": ..., ...}``."""
    if isinstance(obj, str):
        return parse_preset(obj, psi)
    if isinstance(obj, dict):
        kind = obj.get("kind")
        if kind == "gauss_poly":
            return as_combination(RealTestFunction.gauss_poly(obj["coeffs"]))
        if kind == "bump":
            return as_combination(RealTestFunction.bump(obj.get("center", 0.0), obj.get("radius", 1.0)))
        if kind in ("gauss", "gaussian"):
            return as_combination(RealTestFunction.gaussian())
        if kind in ("psi", "bump_derivative"):
            return parse_preset(f"psi_derivative:{int(obj.get('order', 0))}", psi)
    raise UsageError(f"cannot parse test function {obj!r}")


def l1_bound(f) -> float:
    """Cheap upper bound on the L1 norm: max|f| times support length."""
    f = as_combination(f)
    lo, hi = f.support()
    return f.max_abs() * (hi - lo)
