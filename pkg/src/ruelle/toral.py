"""Exact correlations of hyperbolic toral automorphisms on trigonometric polynomials.

For ``Phi(x) = A x`` on the 2-torus, ``f o Phi^n`` has Fourier coefficient
``f_hat(m)`` at ``(A^T)^n m``, so correlations of trigonometric polynomials
are finite sums over lattice orbits.  The unstable eigenvector pairing
``<m, v_u>`` lives in the quadratic field Q(sqrt(D)), D = tr^2 - 4 det, and
is evaluated from its exact integer representation.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterable, Mapping

import mpmath as mp
import numpy as np

from .errors import NonzeroMean, UsageError
from .fit import CorrelationSeries

Lattice = tuple[int, int]
REAL_TOL = 1e-12


@dataclass(frozen=True)
class TrigPolynomial:
    """Finite Fourier series sum_m c_m exp(2 pi i <m, x>)."""

    coeffs: Mapping[Lattice, complex]
    real_valued: bool = False

    def __post_init__(self):
        clean = {}
        for m, c in dict(self.coeffs).items():
            m = (int(m[0]), int(m[1]))
            c = complex(c)
            if c != 0:
                clean[m] = clean.get(m, 0) + c
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))
        if self.real_valued:
            for m, c in self.coeffs.items():
                partner = self.coeffs.get((-m[0], -m[1]), 0)
                if abs(partner - c.conjugate()) > REAL_TOL * max(1.0, abs(c)):
                    raise UsageError(f"coefficients at {m} and its negative are not conjugate")

    @classmethod
    def from_json(cls, obj) -> "TrigPolynomial":
        real = False
        if isinstance(obj, dict):
            real = bool(obj.get("real_valued", False))
            obj = obj["terms"]
        coeffs = {}
        for item in obj:
            m = tuple(item["m"])
            if len(m) != 2:
                raise UsageError("lattice points must have two coordinates")
            coeffs[m] = coeffs.get(m, 0) + complex(float(item.get("re", 0.0)), float(item.get("im", 0.0)))
        return cls(coeffs, real)

    def to_json(self) -> dict:
        return {
            "schema": "ruelle.trigpoly/1",
            "real_valued": self.real_valued,
            "terms": [{"m": list(m), "re": c.real, "im": c.imag} for m, c in self.coeffs.items()],
        }

    @classmethod
    def monomial(cls, m: Lattice, c: complex = 1.0) -> "TrigPolynomial":
        return cls({tuple(m): c})

    @classmethod
    def random(cls, seed: int, radius: int = 5, density: float = 0.5, zero_mean: bool = True,
               real_valued: bool = False) -> "TrigPolynomial":
        """Random coefficients in the unit box on a random subset of |m|_inf <= radius."""
        if radius < 0 or not 0 < density <= 1:
            raise UsageError("need radius >= 0 and 0 < density <= 1")
        rng = random.Random(seed)
        coeffs = {}
        for m1 in range(-radius, radius + 1):
            for m2 in range(-radius, radius + 1):
                if zero_mean and m1 == m2 == 0:
                    continue
                if real_valued and (m1, m2) < (0, 0):
                    continue
                if rng.random() < density:
                    c = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
                    if real_valued and m1 == m2 == 0:
                        c = complex(c.real, 0.0)
                    coeffs[(m1, m2)] = c
                    if real_valued and (m1, m2) != (0, 0):
                        coeffs[(-m1, -m2)] = c.conjugate()
        if not coeffs:
            coeffs[(1, 0)] = 1.0
            if real_valued:
                coeffs[(-1, 0)] = 1.0
        return cls(coeffs, real_valued)

    @property
    def support(self) -> list[Lattice]:
        return list(self.coeffs)

    @property
    def mean(self) -> complex:
        return self.coeffs.get((0, 0), 0j)

    def radius(self) -> float:
        return max((math.hypot(*m) for m in self.coeffs), default=0.0)

    def l2_norm(self) -> float:
        return math.sqrt(math.fsum(abs(c) ** 2 for c in self.coeffs.values()))

    def __add__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0) + c
        return TrigPolynomial(out, self.real_valued and other.real_valued)

    def scaled(self, c: complex) -> "TrigPolynomial":
        return TrigPolynomial({m: c * v for m, v in self.coeffs.items()})

    def __call__(self, x) -> complex:
        x = np.asarray(x, dtype=float)
        return sum(c * np.exp(2j * np.pi * (m[0] * x[..., 0] + m[1] * x[..., 1]))
                   for m, c in self.coeffs.items())


def _sign(x: int) -> int:
    return 1 if x > 0 else -1


@dataclass(frozen=True)
class QuadraticValue:
    """(P + Q sqrt(D)) / 2 with integers P, Q and non-square D > 0."""

    P: int
    Q: int
    D: int

    @property
    def norm4(self) -> int:
        """4 * (field norm) = P^2 - Q^2 D, exact."""
        return self.P * self.P - self.Q * self.Q * self.D

    def __float__(self) -> float:
        if self.Q == 0:
            return self.P / 2
        if self.P == 0 or (self.P > 0) == (self.Q > 0):
            return (self.P + self.Q * math.sqrt(self.D)) / 2
        # opposite signs: use the exact norm to avoid cancellation
        return self.norm4 / (2 * (self.P - self.Q * math.sqrt(self.D)))

    def mp(self):
        return (self.P + self.Q * mp.sqrt(self.D)) / 2


@dataclass(frozen=True)
class ToralAutomorphism:
    matrix: tuple[tuple[int, int], tuple[int, int]]

    def __post_init__(self):
        (a, b), (c, d) = self.matrix
        m = ((int(a), int(b)), (int(c), int(d)))
        object.__setattr__(self, "matrix", m)
        det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
        if abs(det) != 1:
            raise UsageError("toral automorphism needs |det| = 1")
        if abs(m[0][0] + m[1][1]) <= 2:
            raise UsageError("toral automorphism needs |trace| > 2 (hyperbolic)")

    @classmethod
    def cat(cls) -> "ToralAutomorphism":
        return cls(((2, 1), (1, 1)))

    @classmethod
    def from_any(cls, obj) -> "ToralAutomorphism":
        if isinstance(obj, dict):
            obj = obj["entries"]
        return cls(tuple(tuple(row) for row in obj))

    @property
    def trace(self) -> int:
        return self.matrix[0][0] + self.matrix[1][1]

    @property
    def det(self) -> int:
        (a, b), (c, d) = self.matrix
        return a * d - b * c

    @property
    def discriminant(self) -> int:
        return self.trace ** 2 - 4 * self.det

    @property
    def lam(self) -> float:
        """Top eigenvalue (largest modulus, with sign)."""
        s = _sign(self.trace)
        return float(QuadraticValue(self.trace, s, self.discriminant))

    @property
    def lam_abs(self) -> float:
        return abs(self.lam)

    def _pairing(self, m: Lattice, conjugate: bool = False) -> QuadraticValue:
        """<m, v> for v = (b, lam - a) (or (lam - d, c) when b = 0), lam = (t + s sqrt D)/2."""
        (a, b), (c, d) = self.matrix
        t, D = self.trace, self.discriminant
        s = _sign(t) * (-1 if conjugate else 1)
        m1, m2 = m
        if b != 0:
            return QuadraticValue(2 * m1 * b + m2 * (t - 2 * a), s * m2, D)
        return QuadraticValue(m1 * (t - 2 * d) + 2 * m2 * c, s * m1, D)

    def _vector_norm(self, conjugate: bool = False) -> float:
        e1 = float(self._pairing((1, 0), conjugate))
        e2 = float(self._pairing((0, 1), conjugate))
        return math.hypot(e1, e2)

    @property
    def v_u(self) -> np.ndarray:
        e = np.array([float(self._pairing((1, 0))), float(self._pairing((0, 1)))])
        return e / np.linalg.norm(e)

    @property
    def v_s(self) -> np.ndarray:
        e = np.array([float(self._pairing((1, 0), True)), float(self._pairing((0, 1), True))])
        return e / np.linalg.norm(e)

    def pairing(self, m: Lattice) -> float:
        """<m, v_u> with v_u the unit unstable eigenvector."""
        return float(self._pairing(m)) / self._vector_norm()

    def pairing_mp(self, m: Lattice):
        v = self._pairing(m).mp()
        e1, e2 = self._pairing((1, 0)).mp(), self._pairing((0, 1)).mp()
        return v / mp.sqrt(e1 ** 2 + e2 ** 2)

    @property
    def diophantine_constant(self) -> float:
        """c_A with |<m, v_u>| >= c_A / |m| for every nonzero m.

        |<m,v>| |<m,v'>| = |P^2 - Q^2 D| / 4 >= 1/4 for the Galois-conjugate
        pairing v', and |<m,v'>| <= |m| |v'|.
        """
        return 1.0 / (4 * self._vector_norm() * self._vector_norm(True))

    def transpose_power(self, m: Lattice, n: int) -> Lattice:
        (a, b), (c, d) = self.matrix
        m1, m2 = m
        for _ in range(n):
            m1, m2 = a * m1 + c * m2, b * m1 + d * m2
        return m1, m2


# ---------------------------------------------------------------------------


def correlate(f: TrigPolynomial, g: TrigPolynomial, A: ToralAutomorphism, N: int) -> CorrelationSeries:
    """C(n) = sum_m f_hat(m) conj(g_hat((A^T)^n m)), n = 0..N, as exact finite sums."""
    if N < 0:
        raise UsageError("N must be >= 0")
    orbit = dict(f.coeffs)
    vals = []
    for _n in range(N + 1):
        terms = [c * g.coeffs[m].conjugate() for m, c in orbit.items() if m in g.coeffs]
        vals.append(complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms)))
        orbit = {A.transpose_power(m, 1): c for m, c in orbit.items()}
    meta = {"system": "torus", "lambda": repr(A.lam), "matrix": repr(A.matrix)}
    return CorrelationSeries(tuple(range(N + 1)), np.array(vals), np.zeros(N + 1), (True,) * (N + 1), meta)


def unstable_derivative(f: TrigPolynomial, A: ToralAutomorphism, k: int = 1) -> TrigPolynomial:
    """X^k f with X = v_u . grad: coefficients times (2 pi i <m, v_u>)^k."""
    if k < 0:
        raise UsageError("k must be >= 0")
    if k == 0:
        return f
    return TrigPolynomial({m: c * (2j * math.pi * A.pairing(m)) ** k for m, c in f.coeffs.items()},
                          f.real_valued)


def solve_coboundary(f: TrigPolynomial, A: ToralAutomorphism, k: int = 1) -> TrigPolynomial:
    """u with X^k u = f; requires f_hat(0) = 0."""
    if k < 0:
        raise UsageError("k must be >= 0")
    if abs(f.mean) > 0:
        raise NonzeroMean(f"f has nonzero mean {f.mean}; X^k u = f has no solution")
    if k == 0:
        return f
    return TrigPolynomial({m: c / (2j * math.pi * A.pairing(m)) ** k for m, c in f.coeffs.items()},
                          f.real_valued)


def escape_time(f: TrigPolynomial, g: TrigPolynomial, A: ToralAutomorphism) -> int:
    """Smallest N0 with (A^T)^n(supp f) and supp g disjoint for every n >= N0."""
    if abs(f.mean) > 0 or abs(g.mean) > 0:
        raise NonzeroMean("escape time needs zero-mean f and g")
    targets = set(g.coeffs)
    if not targets:
        return 0
    reach = max(math.hypot(*m) for m in targets)
    lam = A.lam_abs
    last_hit = -1
    for m in f.coeffs:
        # |<(A^T)^n m, v_u>| = lam^n |<m, v_u>| and |<m', v_u>| <= |m'| bound the search
        p = abs(A.pairing(m))
        horizon = max(0, math.ceil(math.log(reach / p) / math.log(lam))) + 2
        cur = m
        for n in range(horizon + 1):
            if cur in targets:
                last_hit = max(last_hit, n)
            cur = A.transpose_power(cur, 1)
    return last_hit + 1


@dataclass(frozen=True)
class ToralDecayReport:
    k: int
    values: tuple[complex, ...]
    bounds: tuple[float, ...]
    identity_residuals: tuple[float, ...]
    violations: tuple[int, ...]

    @property
    def bound_holds(self) -> bool:
        return not self.violations

    @property
    def max_identity_residual(self) -> float:
        return max(self.identity_residuals, default=0.0)


def decay_bound_check(u: TrigPolynomial, k: int, g: TrigPolynomial, A: ToralAutomorphism, N: int,
                      dps: int = 40) -> ToralDecayReport:
    """Check |C(X^k u, g, n)| <= |lam|^{-kn} |u| |X^k g| and the identity
    C(X^k u, g, n) = (-1)^k lam^{-kn} <u o Phi^n, X^k g> for n = 0..N.

    The identity is evaluated at ``dps`` digits, with both sides assembled
    from exact lattice orbits; the bound uses the double-precision series.
    """
    if abs(u.mean) > 0:
        raise NonzeroMean("u must have zero mean")
    f = unstable_derivative(u, A, k)
    series = correlate(f, g, A, N)
    bound0 = u.l2_norm() * unstable_derivative(g, A, k).l2_norm()
    bounds, violations, resid = [], [], []
    with mp.workdps(dps):
        lam = QuadraticValue(A.trace, _sign(A.trace), A.discriminant).mp()
        two_pi_i = 2j * mp.pi
        gh = {m: mp.mpc(c) for m, c in g.coeffs.items()}
        for n in range(N + 1):
            lhs = mp.mpc(0)
            rhs = mp.mpc(0)
            for m, c in u.coeffs.items():
                target = A.transpose_power(m, n)
                if target not in gh:
                    continue
                cu = mp.mpc(c)
                lhs += cu * (two_pi_i * A.pairing_mp(m)) ** k * mp.conj(gh[target])
                xg = (two_pi_i * A.pairing_mp(target)) ** k * gh[target]
                rhs += cu * mp.conj(xg)
            rhs *= (-1) ** k * lam ** (-k * n)
            resid.append(float(abs(lhs - rhs)))
            b = A.lam_abs ** (-k * n) * bound0
            bounds.append(b)
            if abs(series.values[n]) > b * (1 + 1e-12) + 1e-300:
                violations.append(n)
    return ToralDecayReport(k, tuple(series.values), tuple(bounds), tuple(resid), tuple(violations))


def random_pair(seed: int, radius: int = 5) -> tuple[TrigPolynomial, TrigPolynomial]:
    """Seeded zero-mean test pair with support radius <= ``radius``."""
    return (TrigPolynomial.random(2 * seed, radius), TrigPolynomial.random(2 * seed + 1, radius))


def lattice_orbit(m: Lattice, A: ToralAutomorphism, n: int) -> list[Lattice]:
    out = [tuple(m)]
    for _ in range(n):
        out.append(A.transpose_power(out[-1], 1))
    return out


def as_polynomial(obj: Iterable | Mapping) -> TrigPolynomial:
    if isinstance(obj, TrigPolynomial):
        return obj
    return TrigPolynomial.from_json(obj)
