"""Integer symplectic matrices and their high-precision spectra.

The eigenvalues of the cohomology action are computed from the exact
integer characteristic polynomial: companion-matrix eigenvalues give
starting points which are refined by Newton iteration in extended
precision, one square-free factor at a time.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath as mp
import numpy as np
import sympy

from .errors import NotHyperbolic, NotSymplectic, NumericFailure, UsageError

DEFAULT_PRECISION = 50
UNIT_TOL = 1e-8


@dataclass(frozen=True)
class IntMatrix:
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.entries)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise UsageError("matrix must be square and non-empty")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def from_any(cls, m) -> "IntMatrix":
        if isinstance(m, IntMatrix):
            return m
        if isinstance(m, dict):
            mat = cls(m["entries"])
            if "dim" in m and int(m["dim"]) != mat.dim:
                raise UsageError(f"dim={m['dim']} does not match entries ({mat.dim})")
            return mat
        for row in m:
            for v in row:
                if int(v) != v:
                    raise UsageError(f"non-integer matrix entry {v!r}")
        return cls(tuple(tuple(row) for row in m))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @property
    def dim(self) -> int:
        return len(self.entries)

    @property
    def genus(self) -> int:
        return self.dim // 2

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        return IntMatrix(_matmul(self.entries, other.entries))

    def transpose(self) -> "IntMatrix":
        return IntMatrix(tuple(zip(*self.entries)))

    def det(self) -> int:
        return int(sympy.Matrix(self.entries).det(method="bareiss"))

    def is_symplectic(self) -> bool:
        if self.dim % 2:
            return False
        J = standard_form(self.genus)
        return _matmul(_matmul(self.transpose().entries, J), self.entries) == J

    def charpoly(self) -> list[int]:
        """Characteristic polynomial coefficients, leading coefficient first."""
        x = sympy.Symbol("x")
        return [int(c) for c in sympy.Matrix(self.entries).charpoly(x).all_coeffs()]

    def to_json(self) -> dict:
        return {"dim": self.dim, "entries": [list(r) for r in self.entries]}

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=object)


def _matmul(a, b):
    bt = tuple(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a)


def standard_form(g: int):
    """J = [[0, I_g], [-I_g, 0]] as a tuple of rows."""
    n = 2 * g
    rows = []
    for i in range(n):
        row = [0] * n
        if i < g:
            row[i + g] = 1
        else:
            row[i - g] = -1
        rows.append(tuple(row))
    return tuple(rows)


def random_symplectic(g: int, seed: int, n_factors: int) -> IntMatrix:
    """Product of ``n_factors`` random elementary generators of Sp(2g, Z).

    Generators are symplectic transvections [[I, S], [0, I]] and
    [[I, 0], [S, I]] with S an elementary symmetric matrix, and block
    maps diag(U, U^-T) with U an elementary integer shear.
    """
    if g < 1 or n_factors < 0:
        raise UsageError("need g >= 1 and n_factors >= 0")
    rng = random.Random(seed)
    n = 2 * g
    M = IntMatrix.identity(n)
    for _ in range(n_factors):
        kind = rng.choice(("upper", "lower", "block") if g > 1 else ("upper", "lower"))
        sign = rng.choice((1, -1))
        G = [[int(i == j) for j in range(n)] for i in range(n)]
        if kind in ("upper", "lower"):
            i, j = rng.randrange(g), rng.randrange(g)
            r0, c0 = (0, g) if kind == "upper" else (g, 0)
            G[r0 + i][c0 + j] += sign
            if i != j:
                G[r0 + j][c0 + i] += sign
        else:
            i, j = rng.sample(range(g), 2)
            G[i][j] += sign  # U = I + sign E_ij
            G[g + j][g + i] -= sign  # U^-T = I - sign E_ji
        M = M @ IntMatrix(tuple(tuple(r) for r in G))
    return M


@dataclass(frozen=True)
class SpectrumData:
    """Spectrum of a symplectic map ordered by descending modulus.

    ``mu[0]`` is the dilatation ``lam``; ``pairing[i]`` is the index of the
    reciprocal partner of ``mu[i]``.
    """

    genus: int
    lam: mp.mpf
    mu: tuple
    pairing: tuple[int, ...]
    precision: int

    @classmethod
    def from_values(cls, values: Iterable, precision: int = DEFAULT_PRECISION,
                    unit_tol: float = UNIT_TOL) -> "SpectrumData":
        """Build from explicit eigenvalues (strings, fractions, numbers)."""
        with mp.workdps(precision + 10):
            mu = [parse_number(v) for v in values]
            return _assemble(mu, precision, unit_tol, tol_digits=precision - 2)

    def check(self) -> None:
        with mp.workdps(self.precision + 10):
            tol = mp.mpf(10) ** (-self.precision + 2)
            for i, j in enumerate(self.pairing):
                if self.pairing[j] != i:
                    raise NumericFailure("pairing is not an involution")
                if abs(self.mu[i] * self.mu[j] - 1) >= tol:
                    raise NumericFailure(f"pair ({i}, {j}) does not multiply to 1")

    def to_json(self) -> dict:
        digits = self.precision
        with mp.workdps(self.precision + 10):
            return self._to_json(digits)

    def _to_json(self, digits: int) -> dict:
        return {
            "schema": "ruelle.spectrum/1",
            "genus": self.genus,
            "precision": self.precision,
            "lambda": mp.nstr(self.lam, digits),
            "mu": [
                {"re": mp.nstr(mp.re(m), digits), "im": mp.nstr(mp.im(m), digits),
                 "modulus": mp.nstr(abs(m), digits)}
                for m in self.mu
            ],
            "pairing": list(self.pairing),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SpectrumData":
        precision = int(obj.get("precision", DEFAULT_PRECISION))
        return cls.from_values(obj["mu"], precision=precision)


def parse_number(v):
    """Parse a real or complex number given as str/Fraction/number/dict."""
    if isinstance(v, dict):
        return mp.mpc(parse_number(v.get("re", 0)), parse_number(v.get("im", 0)))
    if isinstance(v, (mp.mpf, mp.mpc)):
        return v
    if isinstance(v, complex):
        return mp.mpc(v.real, v.imag)
    if isinstance(v, Fraction):
        return mp.mpf(v.numerator) / v.denominator
    if isinstance(v, str):
        s = v.strip()
        if "/" in s:
            q = Fraction(s)
            return mp.mpf(q.numerator) / q.denominator
        if "j" in s or "i" in s.replace("inf", ""):
            z = complex(s.replace("i", "j"))
            return mp.mpc(z.real, z.imag)
        return mp.mpf(s)
    return mp.mpf(v)


def spectrum(M, precision: int = DEFAULT_PRECISION, unit_tol: float = UNIT_TOL) -> SpectrumData:
    """All eigenvalues of the symplectic integer matrix ``M``.

    Raises NotSymplectic if M^T J M != J, NotHyperbolic if an eigenvalue
    lies on the unit circle or the top eigenvalue is not a simple positive
    real dominating all others.
    """
    M = IntMatrix.from_any(M)
    if not M.is_symplectic():
        raise NotSymplectic("M^T J M != J")
    coeffs = M.charpoly()
    if coeffs != coeffs[::-1]:
        raise NumericFailure("characteristic polynomial of a symplectic matrix must be palindromic")
    x = sympy.Symbol("x")
    _, factors = sympy.sqf_list(sympy.Poly(coeffs, x))
    with mp.workdps(precision + 10):
        roots = []
        for factor, mult in factors:
            fc = [int(c) for c in factor.all_coeffs()]
            for r in refined_roots(fc, precision):
                roots.extend([r] * mult)
        return _assemble(roots, precision, unit_tol, tol_digits=precision - 2)


def refined_roots(coeffs: Sequence[int], precision: int) -> list:
    """Roots of a square-free integer polynomial to ``precision`` digits."""
    deg = len(coeffs) - 1
    if deg < 1:
        return []
    with mp.workdps(precision + 20):
        mcoeffs = [mp.mpf(c) for c in coeffs]
        if deg == 1:
            return [mp.mpc(-mcoeffs[1] / mcoeffs[0])]
        guesses = np.roots(np.array(coeffs, dtype=float))
        eps = mp.mpf(10) ** (-(precision + 15))
        roots = []
        for z0 in guesses:
            z = mp.mpc(complex(z0))
            for _ in range(200):
                p, dp = mp.polyval(mcoeffs, z, derivative=True)
                if dp == 0:
                    break
                dz = p / dp
                z -= dz
                if abs(dz) <= eps * max(1, abs(z)):
                    break
            roots.append(z)
        sep = mp.mpf(10) ** (-(precision // 2))
        distinct = all(abs(roots[i] - roots[j]) > sep
                       for i in range(deg) for j in range(i + 1, deg))
        if not distinct:
            roots = [mp.mpc(r) for r in mp.polyroots(mcoeffs, maxsteps=500, extraprec=4 * precision)]
        return roots


def _canonicalize(roots: list, precision: int) -> list:
    """Snap near-real roots onto the axis and make conjugates exact."""
    tiny = mp.mpf(10) ** (-(precision + 5))
    out = []
    for r in roots:
        r = mp.mpc(r)
        if abs(mp.im(r)) <= tiny * max(1, abs(r)):
            r = mp.mpc(mp.re(r), 0)
        out.append(r)
    upper = [r for r in out if mp.im(r) > 0]
    lower = [r for r in out if mp.im(r) < 0]
    real = [r for r in out if mp.im(r) == 0]
    if len(upper) != len(lower):
        raise NumericFailure("complex roots of a real polynomial must come in conjugate pairs")
    return real + upper + [mp.conj(r) for r in upper]


def _sort_key(z, precision: int):
    scale = mp.mpf(10) ** (precision - 8)
    return (-int(mp.nint(abs(z) * scale)), -int(mp.nint(mp.re(z) * scale)),
            -int(mp.nint(mp.im(z) * scale)))


def _assemble(roots: list, precision: int, unit_tol: float, tol_digits: int) -> SpectrumData:
    n = len(roots)
    if n < 2 or n % 2:
        raise UsageError("spectrum must have an even number 2g >= 2 of values")
    mu = sorted(_canonicalize(roots, precision), key=lambda z: _sort_key(z, precision))
    for z in mu:
        if abs(mp.log(abs(z))) < unit_tol:
            raise NotHyperbolic(f"eigenvalue {mp.nstr(z, 12)} on the unit circle")
    top = mu[0]
    if mp.im(top) != 0 or mp.re(top) <= 0:
        raise NotHyperbolic(f"top eigenvalue {mp.nstr(top, 12)} is not a positive real")
    if mp.log(abs(top)) - mp.log(abs(mu[1])) < unit_tol:
        raise NotHyperbolic("top eigenvalue does not strictly dominate |mu_2|")
    pairing = _pair_reciprocals(mu)
    tol = mp.mpf(10) ** (-tol_digits)
    for i, j in enumerate(pairing):
        if abs(mu[i] * mu[j] - 1) >= tol:
            raise NumericFailure(f"no reciprocal partner for mu_{i + 1} = {mp.nstr(mu[i], 12)}")
    data = SpectrumData(genus=n // 2, lam=mp.re(top), mu=tuple(mu), pairing=tuple(pairing),
                        precision=precision)
    return data


def _pair_reciprocals(mu: list) -> list[int]:
    """Greedy nearest-reciprocal matching on |mu_i mu_j - 1|."""
    n = len(mu)
    cands = []
    for i in range(n):
        for j in range(i + 1, n):
            d = abs(mu[i] * mu[j] - 1)
            conj_pair = 0 if mp.almosteq(mu[i], mp.conj(mu[j])) else 1
            cands.append((d, conj_pair, i, j))
    cands.sort(key=lambda c: (c[0], c[1], c[2], c[3]))
    pairing = [-1] * n
    for d, _, i, j in cands:
        if pairing[i] < 0 and pairing[j] < 0:
            pairing[i], pairing[j] = j, i
    return pairing


def charpoly_is_palindromic(M) -> bool:
    c = IntMatrix.from_any(M).charpoly()
    return c == c[::-1]
