"""Line model of an irreducible Heisenberg representation.

In the model the unstable generator acts as ``d/dx`` and one step of the
automorphism acts as ``f(x) -> u lambda^{1/2} f(lambda x)``.  Invariant
distributions of the generator are built from a family ``chi_b = psi^(b)``
of derivatives of an even normalized bump ``psi``:

* ``D^(0)(f) = int f``;
* ``P^(0) f = f - D^(0)(f) chi_0`` and
  ``P^(j+1) f = P^(j) f - D^(j+1)(P^(j) f) chi_{j+1}``;
* ``D^(k+1)(f) = int_R J_{k+1}[P^(k) f]`` with ``J_a`` the a-fold
  antiderivative from ``-inf``.

Everything here is computed by quadrature on exact analytic presets.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NonzeroMean, UsageError
from .fit import CorrelationSeries, fit_rates
from .functions import Combination, RealTestFunction, as_combination, derivative_at
from .quadrature import QuadratureSpec, QuadResult, antiderivative, integrate, iterated_total

DEFAULT_SPEC = QuadratureSpec(atol=1e-10)
NORMALIZER_SPEC = QuadratureSpec(atol=1e-15)
INNER_SPEC = QuadratureSpec(atol=0.0, rtol=1e-13)
DEFAULT_LAMBDAS = (1.5, 2.0, (3 + math.sqrt(5)) / 2)
DEFAULT_PHASES = (1.0 + 0j, cmath.exp(1j * math.pi / 4))


@dataclass(frozen=True)
class RepParams:
    """Labels of the irreducible component: central character z, index i, phase u."""

    z: int = 1
    i: int = 1
    u: complex = 1.0

    def __post_init__(self):
        if self.z == 0 or not 1 <= self.i <= abs(self.z):
            raise UsageError("need z != 0 and 1 <= i <= |z|")
        if abs(abs(self.u) - 1) > 1e-12:
            raise UsageError("phase u must lie on the unit circle")


@dataclass(frozen=True)
class ChiFamily:
    psi: RealTestFunction
    B: int
    normalizer: float

    def chi(self, b: int) -> RealTestFunction:
        if not 0 <= b <= self.B:
            raise UsageError(f"chi index {b} outside 0..{self.B}")
        return self.psi.derivative(b)

    @property
    def members(self) -> tuple[RealTestFunction, ...]:
        return tuple(self.chi(b) for b in range(self.B + 1))

    @property
    def identifier(self) -> str:
        center, radius = self.psi.params
        return f"bump(radius={radius:g})/B={self.B}"

    def biorthogonality(self, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
        """M[a, b] = int_R J_a[chi_b] for a <= b (NaN below the diagonal)."""
        M = np.full((self.B + 1, self.B + 1), np.nan)
        for b in range(self.B + 1):
            for a in range(b + 1):
                M[a, b] = iterated_integral(self.chi(b), a, spec).real
        return M

    def moments(self, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
        """M[m, b] = int x^m chi_b dx for m <= b."""
        M = np.full((self.B + 1, self.B + 1), np.nan)
        for b in range(self.B + 1):
            for m in range(b + 1):
                M[m, b] = moment(self.chi(b), m, spec).real
        return M


def build_chi_family(B: int, radius: float = 1.0, center: float = 0.0,
                     spec: QuadratureSpec = NORMALIZER_SPEC) -> ChiFamily:
    """chi_b = psi^(b), psi = c exp(-1/(1 - (x/r)^2)) normalized to unit integral."""
    if B < 0:
        raise UsageError("B must be >= 0")
    if center != 0.0:
        raise UsageError("the base bump must be even (center 0)")
    base = RealTestFunction.bump(0.0, radius)
    total = integrate(base, base.breakpoints(), spec).value.real
    c = 1.0 / total
    return ChiFamily(base.times(c), B, c)


# ---------------------------------------------------------------------------
# quadrature on presets


def _integrand(f):
    f = as_combination(f)
    return f, f.breakpoints()


def _product(f, g):
    """Integrand x -> f(x) conj(g(x)) with breakpoints on the common support."""
    f, g = as_combination(f), as_combination(g)
    lo = max(f.support()[0], g.support()[0])
    hi = min(f.support()[1], g.support()[1])
    if not lo < hi:
        return None, []
    gc = g.conj()
    pts = [p for p in f.breakpoints() + g.breakpoints() if lo < p < hi]
    return (lambda x: f(x) * gc(x)), sorted({lo, hi, *pts})


def inner_result(f, g, spec: QuadratureSpec = INNER_SPEC) -> QuadResult:
    """<f, g> = int f conj(g) dx."""
    func, bp = _product(f, g)
    if func is None:
        return QuadResult(0j, 0.0, 0)
    return integrate(func, bp, spec)


def inner(f, g, spec: QuadratureSpec = INNER_SPEC) -> complex:
    return inner_result(f, g, spec).value


def l2_norm(f, spec: QuadratureSpec = INNER_SPEC) -> float:
    return math.sqrt(max(inner(f, f, spec).real, 0.0))


def moment(f, m: int, spec: QuadratureSpec = DEFAULT_SPEC) -> complex:
    """int x^m f(x) dx."""
    f, bp = _integrand(f)
    return integrate(lambda x: f(x) * x ** m, bp, spec).value


def iterated_integral_result(f, a: int, spec: QuadratureSpec = DEFAULT_SPEC,
                             mass_tol: float | None = None) -> QuadResult:
    f, bp = _integrand(f)
    if f.is_zero():
        return QuadResult(0j, 0.0, 0)
    return iterated_total(f, bp, a, spec, mass_tol)


def iterated_integral(f, a: int, spec: QuadratureSpec = DEFAULT_SPEC,
                      mass_tol: float | None = None) -> complex:
    """int_R J_a[f]; raises DivergentIntegral when a total mass J_1..J_a(+inf) is nonzero."""
    return iterated_integral_result(f, a, spec, mass_tol).value


@dataclass(frozen=True)
class GreenSolution:
    """u = G f with u(x) = int_{-inf}^x f, the solution of u' = f decaying at -inf."""

    f: Combination
    left: object
    mean: complex
    spec: QuadratureSpec

    def __call__(self, x) -> np.ndarray:
        return self.left(x)

    def right(self, x) -> np.ndarray:
        """The other one-sided formula, -int_x^{+inf} f, by separate quadrature."""
        lo, hi = self.f.support()
        out = []
        for x0 in np.atleast_1d(np.asarray(x, dtype=float)):
            if x0 >= hi:
                out.append(0j)
                continue
            a = max(x0, lo)
            pts = [a, hi] + [p for p in self.f.breakpoints() if a < p < hi]
            out.append(-integrate(self.f, pts, self.spec).value)
        return np.array(out, dtype=complex)

    def two_sided_gap(self, x) -> float:
        return float(np.max(np.abs(self(x) - self.right(x))))


def green_apply(f, spec: QuadratureSpec = DEFAULT_SPEC, mean_tol: float | None = None) -> GreenSolution:
    f = as_combination(f)
    left, res = antiderivative(f, f.breakpoints(), spec)
    tol = mean_tol if mean_tol is not None else max(1e-8 * max(res.l1, 1.0), 100 * res.error)
    if abs(res.value) > tol:
        raise NonzeroMean(f"int f = {res.value:.6g} is not zero; the Green operator is undefined")
    return GreenSolution(f, left, res.value, spec)


# ---------------------------------------------------------------------------
# invariant distributions


def projection_chain(f, k: int, chi: ChiFamily,
                     spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[Combination, list[complex]]:
    """Return (P^(k) f, [D^(0)(f), D^(1)(P^(0) f), ..., D^(k)(P^(k-1) f)])."""
    if not 0 <= k <= chi.B:
        raise UsageError(f"projection order {k} outside 0..{chi.B}")
    residual = as_combination(f)
    coeffs = []
    for j in range(k + 1):
        d = iterated_integral(residual, j, spec)
        coeffs.append(d)
        residual = residual - d * chi.chi(j)
    return residual, coeffs


def projector(f, j: int, chi: ChiFamily, spec: QuadratureSpec = DEFAULT_SPEC) -> Combination:
    return projection_chain(f, j, chi, spec)[0]


def Dk(f, k: int, chi: ChiFamily, spec: QuadratureSpec = DEFAULT_SPEC) -> complex:
    """The k-th iterated invariant distribution D^(k)(f)."""
    if k < 0 or k > chi.B:
        raise UsageError(f"k must lie in 0..{chi.B}")
    return projection_chain(f, k, chi, spec)[1][k]


def Dk_all(f, k: int, chi: ChiFamily, spec: QuadratureSpec = DEFAULT_SPEC) -> list[complex]:
    """[D^(0)(f), ..., D^(k)(f)] from one projection chain."""
    return projection_chain(f, k, chi, spec)[1]


def pullback(f, lam: float, u: complex = 1.0, n: int = 1) -> Combination:
    """x -> u^n lam^{n/2} f(lam^n x)."""
    if n < 0:
        raise UsageError("n must be >= 0")
    if not lam > 1:
        raise UsageError("lambda must be > 1")
    f = as_combination(f)
    if n == 0:
        return f
    return f.scaled(lam ** n, complex(u) ** n * lam ** (n / 2))


# ---------------------------------------------------------------------------
# coefficients of the triangular eigen-relations


def coefficient_integrand(k: int, j: int, lam: float, chi: ChiFamily) -> Combination:
    """lam^{j+1} chi_j(lam x) - chi_j(x), whose k-fold iterated integral is c_{k,j}."""
    cj = chi.chi(j)
    return cj.scaled(lam, lam ** (j + 1)) - cj


def coefficient(k: int, j: int, lam: float, chi: ChiFamily,
                spec: QuadratureSpec = DEFAULT_SPEC) -> complex:
    """c_{k,j}(lam) = int_R J_k[lam^{j+1} chi_j(lam .) - chi_j].

    The difference is formed before any integration so that the divergent
    tails of the individual terms cancel exactly.  For k <= 2 this covers
    every coefficient; for larger k the integral converges only when the
    first k moments of the difference vanish and ``DivergentIntegral`` is
    raised otherwise.
    """
    if not 0 <= j < k:
        raise UsageError("need 0 <= j < k")
    if j > chi.B:
        raise UsageError(f"chi family too short for j = {j}")
    return iterated_integral(coefficient_integrand(k, j, lam, chi), k, spec)


@dataclass(frozen=True)
class CoefficientTable:
    lam: float
    chi_id: str
    values: dict
    stability: dict  # |value(spec) - value(tightened spec)|

    def __getitem__(self, key: tuple[int, int]) -> complex:
        return self.values[key]

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "chi": self.chi_id,
            "entries": [
                {"k": k, "j": j, "re": v.real, "im": v.imag, "stability": self.stability[(k, j)]}
                for (k, j), v in sorted(self.values.items())
            ],
        }


def coefficient_table(k_max: int, lam: float, chi: ChiFamily,
                      spec: QuadratureSpec = DEFAULT_SPEC, refine: float = 0.01) -> CoefficientTable:
    """All c_{k,j}(lam), 0 <= j < k <= k_max, at two quadrature refinement levels."""
    values, stability = {}, {}
    fine = spec.tightened(refine)
    for k in range(1, k_max + 1):
        for j in range(k):
            v = coefficient(k, j, lam, chi, spec)
            values[(k, j)] = v
            stability[(k, j)] = abs(v - coefficient(k, j, lam, chi, fine))
    return CoefficientTable(lam, chi.identifier, values, stability)


@dataclass(frozen=True)
class EigenrelationReport:
    k: int
    lam: float
    u: complex
    residuals: tuple[float, ...]
    lhs: tuple[complex, ...]
    rhs: tuple[complex, ...]

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0


def verify_eigenrelation(k: int, lam: float, u: complex, tests: Sequence, chi: ChiFamily,
                         spec: QuadratureSpec = DEFAULT_SPEC,
                         table: CoefficientTable | None = None) -> EigenrelationReport:
    """Residuals of D^(k)(f o Phi) = u lam^{-k-1/2} D^(k) f + sum_j c_{k,j} u lam^{-j-1/2} D^(j) f."""
    if k < 0 or k > chi.B:
        raise UsageError(f"k must lie in 0..{chi.B}")
    coeffs = {}
    for j in range(k):
        coeffs[j] = table[(k, j)] if table is not None and (k, j) in table.values \
            else coefficient(k, j, lam, chi, spec)
    residuals, lhs_all, rhs_all = [], [], []
    for f in tests:
        d_f = Dk_all(f, k, chi, spec)
        lhs = Dk(pullback(f, lam, u, 1), k, chi, spec)
        rhs = u * lam ** (-k - 0.5) * d_f[k]
        rhs += sum(coeffs[j] * u * lam ** (-j - 0.5) * d_f[j] for j in range(k))
        residuals.append(abs(lhs - rhs))
        lhs_all.append(lhs)
        rhs_all.append(rhs)
    return EigenrelationReport(k, lam, complex(u), tuple(residuals), tuple(lhs_all), tuple(rhs_all))


# ---------------------------------------------------------------------------
# correlations


def correlation_series(f, g, lam: float, u: complex = 1.0, N: int = 25,
                       spec: QuadratureSpec = INNER_SPEC) -> CorrelationSeries:
    """C(n) = <pullback(f, lam, u, n), g> for n = 0..N."""
    if N < 1:
        raise UsageError("N must be >= 1")
    vals, errs = [], []
    for n in range(N + 1):
        res = inner_result(pullback(f, lam, u, n), g, spec)
        vals.append(res.value)
        errs.append(res.error)
    meta = {"system": "heisenberg", "lambda": repr(float(lam)), "u": repr(complex(u))}
    return CorrelationSeries(tuple(range(N + 1)), np.array(vals), np.array(errs), (False,) * (N + 1), meta)


@dataclass(frozen=True)
class MomentExpansion:
    """C(n) ~ u^n sum_k a_k lam^{-n(k+1/2)}."""

    lam: float
    u: complex
    coefficients: tuple[complex, ...]

    @property
    def rates(self) -> tuple[float, ...]:
        return tuple(self.lam ** (-(k + 0.5)) for k in range(len(self.coefficients)))

    def predict(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        total = sum(a * self.lam ** (-n * (k + 0.5)) for k, a in enumerate(self.coefficients))
        return self.u ** n * total

    def leading_order(self, tol: float = 1e-10) -> int | None:
        for k, a in enumerate(self.coefficients):
            if abs(a) > tol:
                return k
        return None


def moment_oracle(f, g, lam: float, u: complex = 1.0, K: int = 3,
                  spec: QuadratureSpec = QuadratureSpec(atol=1e-14)) -> MomentExpansion:
    """a_k = (int f(y) y^k dy) conj(g^(k)(0)) / k!."""
    coeffs = []
    for k in range(K + 1):
        m = moment(f, k, spec)
        coeffs.append(m * derivative_at(g, k, 0.0).conjugate() / math.factorial(k))
    return MomentExpansion(lam, complex(u), tuple(coeffs))


@dataclass(frozen=True)
class DecayReport:
    k: int
    ratios: tuple[float, ...]  # |C(n)| / bound(n)
    identity_residuals: tuple[float, ...]
    bound_holds: bool

    @property
    def max_ratio(self) -> float:
        return max(self.ratios)

    @property
    def max_identity_residual(self) -> float:
        return max(self.identity_residuals)


def coboundary_decay_check(u_fn, k: int, g, lam: float, u: complex = 1.0, N: int = 20,
                           spec: QuadratureSpec = INNER_SPEC) -> DecayReport:
    """For f = u_fn^(k): |C(f, g, n)| <= lam^{-kn} |u_fn| |g^(k)| and
    C(f, g, n) = (-1)^k lam^{-kn} <pullback(u_fn, n), g^(k)>."""
    if k < 0:
        raise UsageError("k must be >= 0")
    u_fn = as_combination(u_fn)
    g = as_combination(g)
    f = u_fn.derivative(k)
    gk = g.derivative(k)
    scale = l2_norm(u_fn, spec) * l2_norm(gk, spec)
    ratios, resid = [], []
    holds = True
    for n in range(N + 1):
        c = inner_result(pullback(f, lam, u, n), g, spec)
        other = inner_result(pullback(u_fn, lam, u, n), gk, spec)
        bound = lam ** (-k * n) * scale
        ratios.append(abs(c.value) / bound if bound > 0 else math.inf)
        if abs(c.value) > bound + c.error:
            holds = False
        resid.append(abs(c.value - (-1) ** k * lam ** (-k * n) * other.value))
    return DecayReport(k, tuple(ratios), tuple(resid), holds)


@dataclass(frozen=True)
class DualityReport:
    fitted: tuple[complex, ...]  # a_0, a_1, ... with known rates lam^{-(k+1/2)}
    oracle: tuple[complex, ...]
    leading_order: int | None
    leading_rate: float | None
    fitted_leading_rate: float | None
    tol: float

    @property
    def a0(self) -> complex:
        return self.fitted[0]


def fit_known_rates(series: CorrelationSeries, lam: float, u: complex, depth: int,
                    n_lo: int = 3, extra: int = 4) -> tuple[complex, ...]:
    """Least squares for a_k in C(n) = u^n sum_k a_k lam^{-n(k+1/2)}.

    ``depth + extra`` terms are fitted so that the first ``depth``
    coefficients are not biased by the truncated tail; only those are returned.
    """
    n = np.array(series.n, dtype=float)
    sel = (n >= n_lo) & (np.abs(series.values) > 0)
    n, vals, errs = n[sel], series.values[sel], series.errors[sel]
    terms = min(depth + extra, len(n) - 1)
    if terms < depth:
        raise UsageError("not enough points for the requested depth")
    # y(n) = C(n) u^{-n} lam^{n/2} = sum a_k x^k with x = lam^{-n}
    y = vals * complex(u) ** (-n) * lam ** (n / 2)
    sy = errs * lam ** (n / 2)
    x = lam ** (-n)
    A = np.array([x ** k for k in range(terms)]).T
    w = 1.0 / np.maximum(sy, 1e-15 * np.max(np.abs(y)))
    Aw = A * w[:, None]
    norms = np.linalg.norm(Aw, axis=0)
    coef, *_ = np.linalg.lstsq(Aw / norms, y * w, rcond=None)
    return tuple(complex(c) for c in (coef / norms)[:depth])


def duality_check(f, g, lam: float, u: complex = 1.0, N: int = 25, depth: int = 3,
                  tol: float = 1e-6, spec: QuadratureSpec = INNER_SPEC) -> DualityReport:
    """Fit the coefficients of lam^{-n(k+1/2)} in C(f, g, n) and compare with moments."""
    series = correlation_series(f, g, lam, u, N, spec)
    fitted = fit_known_rates(series, lam, u, depth)
    oracle = moment_oracle(f, g, lam, u, depth - 1).coefficients
    lead = next((k for k, a in enumerate(fitted) if abs(a) > tol), None)
    try:
        fitted_rate = fit_rates(series, 1).rates[0]
    except Exception:
        fitted_rate = None
    rate = lam ** (-(lead + 0.5)) if lead is not None else None
    return DualityReport(fitted, oracle, lead, rate, fitted_rate, tol)


def gaussian_closed_form(lam: float, n) -> np.ndarray:
    """<pullback(e^{-x^2}, lam, 1, n), e^{-x^2}> = lam^{n/2} sqrt(pi / (1 + lam^{2n}))."""
    n = np.asarray(n, dtype=float)
    return lam ** (n / 2) * np.sqrt(np.pi / (1 + lam ** (2 * n)))


def eigenrelation_presets(chi: ChiFamily) -> list[Combination]:
    """Five smooth presets used by the verification suite."""
    return [
        as_combination(RealTestFunction.gaussian()),
        as_combination(RealTestFunction.gauss_poly([1.0, 1.0])),
        as_combination(RealTestFunction.gauss_poly([0.5, -1.0, 0.0, 0.25])),
        as_combination(RealTestFunction.bump(0.3, 0.8)),
        as_combination(chi.chi(1)),
    ]

