"""Exponential(-polynomial) rate extraction from correlation series.

The model is ``C(n) ~ sum_t P_t(n) rho_t^n e^{i theta n}`` with real
``0 < rho_t``, polynomials ``P_t`` of degree at most 2 and one global phase
``theta`` (estimated from the ratio ``C(n+1)/C(n)``).  Terms are found by
peeling: each stage fits the dominant remaining term by least squares on
``log|r(n)|`` and refines it by variable projection; after every stage all
rates are refined jointly, and the polynomial degrees are re-detected by
nested model comparison.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import InsufficientDecades, UsageError, ZeroSeries

ZERO_LEVEL = 1e-14
SNR = 100.0
NOISE_REL = 1e-10
MAX_DEGREE = 2
DEGREE_GAIN = 1e-2
DEGREE_MISFIT = 1e-6  # RMS relative misfit below which no polynomial factor is added
SEPARATION = 0.9
LOG_RATE_BOUNDS = (-80.0, 3.0)


@dataclass(frozen=True)
class CorrelationSeries:
    """Samples C(n), n = 0, 1, ..., with absolute error estimates."""

    n: tuple[int, ...]
    values: np.ndarray
    errors: np.ndarray
    exact: tuple[bool, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = tuple(int(k) for k in self.n)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex))
        object.__setattr__(self, "errors", np.asarray(self.errors, dtype=float))
        object.__setattr__(self, "exact", tuple(bool(e) for e in self.exact))
        if not n or n[0] != 0 or any(b <= a for a, b in zip(n, n[1:])):
            raise UsageError("series indices must start at 0 and increase strictly")
        if not len(self.values) == len(self.errors) == len(self.exact) == len(n):
            raise UsageError("series fields have different lengths")

    @classmethod
    def from_values(cls, values: Sequence[complex], errors=None, exact: bool = False,
                    meta: dict | None = None) -> "CorrelationSeries":
        values = np.asarray(values, dtype=complex)
        errors = np.zeros(len(values)) if errors is None else np.asarray(errors, dtype=float)
        return cls(tuple(range(len(values))), values, errors, (exact,) * len(values), dict(meta or {}))

    def __len__(self) -> int:
        return len(self.n)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# schema=ruelle.series/1\n")
        for key in sorted(self.meta):
            buf.write(f"# {key}={self.meta[key]}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "re", "im", "abs", "exact", "error"])
        for k, z, err, ex in zip(self.n, self.values, self.errors, self.exact):
            w.writerow([k, f"{z.real:.17g}", f"{z.imag:.17g}", f"{abs(z):.17g}", int(ex), f"{err:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CorrelationSeries":
        meta = {}
        rows = []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key != "schema":
                    meta[key] = val
            elif line.strip():
                rows.append(line)
        reader = csv.DictReader(rows)
        n, vals, errs, exact = [], [], [], []
        if reader.fieldnames is None or not {"n", "re"} <= set(reader.fieldnames):
            raise UsageError("series CSV needs at least the columns n and re")
        try:
            for row in reader:
                n.append(int(row["n"]))
                vals.append(complex(float(row["re"]), float(row.get("im") or 0.0)))
                errs.append(float(row.get("error") or 0.0))
                exact.append(bool(int(row.get("exact") or 0)))
        except ValueError as exc:
            raise UsageError(f"malformed series CSV row: {exc}") from exc
        if not n:
            raise UsageError("series CSV has no rows")
        return cls(tuple(n), np.array(vals), np.array(errs), tuple(exact), meta)


@dataclass(frozen=True)
class FitTerm:
    rate: float  # modulus rho
    phase: float  # theta, radians
    degree: int
    coefficients: tuple[complex, ...]  # P(n) = sum c_i n^i
    residual_norm: float  # after subtracting terms up to and including this one

    @property
    def coefficient(self) -> complex:
        return self.coefficients[0]

    @property
    def value(self) -> complex:
        return self.rate * complex(math.cos(self.phase), math.sin(self.phase))

    def evaluate(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        poly = sum(c * n ** i for i, c in enumerate(self.coefficients))
        return poly * self.value ** n

    def to_json(self) -> dict:
        return {
            "rate": self.rate,
            "phase": self.phase,
            "degree": self.degree,
            "coefficients": [[c.real, c.imag] for c in self.coefficients],
            "residual_norm": self.residual_norm,
        }


@dataclass(frozen=True)
class FitReport:
    terms: tuple[FitTerm, ...]
    window: tuple[int, int]
    used_points: int
    initial_norm: float
    meta: dict = field(default_factory=dict)

    @property
    def rates(self) -> list[float]:
        return [t.rate for t in self.terms]

    def to_json(self) -> dict:
        return {
            "schema": "ruelle.fit/1",
            "window": list(self.window),
            "used_points": self.used_points,
            "initial_norm": self.initial_norm,
            "terms": [t.to_json() for t in self.terms],
            "meta": dict(self.meta),
        }

    def summary(self) -> str:
        lines = [f"window {self.window[0]}..{self.window[1]}, {self.used_points} points"]
        lines.append(f"{'term':>4} {'rate':>22} {'phase':>10} {'deg':>3} {'|coef|':>14} {'residual':>12}")
        for k, t in enumerate(self.terms, 1):
            lines.append(
                f"{k:>4} {t.rate:>22.15g} {t.phase:>10.5f} {t.degree:>3} "
                f"{abs(t.coefficient):>14.8g} {t.residual_norm:>12.4g}"
            )
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# least-squares building blocks
#
# A parameter vector holds the log-moduli of the terms followed by the shared
# phase theta; the polynomial coefficients are solved linearly for each trial
# vector (variable projection) with relative weights 1 / sigma.


def _design(n: np.ndarray, log_rates: Sequence[float], theta: float,
            degrees: Sequence[int]) -> np.ndarray:
    cols = []
    for lr, d in zip(log_rates, degrees):
        base = np.exp(n * complex(lr, theta))
        for i in range(d + 1):
            cols.append(base * n ** i)
    return np.array(cols).T


def _solve(n, y, sigma, log_rates, theta, degrees):
    A = _design(n, log_rates, theta, degrees) / sigma[:, None]
    b = y / sigma
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    coef, *_ = np.linalg.lstsq(A / norms, b, rcond=None)
    coef = coef / norms
    return coef, b - A @ coef


def _rss(n, y, sigma, log_rates, theta, degrees) -> float:
    if not len(log_rates):
        r = y / sigma
    else:
        _, r = _solve(n, y, sigma, log_rates, theta, degrees)
    return float(np.vdot(r, r).real)


def _split(coef: np.ndarray, degrees: Sequence[int]) -> list[tuple[complex, ...]]:
    out, k = [], 0
    for d in degrees:
        out.append(tuple(complex(c) for c in coef[k:k + d + 1]))
        k += d + 1
    return out


def _model(n, y, sigma, log_rates, theta, degrees) -> np.ndarray:
    if not log_rates:
        return np.zeros_like(y)
    coef, _ = _solve(n, y, sigma, log_rates, theta, degrees)
    return _design(n, log_rates, theta, degrees) @ coef


def _joint(n, y, sigma, log_rates, theta, degrees) -> tuple[list[float], float, float]:
    """Refine all log-moduli and the shared phase together."""
    k = len(log_rates)

    def resid(p):
        _, r = _solve(n, y, sigma, p[:k], p[k], degrees)
        return np.concatenate([r.real, r.imag])

    lo = [LOG_RATE_BOUNDS[0]] * k + [theta - 1.0]
    hi = [LOG_RATE_BOUNDS[1]] * k + [theta + 1.0]
    x0 = np.clip(np.append(np.asarray(log_rates, float), theta), np.add(lo, 1e-9), np.subtract(hi, 1e-9))
    res = least_squares(resid, x0, method="trf", bounds=(lo, hi),
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    return [float(v) for v in res.x[:k]], float(res.x[k]), float(np.sum(res.fun ** 2))


def _pick_degree(rss: Sequence[float], floor: float) -> int:
    d = 0
    for cand in range(1, len(rss)):
        if rss[d] <= floor:
            break
        if rss[cand] < DEGREE_GAIN * rss[d]:
            d = cand
    return d


def _redetect(n, y, sigma, log_rates, theta, degrees, max_degree, floor_rss):
    """Greedy degree increments, accepted only on a large drop in the residual."""
    degrees = list(degrees)
    best = _rss(n, y, sigma, log_rates, theta, degrees)
    floor_rss = max(floor_rss, len(n) * DEGREE_MISFIT ** 2)
    improved = True
    while improved and best > floor_rss:
        improved = False
        for t in range(len(degrees)):
            if degrees[t] >= max_degree:
                continue
            trial = degrees.copy()
            trial[t] += 1
            if sum(trial) + len(trial) + 2 > len(n):
                continue
            p, th, val = _joint(n, y, sigma, log_rates, theta, trial)
            if val < DEGREE_GAIN * best:
                degrees, log_rates, theta, best, improved = trial, p, th, val, True
                break
    return log_rates, theta, degrees


def _prune(n, y, sigma, log_rates, theta, degrees):
    """Lower polynomial degrees while the fit does not get much worse."""
    degrees = list(degrees)
    best = _rss(n, y, sigma, log_rates, theta, degrees)
    changed = True
    while changed:
        changed = False
        for t in range(len(degrees)):
            if degrees[t] == 0:
                continue
            trial = degrees.copy()
            trial[t] -= 1
            p, th, val = _joint(n, y, sigma, log_rates, theta, trial)
            if val <= max(best / DEGREE_GAIN, len(n) * DEGREE_MISFIT ** 2):
                degrees, log_rates, theta, best, changed = trial, p, th, val, True
    return log_rates, theta, degrees


# ---------------------------------------------------------------------------


def _stage_candidates(n, y, errs, sigma, log_rates, theta, degrees, max_degree, floor_rss):
    """Fits with one more term; returns (picked, alternatives) or None when nothing is left."""
    if log_rates and _rss(n, y, sigma, log_rates, theta, degrees) <= floor_rss:
        return None
    r = y - _model(n, y, sigma, log_rates, theta, degrees)
    live = np.abs(r) > np.maximum(NOISE_REL * np.abs(y), SNR * errs)
    if live.sum() < 3:
        return None
    if log_rates:
        # the next term lies below the smallest rate found so far
        top = min(log_rates) + math.log(SEPARATION)
        grid = np.linspace(top - 8.0, top, 161)
    else:
        # dominant term: log-linear fit of log|C(n)| against n
        slope = np.polyfit(n[live], np.log(np.abs(r[live])), 1)[0]
        grid = float(np.clip(slope, -60.0, 2.0)) + np.linspace(-1.5, 1.5, 121)
    rss, cand = [], []
    for d in range(max_degree + 1):
        if sum(degrees) + len(degrees) + d + 3 > len(n):
            break
        vals = [_rss(n, y, sigma, log_rates + [g], theta, degrees + [d]) for g in grid]
        g0 = float(grid[int(np.argmin(vals))])
        cand.append(_joint(n, y, sigma, log_rates + [g0], theta, degrees + [d]))
        rss.append(cand[-1][2])
    if not rss:
        return None
    d = _pick_degree(rss, max(floor_rss, len(n) * DEGREE_MISFIT ** 2))
    out = []
    for k in ([d, 0] if d > 0 else [d]):
        lr, th, _ = cand[k]
        lr, th, deg = _redetect(n, y, sigma, lr, th, degrees + [k], max_degree, floor_rss)
        order = np.argsort(lr)[::-1]
        out.append(([lr[i] for i in order], th, [deg[i] for i in order]))
    return out


def _separated(log_rates) -> bool:
    lr = sorted(log_rates, reverse=True)
    return all(b - a <= math.log(SEPARATION) for a, b in zip(lr, lr[1:]))


def _grow(n, y, errs, sigma, log_rates, theta, degrees, stages, max_degree, floor_rss):
    """Add up to ``stages`` terms.

    When a stage prefers a polynomial factor and further stages remain, the
    plain exponential alternative is grown as well: two nearby rates can
    masquerade as one term with a polynomial factor.  The branch with the
    smaller residual wins; within the misfit threshold the simpler model wins.
    """
    if stages == 0:
        return log_rates, theta, degrees
    options = _stage_candidates(n, y, errs, sigma, log_rates, theta, degrees, max_degree, floor_rss)
    if options is None:
        return log_rates, theta, degrees
    if stages == 1:
        options = options[:1]
    finals = [_grow(n, y, errs, sigma, lr, th, deg, stages - 1, max_degree, floor_rss)
              for lr, th, deg in options]
    if len(finals) == 1:
        return finals[0]
    good = max(floor_rss, len(n) * DEGREE_MISFIT ** 2)

    def score(model):
        lr, th, deg = model
        val = _rss(n, y, sigma, lr, th, deg)
        return (not _separated(lr), max(val, good), sum(deg) + 2 * len(deg))

    return min(finals, key=score)


def default_window(length: int, drop: int = 3, keep: int = 20) -> tuple[int, int]:
    hi = length - 1
    lo = max(drop, hi - keep + 1)
    return lo, hi


def estimate_phase(values: np.ndarray) -> float:
    """Global phase theta from the averaged normalized ratio C(n+1)/C(n)."""
    v = values[np.abs(values) > 0]
    if len(v) < 2:
        return 0.0
    ratios = v[1:] / v[:-1]
    z = np.sum(ratios / np.abs(ratios))
    return float(np.angle(z)) if z != 0 else 0.0


def fit_rates(series: CorrelationSeries, depth: int, window: tuple[int, int] | None = None,
              max_degree: int = MAX_DEGREE) -> FitReport:
    """Peel up to ``depth`` exponential-polynomial terms from ``series``."""
    if depth < 1:
        raise UsageError("depth must be >= 1")
    lo, hi = window if window is not None else default_window(len(series))
    idx = [k for k, m in enumerate(series.n) if lo <= m <= hi]
    if len(idx) < 2 * depth + 2:
        raise UsageError(f"window [{lo}, {hi}] has {len(idx)} points; need >= {2 * depth + 2}")
    n = np.array([series.n[k] for k in idx], dtype=float)
    y = series.values[idx]
    errs = series.errors[idx]
    if np.all(np.abs(y) < ZERO_LEVEL):
        raise ZeroSeries(f"all |C(n)| < {ZERO_LEVEL:g} on window [{lo}, {hi}]")

    keep = (np.abs(y) > SNR * errs) & (np.abs(y) > 0)
    n, y, errs = n[keep], y[keep], errs[keep]
    if len(n) < 3:
        raise ZeroSeries("fewer than three points rise above the noise level")
    theta = estimate_phase(y)
    sigma = np.abs(y) + 10 * errs
    floor_rss = len(n) * NOISE_REL ** 2
    initial = float(np.linalg.norm(y / sigma))

    log_rates, theta, degrees = _grow(n, y, errs, sigma, [], theta, [], depth, max_degree, floor_rss)
    if log_rates:
        log_rates, theta, degrees = _prune(n, y, sigma, log_rates, theta, degrees)
        order = np.argsort(log_rates)[::-1]
        log_rates = [log_rates[k] for k in order]
        degrees = [degrees[k] for k in order]
    if not log_rates:
        raise ZeroSeries("no exponential term could be resolved above the noise level")
    rates = np.exp(log_rates)
    for a, b in zip(rates, rates[1:]):
        if b / a > SEPARATION:
            raise InsufficientDecades(
                f"rates {a:.6g} and {b:.6g} are too close to separate (ratio {b / a:.3f} > {SEPARATION})"
            )
    theta = math.remainder(theta, 2 * math.pi)
    coef, _ = _solve(n, y, sigma, log_rates, theta, degrees)
    terms = []
    partial = np.zeros_like(y)
    for rho, d, p in zip(rates, degrees, _split(coef, degrees)):
        t = FitTerm(float(rho), theta, d, p, 0.0)
        partial = partial + t.evaluate(n)
        terms.append(FitTerm(float(rho), theta, d, p, float(np.linalg.norm((y - partial) / sigma))))
    return FitReport(tuple(terms), (lo, hi), len(n), initial, dict(series.meta))


# ---------------------------------------------------------------------------
# matching and convergence diagnostics


@dataclass(frozen=True)
class Match:
    term_index: int
    rate: float
    entry_index: int | None
    predicted_modulus: float | None
    rel_error: float | None
    provenance: tuple = ()

    @property
    def matched(self) -> bool:
        return self.entry_index is not None


@dataclass(frozen=True)
class MatchReport:
    matches: tuple[Match, ...]
    unexplained: tuple[int, ...]
    unobserved: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "matches": [
                {"term": m.term_index, "rate": m.rate, "entry": m.entry_index,
                 "predicted_modulus": m.predicted_modulus, "rel_error": m.rel_error,
                 "provenance": [list(p) for p in m.provenance],
                 "status": "matched" if m.matched else "unexplained"}
                for m in self.matches
            ],
            "unexplained": list(self.unexplained),
            "unobserved": list(self.unobserved),
        }


def match_resonances(fit: FitReport, predicted, rel_tol: float = 1e-3) -> MatchReport:
    """Pair each fitted rate with the predicted entry of nearest modulus."""
    moduli = [float(e.modulus) for e in predicted.entries]
    matches = []
    used = set()
    for k, t in enumerate(fit.terms):
        best, err = None, math.inf
        for i, m in enumerate(moduli):
            if m == 0:
                continue
            e = abs(t.rate - m) / m
            if e < err:
                best, err = i, e
        if best is not None and err <= rel_tol:
            used.add(best)
            matches.append(Match(k, t.rate, best, moduli[best], err, predicted.entries[best].provenance))
        else:
            matches.append(Match(k, t.rate, None, None, None))
    floor = min(fit.rates) * (1 - rel_tol) if fit.terms else -math.inf
    unobserved = tuple(i for i, m in enumerate(moduli) if i not in used and m >= floor)
    unexplained = tuple(m.term_index for m in matches if not m.matched)
    return MatchReport(tuple(matches), unexplained, unobserved)


def coefficient_convergence(series: CorrelationSeries, rho: float, c: complex,
                            rho_next: float, phase: float = 0.0, n_min: int = 1) -> np.ndarray:
    """K_n = |c^(n) - c| / (rho_next / rho)^n with c^(n) = C(n) / (rho e^{i phase})^n."""
    out = []
    z = rho * complex(math.cos(phase), math.sin(phase))
    for k, v in zip(series.n, series.values):
        if k < n_min:
            continue
        cn = v / z ** k
        out.append(abs(cn - c) / (rho_next / rho) ** k)
    return np.array(out)
