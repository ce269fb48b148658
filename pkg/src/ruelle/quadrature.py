"""Adaptive Simpson quadrature and cumulative (iterated) integration.

The adaptive pass works breadth first on all open intervals at once: every
interval carries five equispaced samples, Simpson's rule on the whole
interval is compared with the composite rule on its two halves, and the
interval is accepted once the difference fits its share of the error
budget.  Accepted intervals report the Richardson-extrapolated (Boole)
value.  The resulting mesh is then reused for cumulative integration:
each layer ``J_{k+1}(x) = int_{-inf}^x J_k`` is evaluated at the mesh nodes
through the quartic interpolant of the previous layer.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DivergentIntegral, QuadratureFailure, UsageError

Integrand = Callable[[np.ndarray], np.ndarray]

NODES = np.linspace(0.0, 1.0, 5)
ROUNDOFF = 2.2e-16


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the adaptive rule.

    The error budget is ``max(atol, rtol * int |f|)``.
    """

    atol: float = 1e-10
    rtol: float = 0.0
    max_intervals: int = 400_000
    initial_pieces: int = 16
    max_refinements: int = 3
    rule: str = "adaptive-simpson"

    def __post_init__(self):
        if self.atol < 0 or self.rtol < 0 or (self.atol == 0 and self.rtol == 0):
            raise UsageError("need a positive absolute or relative tolerance")
        if self.initial_pieces < 1 or self.max_intervals < self.initial_pieces:
            raise UsageError("invalid interval limits")

    def tightened(self, factor: float = 0.1) -> "QuadratureSpec":
        return replace(self, atol=self.atol * factor, rtol=self.rtol * factor)


@dataclass(frozen=True)
class Mesh:
    edges: np.ndarray  # (n + 1,)
    values: np.ndarray  # (n, 5) samples at NODES of each interval

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class QuadResult:
    value: complex
    error: float
    n_intervals: int
    l1: float = 0.0
    masses: tuple = ()


def _boole(v: np.ndarray, h: np.ndarray) -> np.ndarray:
    return h / 90.0 * (7 * v[:, 0] + 32 * v[:, 1] + 12 * v[:, 2] + 32 * v[:, 3] + 7 * v[:, 4])


def _simpson_pair(v: np.ndarray, h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s1 = h / 6.0 * (v[:, 0] + 4 * v[:, 2] + v[:, 4])
    s2 = h / 12.0 * (v[:, 0] + 4 * v[:, 1] + 2 * v[:, 2] + 4 * v[:, 3] + v[:, 4])
    return s1, s2


def _initial_edges(breakpoints: Sequence[float], pieces: int) -> np.ndarray:
    bp = np.unique(np.asarray(breakpoints, dtype=float))
    parts = [np.linspace(a, b, pieces + 1)[:-1] for a, b in zip(bp[:-1], bp[1:])]
    return np.concatenate(parts + [bp[-1:]])


def _sample(func: Integrand, a: np.ndarray, h: np.ndarray) -> np.ndarray:
    x = a[:, None] + h[:, None] * NODES[None, :]
    return np.asarray(func(x.ravel())).reshape(x.shape)


def _adapt(func: Integrand, edges: np.ndarray, eps: float, spec: QuadratureSpec) -> tuple[Mesh, float]:
    length = edges[-1] - edges[0]
    a, b = edges[:-1], edges[1:]
    done_a, done_b, done_v, done_err = [], [], [], []
    total = 0
    min_width = 64 * ROUNDOFF * max(abs(edges[0]), abs(edges[-1]), length)
    while len(a):
        total += len(a)
        if total > spec.max_intervals:
            raise QuadratureFailure(
                f"adaptive quadrature exceeded {spec.max_intervals} intervals (tolerance {eps:.3g})"
            )
        h = b - a
        v = _sample(func, a, h)
        s1, s2 = _simpson_pair(v, h)
        err = np.abs(s2 - s1) / 15.0
        ok = (err <= eps * h / length) | (h <= min_width)
        done_a.append(a[ok])
        done_b.append(b[ok])
        done_v.append(v[ok])
        done_err.append(err[ok])
        mid = 0.5 * (a[~ok] + b[~ok])
        a, b = np.concatenate([a[~ok], mid]), np.concatenate([mid, b[~ok]])
    a = np.concatenate(done_a)
    order = np.argsort(a, kind="stable")
    edges = np.concatenate([a[order], np.concatenate(done_b)[order][-1:]])
    mesh = Mesh(edges, np.concatenate(done_v)[order])
    return mesh, float(np.concatenate(done_err).sum())


def adaptive_mesh(func: Integrand, breakpoints: Sequence[float],
                  spec: QuadratureSpec = QuadratureSpec()) -> tuple[Mesh, QuadResult]:
    """Adapt a mesh to ``func`` on [min(breakpoints), max(breakpoints)]."""
    bp = np.unique(np.asarray(breakpoints, dtype=float))
    if len(bp) < 2:
        empty = Mesh(np.array([0.0, 0.0]), np.zeros((1, 5)))
        return empty, QuadResult(0.0, 0.0, 0)
    edges = _initial_edges(bp, spec.initial_pieces)
    h = np.diff(edges)
    v0 = _sample(func, edges[:-1], h)
    l1 = float(_boole(np.abs(v0), h).sum())
    eps = max(spec.atol, spec.rtol * l1)
    mesh, err = _adapt(func, edges, eps, spec)
    l1 = float(_boole(np.abs(mesh.values), mesh.widths).sum())
    if spec.rtol * l1 < 0.5 * eps and spec.rtol * l1 > spec.atol:
        # the first estimate of int|f| was too coarse; adapt again
        eps = max(spec.atol, spec.rtol * l1)
        mesh, err = _adapt(func, mesh.edges, eps, spec)
    value = _boole(mesh.values, mesh.widths).sum()
    err += 16 * ROUNDOFF * l1
    if err > 2 * eps + 16 * ROUNDOFF * l1:
        raise QuadratureFailure(f"error estimate {err:.3g} exceeds tolerance {eps:.3g}")
    return mesh, QuadResult(complex(value), err, len(mesh), l1)


def integrate(func: Integrand, breakpoints: Sequence[float],
              spec: QuadratureSpec = QuadratureSpec()) -> QuadResult:
    return adaptive_mesh(func, breakpoints, spec)[1]


# ---------------------------------------------------------------------------
# cumulative integration


@lru_cache(maxsize=None)
def _partial_weights(nodes: tuple[float, ...], pieces: tuple[tuple[int, ...], ...]) -> np.ndarray:
    """W[i, k] = int_0^{nodes[i]} l_k(t) dt for piecewise Lagrange bases.

    ``pieces`` lists index groups; each group spans one interpolation
    segment and the running integral is continued across groups.
    """
    t = np.asarray(nodes)
    n = len(t)
    W = np.zeros((n, n))
    start = np.zeros(n)
    for group in pieces:
        g = list(group)
        W[g[1:]] = start
        for k_local, k in enumerate(g):
            y = np.zeros(len(g))
            y[k_local] = 1.0
            coef = np.polynomial.polynomial.polyfit(t[g] - t[g[0]], y, len(g) - 1)
            anti = np.polynomial.polynomial.polyint(coef)
            for i in g[1:]:
                W[i, k] += np.polynomial.polynomial.polyval(t[i] - t[g[0]], anti)
        start = W[g[-1]].copy()
    return W


QUARTIC = _partial_weights(tuple(NODES), ((0, 1, 2, 3, 4),))
SIMPSON_FINE = _partial_weights(tuple(NODES), ((0, 1, 2), (2, 3, 4)))
SIMPSON_COARSE = _partial_weights((0.0, 0.5, 1.0), ((0, 1, 2),))


def _layers(values: np.ndarray, h: np.ndarray, W: np.ndarray, depth: int) -> list[np.ndarray]:
    """Node values of J_1..J_depth on the mesh."""
    out = []
    cur = values
    for _ in range(depth):
        partial = (cur @ W.T) * h[:, None]
        start = np.concatenate([[0.0], np.cumsum(partial[:, -1])[:-1]])
        cur = start[:, None] + partial
        out.append(cur)
    return out


def _cumulative_ends(mesh: Mesh, depth: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-end values of J_1..J_depth, a truncation error estimate per
    layer and a rounding error estimate per layer."""
    h = mesh.widths
    fine = _layers(mesh.values, h, QUARTIC, depth)
    simp = _layers(mesh.values, h, SIMPSON_FINE, depth)
    coarse = _layers(mesh.values[:, ::2], h, SIMPSON_COARSE, depth)
    ends = np.array([layer[-1, -1] for layer in fine])
    s2 = np.array([layer[-1, -1] for layer in simp])
    s1 = np.array([layer[-1, -1] for layer in coarse])
    err = np.maximum(np.abs(s2 - s1) / 15.0, np.abs(ends - s2))
    span = mesh.edges[-1] - mesh.edges[0]
    scale = np.abs(mesh.values).max()
    rounding = []
    for layer in fine:
        # each layer accumulates roundoff of its own magnitude and of the previous layer
        rounding.append(4 * ROUNDOFF * len(mesh) ** 0.5 * max(np.abs(layer).max(), scale * span))
        scale = np.abs(layer).max()
    return ends, err, np.cumsum(rounding)


def _refine(func: Integrand, mesh: Mesh) -> Mesh:
    mid = 0.5 * (mesh.edges[:-1] + mesh.edges[1:])
    edges = np.empty(2 * len(mid) + 1)
    edges[0::2] = mesh.edges
    edges[1::2] = mid
    h = np.diff(edges)
    return Mesh(edges, _sample(func, edges[:-1], h))


def iterated_total(func: Integrand, breakpoints: Sequence[float], a: int,
                   spec: QuadratureSpec = QuadratureSpec(),
                   mass_tol: float | None = None) -> QuadResult:
    """int_R J_a[f] by cumulative quadrature, J_a the a-fold antiderivative from -inf.

    The outer integral converges only when J_1, ..., J_a all vanish to the
    right of the support; otherwise ``DivergentIntegral`` is raised.
    """
    if a < 0:
        raise UsageError("a must be >= 0")
    mesh, base = adaptive_mesh(func, breakpoints, spec)
    if a == 0:
        return base
    eps = max(spec.atol, spec.rtol * base.l1)
    if mass_tol is None:
        mass_tol = max(1e-6 * base.l1, 1e3 * eps)
    for attempt in range(spec.max_refinements + 1):
        ends, trunc, rounding = _cumulative_ends(mesh, a + 1)
        err = trunc + rounding
        if trunc[-1] <= eps or trunc[-1] <= rounding[-1]:
            break
        if attempt == spec.max_refinements or 2 * len(mesh) > spec.max_intervals:
            raise QuadratureFailure(
                f"cumulative quadrature error {err[-1]:.3g} exceeds tolerance {eps:.3g}"
            )
        mesh = _refine(func, mesh)
    masses = ends[:-1]
    bad = [k + 1 for k, m in enumerate(masses) if abs(m) > mass_tol]
    if bad:
        raise DivergentIntegral(
            f"total masses J_{bad} do not vanish (|J_{bad[0]}| = {abs(masses[bad[0] - 1]):.3g}); "
            f"the outer integral diverges"
        )
    return QuadResult(complex(ends[-1]), float(err[-1]), len(mesh), base.l1,
                      tuple(complex(m) for m in masses))


@dataclass(frozen=True)
class Antiderivative:
    """Callable x -> int_{-inf}^x f built from an adapted mesh."""

    mesh: Mesh
    total: complex

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        edges = self.mesh.edges
        h = self.mesh.widths
        starts = np.concatenate([[0.0], np.cumsum(_boole(self.mesh.values, h))])
        idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, len(h) - 1)
        t = np.clip((x - edges[idx]) / h[idx], 0.0, 1.0)
        powers = t[:, None] ** np.arange(1, 6)[None, :]
        weights = powers @ _ANTI_BASIS
        out = starts[idx] + h[idx] * np.einsum("ij,ij->i", weights, self.mesh.values[idx])
        out = out.astype(complex)
        out[x <= edges[0]] = 0.0
        out[x >= edges[-1]] = self.total
        return out


def _anti_basis() -> np.ndarray:
    """Row p-1, column k: coefficient of t^p in int_0^t of the k-th quartic Lagrange basis."""
    basis = np.empty((5, 5))
    for k in range(5):
        y = np.zeros(5)
        y[k] = 1.0
        coef = np.polynomial.polynomial.polyfit(NODES, y, 4)
        basis[:, k] = np.polynomial.polynomial.polyint(coef)[1:]
    return basis


_ANTI_BASIS = _anti_basis()


def antiderivative(func: Integrand, breakpoints: Sequence[float],
                   spec: QuadratureSpec = QuadratureSpec()) -> tuple[Antiderivative, QuadResult]:
    mesh, res = adaptive_mesh(func, breakpoints, spec)
    return Antiderivative(mesh, res.value), res
