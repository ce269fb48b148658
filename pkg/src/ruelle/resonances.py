"""Enumerators for predicted resonance and Lyapunov spectra.

Every enumerator returns a ``ResonanceSet``: a sorted, truncated list of
``Resonance`` entries carrying multiplicity, Jordan data and provenance
labels.  Map spectra (eigenvalues) and Lyapunov spectra merge values that
coincide within ``COLLISION_RTOL``; flow spectra keep each family apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import mpmath as mp
import numpy as np

from .errors import PhaseCountMismatch, UsageError
from .spectral import DEFAULT_PRECISION, SpectrumData, parse_number

COLLISION_RTOL = mp.mpf(10) ** -30
INFINITE = math.inf

MAP, FLOW, EXPONENT = "map", "flow", "exponent"


@dataclass(frozen=True)
class Resonance:
    value: object  # mpc, or None for modulus-only entries
    modulus: object
    multiplicity: float  # int, or INFINITE
    jordan_blocks: tuple[int, ...] = ()
    provenance: tuple[tuple, ...] = ()
    phase_known: bool = True

    def __post_init__(self):
        if not self.multiplicity >= 1:
            raise UsageError("multiplicity must be >= 1")
        if sum(self.jordan_blocks) > self.multiplicity:
            raise UsageError("Jordan blocks exceed multiplicity")

    @property
    def complex_value(self) -> complex:
        if self.value is None:
            return complex("nan")
        return complex(self.value)

    def to_json(self, digits: int = 20) -> dict:
        def s(x):
            return mp.nstr(x, digits)

        mult = "infinite" if self.multiplicity == INFINITE else int(self.multiplicity)
        return {
            "value_re": s(mp.re(self.value)) if self.value is not None else None,
            "value_im": s(mp.im(self.value)) if self.value is not None else None,
            "modulus": s(self.modulus),
            "multiplicity": mult,
            "jordan": list(self.jordan_blocks),
            "provenance": [list(p) for p in self.provenance],
            "phase_known": self.phase_known,
        }


@dataclass(frozen=True)
class ResonanceSet:
    system: str
    kind: str
    entries: tuple[Resonance, ...]
    truncation: Mapping = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def values(self) -> list[complex]:
        return [e.complex_value for e in self.entries]

    def moduli(self) -> list[float]:
        return [float(e.modulus) for e in self.entries]

    def find(self, value, rtol: float = 1e-12) -> Resonance | None:
        z = complex(value)
        for e in self.entries:
            if e.value is not None and abs(e.complex_value - z) <= rtol * max(1.0, abs(z)):
                return e
        return None

    def to_json(self, digits: int = 20) -> dict:
        return {
            "schema": "ruelle.resonances/1",
            "system": self.system,
            "kind": self.kind,
            "truncation": {k: _jsonable(v) for k, v in self.truncation.items()},
            "entries": [e.to_json(digits) for e in self.entries],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ResonanceSet":
        if obj.get("schema", "ruelle.resonances/1") != "ruelle.resonances/1":
            raise UsageError(f"unsupported resonance schema {obj.get('schema')!r}")
        entries = []
        with mp.workdps(DEFAULT_PRECISION + 10):
            for e in obj["entries"]:
                value = None
                if e.get("value_re") is not None:
                    value = mp.mpc(parse_number(e["value_re"]), parse_number(e.get("value_im") or 0))
                mult = INFINITE if e["multiplicity"] == "infinite" else int(e["multiplicity"])
                entries.append(Resonance(
                    value, parse_number(e["modulus"]), mult, tuple(e.get("jordan", ())),
                    tuple(tuple(p) for p in e.get("provenance", ())), bool(e.get("phase_known", True)),
                ))
        return cls(obj.get("system", ""), obj.get("kind", MAP), tuple(entries),
                   dict(obj.get("truncation", {})))


def _jsonable(v):
    if v == INFINITE:
        return "infinite"
    if isinstance(v, (mp.mpf, Fraction)):
        return str(v)
    return v


# ---------------------------------------------------------------------------
# inputs


@dataclass(frozen=True)
class LaplaceSpectrum:
    """Laplace eigenvalues (mu, multiplicity), ascending, with mu = 0 simple."""

    eigenvalues: tuple[tuple[object, int], ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        vals = [mu for mu, _ in self.eigenvalues]
        if any(mu < 0 for mu in vals):
            raise UsageError("Laplace eigenvalues must be >= 0")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise UsageError("Laplace eigenvalues must be distinct and ascending")
        if not vals or vals[0] != 0 or self.eigenvalues[0][1] != 1:
            raise UsageError("0 must be a simple Laplace eigenvalue (connected surface)")
        if any(m < 1 for _, m in self.eigenvalues):
            raise UsageError("multiplicities must be positive")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(_label(mu) for mu in vals))

    @classmethod
    def from_pairs(cls, pairs: Iterable) -> "LaplaceSpectrum":
        items = []
        labels = []
        for p in pairs:
            if isinstance(p, dict):
                raw, mult = p["mu"], int(p.get("multiplicity", 1))
            elif isinstance(p, (tuple, list)):
                raw, mult = p[0], int(p[1])
            else:
                raw, mult = p, 1
            with mp.workdps(DEFAULT_PRECISION + 10):
                items.append((parse_number(raw), mult))
            labels.append(str(raw))
        return cls(tuple(items), tuple(labels))

    @classmethod
    def from_json(cls, obj) -> "LaplaceSpectrum":
        pairs = obj["eigenvalues"] if isinstance(obj, dict) else obj
        return cls.from_pairs(pairs)


def _label(x) -> str:
    return mp.nstr(x, 20)


@dataclass(frozen=True)
class KzExponents:
    """Lyapunov exponents lambda_2 >= ... >= lambda_g of the KZ cocycle."""

    genus: int
    exponents: tuple  # lambda_2 ... lambda_g
    hyperbolic: bool = True

    def __post_init__(self):
        with mp.workdps(DEFAULT_PRECISION + 10):
            ex = tuple(parse_number(x) for x in self.exponents)
        object.__setattr__(self, "exponents", ex)
        if self.genus < 1 or len(ex) != self.genus - 1:
            raise UsageError(f"expected {self.genus - 1} exponents for genus {self.genus}")
        if any(b > a for a, b in zip(ex, ex[1:])):
            raise UsageError("exponents must be non-increasing")
        if ex and not (ex[0] < 1 and ex[-1] >= 0):
            raise UsageError("need 1 > lambda_2 and lambda_g >= 0")
        if self.hyperbolic and any(not (0 < x < 1) for x in ex):
            raise UsageError("hyperbolic KZ exponents must lie strictly inside (0, 1)")

    @property
    def full(self) -> tuple:
        return (mp.mpf(1),) + self.exponents

    @classmethod
    def from_json(cls, obj: dict) -> "KzExponents":
        return cls(int(obj["genus"]), tuple(obj["exponents"]), bool(obj.get("hyperbolic", True)))


# ---------------------------------------------------------------------------
# merging and sorting


def _merge(raw: list[Resonance], rtol=COLLISION_RTOL) -> list[Resonance]:
    """Merge entries whose values coincide within the relative tolerance."""
    if not raw:
        return []
    approx = np.array([e.complex_value for e in raw])
    groups: list[list[int]] = []
    owner = [-1] * len(raw)
    for i in range(len(raw)):
        if owner[i] >= 0:
            continue
        owner[i] = len(groups)
        members = [i]
        # float prefilter, then the exact high-precision test
        near = np.nonzero(np.abs(approx[i + 1:] - approx[i]) <= 1e-9 * max(1.0, abs(approx[i])))[0]
        for k in near + i + 1:
            if owner[k] < 0:
                a, b = raw[i].value, raw[k].value
                if abs(a - b) <= rtol * max(abs(a), abs(b), 1e-300):
                    owner[k] = owner[i]
                    members.append(int(k))
        groups.append(members)
    merged = []
    for members in groups:
        first = raw[members[0]]
        if len(members) == 1:
            merged.append(first)
            continue
        mult = sum(raw[k].multiplicity for k in members)
        jordan = tuple(b for k in members for b in raw[k].jordan_blocks)
        prov = tuple(p for k in members for p in raw[k].provenance)
        merged.append(Resonance(first.value, first.modulus, mult, jordan, prov, first.phase_known))
    return merged


def _key_map(e: Resonance):
    v = e.value if e.value is not None else mp.mpc(0)
    return (-e.modulus, -mp.re(v), -mp.im(v))


def _key_flow(e: Resonance):
    return (abs(mp.re(e.value)), mp.im(e.value), str(e.provenance))


def _key_exponent(e: Resonance):
    return (-mp.re(e.value),)


def _finish(system, kind, raw, truncation, merge=True) -> ResonanceSet:
    entries = _merge(raw) if merge else list(raw)
    key = {MAP: _key_map, FLOW: _key_flow, EXPONENT: _key_exponent}[kind]
    entries.sort(key=key)
    return ResonanceSet(system, kind, tuple(entries), dict(truncation))


def _entry(value, mult, prov, jordan=()):
    value = mp.mpc(value)
    return Resonance(value, abs(value), mult, tuple(jordan), (tuple(prov),))


# ---------------------------------------------------------------------------
# pseudo-Anosov maps


def _inner_indices(spec: SpectrumData) -> range:
    # 1-based indices 2 .. 2g-1
    return range(2, 2 * spec.genus)


def pa_resonances(spec: SpectrumData, j_max: int) -> ResonanceSet:
    """{1} together with mu_i lam^-j, i = 2..2g-1, j = 1..j_max, multiplicity j."""
    if j_max < 1:
        raise UsageError("j_max must be >= 1")
    with mp.workdps(spec.precision + 10):
        raw = [_entry(1, 1, ("unit",))]
        for i in _inner_indices(spec):
            for j in range(1, j_max + 1):
                raw.append(_entry(spec.mu[i - 1] * spec.lam ** -j, j, ("pa", i, j)))
        return _finish("pseudo-anosov", MAP, raw, {"j_max": j_max})


def basic_current_spectrum(spec: SpectrumData, j_max: int) -> ResonanceSet:
    """{lam} together with mu_i lam^-j for j = 0..j_max."""
    if j_max < 0:
        raise UsageError("j_max must be >= 0")
    with mp.workdps(spec.precision + 10):
        raw = [_entry(spec.lam, 1, ("area-current",))]
        for i in _inner_indices(spec):
            for j in range(0, j_max + 1):
                raw.append(_entry(spec.mu[i - 1] * spec.lam ** -j, 1, ("basic", i, j)))
        return _finish("basic-currents", MAP, raw, {"j_max": j_max})


def invariant_distribution_spectrum(spec: SpectrumData, k, j_max: int | None = None) -> ResonanceSet:
    """Spectrum on distributions killed by X^k; ``k`` may be ``math.inf``.

    The value mu_i lam^-l carries multiplicity l (the number of
    creation/annihilation chains reaching level l).
    """
    if k == INFINITE or k == "inf":
        if j_max is None or j_max < 1:
            raise UsageError("k = infinity needs a truncation j_max >= 1")
        top, trunc = j_max, {"k": INFINITE, "j_max": j_max}
    else:
        k = int(k)
        if k < 1:
            raise UsageError("k must be >= 1")
        top, trunc = k, {"k": k}
    with mp.workdps(spec.precision + 10):
        raw = [_entry(1, 1, ("unit",))]
        for i in _inner_indices(spec):
            for j in range(1, top + 1):
                raw.append(_entry(spec.mu[i - 1] * spec.lam ** -j, j, ("invdist", i, j)))
        return _finish("invariant-distributions", MAP, raw, trunc)


def multiplicity_oracle(l: int) -> tuple[int, list[str]]:
    """Count solutions of j + k = l + 1 with j >= 0, k >= 1 by enumeration."""
    if l < 0:
        raise UsageError("l must be >= 0")
    count = sum(1 for j in range(0, l + 2) for k in range(1, l + 2) if j + k == l + 1)
    basis = ["D"] + [
        "(L_X L_Y)D" if p == 1 else f"(L_X L_Y)^{p} D" for p in range(1, l + 1)
    ]
    return count, basis


# ---------------------------------------------------------------------------
# geodesic and horocycle flows


def nu_pm(mu) -> tuple:
    """(nu_+, nu_-) = (1 +- sqrt(1 - 4 mu)) / 2."""
    root = mp.sqrt(mp.mpc(1 - 4 * mu))
    return (1 + root) / 2, (1 - root) / 2


QUARTER = mp.mpf(1) / 4


def _geodesic_families(lap: LaplaceSpectrum):
    """Yield (base rate, multiplicity, jordan, label) for each nonzero family.

    Rates are the decaying convention -nu.  mu = 0 contributes only its
    nu_+ = 1 branch here; its nu_- = 0 branch is the constant mode.
    """
    for (mu, mult), label in zip(lap.eigenvalues, lap.labels):
        plus, minus = nu_pm(mu)
        if mu == 0:
            yield -plus, mult, (), (label, "+")
        elif mu == QUARTER:
            yield -plus, 2 * mult, (2,) * mult, (label, "+-")
        else:
            yield -plus, mult, (), (label, "+")
            yield -minus, mult, (), (label, "-")


def geodesic_resonances(lap: LaplaceSpectrum, j_max: int, n_max: int) -> ResonanceSet:
    """Flow rates: 0, -nu_pm(mu) - j for j = 0..j_max, and the band -n."""
    if j_max < 0 or n_max < 0:
        raise UsageError("truncations must be >= 0")
    with mp.workdps(DEFAULT_PRECISION + 10):
        raw = [_entry(0, 1, ("constant",))]
        for base, mult, jordan, (label, branch) in _geodesic_families(lap):
            for j in range(j_max + 1):
                raw.append(_entry(base - j, mult, ("laplace", label, branch, j), jordan))
        for n in range(1, n_max + 1):
            raw.append(_entry(-n, 1, ("band", n)))
        return _finish("geodesic", FLOW, raw, {"j_max": j_max, "n_max": n_max}, merge=False)


def horocycle_invariant_spectrum(lap: LaplaceSpectrum, k: int, n_max: int = 3) -> ResonanceSet:
    """Spectrum of the geodesic generator on distributions killed by U^(k+1)...

    {0} together with s - j (j = 0..k) for every nonzero s in the
    invariant-distribution spectrum {-nu_pm(mu)} and {-1, ..., -n_max}.
    """
    if k < 0 or n_max < 0:
        raise UsageError("k and n_max must be >= 0")
    with mp.workdps(DEFAULT_PRECISION + 10):
        raw = [_entry(0, 1, ("constant",))]
        for base, mult, jordan, (label, branch) in _geodesic_families(lap):
            for j in range(k + 1):
                raw.append(_entry(base - j, mult, ("laplace", label, branch, j), jordan))
        for n in range(1, n_max + 1):
            for j in range(k + 1):
                raw.append(_entry(-n - j, 1, ("band", n, j)))
        return _finish("horocycle-invariant", FLOW, raw, {"k": k, "n_max": n_max}, merge=False)


# ---------------------------------------------------------------------------
# Heisenberg automorphisms


def heisenberg_resonances(lam, phases: Mapping[int, Sequence] | None = None,
                          z_max: int = 1, k_max: int = 0) -> ResonanceSet:
    """{1} together with u_{z,i} lam^(-k-1/2), |z| <= z_max, i = 1..|z|.

    Without phases the entries are modulus-only, one per k, with
    multiplicity 2 * sum_{z=1}^{z_max} z.
    """
    if z_max < 1 or k_max < 0:
        raise UsageError("need z_max >= 1 and k_max >= 0")
    with mp.workdps(DEFAULT_PRECISION + 10):
        lam = parse_number(lam)
        if not lam > 1:
            raise UsageError("lambda must be > 1")
        zs = [z for z in range(-z_max, z_max + 1) if z != 0]
        raw = [_entry(1, 1, ("unit",))]
        trunc = {"z_max": z_max, "k_max": k_max}
        if phases is None:
            mult = z_max * (z_max + 1)
            for k in range(k_max + 1):
                modulus = lam ** (-k - mp.mpf(1) / 2)
                prov = tuple(("heis", z, i, k) for z in zs for i in range(1, abs(z) + 1))
                raw.append(Resonance(None, modulus, mult, (), prov, phase_known=False))
            return _finish("heisenberg", MAP, raw, trunc)
        table = {int(z): [parse_number(u) for u in us] for z, us in phases.items()}
        for z in zs:
            if z not in table or len(table[z]) != abs(z):
                got = len(table.get(z, []))
                raise PhaseCountMismatch(f"central character z={z} needs {abs(z)} phases, got {got}")
            for u in table[z]:
                if abs(abs(u) - 1) > 1e-12:
                    raise UsageError(f"phase {u} is not on the unit circle")
        for z in zs:
            for i, u in enumerate(table[z], start=1):
                for k in range(k_max + 1):
                    raw.append(_entry(u * lam ** (-k - mp.mpf(1) / 2), 1, ("heis", z, i, k)))
        return _finish("heisenberg", MAP, raw, trunc)


# ---------------------------------------------------------------------------
# transfer cocycles


def transfer_spectrum_translation(kz: KzExponents, j_max: int) -> ResonanceSet:
    """Exponents {1} together with +-lambda_i - j, multiplicity j, merged."""
    if not kz.hyperbolic:
        raise UsageError("transfer spectrum needs hyperbolic KZ exponents")
    if j_max < 1:
        raise UsageError("j_max must be >= 1")
    with mp.workdps(DEFAULT_PRECISION + 10):
        raw = [_entry(1, 1, ("area",))]
        for i, lam_i in enumerate(kz.exponents, start=2):
            for j in range(1, j_max + 1):
                raw.append(_entry(lam_i - j, j, ("+", i, j)))
                raw.append(_entry(-lam_i - j, j, ("-", i, j)))
        return _finish("transfer-translation", EXPONENT, raw, {"j_max": j_max})


def transfer_spectrum_heisenberg(k_max: int) -> ResonanceSet:
    """Exponents {1} (simple) together with 1/2 - k of infinite multiplicity."""
    if k_max < 0:
        raise UsageError("k_max must be >= 0")
    with mp.workdps(DEFAULT_PRECISION + 10):
        raw = [_entry(1, 1, ("volume",))]
        for k in range(k_max + 1):
            raw.append(_entry(mp.mpf(1) / 2 - k, INFINITE, ("heis", k)))
        return _finish("transfer-heisenberg", EXPONENT, raw, {"k_max": k_max})


def deviation_exponent(kz: KzExponents, level: int):
    """Growth exponent of ergodic integrals once levels 1..``level`` vanish."""
    if not 0 <= level <= kz.genus:
        raise UsageError(f"level must be in 0..{kz.genus}")
    if level == kz.genus:
        return mp.mpf(0)
    return kz.full[level]


def heisenberg_deviation_exponent() -> tuple[float, str]:
    return 0.5, "bound T^(1/2 + eps) holds for every eps > 0"
