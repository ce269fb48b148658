"""Command-line interface.

Exit codes: 0 success, 1 a verification check failed, 2 usage error,
3 numeric failure (quadrature, non-hyperbolic input, IO).  Errors are
reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import cmath
import json
import sys
from pathlib import Path

from . import fit as fitmod
from . import heisenberg as hz
from . import io
from . import resonances as rz
from . import toral as tz
from . import verify as vf
from .errors import NumericFailure, RuelleError, UsageError
from .functions import parse_preset
from .quadrature import QuadratureSpec
from .spectral import DEFAULT_PRECISION, UNIT_TOL, IntMatrix, SpectrumData, spectrum


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# Built-in defaults.  Argparse defaults are None so that config-file values
# can be layered under explicit flags.
DEFAULTS = {
    "precision": DEFAULT_PRECISION,
    "unit_tol": UNIT_TOL,
    "jmax": 3,
    "nmax": 3,
    "kmax": 2,
    "zmax": 1,
    "k": 1,
    "N": 25,
    "seed": 0,
    "quad_tol": 1e-10,
    "depth": 2,
    "max_degree": fitmod.MAX_DEGREE,
    "rel_tol": 1e-3,
    "matrix": "[[2, 1], [1, 1]]",
    "lam": 2.0,
    "u_angle": 0.0,
    "f": None,
    "g": None,
    "spectrum": None,
    "laplace": None,
    "kz": None,
    "phases": None,
    "predicted": None,
    "window": None,
    "level": 0,
    "out": None,
}

RANGES = {
    "precision": (15, 2000),
    "jmax": (1, 1000),
    "nmax": (0, 1000),
    "kmax": (0, 1000),
    "zmax": (1, 100),
    "N": (1, 100000),
    "depth": (1, 10),
    "max_degree": (0, 5),
    "level": (0, 1000),
}


def _add(p, *flags, dest, type=None, help=None, **kw):
    p.add_argument(*flags, dest=dest, type=type, default=None, help=help, **kw)


def _outputs(p, default_format="json"):
    _add(p, "--out", dest="out", help="output file (stdout when omitted)")
    _add(p, "--format", dest="format", choices=("json", "csv", "both"),
         help=f"output format (default {default_format})")
    _add(p, "--config", dest="config", help="JSON config file layered under flags")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ruelle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("spectrum", help="eigenvalues of a symplectic integer matrix")
    p.add_argument("matrix", help="JSON file or inline JSON matrix")
    _add(p, "--precision", dest="precision", type=int, help="decimal digits")
    _add(p, "--unit-tol", dest="unit_tol", type=float, help="log-distance from the unit circle")
    _outputs(p)

    p = sub.add_parser("resonances", help="enumerate predicted spectra")
    kinds = p.add_subparsers(dest="kind", parser_class=_Parser)
    kinds.required = True
    for name, help_ in (("pa", "resonances of a pseudo-Anosov action"),
                        ("basic-currents", "spectrum on basic currents"),
                        ("invariant-distributions", "spectrum on iterated invariant distributions")):
        q = kinds.add_parser(name, help=help_)
        _add(q, "--spectrum", dest="spectrum", help="spectrum JSON (from `ruelle spectrum`)")
        _add(q, "--matrix", dest="matrix", help="symplectic matrix, JSON file or inline")
        _add(q, "--jmax", dest="jmax", type=int)
        _add(q, "--precision", dest="precision", type=int)
        if name == "invariant-distributions":
            _add(q, "--k", dest="k", help="iteration depth, integer or 'inf'")
        _outputs(q)
    q = kinds.add_parser("geodesic", help="geodesic flow resonances from a Laplace spectrum")
    _add(q, "--laplace", dest="laplace", help="Laplace spectrum JSON")
    _add(q, "--jmax", dest="jmax", type=int)
    _add(q, "--nmax", dest="nmax", type=int)
    _outputs(q)
    q = kinds.add_parser("horocycle", help="horocycle invariant-distribution spectrum")
    _add(q, "--laplace", dest="laplace", help="Laplace spectrum JSON")
    _add(q, "--k", dest="k", type=int)
    _add(q, "--nmax", dest="nmax", type=int)
    _outputs(q)
    q = kinds.add_parser("heisenberg", help="resonances of a Heisenberg automorphism")
    _add(q, "--lambda", dest="lam", type=float)
    _add(q, "--zmax", dest="zmax", type=int)
    _add(q, "--kmax", dest="kmax", type=int)
    _add(q, "--phases", dest="phases", help='JSON {"z": [phase, ...]} with |z| phases per z')
    _outputs(q)
    q = kinds.add_parser("transfer-translation", help="Lyapunov spectrum, translation surfaces")
    _add(q, "--kz", dest="kz", help="KZ exponents JSON")
    _add(q, "--jmax", dest="jmax", type=int)
    _outputs(q)
    q = kinds.add_parser("transfer-heisenberg", help="Lyapunov spectrum, Heisenberg nilflows")
    _add(q, "--kmax", dest="kmax", type=int)
    _outputs(q)

    p = sub.add_parser("correlate", help="correlation series C(n)")
    systems = p.add_subparsers(dest="system", parser_class=_Parser)
    systems.required = True
    q = systems.add_parser("torus", help="exact correlations under a hyperbolic toral map")
    _add(q, "--f", dest="f", help="trig polynomial JSON (file or inline); random when omitted")
    _add(q, "--g", dest="g", help="trig polynomial JSON (file or inline); random when omitted")
    _add(q, "--matrix", dest="matrix", help="2x2 integer matrix (default cat map)")
    _add(q, "--N", dest="N", type=int)
    _add(q, "--seed", dest="seed", type=int, help="seed for random f, g")
    _outputs(q)
    q = systems.add_parser("heisenberg", help="correlations in one irreducible component")
    _add(q, "--f", dest="f", help="preset, e.g. gauss, gauss_poly:1,1, bump:0,1, psi_derivative:1")
    _add(q, "--g", dest="g", help="preset (default gauss)")
    _add(q, "--lambda", dest="lam", type=float)
    _add(q, "--u-angle", dest="u_angle", type=float, help="phase u = exp(i angle)")
    _add(q, "--N", dest="N", type=int)
    _add(q, "--quad-tol", dest="quad_tol", type=float, help="relative quadrature tolerance")
    _outputs(q)

    p = sub.add_parser("fit", help="peel exponential terms from a series CSV")
    p.add_argument("series", help="series CSV (from `ruelle correlate`)")
    _add(p, "--depth", dest="depth", type=int)
    _add(p, "--window", dest="window", type=int, nargs=2, metavar=("LO", "HI"))
    _add(p, "--max-degree", dest="max_degree", type=int)
    _add(p, "--predicted", dest="predicted", help="resonance JSON to match against")
    _add(p, "--rel-tol", dest="rel_tol", type=float)
    _outputs(p)

    p = sub.add_parser("verify", help="run a module's acceptance suite")
    p.add_argument("suite", choices=sorted(vf.SUITES) + ["all"])
    _add(p, "--lambda", dest="lam", type=float, help="restrict the lambda sweeps (heisenberg)")
    _add(p, "--seed", dest="seed", type=int, help="first seed (toral, spectrum)")
    _add(p, "--quad-tol", dest="quad_tol", type=float)
    _outputs(p)

    p = sub.add_parser("deviation", help="deviation exponent of ergodic integrals")
    _add(p, "--kz", dest="kz", help="KZ exponents JSON; omit with --heisenberg")
    _add(p, "--level", dest="level", type=int)
    p.add_argument("--heisenberg", action="store_true", help="Heisenberg nilflow exponent")
    _outputs(p)
    return parser


# ---------------------------------------------------------------------------
# config resolution


def resolve(args: argparse.Namespace, format_default: str = "json") -> tuple[dict, set]:
    """Layer built-in defaults, then the config file, then explicit flags.

    Returns the resolved config and the set of keys set explicitly.
    """
    given = {k: v for k, v in vars(args).items() if k not in ("config",)}
    keys = [k for k in given if k not in ("command", "kind", "system")]
    cfg = io.load_config(args.config, keys) if getattr(args, "config", None) else {}
    out = {}
    explicit = set(cfg)
    for k in keys:
        v = given[k]
        if v is None:
            v = cfg.get(k, DEFAULTS.get(k))
        else:
            explicit.add(k)
        out[k] = v
    if out.get("format") is None:
        out["format"] = format_default
    for k, (lo, hi) in RANGES.items():
        if k in out and out[k] is not None:
            if not isinstance(out[k], int) or not lo <= out[k] <= hi:
                raise UsageError(f"{k} must be an integer in [{lo}, {hi}]")
    if out.get("quad_tol") is not None and not 0 < float(out["quad_tol"]) < 1:
        raise UsageError("quad_tol must lie in (0, 1)")
    if out.get("window") is not None:
        out["window"] = [int(x) for x in out["window"]]
        if len(out["window"]) != 2 or out["window"][0] >= out["window"][1]:
            raise UsageError("window must be two increasing integers")
    out["command"] = args.command
    for k in ("kind", "system"):
        if getattr(args, k, None):
            out[k] = getattr(args, k)
    return out, explicit


# ---------------------------------------------------------------------------
# handlers; each returns ({suffix: text}, exit code)


def _json_result(obj) -> dict:
    return {"json": io.dumps(obj)}


def _spectrum_from(cfg) -> SpectrumData:
    if cfg.get("spectrum"):
        return SpectrumData.from_json(io.json_or_inline(cfg["spectrum"]))
    if cfg.get("matrix"):
        return spectrum(IntMatrix.from_any(io.json_or_inline(cfg["matrix"])), cfg["precision"])
    raise UsageError("need --spectrum or --matrix")


def _need(cfg, key, flag):
    if cfg.get(key) is None:
        raise UsageError(f"missing {flag}")
    return cfg[key]


def run_spectrum(cfg):
    M = IntMatrix.from_any(io.json_or_inline(cfg["matrix"]))
    data = spectrum(M, cfg["precision"], float(cfg["unit_tol"]))
    return _json_result(data.to_json()), 0


def _parse_k(value):
    if value is None:
        return 1
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinite", "infinity"):
        return rz.INFINITE
    try:
        k = int(value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"k must be an integer or 'inf', got {value!r}") from exc
    if k < 0:
        raise UsageError("k must be >= 0")
    return k


def _parse_phases(obj):
    if obj is None:
        return None
    if isinstance(obj, dict) and "phases" in obj:
        obj = obj["phases"]
    if not isinstance(obj, dict):
        raise UsageError('phases must be a JSON object {"z": [phase, ...]}')

    def one(u):
        if isinstance(u, (list, tuple)) and len(u) == 2:
            return complex(float(u[0]), float(u[1]))
        return u

    return {int(z): [one(u) for u in us] for z, us in obj.items()}


def run_resonances(cfg):
    kind = cfg["kind"]
    if kind == "pa":
        rs = rz.pa_resonances(_spectrum_from(cfg), cfg["jmax"])
    elif kind == "basic-currents":
        rs = rz.basic_current_spectrum(_spectrum_from(cfg), cfg["jmax"])
    elif kind == "invariant-distributions":
        rs = rz.invariant_distribution_spectrum(_spectrum_from(cfg), _parse_k(cfg.get("k")), cfg["jmax"])
    elif kind == "geodesic":
        lap = rz.LaplaceSpectrum.from_json(io.json_or_inline(_need(cfg, "laplace", "--laplace")))
        rs = rz.geodesic_resonances(lap, cfg["jmax"], cfg["nmax"])
    elif kind == "horocycle":
        lap = rz.LaplaceSpectrum.from_json(io.json_or_inline(_need(cfg, "laplace", "--laplace")))
        rs = rz.horocycle_invariant_spectrum(lap, _parse_k(cfg.get("k")), cfg["nmax"])
    elif kind == "heisenberg":
        phases = _parse_phases(io.json_or_inline(cfg["phases"])) if cfg.get("phases") else None
        rs = rz.heisenberg_resonances(cfg["lam"], phases, cfg["zmax"], cfg["kmax"])
    elif kind == "transfer-translation":
        kz = rz.KzExponents.from_json(io.json_or_inline(_need(cfg, "kz", "--kz")))
        rs = rz.transfer_spectrum_translation(kz, cfg["jmax"])
    elif kind == "transfer-heisenberg":
        rs = rz.transfer_spectrum_heisenberg(cfg["kmax"])
    else:  # argparse rejects other kinds
        raise UsageError(f"unknown resonance kind {kind!r}")
    return {"json": io.dumps(rs.to_json()), "csv": io.resonances_csv(rs)}, 0


def _series_json(series) -> str:
    return io.dumps({
        "schema": "ruelle.series/1",
        "meta": series.meta,
        "n": list(series.n),
        "re": [z.real for z in series.values],
        "im": [z.imag for z in series.values],
        "error": list(series.errors),
        "exact": list(series.exact),
    })


def run_correlate(cfg):
    N = cfg["N"]
    if cfg["system"] == "torus":
        A = tz.ToralAutomorphism.from_any(io.json_or_inline(cfg["matrix"]))
        f0, g0 = tz.random_pair(cfg["seed"])
        f = tz.as_polynomial(io.json_or_inline(cfg["f"])) if cfg.get("f") else f0
        g = tz.as_polynomial(io.json_or_inline(cfg["g"])) if cfg.get("g") else g0
        series = tz.correlate(f, g, A, N)
        meta = dict(series.meta)
        if abs(f.mean) == 0 and abs(g.mean) == 0:
            meta["escape_time"] = tz.escape_time(f, g, A)
        series = fitmod.CorrelationSeries(series.n, series.values, series.errors, series.exact, meta)
    else:
        chi = hz.build_chi_family(3)
        f = parse_preset(cfg.get("f") or "gauss", chi.psi)
        g = parse_preset(cfg.get("g") or "gauss", chi.psi)
        u = cmath.exp(1j * float(cfg["u_angle"]))
        spec = QuadratureSpec(atol=0.0, rtol=float(cfg["quad_tol"]))
        series = hz.correlation_series(f, g, float(cfg["lam"]), u, N, spec)
    return {"csv": series.to_csv(), "json": _series_json(series)}, 0


def run_fit(cfg):
    path = Path(cfg["series"])
    series = fitmod.CorrelationSeries.from_csv(path.read_text())
    window = tuple(cfg["window"]) if cfg.get("window") else None
    report = fitmod.fit_rates(series, cfg["depth"], window, cfg["max_degree"])
    payload = report.to_json()
    if cfg.get("predicted"):
        predicted = rz.ResonanceSet.from_json(io.json_or_inline(cfg["predicted"]))
        payload["match"] = fitmod.match_resonances(report, predicted, float(cfg["rel_tol"])).to_json()
    lines = ["term,rate,phase,degree,coef_re,coef_im,residual_norm"]
    for k, t in enumerate(report.terms, 1):
        c = t.coefficient
        lines.append(f"{k},{t.rate:.17g},{t.phase:.17g},{t.degree},{c.real:.17g},{c.imag:.17g},"
                     f"{t.residual_norm:.17g}")
    return {"json": io.dumps(payload), "csv": "\n".join(lines) + "\n",
            "summary": report.summary() + "\n"}, 0


def run_verify(cfg):
    names = sorted(vf.SUITES) if cfg["suite"] == "all" else [cfg["suite"]]
    checks = []
    for name in names:
        if name == "heisenberg":
            checks += vf.heisenberg_suite(cfg.get("lam"), float(cfg["quad_tol"]))
        elif name in ("toral", "spectrum"):
            checks += vf.SUITES[name](cfg["seed"])
        else:
            checks += vf.SUITES[name]()
    for c in checks:
        print(c.line(), file=sys.stderr)
    passed = all(c.passed for c in checks)
    payload = {"schema": "ruelle.verify/1", "suite": cfg["suite"], "passed": passed,
               "checks": [c.to_json() for c in checks]}
    lines = ["name,passed,value,threshold"]
    lines += [f"\"{c.name}\",{int(c.passed)},{c.value:.17g},{c.threshold:.17g}" for c in checks]
    return {"json": io.dumps(payload), "csv": "\n".join(lines) + "\n"}, 0 if passed else 1


def run_deviation(cfg):
    if cfg.get("heisenberg"):
        value, caveat = rz.heisenberg_deviation_exponent()
        payload = {"system": "heisenberg", "exponent": value, "caveat": caveat}
    else:
        kz = rz.KzExponents.from_json(io.json_or_inline(_need(cfg, "kz", "--kz")))
        value = rz.deviation_exponent(kz, cfg["level"])
        payload = {"system": "translation", "level": cfg["level"], "exponent": str(value)}
    return _json_result(payload), 0


HANDLERS = {
    "spectrum": run_spectrum,
    "resonances": run_resonances,
    "correlate": run_correlate,
    "fit": run_fit,
    "verify": run_verify,
    "deviation": run_deviation,
}


def _emit(files: dict, cfg: dict) -> None:
    fmt = cfg["format"]
    wanted = ["json", "csv"] if fmt == "both" else [fmt]
    missing = [w for w in wanted if w not in files]
    if missing:
        raise UsageError(f"{cfg['command']} has no {missing[0]} output")
    summary = files.get("summary")
    if cfg.get("out") is None:
        for w in wanted:
            sys.stdout.write(files[w])
        if summary:
            # keep stdout machine-readable when it carries the report itself
            sys.stderr.write(summary)
        return
    if summary:
        sys.stdout.write(summary)
    out = Path(cfg["out"])
    if fmt == "both":
        results = {str(out.with_suffix("." + w)): files[w] for w in wanted}
    else:
        results = {str(out): files[fmt]}
    io.emit_report(results, dict(sorted(cfg.items())))


def _error(exc: BaseException, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        fmt_default = "csv" if args.command == "correlate" else "json"
        cfg, explicit = resolve(args, fmt_default)
        if args.command == "verify" and "lam" not in explicit:
            cfg["lam"] = None  # full lambda sweeps
        files, code = HANDLERS[args.command](cfg)
        _emit(files, cfg)
        return code
    except (UsageError, KeyError, TypeError, ValueError) as exc:
        # malformed input files surface as lookup/conversion errors
        return _error(exc, 2)
    except (NumericFailure, OSError, RuelleError) as exc:
        return _error(exc, 3)


if __name__ == "__main__":
    sys.exit(main())
