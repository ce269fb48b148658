"""Deterministic report emission, manifests and config files."""

from __future__ import annotations

import hashlib
import json
import math
import platform
from pathlib import Path
from typing import Iterable, Mapping

from .errors import UsageError

CONFIG_SCHEMA = "ruelle.config/1"
MANIFEST_SCHEMA = "ruelle.manifest/1"


def _clean(obj):
    """Make ``obj`` JSON-serializable with stable, finite-safe values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": _clean(obj.real), "im": _clean(obj.imag)}
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "infinite" if obj > 0 else "-infinite"
        return obj
    if hasattr(obj, "item"):  # numpy scalars
        return _clean(obj.item())
    if hasattr(obj, "to_json"):
        return _clean(obj.to_json())
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def sha256_of(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions() -> dict:
    from importlib import metadata

    out = {"python": platform.python_version()}
    for pkg in ("numpy", "scipy", "mpmath", "sympy"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    from . import __version__

    out["ruelle"] = __version__
    return out


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def emit_report(results: Mapping[str, str], config: Mapping, out_dir: Path | None = None,
                manifest_name: str | None = None) -> list[Path]:
    """Write named text artifacts plus a manifest with config, versions and checksums.

    ``results`` maps file names (relative to ``out_dir``) or paths to their
    text content.  The manifest goes to ``manifest.json`` inside ``out_dir``
    or, without an output directory, next to the first artifact as
    ``<stem>.manifest.json``.
    """
    if not results:
        raise UsageError("nothing to emit")
    written = []
    for name, text in results.items():
        path = Path(out_dir) / name if out_dir is not None else Path(name)
        written.append(write_text(path, text))
    if manifest_name is None:
        first = written[0]
        manifest = (Path(out_dir) / "manifest.json") if out_dir is not None \
            else first.with_name(first.stem + ".manifest.json")
    else:
        manifest = Path(out_dir or ".") / manifest_name
    payload = {
        "schema": MANIFEST_SCHEMA,
        "config": dict(config),
        "versions": versions(),
        "files": {p.name: sha256_of(p) for p in written},
    }
    written.append(write_text(manifest, dumps(payload)))
    return written


def load_json(path) -> object:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def json_or_inline(text: str):
    """A JSON file path, or an inline JSON literal."""
    p = Path(text)
    if p.exists():
        return load_json(p)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{text!r} is neither a file nor inline JSON") from exc


def load_config(path, allowed: Iterable[str]) -> dict:
    """Read a config file; unknown keys are rejected."""
    data = load_json(path)
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    schema = data.pop("schema", CONFIG_SCHEMA)
    if schema != CONFIG_SCHEMA:
        raise UsageError(f"unsupported config schema {schema!r}")
    allowed = set(allowed)
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    return data


def resonances_csv(rs) -> str:
    lines = [f"# schema=ruelle.resonances-csv/1 system={rs.system}",
             "value_re,value_im,modulus,multiplicity,jordan,provenance,phase_known"]
    for e in rs.to_json()["entries"]:
        prov = ";".join("/".join(str(x) for x in p) for p in e["provenance"])
        jordan = "/".join(str(b) for b in e["jordan"])
        lines.append(
            f"{e['value_re'] if e['value_re'] is not None else ''},"
            f"{e['value_im'] if e['value_im'] is not None else ''},"
            f"{e['modulus']},{e['multiplicity']},{jordan},{prov},{int(e['phase_known'])}"
        )
    return "\n".join(lines) + "\n"
