from __future__ import annotations

import json
import math

import numpy as np
import pytest

from ruelle import io
from ruelle.errors import UsageError


def test_dumps_is_stable_and_json_safe():
    obj = {"b": complex(1, -2), "a": [np.float64(0.5), math.inf], "c": np.int64(3)}
    text = io.dumps(obj)
    assert text == io.dumps(dict(reversed(list(obj.items()))))
    data = json.loads(text)
    assert list(data) == ["a", "b", "c"]
    assert data["b"] == {"re": 1.0, "im": -2.0}
    assert data["a"] == [0.5, "infinite"]
    assert text.endswith("\n")


def test_emit_report_manifest(tmp_path):
    written = io.emit_report({"x.json": "{}\n", "y.csv": "a\n1\n"}, {"seed": 3}, out_dir=tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"] == {"seed": 3}
    assert manifest["files"] == {p.name: io.sha256_of(p) for p in written[:2]}


def test_load_config_rejects_schema_and_keys(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"schema": "other/9"}))
    with pytest.raises(UsageError):
        io.load_config(path, ["seed"])
    path.write_text(json.dumps({"seed": 1, "nope": 2}))
    with pytest.raises(UsageError):
        io.load_config(path, ["seed"])
    path.write_text(json.dumps({"seed": 1}))
    assert io.load_config(path, ["seed"]) == {"seed": 1}


def test_json_or_inline(tmp_path):
    path = tmp_path / "m.json"
    path.write_text("[[2, 1], [1, 1]]")
    assert io.json_or_inline(str(path)) == io.json_or_inline("[[2,1],[1,1]]")
    with pytest.raises(UsageError):
        io.json_or_inline("not json")
