import json
import math

import numpy as np
import pytest

from qclab.errors import ConfigurationError
from qclab.reports import (
    SCHEMA_VERSION,
    all_checks_pass,
    canonical_json,
    csv_text,
    make_envelope,
    payload_bytes,
    read_envelope,
    svg_plot,
    to_jsonable,
    write_envelope,
)


def sample_envelope():
    payload = {"value": np.float64(0.1), "arr": np.arange(3), "z": 1 + 2j, "flag": np.bool_(True),
               "nan": math.nan, "checks": {"a": True}}
    return make_envelope("solve", {"k": (0.5,)}, payload, 7, 1.25)


def test_jsonable_conversions():
    out = to_jsonable({"a": np.float32(0.5), "b": (1, 2), "c": math.inf, "d": -math.inf, "e": 1j})
    assert out == {"a": 0.5, "b": [1, 2], "c": "Infinity", "d": "-Infinity", "e": [0.0, 1.0]}
    with pytest.raises(TypeError):
        to_jsonable(object())


def test_envelope_round_trip(tmp_path):
    env = sample_envelope()
    path = write_envelope(tmp_path / "report.json", env)
    back = read_envelope(path)
    assert back == json.loads(canonical_json(env))
    assert canonical_json(back) == canonical_json(env)
    assert back["schema_version"] == SCHEMA_VERSION
    assert payload_bytes(back) == payload_bytes(env)


def test_minor_versions_are_readable(tmp_path):
    env = json.loads(canonical_json(sample_envelope()))
    env["schema_version"] = "1.7"
    env["extra_field"] = "ignored"
    del env["seed"]
    (tmp_path / "r.json").write_text(json.dumps(env))
    back = read_envelope(tmp_path / "r.json")
    assert back["seed"] is None
    assert back["payload"]["value"] == 0.1


@pytest.mark.parametrize("version", ["2.0", "0.9", "", "x.1"])
def test_other_majors_rejected(tmp_path, version):
    env = json.loads(canonical_json(sample_envelope()))
    env["schema_version"] = version
    (tmp_path / "r.json").write_text(json.dumps(env))
    with pytest.raises(ConfigurationError):
        read_envelope(tmp_path / "r.json")


def test_all_checks_pass():
    assert all_checks_pass({"checks": {"a": True, "b": True}})
    assert not all_checks_pass({"checks": {"a": True, "b": False}})
    assert all_checks_pass({})


def test_csv_preserves_floats_exactly():
    text = csv_text(["x", "y"], [(0.1, 1), (1 / 3, 2)])
    lines = text.splitlines()
    assert lines[0] == "x,y"
    assert float(lines[2].split(",")[0]) == 1 / 3


def test_svg_plot_is_well_formed():
    import xml.etree.ElementTree as ET

    svg = svg_plot([("a", [1, 10, 100], [1, 0.1, 0.01]), ("b", [1, 100], [0, -1])], "tails", logx=True, logy=True)
    root = ET.fromstring(svg)
    polylines = [el for el in root.iter() if el.tag.endswith("polyline")]
    assert len(polylines) == 2
    # non-positive values are dropped on log axes
    assert polylines[1].get("points") == ""
