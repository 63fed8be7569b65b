import csv
import io
import json
import math

import pytest

from subharmonic.cli import run

TWO_PI = 2 * math.pi


def _scene(tmp_path, name, measure=None, radius=2.0, coeffs=None):
    doc = {"domain": {"center": [0, 0], "radius": radius}}
    if measure is not None:
        doc["measure"] = measure
    if coeffs is not None:
        doc["harmonic"] = {"coeffs": coeffs}
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def _cone(tmp_path, w0=math.pi):
    return _scene(tmp_path, "cone.json", {"atoms": [{"pos": [0, 0], "weight": w0}]})


def _square(tmp_path):
    path = tmp_path / "square.csv"
    path.write_text("# closed=true\n-0.5,-0.5\n0.5,-0.5\n0.5,0.5\n-0.5,0.5\n")
    return str(path)


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_dist_on_cone(tmp_path):
    code, out, _ = call("dist", "--scene", _cone(tmp_path), "--from", "0,0", "--to", "1,0")
    assert code == 0
    assert json.loads(out)["distance"] == pytest.approx(2.0, rel=5e-3)


def test_dist_writes_svg(tmp_path):
    svg = tmp_path / "w.svg"
    code, _, _ = call("dist", "--scene", _cone(tmp_path, -math.pi), "--from=-1,0.1", "--to=1,0.1", "--svg", str(svg))
    assert code == 0
    text = svg.read_text()
    assert text.startswith("<?xml") and "<polyline" in text and text.rstrip().endswith("</svg>")


def test_gaussbonnet_square(tmp_path):
    sc = _scene(tmp_path, "atom.json", {"atoms": [{"pos": [0, 0], "weight": 1.0}]})
    code, out, _ = call("gaussbonnet", "--scene", sc, "--polyline", _square(tmp_path))
    assert code == 0
    assert abs(json.loads(out)["defect"]) < 1e-10


def test_unknown_flag_is_usage_error(tmp_path):
    code, _, err = call("dist", "--scene", _cone(tmp_path), "--bogus")
    assert code == 2 and err


def test_unknown_subcommand_is_usage_error():
    assert call("nonsense")[0] == 2


def test_domain_error_exit_code(tmp_path):
    bad = _scene(tmp_path, "bad.json", {"atoms": [{"pos": [5, 0], "weight": 1.0}]})
    code, _, err = call("eval", "--scene", bad, "--at", "0,0")
    assert code == 1
    assert "outside" in json.loads(err)["error"]


def test_eval_point_and_what(tmp_path):
    sc = _scene(tmp_path, "two.json", {"atoms": [{"pos": [0, 0], "weight": TWO_PI}]}, radius=3.0)
    code, out, _ = call("eval", "--scene", sc, "--point", "2,0", "--what", "lambda")
    assert code == 0 and json.loads(out) == {"value": 0.25}
    code, out, _ = call("eval", "--scene", sc, "--at", "0,0")
    row = json.loads(out)["rows"][0]
    assert row["class"] == "infinity" and row["lambda"] == "inf"


def test_csv_output(tmp_path):
    sc = _scene(tmp_path, "flat.json")
    code, out, _ = call("eval", "--scene", sc, "--at", "0,0", "--at", "1,0", "--csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0][:2] == ["x", "y"] and len(rows) == 3


def test_curve_ops(tmp_path):
    sq = _square(tmp_path)
    assert json.loads(call("curve", "--file", sq, "--op", "phi", "--zeta", "0,0")[1])["value"] == pytest.approx(TWO_PI)
    assert json.loads(call("curve", "--polyline", sq, "--op", "length")[1])["value"] == 4.0
    assert call("curve", "--file", sq, "--op", "phi")[0] == 2


def test_length_and_area(tmp_path):
    sc = _scene(tmp_path, "flat.json")
    code, out, _ = call("length", "--scene", sc, "--polyline", _square(tmp_path))
    assert json.loads(out)["length"] == pytest.approx(4.0)
    code, out, _ = call("area", "--scene", sc, "--rect", "0,0,1,1")
    assert json.loads(out)["area"] == pytest.approx(1.0)


def test_turn(tmp_path):
    sc = _scene(tmp_path, "lin.json", coeffs=[[0, 0], [1, 0]])
    seg = tmp_path / "seg.csv"
    seg.write_text("0,0\n0,1\n")
    code, out, _ = call("turn", "--scene", sc, "--polyline", str(seg), "--side", "left")
    assert json.loads(out)["left_turn"] == pytest.approx(-1.0)


def test_cone_subcommand():
    code, out, _ = call("cone", "--omega0", str(math.pi), "--op", "sector", "--theta", str(math.pi))
    assert code == 0 and json.loads(out)["sector_angle"] == pytest.approx(math.pi / 2)
    code, out, _ = call("cone", "--omega0=-3.141592653589793", "--op", "circle", "--radius", "2")
    assert json.loads(out)["circle_length"] == pytest.approx(TWO_PI * 2 ** 1.5)
    assert call("cone", "--omega0", "1", "--op", "dist")[0] == 2


def test_localize(tmp_path):
    sc = _scene(tmp_path, "far.json", {"atoms": [{"pos": [5, 0], "weight": 1.0}]}, radius=10.0)
    code, out, _ = call("localize", "--scene", sc, "--center", "0,0", "--radius", "0.5", "--segments", "256")
    res = json.loads(out)
    assert code == 0 and res["within_tolerance"] and res["residual"] < 1e-5


def test_stretch_emit(tmp_path):
    sc = _scene(tmp_path, "flat.json", radius=3.0)
    emitted = tmp_path / "st.json"
    code, out, _ = call("stretch", "--scene", sc, "--center", "0,0", "--radius", "0.5", "--emit", str(emitted))
    res = json.loads(out)
    assert code == 0 and res["c"] == pytest.approx(4.0)
    assert json.loads(emitted.read_text())["domain"]["radius"] == pytest.approx(6.0)


def test_converge_csv_and_svg(tmp_path):
    sc = _scene(tmp_path, "flat.json")
    pairs = tmp_path / "pairs.csv"
    pairs.write_text("x1,y1,x2,y2\n0.1,0.2,-0.5,0.3\n")
    out_csv, out_svg = tmp_path / "t.csv", tmp_path / "t.svg"
    code, _, _ = call(
        "converge", "--scene", sc, "--pairs", str(pairs), "--scales", "0.2,0.1",
        "--grid", "32", "--csv", str(out_csv), "--svg", str(out_svg),
    )
    assert code == 0
    rows = list(csv.reader(out_csv.open()))
    assert rows[0] == ["h", "sup_discrepancy", "mean_discrepancy"] and len(rows) == 3
    assert "<polyline" in out_svg.read_text()


def test_output_is_reproducible(tmp_path):
    sc = _scene(tmp_path, "mix.json", {"atoms": [{"pos": [0.2, 0.1], "weight": 1.0}, {"pos": [-0.4, 0], "weight": -1.0}]})
    a = call("dist", "--scene", sc, "--from=-0.8,0.3", "--to", "0.9,-0.2", "--threads", "2")
    b = call("dist", "--scene", sc, "--from=-0.8,0.3", "--to", "0.9,-0.2")
    assert a == b
