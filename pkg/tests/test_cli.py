from __future__ import annotations

import json
from fractions import Fraction

import pytest

from maxmono.cli import main, parse_norm
from maxmono.core import Norm, decode_graph
from maxmono.monotonicity import cyclic_sum

DECREASING = {"graph": {"dim": 1, "pairs": [{"x": [0], "xstar": [1]}, {"x": [1], "xstar": [0]}]}}
GRADIENT = {"graph": {"dim": 1, "pairs": [{"x": [t], "xstar": [t]} for t in (-1, 0, 1)]}}


def run(tmp_path, capsys, argv, doc=None, raw=None):
    if doc is not None or raw is not None:
        path = tmp_path / "in.json"
        path.write_text(raw if raw is not None else json.dumps(doc))
        argv = argv + ["--input", str(path)]
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_check_monotone_failure_exit_code(tmp_path, capsys):
    code, out, _ = run(tmp_path, capsys, ["check-monotone", "--backend", "exact"], DECREASING)
    payload = json.loads(out)
    assert code == 1 and payload["verdict"] is False
    assert payload["result"]["value"] == "-1"


def test_check_monotone_success(tmp_path, capsys):
    code, out, _ = run(tmp_path, capsys, ["check-monotone"], GRADIENT)
    assert code == 0 and json.loads(out)["verdict"] is True


def test_check_cyclic_bounded_and_full(tmp_path, capsys):
    # x -> (x2, -x1) sampled at (1, 1), (0, 1), (1, 0)
    rot = {"graph": {"dim": 2, "pairs": [{"x": [1, 1], "xstar": [1, -1]}, {"x": [0, 1], "xstar": [1, 0]},
                                         {"x": [1, 0], "xstar": [0, -1]}]}}
    code, out, _ = run(tmp_path, capsys, ["check-cyclic", "--n", "3", "--backend", "exact"], rot)
    res = json.loads(out)["result"]
    g = decode_graph(rot["graph"], exact=True)
    assert code == 1 and Fraction(res["sum"]) == cyclic_sum(g, res["cycle"]) == -1
    code, _, _ = run(tmp_path, capsys, ["check-cyclic", "--n", "2", "--backend", "exact"], rot)
    assert code == 0


def test_gallery_exact(capsys):
    code = main(["gallery", "gossez-4-5", "--backend", "exact"])
    payload = json.loads(capsys.readouterr().out)
    assert code == 0 and payload["verdict"] is True


def test_gallery_table(capsys):
    assert main(["gallery", "rotation-2-23", "--table"]) == 0
    assert "rotation-2-23: PASS" in capsys.readouterr().out


def test_reconstruct(tmp_path, capsys):
    code, out, _ = run(tmp_path, capsys, ["reconstruct", "--base", "0", "--backend", "exact"], GRADIENT)
    res = json.loads(out)["result"]
    assert code == 0
    # lower potential of the sampled identity from x = -1: 0, then -1, then -1 + 0
    assert res["node_values"] == ["0", "-1", "-1"]


def test_reconstruct_rejects_non_cyclic(tmp_path, capsys):
    code, out, _ = run(tmp_path, capsys, ["reconstruct", "--backend", "exact"], DECREASING)
    assert code == 1 and json.loads(out)["verdict"] is False


def test_malformed_json_is_a_usage_error(tmp_path, capsys):
    code, _, err = run(tmp_path, capsys, ["check-monotone"], raw="{bad")
    assert code == 2 and "malformed JSON" in err


def test_missing_key_is_a_usage_error(tmp_path, capsys):
    code, _, err = run(tmp_path, capsys, ["subgrad-test"], {"x": [0]})
    assert code == 2 and "function" in err


def test_exact_backend_rejects_tolerance_override(tmp_path, capsys):
    code, _, err = run(tmp_path, capsys, ["check-monotone", "--backend", "exact", "--tol-abs", "1e-3"], GRADIENT)
    assert code == 2 and "tolerance" in err


def test_unknown_command_and_gallery_name(capsys):
    assert main(["frobnicate"]) == 2
    assert main(["gallery", "nope"]) == 2
    capsys.readouterr()


def test_output_is_deterministic_for_a_seed(tmp_path, capsys):
    doc = {"region": {"kind": "ball", "center": [0, 0], "radius": 1}, "x": [2.0, 1.0]}
    outs = [run(tmp_path, capsys, ["vi-check", "--seed", "7"], doc)[1] for _ in range(2)]
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["verdict"] is True


def test_output_file_and_graph_round_trip(tmp_path, capsys):
    out = tmp_path / "inv.json"
    code, _, _ = run(tmp_path, capsys, ["invert", "--backend", "exact", "--output", str(out)], DECREASING)
    assert code == 0
    inv = json.loads(out.read_text())
    # feeding a previous result back in is accepted
    path = tmp_path / "inv_in.json"
    path.write_text(json.dumps(inv))
    assert main(["invert", "--backend", "exact", "--input", str(path)]) == 0
    twice = json.loads(capsys.readouterr().out)["result"]
    assert decode_graph(twice, exact=True) == decode_graph(DECREASING["graph"], exact=True)


def test_numeric_commands(tmp_path, capsys):
    code, out, _ = run(tmp_path, capsys, ["dualmap", "--norm", "euclidean", "--backend", "exact"], {"x": [3, 4]})
    assert code == 0 and json.loads(out)["result"]["J"] == ["3", "4"]
    code, out, _ = run(tmp_path, capsys, ["project", "--backend", "exact"],
                       {"region": {"kind": "box", "lo": [0, 0], "hi": [1, 1]}, "x": [2, "1/2"]})
    assert json.loads(out)["result"]["projection"] == ["1", "1/2"]
    step = {"operator": {"breakpoints": [0], "pieces": [0, 1]}, "ystar": "1/2"}
    code, out, _ = run(tmp_path, capsys, ["resolvent", "--backend", "exact"], step)
    assert code == 0 and json.loads(out)["result"]["x"] == "0"
    code, out, _ = run(tmp_path, capsys, ["df-extend", "--constant", "2", "--backend", "exact"],
                       {"graph": {"dim": 1, "pairs": [{"x": [-1], "xstar": [-1]}, {"x": [1], "xstar": [1]}]},
                        "region": {"kind": "box", "lo": [-1], "hi": [1]}})
    assert code == 0 and json.loads(out)["result"]["xstar"] == ["1"]


def test_witness_and_subgrad(tmp_path, capsys):
    doc = {"z": [0], "zstar": [0], "y": [1], "ystar": [-1]}
    code, out, _ = run(tmp_path, capsys, ["witness-4-7", "--lambda", "1/2", "--backend", "exact"], doc)
    res = json.loads(out)["result"]
    assert code == 0 and res["r"] == "1/4" and res["b"] == ["1/2"]
    f = {"repr": "norm", "norm": {"kind": "euclidean"}, "dim": 1}
    code, _, _ = run(tmp_path, capsys, ["subgrad-test", "--backend", "exact"], {"function": f, "x": [0], "xstar": ["1/2"]})
    assert code == 0
    code, _, _ = run(tmp_path, capsys, ["subgrad-test", "--backend", "exact"], {"function": f, "x": [0], "xstar": [2]})
    assert code == 1


def test_parse_norm():
    assert parse_norm("lp:3") == Norm.lp(3)
    assert parse_norm(None) == Norm.euclidean()
    with pytest.raises(ValueError):
        parse_norm("l7")


def test_table_format(tmp_path, capsys):
    code, out, _ = run(tmp_path, capsys, ["check-monotone", "--table", "--backend", "exact"], DECREASING)
    assert code == 1 and "verdict: false" in out
