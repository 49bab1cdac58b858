import io
import json
from pathlib import Path

import numpy as np
import pytest

from orbitlab.cli import (DEFAULT_CONFIG, ValidationError, dumps, load_instance, main,
                          parse_instance, save_instance)

INSTANCES = Path(__file__).resolve().parents[1] / "instances"
MINIMAL = {"source": {"masses": [1], "p0": 1, "U0": [2], "p1": "inf", "U1": [3]},
           "a": [5], "phi": {"kind": "power", "theta": 0.5}}


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def test_minimal_defaults():
    inst = parse_instance(MINIMAL)
    assert inst.config == DEFAULT_CONFIG and inst.target is None and inst.b is None


def test_zero_weight_names_field():
    bad = json.loads(json.dumps(MINIMAL))
    bad["source"]["U0"] = [0]
    with pytest.raises(ValidationError, match=r"U0\[0\]"):
        parse_instance(bad)


def test_unknown_phi_kind_lists_allowed():
    bad = dict(MINIMAL, phi={"kind": "spline"})
    with pytest.raises(ValidationError) as exc:
        parse_instance(bad)
    for kind in ("power", "samples", "k_of_a"):
        assert kind in str(exc.value)


def test_round_trip(tmp_path):
    inst = load_instance(INSTANCES / "orbit.json")
    save_instance(inst, tmp_path / "x.json")
    again = load_instance(tmp_path / "x.json")
    assert again.to_dict() == inst.to_dict()


def test_dumps_is_canonical():
    text = dumps({"b": np.float64(0.1), "a": [np.inf, 1], "c": np.array([1.0, 2.0])})
    assert text == dumps(json.loads(text))
    assert text.index('"a"') < text.index('"b"')


def test_balance_power_half():
    code, out, _ = run("balance", INSTANCES / "power_half.json", "--q", 2)
    assert code == 0
    rows = [line.split(",") for line in out.strip().splitlines()[1:]]
    for n, t, _ in rows:
        assert float(t) == pytest.approx(4.0 ** int(n), rel=1e-8)


def test_k_eval_grid():
    code, out, _ = run("k-eval", INSTANCES / "minimal.json", "--grid-log2-min", -2,
                       "--grid-log2-max", 2, "--grid-log2-steps", 5)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "s,t,K" and len(lines) == 6
    # single atom: K(1, t) = min(2, 3t) * 5
    t, k = map(float, lines[3].split(",")[1:])
    assert k == pytest.approx(5 * min(2.0, 3.0 * t))


@pytest.mark.parametrize("cmd", ["cl-norm", "means-norm"])
def test_json_commands(cmd):
    code, out, _ = run(cmd, INSTANCES / "power_half.json")
    assert code == 0 and "value" in json.loads(out)
    assert run(cmd, INSTANCES / "power_half.json")[1] == out


def test_orbit_check():
    code, out, _ = run("orbit-check", INSTANCES / "orbit.json")
    assert code == 0 and json.loads(out)["status"] == "ok"
    code, _, err = run("orbit-check", INSTANCES / "minimal.json")
    assert code == 1 and "b" in err


def test_missing_instance_and_bad_file(tmp_path):
    assert run("cl-norm")[0] == 1
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert run("cl-norm", broken)[0] == 1


def test_harness_lines():
    code, out, _ = run("harness", "--seed", 3, "--trials", 3)
    lines = [json.loads(line) for line in out.strip().splitlines()]
    assert code == 0 and [ln["trial"] for ln in lines] == [0, 1, 2]
    assert run("harness", "--seed", 3, "--trials", 3)[1] == out
