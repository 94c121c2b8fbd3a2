import json

import numpy as np
import pytest

from palab import io
from palab.game import GameError
from palab.instances import contract_instance, example_5_1, load_preset

GEN = """{
  "type": "generalized",
  "space": {"kind": "simplex", "d": 2},
  "actions": ["a", "b"],
  "u_lin": [[1, 0], [0, 1]],
  "v_lin": [[1, 0], [0, 1]],
  "constraint": {"kind": "mean", "c0": [0.4, 0.6]}
}
"""


def test_round_trip_generalized():
    inst = io.loads_instance(GEN)
    assert inst.constrained and np.allclose(inst.mean, [0.4, 0.6])
    back = io.loads_instance(io.dumps_instance(inst))
    assert io.instance_to_dict(back) == io.instance_to_dict(inst)


@pytest.mark.parametrize("inst", [example_5_1(0.3), load_preset("contract_box_demo"),
                                  contract_instance([[1.0, 0.0], [0.0, 1.0]], [0, 1], [0, 0.1],
                                                    "expected_payment", R=1.0)])
def test_round_trip_builders(inst, tmp_path):
    path = tmp_path / "i.json"
    io.save_instance(inst, path)
    assert io.instance_to_dict(io.load_instance(path)) == io.instance_to_dict(inst)


def test_unknown_field_reports_line():
    text = GEN.replace('"actions"', '"colour": 1,\n  "actions"')
    with pytest.raises(io.ParseError) as e:
        io.loads_instance(text, "x.json")
    assert e.value.line == 4
    assert "colour" in str(e.value) and "x.json:4" in str(e.value)


def test_bad_shape_reports_line():
    text = GEN.replace('"v_lin": [[1, 0], [0, 1]]', '"v_lin": [[1, 0]]')
    with pytest.raises(io.ParseError) as e:
        io.loads_instance(text)
    assert e.value.line == 6 and "shape" in str(e.value)


def test_invalid_json_reports_line():
    with pytest.raises(io.ParseError) as e:
        io.loads_instance('{\n  "type": "generalized",\n  oops\n}')
    assert e.value.line == 3


@pytest.mark.parametrize("edit, msg", [
    (('"simplex", "d": 2', '"ball", "d": 2'), "space kind"),
    (('"kind": "mean"', '"kind": "median"'), "constraint kind"),
    (('"c0": [0.4, 0.6]', '"c0": [0.4, 0.7]'), "not in the decision space"),
    (('"type": "generalized"', '"type": "matrix"'), "instance type"),
])
def test_instance_validation_errors(edit, msg):
    with pytest.raises(GameError, match=msg):
        io.loads_instance(GEN.replace(*edit))


def test_missing_field():
    obj = json.loads(GEN)
    del obj["u_lin"]
    with pytest.raises(io.ParseError, match="u_lin"):
        io.instance_from_dict(obj)


def test_missing_file(tmp_path):
    with pytest.raises(io.ParseError, match="cannot read"):
        io.load_instance(tmp_path / "nope.json")


SPEC = {
    "name": "demo",
    "instance": {"preset": "example5_1:mu0=0.3"},
    "policy": {"kind": "robust_fixed"},
    "learner": {"kind": "exp3", "seed": 1},
    "T": [64, 128],
    "seeds": [0, 1],
    "checks": ["regret_lower"],
}


def test_spec_normalization():
    out = io.parse_spec(json.dumps(SPEC))
    assert out["T"] == [64, 128] and out["replicas"] == 1 and out["mode"] == "generalized"
    assert out["outputs"] == {"csv": "runs.csv", "report": "report.json", "per_round": True}
    assert io.resolve_instance(out["instance"]).prior[0] == pytest.approx(0.3)


def test_spec_relative_path(tmp_path):
    (tmp_path / "inst.json").write_text(GEN)
    spec = dict(SPEC, instance={"path": "inst.json"})
    (tmp_path / "s.json").write_text(json.dumps(spec))
    out = io.load_spec(tmp_path / "s.json")
    assert io.resolve_instance(out["instance"]).constrained


def test_spec_inline_instance():
    spec = dict(SPEC, instance=json.loads(GEN))
    assert io.resolve_instance(io.parse_spec(json.dumps(spec))["instance"]).d == 2


@pytest.mark.parametrize("patch, msg", [
    ({"checks": ["thm_9"]}, "unknown check"),
    ({"T": 0}, "T must"),
    ({"T": [10, 2.5]}, "T must"),
    ({"seeds": ["a"]}, "seeds"),
    ({"replicas": 0}, "replicas"),
    ({"mode": "bandit"}, "mode"),
    ({"policy": {"kind": "greedy"}}, "policy kind"),
    ({"learner": {"kind": "ucb"}}, "learner kind"),
    ({"learner": {"kind": "exp3", "lr": 1}}, "unknown field"),
    ({"outputs": {"png": "x"}}, "unknown field"),
    ({"instance": 3}, "instance must"),
    ({"extra": 1}, "unknown field"),
])
def test_spec_errors(patch, msg):
    with pytest.raises(io.ParseError, match=msg):
        io.parse_spec(json.dumps(dict(SPEC, **patch), indent=2))


def test_spec_error_line():
    text = json.dumps(dict(SPEC, checks=["thm_9"]), indent=2)
    with pytest.raises(io.ParseError) as e:
        io.parse_spec(text, "s.json")
    assert text.splitlines()[e.value.line - 1].strip().startswith('"checks"')
