"""JSON file formats for instances and experiment specs.

Parsing is strict: unknown fields are rejected and every error carries the
line of the offending field when it can be located.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .game import DecisionSpace, GameError, Instance, PersuasionInstance


class ParseError(GameError):
    def __init__(self, msg: str, line: int | None = None, source: str = ""):
        self.line = line
        self.source = source
        where = source or "<input>"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {msg}")


class _Ctx:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source

    def line_of(self, key: str):
        m = re.search(r'"' + re.escape(key) + r'"\s*:', self.text)
        return self.text.count("\n", 0, m.start()) + 1 if m else None

    def fail(self, msg, key=None):
        raise ParseError(msg, self.line_of(key) if key else None, self.source)


GEN_FIELDS = {"type", "name", "space", "actions", "n_signals", "u_lin", "u_off", "v_lin", "v_off",
              "constraint", "meta"}
PERS_FIELDS = {"type", "name", "states", "actions", "prior", "sender_u", "receiver_v", "n_signals", "meta"}
SPEC_FIELDS = {"name", "instance", "mode", "policy", "learner", "T", "seeds", "replicas", "checks",
               "outputs", "thresholds"}


def _load(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, source) from None


def _matrix(ctx, obj, key, shape):
    if key not in obj:
        ctx.fail(f"missing field {key!r}")
    try:
        a = np.array(obj[key], dtype=float)
    except (TypeError, ValueError):
        ctx.fail(f"{key!r} must be numeric", key)
    if a.shape != shape:
        ctx.fail(f"{key!r} has shape {a.shape}, expected {shape}", key)
    return a


def _check_fields(ctx, obj, allowed, what):
    if not isinstance(obj, dict):
        ctx.fail(f"{what} must be a JSON object")
    for k in obj:
        if k not in allowed:
            ctx.fail(f"unknown field {k!r} in {what}", k)


def instance_from_dict(obj: dict, ctx: _Ctx | None = None):
    ctx = ctx or _Ctx(json.dumps(obj, indent=1), "<dict>")
    kind = obj.get("type", "persuasion" if "states" in obj else "generalized")
    if kind == "persuasion":
        _check_fields(ctx, obj, PERS_FIELDS, "persuasion instance")
        for k in ("states", "actions", "prior", "sender_u", "receiver_v"):
            if k not in obj:
                ctx.fail(f"missing field {k!r}")
        k, n = len(obj["states"]), len(obj["actions"])
        try:
            return PersuasionInstance(
                tuple(obj["states"]), tuple(obj["actions"]), _matrix(ctx, obj, "prior", (k,)),
                _matrix(ctx, obj, "sender_u", (k, n)), _matrix(ctx, obj, "receiver_v", (k, n)),
                int(obj.get("n_signals", n + 1)), obj.get("name", ""), dict(obj.get("meta", {})))
        except ParseError:
            raise
        except GameError as exc:
            ctx.fail(str(exc))
    if kind != "generalized":
        ctx.fail(f"unknown instance type {kind!r}", "type")
    _check_fields(ctx, obj, GEN_FIELDS, "instance")
    for key in ("space", "actions", "u_lin", "v_lin"):
        if key not in obj:
            ctx.fail(f"missing field {key!r}")
    sp = obj["space"]
    _check_fields(ctx, sp, {"kind", "d", "lo", "hi"}, "space")
    if sp.get("kind") == "simplex":
        space = DecisionSpace.simplex(int(sp["d"]))
    elif sp.get("kind") == "box":
        try:
            space = DecisionSpace.box(np.array(sp["lo"], float), np.array(sp["hi"], float))
        except (KeyError, GameError, ValueError) as exc:
            ctx.fail(f"bad box space: {exc}", "space")
    else:
        ctx.fail(f"space kind must be 'simplex' or 'box', got {sp.get('kind')!r}", "space")
    d, n = space.d, len(obj["actions"])
    u_off = _matrix(ctx, obj, "u_off", (n,)) if "u_off" in obj else np.zeros(n)
    v_off = _matrix(ctx, obj, "v_off", (n,)) if "v_off" in obj else np.zeros(n)
    con = obj.get("constraint", {"kind": "none"})
    _check_fields(ctx, con, {"kind", "c0"}, "constraint")
    if con.get("kind") == "none":
        mean = None
    elif con.get("kind") == "mean":
        mean = _matrix(ctx, con, "c0", (d,))
    else:
        ctx.fail(f"constraint kind must be 'none' or 'mean', got {con.get('kind')!r}", "constraint")
    try:
        return Instance(space, tuple(obj["actions"]), _matrix(ctx, obj, "u_lin", (d, n)), u_off,
                        _matrix(ctx, obj, "v_lin", (d, n)), v_off, int(obj.get("n_signals", n)),
                        mean, obj.get("name", ""), dict(obj.get("meta", {})))
    except ParseError:
        raise
    except GameError as exc:
        ctx.fail(str(exc))


def _lst(a):
    # + 0.0 folds negative zeros so files stay clean
    return (np.asarray(a, dtype=float) + 0.0).tolist()


def instance_to_dict(inst) -> dict:
    if isinstance(inst, PersuasionInstance):
        return {
            "type": "persuasion",
            "name": inst.name,
            "states": list(inst.states),
            "actions": list(inst.actions),
            "prior": _lst(inst.prior),
            "sender_u": _lst(inst.sender_u),
            "receiver_v": _lst(inst.receiver_v),
            "n_signals": inst.n_signals,
            "meta": dict(inst.meta),
        }
    sp = inst.space
    space = {"kind": "simplex", "d": sp.d} if sp.kind == "simplex" else \
        {"kind": "box", "lo": _lst(sp.lo), "hi": _lst(sp.hi)}
    con = {"kind": "none"} if inst.mean is None else {"kind": "mean", "c0": _lst(inst.mean)}
    return {
        "type": "generalized",
        "name": inst.name,
        "space": space,
        "actions": list(inst.actions),
        "n_signals": inst.n_signals,
        "u_lin": _lst(inst.u_lin),
        "u_off": _lst(inst.u_off),
        "v_lin": _lst(inst.v_lin),
        "v_off": _lst(inst.v_off),
        "constraint": con,
        "meta": dict(inst.meta),
    }


def loads_instance(text: str, source: str = "<string>"):
    return instance_from_dict(_load(text, source), _Ctx(text, source))


def load_instance(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read: {exc.strerror}", None, str(path)) from None
    return loads_instance(text, str(path))


def dumps_instance(inst) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def save_instance(inst, path) -> None:
    Path(path).write_text(dumps_instance(inst))


# ------------------------------------------------------------ experiments

def load_spec(path) -> dict:
    """Read and validate an experiment spec; returns a normalized dict.

    Relative instance paths resolve against the spec's directory.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read: {exc.strerror}", None, str(path)) from None
    return parse_spec(text, str(path), base=path.parent)


def parse_spec(text: str, source: str = "<spec>", base=None) -> dict:
    from . import sim

    ctx = _Ctx(text, source)
    obj = _load(text, source)
    _check_fields(ctx, obj, SPEC_FIELDS, "experiment spec")
    for key in ("instance", "policy", "learner", "T"):
        if key not in obj:
            ctx.fail(f"missing field {key!r}")
    out = {"name": str(obj.get("name", Path(source).stem)), "mode": obj.get("mode", sim.GENERALIZED)}
    if out["mode"] not in (sim.GENERALIZED, sim.PERSUASION):
        ctx.fail(f"mode must be 'generalized' or 'persuasion', got {out['mode']!r}", "mode")
    src = obj["instance"]
    if isinstance(src, dict) and set(src) == {"preset"}:
        out["instance"] = {"preset": str(src["preset"])}
    elif isinstance(src, dict) and set(src) == {"path"}:
        p = Path(src["path"])
        if base is not None and not p.is_absolute():
            p = Path(base) / p
        out["instance"] = {"path": str(p)}
    elif isinstance(src, dict):
        out["instance"] = {"inline": src}
    else:
        ctx.fail("instance must be {'preset': ...}, {'path': ...} or an inline instance", "instance")
    pol, lrn = obj["policy"], obj["learner"]
    _check_fields(ctx, pol, {"kind", "params"}, "policy")
    _check_fields(ctx, lrn, {"kind", "params", "seed", "feedback_mode"}, "learner")
    if pol.get("kind") not in sim.POLICY_KINDS:
        ctx.fail(f"unknown policy kind {pol.get('kind')!r}; expected one of {sim.POLICY_KINDS}", "policy")
    if lrn.get("kind") not in sim.LEARNER_KINDS + sim.STATIC_KINDS:
        ctx.fail(f"unknown learner kind {lrn.get('kind')!r}", "learner")
    out["policy"], out["learner"] = pol, lrn
    Ts = obj["T"] if isinstance(obj["T"], list) else [obj["T"]]
    if not Ts or not all(isinstance(t, int) and t >= 1 for t in Ts):
        ctx.fail("T must be a positive integer or a list of them", "T")
    out["T"] = Ts
    seeds = obj.get("seeds", [0])
    seeds = seeds if isinstance(seeds, list) else [seeds]
    if not all(isinstance(s, int) for s in seeds):
        ctx.fail("seeds must be integers", "seeds")
    out["seeds"] = seeds
    reps = obj.get("replicas", 1)
    if not isinstance(reps, int) or reps < 1:
        ctx.fail("replicas must be a positive integer", "replicas")
    out["replicas"] = reps
    checks = obj.get("checks", [])
    for c in checks:
        if c not in sim.THEOREMS:
            ctx.fail(f"unknown check {c!r}; expected one of {sim.THEOREMS}", "checks")
    out["checks"] = list(checks)
    outputs = obj.get("outputs", {})
    _check_fields(ctx, outputs, {"csv", "report", "per_round"}, "outputs")
    out["outputs"] = {"csv": outputs.get("csv", "runs.csv"), "report": outputs.get("report", "report.json"),
                      "per_round": bool(outputs.get("per_round", True))}
    out["thresholds"] = dict(obj.get("thresholds", {}))
    return out


def resolve_instance(src: dict):
    from .instances import load_preset

    if "preset" in src:
        return load_preset(src["preset"])
    if "path" in src:
        return load_instance(src["path"])
    return instance_from_dict(src["inline"])
