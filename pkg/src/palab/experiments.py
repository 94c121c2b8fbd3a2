"""Execute experiment specs and write their CSV and report artifacts.

Outputs depend only on the spec: floats are written with ``repr`` and the
report has sorted keys and no timestamps, so reruns are byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import io, sim, solvers
from .game import PersuasionInstance
from .learners import regret_from_arrays

SUMMARY_COLUMNS = ("T", "seed", "replica", "avg_u", "avg_u_expected", "avg_v", "creg", "csreg")
CURVE_COLUMNS = ("T", "seed", "replica", "t", "creg", "csreg", "avg_u_expected")


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _checkpoints(T: int) -> list:
    pts, t = [], 64
    while t < T:
        pts.append(t)
        t *= 2
    return pts + [T]


def regret_curve(log: sim.RunLog) -> list:
    """(t, creg, csreg, running average expected utility) at doubling checkpoints."""
    out = []
    for t in _checkpoints(log.T):
        c, cs = regret_from_arrays(log.s[:t], log.a[:t], log.R[:t])
        out.append((t, c, cs, float(log.u_exp[:t].mean())))
    return out


def make_config(spec: dict, inst, T: int, seed: int) -> sim.SimConfig:
    return sim.SimConfig(inst, spec["policy"], spec["learner"], T, seed, spec["mode"], spec["replicas"])


def validate(spec: dict):
    """Build instance, analysis and one config per T without running anything."""
    inst = io.resolve_instance(spec["instance"])
    gen = inst.to_generalized() if isinstance(inst, PersuasionInstance) else inst
    an = solvers.analyze(gen)
    for T in spec["T"]:
        make_config(spec, inst, T, spec["seeds"][0])
    return inst, gen, an


def run_spec(spec: dict, out_dir=None) -> dict:
    """Run every (T, seed, replica) of a spec; returns the report dict.

    Checks aggregate all seeds and replicas at the same T.
    """
    inst, gen, an = validate(spec)
    rows, curves, per_T = [], [], []
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    for T in spec["T"]:
        jobs = [(make_config(spec, inst, T, seed), r) for seed in spec["seeds"] for r in range(spec["replicas"])]
        logs = sim.run_many(jobs)
        for (cfg, r), log in zip(jobs, logs):
            rows.append((T, cfg.seed, r, log.avg_u, log.avg_u_exp, log.avg_v, log.creg, log.csreg))
            for t, c, cs, ue in regret_curve(log):
                curves.append((T, cfg.seed, r, t, c, cs, ue))
            if out is not None and spec["outputs"]["per_round"]:
                rd = out / "rounds"
                rd.mkdir(exist_ok=True)
                log.write_csv(rd / f"{spec['name']}_T{T}_seed{cfg.seed}_rep{r}.csv")
        summ = sim.summarize(logs)
        checks = []
        for name in spec["checks"]:
            rep = sim.bound_check(summ, an, name, threshold=float(spec["thresholds"].get(name, 0.25)), instance=gen)
            checks.append(rep.to_dict())
        per_T.append({
            "T": T,
            "runs": summ.n,
            "avg_u_expected": summ.stat("avg_u_exp"),
            "avg_u": summ.stat("avg_u"),
            "creg_per_round": {"mean": float(summ.creg.mean() / T), "median": float(np.median(summ.creg) / T)},
            "csreg_per_round": {"mean": float(summ.csreg.mean() / T), "median": float(np.median(summ.csreg) / T)},
            "checks": checks,
        })
    report = {
        "name": spec["name"],
        "mode": spec["mode"],
        "instance": gen.name,
        "analysis": an.to_dict(),
        "policy": spec["policy"],
        "learner": spec["learner"],
        "results": per_T,
        "passed": all(c["status"] != sim.FAIL for r in per_T for c in r["checks"]),
    }
    if out is not None:
        _write_table(out / spec["outputs"]["csv"], SUMMARY_COLUMNS, rows)
        _write_table(out / (Path(spec["outputs"]["csv"]).stem + "_curves.csv"), CURVE_COLUMNS, curves)
        (out / spec["outputs"]["report"]).write_text(json.dumps(_plain(report), indent=2, sort_keys=True) + "\n")
    return report


def _write_table(path, cols, rows) -> None:
    lines = [",".join(cols)] + [",".join(_fmt(x) for x in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def _plain(obj):
    """Make a report JSON-serializable (numpy scalars, arrays, tuples, inf)."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    return str(obj)
