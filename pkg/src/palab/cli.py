"""Command-line entry point: ``palab {analyze,objectives,construct,run,accept}``.

Exit codes: 0 success, 1 a check failed, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import constructions, experiments, io, solvers
from .game import GameError, PersuasionInstance
from .instances import PRESETS, load_preset

OK, CHECK_FAILED, USAGE = 0, 1, 2
DEFAULT_DELTAS = (0.0, 0.001, 0.01, 0.1)


def _instance(args):
    if bool(args.preset) == bool(args.instance):
        raise GameError("give exactly one of --preset or --instance")
    inst = load_preset(args.preset) if args.preset else io.load_instance(args.instance)
    return inst.to_generalized() if isinstance(inst, PersuasionInstance) else inst


def _emit(report: dict, text: list, out) -> None:
    print("\n".join(text))
    if out:
        Path(out).write_text(json.dumps(experiments._plain(report), indent=2, sort_keys=True) + "\n")


def _fmt(x):
    return "n/a" if x is None else f"{x:.6g}"


def cmd_analyze(args) -> int:
    inst = _instance(args)
    an = solvers.analyze(inst)
    deltas = args.delta or list(DEFAULT_DELTAS)
    text = [
        f"instance: {inst.name or '(unnamed)'}",
        f"U*: {an.U_star:.12g}",
        f"G: {an.G:.12g}",
        f"B: {an.B:.6g}",
        f"L: {an.L:.6g}",
        f"diam: {an.diam:.6g}",
        f"norm: {an.norm_used}",
        f"dist(C, boundary): {_fmt(an.dist_C_boundary)}",
        f"p0: {_fmt(an.p0)}",
    ]
    if not an.assumption_ok:
        text.append("G <= 0: positive-gap assumption violated (some action is never strictly optimal)")
    bounds = {}
    for d in deltas:
        bs = solvers.theorem_bounds(an, d)
        bounds[str(d)] = bs.to_dict()
        text.append(f"bounds at delta={d:g}:")
        for name in sorted(bs):
            b = bs[name]
            text.append(f"  {name}: {_fmt(b.value) if b.applicable else 'inapplicable'} ({b.note})")
    _emit({"analysis": an.to_dict(), "bounds": bounds}, text, args.out)
    return OK


def cmd_objectives(args) -> int:
    inst = _instance(args)
    deltas = args.delta or [0.0, 0.01]
    res = solvers.search_objectives(inst, deltas, budget=args.budget, seed=args.seed)
    text = [f"U*: {res.U_star:.12g}", f"candidates: {res.n_candidates} (values are a {res.label})"]
    rep = {"U_star": res.U_star, "label": res.label, "deltas": deltas, "values": {}, "certificates": {}}
    for j, d in enumerate(deltas):
        row = {n: float(res.values[n][j]) for n in solvers.OBJECTIVES}
        rep["values"][str(d)] = row
        rep["certificates"][str(d)] = {
            n: {"probs": c[j].probs.tolist(), "decisions": c[j].decisions.tolist()}
            for n, c in res.certificates.items()
        }
        text.append(f"delta={d:g}: " + ", ".join(f"{n}={v:.6f}" for n, v in row.items())
                    + f", chain {'ok' if res.chain_ok()[j] else 'VIOLATED'}")
    _emit(rep, text, args.out)
    return OK if res.chain_ok().all() else CHECK_FAILED


def cmd_construct(args) -> int:
    inst = _instance(args)
    an = solvers.analyze(inst)
    delta = args.delta[0] if args.delta else 0.0
    pi_opt, rho_opt = an.witness
    pi, par = constructions.build_robust_scheme(inst, an, pi_opt, rho_opt, delta, args.eps)
    worst = solvers.worst_case_delta_br(inst, pi, delta, randomized=False)[1]
    text = [
        f"delta: {delta:g}",
        f"theta: {par.theta:.6g}",
        f"eta: {par.eta:.6g}",
        f"signals used: {par.n_signals_used} (expanded: {par.expanded})",
        f"worst-case deterministic delta-response utility: {worst:.6g}",
    ]
    for p, x, s in zip(pi.probs, pi.decisions, pi.signals):
        text.append(f"  signal {int(s)}: prob {p:.6g}, decision {[round(float(v), 6) for v in x]}")
    rep = {"delta": delta, "theta": par.theta, "eta": par.eta, "z": par.z.tolist(), "eps": par.eps,
           "n_signals_used": par.n_signals_used, "expanded": par.expanded, "worst_case_D": worst,
           "strategy": {"probs": pi.probs.tolist(), "decisions": pi.decisions.tolist(), "signals": pi.signals.tolist()}}
    _emit(rep, text, args.out)
    return OK


def cmd_run(args) -> int:
    spec = io.load_spec(args.spec)
    if args.T:
        spec["T"] = args.T
    if args.seeds:
        spec["seeds"] = args.seeds
    if args.replicas:
        spec["replicas"] = args.replicas
    experiments.validate(spec)
    if args.dry_run:
        print(f"spec {spec['name']!r} is valid: T={spec['T']}, seeds={spec['seeds']}, replicas={spec['replicas']}")
        return OK
    out = Path(args.out or f"runs/{spec['name']}")
    rep = experiments.run_spec(spec, out)
    for r in rep["results"]:
        st = r["avg_u_expected"]
        print(f"T={r['T']}: mean utility {st['mean']:.6f} (SE {st['se']:.2g}), "
              f"creg/T {r['creg_per_round']['mean']:.3e}, csreg/T {r['csreg_per_round']['mean']:.3e}")
        for c in r["checks"]:
            print(f"  {c['theorem']}: {c['status']} (measured {c['measured']:.6f}, rhs {_fmt(c['rhs'])})")
    print(f"outputs written to {out}")
    return OK if rep["passed"] else CHECK_FAILED


def cmd_accept(args) -> int:
    from . import acceptance

    if args.list:
        for key, title, _, budget in acceptance.CHECKS:
            print(f"{key:>3}  {title} (budget {budget}s)")
        return OK
    keys = args.only.split(",") if args.only else None
    results = acceptance.run_all(keys)
    failed = [r.key for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed" + (f"; failed: {', '.join(failed)}" if failed else ""))
    if args.out:
        Path(args.out).write_text(json.dumps(experiments._plain(
            [{"key": r.key, "title": r.title, "passed": r.passed, "detail": r.detail} for r in results]),
            indent=2) + "\n")
    return CHECK_FAILED if failed else OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="palab", description="Principal-agent learning lab.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def inst_args(p):
        p.add_argument("--preset", help=f"preset name[:k=v,...]; one of {', '.join(sorted(PRESETS))}")
        p.add_argument("--instance", help="path to an instance JSON file")
        p.add_argument("--out", help="write the report as JSON here")

    p = sub.add_parser("analyze", help="U*, G, constants and bound values")
    inst_args(p)
    p.add_argument("--delta", type=float, action="append", help="delta for bound values (repeatable)")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("objectives", help="search the four objectives")
    inst_args(p)
    p.add_argument("--delta", type=float, action="append")
    p.add_argument("--budget", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_objectives)

    p = sub.add_parser("construct", help="build the robust scheme for a delta")
    inst_args(p)
    p.add_argument("--delta", type=float, action="append")
    p.add_argument("--eps", type=float, default=None)
    p.set_defaults(fn=cmd_construct)

    p = sub.add_parser("run", help="run an experiment spec")
    p.add_argument("spec")
    p.add_argument("--out", help="output directory (default runs/<name>)")
    p.add_argument("--T", type=int, nargs="+")
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--replicas", type=int)
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("accept", help="run the acceptance suite")
    p.add_argument("--list", action="store_true")
    p.add_argument("--only", help="comma-separated check keys")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_accept)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except GameError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
