"""Command line entry point: ``perturbkit {converge,lemmas,eval,scenario}``."""

import argparse
import json
import os
import sys

from .exceptions import PerturbkitError
from .harness import lemmas_to_csv, report_to_csv, run_convergence, run_lemma_suite
from .linalg import load_matrix, save_matrix
from .measures import MEASURES, exact_measure, expand_measure
from .states import make_scenario, random_scenario


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


def cmd_converge(args):
    cfg = _load_json(args.config)
    if args.workers is not None:
        cfg["workers"] = args.workers
    report = run_convergence(cfg)
    _write(report_to_csv(report), args.out)
    if report.passed is None:
        slopes = ", ".join(f"{k}={v:.3f}" for k, v in report.block_slopes.items())
        print(f"{report.measure}: block slopes {slopes}", file=sys.stderr)
        return 0
    status = "exact to machine precision" if report.exact else f"slope {report.fitted_slope:.3f}"
    print(f"{report.measure} ({report.config['kind']}): {status}, expected "
          f"{report.expected_slope:g}: {'PASS' if report.passed else 'FAIL'}", file=sys.stderr)
    return 0 if report.passed else 1


def cmd_lemmas(args):
    records = run_lemma_suite(_load_json(args.config) if args.config else {})
    _write(lemmas_to_csv(records), args.out)
    failed = [r for r in records if not r.passed]
    print(f"{len(records) - len(failed)}/{len(records)} identity checks passed", file=sys.stderr)
    return 0 if not failed else 1


def cmd_eval(args):
    nu2 = load_matrix(args.nu2) if args.nu2 else None
    sc = make_scenario(load_matrix(args.rho0), load_matrix(args.nu1), nu2)
    if args.mode == "exact":
        res = exact_measure(args.measure, sc, args.tol_s)
    else:
        res = expand_measure(args.measure, sc, args.tol_s)
    out = {
        "measure": args.measure,
        "mode": args.mode,
        "kind": sc.kind,
        "value": float(res.value),
        "s_star": res.s_star,
        "claimed_residual_exponent": res.claimed_residual_exponent,
    }
    if res.notes:
        out["notes"] = list(res.notes)
    print(json.dumps(out))
    return 0


def cmd_scenario(args):
    cfg = _load_json(args.config)
    sc = random_scenario(
        int(cfg["dim"]), cfg.get("rank"), cfg.get("kind", "preserving"),
        float(cfg.get("epsilon", 1e-3)), seed=int(cfg.get("seed", 0)),
        pair=bool(cfg.get("pair", False)),
    )
    os.makedirs(args.out_dir, exist_ok=True)
    save_matrix(sc.rho0.op, os.path.join(args.out_dir, "rho0.json"))
    save_matrix(sc.nu1.op, os.path.join(args.out_dir, "nu1.json"))
    if sc.nu2 is not None:
        save_matrix(sc.nu2.op, os.path.join(args.out_dir, "nu2.json"))
    print(f"wrote {sc.kind} scenario to {args.out_dir}", file=sys.stderr)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="perturbkit",
        description="Perturbative expansions of quantum information measures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("converge", help="fit residual exponents against the exact oracle")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", default="-", help="CSV report path (default: stdout)")
    p.add_argument("--workers", type=int, default=None, help="worker threads")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("lemmas", help="check the Frechet-derivative trace identities")
    p.add_argument("--config", default=None, help="suite config JSON")
    p.add_argument("--out", default="-", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_lemmas)

    p = sub.add_parser("eval", help="evaluate one measure on matrices given as JSON")
    p.add_argument("--measure", required=True, choices=MEASURES)
    p.add_argument("--rho0", required=True)
    p.add_argument("--nu1", required=True)
    p.add_argument("--nu2", default=None)
    p.add_argument("--mode", choices=("exact", "expansion"), default="expansion")
    p.add_argument("--tol-s", type=float, default=1e-6, dest="tol_s")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("scenario", help="write a random scenario as matrix JSON files")
    p.add_argument("--config", required=True, help="scenario JSON")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_scenario)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PerturbkitError, ValueError, OSError) as exc:
        print(f"perturbkit {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
