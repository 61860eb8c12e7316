"""Command-line driver: ``python -m ckframe <verb> ...``.

Verbs: ``gen``, ``bounds``, ``check``, ``verify``, ``recon``, ``suite``.
Exit codes: 0 success, 1 airtight failure, 2 usage or domain error,
3 I/O or schema error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from .core import DomainError, ModuleVector, ShapeError, UsageError
from .frames import KINDS, optimal_bounds, quadratic_form_check
from .instances import (
    InstanceSpec,
    SchemaError,
    dumps_instance,
    gen_instance,
    load_instance,
    make_rng,
)
from .reconstruction import precondition_report, reconstruct
from .suite import default_battery, run_suite
from .theorems import THEOREM_IDS, VERIFY_TOL, verify

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _common(p, tol_default):
    p.add_argument("--seed", type=int, default=0, help="seed for sampling and generation")
    p.add_argument("--tol", type=float, default=tol_default, help="relative tolerance")
    p.add_argument("--json", metavar="PATH", help="write a machine-readable report")
    p.add_argument("--reproducible", action="store_true",
                   help="omit timestamps so output bytes depend only on the inputs")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ckframe", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a seeded instance file")
    _common(p, 1e-9)
    p.add_argument("-o", "--output", required=True, help="instance JSON to write")
    p.add_argument("-d", type=int, required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-m", type=int, required=True)
    p.add_argument("--non-commuting-CK", action="store_true", help="draw K independently of C")
    p.add_argument("--non-commuting-CS", action="store_true",
                   help="draw C in a random basis instead of the Gram eigenbasis")
    p.add_argument("--K-rank", type=int, default=None)
    p.add_argument("--C-condition", type=float, default=4.0)
    p.add_argument("--make-tight", action="store_true")

    p = sub.add_parser("bounds", help="optimal bounds of an instance")
    _common(p, 1e-9)
    p.add_argument("instance")
    p.add_argument("--kind", choices=KINDS, default="controlled_kframe")

    p = sub.add_parser("check", help="sample the A-valued inequality at given bounds")
    _common(p, 1e-9)
    p.add_argument("instance")
    p.add_argument("--kind", choices=KINDS, default="controlled_kframe")
    p.add_argument("-A", type=float, default=None)
    p.add_argument("-B", type=float, default=None)
    p.add_argument("--samples", type=int, default=50)

    p = sub.add_parser("verify", help="verify theorem rows on an instance")
    _common(p, VERIFY_TOL)
    p.add_argument("instance")
    p.add_argument("--theorem", action="append", choices=THEOREM_IDS,
                   help="row to check (repeatable; default all)")

    p = sub.add_parser("recon", help="reconstruct a seeded vector and compare preconditioning")
    _common(p, 1e-10)
    p.add_argument("instance")
    p.add_argument("--method", choices=("cg", "richardson"), default="cg")

    p = sub.add_parser("suite", help="run theorem rows over a seeded battery or given files")
    _common(p, VERIFY_TOL)
    p.add_argument("instances", nargs="*", help="instance files (default: seeded battery)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--theorem", action="append", choices=THEOREM_IDS)
    return parser


def _emit(args, payload: dict) -> None:
    if not args.reproducible:
        payload = {**payload, "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
    if args.json:
        try:
            with open(args.json, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, indent=1, sort_keys=True)
                fh.write("\n")
        except OSError as exc:
            raise SchemaError(f"{args.json}: cannot write ({exc.strerror})") from None


def _cmd_gen(args) -> int:
    spec = InstanceSpec(d=args.d, n=args.n, m=args.m, seed=args.seed,
                        commuting_CK=not args.non_commuting_CK, K_rank=args.K_rank,
                        C_condition=args.C_condition, make_tight=args.make_tight,
                        commuting_CS=not args.non_commuting_CS)
    text = dumps_instance(gen_instance(spec))
    try:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise SchemaError(f"{args.output}: cannot write ({exc.strerror})") from None
    print(f"wrote {args.output} (d={args.d}, n={args.n}, m={args.m}, seed={args.seed})")
    _emit(args, {"verb": "gen", "output": args.output, "spec": spec.to_dict()})
    return EXIT_OK


def _cmd_bounds(args) -> int:
    inst = load_instance(args.instance)
    rep = optimal_bounds(inst.F, args.kind, inst.C, inst.K, args.tol)
    print(f"{args.kind}: A={rep.lowerA} B={rep.upperB} holds={rep.holds} "
          f"tight={rep.tight} parseval={rep.parseval}"
          + (f" ({rep.reason})" if rep.reason else ""))
    _emit(args, {"verb": "bounds", "instance": args.instance, **rep.to_dict()})
    return EXIT_OK


def _cmd_check(args) -> int:
    inst = load_instance(args.instance)
    res = quadratic_form_check(inst.F, args.kind, args.A, args.B, inst.C, inst.K,
                               samples=args.samples, seed=args.seed, tol=args.tol)
    print(f"{args.kind} at A={args.A} B={args.B}: "
          f"{'holds' if res.passed else 'violated'} on {res.samples} samples "
          f"(worst margin {res.worst_margin:.3e})")
    _emit(args, {"verb": "check", "instance": args.instance, "passed": res.passed,
                 "worst_margin": res.worst_margin, "samples": res.samples})
    return EXIT_OK if res.passed else EXIT_FAIL


def _cmd_verify(args) -> int:
    inst = load_instance(args.instance)
    ids = args.theorem or THEOREM_IDS
    verdicts = [verify(t, inst.for_theorem(t), tol=args.tol, seed=args.seed) for t in ids]
    for v in verdicts:
        print(f"{v.theorem_id:24s} {v.status}")
        for h in v.hypotheses:
            if not h.satisfied:
                print(f"    unmet: {h.name} (margin {h.margin:.3e})")
        for c in v.checks:
            if not c.passed:
                kind = "FAILED" if c.airtight else "report"
                print(f"    {kind}: {c.name} (margin {c.margin:.3e})")
    _emit(args, {"verb": "verify", "instance": args.instance,
                 "verdicts": [v.to_dict() for v in verdicts]})
    return EXIT_FAIL if any(v.status == "fail" for v in verdicts) else EXIT_OK


def _cmd_recon(args) -> int:
    inst = load_instance(args.instance)
    rng = make_rng(args.seed)
    shape = (inst.d, inst.n * inst.d)
    f = ModuleVector(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    f_hat, stats = reconstruct(inst.F, inst.C, f, method=args.method, tol=args.tol)
    err = (f_hat - f).norm() / f.norm()
    pre = precondition_report(inst.F, inst.C, seed=args.seed)
    print(f"{args.method}: relative error {err:.3e} after {stats.iterations} iterations "
          f"(kappa={stats.condition_number:.4g})")
    print(f"Richardson: kappa(S)={pre.kappa_S:.4g} -> {pre.iterations_S} iterations, "
          f"kappa(S_C)={pre.kappa_SC:.4g} -> {pre.iterations_SC} iterations")
    _emit(args, {"verb": "recon", "instance": args.instance, "method": args.method,
                 "relative_error": err, "stats": stats.__dict__, "precondition": pre.to_dict()})
    return EXIT_OK if err <= 10 * args.tol else EXIT_FAIL


def _cmd_suite(args) -> int:
    if args.instances:
        instances = [load_instance(p) for p in args.instances]
    else:
        instances = default_battery(args.trials, args.seed)
    report = run_suite(instances, args.theorem or THEOREM_IDS, tol=args.tol, seed=args.seed,
                       reproducible=True)
    print(report.summary())
    _emit(args, {"verb": "suite", **report.to_dict()})
    return report.exit_status


_COMMANDS = {"gen": _cmd_gen, "bounds": _cmd_bounds, "check": _cmd_check,
             "verify": _cmd_verify, "recon": _cmd_recon, "suite": _cmd_suite}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ShapeError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
