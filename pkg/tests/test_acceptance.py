"""Acceptance criteria, one test per criterion.

Each test records a one-line PASS/FAIL summary; pytest prints them at the
end of the run (see conftest.py), and ``python tests/test_acceptance.py``
runs them directly.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from ckframe.core import ModuleOperator, ModuleVector, douglas_mu_bisect, douglas_solve, op_compose, op_norm
from ckframe.frames import FrameSystem, optimal_bounds, quadratic_form_check
from ckframe.instances import InstanceSpec, dumps_instance, gen_instance, instance_from_dict, load_instance
from ckframe.instances import SchemaError
from ckframe.reconstruction import cg_invert, reconstruct, richardson_invert
from ckframe.suite import battery_specs, default_battery, run_suite
from ckframe.theorems import MIXED_ROWS, THEOREM_IDS, verify

FIXTURES = Path(__file__).parent / "fixtures"
RESULTS: list[str] = []


def record(number, title, ok, detail):
    RESULTS.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}")
    assert ok, detail


def cgauss(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_criterion_1_gram_reduction_soundness():
    start = time.perf_counter()
    disagreements, checked = [], 0
    for i, spec in enumerate(battery_specs(200, seed=1)):
        inst = gen_instance(spec)
        for kind in ("frame", "kframe", "controlled", "controlled_kframe"):
            rep = optimal_bounds(inst.F, kind, inst.C, inst.K)
            A = None if rep.lowerA is None else rep.lowerA * (1 - 1e-6)
            B = rep.upperB * (1 + 1e-6)
            res = quadratic_form_check(inst.F, kind, A, B, inst.C, inst.K, samples=50, seed=i)
            checked += 1
            if not res.passed:
                disagreements.append((i, kind, res.worst_margin))
    elapsed = time.perf_counter() - start
    ok = not disagreements and elapsed < 10
    record(1, "Gram-reduction soundness", ok,
           f"{len(disagreements)} disagreements in {checked} decisions, {elapsed:.2f}s")


def test_criterion_2_classical_reduction():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        rows = cgauss(rng, (int(rng.integers(n, 2 * n + 1)), n))
        w = np.linalg.eigvalsh(rows.conj().T @ rows)
        rep = optimal_bounds(FrameSystem(rows[:, None, :]), "frame")
        worst = max(worst, abs(rep.lowerA - w[0]), abs(rep.upperB - w[-1]))
    F = FrameSystem(np.array([[[1, 0]], [[0, 1]], [[1, 1]]], dtype=complex))
    rep = optimal_bounds(F, "frame")
    fixture_err = max(abs(rep.lowerA - 1.0), abs(rep.upperB - 3.0))
    ok = worst <= 1e-10 and fixture_err <= 1e-12
    record(2, "classical reduction (d=1)", ok,
           f"max eigenvalue deviation {worst:.1e}, fixture (A,B)=({rep.lowerA:.15g}, "
           f"{rep.upperB:.15g})")


def test_criterion_3_theorem_battery():
    start = time.perf_counter()
    report = run_suite(default_battery(100, seed=0), THEOREM_IDS, tol=1e-8)
    elapsed = time.perf_counter() - start
    satisfied = {tid: report.counts[tid]["pass"] + report.counts[tid]["report_only"]
                 + report.counts[tid]["fail"] for tid in THEOREM_IDS}
    too_few = [tid for tid, k in satisfied.items() if k < 100]
    mixed_fail = [v for _, v in report.failures if v.theorem_id in MIXED_ROWS
                  and all(c.passed for c in v.checks if c.airtight)]
    margins = report.report_margins()
    ok = not report.failures and not too_few and not mixed_fail and elapsed < 60
    record(3, "theorem battery", ok,
           f"{len(report.failures)} airtight failures, rows short of 100 satisfying instances: "
           f"{too_few or 'none'}, {len(margins)} report-only statistics, {elapsed:.1f}s")


def test_criterion_4_douglas():
    rng = np.random.default_rng(4)
    worst_res, worst_mu = 0.0, 0.0
    for _ in range(100):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(1, 4))
        N = n * d
        r = int(rng.integers(1, N + 1))
        T = ModuleOperator(cgauss(rng, (N, r)) @ cgauss(rng, (r, N)), d)
        Tp = op_compose(T, ModuleOperator(cgauss(rng, (N, N)), d))  # range inside R(T)
        sol = douglas_solve(Tp, T)
        worst_res = max(worst_res, op_norm(op_compose(T, sol.D) - Tp) / op_norm(Tp))
        mu_b = douglas_mu_bisect(Tp, T, tol=1e-12)
        worst_mu = max(worst_mu, abs(mu_b - sol.mu_min) / sol.mu_min)
    ok = worst_res <= 1e-10 and worst_mu <= 1e-6
    record(4, "Douglas factorization", ok,
           f"max relative residual {worst_res:.1e}, max mu_min deviation from bisection {worst_mu:.1e}")


def biconditional_instances():
    """200 instances: 80 generic commuting, 40 K=0, 40 KC != CK, 40 C not commuting with S."""
    cats = ([("commuting", {})] * 80 + [("K=0", {"K_rank": 0})] * 40
            + [("KC!=CK", {"commuting_CK": False})] * 40
            + [("CS!=SC", {"commuting_CS": False})] * 40)
    specs = battery_specs(200, seed=5)
    for (label, flags), s in zip(cats, specs):
        yield label, gen_instance(InstanceSpec(d=s.d, n=s.n, m=s.m, seed=s.seed, **flags))


def test_criterion_5_biconditionals():
    names = {"t32_equivalence": "A-valued and norm-form decisions agree",
             "cs_condition": "lower bound exists iff CS >= A C K K* for some A > 0"}
    tally = {tid: {} for tid in names}
    for i, (label, inst) in enumerate(biconditional_instances()):
        for tid, check in names.items():
            agree = verify(tid, inst, seed=i).check(check).passed
            a, n = tally[tid].get(label, (0, 0))
            tally[tid][label] = (a + agree, n + 1)
    total_agree = sum(a for t in tally.values() for a, _ in t.values())
    total = sum(n for t in tally.values() for _, n in t.values())
    detail = "; ".join(f"{tid}: " + ", ".join(f"{lab} {a}/{n}" for lab, (a, n) in t.items())
                       for tid, t in tally.items())
    record(5, "biconditional decisions agree", total_agree == total, detail)


def test_criterion_6_reconstruction():
    worst_err, bad_rich, bad_cg = 0.0, [], []
    rng = np.random.default_rng(6)
    tol = 1e-10
    for i, spec in enumerate(battery_specs(100, seed=6)):
        inst = gen_instance(spec)
        shape = (inst.d, inst.n * inst.d)
        f = ModuleVector(cgauss(rng, shape))
        f_hat, _ = reconstruct(inst.F, inst.C, f, method="cg", tol=1e-10)
        worst_err = max(worst_err, (f_hat - f).norm() / f.norm())

        SC = ModuleOperator(inst.F.gram @ inst.C.matrix, inst.d)
        SC = ModuleOperator((SC.matrix + SC.matrix.conj().T) / 2, inst.d)
        w = np.linalg.eigvalsh(SC.matrix)
        rho = (w[-1] - w[0]) / (w[-1] + w[0])
        b = ModuleVector(cgauss(rng, shape))
        _, st = richardson_invert(SC, b, tol=tol, max_iter=10**6)
        predicted = max(1, math.ceil(math.log(tol) / math.log(rho))) if rho > 0 else 1
        if not predicted / 2 <= st.iterations <= 2 * predicted:
            bad_rich.append((i, st.iterations, predicted))

        x, st = cg_invert(SC, b, tol=1e-12)
        ref = np.linalg.solve(SC.matrix.T, b.flat.T).T
        if (np.linalg.norm(x.flat - ref) > 1e-9 * np.linalg.norm(ref)
                or st.iterations > inst.n * inst.d):
            bad_cg.append((i, st.iterations))
    ok = worst_err <= 1e-9 and not bad_rich and not bad_cg
    record(6, "reconstruction", ok,
           f"max round-trip error {worst_err:.1e}; Richardson outside 2x prediction: "
           f"{len(bad_rich)}; CG mismatches or >nd iterations: {len(bad_cg)}")


def test_criterion_7_determinism_and_persistence(tmp_path):
    problems = []
    for spec in battery_specs(20, seed=7):
        a, b = dumps_instance(gen_instance(spec)), dumps_instance(gen_instance(spec))
        if a != b:
            problems.append(f"non-deterministic {spec}")
        p = tmp_path / "x.json"
        p.write_text(a)
        if dumps_instance(load_instance(p)) != a:
            problems.append(f"unstable round trip {spec}")
    try:
        load_instance(FIXTURES / "bad_version.json")
        problems.append("bad version accepted")
    except SchemaError:
        pass
    gold_text = (FIXTURES / "golden_d2n2m3_seed7.json").read_text()
    gold = load_instance(FIXTURES / "golden_d2n2m3_seed7.json")
    if dumps_instance(gold) != gold_text:
        problems.append("golden fixture not byte-stable")
    if not optimal_bounds(load_instance(FIXTURES / "standard_basis_d1n2.json").F, "frame").parseval:
        problems.append("standard-basis fixture not Parseval")
    try:
        instance_from_dict({"version": 2})
        problems.append("version 2 accepted")
    except SchemaError:
        pass
    record(7, "determinism and persistence", not problems, "; ".join(problems) or
           "20 specs byte-identical and round-trip stable; version checks enforced")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
