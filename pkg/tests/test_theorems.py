import json

import numpy as np
import pytest

from ckframe.core import ModuleOperator, ShapeError, UsageError
from ckframe.frames import FrameSystem
from ckframe.instances import InstanceSpec, gen_instance
from ckframe.theorems import (
    MIXED_ROWS,
    THEOREM_IDS,
    counterexample_search,
    norm_form_decision,
    order_lower_decision,
    verify,
)

from conftest import cgauss, op

E2 = FrameSystem.standard_basis(1, 2)
I2 = ModuleOperator.identity(1, 2)


def test_bessel_invariance_scaling_example():
    v = verify("bessel_invariance", {"F": E2, "T": 2 * I2, "C": I2})
    assert v.status == "pass"
    assert v.predicted["D"] == pytest.approx(4.0)
    assert v.measured["D"] == pytest.approx(4.0)


def test_controlled_to_kframe_example():
    v = verify("controlled_to_kframe", {"F": E2, "C": op(np.diag([1.0, 2.0])), "K": I2})
    assert v.status == "pass"
    assert (v.predicted["A"], v.predicted["B"]) == pytest.approx((0.5, 2.0))
    assert (v.measured["A"], v.measured["B"]) == pytest.approx((1.0, 1.0))


def test_sandwich_example():
    v = verify("sandwich", {"F": E2, "C": I2, "K": op(np.diag([1.0, 0.0])), "bounds": (1.0, 1.0)})
    assert v.status == "pass"
    assert all(c.passed for c in v.checks)


def test_sandwich_with_invalid_bounds_is_not_a_failure():
    v = verify("sandwich", {"F": E2, "C": I2, "K": I2, "bounds": (2.0, 1.0)})
    assert v.status == "hypotheses_unmet"


def test_isometry_with_unitary_is_report_only():
    q = np.linalg.qr(cgauss(np.random.default_rng(1), (2, 2)))[0]
    v = verify("isometry_transfer", {"F": E2, "C": I2, "K": I2, "T": op(q)})
    assert v.status == "report_only"
    assert v.measured["A"] == pytest.approx(1.0) and v.measured["B"] == pytest.approx(1.0)


def test_unknown_theorem_and_shapes():
    with pytest.raises(UsageError):
        verify("no_such_theorem", {"F": E2})
    with pytest.raises(ShapeError):
        verify("sandwich", {"F": E2, "C": ModuleOperator.identity(1, 3)})
    with pytest.raises(UsageError):
        verify("bessel_invariance", {"F": E2})


@pytest.mark.parametrize("tid", THEOREM_IDS)
def test_rows_hold_on_generated_instances(tid):
    for seed in range(12):
        n = 1 + seed % 3
        inst = gen_instance(InstanceSpec(d=1 + seed % 2, n=n, m=n + seed % 2, seed=seed))
        v = verify(tid, inst.for_theorem(tid), seed=seed)
        assert v.status == ("report_only" if tid in MIXED_ROWS else "pass"), (seed, v.to_dict())


@pytest.mark.parametrize("tid", THEOREM_IDS)
def test_violated_hypotheses_never_fail(tid):
    for flags in ({"commuting_CS": False}, {"commuting_CK": False}, {"K_rank": 0}):
        for seed in range(4):
            inst = gen_instance(InstanceSpec(d=2, n=2, m=3, seed=seed, **flags))
            v = verify(tid, inst.for_theorem(tid), seed=seed)
            assert v.status != "fail", (flags, v.to_dict())


def test_noncommuting_controller_gives_hypotheses_unmet():
    inst = gen_instance(InstanceSpec(d=2, n=2, m=3, seed=3, commuting_CS=False))
    for tid in ("lemma_l33", "sandwich", "controlled_to_kframe", "bessel_invariance"):
        assert verify(tid, inst).status == "hypotheses_unmet"


def test_verdicts_deterministic_and_serializable():
    inst = gen_instance(InstanceSpec(d=2, n=2, m=3, seed=5))
    for tid in THEOREM_IDS:
        a = verify(tid, inst.for_theorem(tid), seed=3).to_dict()
        b = verify(tid, inst.for_theorem(tid), seed=3).to_dict()
        assert json.dumps(a) == json.dumps(b)
        assert a["provenance"]["seed"] == 5


def test_implicit_hypotheses_are_flagged():
    inst = gen_instance(InstanceSpec(d=1, n=2, m=3, seed=0))
    v = verify("t32_equivalence", inst)
    implicit = [h.name for h in v.hypotheses if h.implicit]
    assert any("S_C self-adjoint" in name for name in implicit)


def test_perturbation_notes_compactness():
    inst = gen_instance(InstanceSpec(d=1, n=2, m=3, seed=0))
    v = verify("perturbation", inst)
    assert any("compact" in h.name and h.satisfied for h in v.hypotheses)
    assert any("finite dimensions" in note for note in v.notes)


# -- decision procedures -----------------------------------------------------


def test_norm_form_rank_one_reduction(rng):
    # the optimised row ratio is never above the ratio at any sampled full f
    N, d = 4, 2
    A = cgauss(rng, (N, N))
    P = A @ A.conj().T @ np.diag([1.0, 2.0, 3.0, 4.0])
    K = cgauss(rng, (N, N))
    M = K.conj().T @ K
    _, A_norm, _ = norm_form_decision(P, M, seed=0)
    for _ in range(200):
        F = cgauss(rng, (d, N))
        ratio = np.linalg.norm(F @ P @ F.conj().T, 2) / np.linalg.norm(F @ M @ F.conj().T, 2)
        assert A_norm <= ratio * (1 + 1e-9)


def test_norm_form_detects_missing_lower_bound():
    P = np.diag([1.0, 0.0])
    M = np.eye(2)
    dec, A_norm, _ = norm_form_decision(P, M)
    assert not dec and A_norm < 1e-8


def test_order_lower_decision():
    assert order_lower_decision(np.diag([2.0, 1.0]), np.eye(2)) == (True, pytest.approx(1.0))
    dec, A = order_lower_decision(np.eye(2), np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert not dec


def test_biconditionals_agree_with_zero_K():
    inst = gen_instance(InstanceSpec(d=2, n=2, m=3, seed=1, K_rank=0))
    for tid, name in (("t32_equivalence", "A-valued and norm-form decisions agree"),
                      ("cs_condition", "lower bound exists iff CS >= A C K K* for some A > 0")):
        assert verify(tid, inst).check(name).passed


# -- counterexample search ---------------------------------------------------


def test_counterexample_search_airtight_rows_clean():
    for tid in ("sandwich", "lemma_l35", "mframe_transfer"):
        assert counterexample_search(tid, {"trials": 20, "seed": 1}) == []


def test_counterexample_search_finds_perturbation_anomalies():
    found = counterexample_search("perturbation", {"trials": 40, "seed": 0})
    assert found, "expected report-only anomalies in the perturbation lower constant"
    assert all(v.status == "report_only" for v in found)
    worst = found[0]
    assert worst.worst_margin == min(v.worst_margin for v in found)
    # replayable from the recorded spec
    replay = verify("perturbation", gen_instance(InstanceSpec(**worst.provenance)))
    assert replay.worst_margin == pytest.approx(worst.worst_margin)


def test_counterexample_search_deterministic():
    a = counterexample_search("perturbation", {"trials": 15, "seed": 4})
    b = counterexample_search("perturbation", {"trials": 15, "seed": 4})
    assert [v.to_dict() for v in a] == [v.to_dict() for v in b]
