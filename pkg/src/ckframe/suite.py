"""Run theorem rows over batches of instances and aggregate the verdicts."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .instances import Instance, InstanceSpec, gen_instance
from .theorems import MIXED_ROWS, THEOREM_IDS, VERIFY_TOL, TheoremVerdict, verify


@dataclass
class SuiteReport:
    verdicts: list[tuple[int, TheoremVerdict]]
    tol: float
    elapsed: float = 0.0
    timestamp: str | None = None
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        counts = {}
        for _, v in self.verdicts:
            row = counts.setdefault(v.theorem_id, {"pass": 0, "fail": 0, "report_only": 0,
                                                   "hypotheses_unmet": 0})
            row[v.status] += 1
        self.counts = counts

    def _select(self, status):
        return [(i, v) for i, v in self.verdicts if v.status == status]

    @property
    def failures(self):
        return self._select("fail")

    @property
    def hypotheses_unmet(self):
        return self._select("hypotheses_unmet")

    @property
    def report_only(self):
        return self._select("report_only")

    @property
    def exit_status(self) -> int:
        return 1 if self.failures else 0

    def report_margins(self) -> dict:
        """Min/median/max margin of every report-only check, per row."""
        out = {}
        for _, v in self.verdicts:
            if v.theorem_id not in MIXED_ROWS or not v.hypotheses_met:
                continue
            for c in v.checks:
                if not c.airtight:
                    out.setdefault(f"{v.theorem_id}: {c.name}", []).append(c.margin)
        return {k: {"min": float(np.min(m)), "median": float(np.median(m)),
                    "max": float(np.max(m)), "violations": int(np.sum(np.array(m) < -self.tol)),
                    "count": len(m)}
                for k, m in out.items()}

    def summary(self) -> str:
        lines = [f"{'theorem':24s} {'pass':>5s} {'fail':>5s} {'report':>7s} {'unmet':>6s}"]
        for tid in THEOREM_IDS:
            if tid in self.counts:
                c = self.counts[tid]
                lines.append(f"{tid:24s} {c['pass']:5d} {c['fail']:5d} {c['report_only']:7d} "
                             f"{c['hypotheses_unmet']:6d}")
        for name, st in self.report_margins().items():
            lines.append(f"report  {name}: min margin {st['min']:.3e}, "
                         f"{st['violations']}/{st['count']} below -tol")
        lines.append(f"{len(self.failures)} airtight failures in {len(self.verdicts)} verdicts")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        out = {
            "tol": self.tol,
            "exit_status": self.exit_status,
            "counts": self.counts,
            "failures": [{"instance": i, **v.to_dict()} for i, v in self.failures],
            "hypotheses_unmet": [{"instance": i, "theorem_id": v.theorem_id,
                                  "unmet": [h.name for h in v.hypotheses if not h.satisfied]}
                                 for i, v in self.hypotheses_unmet],
            "report_only": [{"instance": i, **v.to_dict()} for i, v in self.report_only],
            "report_margins": self.report_margins(),
            "verdicts": [{"instance": i, **v.to_dict()} for i, v in self.verdicts],
        }
        if self.timestamp is not None:
            out["timestamp"] = self.timestamp
            out["elapsed_seconds"] = self.elapsed
        return out


def battery_specs(trials: int = 100, seed: int = 0, **flags) -> list[InstanceSpec]:
    """Seeded specs with d in {1,2,3}, n in {1..4}, m in {n..2n}."""
    rng = np.random.Generator(np.random.Philox(seed))
    specs = []
    for _ in range(trials):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(1, 5))
        m = int(rng.integers(n, 2 * n + 1))
        specs.append(InstanceSpec(d=d, n=n, m=m, seed=int(rng.integers(2**63)), **flags))
    return specs


def default_battery(trials: int = 100, seed: int = 0, **flags) -> list[Instance]:
    return [gen_instance(s) for s in battery_specs(trials, seed, **flags)]


def run_suite(
    instances,
    theorem_ids=THEOREM_IDS,
    tol: float = VERIFY_TOL,
    seed: int = 0,
    reproducible: bool = True,
) -> SuiteReport:
    """Verify every requested row on every instance, ordered by instance index."""
    start = time.perf_counter()
    verdicts = []
    for i, inst in enumerate(instances):
        for tid in theorem_ids:
            operands = inst.for_theorem(tid) if isinstance(inst, Instance) else inst
            verdicts.append((i, verify(tid, operands, tol=tol, seed=seed + i)))
    elapsed = time.perf_counter() - start
    stamp = None if reproducible else time.strftime("%Y-%m-%dT%H:%M:%S%z")
    return SuiteReport(verdicts, tol, elapsed=elapsed, timestamp=stamp)
