# %% [markdown]
# # Checking the transfer and equivalence results numerically
#
# Each theorem row checks its hypotheses first, then compares predicted and
# measured quantities.  Generated instances satisfy the hypotheses by
# construction.

# %%
from ckframe import InstanceSpec, gen_instance, run_suite, verify
from ckframe.suite import default_battery
from ckframe.theorems import counterexample_search

inst = gen_instance(InstanceSpec(d=2, n=2, m=3, seed=7))
v = verify("sandwich", inst)
print(v.status, [(c.name, round(c.margin, 6)) for c in v.checks])

# %% [markdown]
# Breaking commutation makes hypotheses fail, which is reported separately
# from a failed conclusion.

# %%
bad = gen_instance(InstanceSpec(d=2, n=2, m=3, seed=7, commuting_CS=False))
print(verify("controlled_to_kframe", bad).status)

# %% [markdown]
# A battery over random shapes.  Rows whose constants are reported rather
# than asserted land in report_only.

# %%
report = run_suite(default_battery(20, seed=0))
print(report.summary())

# %% [markdown]
# The norm-form equivalence needs C to commute with S.  Without it the row
# reports unmet hypotheses, and the two decisions usually disagree.

# %%
check = "A-valued and norm-form decisions agree"
agree = 0
for seed in range(10):
    v = verify("t32_equivalence", gen_instance(InstanceSpec(d=2, n=2, m=3, seed=seed, commuting_CS=False)))
    agree += v.check(check).passed
print(v.status, f"decisions agree on {agree}/10")

# %% [markdown]
# Anomaly search replays failing or report-anomalous verdicts.  The
# perturbation row's lower constant is reported, not asserted, and often
# misses.

# %%
hits = counterexample_search("perturbation", {"trials": 20})
print(len(hits), "anomalies; worst margin", hits[0].worst_margin if hits else None)
