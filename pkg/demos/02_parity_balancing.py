# %% [markdown]
# # Statistical-parity balancing
#
# balance_parity moves pseudo-count mass between the two cells of one group
# at a time until the best-off privileged group and the worst-off
# non-privileged group receive positive predictions at (almost) the same rate.

# %%
from fairbayes import GroupSpec, generate_synthetic, nnb
from fairbayes.balancing import BalanceConfig, balance_parity, disc_score

data = generate_synthetic(
    [
        GroupSpec(("m",), 5000, 0.7, [[0.3] * 3, [1.3] * 3]),
        GroupSpec(("f",), 5000, 0.3, [[-0.3] * 3, [0.7] * 3]),
    ],
    seed=1, sensitive_columns=["sex"], privileged=[("m",)],
)
model = nnb.fit(data)

# %%
balanced, trace = balance_parity(model, data, BalanceConfig(delta=0.01, disc_threshold=0.01))
print(trace.termination, "after", len(trace), "iterations")
print("disc before", round(trace.initial["disc"], 4), "after", round(trace.records[-1]["disc"], 4))

# %% [markdown]
# Every step is logged; the branch says whether the model was under- or
# over-predicting positives relative to the training labels.

# %%
for r in trace.records[:3] + trace.records[-2:]:
    print(r["iteration"], r["branch"], r["group"], round(r["disc"], 4), [round(c, 1) for c in r["counts"]])

# %%
print("table before\n", model.count_table.counts)
print("table after\n", balanced.count_table.counts.round(1))
