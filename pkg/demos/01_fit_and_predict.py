# %% [markdown]
# # Fitting an N-naive-Bayes model
#
# One Gaussian naive Bayes per sensitive group, joined by a table of
# label/group pseudo-counts. We generate a small biased dataset, fit, and
# compare against a single pooled GNB.

# %%
import numpy as np

from fairbayes import GroupSpec, SplitSpec, generate_synthetic, nnb, split
from fairbayes.harness import RunConfig, evaluate_model, train_model
from fairbayes.metrics import REPORT_COLUMNS, format_table

groups = [
    GroupSpec(("white",), 3000, 0.45, [[0.5, 0.5], [1.5, 1.5]]),
    GroupSpec(("black",), 800, 0.25, [[-0.5, 0.0], [0.5, 1.0]]),
    GroupSpec(("other",), 1200, 0.20, [[-0.8, -0.2], [0.2, 0.8]]),
]
data = generate_synthetic(groups, seed=0, sensitive_columns=["race"], privileged=[("white",)])
train, test = split(data, SplitSpec(test_fraction=0.3, seed=0))
print(len(train), "train rows,", len(test), "test rows, groups:", train.group_keys)

# %% [markdown]
# The count table is the whole "prior" side of the model: row per group,
# columns N(y=0, s), N(y=1, s).

# %%
model = nnb.fit(train, alpha=1.0)
for g, row in zip(model.groups, model.count_table.counts):
    print(g, row, "P(y=1|s) =", round(nnb.conditional_prob(model.count_table, 1, g), 3))

# %%
x = test.features[0]
s = test.groups[0]
print("scores", nnb.predict_scores(model, x, s), "-> class", nnb.predict(model, x, s))

# %% [markdown]
# Batch prediction caches the per-group likelihoods; the table only adds a
# per-group threshold on top.

# %%
pred = nnb.batch_predict(model, test)
print("accuracy", np.mean(pred == test.labels))

# %%
rows = {}
for mode in ("gnb_baseline", "nnb_parity", "nnb_df"):
    fitted, _ = train_model(train, mode, RunConfig())
    report = evaluate_model(fitted, test)
    rows[mode] = {k: getattr(report, k) for k, _ in REPORT_COLUMNS}
print(format_table(rows))
