"""Accuracy and fairness metrics computed from raw per-group counts."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigError, DataError

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class GroupStats:
    """Per-group sample count and positive-prediction / positive-label counts."""

    n: dict
    positive_pred: dict
    positive_label: dict = field(default_factory=dict)

    def __post_init__(self):
        for g, total in self.n.items():
            if total < 0 or self.positive_pred.get(g, 0) > total or self.positive_label.get(g, 0) > total:
                raise DataError(f"inconsistent counts for group {g}")

    @property
    def groups(self) -> list:
        return sorted(self.n)

    def rates(self) -> dict:
        """Unsmoothed P(y_hat = 1 | s)."""
        return {g: self.positive_pred[g] / self.n[g] for g in self.groups}

    @classmethod
    def from_predictions(cls, groups, predictions, labels=None) -> "GroupStats":
        predictions = np.asarray(predictions)
        n, pos, lab = {}, {}, {}
        keys = [tuple(g) for g in groups]
        if len(keys) != len(predictions):
            raise DataError("groups and predictions differ in length")
        for k in sorted(set(keys)):
            n[k] = 0
            pos[k] = 0
            lab[k] = 0
        labels = None if labels is None else np.asarray(labels)
        for i, k in enumerate(keys):
            n[k] += 1
            pos[k] += int(predictions[i])
            if labels is not None:
                lab[k] += int(labels[i])
        return cls(n, pos, lab if labels is not None else {})

    def label_stats(self) -> "GroupStats":
        """Same groups, with true labels standing in for predictions."""
        return GroupStats(self.n, self.positive_label, self.positive_label)


def _require_partition(stats, privileged, unprivileged):
    if not privileged or not unprivileged:
        raise ConfigError("need at least one privileged and one non-privileged group")
    unknown = [g for g in (*privileged, *unprivileged) if g not in stats.n]
    if unknown:
        raise DataError(f"no statistics for groups {sorted(unknown)}")


def parity_disc(stats: GroupStats, privileged, unprivileged) -> float:
    _require_partition(stats, privileged, unprivileged)
    rates = stats.rates()
    return max(rates[g] for g in privileged) - min(rates[g] for g in unprivileged)


def disparate_impact_mean(stats: GroupStats, privileged, unprivileged, flags: list | None = None) -> float:
    """Mean of P(y_hat=1|s_np) / P(y_hat=1|s_p) over all privileged x non-privileged pairs.

    A privileged group with no positive predictions has its rate floored at
    1e-12; the group is appended to ``flags`` when a list is passed.
    """
    _require_partition(stats, privileged, unprivileged)
    rates = stats.rates()
    total = 0.0
    for sp in sorted(privileged):
        denom = rates[sp]
        if denom <= 0:
            denom = PROB_FLOOR
            if flags is not None:
                flags.append({"group": list(sp), "issue": "zero positive rate in privileged group"})
        for snp in sorted(unprivileged):
            total += rates[snp] / denom
    return total / (len(privileged) * len(unprivileged))


def smoothed_rates(stats: GroupStats, alpha: float) -> np.ndarray:
    """(G, 2) smoothed P(y_hat | s) with beta = 2 * alpha, rows in ``stats.groups`` order."""
    out = np.empty((len(stats.groups), 2))
    beta = 2.0 * alpha
    for i, g in enumerate(stats.groups):
        pos = stats.positive_pred[g]
        n = stats.n[g]
        out[i, 1] = (pos + alpha) / (n + beta)
        out[i, 0] = (n - pos + alpha) / (n + beta)
    return out


def df_epsilon(stats: GroupStats, alpha: float = 1.0, flags: list | None = None) -> float:
    """Smoothed empirical differential-fairness epsilon over every pair of groups."""
    if len(stats.n) < 2:
        raise DataError("differential fairness needs at least two groups")
    if alpha < 0:
        raise ConfigError("alpha must be non-negative")
    probs = smoothed_rates(stats, alpha)
    if np.any(probs <= 0):
        if flags is not None:
            flags.append({"issue": "zero smoothed probability floored at 1e-12"})
        probs = np.maximum(probs, PROB_FLOOR)
    logs = np.log(probs)
    return float(max(0.0, (logs.max(axis=0) - logs.min(axis=0)).max()))


def df_bias_amplification(classifier_eps: float, dataset_eps: float) -> float:
    return classifier_eps - dataset_eps


def accuracy(pred, truth) -> float:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise DataError("prediction and truth lengths differ")
    if pred.size == 0:
        raise DataError("accuracy of an empty prediction set")
    return float(np.mean(pred == truth))


def auc(scores, truth) -> float:
    """Mann-Whitney AUC; tied scores earn half credit."""
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth)
    if scores.shape != truth.shape:
        raise DataError("score and truth lengths differ")
    n_pos = int(np.sum(truth == 1))
    n_neg = truth.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC needs both classes present")
    ranks = rankdata(scores)
    return float((ranks[truth == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


REPORT_COLUMNS = (
    ("auc", "AUC"),
    ("accuracy", "Accuracy"),
    ("disparate_impact_mean", "DI"),
    ("parity_disc", "Parity"),
    ("df_epsilon", "DF-eps"),
    ("df_bias_amplification", "DF-amp"),
)


@dataclass
class FairnessReport:
    accuracy: float
    auc: float
    disparate_impact_mean: float
    parity_disc: float
    df_epsilon: float
    df_bias_amplification: float
    dataset_epsilon: float
    group_breakdown: dict
    privileged: dict
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["group_breakdown"] = [
            {"group": list(g), "positive_rate": r, "privileged": self.privileged[g]}
            for g, r in sorted(self.group_breakdown.items())
        ]
        del doc["privileged"]
        return doc

    def to_table(self, name: str = "model") -> str:
        return format_table({name: {k: getattr(self, k) for k, _ in REPORT_COLUMNS}})


def fairness_report(truth, pred, scores, groups, privileged, unprivileged, alpha: float = 1.0) -> FairnessReport:
    """Full metric suite for one set of predictions.

    ``scores`` are positive-class probabilities for AUC; ``privileged`` and
    ``unprivileged`` are sets of group keys.
    """
    stats = GroupStats.from_predictions(groups, pred, truth)
    flags: list = []
    clf_eps = df_epsilon(stats, alpha, flags)
    data_eps = df_epsilon(stats.label_stats(), alpha, flags)
    try:
        auc_value = auc(scores, truth)
    except DataError:
        auc_value = math.nan
        flags.append({"issue": "AUC undefined: only one class present"})
    rates = stats.rates()
    return FairnessReport(
        accuracy=accuracy(pred, truth),
        auc=auc_value,
        disparate_impact_mean=disparate_impact_mean(stats, privileged, unprivileged, flags),
        parity_disc=parity_disc(stats, privileged, unprivileged),
        df_epsilon=clf_eps,
        df_bias_amplification=df_bias_amplification(clf_eps, data_eps),
        dataset_epsilon=data_eps,
        group_breakdown=rates,
        privileged={g: g in privileged for g in rates},
        flags=flags,
    )


def format_table(rows: dict, spread: dict | None = None) -> str:
    """Aligned text table, one row per name, columns AUC .. DF-amp.

    ``spread`` optionally maps name -> metric -> variance, rendered as ``mean +- var``.
    """
    header = ["", *(label for _, label in REPORT_COLUMNS)]
    body = []
    for name, values in rows.items():
        cells = [name]
        for key, _ in REPORT_COLUMNS:
            cell = f"{values[key]:.4f}"
            if spread is not None:
                cell += f" +- {spread[name][key]:.4f}"
            cells.append(cell)
        body.append(cells)
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths))) for r in [header, *body]]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines)
