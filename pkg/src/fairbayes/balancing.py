"""Post-fit probability balancing on the NNB count table.

Both routines predict the training set with the current table, measure how
far the privileged/non-privileged positive rates are apart, and shift
pseudo-count mass in one group per iteration. Only privileged groups ever
lose positive mass; only non-privileged groups ever gain it.

Sub-estimator log-likelihoods are computed once per call; each iteration is
an O(n) threshold comparison against the table's log-odds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .errors import ConfigError
from .nnb import NNBModel, decision_thresholds, sample_log_likelihoods

PROB_FLOOR = 1e-12

CONVERGED = "converged"
ROLLBACK = "rollback"
MAX_ITERS = "max_iters"
ALREADY_FAIR = "already_fair"


@dataclass(frozen=True)
class BalanceConfig:
    delta: float = 0.01
    disc_threshold: float = 0.01
    max_iters: int = 10_000
    growth: float = 1.05
    delta_cap: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.disc_threshold < 0:
            raise ConfigError("disc_threshold must be >= 0")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ConfigError("max_iters must be a positive integer")
        if self.growth < 1.0:
            raise ConfigError("growth must be >= 1")
        if not self.delta <= self.delta_cap < 1.0:
            raise ConfigError("delta_cap must lie in [delta, 1)")

    @classmethod
    def from_dict(cls, doc: dict | None) -> "BalanceConfig":
        doc = dict(doc or {})
        unknown = set(doc) - {"delta", "disc_threshold", "max_iters", "growth", "delta_cap"}
        if unknown:
            raise ConfigError(f"unknown balance settings: {sorted(unknown)}")
        return cls(**doc)


@dataclass
class BalanceTrace:
    routine: str
    initial: dict
    records: list = field(default_factory=list)
    termination: str = ""
    best_iteration: int = 0  # 0 means the starting table

    def __len__(self) -> int:
        return len(self.records)

    def summary(self) -> dict:
        return {
            "routine": self.routine,
            "iterations": len(self.records),
            "termination": self.termination,
            "initial": self.initial,
            "final": self.records[-1] if self.records else self.initial,
            "best_iteration": self.best_iteration,
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps({"event": "start", "routine": self.routine, **self.initial})]
        lines += [json.dumps({"event": "step", **r}) for r in self.records]
        lines.append(json.dumps({"event": "end", "termination": self.termination, "best_iteration": self.best_iteration}))
        return "\n".join(lines) + "\n"

    def write_jsonl(self, path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")


def _check_partition(probabilities, privileged, unprivileged):
    if not privileged or not unprivileged:
        raise ConfigError("need at least one privileged and one non-privileged group")
    missing = [g for g in (*privileged, *unprivileged) if g not in probabilities]
    if missing:
        raise ConfigError(f"no probability given for groups {sorted(missing)}")


def _extremes(probabilities, privileged, unprivileged):
    # strict comparisons over sorted keys: ties resolve to the lexicographically first group
    s_max = s_min = None
    for g in sorted(privileged):
        if s_max is None or probabilities[g] > probabilities[s_max]:
            s_max = g
    for g in sorted(unprivileged):
        if s_min is None or probabilities[g] < probabilities[s_min]:
            s_min = g
    return s_max, s_min


def disc_score(probabilities: dict, privileged, unprivileged):
    """Return (disc, s_max, s_min): highest privileged rate minus lowest non-privileged rate."""
    _check_partition(probabilities, privileged, unprivileged)
    s_max, s_min = _extremes(probabilities, privileged, unprivileged)
    return float(probabilities[s_max] - probabilities[s_min]), s_max, s_min


def rho_scores(probabilities: dict, privileged, unprivileged):
    """Return (rho_d, rho_u, s_max, s_min) over privileged x non-privileged pairs.

    rho_d is the worst ratio in favour of a non-privileged group, rho_u the
    worst in favour of a privileged one; ``log(max(rho_d, rho_u))`` is the
    restricted epsilon.
    """
    _check_partition(probabilities, privileged, unprivileged)
    p = {g: max(float(probabilities[g]), PROB_FLOOR) for g in (*privileged, *unprivileged)}
    p_priv = [p[g] for g in privileged]
    p_np = [p[g] for g in unprivileged]
    rho_d = max(p_np) / min(p_priv)
    rho_u = max(p_priv) / min(p_np)
    s_max, s_min = _extremes(probabilities, privileged, unprivileged)
    return rho_d, rho_u, s_max, s_min


def restricted_epsilon(probabilities: dict, privileged, unprivileged) -> float:
    rho_d, rho_u, _, _ = rho_scores(probabilities, privileged, unprivileged)
    return float(np.log(max(rho_d, rho_u)))


class _TrainingPredictor:
    """Cached training-set predictions as a function of the count table."""

    def __init__(self, model: NNBModel, train: Dataset):
        loglik, codes = sample_log_likelihoods(model, train)
        self.margin = loglik[:, 1] - loglik[:, 0]
        self.codes = codes
        self.groups = model.groups
        self.sizes = np.bincount(codes, minlength=len(self.groups)).astype(float)
        if np.any(self.sizes == 0):
            absent = [g for g, n in zip(self.groups, self.sizes) if n == 0]
            raise ConfigError(f"training data has no rows for groups {absent}")
        self.alpha = model.count_table.alpha

    def positives(self, counts: np.ndarray) -> np.ndarray:
        threshold = decision_thresholds(counts, self.alpha)
        pred = self.margin > threshold[self.codes]
        return np.bincount(self.codes, weights=pred, minlength=len(self.groups))

    def rates(self, counts: np.ndarray):
        pos = self.positives(counts)
        return {g: r for g, r in zip(self.groups, pos / self.sizes)}, int(pos.sum())


def _group_list(g):
    return list(g) if g is not None else None


def balance_parity(model: NNBModel, train: Dataset, cfg: BalanceConfig | None = None):
    """Drive the disc score to at most ``cfg.disc_threshold``.

    Each step moves a fraction ``delta`` of one cell's mass to the other cell of
    the same group, so the group total is conserved. When the model predicts
    fewer positives than the training labels hold, the lowest non-privileged
    group gains positive mass; otherwise the highest privileged group loses it.
    """
    cfg = cfg or BalanceConfig()
    privileged, unprivileged = model.privileged, model.unprivileged
    predictor = _TrainingPredictor(model, train)
    index = {g: i for i, g in enumerate(model.groups)}
    target_pos = int(train.labels.sum())

    counts = model.count_table.counts.copy()
    rates, numpos = predictor.rates(counts)
    disc, s_max, s_min = disc_score(rates, privileged, unprivileged)
    trace = BalanceTrace("parity", {"disc": disc, "numpos": numpos, "s_max": _group_list(s_max), "s_min": _group_list(s_min)})
    if disc <= cfg.disc_threshold:
        trace.termination = ALREADY_FAIR
        return model, trace

    termination = MAX_ITERS
    for it in range(1, cfg.max_iters + 1):
        previous = counts.copy()
        if numpos < target_pos:
            branch, group = "raise", s_min
            i = index[group]
            moved = cfg.delta * counts[i, 0]
            counts[i, 1] += moved
            counts[i, 0] -= moved
        else:
            branch, group = "lower", s_max
            i = index[group]
            moved = cfg.delta * counts[i, 1]
            counts[i, 1] -= moved
            counts[i, 0] += moved
        if np.any(counts < 0):
            counts = previous
            termination = ROLLBACK
            break
        disc_before, numpos_before = disc, numpos
        rates, numpos = predictor.rates(counts)
        disc, s_max, s_min = disc_score(rates, privileged, unprivileged)
        trace.records.append({
            "iteration": it,
            "disc_before": disc_before,
            "numpos": numpos_before,
            "branch": branch,
            "group": list(group),
            "step": moved,
            "disc": disc,
            "counts": counts[i].tolist(),
        })
        if disc <= cfg.disc_threshold:
            termination = CONVERGED
            break

    trace.termination = termination
    trace.best_iteration = len(trace.records)
    return model.with_table(model.count_table.with_counts(counts)), trace


def balance_df(model: NNBModel, train: Dataset, cfg: BalanceConfig | None = None):
    """Shrink the restricted epsilon until max(rho_d, rho_u) <= 1 + disc_threshold.

    While the privileged side is favoured at least as much as the
    non-privileged side (rho_u >= rho_d), the lowest non-privileged group is
    raised; otherwise the highest privileged group is lowered. Updates are
    multiplicative on both cells of the chosen group. The step
    grows by ``cfg.growth`` while consecutive iterations take the same branch
    (capped at ``cfg.delta_cap``) and resets on a branch switch. The returned
    model carries the best table visited, not necessarily the last one.
    """
    cfg = cfg or BalanceConfig()
    privileged, unprivileged = model.privileged, model.unprivileged
    predictor = _TrainingPredictor(model, train)
    index = {g: i for i, g in enumerate(model.groups)}
    bound = 1.0 + cfg.disc_threshold

    counts = model.count_table.counts.copy()
    rates, numpos = predictor.rates(counts)
    rho_d, rho_u, s_max, s_min = rho_scores(rates, privileged, unprivileged)
    score = max(rho_d, rho_u)
    trace = BalanceTrace("df", {
        "rho_d": rho_d, "rho_u": rho_u, "epsilon": float(np.log(score)), "numpos": numpos,
        "s_max": _group_list(s_max), "s_min": _group_list(s_min),
    })
    if score <= bound:
        trace.termination = ALREADY_FAIR
        return model, trace

    best_score, best_counts, best_it = score, counts.copy(), 0
    last_branch, step = None, cfg.delta
    termination = MAX_ITERS
    for it in range(1, cfg.max_iters + 1):
        # disadvantage of non-privileged groups (rho_u) dominating -> lift the lowest of them
        branch = "raise" if rho_d <= rho_u else "lower"
        step = min(step * cfg.growth, cfg.delta_cap) if branch == last_branch else cfg.delta
        last_branch = branch
        group = s_min if branch == "raise" else s_max
        i = index[group]
        previous = counts[i].copy()
        with np.errstate(over="ignore"):
            if branch == "raise":
                counts[i, 0] -= step * counts[i, 0]
                counts[i, 1] += step * counts[i, 1]
            else:
                counts[i, 0] += step * counts[i, 0]
                counts[i, 1] -= step * counts[i, 1]
        # a saturated group keeps growing one cell geometrically; stop before it overflows
        if not np.all(np.isfinite(counts[i])) or np.any(counts[i] < 0):
            counts[i] = previous
            termination = ROLLBACK
            break
        rho_d_before, rho_u_before = rho_d, rho_u
        rates, numpos = predictor.rates(counts)
        rho_d, rho_u, s_max, s_min = rho_scores(rates, privileged, unprivileged)
        score = max(rho_d, rho_u)
        trace.records.append({
            "iteration": it,
            "rho_d_before": rho_d_before,
            "rho_u_before": rho_u_before,
            "branch": branch,
            "group": list(group),
            "step": step,
            "rho_d": rho_d,
            "rho_u": rho_u,
            "epsilon": float(np.log(score)),
            "numpos": numpos,
            "counts": counts[i].tolist(),
        })
        if score < best_score:
            best_score, best_counts, best_it = score, counts.copy(), it
        if score <= bound:
            termination = CONVERGED
            break

    trace.termination = termination
    trace.best_iteration = best_it
    return model.with_table(model.count_table.with_counts(best_counts)), trace
