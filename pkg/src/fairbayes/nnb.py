"""N-naive-Bayes: one Gaussian NB per sensitive group, tied together by a
pseudo-count table N(y, s) that defines the joint P(Y, S).

The score of class y for a sample (x, s) is

    log P(x | y; C_s) + log P(s, y)

where C_s is the sub-estimator trained on group s only. The balancing
routines in :mod:`fairbayes.balancing` only ever touch the count table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import gnb
from .dataset import Dataset, GroupKey, Schema, partition_privileged
from .errors import ConfigError, DataError, UnknownGroupError

MODEL_FORMAT = "fairbayes.nnb"


@dataclass(frozen=True, eq=False)
class CountTable:
    """Real-valued pseudo-counts, ``counts[i, y]`` for group ``groups[i]``."""

    groups: tuple
    counts: np.ndarray
    alpha: float = 1.0

    def __post_init__(self):
        counts = np.array(self.counts, dtype=float)
        groups = tuple(tuple(g) for g in self.groups)
        if counts.shape != (len(groups), 2):
            raise ConfigError("count table must have one (N0, N1) row per group")
        if self.alpha < 0:
            raise ConfigError("alpha must be non-negative")
        if np.any(counts < 0):
            raise ConfigError("count table entries must be non-negative")
        if counts.sum() + 2 * len(groups) * self.alpha <= 0:
            raise ConfigError("count table has no mass")
        counts.setflags(write=False)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "_index", {g: i for i, g in enumerate(groups)})

    def index(self, group) -> int:
        try:
            return self._index[tuple(group)]
        except KeyError:
            raise UnknownGroupError(group) from None

    def __contains__(self, group) -> bool:
        return tuple(group) in self._index

    def with_counts(self, counts) -> "CountTable":
        return CountTable(self.groups, counts, self.alpha)

    def joint_log_probs(self) -> np.ndarray:
        """(G, 2) array of log P(s, y) with per-cell smoothing."""
        smoothed = self.counts + self.alpha
        with np.errstate(divide="ignore"):
            return np.log(smoothed) - np.log(smoothed.sum())

    def conditional_probs(self) -> np.ndarray:
        """(G, 2) array of smoothed P(y | s)."""
        totals = self.counts.sum(axis=1, keepdims=True)
        return (self.counts + self.alpha) / (totals + 2 * self.alpha)


def decision_thresholds(counts: np.ndarray, alpha: float) -> np.ndarray:
    """Per-group log-odds a sample's likelihood margin must exceed to be labelled 1.

    ``log P(x|1) - log P(x|0) > log(N0 + a) - log(N1 + a)`` is the argmax rule
    with ties going to 0; the joint normaliser cancels.
    """
    smoothed = np.asarray(counts, dtype=float) + alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(smoothed[:, 0]) - np.log(smoothed[:, 1])


def conditional_prob(table: CountTable, y: int, s: GroupKey) -> float:
    i = table.index(s)
    n_s = table.counts[i].sum()
    return float((table.counts[i, y] + table.alpha) / (n_s + 2 * table.alpha))


def joint_log_prob(table: CountTable, y: int, s: GroupKey) -> float:
    return float(table.joint_log_probs()[table.index(s), y])


@dataclass(frozen=True)
class FitOptions:
    min_group_size: int = 2
    require_partition: bool = True
    fallback: bool = False


@dataclass(frozen=True, eq=False)
class NNBModel:
    sub_estimators: dict
    count_table: CountTable
    schema: Schema
    privileged: frozenset = frozenset()
    unprivileged: frozenset = frozenset()
    fallback: gnb.GaussianNBModel | None = None
    meta: dict = field(default_factory=dict)

    @property
    def groups(self) -> tuple:
        return self.count_table.groups

    def with_table(self, table: CountTable) -> "NNBModel":
        return replace(self, count_table=table)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": 1,
            "schema": self.schema.to_dict(),
            "alpha": self.count_table.alpha,
            "groups": [list(g) for g in self.groups],
            "counts": self.count_table.counts.tolist(),
            "privileged": sorted(list(g) for g in self.privileged),
            "sub_estimators": [self.sub_estimators[g].to_dict() for g in self.groups],
            "fallback": None if self.fallback is None else self.fallback.to_dict(),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NNBModel":
        if doc.get("format") != MODEL_FORMAT:
            raise DataError(f"not an NNB model document (format={doc.get('format')!r})")
        schema = Schema.from_dict(doc["schema"])
        groups = tuple(tuple(g) for g in doc["groups"])
        table = CountTable(groups, doc["counts"], doc["alpha"])
        privileged = frozenset(tuple(g) for g in doc["privileged"])
        return cls(
            sub_estimators={g: gnb.GaussianNBModel.from_dict(d) for g, d in zip(groups, doc["sub_estimators"])},
            count_table=table,
            schema=schema,
            privileged=privileged,
            unprivileged=frozenset(groups) - privileged,
            fallback=None if doc.get("fallback") is None else gnb.GaussianNBModel.from_dict(doc["fallback"]),
            meta=doc.get("meta", {}),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "NNBModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def fit(train: Dataset, alpha: float = 1.0, options: FitOptions | None = None) -> NNBModel:
    options = options or FitOptions()
    if alpha < 0:
        raise ConfigError("alpha must be non-negative")
    groups = train.group_keys
    codes = train.group_codes
    sizes = np.bincount(codes, minlength=len(groups))
    small = [g for g, n in zip(groups, sizes) if n < options.min_group_size]
    if small:
        raise DataError(
            f"groups with fewer than {options.min_group_size} samples: {small}; merge or drop them"
        )

    if options.require_partition:
        privileged, unprivileged = partition_privileged(train)
    else:
        privileged = {g for g in groups if train.schema.is_privileged(g)}
        unprivileged = set(groups) - privileged

    subs = {}
    counts = np.zeros((len(groups), 2))
    for i, g in enumerate(groups):
        rows = codes == i
        subs[g] = gnb.fit(train.features[rows], train.labels[rows])
        counts[i] = np.bincount(train.labels[rows], minlength=2)

    return NNBModel(
        sub_estimators=subs,
        count_table=CountTable(tuple(groups), counts, alpha),
        schema=train.schema,
        privileged=frozenset(privileged),
        unprivileged=frozenset(unprivileged),
        fallback=gnb.fit(train.features, train.labels) if options.fallback else None,
    )


def _fallback_log_prior(model: NNBModel) -> np.ndarray:
    table = model.count_table
    totals = table.counts.sum(axis=0)
    with np.errstate(divide="ignore"):
        return np.log((totals + table.alpha) / (totals.sum() + 2 * table.alpha))


def predict_scores(model: NNBModel, x, s: GroupKey) -> np.ndarray:
    s = tuple(s)
    if s in model.count_table:
        i = model.count_table.index(s)
        return gnb.log_likelihood(model.sub_estimators[s], x) + model.count_table.joint_log_probs()[i]
    if model.fallback is None:
        raise UnknownGroupError(s)
    return gnb.log_likelihood(model.fallback, x) + _fallback_log_prior(model)


def predict(model: NNBModel, x, s: GroupKey) -> int:
    loglik, codes = _single(model, x, s)
    return int(predict_from_cache(model, loglik, codes)[0])


def _single(model: NNBModel, x, s: GroupKey):
    s = tuple(s)
    if s in model.count_table:
        return gnb.log_likelihood(model.sub_estimators[s], x)[None, :], np.array([model.count_table.index(s)])
    if model.fallback is None:
        raise UnknownGroupError(s)
    return gnb.log_likelihood(model.fallback, x)[None, :], np.array([-1])


def predict_proba(model: NNBModel, x, s: GroupKey) -> float:
    return float(gnb._softmax_positive(predict_scores(model, x, s)[None, :])[0])


def sample_log_likelihoods(model: NNBModel, data: Dataset):
    """Per-row log P(x|y) under each row's own sub-estimator.

    Returns ``(loglik, codes)`` where ``loglik`` is (n, 2) and ``codes`` indexes
    ``model.groups`` (-1 for rows routed to the fallback estimator). This is the
    only O(n*d) step; everything downstream re-adds table terms.
    """
    if data.features.shape[1] != len(model.schema.feature_columns):
        raise DataError("data and model disagree on the number of features")
    table = model.count_table
    codes = np.full(len(data), -1, dtype=np.intp)
    loglik = np.empty((len(data), 2))
    data_codes = data.group_codes
    for j, g in enumerate(data.group_keys):
        rows = data_codes == j
        if g in table:
            codes[rows] = table.index(g)
            loglik[rows] = gnb.log_likelihoods(model.sub_estimators[g], data.features[rows])
        elif model.fallback is not None:
            loglik[rows] = gnb.log_likelihoods(model.fallback, data.features[rows])
        else:
            raise UnknownGroupError(g)
    return loglik, codes


def scores_from_cache(model: NNBModel, loglik: np.ndarray, codes: np.ndarray) -> np.ndarray:
    joint = model.count_table.joint_log_probs()
    out = loglik.copy()
    known = codes >= 0
    out[known] += joint[codes[known]]
    if not known.all():
        out[~known] += _fallback_log_prior(model)
    return out


def batch_scores(model: NNBModel, data: Dataset) -> np.ndarray:
    return scores_from_cache(model, *sample_log_likelihoods(model, data))


def predict_from_cache(model: NNBModel, loglik: np.ndarray, codes: np.ndarray) -> np.ndarray:
    margin = loglik[:, 1] - loglik[:, 0]
    thresholds = decision_thresholds(model.count_table.counts, model.count_table.alpha)
    known = codes >= 0
    thr = np.empty(len(codes))
    thr[known] = thresholds[codes[known]]
    if not known.all():
        prior = _fallback_log_prior(model)
        thr[~known] = prior[0] - prior[1]
    return (margin > thr).astype(np.int8)


def batch_predict(model: NNBModel, data: Dataset) -> np.ndarray:
    return predict_from_cache(model, *sample_log_likelihoods(model, data))


def batch_predict_proba(model: NNBModel, data: Dataset) -> np.ndarray:
    return gnb._softmax_positive(batch_scores(model, data))
