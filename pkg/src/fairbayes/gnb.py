"""Gaussian naive Bayes sub-estimator for binary labels.

Parameters are fitted by maximum likelihood (variance divisor n). Scoring
happens in log space throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

VAR_SMOOTHING = 1e-9
_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class GaussianNBModel:
    class_log_prior: np.ndarray  # shape (2,), -inf for a class absent at fit time
    means: np.ndarray  # shape (2, d)
    variances: np.ndarray  # shape (2, d)
    n_fit: int

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    @property
    def present(self) -> np.ndarray:
        return np.isfinite(self.class_log_prior)

    def to_dict(self) -> dict:
        return {
            "class_log_prior": [float(v) if np.isfinite(v) else None for v in self.class_log_prior],
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "n_fit": self.n_fit,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GaussianNBModel":
        prior = np.array([-np.inf if v is None else v for v in doc["class_log_prior"]], dtype=float)
        return cls(prior, np.array(doc["means"], dtype=float), np.array(doc["variances"], dtype=float), int(doc["n_fit"]))


def fit(features, labels) -> GaussianNBModel:
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise DataError("fit needs at least one sample and one feature")
    if y.shape != (X.shape[0],):
        raise DataError("labels must have one entry per sample")
    if np.isnan(X).any():
        raise DataError("features contain NaN")

    global_var = X.var(axis=0).max()
    floor = VAR_SMOOTHING * global_var if global_var > 0 else VAR_SMOOTHING

    means = np.zeros((2, X.shape[1]))
    variances = np.ones((2, X.shape[1]))
    log_prior = np.full(2, -np.inf)
    n = X.shape[0]
    for c in (0, 1):
        rows = X[y == c]
        if rows.shape[0] == 0:
            continue
        means[c] = rows.mean(axis=0)
        variances[c] = np.maximum(rows.var(axis=0), floor)
        log_prior[c] = np.log(rows.shape[0] / n)
    return GaussianNBModel(log_prior, means, variances, n)


def log_likelihood(model: GaussianNBModel, x) -> np.ndarray:
    """log P(x|y) for y in (0, 1), prior excluded. Absent classes score -inf."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n_features,):
        raise DataError(f"expected {model.n_features} features, got shape {x.shape}")
    return log_likelihoods(model, x[None, :])[0]


def log_likelihoods(model: GaussianNBModel, X) -> np.ndarray:
    """Row-wise ``log_likelihood`` for an (n, d) matrix; returns (n, 2)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DataError(f"expected an (n, {model.n_features}) matrix, got shape {X.shape}")
    out = np.empty((X.shape[0], 2))
    for c in (0, 1):
        if not model.present[c]:
            out[:, c] = -np.inf
            continue
        var = model.variances[c]
        z2 = (X - model.means[c]) ** 2 / var
        out[:, c] = -0.5 * (np.sum(np.log(var)) + X.shape[1] * _LOG_2PI + z2.sum(axis=1))
    return out


def joint_log_likelihood(model: GaussianNBModel, X) -> np.ndarray:
    return log_likelihoods(model, X) + model.class_log_prior


def predict(model: GaussianNBModel, X) -> np.ndarray:
    jll = joint_log_likelihood(model, X)
    # ties go to the negative class
    return (jll[:, 1] > jll[:, 0]).astype(np.int8)


def predict_proba(model: GaussianNBModel, X) -> np.ndarray:
    jll = joint_log_likelihood(model, X)
    return _softmax_positive(jll)


def _softmax_positive(scores: np.ndarray) -> np.ndarray:
    top = scores.max(axis=1, keepdims=True)
    shifted = np.exp(scores - top)
    return shifted[:, 1] / shifted.sum(axis=1)
