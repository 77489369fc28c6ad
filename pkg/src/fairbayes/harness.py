"""Config-driven training, evaluation and multi-split benchmarking."""

from __future__ import annotations

import hashlib
import json
import platform
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, gnb, nnb
from .balancing import BalanceConfig, balance_df, balance_parity
from .dataset import Dataset, Schema, SplitSpec, load_csv, load_schema, partition_privileged, split
from .errors import ConfigError, DataError, FairBayesError, SchemaError
from .metrics import REPORT_COLUMNS, FairnessReport, fairness_report, format_table

MODES = ("gnb_baseline", "nnb_parity", "nnb_df", "perfect")
GNB_FORMAT = "fairbayes.gnb_baseline"
PERFECT_FORMAT = "fairbayes.perfect"


@dataclass(frozen=True)
class RunConfig:
    data: Path | None = None
    schema: Schema | None = None
    mode: str = "nnb_parity"
    modes: tuple = MODES
    alpha: float = 1.0
    balance: BalanceConfig = field(default_factory=BalanceConfig)
    min_group_size: int = 2
    fallback: bool = False
    split_count: int = 10
    split_seed: int = 0
    test_fraction: float = 0.3
    model: Path | None = None
    trace_out: Path | None = None
    raw: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, doc: dict, base: Path | None = None) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        base = base or Path(".")

        def path(key):
            return None if doc.get(key) is None else base / doc[key]

        schema = doc.get("schema")
        if schema is not None:
            schema = load_schema(schema if isinstance(schema, dict) else base / schema)

        mode = doc.get("mode", "nnb_parity")
        modes = tuple(doc.get("modes", MODES))
        for m in (mode, *modes):
            if m not in MODES:
                raise ConfigError(f"unknown mode {m!r}; expected one of {MODES}")
        splits = doc.get("splits", {})
        if not isinstance(splits, dict):
            raise ConfigError("'splits' must be an object with count/seed/test_fraction")
        try:
            cfg = cls(
                data=path("data"),
                schema=schema,
                mode=mode,
                modes=modes,
                alpha=float(doc.get("alpha", 1.0)),
                balance=BalanceConfig.from_dict(doc.get("balance")),
                min_group_size=int(doc.get("min_group_size", 2)),
                fallback=bool(doc.get("fallback", False)),
                split_count=int(splits.get("count", 10)),
                split_seed=int(splits.get("seed", 0)),
                test_fraction=float(splits.get("test_fraction", 0.3)),
                model=path("model"),
                trace_out=path("trace_out"),
                raw=doc,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from None
        if cfg.alpha < 0:
            raise ConfigError("alpha must be non-negative")
        if cfg.split_count < 1:
            raise ConfigError("splits.count must be >= 1")
        SplitSpec(cfg.test_fraction, cfg.split_seed)
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(doc, path.parent)

    def require(self, *keys):
        missing = [k for k in keys if getattr(self, k) is None]
        if missing:
            raise ConfigError(f"config is missing: {', '.join(missing)}")

    def hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def train_model(train: Dataset, mode: str, cfg: RunConfig):
    """Fit (and balance) one model. Returns ``(model_doc_or_model, trace)``."""
    if mode == "perfect":
        return {"format": PERFECT_FORMAT, "schema": train.schema.to_dict()}, None
    if mode == "gnb_baseline":
        est = gnb.fit(train.features, train.labels)
        return {"format": GNB_FORMAT, "schema": train.schema.to_dict(), "estimator": est.to_dict()}, None

    options = nnb.FitOptions(min_group_size=cfg.min_group_size, fallback=cfg.fallback)
    model = nnb.fit(train, cfg.alpha, options)
    balance = balance_parity if mode == "nnb_parity" else balance_df
    model, trace = balance(model, train, cfg.balance)
    model = replace(model, meta={"mode": mode, "balance": trace.summary()})
    return model, trace


def model_document(model) -> dict:
    return model.to_dict() if isinstance(model, nnb.NNBModel) else model


def load_model(doc: dict):
    fmt = doc.get("format")
    if fmt == nnb.MODEL_FORMAT:
        return nnb.NNBModel.from_dict(doc)
    if fmt in (GNB_FORMAT, PERFECT_FORMAT):
        Schema.from_dict(doc["schema"])
        return doc
    raise DataError(f"unrecognised model format {fmt!r}")


def model_schema(model) -> Schema:
    return model.schema if isinstance(model, nnb.NNBModel) else Schema.from_dict(model["schema"])


def check_schema(expected: Schema, given: Schema) -> None:
    mismatched = []
    if expected.label_column != given.label_column:
        mismatched.append(f"label ({expected.label_column} vs {given.label_column})")
    if expected.positive_label != given.positive_label:
        mismatched.append("positive_label")
    if expected.sensitive_columns != given.sensitive_columns:
        mismatched.append(f"sensitive {list(expected.sensitive_columns)} vs {list(given.sensitive_columns)}")
    if expected.feature_columns != given.feature_columns:
        mismatched.append(f"features {list(expected.feature_columns)} vs {list(given.feature_columns)}")
    if mismatched:
        raise SchemaError("model and data schemas differ: " + "; ".join(mismatched))


def predict_with(model, data: Dataset):
    """Return (hard predictions, positive-class scores)."""
    if isinstance(model, nnb.NNBModel):
        loglik, codes = nnb.sample_log_likelihoods(model, data)
        pred = nnb.predict_from_cache(model, loglik, codes)
        scores = gnb._softmax_positive(nnb.scores_from_cache(model, loglik, codes))
        return pred, scores
    if model["format"] == GNB_FORMAT:
        est = gnb.GaussianNBModel.from_dict(model["estimator"])
        return gnb.predict(est, data.features), gnb.predict_proba(est, data.features)
    labels = data.labels.astype(np.int8)
    return labels, labels.astype(float)


def evaluate_model(model, data: Dataset, alpha: float = 1.0) -> FairnessReport:
    privileged, unprivileged = partition_privileged(data)
    pred, scores = predict_with(model, data)
    return fairness_report(data.labels, pred, scores, data.groups, privileged, unprivileged, alpha)


def aggregate(reports: list) -> dict:
    """Mean and population variance of every headline metric over splits."""
    out = {}
    for key, _ in REPORT_COLUMNS:
        values = np.array([getattr(r, key) for r in reports], dtype=float)
        out[key] = {"mean": float(values.mean()), "variance": float(values.var())}
    return out


def run_benchmark(cfg: RunConfig, dataset: Dataset | None = None) -> dict:
    """Split, fit, balance and evaluate every mode over ``cfg.split_count`` seeds.

    Returns ``{"body": ..., "metadata": ...}``; the body is a deterministic
    function of config and data, the metadata carries the timestamp.
    """
    if dataset is None:
        cfg.require("data", "schema")
        dataset = load_csv(cfg.data, cfg.schema)
    per_mode = {m: {"splits": []} for m in cfg.modes}
    for i in range(cfg.split_count):
        seed = cfg.split_seed + i
        try:
            train, test = split(dataset, SplitSpec(cfg.test_fraction, seed))
            for mode in cfg.modes:
                model, trace = train_model(train, mode, cfg)
                report = evaluate_model(model, test, cfg.alpha)
                entry = {"seed": seed, "report": report}
                if trace is not None:
                    entry["balance"] = {"iterations": len(trace), "termination": trace.termination}
                per_mode[mode]["splits"].append(entry)
        except FairBayesError as exc:
            raise type(exc)(f"split with seed {seed} failed: {exc}") from exc

    body = {"config_hash": cfg.hash(), "config": cfg.raw, "modes": {}}
    for mode, result in per_mode.items():
        reports = [e["report"] for e in result["splits"]]
        body["modes"][mode] = {
            "aggregate": aggregate(reports),
            "splits": [{**e, "report": e["report"].to_dict()} for e in result["splits"]],
        }
    metadata = {
        "fairbayes": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    return {"body": body, "metadata": metadata}


def benchmark_table(result: dict) -> str:
    modes = result["body"]["modes"]
    means = {m: {k: v["mean"] for k, v in r["aggregate"].items()} for m, r in modes.items()}
    spread = {m: {k: v["variance"] for k, v in r["aggregate"].items()} for m, r in modes.items()}
    return format_table(means, spread)


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True)
