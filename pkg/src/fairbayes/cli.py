"""``fairbayes synth|train|evaluate|benchmark --config <path>``.

Exit codes: 0 success, 2 config/schema error, 3 data error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from .dataset import GroupSpec, generate_synthetic, load_csv, load_schema, write_csv
from .errors import ConfigError, FairBayesError
from .harness import (
    RunConfig,
    benchmark_table,
    check_schema,
    dumps,
    evaluate_model,
    load_model,
    model_document,
    model_schema,
    run_benchmark,
    train_model,
)


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def cmd_synth(config_path, out, fmt="json") -> int:
    doc = _read_json(config_path)
    if not isinstance(doc, dict) or not doc.get("groups"):
        raise ConfigError("synth config needs a non-empty 'groups' list")
    if out is None:
        raise ConfigError("synth needs --out for the CSV")
    groups = [GroupSpec.from_dict(g) for g in doc["groups"]]
    data = generate_synthetic(
        groups,
        seed=int(doc.get("seed", 0)),
        sensitive_columns=doc.get("sensitive"),
        feature_columns=doc.get("features"),
        privileged=doc.get("privileged", []),
        label_column=doc.get("label", "label"),
        positive_label=str(doc.get("positive_label", "1")),
    )
    out = Path(out)
    tmp = out.with_name(f".{out.name}.tmp")
    try:
        write_csv(data, tmp, negative_label=str(doc.get("negative_label", "0")))
        os.replace(tmp, out)
    finally:
        tmp.unlink(missing_ok=True)
    if doc.get("schema_out"):
        _atomic_write(Path(config_path).parent / doc["schema_out"], dumps(data.schema.to_dict()))
    print(f"wrote {len(data)} rows, {len(data.group_keys)} groups to {out}")
    return 0


def cmd_train(config_path, out, fmt="json") -> int:
    cfg = RunConfig.load(config_path)
    cfg.require("data", "schema")
    out = Path(out) if out else cfg.model
    if out is None:
        raise ConfigError("train needs --out or a 'model' path in the config")
    data = load_csv(cfg.data, cfg.schema)
    model, trace = train_model(data, cfg.mode, cfg)
    _atomic_write(out, dumps(model_document(model)))
    if trace is not None:
        if cfg.trace_out is not None:
            _atomic_write(cfg.trace_out, trace.to_jsonl())
        summary = trace.summary()
        print(f"{cfg.mode}: {summary['iterations']} balancing iterations, termination={summary['termination']}")
    print(f"model written to {out}")
    return 0


def cmd_evaluate(config_path, out, fmt="json") -> int:
    doc = _read_json(config_path)
    base = Path(config_path).parent
    if not isinstance(doc, dict) or "model" not in doc or "data" not in doc:
        raise ConfigError("evaluate config needs 'model' and 'data'")
    model = load_model(_read_json(base / doc["model"]))
    schema = model_schema(model)
    if doc.get("schema") is not None:
        given = load_schema(doc["schema"] if isinstance(doc["schema"], dict) else base / doc["schema"])
        check_schema(schema, given)
        schema = given
    data = load_csv(base / doc["data"], schema)
    report = evaluate_model(model, data, float(doc.get("alpha", 1.0)))
    text = report.to_table(doc.get("name", "model")) if fmt == "table" else dumps(report.to_dict())
    if out:
        _atomic_write(Path(out), text + "\n")
    print(text)
    return 0


def cmd_benchmark(config_path, out, fmt="json") -> int:
    cfg = RunConfig.load(config_path)
    result = run_benchmark(cfg)
    if out:
        _atomic_write(Path(out), dumps(result) + "\n")
    print(benchmark_table(result) if fmt == "table" or out else dumps(result))
    return 0


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "evaluate": cmd_evaluate, "benchmark": cmd_benchmark}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairbayes", description="Fair N-naive-Bayes toolkit")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", help="output path")
    parser.add_argument("--format", choices=("json", "table"), default="json")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args.config, args.out, args.format)
    except FairBayesError as exc:
        print(f"fairbayes {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        print(f"fairbayes {args.command}: unexpected error: {exc!r}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
