"""Command-line front door.

Subcommands mirror the pipeline stages so each step can run alone:

    simulate    generate a synthetic world from a settings JSON
    ingest      validate records, join survey flags, write normalized JSONL
    featurize   turn records into training datasets plus schema files
    train       fit one learner on a dataset file and serialize it
    evaluate    cross-validate on one dataset, or train/test across two
    estimate    run the whole estimation pipeline from a run-config JSON
    report      render a finished run's summary table

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace

from .errors import DataError, PhotocensusError, UsageError
from .evaluation import CvPlan, cross_dataset_eval, cross_validate, report_to_json
from .features import read_dataset, write_dataset, write_schema
from .models import CLASSIFICATION_KINDS, KINDS, REGRESSION_KINDS, LearnerSpec, fit, save_model
from .pipeline import (
    assemble_run_data,
    featurize_run_data,
    load_labeled_records,
    load_run_config,
    run_estimate_pipeline,
)
from .records import write_records_jsonl
from .synth import export_world, generate, sim_config_from_dict

PROBLEM_DEFAULTS = {
    "estimate": ("elastic_net", ("mse", "r2")),
    "shareability": ("logistic_regression", ("accuracy", "f1")),
}


def _load_json_object(path: str, what: str) -> dict:
    if not os.path.exists(path):
        raise DataError(f"{what} file not found: {path}")
    with open(path, "r", encoding="utf-8") as handle:
        try:
            obj = json.load(handle)
        except json.JSONDecodeError as exc:
            raise DataError(f"{what} is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise DataError(f"{what} must be a JSON object")
    return obj


def _cmd_simulate(args: argparse.Namespace) -> int:
    obj = _load_json_object(args.config, "simulation config")
    try:
        config = sim_config_from_dict(obj)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    os.makedirs(args.out, exist_ok=True)
    records_path = os.path.join(args.out, "records.jsonl")
    truth_path = os.path.join(args.out, "truth.json")
    export_world(generate(config), records_path, truth_path)
    print(f"records: {records_path}")
    print(f"truth: {truth_path}")
    return 0


def _cmd_ingest(args: argparse.Namespace) -> int:
    records = load_labeled_records(args.records, args.labels)
    data = assemble_run_data(records)
    write_records_jsonl(list(records), args.out)
    print(
        f"{len(records)} records, {len(data.collections)} collections, "
        f"occasions {data.occasions[0]}..{data.occasions[-1]}"
    )
    return 0


def _cmd_featurize(args: argparse.Namespace) -> int:
    records = load_labeled_records(args.records, args.labels)
    bundle = featurize_run_data(assemble_run_data(records), args.schema)
    os.makedirs(args.out, exist_ok=True)
    outputs = {
        "estimate_dataset.json": lambda p: write_dataset(bundle.estimate_dataset, p),
        "shareability_dataset.json": lambda p: write_dataset(bundle.shareability_dataset, p),
        "collection_schema.json": lambda p: write_schema(bundle.collection_schema, p),
        "image_schema.json": lambda p: write_schema(bundle.image_schema, p),
    }
    for name, writer in outputs.items():
        writer(os.path.join(args.out, name))
    print(f"wrote {len(outputs)} files to {args.out}")
    return 0


def _learner_spec(args: argparse.Namespace, default_kind: str) -> LearnerSpec:
    kind = args.learner if args.learner is not None else default_kind
    hyperparameters = {}
    if getattr(args, "hyperparameters", None):
        try:
            hyperparameters = json.loads(args.hyperparameters)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--hyperparameters is not valid JSON: {exc}") from None
        if not isinstance(hyperparameters, dict):
            raise UsageError("--hyperparameters must be a JSON object")
    try:
        return LearnerSpec(kind=kind, hyperparameters=hyperparameters, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _cmd_train(args: argparse.Namespace) -> int:
    if not os.path.exists(args.dataset):
        raise DataError(f"dataset file not found: {args.dataset}")
    dataset = read_dataset(args.dataset)
    spec = _learner_spec(args, default_kind="elastic_net")
    save_model(fit(spec, dataset), args.out)
    print(f"model: {args.out}")
    return 0


def _evaluate_dataset(args: argparse.Namespace, records_path: str):
    records = load_labeled_records(records_path, args.labels)
    bundle = featurize_run_data(assemble_run_data(records))
    if args.problem == "estimate":
        return bundle.estimate_dataset
    return bundle.shareability_dataset


def _cmd_evaluate(args: argparse.Namespace) -> int:
    default_kind, default_metrics = PROBLEM_DEFAULTS[args.problem]
    spec = _learner_spec(args, default_kind=default_kind)
    allowed = REGRESSION_KINDS if args.problem == "estimate" else CLASSIFICATION_KINDS
    if spec.kind not in allowed:
        raise UsageError(f"{spec.kind} cannot learn the {args.problem} problem")
    metrics = tuple(args.metrics.split(",")) if args.metrics else default_metrics

    if args.protocol == "cross":
        if args.train is None or args.test is None:
            raise UsageError("--protocol cross needs --train and --test")
        train_set = _evaluate_dataset(args, args.train)
        test_set = _evaluate_dataset(args, args.test)
        report = cross_dataset_eval(spec, train_set, test_set, metrics)
    else:
        if args.records is None:
            raise UsageError("--protocol cv needs --records")
        dataset = _evaluate_dataset(args, args.records)
        plan = CvPlan(
            n_folds=args.folds,
            n_repeats=args.repeats,
            stratified=args.stratified,
            seed=args.cv_seed,
        )
        report = cross_validate(spec, dataset, plan, metrics)

    text = report_to_json(report)
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        print(f"report: {args.out}")
    else:
        print(text)
    return 0


def _cmd_estimate(args: argparse.Namespace) -> int:
    config = load_run_config(args.config)
    if args.no_official:
        config = replace(config, census_path=None)
    result = run_estimate_pipeline(config)
    print(f"summary: {result.summary_path}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    path = os.path.join(args.run, "summary.csv")
    if not os.path.exists(path):
        raise DataError(f"summary file not found: {path}")
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    for row in rows:
        print("  ".join(cell.rjust(width) for cell, width in zip(row, widths)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photocensus",
        description="Population estimation from biased photo collections.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="generate a synthetic world")
    simulate.add_argument("--config", required=True, help="simulation settings JSON")
    simulate.add_argument("--out", required=True, help="output directory")
    simulate.add_argument("--seed", type=int, default=None, help="override the config seed")
    simulate.set_defaults(handler=_cmd_simulate)

    ingest = commands.add_parser("ingest", help="validate and normalize records")
    ingest.add_argument("--records", required=True, help="records JSONL to read")
    ingest.add_argument("--labels", default=None, help="survey labels CSV to join")
    ingest.add_argument("--out", required=True, help="normalized records JSONL to write")
    ingest.set_defaults(handler=_cmd_ingest)

    featurize = commands.add_parser("featurize", help="build datasets from records")
    featurize.add_argument("--records", required=True)
    featurize.add_argument("--labels", default=None)
    featurize.add_argument("--schema", default=None, help="pinned collection schema JSON")
    featurize.add_argument("--out", required=True, help="output directory")
    featurize.set_defaults(handler=_cmd_featurize)

    train = commands.add_parser("train", help="fit a learner on a dataset file")
    train.add_argument("--dataset", required=True, help="dataset JSON from featurize")
    train.add_argument("--learner", choices=sorted(KINDS), default=None)
    train.add_argument("--hyperparameters", default=None, help="JSON object")
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--out", required=True, help="model JSON to write")
    train.set_defaults(handler=_cmd_train)

    evaluate = commands.add_parser("evaluate", help="score a learner")
    evaluate.add_argument("--protocol", choices=("cv", "cross"), default="cv")
    evaluate.add_argument("--problem", choices=sorted(PROBLEM_DEFAULTS), default="estimate")
    evaluate.add_argument("--records", default=None, help="records JSONL (cv protocol)")
    evaluate.add_argument("--train", default=None, help="training records JSONL (cross)")
    evaluate.add_argument("--test", default=None, help="test records JSONL (cross)")
    evaluate.add_argument("--labels", default=None)
    evaluate.add_argument("--learner", choices=sorted(KINDS), default=None)
    evaluate.add_argument("--hyperparameters", default=None, help="JSON object")
    evaluate.add_argument("--seed", type=int, default=0)
    evaluate.add_argument("--metrics", default=None, help="comma-separated metric names")
    evaluate.add_argument("--folds", type=int, default=10)
    evaluate.add_argument("--repeats", type=int, default=10)
    evaluate.add_argument("--stratified", action="store_true")
    evaluate.add_argument("--cv-seed", type=int, default=0)
    evaluate.add_argument("--out", default=None, help="report JSON (default stdout)")
    evaluate.set_defaults(handler=_cmd_evaluate)

    estimate = commands.add_parser("estimate", help="run the full pipeline")
    estimate.add_argument("--config", required=True, help="run-config JSON")
    estimate.add_argument(
        "--no-official",
        action="store_true",
        help="run without a reference census even if the config names one",
    )
    estimate.set_defaults(handler=_cmd_estimate)

    report = commands.add_parser("report", help="print a finished run's summary")
    report.add_argument("--run", required=True, help="pipeline output directory")
    report.set_defaults(handler=_cmd_report)

    return parser


def cli(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage or help
        return 0 if exc.code == 0 else 1
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PhotocensusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
