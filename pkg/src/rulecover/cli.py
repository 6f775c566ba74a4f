"""Command-line front end: binarize, train, predict, evaluate, gap.

One command per invocation. Input tables are comma-separated text with a
header row; column kinds come from a JSON sidecar schema (name -> one of
categorical/numeric/binary/label) or are inferred with --labels-column.
Models are the JSON documents described in modelio. Evaluation reports
are emitted as a delimiter-separated table (one row per config,
mean/std per metric) or as full JSON, chosen by the output extension.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace

from .dataset import (
    DataError,
    SchemaError,
    Table,
    apply_descriptors,
    binarize,
    check_schema,
    infer_schema,
)
from .evaluation import (
    cross_validate,
    default_grid,
    make_folds,
    relative_gap,
    select_best,
)
from .learner import SUBPROBLEM_MODES, TrainConfig, train
from .modelio import (
    ModelFormatError,
    hyperparams_from_json,
    load_model,
    render_rules,
    save_model,
)
from .objective import ConfigError, Hyperparams, PRESETS, metrics, preset

DEFAULTS = {"beta0": 1.0, "beta1": 1.0, "beta2": 0.1, "lam": 1.0, "k": 16, "m": 16}


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="input table (CSV with header)")
    p.add_argument("--schema", help="JSON file mapping column name to kind")
    p.add_argument("--labels-column", help="label column name (schema inferred)")


def _add_train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beta0", type=float, default=None, help="false-coverage weight")
    p.add_argument("--beta1", type=float, default=None, help="missed-positive weight")
    p.add_argument("--beta2", type=float, default=None, help="overlap weight")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="per-literal penalty")
    p.add_argument("--k", type=int, default=None, help="maximum number of rules")
    p.add_argument("--m", type=int, default=None, help="active-set size")
    p.add_argument("--preset", choices=PRESETS, help="named objective preset")
    p.add_argument("--eta", type=float, default=None,
                   help="overlap price for the overlap-eta preset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-refine", action="store_true", help="skip refinement")
    p.add_argument("--subproblem", choices=SUBPROBLEM_MODES, default="local")
    p.add_argument("--time-limit-secs", type=float, default=None,
                   help="per-solve limit for bnb-timed")
    p.add_argument("--ds-restarts", type=int, default=1,
                   help="descent restarts with shuffled chain permutations")


def _load_table(args: argparse.Namespace) -> tuple[Table, dict[str, str], str]:
    table = Table.read_csv(args.data)
    if args.schema:
        with open(args.schema) as fh:
            schema = json.load(fh)
        if not isinstance(schema, dict):
            raise SchemaError(f"{args.schema}: expected a JSON object")
        if args.labels_column:
            schema[args.labels_column] = "label"
        for name in table.names:
            if name not in schema:
                raise SchemaError(f"column {name!r} missing from schema")
    elif args.labels_column:
        schema = infer_schema(table, args.labels_column)
    else:
        raise SchemaError("provide --schema or --labels-column")
    label = check_schema(table, schema)
    return table, schema, label


def _hyperparams(args: argparse.Namespace) -> Hyperparams:
    explicit = {
        name: getattr(args, name)
        for name in ("beta0", "beta1", "beta2")
        if getattr(args, name) is not None
    }
    k = DEFAULTS["k"] if args.k is None else args.k
    m = DEFAULTS["m"] if args.m is None else args.m
    if args.preset:
        if explicit:
            raise ConfigError(
                f"--preset is mutually exclusive with --{next(iter(explicit))}"
            )
        return preset(args.preset, lam=args.lam, eta=args.eta,
                      max_rules=k, active_size=m)
    if args.eta is not None:
        raise ConfigError("--eta only applies with --preset overlap-eta")
    return Hyperparams(
        beta0=DEFAULTS["beta0"] if args.beta0 is None else args.beta0,
        beta1=DEFAULTS["beta1"] if args.beta1 is None else args.beta1,
        beta2=DEFAULTS["beta2"] if args.beta2 is None else args.beta2,
        lam=DEFAULTS["lam"] if args.lam is None else args.lam,
        max_rules=k,
        active_size=m,
    )


def _train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        hyperparams=_hyperparams(args),
        subproblem=args.subproblem,
        time_limit=args.time_limit_secs,
        refine=not args.no_refine,
        seed=args.seed,
        ds_restarts=args.ds_restarts,
    )


def _open_out(path: str | None):
    return open(path, "w", newline="") if path and path != "-" else sys.stdout


def _cmd_binarize(args: argparse.Namespace) -> int:
    table, schema, label = _load_table(args)
    data = binarize(table, schema)
    out = _open_out(args.out)
    try:
        writer = csv.writer(out)
        writer.writerow(data.feature_names() + [label])
        for i in range(data.n):
            writer.writerow(data.row_bits(i) + [(data.labels >> i) & 1])
    finally:
        if out is not sys.stdout:
            out.close()
    print(f"binarized {data.n} rows into {data.d} features", file=sys.stderr)
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    table, schema, _ = _load_table(args)
    data = binarize(table, schema)
    cfg = _train_config(args)
    S, report = train(data, cfg)
    save_model(args.model, S, data.descriptors, cfg.hyperparams)
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report.as_dict(), fh, indent=2)
            fh.write("\n")
    m = metrics(S, data)
    print(render_rules(S.feature_sets(), data.descriptors))
    print(
        f"rules={m.n_rules} literals={m.n_literals} "
        f"train_accuracy={m.accuracy:.4f} overlap={m.overlap:.4f} "
        f"profit={report.final_profit:.6g} seconds={report.fit_seconds:.3f}",
        file=sys.stderr,
    )
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    table = Table.read_csv(args.data)
    if args.labels_column and args.labels_column not in table.names:
        raise SchemaError(f"table lacks column {args.labels_column!r}")
    data = apply_descriptors(table, model.descriptors, args.labels_column)
    covered = 0
    for feats in model.rule_features:
        cov = data.universe
        for j in feats:
            cov &= data.columns[j]
        covered |= cov
    out = _open_out(args.out)
    try:
        writer = csv.writer(out)
        writer.writerow(["prediction"])
        for i in range(data.n):
            writer.writerow([(covered >> i) & 1])
    finally:
        if out is not sys.stdout:
            out.close()
    if args.labels_column:
        correct = (covered & data.labels).bit_count()
        correct += (data.universe & ~covered & ~data.labels).bit_count()
        print(f"accuracy={correct / data.n:.4f}", file=sys.stderr)
    return 0


def _evaluation_rows(results, best: int) -> list[dict]:
    rows = []
    for i, res in enumerate(results):
        row: dict = {
            "beta0": res.cfg.hyperparams.beta0,
            "beta1": res.cfg.hyperparams.beta1,
            "beta2": res.cfg.hyperparams.beta2,
            "lambda": res.cfg.hyperparams.lam,
            "k": res.cfg.hyperparams.max_rules,
            "m": res.cfg.hyperparams.active_size,
            "subproblem": res.cfg.subproblem,
        }
        for split in ("train", "test"):
            for key in ("accuracy", "n_rules", "n_literals", "overlap"):
                mean, std = res.aggregate(split, key)
                row[f"{split}_{key}_mean"] = round(mean, 6)
                row[f"{split}_{key}_std"] = round(std, 6)
        row["selected"] = int(i == best)
        rows.append(row)
    return rows


def _cmd_evaluate(args: argparse.Namespace) -> int:
    table, schema, label = _load_table(args)
    if args.grid:
        with open(args.grid) as fh:
            entries = json.load(fh)
        if not isinstance(entries, list) or not entries:
            raise ConfigError(f"{args.grid}: expected a nonempty JSON list")
        base = _train_config(args)
        grid = [replace(base, hyperparams=hyperparams_from_json(e)) for e in entries]
    elif args.single:
        grid = [_train_config(args)]
    else:
        grid = default_grid(
            subproblem=args.subproblem,
            refine=not args.no_refine,
            seed=args.seed,
            time_limit=args.time_limit_secs,
        )
    labels01 = [1 if v == "1" else 0 for v in table.column(label)]
    plan = make_folds(labels01, args.folds, seed=args.seed)
    results = cross_validate(table, schema, grid, plan, jobs=args.jobs)
    best = select_best(results)
    rows = _evaluation_rows(results, best)

    if args.out and args.out.endswith(".json"):
        doc = {
            "n_folds": plan.n_folds,
            "seed": plan.seed,
            "best": best,
            "configs": [res.as_dict() for res in results],
        }
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    else:
        out = _open_out(args.out)
        try:
            writer = csv.DictWriter(out, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        finally:
            if out is not sys.stdout:
                out.close()
    sel = rows[best]
    print(
        f"best config: beta2={sel['beta2']} lambda={sel['lambda']} k={sel['k']} "
        f"test_accuracy={sel['test_accuracy_mean']:.4f} "
        f"rules={sel['test_n_rules_mean']:.1f} literals={sel['test_n_literals_mean']:.1f}",
        file=sys.stderr,
    )
    return 0


def _cmd_gap(args: argparse.Namespace) -> int:
    table, schema, _ = _load_table(args)
    data = binarize(table, schema)
    cfg = _train_config(args)
    result = relative_gap(data, cfg, args.time_limit_secs)
    doc = result.as_dict()
    if args.out and args.out != "-":
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    else:
        json.dump(doc, sys.stdout, indent=2)
        print()
    gap_text = "undefined" if result.gap is None else f"{result.gap:.6f}"
    print(
        f"gap={gap_text} v_approx={result.v_approx:.6g} v_bnb={result.v_bnb:.6g} "
        f"proven_optimal={result.proven_optimal}",
        file=sys.stderr,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rulecover",
        description="Learn and apply interpretable DNF rule-set classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("binarize", help="write the binarized 0/1 table")
    _add_data_args(p)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=_cmd_binarize)

    p = sub.add_parser("train", help="fit a rule set and save the model")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--model", required=True, help="output model JSON")
    p.add_argument("--report", help="output training report JSON")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="apply a saved model to new rows")
    p.add_argument("--data", required=True, help="input table (CSV with header)")
    p.add_argument("--model", required=True, help="model JSON from train")
    p.add_argument("--labels-column", help="optional: report accuracy against this column")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="cross-validated grid search")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--grid", help="JSON list of hyperparameter dicts")
    p.add_argument("--single", action="store_true",
                   help="evaluate only the flag-specified config")
    p.add_argument("--out", help=".csv table or .json full report (default stdout)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("gap", help="local-search vs branch-and-bound profit gap")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--out", help="output JSON (default stdout)")
    p.set_defaults(func=_cmd_gap)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (ConfigError, SchemaError, ModelFormatError, DataError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(run())


if __name__ == "__main__":
    entry()
