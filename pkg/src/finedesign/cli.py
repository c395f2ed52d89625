"""Command-line surface: synth, partition, train, eval, ablate, report.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error, 3 numerical
failure. Data goes to files or stdout; every diagnostic goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .ablation import AblationConfig, render_report, report_from_json_dict, run_ablation
from .design import DesignConfig, apply_design, save_dataset_csv, load_dataset_csv
from .errors import NumericalError, ValidationError
from .manifest import load_manifest, save_manifest
from .metrics import evaluate
from .synthgen import generate_test, generate_train, synth_config_from_dict
from .trainer import TrainConfig, load_model, save_model, train

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad usage; the contract here is exit 1
    # with usage text on stderr.
    def error(self, message):
        raise _UsageError(message)


def _load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: bad JSON: {exc.msg}") from exc


def _ensure_parent(path):
    parent = Path(path).parent
    if not parent.exists():
        parent.mkdir(parents=True, exist_ok=True)


def _write_text(path, text):
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _info(message):
    print(message, file=sys.stderr)


def cmd_synth(args) -> int:
    config = synth_config_from_dict(_load_json(args.config))
    train_manifest = generate_train(config)
    test_manifest = generate_test(config)
    _ensure_parent(args.out_train)
    _ensure_parent(args.out_test)
    save_manifest(train_manifest, args.out_train)
    save_manifest(test_manifest, args.out_test)
    _info(f"wrote {len(train_manifest.samples)} train samples to {args.out_train}")
    _info(f"wrote {len(test_manifest.samples)} test samples to {args.out_test}")
    return EXIT_OK


def _resolve_extract(manifest, spec: str) -> DesignConfig:
    tokens = [tok for tok in spec.split(",") if tok.strip()]
    resolved = []
    by_key = {}
    for cat in manifest.taxonomy:
        by_key[cat.name] = cat.name
        by_key[cat.short_label] = cat.name
    for tok in tokens:
        name = by_key.get(tok.strip())
        if name is None:
            raise ValidationError(f"--extract: unknown category or abbreviation {tok.strip()!r}")
        resolved.append(name)
    return DesignConfig.from_names(resolved)


def cmd_partition(args) -> int:
    manifest = load_manifest(args.manifest)
    config = _resolve_extract(manifest, args.extract)
    dataset = apply_design(manifest, config)
    _ensure_parent(args.out)
    save_dataset_csv(dataset, args.out)
    _info(f"wrote {len(dataset)} records ({len(dataset.class_names)} classes) to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    dataset = load_dataset_csv(args.dataset)
    config = TrainConfig.from_json_dict(_load_json(args.config))
    model = train(dataset, config)
    _ensure_parent(args.out)
    save_model(model, args.out)
    _info(f"trained {model.params.architecture} model; final loss "
          f"{model.loss_trace[-1]:.6f}; wrote {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    test = load_manifest(args.test)
    report = evaluate(model, test)
    _write_text(args.out, json.dumps(report.to_json_dict(), indent=2) + "\n")
    _info(f"far={report.far:.4f} recall={report.positive_recall:.4f}; wrote {args.out}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    config = AblationConfig.from_json_dict(_load_json(args.config))
    report = run_ablation(config, workers=args.workers, progress=_info)
    _write_text(args.out, render_report(report, "json"))
    _info(f"wrote {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    report = report_from_json_dict(_load_json(args.infile))
    sys.stdout.write(render_report(report, args.format))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="finedesign", description=__doc__)
    parser.add_argument("--version", action="version", version=f"finedesign {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("synth", help="generate synthetic train/test manifests")
    p.add_argument("--config", required=True, help="synth config JSON")
    p.add_argument("--out-train", required=True, help="output train manifest (JSONL)")
    p.add_argument("--out-test", required=True, help="output test manifest (JSONL)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("partition", help="apply an extraction design to a train manifest")
    p.add_argument("--manifest", required=True, help="train manifest (JSONL)")
    p.add_argument("--extract", default="", help="comma-separated categories or abbreviations "
                                                 "(empty for the original binary design)")
    p.add_argument("--out", required=True, help="output dataset CSV")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("train", help="train a classifier on a dataset CSV")
    p.add_argument("--dataset", required=True, help="dataset CSV from partition")
    p.add_argument("--config", required=True, help="train config JSON")
    p.add_argument("--out", required=True, help="output model JSON")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model on a test manifest")
    p.add_argument("--model", required=True, help="model JSON from train")
    p.add_argument("--test", required=True, help="test manifest (JSONL)")
    p.add_argument("--out", required=True, help="output evaluation report JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="run every design x seed and aggregate")
    p.add_argument("--config", required=True, help="ablation config JSON")
    p.add_argument("--out", required=True, help="output ablation report JSON")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel workers (does not affect output bytes)")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("report", help="render an ablation report")
    p.add_argument("--in", dest="infile", required=True, help="ablation report JSON")
    p.add_argument("--format", default="markdown", choices=["markdown", "csv", "json"])
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        print("error: a subcommand is required", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
