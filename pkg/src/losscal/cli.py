"""Batch command-line front end.

Subcommands: ``metrics`` (calibration report from a predictions CSV),
``decide`` (per-sample expected-utility decisions as JSON lines),
``train-demo`` (synthetic-data training run that emits a predictions CSV),
``wasserstein`` (distance between two value columns), and ``report``
(metrics + diagrams + decisions in one pass).

Exit codes: 0 success, 1 validation/usage error, 2 I/O error. Diagnostics go
to stderr; outputs are deterministic for identical arguments and input files,
and every output file is accompanied by a run-manifest JSON recording the
arguments, input digests, and tool version (timestamps are excluded
everywhere).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .decision import bayes_actions, decide_all, expected_loss, zero_one_utility
from .diagrams import emit_diagram
from .io import (
    CalibrationReport,
    MCSampleSet,
    load_predictions,
    load_utility,
    write_predictions,
    write_report,
)
from .metrics import DEFAULT_BINS, ece, mce, muce, reliability_data, sharpness, uce
from .training import TrainConfig, demo_utility, make_synthetic, mc_predict, train
from .transport import wasserstein1
from .uncertainty import normalized_uncertainties, predictive_means


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise _UsageError(message)


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest_path(out_path: Path) -> Path:
    return out_path.parent / (out_path.stem + ".manifest.json")


def _write_manifest(manifest_path: Path, subcommand: str, args: argparse.Namespace,
                    inputs: list[Path], outputs: list[Path], extra: dict | None = None) -> None:
    arg_dict = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k != "func"
    }
    payload = {
        "tool": "losscal",
        "version": __version__,
        "subcommand": subcommand,
        "arguments": arg_dict,
        "seed": arg_dict.get("seed"),
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
    }
    if extra:
        payload.update(extra)
    manifest_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _analyze(sample_set: MCSampleSet, utility, bins: int, method: str):
    """Shared metric pipeline: report plus both diagram row lists."""
    means = predictive_means(sample_set)
    confidences = means.max(axis=1)
    correct = means.argmax(axis=1) == sample_set.labels
    errors = ~correct
    uncertainties = normalized_uncertainties(sample_set, method=method)

    conf_rows = reliability_data(confidences, correct.astype(float), bins, mode="confidence")
    unc_rows = reliability_data(uncertainties, errors.astype(float), bins, mode="uncertainty")
    actions = bayes_actions(sample_set, utility)
    report = CalibrationReport(
        accuracy=float(correct.mean()),
        expected_loss=expected_loss(sample_set, utility, actions),
        ece=ece(confidences, correct, bins),
        mce=mce(confidences, correct, bins),
        uce=uce(uncertainties, errors, bins),
        muce=muce(uncertainties, errors, bins),
        sharpness=sharpness(uncertainties, errors, bins),
        bins=tuple(conf_rows),
    )
    return report, conf_rows, unc_rows


def _print_summary(report: CalibrationReport) -> None:
    pct = ("accuracy", "ece", "mce", "uce", "muce")
    for name in ("accuracy", "expected_loss", "ece", "mce", "uce", "muce", "sharpness"):
        value = getattr(report, name)
        line = f"{name:<14} {value:.6f}"
        if name in pct:
            line += f"   ({100.0 * value:.2f}%)"
        print(line)


def _resolve_utility(args, n_classes: int):
    if getattr(args, "utility", None):
        utility = load_utility(args.utility)
        if utility.n_classes != n_classes:
            raise ValueError(
                f"utility matrix has {utility.n_classes} classes, predictions have {n_classes}"
            )
        return utility, [Path(args.utility)]
    return zero_one_utility(n_classes), []


def _cmd_metrics(args) -> int:
    sample_set = load_predictions(args.predictions)
    utility, extra_inputs = _resolve_utility(args, sample_set.n_classes)
    report, _, _ = _analyze(sample_set, utility, args.bins, args.uncertainty)
    out = Path(args.out)
    write_report(report, out)
    _write_manifest(_manifest_path(out), "metrics", args,
                    inputs=[Path(args.predictions)] + extra_inputs, outputs=[out])
    _print_summary(report)
    return 0


def _decision_lines(sample_set: MCSampleSet, utility, reject_above: float, method: str) -> list[str]:
    lines = []
    for i, outcome in enumerate(decide_all(sample_set, utility, reject_above, method)):
        lines.append(json.dumps({
            "sample": i,
            "action": outcome.action,
            "rejected": outcome.rejected,
            "uncertainty": outcome.uncertainty,
            "expected_utilities": [float(v) for v in outcome.expected_utilities],
        }))
    return lines


def _cmd_decide(args) -> int:
    sample_set = load_predictions(args.predictions)
    utility = load_utility(args.utility)
    if utility.n_classes != sample_set.n_classes:
        raise ValueError(
            f"utility matrix has {utility.n_classes} classes, predictions have {sample_set.n_classes}"
        )
    lines = _decision_lines(sample_set, utility, args.reject_above, args.uncertainty)
    if args.out:
        out = Path(args.out)
        out.write_text("\n".join(lines) + "\n", encoding="utf-8")
        _write_manifest(_manifest_path(out), "decide", args,
                        inputs=[Path(args.predictions), Path(args.utility)], outputs=[out])
    else:
        for line in lines:
            print(line)
    return 0


def _cmd_train_demo(args) -> int:
    utility = load_utility(args.utility) if args.utility else demo_utility()
    dataset = make_synthetic(args.n, seed=args.seed)
    config = TrainConfig(
        mode=args.mode,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        utility_weight=args.kappa,
        seed=args.seed,
    )
    model = train(dataset, utility, config,
                  dropweight_rate=args.dropweight_rate, weight_decay=args.weight_decay)

    eval_n = args.eval_n if args.eval_n is not None else args.n
    eval_set = make_synthetic(eval_n, seed=args.seed + 1)
    sample_set = mc_predict(model, eval_set.features, eval_set.labels,
                            t=args.mc_samples, seed=args.seed + 2)
    out = Path(args.out)
    write_predictions(sample_set, out)

    report, _, _ = _analyze(sample_set, utility, DEFAULT_BINS, "jackknife")
    metrics_echo = {name: getattr(report, name)
                    for name in ("accuracy", "expected_loss", "ece", "mce", "uce", "muce", "sharpness")}
    inputs = [Path(args.utility)] if args.utility else []
    _write_manifest(_manifest_path(out), "train-demo", args, inputs=inputs, outputs=[out],
                    extra={"final_metrics": metrics_echo})
    _print_summary(report)
    return 0


def _read_value_column(path: Path) -> np.ndarray:
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ValueError(f"{path}: line {line_no} is not a number: {text!r}") from None
    if not values:
        raise ValueError(f"{path}: no values found")
    return np.asarray(values)


def _cmd_wasserstein(args) -> int:
    a = _read_value_column(Path(args.sample_a))
    b = _read_value_column(Path(args.sample_b))
    distance = wasserstein1(a, b)
    text = f"{distance:.6f}"
    print(text)
    if args.out:
        out = Path(args.out)
        out.write_text(text + "\n", encoding="utf-8")
        _write_manifest(_manifest_path(out), "wasserstein", args,
                        inputs=[Path(args.sample_a), Path(args.sample_b)], outputs=[out])
    return 0


def _cmd_report(args) -> int:
    sample_set = load_predictions(args.predictions)
    utility, extra_inputs = _resolve_utility(args, sample_set.n_classes)
    report, conf_rows, unc_rows = _analyze(sample_set, utility, args.bins, args.uncertainty)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "report.json"
    conf_svg = out_dir / "confidence_diagram.svg"
    unc_svg = out_dir / "uncertainty_diagram.svg"
    decisions_path = out_dir / "decisions.jsonl"

    write_report(report, report_path)
    emit_diagram(conf_rows, conf_svg, style="confidence")
    emit_diagram(unc_rows, unc_svg, style="uncertainty")
    lines = _decision_lines(sample_set, utility, args.reject_above, args.uncertainty)
    decisions_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    outputs = [report_path, conf_svg, conf_svg.with_suffix(".csv"),
               unc_svg, unc_svg.with_suffix(".csv"), decisions_path]
    _write_manifest(out_dir / "run.manifest.json", "report", args,
                    inputs=[Path(args.predictions)] + extra_inputs, outputs=outputs)
    _print_summary(report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="losscal",
                     description="Calibrated-uncertainty metrics and loss-calibrated decisions")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("metrics", parents=[], help="calibration report from a predictions CSV")
    p.add_argument("--predictions", required=True, help="predictions CSV path")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--uncertainty", choices=("jackknife", "plugin"), default="jackknife")
    p.add_argument("--utility", default=None, help="utility JSON (default: 0/1-loss utility)")
    p.add_argument("--out", required=True, help="report JSON output path")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("decide", help="per-sample expected-utility decisions as JSON lines")
    p.add_argument("--predictions", required=True)
    p.add_argument("--utility", required=True)
    p.add_argument("--reject-above", type=float, default=1.0, dest="reject_above",
                   help="reject samples whose normalized uncertainty exceeds this")
    p.add_argument("--uncertainty", choices=("jackknife", "plugin"), default="jackknife")
    p.add_argument("--out", default=None, help="JSON-lines output path (default: stdout)")
    p.set_defaults(func=_cmd_decide)

    p = sub.add_parser("train-demo", help="train on synthetic data and emit a predictions CSV")
    p.add_argument("--mode", choices=("standard", "weighted", "lcvi"), default="standard")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=600, help="training-set size")
    p.add_argument("--eval-n", type=int, default=None, dest="eval_n",
                   help="evaluation-set size (default: same as --n)")
    p.add_argument("--epochs", type=int, default=TrainConfig().epochs)
    p.add_argument("--batch-size", type=int, default=TrainConfig().batch_size, dest="batch_size")
    p.add_argument("--learning-rate", type=float, default=TrainConfig().learning_rate,
                   dest="learning_rate")
    p.add_argument("--kappa", type=float, default=1.0, help="utility-term weight")
    p.add_argument("--dropweight-rate", type=float, default=0.3, dest="dropweight_rate")
    p.add_argument("--weight-decay", type=float, default=1e-4, dest="weight_decay")
    p.add_argument("--mc-samples", type=int, default=25, dest="mc_samples",
                   help="MC passes per sample in the emitted tensor")
    p.add_argument("--utility", default=None, help="utility JSON (default: built-in 4-class utility)")
    p.add_argument("--out", required=True, help="predictions CSV output path")
    p.set_defaults(func=_cmd_train_demo)

    p = sub.add_parser("wasserstein", help="W1 distance between two single-column CSV files")
    p.add_argument("sample_a")
    p.add_argument("sample_b")
    p.add_argument("--out", default=None, help="also write the distance to this file")
    p.set_defaults(func=_cmd_wasserstein)

    p = sub.add_parser("report", help="metrics + diagrams + decisions in one pass")
    p.add_argument("--predictions", required=True)
    p.add_argument("--utility", default=None)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--uncertainty", choices=("jackknife", "plugin"), default="jackknife")
    p.add_argument("--reject-above", type=float, default=1.0, dest="reject_above")
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.set_defaults(func=_cmd_report)

    return parser


def run(argv: list[str]) -> int:
    """Parse and execute one command; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(parser.format_usage(), file=sys.stderr, end="")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
