"""Command line entry point: ``sortnetc <command> ...``.

Every invocation emits one JSON run report. It goes to ``--report PATH`` if
given, otherwise to stdout; commands that print their main product (a
network, CSV rows) to stdout send the report to stderr instead.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .datagen import DatasetConfig, generate_identity_dataset, generate_list_dataset, list_arrays, load_dataset, write_list_csv
from .labels import Label
from .locality import locality_closed_form_check, trace_identity_locality
from .microtrain import TrainConfig, learn_to_sort, train
from .nncompiler import compile_network, estimate_parameters
from .nnruntime import DenseNetwork
from .patchcodec import Patch, PatchCode, PrecisionModel, decode, encode
from .pipeline import classify_batch
from .rng import GENERATOR, max_workers
from .sortnet import SortingNetwork, make_brick_network, make_merge_network, make_optimal_small, repeat, verify_zero_one


class CliError(Exception):
    def __init__(self, kind: str, message: str, status: int = 2):
        super().__init__(message)
        self.kind, self.message, self.status = kind, message, status


@dataclass
class RunReport:
    command: str
    config: dict
    seed: int | None = None
    outputs: dict[str, str] = field(default_factory=dict)
    metrics: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    details: Any = None
    status: str = "ok"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> RunReport:
        return cls(**data)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would print and sys.exit(2)
        raise CliError("invalid-flag", f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}")


# -- command implementations ------------------------------------------------


def _datagen_identity(a, rep: RunReport):
    cfg = DatasetConfig(a.image_side, a.patch_side, a.min_patches, a.max_patches, a.count, a.seed, not a.unbalanced)
    ds = generate_identity_dataset(cfg, workers=a.workers or 1)
    path = ds.write(a.out)
    rep.outputs["manifest"] = str(path)
    rep.outputs["directory"] = str(a.out)
    counts = ds.label_counts()
    rep.metrics.update({"images": len(ds.images), "class_one": counts["one"], "class_two": counts["two"]})
    rep.metrics["oracle_agreement"] = float(np.mean([img.oracle_label() is img.label for img in ds.images]))


def _datagen_lists(a, rep: RunReport):
    samples = generate_list_dataset(a.count, a.seed, a.sorted, a.max_repeat_two)
    write_list_csv(a.out, samples)
    rep.outputs["csv"] = str(a.out)
    rep.metrics.update({"samples": len(samples), "class_one": sum(s.label is Label.ONE for s in samples)})


def _make_network(kind: str, wires: int) -> SortingNetwork:
    if kind == "optimal":
        return make_optimal_small(wires)
    if kind == "merge":
        return make_merge_network(wires)
    return make_brick_network(wires)


def _sortnet_gen(a, rep: RunReport):
    net = _make_network(a.kind, a.wires)
    rep.metrics.update({"wires": net.wires, "depth": net.depth, "comparators": net.size})
    if a.out:
        net.save(a.out)
        rep.outputs["network"] = str(a.out)
    else:
        return json.dumps(net.to_dict()) + "\n"


def _sortnet_verify(a, rep: RunReport):
    net = SortingNetwork.load(a.file)
    if a.repeat > 1:
        net = repeat(net, a.repeat)
    result = verify_zero_one(net, cap=a.cap, randomized=a.randomized, seed=a.seed or 0)
    rep.metrics.update({"passed": int(result.passed), "vectors_tested": result.vectors_tested, "depth": net.depth})
    rep.details = result.to_dict()
    if result.probabilistic:
        rep.warnings.append("randomized verification: result is probabilistic")
    if not result.passed:
        rep.status = "failed"
        rep.warnings.append(f"counterexample: {list(result.counterexample)}")


def _compile(a, rep: RunReport):
    net = SortingNetwork.load(a.input)
    model = compile_network(net, prune=a.prune)
    model.save(a.out)
    rep.outputs["model"] = str(a.out)
    rep.metrics.update(
        {
            "layers": len(model.layers),
            "weights_only": model.parameter_count("weights_only"),
            "weights_and_biases": model.parameter_count("weights_and_biases"),
        }
    )


def _eval(a, rep: RunReport):
    model = DenseNetwork.load(a.model)
    if a.input is None and a.input_file is None:
        raise CliError("invalid-flag", "eval needs --input or --input-file")
    rows = [a.input] if a.input is not None else [_float_list(line) for line in Path(a.input_file).read_text().splitlines() if line.strip()]
    out = model.forward(np.array(rows, dtype=float))
    rep.details = out.tolist()
    if len(rows) == 1:
        rep.metrics.update({f"out_{i}": float(v) for i, v in enumerate(out[0])})
    rep.metrics["rows"] = len(rows)


def _estimate(a, rep: RunReport):
    sc = estimate_parameters(a.image, a.patch, a.attention, a.depth)
    rep.metrics.update({"x": sc.x, "depth": sc.depth, "p_feedforward": sc.p_feedforward, "p_iterative": sc.p_iterative})
    rep.metrics.update(sc.alternatives)
    rep.warnings.extend(sc.warnings)
    if a.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["image_side", "patch_side", "attention", "x", "depth", "p_feedforward", "p_iterative"])
        w.writerow([sc.image_side, sc.patch_side, int(sc.attention), sc.x, sc.depth, sc.p_feedforward, sc.p_iterative])
        return buf.getvalue()


def _locality(a, rep: RunReport):
    trace = trace_identity_locality(a.patch_side, a.levels)
    check = locality_closed_form_check(max(a.levels, 2), a.patch_side)
    rep.metrics.update({"locality_estimate": trace.locality_estimate, "final_L": trace.levels[-1].log2_cardinality})
    rep.details = {"closed_form": check.to_dict(), "exact_levels": [[i, str(s)] for i, s in trace.exact_levels]}
    if a.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["level", "L", "C", "rfs"])
        for row in trace.rows():
            w.writerow([row["level"], repr(row["L"]), "" if row["C"] is None else repr(row["C"]), row["rfs"]])
        return buf.getvalue()
    rep.details["levels"] = trace.rows()


def _write_csv_row(path: str, row: dict) -> None:
    p = Path(path)
    new = not p.exists()
    with p.open("a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(row))
        if new:
            w.writeheader()
        w.writerow(row)


def _train_classify(a, rep: RunReport):
    train_set = generate_list_dataset(a.train, a.seed, a.sorted, a.max_repeat_two)
    test_set = generate_list_dataset(a.test, a.seed + 1, a.sorted, a.max_repeat_two)
    X, y = list_arrays(train_set)
    Xt, yt = list_arrays(test_set)
    cfg = TrainConfig(a.layers, "classify_list", epochs=a.epochs, batch_size=a.batch_size, learning_rate=a.lr, seed=a.seed)
    result = train(cfg, (X, y, Xt, yt))
    row = {"view": "sorted" if a.sorted else "unsorted", **{k: v for k, v in result.to_dict().items() if k != "extra"}}
    rep.metrics.update({k: float(v) for k, v in row.items() if isinstance(v, (int, float)) and not isinstance(v, bool)})
    rep.details = result.to_dict()
    if result.diverged:
        rep.status = "failed"
        rep.warnings.append("training diverged (non-finite loss)")
    if a.csv:
        _write_csv_row(a.csv, row)
        rep.outputs["csv"] = a.csv


def _train_sort(a, rep: RunReport):
    kwargs = {"seed": a.seed or 0}
    if a.steps:
        kwargs["steps"] = a.steps
    result = learn_to_sort(a.x, a.layers, a.restarts, strict=a.strict, workers=a.workers, **kwargs)
    rep.metrics.update(
        {
            "final_loss": result.final_train_loss,
            "success": int(bool(result.success)),
            "parameter_count": result.parameter_count,
            "restart_index": result.restart_index,
            "restarts_run": result.extra["restarts_run"],
            "threshold": result.extra["threshold"],
        }
    )
    rep.details = result.to_dict()
    if not result.success:
        rep.warnings.append(f"no restart reached loss < {result.extra['threshold']}")
    if a.csv:
        _write_csv_row(a.csv, {k: v for k, v in result.to_dict().items() if k != "extra"})
        rep.outputs["csv"] = a.csv


def _codec_encode(a, rep: RunReport):
    patch = Patch.from_ascii(Path(a.patch_file).read_text())
    precision = PrecisionModel.parse(a.mantissa)
    code = encode(patch, precision)
    rep.metrics.update({"value": code.value, "pack": code.pack, "n": patch.n, "lossy": int(code.lossy)})
    if code.lossy:
        rep.warnings.append(f"{patch.n}x{patch.n} patch exceeds {precision} mantissa bits; code is lossy")


def _codec_decode(a, rep: RunReport):
    precision = PrecisionModel.parse(a.mantissa)
    nbits = a.side * a.side
    pack = a.pack if a.pack is not None else int(round(a.value * (1 << nbits)))
    result = decode(PatchCode(pack, a.side, precision))
    rep.details = result.patch.to_ascii().split("\n")
    rep.metrics.update({"lossy": int(result.lossy), "pack": pack})
    if result.lossy:
        rep.warnings.append("lossy code: trailing bits were not stored")
    return result.patch.to_ascii() + "\n"


def _pipeline_run(a, rep: RunReport):
    ds = load_dataset(a.dataset)
    precision = PrecisionModel.parse(a.mantissa)
    verdicts = classify_batch(ds.images, precision, width=ds.config.max_patches)
    oracle = [img.oracle_label() for img in ds.images]
    agree = [v.predicted_class is o for v, o in zip(verdicts, oracle)]
    stored = [v.predicted_class is img.label for v, img in zip(verdicts, ds.images)]
    rep.metrics.update({"images": len(verdicts), "oracle_agreement": float(np.mean(agree)), "label_accuracy": float(np.mean(stored))})
    rep.details = [{"index": i, **v.to_dict(), "oracle": o.value} for i, (v, o) in enumerate(zip(verdicts, oracle))]


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", help="write the JSON run report here")

    p = _Parser(prog="sortnetc", description="Neural sorting networks and the identity task.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    dg = sub.add_parser("datagen", help="generate datasets").add_subparsers(dest="action", parser_class=_Parser, required=True)
    q = dg.add_parser("identity", parents=[common])
    q.add_argument("--image-side", type=int, default=32)
    q.add_argument("--patch-side", type=int, default=4)
    q.add_argument("--min-patches", type=int, default=3)
    q.add_argument("--max-patches", type=int, default=6)
    q.add_argument("--count", type=int, default=1000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--unbalanced", action="store_true")
    q.add_argument("--workers", type=int, default=None)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_datagen_identity)
    q = dg.add_parser("lists", parents=[common])
    q.add_argument("--count", type=int, default=5000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--sorted", action="store_true")
    q.add_argument("--max-repeat-two", type=int, default=3)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_datagen_lists)

    sn = sub.add_parser("sortnet", help="sorting networks").add_subparsers(dest="action", parser_class=_Parser, required=True)
    q = sn.add_parser("gen", parents=[common])
    q.add_argument("--kind", choices=["optimal", "merge", "brick"], required=True)
    q.add_argument("--wires", type=int, required=True)
    q.add_argument("--out")
    q.set_defaults(func=_sortnet_gen)
    q = sn.add_parser("verify", parents=[common])
    q.add_argument("--file", required=True)
    q.add_argument("--repeat", type=int, default=1, help="apply the network this many times")
    q.add_argument("--cap", type=int, default=22)
    q.add_argument("--randomized", action="store_true", help="fall back to 100k random vectors above the cap")
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=_sortnet_verify)

    q = sub.add_parser("compile", parents=[common], help="sorting network -> dense ReLU network")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--prune", action="store_true")
    q.set_defaults(func=_compile)

    q = sub.add_parser("eval", parents=[common], help="evaluate a dense model")
    q.add_argument("--model", required=True)
    q.add_argument("--input", type=_float_list)
    q.add_argument("--input-file")
    q.set_defaults(func=_eval)

    q = sub.add_parser("estimate", parents=[common], help="parameter counts for the identity task")
    q.add_argument("--image", type=int, default=224)
    q.add_argument("--patch", type=int, default=8)
    q.add_argument("--attention", action="store_true")
    q.add_argument("--depth", type=int)
    q.add_argument("--format", choices=["json", "csv"], default="json")
    q.set_defaults(func=_estimate)

    q = sub.add_parser("locality", parents=[common], help="locality trace of the identity task")
    q.add_argument("--patch-side", type=int, default=3)
    q.add_argument("--levels", type=int, default=30)
    q.add_argument("--format", choices=["json", "csv"], default="json")
    q.set_defaults(func=_locality)

    tr = sub.add_parser("train", help="training experiments").add_subparsers(dest="action", parser_class=_Parser, required=True)
    q = tr.add_parser("classify", parents=[common])
    view = q.add_mutually_exclusive_group(required=True)
    view.add_argument("--sorted", dest="sorted", action="store_true")
    view.add_argument("--unsorted", dest="sorted", action="store_false")
    q.add_argument("--layers", type=_int_list, default=[10, 10, 1])
    q.add_argument("--train", type=int, default=4000)
    q.add_argument("--test", type=int, default=1000)
    q.add_argument("--epochs", type=int, default=1000)
    q.add_argument("--batch-size", type=int, default=128)
    q.add_argument("--lr", type=float, default=1e-2)
    q.add_argument("--max-repeat-two", type=int, default=3)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--csv")
    q.set_defaults(func=_train_classify)
    q = tr.add_parser("sort", parents=[common])
    q.add_argument("--x", type=int, required=True)
    q.add_argument("--layers", type=_int_list, required=True)
    q.add_argument("--restarts", type=int, default=100)
    q.add_argument("--steps", type=int)
    q.add_argument("--strict", action="store_true", help="use the 1e-5 success threshold")
    q.add_argument("--workers", type=int, default=None)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--csv")
    q.set_defaults(func=_train_sort)

    cd = sub.add_parser("codec", help="patch codec").add_subparsers(dest="action", parser_class=_Parser, required=True)
    q = cd.add_parser("encode", parents=[common])
    q.add_argument("--patch-file", required=True)
    q.add_argument("--mantissa", default="24")
    q.set_defaults(func=_codec_encode)
    q = cd.add_parser("decode", parents=[common])
    q.add_argument("--side", type=int, required=True)
    code = q.add_mutually_exclusive_group(required=True)
    code.add_argument("--pack", type=int)
    code.add_argument("--value", type=float)
    q.add_argument("--mantissa", default="24")
    q.set_defaults(func=_codec_decode)

    pl = sub.add_parser("pipeline", help="identity-task pipeline").add_subparsers(dest="action", parser_class=_Parser, required=True)
    q = pl.add_parser("run", parents=[common])
    q.add_argument("--dataset", required=True)
    q.add_argument("--mantissa", default="24")
    q.set_defaults(func=_pipeline_run)
    return p


def _config_echo(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "report")}


def dispatch(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> tuple[int, RunReport | None]:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(stderr)
        return 2, None
    try:
        args = parser.parse_args(argv)
    except CliError as err:
        stderr.write(json.dumps({"status": "error", "error": {"kind": err.kind, "message": err.message}}) + "\n")
        return err.status, None
    if not getattr(args, "func", None):
        parser.print_usage(stderr)
        return 2, None

    name = " ".join(v for v in (args.command, getattr(args, "action", None)) if v)
    report = RunReport(name, _config_echo(args), getattr(args, "seed", None))
    report.config["generator"] = GENERATOR
    report.config["threads"] = max_workers()
    status = 0
    product = None
    try:
        product = args.func(args, report)
    except CliError as err:
        report.status, status = "error", err.status
        report.details = {"kind": err.kind, "message": err.message}
    except (OSError, json.JSONDecodeError, KeyError) as err:
        report.status, status = "error", 3
        report.details = {"kind": "file-io", "message": str(err)}
    except ValueError as err:
        report.status, status = "error", 2
        report.details = {"kind": type(err).__name__, "message": str(err)}
    if report.status == "failed":
        status = 1

    if product is not None:
        stdout.write(product)
    text = report.to_json() + "\n"
    if args.report:
        Path(args.report).write_text(text)
    else:
        (stderr if product is not None else stdout).write(text)
    return status, report


def main(argv: Sequence[str] | None = None) -> int:
    return dispatch(argv)[0]


if __name__ == "__main__":
    sys.exit(main())
