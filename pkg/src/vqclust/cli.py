"""Command-line entry point.

Subcommands: ``cluster``, ``blobs``, ``anchors``, ``eval``.  Exit codes:
0 success, 2 configuration error, 3 ingestion error, 4 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .anchors import make_anchor_set, max_offdiag
from .ansatz import ENTANGLERS, CircuitSpec, EncodingSpec
from .backend import BACKENDS, MPS, make_backend
from .cost import METRICS, VARIANTS, CostConfig
from .data import DEFAULT_HI, DEFAULT_LO, IRIS_DEFAULT_PAIR, BlobSpec, generate_blobs, load_csv, load_iris, rescale, write_csv
from .evaluation import (
    ClusterResult,
    matched_accuracy,
    read_labels,
    write_assignments,
    write_result,
)
from .exceptions import ConfigurationError, IngestionError, NumericError, UsageError
from .trainer import GRADIENT_MODES, OptimizerConfig, train, write_training_log

EXIT_OK, EXIT_CONFIG, EXIT_INGEST, EXIT_NUMERIC = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so every failure maps onto our exit codes."""

    def error(self, message):
        raise ConfigurationError(f"{self.prog}: {message}")


def _batch_size(text):
    if text == "full":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'full' or an integer, got {text!r}") from None


def _pair(text):
    try:
        i, j = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated indices, got {text!r}") from None
    return i, j


def _add_cluster_args(p, suppress=False):
    """Options of ``cluster``; with ``suppress`` no defaults are filled (used to spot explicit flags)."""

    def add(*names, **kw):
        if suppress and "default" in kw:
            kw["default"] = argparse.SUPPRESS
        p.add_argument(*names, **kw)

    add("--config", default=None, help="key = value file; may not contradict command-line flags")
    add("--data", default="iris", help="'iris', 'blobs' or a CSV path")
    add("--has-labels", action="store_true", default=False, help="CSV's last column holds labels")
    add("--features", type=_pair, default=None, help="Iris feature pair, e.g. 1,3")
    add("--all-features", action="store_true", default=False, help="use all four Iris features")
    add("--blob-per", type=int, default=150)
    add("--blob-dim", type=int, default=2)
    add("--blob-std", type=float, default=1.0)
    add("--blob-separation", type=float, default=10.0)
    add("--blob-seed", type=int, default=0)
    add("--no-rescale", action="store_true", default=False)
    add("--zscore", action="store_true", default=False)
    add("--lo", type=float, default=DEFAULT_LO)
    add("--hi", type=float, default=DEFAULT_HI)
    add("--k", type=int, default=3)
    add("--qubits", type=int, default=1)
    add("--layers", type=int, default=1)
    add("--entangler", choices=ENTANGLERS, default=None)
    add("--anchor-mode", choices=("basis", "optimized", "bloch"), default=None)
    add("--backend", choices=BACKENDS, default="statevector")
    add("--chi", type=int, default=None)
    add("--cost", choices=VARIANTS, default="complementary")
    add("--alpha", type=float, default=0.5)
    add("--lam", type=float, default=0.0)
    add("--mu", type=float, default=None)
    add("--prune-epsilon", type=float, default=0.0)
    add("--metric", choices=tuple(METRICS), default="euclidean")
    add("--lr", type=float, default=0.05)
    add("--epochs", type=int, default=20)
    add("--steps-per-epoch", type=int, default=3)
    add("--batch-size", type=_batch_size, default="full")
    add("--gradient-mode", choices=GRADIENT_MODES, default="parameter_shift")
    add("--fd-step", type=float, default=1e-5)
    add("--param-sharing", choices=("per_point", "shared"), default="per_point")
    add("--readout", choices=("aligned", "argmax"), default="aligned")
    add("--alignment-candidates", type=int, default=512)
    add("--seed", type=int, default=0)
    add("-o", "--output", default="result.json", help="result document (JSON)")
    add("--assignments-csv", default=None, help="also write row,cluster CSV here")
    add("--log-csv", default=None, help="per-epoch epoch,loss,accuracy CSV")


def build_parser():
    parser = _Parser(prog="vqclust", description="Variational quantum clustering.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    _add_cluster_args(sub.add_parser("cluster", help="train and assign clusters"))

    p = sub.add_parser("blobs", help="write a labeled Gaussian-blob CSV")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--per", type=int, default=150)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--std", type=float, default=1.0)
    p.add_argument("--separation", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default="blobs.csv")

    p = sub.add_parser("anchors", help="print an anchor constellation as CSV")
    p.add_argument("--qubits", type=int, default=1)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--mode", choices=("basis", "optimized", "bloch"), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gram", action="store_true", help="append the pairwise fidelity matrix")

    p = sub.add_parser("eval", help="matched accuracy of predictions against truth")
    p.add_argument("--pred", required=True, help="row,cluster CSV (or any CSV; last column is used)")
    p.add_argument("--truth", required=True, help="labels CSV (last column is used)")
    p.add_argument("-o", "--output", default=None, help="optional JSON with accuracy and matching")
    return parser


# -- config files ---------------------------------------------------------------


def _config_tokens(path):
    """Turn ``key = value`` lines into argv tokens for the cluster parser."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IngestionError(f"cannot read config {path}: {exc}", path=str(path)) from None
    tokens = []
    for n, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}: line {n} is not 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if flag == "--config":
            raise ConfigurationError(f"{path}: line {n}: config files cannot nest")
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                tokens.append(flag)
        else:
            tokens += [flag, value]
    return tokens


def resolve_cluster_config(argv):
    """Defaults, then config-file values, then flags; a config/flag disagreement is an error."""
    full = _Parser(prog="vqclust cluster")
    _add_cluster_args(full)
    explicit_parser = _Parser(prog="vqclust cluster")
    _add_cluster_args(explicit_parser, suppress=True)
    args = full.parse_args(argv)
    if args.config is None:
        return vars(args)
    explicit = vars(explicit_parser.parse_args(argv))
    from_file = vars(explicit_parser.parse_args(_config_tokens(args.config)))
    for key, value in from_file.items():
        if key in explicit and explicit[key] != value:
            raise ConfigurationError(
                f"--{key.replace('_', '-')} is {explicit[key]!r} on the command line but {value!r} in {args.config}"
            )
    merged = vars(full.parse_args([]))
    merged.update(from_file)
    merged.update(explicit)
    return merged


# -- subcommands ------------------------------------------------------------------


def _load_dataset(cfg):
    if cfg["data"] == "iris":
        if cfg["all_features"]:
            return load_iris(all_features=True)
        return load_iris(cfg["features"] or IRIS_DEFAULT_PAIR)
    if cfg["data"] == "blobs":
        spec = BlobSpec(cfg["k"], cfg["blob_per"], cfg["blob_dim"], cfg["blob_std"], cfg["blob_seed"],
                        separation=cfg["blob_separation"])
        return generate_blobs(spec)
    return load_csv(cfg["data"], has_labels=cfg["has_labels"])


def run_cluster(argv):
    cfg = resolve_cluster_config(argv)
    cost_cfg = CostConfig(cfg["cost"], cfg["alpha"], cfg["lam"], cfg["mu"], cfg["prune_epsilon"], cfg["metric"])
    opt_cfg = OptimizerConfig(
        learning_rate=cfg["lr"], epochs=cfg["epochs"], steps_per_epoch=cfg["steps_per_epoch"],
        batch_size=cfg["batch_size"], gradient_mode=cfg["gradient_mode"], fd_step=cfg["fd_step"],
        seed=cfg["seed"], param_sharing=cfg["param_sharing"], readout=cfg["readout"],
        alignment_candidates=cfg["alignment_candidates"],
    )
    if cfg["k"] < 2:
        raise ConfigurationError(f"k must be at least 2, got {cfg['k']}")
    spec = CircuitSpec(cfg["qubits"], cfg["layers"], cfg["entangler"])
    anchors = make_anchor_set(cfg["qubits"], cfg["k"], cfg["anchor_mode"], seed=cfg["seed"])
    if cfg["chi"] is not None and cfg["backend"] != MPS:
        raise ConfigurationError("--chi only applies to --backend mps")

    dataset = _load_dataset(cfg)
    if not cfg["no_rescale"]:
        dataset = rescale(dataset, cfg["lo"], cfg["hi"], zscore=cfg["zscore"])
    enc = EncodingSpec.default(dataset.n_features, cfg["qubits"])
    backend = make_backend(cfg["backend"], spec, enc, anchors, cfg["chi"])

    report = train(dataset.points, backend, cost_cfg, opt_cfg, labels=dataset.labels)
    if cfg["log_csv"]:
        write_training_log(report, cfg["log_csv"])
    if report.error:
        raise NumericError(report.error)
    result = ClusterResult.from_report(report, dataset.labels, config=_echo(cfg))
    if cfg["backend"] != MPS:
        result.truncation_error = None
    write_result(result, cfg["output"])
    if cfg["assignments_csv"]:
        write_assignments(result.assignments, cfg["assignments_csv"])
    line = f"loss={report.loss_per_epoch[-1]:.6g} epochs={report.epochs_run}"
    if result.accuracy is not None:
        line += f" accuracy={result.accuracy:.4f}"
    if cfg["backend"] == MPS:
        line += f" truncation_error={report.truncation_error:.3g}"
    print(line)
    return EXIT_OK


def _echo(cfg):
    out = {}
    for key, value in sorted(cfg.items()):
        out[key] = list(value) if isinstance(value, tuple) else value
    return out


def run_blobs(argv):
    args = build_parser().parse_args(["blobs"] + list(argv))
    spec = BlobSpec(args.k, args.per, args.dim, args.std, args.seed, separation=args.separation)
    dataset = generate_blobs(spec)
    write_csv(dataset, args.output)
    print(f"wrote {dataset.n_points} points in {args.k} blobs to {args.output}")
    return EXIT_OK


def run_anchors(argv):
    args = build_parser().parse_args(["anchors"] + list(argv))
    anchors = make_anchor_set(args.qubits, args.k, args.mode, seed=args.seed)
    w = csv.writer(sys.stdout, lineterminator="\n")
    if anchors.bloch is not None:
        w.writerow(["index", "x", "y", "z"])
        for a, v in enumerate(anchors.bloch):
            w.writerow([a] + [repr(float(c)) for c in v])
    else:
        header = ["index"]
        for i in range(anchors.dim):
            header += [f"re{i}", f"im{i}"]
        w.writerow(header)
        for a, s in enumerate(anchors.states):
            w.writerow([a] + [repr(float(c)) for z in s for c in (z.real, z.imag)])
    if args.gram:
        w.writerow([])
        w.writerow(["gram"] + list(range(anchors.k)))
        for a, row in enumerate(anchors.gram):
            w.writerow([a] + [repr(float(v)) for v in row])
    print(f"# max_offdiag_fidelity={max_offdiag(anchors.gram):.12g}")
    return EXIT_OK


def run_eval(argv):
    args = build_parser().parse_args(["eval"] + list(argv))
    pred = read_labels(args.pred)
    truth = read_labels(args.truth)
    acc, matching = matched_accuracy(pred, truth)
    print(f"accuracy={acc:.6f} matching={json.dumps({str(k): v for k, v in sorted(matching.items())})}")
    if args.output:
        doc = {"accuracy": acc, "matching": {str(k): v for k, v in sorted(matching.items())}}
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


COMMANDS = {"cluster": run_cluster, "blobs": run_blobs, "anchors": run_anchors, "eval": run_eval}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if not argv or argv[0] in ("-h", "--help"):
            build_parser().print_help()
            return EXIT_OK if argv else EXIT_CONFIG
        if argv[0] not in COMMANDS:
            raise ConfigurationError(f"unknown subcommand {argv[0]!r}; choose from {tuple(COMMANDS)}")
        return COMMANDS[argv[0]](argv[1:])
    except SystemExit as exc:  # --help inside a subcommand
        return int(exc.code or 0)
    except IngestionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except (ConfigurationError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGEST


if __name__ == "__main__":
    sys.exit(main())
