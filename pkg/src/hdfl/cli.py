"""Command-line driver: experiments in, CSV tables and SVG charts out.

Subcommands:
    run          execute a federated run from a manifest
    noise-curves tabulate the noise ledger across client counts
    analyze      distance/similarity report for a multi-client corpus
    reconstruct  encode/decode PSNR study over a noise ladder
    gen-data     materialize a synthetic dataset as per-client CSVs

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
The output directory defaults to --out, then the HDFL_OUT environment
variable, then the working directory.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, federation, figures, privacy
from .data import SampleSet, SyntheticDataSource, SyntheticSpec, export_csv, ingest_csv
from .errors import ManifestError
from .hd import decode, encode, make_basis
from .manifest import build_data_source, parse_manifest

USAGE_ERROR = 2
RUNTIME_ERROR = 1


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("HDFL_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _add_out(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="output directory (default: $HDFL_OUT or .)")
    parser.add_argument(
        "--svg",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="render SVG charts next to the CSV output",
    )


def cmd_run(args) -> int:
    manifest = parse_manifest(args.config)
    config = manifest.round_config
    if args.mode == "fedhd":
        config = federation.RoundConfig(
            clients=config.clients,
            samples_per_round=config.samples_per_round,
            classes=config.classes,
            dimensions=config.dimensions,
            rounds=config.rounds,
            epsilon=None,
            basis_seed=config.basis_seed,
            noise_seed=config.noise_seed,
            retrain_epochs=config.retrain_epochs,
        )
    elif config.epsilon is None:
        print(
            f"{args.config}: mode fedhdprivacy requires an epsilon key in [federation]",
            file=sys.stderr,
        )
        return USAGE_ERROR

    out = _out_dir(args)
    source = build_data_source(manifest)
    result = federation.run(config, source)

    federation.write_metrics_csv(result.metrics, out / "metrics.csv")
    privacy.write_ledger_csv(result.ledger, out / "ledger.csv")
    federation.save_model(
        result.global_model,
        out / "model.txt",
        clients=config.clients,
        round_index=config.rounds,
        basis_seed=config.basis_seed,
        noise_seed=config.noise_seed,
    )
    if args.svg:
        figures.save_accuracy_figure(result.metrics, out / "accuracy.svg")
    final = result.metrics[-1]
    print(f"mode={final.mode} rounds={config.rounds} final_accuracy={final.test_accuracy:.4f}")
    print(f"wrote {out / 'metrics.csv'}, {out / 'ledger.csv'}, {out / 'model.txt'}")
    return 0


def cmd_noise_curves(args) -> int:
    client_counts = [int(v) for v in args.clients.split(",") if v]
    if not client_counts or any(k < 2 for k in client_counts):
        print("every client count must be >= 2", file=sys.stderr)
        return USAGE_ERROR
    if args.samples < 2:
        print("samples per round must be >= 2", file=sys.stderr)
        return USAGE_ERROR

    out = _out_dir(args)
    curves = {}
    for clients in client_counts:
        params = privacy.PrivacyParams(
            epsilon=args.epsilon,
            dimensions=args.dimensions,
            clients=clients,
            samples_per_round=args.samples,
        )
        entries = privacy.build_ledger(params, args.rounds)
        curves[clients] = entries
        path = out / f"noise_curves_K{clients}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "round",
                    "client_required_var",
                    "client_cumulative_var",
                    "client_incremental_var",
                    "server_required_var",
                    "server_cumulative_var",
                    "gamma",
                ]
            )
            for e in entries:
                writer.writerow(
                    [
                        e.round_index,
                        e.required_var,
                        e.cumulative_var,
                        e.incremental_var,
                        privacy.server_required_var(params, e.round_index),
                        privacy.server_cumulative_var(params, e.round_index),
                        e.gamma,
                    ]
                )
        last = entries[-1]
        print(
            f"K={clients}: round {last.round_index} added/required = "
            f"{last.incremental_var / last.required_var:.4f}, gamma = {last.gamma:.4f}"
        )
    if args.svg:
        figures.save_noise_curves_figure(curves, out / "noise_curves.svg")
    return 0


def cmd_analyze(args) -> int:
    out = _out_dir(args)
    if args.data:
        directory = Path(args.data)
        files = sorted(directory.glob("client_*.csv"))
        if len(files) < 2:
            print(f"{directory}: need at least 2 client_*.csv files", file=sys.stderr)
            return USAGE_ERROR
        corpora = [ingest_csv(f).features[: args.samples] for f in files]
    else:
        spec = _analysis_spec(args)
        if args.samples % spec.classes != 0:
            print(
                f"--samples must be divisible by the {spec.classes} classes",
                file=sys.stderr,
            )
            return USAGE_ERROR
        source = SyntheticDataSource(
            spec,
            clients=args.clients,
            samples_per_round=args.samples,
            rounds=1,
        )
        corpora = [source.round_batch(k, 1).features for k in range(args.clients)]

    basis = make_basis(args.dimensions, corpora[0].shape[1], args.basis_seed)
    report = analysis.similarity_distance(corpora, basis)
    paths = analysis.write_similarity_report(report, out)
    if args.svg:
        figures.save_similarity_figure(report, out / "similarity_matrix.svg")
        paths.append(out / "similarity_matrix.svg")
    print(f"wrote {len(paths)} files to {out}")
    return 0


def _analysis_spec(args) -> SyntheticSpec:
    return SyntheticSpec(channels=args.channels, window=args.window, seed=args.seed)


def cmd_reconstruct(args) -> int:
    try:
        variances = [float(v) for v in args.noise.split(",") if v]
    except ValueError:
        print(f"cannot parse --noise {args.noise!r}", file=sys.stderr)
        return USAGE_ERROR
    if not variances or variances[0] != 0.0 or any(
        b <= a for a, b in zip(variances, variances[1:])
    ):
        print("--noise must be strictly ascending and start at 0", file=sys.stderr)
        return USAGE_ERROR

    out = _out_dir(args)
    basis = make_basis(args.dimensions, args.width, args.basis_seed)
    signals = analysis.smooth_signals(
        args.signals, args.width, seed=args.seed, target_norm=args.norm, waves=args.waves
    )
    study = analysis.reconstruction_study(basis, signals, variances, seed=args.seed + 1)
    analysis.write_psnr_csv(study, out / "psnr.csv")
    for variance, mean_db in zip(study.noise_levels, study.psnr_db):
        print(f"variance {variance:g}: mean PSNR {mean_db:.2f} dB")
    if args.svg:
        rng = np.random.default_rng(args.seed + 2)
        example = signals[0]
        recons = []
        for variance in study.noise_levels:
            hv = encode(basis, example)
            if variance > 0:
                hv = hv + rng.normal(0.0, np.sqrt(variance), basis.dimensions)
            recons.append(decode(basis, hv))
        figures.save_reconstruction_figure(example, recons, study, out / "reconstruction.svg")
    return 0


def cmd_gen_data(args) -> int:
    manifest = parse_manifest(args.spec)
    if manifest.data.source != "synthetic":
        print(f"{args.spec}: gen-data needs a synthetic [data] section", file=sys.stderr)
        return USAGE_ERROR
    config = manifest.round_config
    source = build_data_source(manifest)
    out = _out_dir(args)
    for k in range(config.clients):
        batches = [source.round_batch(k, r) for r in range(1, config.rounds + 1)]
        merged = SampleSet(
            np.vstack([b.features for b in batches]),
            np.concatenate([b.labels for b in batches]),
        )
        export_csv(merged, out / f"client_{k}.csv")
    export_csv(source.test_set(), out / "test.csv")
    print(f"wrote {config.clients} client files and test.csv to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdfl",
        description="federated hyperdimensional learning with an incremental noise ledger",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a federated run from a manifest")
    p.add_argument("--config", required=True, help="run manifest path")
    p.add_argument("--mode", required=True, choices=("fedhd", "fedhdprivacy"))
    _add_out(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("noise-curves", help="noise ledger tables across client counts")
    p.add_argument("--clients", "--K", dest="clients", default="5,10", help="comma list of client counts")
    p.add_argument("--samples", "--L", dest="samples", type=int, default=500, help="samples per client per round")
    p.add_argument("--rounds", type=int, default=50)
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--dimensions", "--D", dest="dimensions", type=int, default=10000)
    _add_out(p)
    p.set_defaults(func=cmd_noise_curves)

    p = sub.add_parser("analyze", help="distance/similarity report")
    corpus = p.add_mutually_exclusive_group()
    corpus.add_argument("--data", help="directory of client_*.csv files")
    corpus.add_argument(
        "--synthetic", action="store_true", help="use the synthetic generator (default)"
    )
    p.add_argument("--clients", type=int, default=4, help="synthetic clients")
    p.add_argument("--samples", type=int, default=60, help="samples per client")
    p.add_argument("--channels", type=int, default=90)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--dimensions", "--D", dest="dimensions", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--basis-seed", type=int, default=0)
    _add_out(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("reconstruct", help="encode/decode PSNR study")
    p.add_argument("--noise", default="0,0.25,100", help="ascending variances starting at 0")
    p.add_argument("--signals", type=int, default=50)
    p.add_argument("--width", type=int, default=100)
    p.add_argument("--dimensions", "--D", dest="dimensions", type=int, default=1000)
    p.add_argument("--norm", type=float, default=0.35, help="signal norm fed to the encoder")
    p.add_argument("--waves", type=int, default=1, help="sinusoids mixed per signal")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--basis-seed", type=int, default=0)
    _add_out(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("gen-data", help="write a synthetic dataset as CSV files")
    p.add_argument("--spec", required=True, help="run manifest describing the dataset")
    p.add_argument("--out", help="output directory (default: $HDFL_OUT or .)")
    p.set_defaults(func=cmd_gen_data)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ManifestError as exc:
        print(str(exc), file=sys.stderr)
        return USAGE_ERROR
    except Exception as exc:  # noqa: BLE001 - boundary: report and signal failure
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
