"""Command-line interface.

Subcommands: stats, synth, features, train, predict, grid, report.
Exit codes: 0 success, 1 usage/parameter error, 2 data error, 3 training
failure(s). Every experiment-config key has a flag twin (dots and
underscores become dashes, e.g. train.learning_rate -> --train-learning-rate).
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import CONFIG_KEYS, ExperimentConfig, parse_config_text
from .errors import (
    DataError,
    ModelFormatError,
    ParameterError,
    TempocastError,
    TrainingError,
)
from .features import RANK_POOL_SCALES, FeatureBuilder
from .grid import _improvement_csv, cell_seed, emit_report, load_grid_frame, run_grid
from .ingest import CHANNELS, impute_gaps, read_frame, serialize_records, summarize, write_frame
from .metrics import ResultsTable
from .nn.model import branch_variants, fuse_branches, load, parse_variant, predict, save, train_single
from .preprocess import fit_normalizer, make_windows, split_chronological
from .synthetic import SyntheticSpec, gen_synthetic


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _flag_for(key: str) -> str:
    return "--" + key.replace(".", "-").replace("_", "-")


def _add_config_flags(parser: argparse.ArgumentParser, skip=()):
    for key in CONFIG_KEYS:
        if key in skip:
            continue
        parser.add_argument(_flag_for(key), dest=f"cfg::{key}", metavar="V", default=None)


def _config_from_args(args, require_seed: bool = False) -> ExperimentConfig:
    if require_seed and getattr(args, "seed", None) is None:
        raise ParameterError("--seed is required")
    cfg = ExperimentConfig()
    if getattr(args, "config", None):
        cfg = parse_config_text(Path(args.config).read_text(encoding="utf-8"), base=cfg)
    lines = []
    for name, value in vars(args).items():
        if name.startswith("cfg::") and value is not None:
            lines.append(f"{name[5:]} = {value}")
    if getattr(args, "seed", None) is not None:
        lines.append(f"seed = {args.seed}")
    if lines:
        cfg = parse_config_text("\n".join(lines), base=cfg)
    return cfg


def _cmd_stats(args) -> int:
    frame = read_frame(args.file)
    sys.stdout.write(summarize(frame).to_csv())
    return 0


def _cmd_synth(args) -> int:
    spec = SyntheticSpec(
        length=args.length,
        base_speed=args.base_speed,
        diurnal_amplitude=args.diurnal_amplitude,
        period=args.period,
        trend_slope=args.trend_slope,
        ar_coeff=args.ar_coeff,
        noise_std=args.noise_std,
        channel_seed=args.channel_seed,
    )
    frame = gen_synthetic(spec, args.seed)
    if args.out:
        write_frame(frame, args.out)
    else:
        sys.stdout.write(serialize_records(frame))
    return 0


def _cmd_features(args) -> int:
    frame = impute_gaps(read_frame(args.file))
    ds = make_windows(frame, lookback=4, horizons=args.horizons, retro=args.retro)
    # inspection tool: normalizers are fitted on the whole file
    rows = frame.values
    builder = FeatureBuilder(
        input_norm=fit_normalizer(rows, "minmax"),
        zscore_norm=fit_normalizer(rows, "zscore"),
        smoothing=args.smoothing,
    )
    feature_set = {"rp": "RP", "fft": "FFT", "both": "FFT+RP"}[args.kind]
    parts = builder.components(ds, feature_set)
    header = ["origin_time"]
    blocks = []
    if "fft" in parts:
        for ch in CHANNELS:
            header += [f"fft_{ch}_mag", f"fft_{ch}_phase"]
        blocks.append(parts["fft"])
    if "rp" in parts:
        for scale in RANK_POOL_SCALES:
            header += [f"rp_{ch}_s{scale}" for ch in CHANNELS]
        blocks.append(parts["rp"])
    data = np.concatenate(blocks, axis=1)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for ts, row in zip(ds.origin_times, data):
        w.writerow([f"{ts}:00"] + [repr(float(v)) for v in row])
    sys.stdout.write(out.getvalue())
    return 0


def _cmd_train(args) -> int:
    cfg = _config_from_args(args, require_seed=True)
    if args.lookback is not None:
        cfg = replace(cfg, lookbacks=(args.lookback,))
    lookback = cfg.lookbacks[0]
    frame = load_grid_frame(cfg)
    ds = make_windows(frame, lookback, cfg.horizons, cfg.retro)
    train_ds, val_ds, _ = split_chronological(ds, cfg.fractions)

    variant = args.variant
    fused, _, regressor = parse_variant(variant)
    if fused:
        models = []
        for tag in branch_variants(variant):
            _, _, reg = parse_variant(tag)
            tc = replace(cfg.train, seed=cell_seed(cfg.seed, tag, lookback))
            models.append(
                train_single(tag, train_ds, val_ds, tc, arch=cfg.arch.for_regressor(reg),
                             smoothing=cfg.smoothing)
            )
        model = fuse_branches(variant, models[0], models[1], val_ds)
    else:
        tc = replace(cfg.train, seed=cell_seed(cfg.seed, variant, lookback))
        model = train_single(variant, train_ds, val_ds, tc,
                             arch=cfg.arch.for_regressor(regressor), smoothing=cfg.smoothing)
    Path(args.out).write_bytes(save(model))
    print(f"wrote {args.out} (variant {variant}, lookback {lookback}, best epoch {model.best_epoch})")
    return 0


def _cmd_predict(args) -> int:
    model = load(Path(args.model).read_bytes())
    frame = impute_gaps(read_frame(args.data))
    ds = make_windows(frame, model.lookback, model.horizons, model.retro_len)
    preds = predict(model, ds)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["origin_time"] + [f"h{h}" for h in range(1, model.horizons + 1)])
    for i, ts in enumerate(ds.origin_times):
        w.writerow([f"{ts}:00"] + [repr(float(v)) for v in preds[:, i]])
    if args.out:
        Path(args.out).write_text(out.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(out.getvalue())
    return 0


def _cmd_grid(args) -> int:
    cfg = _config_from_args(args, require_seed=True)
    run = run_grid(cfg)
    emit_report(run, args.out)
    if run.failures:
        for (variant, lb), reason in sorted(run.failures.items()):
            print(f"FAILED cell ({variant}, lookback {lb}): {reason}", file=sys.stderr)
        return 3
    print(f"wrote {args.out} ({len(run.table.cells)} cells)")
    return 0


def _cmd_report(args) -> int:
    results_path = Path(args.results)
    if results_path.is_dir():
        results_path = results_path / "results.json"
    table = ResultsTable.from_json(results_path.read_text(encoding="utf-8"))
    out_dir = Path(args.out) if args.out else results_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "table.csv").write_text(table.to_csv(), encoding="utf-8")
    improvements = {"auto": None, "yes": True, "no": False}[args.improvements]
    if improvements is None:
        improvements = "MLP" in table.variants
    if improvements:
        if "MLP" not in table.variants:
            raise ParameterError("improvement files need the MLP baseline in the results")
        for metric in ("mae", "rmse", "r"):
            (out_dir / f"improvement_{metric}.csv").write_text(
                _improvement_csv(table, metric), encoding="utf-8"
            )
    print(f"wrote report to {out_dir}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="tempocast", description=__doc__)
    parser.add_argument("--version", action="version", version=f"tempocast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="print per-channel summary statistics as CSV")
    p.add_argument("file")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("synth", help="generate a seeded synthetic frame")
    p.add_argument("--length", type=int, default=4000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--base-speed", type=float, default=5.0)
    p.add_argument("--diurnal-amplitude", type=float, default=1.5)
    p.add_argument("--period", type=float, default=24.0)
    p.add_argument("--trend-slope", type=float, default=0.0)
    p.add_argument("--ar-coeff", type=float, default=0.75)
    p.add_argument("--noise-std", type=float, default=0.4)
    p.add_argument("--channel-seed", type=int, default=7)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("features", help="emit descriptor CSV for inspection "
                                        "(normalizers fitted on the whole file)")
    p.add_argument("file")
    p.add_argument("--kind", choices=("rp", "fft", "both"), default="both")
    p.add_argument("--retro", type=int, default=24)
    p.add_argument("--horizons", type=int, default=6)
    p.add_argument("--smoothing", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=_cmd_features)

    p = sub.add_parser("train", help="train one variant and save the model bundle")
    p.add_argument("--variant", required=True)
    p.add_argument("--lookback", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("-o", "--out", required=True)
    _add_config_flags(p, skip=("seed",))
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="forecast every origin in a CSV with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("-o", "--out", default=None)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("grid", help="run the experiment grid and write the report")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None, help="required; master seed for the grid")
    p.add_argument("-o", "--out", required=True)
    _add_config_flags(p, skip=("seed",))
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("report", help="re-emit report files from a grid's results.json")
    p.add_argument("--results", required=True, help="grid output dir or results.json path")
    p.add_argument("-o", "--out", default=None)
    p.add_argument("--improvements", choices=("auto", "yes", "no"), default="auto")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ParameterError as err:
        print(f"tempocast: error: {err}", file=sys.stderr)
        return 1
    except (DataError, ModelFormatError) as err:
        print(f"tempocast: data error: {err}", file=sys.stderr)
        return 2
    except TrainingError as err:
        print(f"tempocast: training failure: {err}", file=sys.stderr)
        return 3
    except TempocastError as err:
        print(f"tempocast: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
