"""
Command line for the CSK link simulator.

    python -m app constellation --out results/
    python -m app uncoded --config sweep.json --workers 4
    python -m app replay --frames captures/ --roi 32,32,64,64 --model eq.occm
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from app.core.config import settings
from app.schemas.equalizer import Activation, EqualizerArch
from app.schemas.experiment import ExperimentConfig
from app.services.channel import STREAM_DIAGNOSTIC, noise_source, transmit_array
from app.services.constellation import CONSTELLATION_HEADER, cached_constellation, constellation_rows
from app.services.equalizer import save_model
from app.services.experiment_service import (
    ExperimentService, apply_overrides, apply_profile, calibrate_sigma, calibrate_transition_sigma,
    load_experiment_config, received_constellation, run_replay, train_equalizer,
)
from app.services.ingest import lit_roi, synthesize_frame, write_frame_preview, write_manifest, write_raw_frame
from app.services.ldpc import RATES, synthesize_address_table, write_address_table
from app.services.ldpc.tables import table_filename
from app.utils.storage_utils import ResultStorage

logger = logging.getLogger(__name__)


def parse_roi(text: str) -> List[int]:
    try:
        values = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"ROI must be x0,y0,w,h integers, got {text!r}")
    if len(values) != 4:
        raise argparse.ArgumentTypeError(f"ROI must have four values, got {len(values)}")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config JSON file")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--profile", choices=["desk", "paper"], help="experiment scale")
    common.add_argument("--workers", type=int, help="worker processes for sweeps")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="python -m app", description="512-CSK optical camera link simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constellation", parents=[common], help="export the constellation table as CSV")
    p.add_argument("--received", action="store_true", help="also export received points after the channel")
    p.add_argument("--led-count", type=int, default=64)
    p.add_argument("--repeats", type=int, default=10)

    p = sub.add_parser("train", parents=[common], help="train an equalizer and write a model file")
    p.add_argument("--led-count", type=int, default=64)
    p.add_argument("--units", type=int, default=256)
    p.add_argument("--hidden", type=int, default=5)
    p.add_argument("--activation", choices=[a.value for a in Activation], default="relu")
    p.add_argument("--model-out", help="model file path (default <out>/equalizer_<led>.occm)")

    sub.add_parser("uncoded", parents=[common], help="uncoded BER sweep")
    sub.add_parser("coded", parents=[common], help="coded BER sweep")

    p = sub.add_parser("replay", parents=[common], help="push raw frames through the receive chain")
    p.add_argument("--frames", required=True, help="directory of .occr frames")
    p.add_argument("--roi", type=parse_roi, required=True, help="x0,y0,w,h")
    p.add_argument("--model", help="equalizer model file")

    p = sub.add_parser("calibrate", parents=[common], help="search the noise level sigma0")
    p.add_argument("--mode", choices=["hard", "transition"], default="hard")
    p.add_argument("--target-ber", type=float, default=1e-2)
    p.add_argument("--led-count", type=int, default=25)
    p.add_argument("--rate", default="9/10")

    p = sub.add_parser("synthesize", parents=[common], help="write synthetic raw frames or LDPC tables")
    p.add_argument("--frames", type=int, default=100, help="number of frames")
    p.add_argument("--led-count", type=int, default=64)
    p.add_argument("--pattern", default="RGGB")
    p.add_argument("--preview", action="store_true", help="also write PNG previews")
    p.add_argument("--ldpc-tables", action="store_true", help="write long-code address tables instead of frames")
    return parser


def resolve_config(args) -> ExperimentConfig:
    if args.config:
        config = load_experiment_config(args.config)
    else:
        config = apply_profile(
            ExperimentConfig(seed=settings.DEFAULT_SEED, workers=settings.DEFAULT_WORKERS), settings.DEFAULT_PROFILE
        )
    return apply_overrides(config, seed=args.seed, out=args.out, profile=args.profile, workers=args.workers)


def cmd_constellation(args, config: ExperimentConfig) -> int:
    storage = ResultStorage(config.output.directory)
    c = cached_constellation(config.constellation.order, config.constellation.steps)
    path = storage.write_rows(CONSTELLATION_HEADER, constellation_rows(c), storage.base_dir / "constellation.csv")
    print(path)
    if args.received:
        rows = received_constellation(config, args.led_count, args.repeats)
        path = storage.write_rows(
            ["symbol_index", "x", "y"],
            [[int(s), float(x), float(y)] for s, x, y in rows],
            storage.base_dir / f"received_led{args.led_count}.csv",
        )
        print(path)
    return 0


def cmd_train(args, config: ExperimentConfig) -> int:
    arch = EqualizerArch(n_units=args.units, n_hidden=args.hidden, activation=args.activation)
    run = train_equalizer(
        config, args.led_count, arch,
        on_epoch=lambda epoch, loss: logger.debug(f"epoch {epoch}: loss {loss:.6f}"),
    )
    out = args.model_out or Path(config.output.directory) / f"equalizer_{args.led_count}.occm"
    path = save_model(run.model, out)
    logger.info(f"best loss {run.best_loss:.6f} at epoch {run.best_epoch}")
    print(path)
    return 0


def cmd_sweep(args, config: ExperimentConfig) -> int:
    run_id, records, paths = ExperimentService(config).run(args.command)
    logger.info(f"run {run_id}: {len(records)} records")
    for path in paths:
        print(path)
    return 0


def cmd_replay(args, config: ExperimentConfig) -> int:
    if args.model:
        config = config.model_copy(update={"replay": config.replay.model_copy(update={"model_path": args.model})})
    report = run_replay(config, args.frames, args.roi)
    storage = ResultStorage(config.output.directory)
    path = storage.base_dir / "replay.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.model_dump_json(indent=2) + "\n")
    print(path)
    return 0


def cmd_calibrate(args, config: ExperimentConfig) -> int:
    if args.mode == "hard":
        result = calibrate_sigma(config, args.target_ber, args.led_count)
    else:
        result = calibrate_transition_sigma(config, args.rate, args.led_count)
    print(json.dumps(result.model_dump()))
    return 0


def cmd_synthesize(args, config: ExperimentConfig) -> int:
    out = Path(config.output.directory)
    if args.ldpc_tables:
        for rate in RATES:
            table = synthesize_address_table(rate, seed=config.seed)
            print(write_address_table(table, out / table_filename(rate), rate, synthetic=True))
        return 0

    c = cached_constellation(config.constellation.order, config.constellation.steps)
    rng = noise_source(config.seed, STREAM_DIAGNOSTIC, args.led_count, args.frames)
    symbols = rng.integers(0, config.constellation.order, size=args.frames)
    received = transmit_array(c.drives[symbols], config.channel_params(args.led_count), rng)
    width = len(str(max(args.frames - 1, 0)))
    for i, rgb in enumerate(received):
        frame = synthesize_frame(rgb, led_count=args.led_count, pattern=args.pattern)
        write_raw_frame(frame, out / f"frame_{i:0{width}d}.occr")
        if args.preview:
            write_frame_preview(frame, out / "preview" / f"frame_{i:0{width}d}.png")
    roi = lit_roi(args.led_count)
    write_manifest(out, symbols.tolist(), {
        "led_count": args.led_count,
        "seed": config.seed,
        "roi": [roi.x0, roi.y0, roi.w, roi.h],
    })
    print(f"{out} roi={roi.x0},{roi.y0},{roi.w},{roi.h}")
    return 0


COMMANDS = {
    "constellation": cmd_constellation,
    "train": cmd_train,
    "uncoded": cmd_sweep,
    "coded": cmd_sweep,
    "replay": cmd_replay,
    "calibrate": cmd_calibrate,
    "synthesize": cmd_synthesize,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
        return COMMANDS[args.command](args, config)
    except (ValueError, RuntimeError, OSError) as e:
        logger.debug("command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
