"""
Sweep orchestration: training data, uncoded and coded BER sweeps, noise
calibration, frame replay and result emission.

Every random draw comes from ``noise_source(seed, stream, *axis values)``, so a
grid point's results depend only on the master seed and its own axis values,
never on worker count or execution order.
"""

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError
from scipy.stats import beta

from app.schemas.colorspace import ChromaticityPoint
from app.schemas.constellation import SymbolBits
from app.schemas.equalizer import EqualizerArch
from app.schemas.experiment import (
    BerRecord, CalibrationResult, ExperimentConfig, OutputFormat, Profile, ReplayReport,
)
from app.services import colorspace
from app.services.channel import (
    STREAM_CALIBRATE, STREAM_CODED, STREAM_DIAGNOSTIC, STREAM_EVAL, STREAM_INIT, STREAM_TRAIN,
    noise_source, transmit_array,
)
from app.services.constellation import (
    CskConstellation, bits_to_symbols, cached_constellation, hard_demodulate_points, symbols_to_bits,
)
from app.services.equalizer import (
    MlpModel, TrainingData, TrainingDivergenceError, compute_llr, fit, forward_batch, hard_decisions,
    load_model, zero_model,
)
from app.services.equalizer.training import TrainingRun
from app.services.ingest import (
    RegionOfInterest, extract_directory, led_area_fraction, list_frames, read_manifest, read_raw_frame,
)
from app.services.ldpc import LdpcCode, cached_code, decode_arrays, encode_batch, load_small_code
from app.services.progress_events import ProgressEventEmitter, ProgressPhase, ProgressStatus
from app.utils.experiment_logger import experiment_logger
from app.utils.id_utils import generate_run_id
from app.utils.storage_utils import ResultStorage

logger = logging.getLogger(__name__)

DESK_EPOCHS = 300
DESK_BIT_BUDGET = 100_000
PAPER_EPOCHS = 5000
PAPER_BIT_BUDGET = 3 * 64800
LED_AREA_THRESHOLD = 0.5


class ExperimentConfigError(ValueError):
    """Raised for unreadable or invalid experiment configuration"""
    pass


# --- configuration -----------------------------------------------------------

def load_experiment_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ExperimentConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ExperimentConfigError(f"{path} is not valid JSON: {e}") from e
    try:
        return ExperimentConfig(**raw)
    except ValidationError as e:
        raise ExperimentConfigError(f"invalid experiment config {path}: {e}") from e


def apply_profile(config: ExperimentConfig, profile) -> ExperimentConfig:
    """Copy of config with the desk or paper scale applied"""
    profile = Profile(profile)
    if profile is Profile.paper:
        training = config.training.model_copy(update={"epochs": PAPER_EPOCHS})
        coded = config.coded.model_copy(update={"blocks_per_point": 3, "code_length": 64800})
        budget = PAPER_BIT_BUDGET
    else:
        training = config.training.model_copy(update={"epochs": DESK_EPOCHS})
        coded = config.coded
        budget = DESK_BIT_BUDGET
    return config.model_copy(update={
        "profile": profile, "training": training, "coded": coded, "uncoded_bit_budget": budget,
    })


def apply_overrides(config: ExperimentConfig, seed: Optional[int] = None, out: Optional[str] = None,
                    profile: Optional[str] = None, workers: Optional[int] = None) -> ExperimentConfig:
    """Apply command-line flags on top of a loaded config"""
    if profile is not None:
        config = apply_profile(config, profile)
    data = config.model_dump()
    if seed is not None:
        data["seed"] = seed
    if workers is not None:
        data["workers"] = workers
    if out is not None:
        data["output"]["directory"] = out
    try:
        return ExperimentConfig(**data)
    except ValidationError as e:
        raise ExperimentConfigError(f"invalid override: {e}") from e


# --- statistics ----------------------------------------------------------------

def ber_upper_95(bit_errors: int, bits_total: int) -> float:
    """One-sided 95% upper confidence bound on the bit error rate"""
    if bits_total <= 0:
        raise ValueError("bits_total must be positive")
    if bit_errors == 0:
        return -math.log(0.05) / bits_total
    if bit_errors >= bits_total:
        return 1.0
    return float(beta.ppf(0.95, bit_errors + 1, bits_total - bit_errors))


def _record(config: ExperimentConfig, started: float, **fields) -> BerRecord:
    errors, total = fields["bit_errors"], fields["bits_total"]
    wall = time.perf_counter() - started if config.output.record_wall_time else 0.0
    return BerRecord(ber=errors / total, ber_upper_95=ber_upper_95(errors, total), wall_time_s=wall, **fields)


# --- shared pipeline pieces ----------------------------------------------------

def constellation_for(config: ExperimentConfig) -> CskConstellation:
    return cached_constellation(config.constellation.order, config.constellation.steps)


def input_bounds(config: ExperimentConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Bounding box of the reference points in the configured projection"""
    ref = constellation_for(config).points(config.chromaticity_mode)
    return ref.min(axis=0), ref.max(axis=0)


def project_received(config: ExperimentConfig, rgb: np.ndarray) -> np.ndarray:
    """
    Project measured RGB with the configured mode.

    A sample that clips to black has no normalized chromaticity; it lands on the
    centroid of the reference points, where it carries no information about
    any symbol.
    """
    centroid = constellation_for(config).points(config.chromaticity_mode).mean(axis=0)
    return colorspace.project(rgb, config.chromaticity_mode, dark_point=centroid)


def _receive(config: ExperimentConfig, led_count: int, symbols: np.ndarray,
             rng: np.random.Generator) -> np.ndarray:
    """Symbols -> channel -> projected (N, 2) points"""
    c = constellation_for(config)
    received = transmit_array(c.drives[symbols], config.channel_params(led_count), rng)
    return project_received(config, received)


def generate_training_arrays(config: ExperimentConfig, led_count: Optional[int] = None,
                             sample_count: Optional[int] = None, stream: int = STREAM_TRAIN) -> TrainingData:
    led_count = led_count if led_count is not None else config.led_counts[0]
    n = sample_count if sample_count is not None else config.training.sample_count
    rng = noise_source(config.seed, stream, led_count)
    symbols = rng.integers(0, config.constellation.order, size=n)
    points = _receive(config, led_count, symbols, rng)
    return TrainingData(points=points, symbols=symbols, bits_per_symbol=config.bits_per_symbol)


def generate_training_set(config: ExperimentConfig,
                          led_count: Optional[int] = None) -> List[Tuple[ChromaticityPoint, SymbolBits]]:
    """
    Uniform random symbols passed through the configured channel.

    Returns:
        exactly training.sample_count (point, label) pairs drawn from the training stream
    """
    data = generate_training_arrays(config, led_count)
    width = config.bits_per_symbol
    return [
        (ChromaticityPoint.from_array(p), SymbolBits.from_index(int(s), width))
        for p, s in zip(data.points, data.symbols)
    ]


def _init_seed(config: ExperimentConfig, led_count: int, arch: EqualizerArch) -> int:
    state = np.random.SeedSequence([config.seed, STREAM_INIT, led_count, arch.n_units, arch.n_hidden]).generate_state(1)
    return int(state[0])


def train_equalizer(config: ExperimentConfig, led_count: int, arch: EqualizerArch,
                    on_epoch: Optional[Callable[[int, float], None]] = None) -> TrainingRun:
    data = generate_training_arrays(config, led_count)
    training = config.training.model_copy(update={"seed": _init_seed(config, led_count, arch)})
    return fit(data, arch, training, bounds=input_bounds(config), on_epoch=on_epoch)


def _model_or_fallback(config: ExperimentConfig, led_count: int, arch: EqualizerArch,
                       run_id: Optional[str]) -> Tuple[MlpModel, bool]:
    try:
        return train_equalizer(config, led_count, arch).model, False
    except TrainingDivergenceError as e:
        experiment_logger.log_training_diverged(run_id, led_count, arch.n_units, arch.n_hidden, e.epoch)
        logger.warning(f"led_count={led_count} {arch.n_units}x{arch.n_hidden}: diverged at epoch {e.epoch}")
        return (e.best_model or zero_model(arch, config.bits_per_symbol)), True


def _eval_symbols(config: ExperimentConfig) -> int:
    return math.ceil(config.uncoded_bit_budget / config.bits_per_symbol)


# --- uncoded sweep ---------------------------------------------------------------

def _uncoded_point(task) -> Tuple[int, BerRecord]:
    index, config, led_count, arch, run_id = task
    started = time.perf_counter()
    width = config.bits_per_symbol
    rng = noise_source(config.seed, STREAM_EVAL, led_count)
    symbols = rng.integers(0, config.constellation.order, size=_eval_symbols(config))
    points = _receive(config, led_count, symbols, rng)
    sent = symbols_to_bits(symbols, width)

    if arch is None:
        c = constellation_for(config)
        decided = symbols_to_bits(hard_demodulate_points(c, points, config.chromaticity_mode), width)
        errors = int(np.count_nonzero(decided != sent))
        return index, _record(config, started, led_count=led_count, N_u=0, N_h=0, detector="hard",
                              bit_errors=errors, bits_total=sent.size)

    model, diverged = _model_or_fallback(config, led_count, arch, run_id)
    decided = hard_decisions(forward_batch(model, points))
    errors = int(np.count_nonzero(decided != sent))
    return index, _record(config, started, led_count=led_count, N_u=arch.n_units, N_h=arch.n_hidden,
                          bit_errors=errors, bits_total=sent.size, diverged=diverged)


def uncoded_tasks(config: ExperimentConfig, run_id: Optional[str] = None) -> List[tuple]:
    tasks = []
    for led_count in config.led_counts:
        if config.include_baseline:
            tasks.append((len(tasks), config, led_count, None, run_id))
        for arch in config.equalizer.grid():
            tasks.append((len(tasks), config, led_count, arch, run_id))
    return tasks


def _run_tasks(worker: Callable, tasks: List[tuple], workers: int,
               emitter: Optional[ProgressEventEmitter] = None) -> List:
    """Run tasks in a process pool; results come back ordered by task index"""
    results = []

    def finished(index: int, result):
        results.append((index, result))
        if emitter:
            emitter.point_finished(index)

    if workers <= 1 or len(tasks) <= 1:
        for task in tasks:
            index, result = worker(task)
            finished(index, result)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(worker, task) for task in tasks]
            for future in as_completed(futures):
                index, result = future.result()
                finished(index, result)
    return [result for _, result in sorted(results, key=lambda pair: pair[0])]


def run_uncoded_sweep(config: ExperimentConfig, emitter: Optional[ProgressEventEmitter] = None,
                      run_id: Optional[str] = None) -> List[BerRecord]:
    """
    One record per (led_count, N_u, N_h), plus one hard-decision record per
    led_count when include_baseline is set.
    """
    run_id = run_id or generate_run_id()
    tasks = uncoded_tasks(config, run_id)
    experiment_logger.log_sweep_started(run_id, "uncoded", len(tasks), config.seed, config.profile.value)
    started = time.perf_counter()
    if emitter:
        emitter.emit_event(ProgressPhase.TRAINING, ProgressStatus.IN_PROGRESS,
                           f"Running {len(tasks)} uncoded grid points")
    records = _run_tasks(_uncoded_point, tasks, config.workers, emitter)
    for record in records:
        experiment_logger.log_point_finished(run_id, record.model_dump())
    experiment_logger.log_sweep_finished(run_id, "uncoded", len(records), time.perf_counter() - started)
    return records


# --- coded sweep -------------------------------------------------------------------

def select_best_architecture(records: Sequence[BerRecord], output_dim: int = 9) -> EqualizerArch:
    """(N_u, N_h) with the lowest mean uncoded BER; ties go to the smaller network"""
    grouped: Dict[Tuple[int, int], List[float]] = {}
    for r in records:
        if r.coded or r.detector != "nn" or r.diverged:
            continue
        grouped.setdefault((r.N_u, r.N_h), []).append(r.ber)
    if not grouped:
        raise ExperimentConfigError("no converged uncoded equalizer records to choose from")

    def size(key):
        units, hidden = key
        return 3 * units + (hidden - 1) * (units * units + units) + units * output_dim + output_dim

    best = min(grouped, key=lambda key: (float(np.mean(grouped[key])), size(key), key))
    return EqualizerArch(n_units=best[0], n_hidden=best[1])


def codes_for(config: ExperimentConfig) -> List[LdpcCode]:
    if config.coded.small_code_path:
        return [load_small_code(config.coded.small_code_path)]
    return [cached_code(rate, config.coded.code_length) for rate in config.coded.rates]


def symbols_for_codewords(codewords: np.ndarray, width: int) -> Tuple[np.ndarray, int]:
    """(B, n) codewords -> (B, S) symbols in codeword order, zero-padding the last symbol"""
    blocks, n = codewords.shape
    pad = (-n) % width
    padded = np.concatenate([codewords, np.zeros((blocks, pad), dtype=codewords.dtype)], axis=1)
    return bits_to_symbols(padded.reshape(blocks, -1, width)), pad


def coded_point(config: ExperimentConfig, model: MlpModel, code: LdpcCode, led_count: int,
                diverged: bool = False) -> BerRecord:
    started = time.perf_counter()
    width = config.bits_per_symbol
    blocks = config.coded.blocks_per_point
    rng = noise_source(config.seed, STREAM_CODED, led_count, code.n, code.k)

    info = rng.integers(0, 2, size=(blocks, code.k), dtype=np.uint8)
    codewords = encode_batch(code, info)
    symbols, pad = symbols_for_codewords(codewords, width)
    points = _receive(config, led_count, symbols.ravel(), rng)
    llrs = compute_llr(forward_batch(model, points), config.decoder.llr_clip)
    llrs = llrs.reshape(blocks, -1)[:, :code.n]  # pad bits never reach the decoder

    bits, converged, iterations = decode_arrays(code, llrs, config.decoder.max_iters, config.decoder.normalization)
    errors = int(np.count_nonzero(bits[:, :code.k] != info))
    return _record(
        config, started, led_count=led_count, N_u=model.n_units, N_h=model.n_hidden, rate=code.rate_tag,
        coded=True, bit_errors=errors, bits_total=blocks * code.k, diverged=diverged,
        blocks_converged=int(converged.sum()), mean_iterations=float(iterations.mean()),
    )


def _coded_led_point(task) -> Tuple[int, List[BerRecord]]:
    index, config, led_count, arch, run_id = task
    if config.coded.model_path:
        model, diverged = load_model(config.coded.model_path), False
    else:
        model, diverged = _model_or_fallback(config, led_count, arch, run_id)
    records = []
    for code in codes_for(config):
        record = coded_point(config, model, code, led_count, diverged)
        experiment_logger.log_decoder_statistics(run_id, record.rate, led_count, config.coded.blocks_per_point,
                                                 record.blocks_converged, record.mean_iterations)
        records.append(record)
    return index, records


def run_coded_sweep(config: ExperimentConfig, uncoded_records: Optional[Sequence[BerRecord]] = None,
                    emitter: Optional[ProgressEventEmitter] = None, run_id: Optional[str] = None) -> List[BerRecord]:
    """
    One record per (led_count, rate); the equalizer is trained once per led_count
    (or loaded from coded.model_path) and shared by every rate.
    """
    run_id = run_id or generate_run_id()
    arch = config.coded.arch
    if config.coded.use_best_architecture and uncoded_records:
        arch = select_best_architecture(uncoded_records, config.bits_per_symbol)
        logger.info(f"Coded sweep uses best uncoded architecture {arch.n_units}x{arch.n_hidden}")
    codes_for(config)  # fail fast on missing tables

    tasks = [(i, config, led_count, arch, run_id) for i, led_count in enumerate(config.led_counts)]
    experiment_logger.log_sweep_started(run_id, "coded", len(tasks), config.seed, config.profile.value)
    started = time.perf_counter()
    if emitter:
        emitter.emit_event(ProgressPhase.DECODING, ProgressStatus.IN_PROGRESS,
                           f"Running {len(tasks)} coded led_count points")
    grouped = _run_tasks(_coded_led_point, tasks, config.workers, emitter)
    records = [record for group in grouped for record in group]
    for record in records:
        experiment_logger.log_point_finished(run_id, record.model_dump())
    experiment_logger.log_sweep_finished(run_id, "coded", len(records), time.perf_counter() - started)
    return records


# --- diagnostics and calibration -------------------------------------------------

def received_constellation(config: ExperimentConfig, led_count: int, repeats: int = 10) -> np.ndarray:
    """(order * repeats, 3) rows of (symbol, x, y) after the channel"""
    rng = noise_source(config.seed, STREAM_DIAGNOSTIC, led_count)
    symbols = np.repeat(np.arange(config.constellation.order), repeats)
    points = _receive(config, led_count, symbols, rng)
    return np.column_stack([symbols, points])


def hard_decision_ber(config: ExperimentConfig, led_count: int, noise_sigma0: float) -> Tuple[int, int]:
    """Baseline bit errors on the calibration stream at a given sigma0"""
    trial = config.model_copy(update={"channel": config.channel.model_copy(update={"noise_sigma0": noise_sigma0})})
    rng = noise_source(config.seed, STREAM_CALIBRATE, led_count)
    symbols = rng.integers(0, config.constellation.order, size=_eval_symbols(config))
    points = _receive(trial, led_count, symbols, rng)
    decided = hard_demodulate_points(constellation_for(config), points, config.chromaticity_mode)
    width = config.bits_per_symbol
    sent = symbols_to_bits(symbols, width)
    return int(np.count_nonzero(symbols_to_bits(decided, width) != sent)), sent.size


def calibrate_sigma(config: ExperimentConfig, target_ber: float = 1e-2, led_count: int = 25,
                    rel_tolerance: float = 0.1, max_evaluations: int = 40,
                    sigma_max: float = 1.0) -> CalibrationResult:
    """
    Bisect sigma0 until the hard-decision uncoded BER is within rel_tolerance of target_ber.

    All evaluations reuse one random stream, so BER is a monotone step function
    of sigma0. When crosstalk alone already exceeds the target, sigma0 = 0 is
    returned with reachable = False.
    """
    evaluations = 0

    def measure(sigma: float) -> float:
        nonlocal evaluations
        evaluations += 1
        errors, total = hard_decision_ber(config, led_count, sigma)
        return errors / total

    def result(sigma: float, ber: float, reachable: bool) -> CalibrationResult:
        logger.info(f"Calibrated sigma0={sigma:.6g} (BER {ber:.3e}, target {target_ber:g}, reachable={reachable})")
        return CalibrationResult(target=f"hard_ber={target_ber:g}", led_count=led_count, noise_sigma0=sigma,
                                 achieved_ber=ber, reachable=reachable, evaluations=evaluations)

    floor = measure(0.0)
    if floor >= target_ber * (1.0 - rel_tolerance):
        return result(0.0, floor, abs(floor - target_ber) <= rel_tolerance * target_ber)

    lo, hi = 0.0, min(0.01, sigma_max)
    hi_ber = measure(hi)
    while hi_ber < target_ber and hi < sigma_max:
        lo, hi = hi, min(2.0 * hi, sigma_max)
        hi_ber = measure(hi)
    if hi_ber < target_ber:
        return result(hi, hi_ber, False)

    best_sigma, best_ber = hi, hi_ber
    while evaluations < max_evaluations:
        if abs(best_ber - target_ber) <= rel_tolerance * target_ber:
            break
        mid = 0.5 * (lo + hi)
        ber = measure(mid)
        if abs(ber - target_ber) < abs(best_ber - target_ber):
            best_sigma, best_ber = mid, ber
        if ber < target_ber:
            lo = mid
        else:
            hi = mid
    return result(best_sigma, best_ber, abs(best_ber - target_ber) <= rel_tolerance * target_ber)


def calibrate_transition_sigma(config: ExperimentConfig, rate: str = "9/10", led_count: int = 25,
                               steps: int = 8, sigma_max: float = 1.0,
                               model: Optional[MlpModel] = None) -> CalibrationResult:
    """
    Largest sigma0 (to within the bisection resolution) at which the coded BER is still 0.

    The equalizer is trained once at the configured sigma0 (or taken from
    ``model`` / coded.model_path) and reused for every trial sigma0.
    """
    if config.coded.small_code_path:
        code = load_small_code(config.coded.small_code_path)
    else:
        code = cached_code(rate, config.coded.code_length)
    if model is None:
        if config.coded.model_path:
            model = load_model(config.coded.model_path)
        else:
            model = train_equalizer(config, led_count, config.coded.arch).model
    evaluations = 0

    def coded_ber(sigma: float) -> float:
        nonlocal evaluations
        evaluations += 1
        trial = config.model_copy(update={"channel": config.channel.model_copy(update={"noise_sigma0": sigma})})
        return coded_point(trial, model, code, led_count).ber

    target = f"coded_ber=0 rate={code.rate_tag}"
    base = coded_ber(0.0)
    if base > 0.0:
        return CalibrationResult(target=target, led_count=led_count, noise_sigma0=0.0, achieved_ber=base,
                                 reachable=False, evaluations=evaluations)

    lo, hi = 0.0, max(config.channel.noise_sigma0, 1e-3)
    while coded_ber(hi) == 0.0:
        lo = hi
        if hi >= sigma_max:
            return CalibrationResult(target=target, led_count=led_count, noise_sigma0=hi, achieved_ber=0.0,
                                     reachable=True, evaluations=evaluations)
        hi = min(2.0 * hi, sigma_max)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if coded_ber(mid) == 0.0:
            lo = mid
        else:
            hi = mid
    logger.info(f"Coded BER for rate {code.rate_tag} reaches 0 below sigma0={lo:.6g} at led_count={led_count}")
    return CalibrationResult(target=target, led_count=led_count, noise_sigma0=lo, achieved_ber=0.0,
                             reachable=True, evaluations=evaluations)


# --- replay ---------------------------------------------------------------------------

def run_replay(config: ExperimentConfig, frame_dir=None, roi: Optional[Sequence[int]] = None,
               model: Optional[MlpModel] = None) -> ReplayReport:
    """
    Push recorded raw frames through extraction, projection and demodulation.

    The hard-decision path always runs; the equalizer path runs when a model is
    given or replay.model_path is set. Bit errors are counted against the
    directory manifest when one exists.
    """
    frame_dir = frame_dir or config.replay.frame_dir
    roi = roi or config.replay.roi
    if frame_dir is None or roi is None:
        raise ExperimentConfigError("replay needs a frame directory and a ROI")
    region = RegionOfInterest(x0=roi[0], y0=roi[1], w=roi[2], h=roi[3])
    if model is None and config.replay.model_path:
        model = load_model(config.replay.model_path)

    rgb = extract_directory(frame_dir, region)
    points = project_received(config, rgb)
    c = constellation_for(config)
    hard = hard_demodulate_points(c, points, config.chromaticity_mode)
    nn = None
    if model is not None:
        nn = bits_to_symbols(hard_decisions(forward_batch(model, points)))

    fractions = [led_area_fraction(read_raw_frame(p), LED_AREA_THRESHOLD) for p in list_frames(frame_dir)]
    report = ReplayReport(frames=len(hard), roi=list(roi), hard_symbols=hard.tolist(),
                          nn_symbols=None if nn is None else nn.tolist(),
                          mean_led_area_fraction=float(np.mean(fractions)))

    manifest = read_manifest(frame_dir)
    if manifest and "symbols" in manifest:
        reference = np.asarray(manifest["symbols"], dtype=np.int64)
        if len(reference) != len(hard):
            raise ExperimentConfigError(f"manifest lists {len(reference)} symbols for {len(hard)} frames")
        width = config.bits_per_symbol
        sent = symbols_to_bits(reference, width)
        report.reference_symbols = reference.tolist()
        report.bits_total = int(sent.size)
        report.hard_bit_errors = int(np.count_nonzero(symbols_to_bits(hard, width) != sent))
        if nn is not None:
            report.nn_bit_errors = int(np.count_nonzero(symbols_to_bits(nn, width) != sent))
    logger.info(f"Replayed {len(hard)} frames from {frame_dir}")
    return report


# --- output ----------------------------------------------------------------------------

def emit_results(records: Sequence[BerRecord], formats: Sequence = (OutputFormat.csv, OutputFormat.json),
                 out_dir=None, stem: str = "results") -> List[Path]:
    """
    Write records as CSV and/or JSON.

    Raises:
        ValueError: empty record list
        OSError: output directory not writable
    """
    if not records:
        raise ValueError("no records to emit")
    storage = ResultStorage(str(out_dir or "results"))
    paths = []
    for fmt in formats:
        fmt = OutputFormat(fmt)
        target = storage.base_dir / f"{stem}.{fmt.value}"
        if fmt is OutputFormat.csv:
            paths.append(storage.write_csv(records, target))
        else:
            paths.append(storage.write_json(records, target))
    logger.info(f"Wrote {len(records)} records to {', '.join(str(p) for p in paths)}")
    return paths


class ExperimentService:
    """Runs a sweep end to end and stores its results with run metadata"""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.storage = ResultStorage(config.output.directory)

    def _sweep(self, kind: str, emitter: Optional[ProgressEventEmitter], run_id: str) -> List[BerRecord]:
        if kind == "uncoded":
            return run_uncoded_sweep(self.config, emitter, run_id)
        if kind == "coded":
            uncoded = None
            if self.config.coded.use_best_architecture and not self.config.coded.model_path:
                uncoded = run_uncoded_sweep(self.config, None, run_id)
            return run_coded_sweep(self.config, uncoded, emitter, run_id)
        raise ExperimentConfigError(f"unknown sweep kind {kind!r}")

    def run(self, kind: str, emitter: Optional[ProgressEventEmitter] = None,
            run_id: Optional[str] = None) -> Tuple[str, List[BerRecord], List[Path]]:
        """
        Run one sweep, write its result files and record the run's metadata.

        Returns:
            (run_id, records, written paths)
        """
        run_id = run_id or generate_run_id()
        try:
            records = self._sweep(kind, emitter, run_id)
            if emitter:
                emitter.emit_event(ProgressPhase.WRITING_RESULTS, ProgressStatus.IN_PROGRESS, "Writing results")
            paths = emit_results(records, self.config.output.formats, self.storage.base_dir, kind)
            self.storage.save_run_metadata(run_id, {
                "kind": kind,
                "seed": self.config.seed,
                "profile": self.config.profile.value,
                "records": len(records),
                "files": [str(p) for p in paths],
                "config": self.config.model_dump(mode="json"),
            })
        except Exception as e:
            experiment_logger.log_sweep_failed(run_id, kind, str(e))
            if emitter:
                emitter.failed(str(e))
            raise

        if emitter:
            emitter.completed({"run_id": run_id, "records": len(records)})
        return run_id, records, paths
