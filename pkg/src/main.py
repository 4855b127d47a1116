#!/usr/bin/env python3
"""
wavguard - collapsed segment detection and suppression

Main entry point for the command-line tools.

Usage:
    python -m src.main <command> [options]

Commands:
    mulaw, envelope, lpc, detect, regen-sim, synth-corpus, eval-det, calibrate

Machine-readable output (CSV/JSON) goes to stdout or --out; logs and
summaries go to stderr.
"""

import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Optional

from .config import Config, load_config, write_config
from .constraint import RhoSchedule
from .detector import CollapseDetector
from .envelope import extract_envelope
from .generators import (
    CollapseInjector,
    CollapseKind,
    CollapsePlan,
    ReferenceTrackingGenerator,
    ToyCellGenerator,
    generate_unguarded,
    generate_with_guard,
)
from .lpc import analyze_reference
from .reports import ReportWriter, open_output
from .signal_core import SegmentSpec, mulaw_decode_array, mulaw_encode_array, mulaw_roundtrip
from .verification import (
    DEFAULT_GRID_POINTS,
    Level,
    STATISTIC_NAMES,
    evaluate_det,
    load_corpus,
    statistic_for,
    synth_corpus,
    write_corpus,
)
from .wav_io import read_wav, write_wav

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"

logger = logging.getLogger("wavguard")


def _configure_logging(verbose: bool, log_file: Optional[str]) -> Optional[logging.Handler]:
    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger().setLevel(logging.DEBUG if verbose else logging.INFO)
    if not log_file:
        return None
    Path(log_file).parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(log_file)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logging.getLogger().addHandler(handler)
    return handler


def _rho_schedule(text: str) -> RhoSchedule:
    try:
        return RhoSchedule.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _resolve_config(args: argparse.Namespace) -> Config:
    """Defaults < config file < flags."""
    config = load_config(args.config)
    rho = getattr(args, "rho", None)
    stat = getattr(args, "stat", None)
    use_hilbert = None
    if stat in ("env", "env-abs"):
        use_hilbert = stat == "env"
    if getattr(args, "rectify", False):
        use_hilbert = False
    return config.with_overrides(
        seed=args.seed,
        jobs=args.jobs,
        seg_len=getattr(args, "seg_len", None),
        threshold=getattr(args, "threshold", None),
        rho_schedule=rho.values if rho is not None else None,
        peak_window=getattr(args, "peak_window", None),
        lpf_cutoff_hz=getattr(args, "cutoff", None),
        use_hilbert=use_hilbert,
        lpc_order=getattr(args, "order", None),
        lpc_frame_len=getattr(args, "frame_len", None),
        lpc_frame_shift=getattr(args, "frame_shift", None),
    )


def cmd_mulaw(args: argparse.Namespace, config: Config) -> int:
    wave = read_wav(args.input)
    codes = mulaw_encode_array(wave.samples)
    with open_output(args.csv) as stream:
        ReportWriter(stream).write_mulaw(codes, mulaw_decode_array(codes))
    if args.out:
        write_wav(args.out, mulaw_roundtrip(wave))
        logger.info(f"Wrote roundtripped waveform to {args.out}")
    return 0


def cmd_envelope(args: argparse.Namespace, config: Config) -> int:
    wave = read_wav(args.input)
    length = args.length if args.length is not None else len(wave) - args.start
    span = SegmentSpec(args.start, length)
    env = extract_envelope(wave, span, config.envelope_params())
    with open_output(args.out) as stream:
        ReportWriter(stream).write_envelope(env, start=span.start)
    return 0


def cmd_lpc(args: argparse.Namespace, config: Config) -> int:
    wave = read_wav(args.input)
    analysis = analyze_reference(wave, config.lpc_config())
    with open_output(args.out) as stream:
        ReportWriter(stream).write_lpc(analysis)
    logger.info(f"Analyzed {len(analysis)} frames at order {analysis.config.order}")
    return 0


def cmd_detect(args: argparse.Namespace, config: Config) -> int:
    reference = read_wav(args.ref)
    candidate = read_wav(args.cand, expected_rate=reference.sample_rate_hz)
    detector = CollapseDetector(config.envelope_params(), config.seg_len, config.threshold)
    report = detector.detect(candidate, reference)
    with open_output(args.out) as stream:
        ReportWriter(stream).write_json(report.to_dict())
    print(detector.format_summary(report), file=sys.stderr)
    return 0


def _build_generator(args: argparse.Namespace, config: Config, ref):
    if args.generator == "toy":
        gen = ToyCellGenerator.from_seed(
            config.seed, config.receptive_field, config.conditioning_dim, config.hidden_dim
        )
    else:
        gen = ReferenceTrackingGenerator(ref, receptive_field=config.receptive_field)

    if args.inject == "none":
        return gen
    start = args.inject_at if args.inject_at is not None else config.seg_len + 200
    plan = CollapsePlan(
        kind=CollapseKind(args.inject),
        region=SegmentSpec(start, args.inject_len),
        amplitude_factor=args.amplitude_factor,
        impulse_count=args.impulses,
    )
    plan.region.check_within(len(ref))
    logger.info(f"Injecting {plan.kind.value} at [{plan.region.start}, {plan.region.end})")
    return CollapseInjector(gen, plan, peak=ref.peak, seed=config.seed)


def cmd_regen_sim(args: argparse.Namespace, config: Config) -> int:
    ref = read_wav(args.ref, expected_rate=config.sample_rate_hz)
    analysis = analyze_reference(ref, config.lpc_config())
    gen = _build_generator(args, config, ref)

    start = time.time()
    wave, report = generate_with_guard(
        total_len=len(ref),
        seg_len=config.seg_len,
        ref=ref,
        analysis=analysis,
        params=config.envelope_params(),
        threshold=config.threshold,
        schedule=config.schedule(),
        gen=gen,
        seed=config.seed,
        mask_floor=config.mask_floor,
        sigma_floor=config.sigma_floor,
    )
    write_wav(args.out, wave)

    if args.raw_out:
        raw = generate_unguarded(len(ref), config.seg_len, gen, gen.initial_state(config.seed),
                                 ref.sample_rate_hz)
        write_wav(args.raw_out, raw)

    payload = {
        **report.to_dict(),
        "generator": gen.name,
        "seed": config.seed,
        "rho_schedule": list(config.rho_schedule),
    }
    with open_output(args.report) as stream:
        ReportWriter(stream).write_json(payload)

    detector = CollapseDetector(config.envelope_params(), config.seg_len, config.threshold)
    print(detector.format_summary(report), file=sys.stderr)
    logger.info(f"Generated {len(wave)} samples in {time.time() - start:.2f}s")
    return 0


def cmd_synth_corpus(args: argparse.Namespace, config: Config) -> int:
    corpus = synth_corpus(args.n, args.fraction, config.seed, seg_len=config.seg_len,
                          sample_rate_hz=config.sample_rate_hz, perturb_db=config.perturb_db,
                          jobs=config.jobs)
    write_corpus(corpus, args.out)
    return 0


def _corpus_for(args: argparse.Namespace, config: Config):
    if args.corpus:
        return load_corpus(args.corpus, seg_len=config.seg_len)
    return synth_corpus(args.n, args.fraction, config.seed, seg_len=config.seg_len,
                        sample_rate_hz=config.sample_rate_hz, perturb_db=config.perturb_db,
                        jobs=config.jobs)


def _parse_grid(text: Optional[str], config: Config):
    if text is None:
        return config.grid_points
    if text == "exact":
        return None
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"--grid must be an integer or 'exact', got {text!r}")


def _det_curve(args: argparse.Namespace, config: Config):
    corpus = _corpus_for(args, config)
    kind = None if args.type == "all" else CollapseKind(args.type)
    return evaluate_det(corpus, statistic_for(args.stat, config.envelope_params()), level=args.level,
                        grid=_parse_grid(args.grid, config), kind=kind, jobs=config.jobs)


def cmd_eval_det(args: argparse.Namespace, config: Config) -> int:
    curve = _det_curve(args, config)
    with open_output(args.out) as stream:
        ReportWriter(stream).write_det(curve)
    print(f"EER {curve.eer:.2%} at threshold {curve.eer_threshold:.6g} "
          f"({curve.n_collapsed} collapsed / {curve.n_clean} clean items, "
          f"{curve.flagged_rate:.1%} flagged)", file=sys.stderr)
    return 0


def cmd_calibrate(args: argparse.Namespace, config: Config) -> int:
    curve = _det_curve(args, config)
    payload = {
        "statistic": args.stat,
        "level": args.level,
        "type": args.type,
        "threshold": curve.eer_threshold,
        "eer": curve.eer,
        "fa_rate": curve.eer_fa_rate,
        "fr_rate": curve.eer_fr_rate,
        "flagged_rate": curve.flagged_rate,
    }
    with open_output(args.out) as stream:
        ReportWriter(stream).write_json(payload)
    if args.write_config:
        write_config(config.with_overrides(threshold=curve.eer_threshold), args.write_config)
        logger.info(f"Wrote calibrated config to {args.write_config}")
    return 0


COMMANDS = {
    "mulaw": cmd_mulaw,
    "envelope": cmd_envelope,
    "lpc": cmd_lpc,
    "detect": cmd_detect,
    "regen-sim": cmd_regen_sim,
    "synth-corpus": cmd_synth_corpus,
    "eval-det": cmd_eval_det,
    "calibrate": cmd_calibrate,
}


def _add_corpus_options(p: argparse.ArgumentParser):
    p.add_argument("--corpus", help="Corpus directory written by synth-corpus (default: synthesize in memory)")
    p.add_argument("--n", type=int, default=200, help="Utterances to synthesize without --corpus")
    p.add_argument("--fraction", type=float, default=0.3, help="Collapsed share when synthesizing")
    p.add_argument("--level", choices=Level.ALL, default=Level.SEGMENT)
    p.add_argument("--stat", choices=STATISTIC_NAMES, default="env")
    p.add_argument("--type", choices=["all", "typeI", "typeII"], default="all")
    p.add_argument("--seg-len", type=int)
    p.add_argument("--grid", help=f"Threshold points (default {DEFAULT_GRID_POINTS}) or 'exact'")
    p.add_argument("--out", help="Output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON config file (default: built-in defaults)")
    common.add_argument("--seed", type=int, help="RNG seed")
    common.add_argument("--jobs", type=int, help="Worker threads for corpus work")
    common.add_argument("--log-file", help="Also write logs to this file")
    common.add_argument("-v", "--verbose", action="store_true", help="Enable verbose logging")

    parser = argparse.ArgumentParser(
        prog="wavguard",
        description="wavguard - collapsed segment detection and suppression",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    wavguard detect --cand gen.wav --ref ref.wav
    wavguard regen-sim --ref ref.wav --out out.wav --inject typeI
    wavguard synth-corpus --out corpus --seed 7
    wavguard eval-det --corpus corpus --stat maxpow --level utterance --type typeII
        """
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("mulaw", parents=[common], help="mu-law codes of a WAV file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--csv", help="CSV output (default stdout)")
    p.add_argument("--out", help="Write the roundtripped waveform here")

    p = sub.add_parser("envelope", parents=[common], help="Envelope of a WAV file span")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--length", type=int)
    p.add_argument("--peak-window", type=int)
    p.add_argument("--cutoff", type=float, help="Low-pass cutoff in Hz")
    p.add_argument("--rectify", action="store_true", help="Absolute value instead of Hilbert magnitude")
    p.add_argument("--out", help="CSV output (default stdout)")

    p = sub.add_parser("lpc", parents=[common], help="Frame-wise LPC of a reference")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--order", type=int)
    p.add_argument("--frame-len", type=int)
    p.add_argument("--frame-shift", type=int)
    p.add_argument("--out", help="CSV output (default stdout)")

    p = sub.add_parser("detect", parents=[common], help="Detect collapsed segments")
    p.add_argument("--cand", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--seg-len", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--stat", choices=["env", "env-abs"])
    p.add_argument("--out", help="JSON output (default stdout)")

    p = sub.add_parser("regen-sim", parents=[common], help="Guarded generation against a reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--out", required=True, help="Guarded waveform")
    p.add_argument("--raw-out", help="Also write the unguarded generation")
    p.add_argument("--report", help="JSON report (default stdout)")
    p.add_argument("--seg-len", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--rho", type=_rho_schedule, help="Comma-separated control factors, e.g. 0.01,0.1,1")
    p.add_argument("--generator", choices=["tracking", "toy"], default="tracking")
    p.add_argument("--inject", choices=["none", "typeI", "typeII"], default="none")
    p.add_argument("--inject-at", type=int, help="Region start (default: 200 samples into segment 2)")
    p.add_argument("--inject-len", type=int, default=1500)
    p.add_argument("--amplitude-factor", type=float, default=3.0)
    p.add_argument("--impulses", type=int, default=5)

    p = sub.add_parser("synth-corpus", parents=[common], help="Write a labelled synthetic corpus")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--fraction", type=float, default=0.3)
    p.add_argument("--seg-len", type=int)

    p = sub.add_parser("eval-det", parents=[common], help="DET sweep and EER")
    _add_corpus_options(p)

    p = sub.add_parser("calibrate", parents=[common], help="Pick the EER operating threshold")
    _add_corpus_options(p)
    p.add_argument("--write-config", help="Write a JSON config with the calibrated threshold")

    return parser


def run(argv: Optional[list[str]] = None) -> int:
    """Execute one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    handler = _configure_logging(args.verbose, args.log_file)
    try:
        config = _resolve_config(args)
        return COMMANDS[args.command](args, config)
    except (ValueError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
    finally:
        if handler is not None:
            logging.getLogger().removeHandler(handler)
            handler.close()


def main():
    """CLI entry point."""
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
