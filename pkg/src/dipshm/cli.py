"""Command-line interface.

Subcommands: generate (synthesize a labeled dataset), pipeline (run the
identification pipeline over a dataset file), export-spectrogram (write
portable-pixmap images of one record's spectrogram), verify (run the
built-in oracle suite). Exit codes: 0 success, 1 validation error,
2 runtime or numeric error.

--threads 1 pins every BLAS pool to a single thread, which makes reports
and model files bit-exact across reruns.
"""

from __future__ import annotations

import argparse
import contextlib
import sys

import numpy as np
from threadpoolctl import threadpool_limits

from . import pipeline, synth, verify
from .config import default_config, load_config
from .containers import read_dataset, write_dataset
from .errors import DipError
from .images import export_spectrogram_images
from .preprocess import FilterSpec, apply_zero_phase, design_lowpass, standardize
from .errors import DegenerateSignalError


def _load_run_config(args):
    if getattr(args, "config", None):
        cfg = load_config(args.config, case=getattr(args, "case", None))
    else:
        cfg = default_config(getattr(args, "case", None) or "deterioration")
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _thread_context(threads):
    if threads is None:
        return contextlib.nullcontext()
    return threadpool_limits(limits=threads)


def cmd_generate(args) -> int:
    cfg = _load_run_config(args)
    s = cfg.synth
    excitation = synth.AmbientExcitation(bandwidth_fraction=s.excitation_bandwidth,
                                         snr_db=s.snr_db)
    if s.case == "damage":
        model = synth.desk_model(s.fundamental_hz, s.story_mass_kg, s.damping_ratio)
        specs = synth.damage_class_specs(model, s.records_per_class,
                                         s.column_reduction, s.added_mass_kg)
    else:
        model = synth.desk_model(s.fundamental_hz, s.story_mass_kg, s.damping_ratio)
        specs = synth.deterioration_class_specs(model, s.records_per_class,
                                                s.adr_per_year, s.state_years)
    dataset = synth.generate_dataset(specs, s.sampling_rate_hz, s.seed,
                                     excitation=excitation,
                                     settle_samples=s.settle_samples)
    write_dataset(args.out, dataset)
    print(f"wrote {len(dataset)} records ({s.case}) to {args.out}")
    print("label histogram:")
    for label, count in sorted(dataset.class_histogram().items()):
        print(f"  label {label}: {count}")
    return 0


def cmd_pipeline(args) -> int:
    cfg = _load_run_config(args)
    dataset = read_dataset(args.dataset)
    with _thread_context(args.threads):
        summary = pipeline.run_pipeline(dataset, cfg, args.out,
                                        dataset_path=args.dataset, stage=args.stage)
    print(f"stage '{summary['stage']}' complete; report at {summary['report_txt']}")
    for name, value in summary["tasks"].items():
        print(f"  {name}: {value:.4f}")
    return 0


def cmd_export_spectrogram(args) -> int:
    cfg = _load_run_config(args)
    dataset = read_dataset(args.dataset)
    where = np.where(dataset.record_ids == args.record)[0]
    if len(where) == 0:
        raise DipError(f"record id {args.record} not found") from None
    signal = dataset.data[int(where[0])]

    sos = design_lowpass(FilterSpec(order=cfg.dsp.filter_order,
                                    passband_ripple_db=cfg.dsp.passband_ripple_db,
                                    cutoff_hz=cfg.dsp.cutoff_hz),
                         dataset.sampling_rate_hz)
    filtered = apply_zero_phase(sos, signal, order=cfg.dsp.filter_order)
    try:
        prepped = standardize(filtered)
    except DegenerateSignalError:
        prepped = filtered          # zero records export as all-black images
    spec = pipeline.record_spectrogram(prepped, dataset.sampling_rate_hz, cfg)
    paths = export_spectrogram_images(spec, args.out_prefix)
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_verify(args) -> int:
    results = verify.run_all()
    mismatches = verify.recheck_reference_tables()
    print(verify.format_results(results, mismatches))
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dip",
        description="Deterioration and damage identification from building vibrations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="synthesize a labeled dataset file")
    gen.add_argument("--config", help="run configuration file")
    gen.add_argument("--case", choices=("deterioration", "damage"))
    gen.add_argument("--seed", type=int, help="override every configured seed")
    gen.add_argument("--out", required=True, help="output dataset path (.dipd)")
    gen.set_defaults(func=cmd_generate)

    pipe = sub.add_parser("pipeline", help="run the identification pipeline")
    pipe.add_argument("--dataset", required=True, help="input dataset (.dipd)")
    pipe.add_argument("--config", help="run configuration file")
    pipe.add_argument("--case", choices=("deterioration", "damage"))
    pipe.add_argument("--seed", type=int, help="override every configured seed")
    pipe.add_argument("--threads", type=int, default=None,
                      help="BLAS thread cap (1 = bit-exact mode)")
    pipe.add_argument("--stage", choices=pipeline.STAGES, default="full")
    pipe.add_argument("--out", required=True, help="output directory")
    pipe.set_defaults(func=cmd_pipeline)

    exp = sub.add_parser("export-spectrogram",
                         help="write PGM/PPM images of one record's spectrogram")
    exp.add_argument("--dataset", required=True)
    exp.add_argument("--config", help="run configuration file")
    exp.add_argument("--record", type=int, required=True, help="record id")
    exp.add_argument("--out-prefix", required=True)
    exp.set_defaults(func=cmd_export_spectrogram)

    ver = sub.add_parser("verify", help="run the built-in oracle self-tests")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DipError as exc:
        if isinstance(exc, ValueError):
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
