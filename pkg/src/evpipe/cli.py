"""``evpipe`` command line: convert, encode, build, bench, score, synth.

Exit codes: 0 success, 1 data error, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import baseline
from .config import ConfigError, load_run_config
from .dataset import DatasetError, build_splits, iter_split
from .encoders import ENCODERS, EncodingParams, encode_sequence, write_sequence_archive
from .events import ParameterError, SensorGeometry, TimeWindow
from .ingest import (CLASS_NAMES, EventFormatError, ManifestError, load_manifest, parse_events, read_events,
                     write_events)
from .metrics import (MetricsError, compute_metrics, confusion_from_pairs, format_predictions,
                      parse_predictions, render_report, reports_to_json)

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2
MODELS = ("nearest-centroid",)

log = logging.getLogger("evpipe")


def _geometry(text: str) -> SensorGeometry:
    try:
        return SensorGeometry.parse(text)
    except ParameterError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _window(text: str) -> TimeWindow:
    try:
        start, end = (int(v) for v in text.split(":"))
        return TimeWindow(start, end)
    except (ValueError, ParameterError):
        raise argparse.ArgumentTypeError(f"invalid window {text!r}, expected START:END in microseconds")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        v = 0
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _fail(msg: str, code: int = EXIT_DATA) -> int:
    print(f"evpipe: error: {msg}", file=sys.stderr)
    return code


def cmd_convert(args) -> int:
    try:
        data = Path(args.input).read_bytes()
    except OSError as exc:
        return _fail(f"cannot read {args.input}: {exc.strerror or exc}")
    try:
        stream = parse_events(data, args.geometry, args.from_fmt, sort=args.sort, source=args.input)
        out = write_events(stream, args.to_fmt)
    except (EventFormatError, ValueError) as exc:
        return _fail(str(exc))
    if args.output in (None, "-"):
        sys.stdout.buffer.write(out)
        sys.stdout.flush()
    else:
        Path(args.output).write_bytes(out)
    return EXIT_OK


def cmd_encode(args) -> int:
    try:
        stream = read_events(args.recording, args.geometry, sort=args.sort)
    except OSError as exc:
        return _fail(f"cannot read {args.recording}: {exc.strerror or exc}")
    except EventFormatError as exc:
        return _fail(str(exc))
    params = EncodingParams(args.encoder, args.fps, args.geometry, args.polarity)
    span = args.window or stream.time_range()
    frames = encode_sequence(stream, params, span)
    write_sequence_archive(args.out, frames, params, span)
    print(f"wrote {len(frames)} frames to {args.out}")
    return EXIT_OK


def _print_summary(summary) -> None:
    for split in ("train", "validation", "test"):
        counts = summary.counts.get(split, {})
        print(f"{split}: {sum(counts.values())}")
        for name in sorted(counts):
            print(f"  {name}: {counts[name]}")


def cmd_build(args) -> int:
    try:
        cfg = load_run_config(args.config)
    except ConfigError as exc:
        return _fail(str(exc), EXIT_USAGE)
    try:
        entries = load_manifest(cfg.manifest.read_bytes())
        summary = build_splits(entries, cfg.encoder, cfg.sampler, cfg.augment,
                               out_dir=cfg.output_dir, root=cfg.manifest.parent)
    except ManifestError as exc:
        return _fail(f"{cfg.manifest}: {exc}")
    except (DatasetError, ParameterError) as exc:
        return _fail(str(exc))
    _print_summary(summary)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.model not in MODELS:
        return _fail(f"unknown model {args.model!r}, expected one of {MODELS}", EXIT_USAGE)
    try:
        cfg = load_run_config(args.config)
    except ConfigError as exc:
        return _fail(str(exc), EXIT_USAGE)
    train = [(baseline.featurize(c), c.label) for c in iter_split(cfg.output_dir, "train")]
    test = [(baseline.featurize(c), c.label) for c in iter_split(cfg.output_dir, "test")]
    if not train or not test:
        missing = "train" if not train else "test"
        return _fail(f"missing split {missing!r} under {cfg.output_dir}; run 'evpipe build' first")

    model = baseline.fit(train)
    pairs = [(label.id, baseline.predict(model, feat).id) for feat, label in test]
    reports = {args.model: compute_metrics(confusion_from_pairs(pairs))}
    for spec in args.external or ():
        name, _, path = spec.partition("=")
        try:
            reports[name] = compute_metrics(confusion_from_pairs(parse_predictions(Path(path).read_text())))
        except OSError as exc:
            return _fail(f"cannot read {path}: {exc.strerror or exc}")
        except MetricsError as exc:
            return _fail(f"{path}: {exc}")

    bench_dir = cfg.output_dir / "bench"
    bench_dir.mkdir(parents=True, exist_ok=True)
    (bench_dir / "model.json").write_text(model.to_json())
    (bench_dir / "predictions.txt").write_text(format_predictions(pairs))
    (bench_dir / "metrics.json").write_text(reports_to_json(reports))
    sys.stdout.write(render_report(reports))
    return EXIT_OK


def cmd_score(args) -> int:
    try:
        text = Path(args.predictions).read_text()
    except OSError as exc:
        return _fail(f"cannot read {args.predictions}: {exc.strerror or exc}")
    try:
        report = compute_metrics(confusion_from_pairs(parse_predictions(text)))
    except MetricsError as exc:
        return _fail(f"{args.predictions}: {exc}")
    name = args.name or Path(args.predictions).stem
    if args.json:
        Path(args.json).write_text(reports_to_json({name: report}))
    sys.stdout.write(render_report({name: report}))
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synthetic import write_corpus, write_run_config

    unknown = [c for c in args.classes if c not in CLASS_NAMES]
    if unknown:
        return _fail(f"unknown class(es): {', '.join(unknown)}", EXIT_USAGE)
    patterns = dict(p.split("=", 1) for p in args.pattern or ())
    out = Path(args.out)
    manifest = write_corpus(out, args.classes, {"train": args.train, "validation": args.validation,
                                                "test": args.test},
                            geometry=args.geometry, seed=args.seed, patterns=patterns)
    cfg = write_run_config(out / "config.json", manifest.name, "build", geometry=args.geometry,
                           seed=args.seed, encoder=args.encoder)
    print(f"wrote {manifest} and {cfg}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="evpipe", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="transcode event files between text and binary")
    p.add_argument("input")
    p.add_argument("--from", dest="from_fmt", choices=("text", "binary"),
                   help="input format (default: detect from magic bytes)")
    p.add_argument("--to", dest="to_fmt", choices=("text", "binary"), required=True)
    p.add_argument("--geometry", type=_geometry, default=SensorGeometry())
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    p.add_argument("--sort", action="store_true", help="stably sort unsorted input instead of failing")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("encode", help="encode a recording into a PGM frame sequence")
    p.add_argument("recording")
    p.add_argument("--encoder", choices=ENCODERS, default="frequency")
    p.add_argument("--fps", type=_positive_int, default=25)
    p.add_argument("--window", type=_window, help="START:END in microseconds (default: whole recording)")
    p.add_argument("--geometry", type=_geometry, default=SensorGeometry())
    p.add_argument("--polarity", type=int, choices=(1, -1), help="SAE: only use ON (1) or OFF (-1) events")
    p.add_argument("--sort", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("build", help="build clip archives from a run config")
    p.add_argument("config")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("bench", help="train/evaluate the baseline on a built dataset")
    p.add_argument("config")
    p.add_argument("--model", default="nearest-centroid")
    p.add_argument("--external", action="append", metavar="NAME=PREDICTIONS",
                   help="add a report row scored from an external predictions file")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("score", help="score a 'true predicted' predictions file")
    p.add_argument("predictions")
    p.add_argument("--name", help="model name in the report (default: file stem)")
    p.add_argument("--json", help="also write the report as JSON here")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("synth", help="write a synthetic corpus, manifest and run config")
    p.add_argument("out")
    p.add_argument("--classes", type=lambda s: s.split(","), default=["jumping", "walking"])
    p.add_argument("--pattern", action="append", metavar="CLASS=flicker|bar")
    p.add_argument("--train", type=int, default=6)
    p.add_argument("--validation", type=int, default=0)
    p.add_argument("--test", type=int, default=6)
    p.add_argument("--geometry", type=_geometry, default=SensorGeometry(64, 48))
    p.add_argument("--encoder", choices=ENCODERS, default="frequency")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
