"""Command-line front end: convert, histeq, bench, roundtrip.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 validation or
constraint error, 4 regression failure.  Every command is
deterministic; reports never carry timestamps.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import colorspace, cycle_model, histeq, image_io
from .fabric import FabricError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_CONSTRAINT = 3
EXIT_REGRESSION = 4

REPORT_COLUMNS = [
    "kernel",
    "mode",
    "pixels",
    "ei_invocations",
    "stages",
    "cycles_total",
    "cycles_per_pixel",
    "speedup_vs_scalar",
    "speedup_rounded",
    "multipliers_used",
    "alu_ops_used",
    "iram_bytes_used",
    "buffer_location",
    "profile",
]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="scpsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    convert = sub.add_parser("convert", help="color-space conversion of a PPM image")
    convert.add_argument("--in", dest="infile", required=True)
    convert.add_argument("--out", dest="outfile", required=True)
    convert.add_argument("--to", dest="target", required=True,
                         help="yiq | rgb | cmy | matrix:<file>")
    convert.add_argument("--mode", default="ei5", choices=colorspace.CONVERT_MODES)
    _common_cost_flags(convert)

    heq = sub.add_parser("histeq", help="histogram equalization of a PGM (or PPM) image")
    heq.add_argument("--in", dest="infile", required=True)
    heq.add_argument("--out", dest="outfile", required=True)
    heq.add_argument("--mode", default="isef", choices=histeq.HISTEQ_MODES)
    _common_cost_flags(heq)

    bench = sub.add_parser("bench", help="tabulate the cost model for every mode of a kernel")
    bench.add_argument("--kernel", required=True)
    bench.add_argument("--pixels", type=int, default=None,
                       help="workload size (default: yiq 64000, histeq 16384)")
    _common_cost_flags(bench)

    rt = sub.add_parser("roundtrip", help="forward+reverse conversion error sweep")
    rt.add_argument("--sample", type=int, default=None,
                    help="random subsample size instead of the exhaustive 2^24 sweep")
    rt.add_argument("--seed", type=int, default=0)
    rt.add_argument("--gray-only", action="store_true",
                    help="sweep only the 256 gray triples")
    rt.add_argument("--report", default=None)
    rt.add_argument("--format", default="json", choices=("json", "csv"))
    return parser


def _common_cost_flags(cmd):
    cmd.add_argument("--profile", default="s6000_paper",
                     help="builtin name, SCPSIM_PROFILE_DIR entry, or file path")
    cmd.add_argument("--buffers", default="internal", choices=("internal", "external"))
    cmd.add_argument("--report", default=None)
    cmd.add_argument("--format", default="json", choices=("json", "csv"))


def _load_matrix_file(path: str) -> colorspace.ConversionMatrix:
    """Matrix file: 'name = x', 'row0 = a b c' (thrice), optional offsets."""
    fields = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = (part.strip() for part in line.partition("="))
            fields[key] = value
    try:
        rows = tuple(
            tuple(int(v) for v in fields[f"row{i}"].split()) for i in range(3)
        )
    except KeyError as exc:
        raise ValueError(f"matrix file {path}: missing {exc.args[0]}") from None
    offsets = {}
    for key in ("input_offset", "output_offset"):
        if key in fields:
            offsets[key] = tuple(int(v) for v in fields[key].split())
    return colorspace.ConversionMatrix(
        name=fields.get("name", "custom"), coeffs=rows, **offsets
    )


def _resolve_matrix(target: str) -> colorspace.ConversionMatrix:
    if target == "yiq":
        return colorspace.RGB2YIQ
    if target == "rgb":
        return colorspace.YIQ2RGB
    if target == "cmy":
        return colorspace.RGB2CMY
    if target.startswith("matrix:"):
        return _load_matrix_file(target.split(":", 1)[1])
    raise UsageError(f"--to must be yiq, rgb, cmy, or matrix:<file>, got {target!r}")


def _write_report(path: str, fmt: str, rows: list[dict]):
    if fmt == "json":
        payload = rows[0] if len(rows) == 1 else rows
        text = json.dumps(payload, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
        text = buf.getvalue()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _print_report_line(report: cycle_model.CycleReport):
    d = report.to_dict()
    speed = d["speedup_vs_scalar"]
    speed_txt = "-" if speed is None else f"{float(speed):.2f} (~{d['speedup_rounded']})"
    print(
        f"{d['kernel']}/{d['mode']}: pixels={d['pixels']} cycles={d['cycles_total_exact']} "
        f"cycles/px={float(Fraction(d['cycles_per_pixel_exact'])):.2f} "
        f"speedup={speed_txt} invocations={d['ei_invocations']}"
    )


def _read_image(path: str) -> image_io.ImageBuffer:
    with open(path, "rb") as fh:
        return image_io.read_pnm(fh.read())


def _write_image(path: str, img: image_io.ImageBuffer):
    with open(path, "wb") as fh:
        fh.write(image_io.write_pnm(img))


def cmd_convert(args) -> int:
    matrix = _resolve_matrix(args.target)
    profile = cycle_model.resolve_profile(args.profile) if args.report else None
    img = _read_image(args.infile)
    out, report = colorspace.convert_image(
        img, matrix, args.mode, profile=profile, buffer_location=args.buffers
    )
    _write_image(args.outfile, out)
    if report is not None:
        _print_report_line(report)
        if args.report:
            _write_report(args.report, args.format, [report.to_dict()])
    return EXIT_OK


def cmd_histeq(args) -> int:
    profile = cycle_model.resolve_profile(args.profile) if args.report else None
    img = _read_image(args.infile)
    if img.channels == 3:
        img = image_io.to_gray(img)
    out, report = histeq.histeq_image(
        img, args.mode, profile=profile, buffer_location=args.buffers
    )
    _write_image(args.outfile, out)
    if report is not None:
        _print_report_line(report)
        if args.report:
            _write_report(args.report, args.format, [report.to_dict()])
    return EXIT_OK


_BENCH_DEFAULT_PIXELS = {"yiq": 64000, "histeq": 16384}
_BENCH_MODES = {"yiq": colorspace.CONVERT_MODES, "histeq": histeq.HISTEQ_MODES}


def cmd_bench(args) -> int:
    profile = cycle_model.resolve_profile(args.profile)
    kernel = args.kernel
    if kernel not in _BENCH_MODES:
        raise cycle_model.UnknownKernelConfig(
            f"bench supports kernels {sorted(_BENCH_MODES)}, got {kernel!r}"
        )
    pixels = args.pixels if args.pixels is not None else _BENCH_DEFAULT_PIXELS[kernel]
    rows = []
    header = (
        f"{'mode':<8} {'cycles':>12} {'cycles/px':>10} {'speedup':>8} "
        f"{'(~)':>4} {'invocations':>12} {'mults':>6} {'stages':>6}"
    )
    print(f"kernel={kernel} pixels={pixels} profile={profile.name} buffers={args.buffers}")
    print(header)
    for mode in _BENCH_MODES[kernel]:
        if kernel == "yiq":
            resources, stages = colorspace.kernel_resources(colorspace.RGB2YIQ, mode)
        else:
            resources, stages = histeq.kernel_resources(mode)
        report = cycle_model.estimate(
            kernel, mode, pixels, profile, args.buffers, resources=resources, stages=stages
        )
        d = report.to_dict()
        rows.append(d)
        speed = d["speedup_vs_scalar"]
        print(
            f"{mode:<8} {d['cycles_total_exact']:>12} "
            f"{float(Fraction(d['cycles_per_pixel_exact'])):>10.2f} "
            f"{'-' if speed is None else f'{float(speed):.2f}':>8} "
            f"{'-' if speed is None else d['speedup_rounded']:>4} "
            f"{d['ei_invocations']:>12} {d['multipliers_used']:>6} {d['stages']:>6}"
        )
    if args.report:
        _write_report(args.report, args.format, rows)
    return EXIT_OK


def cmd_roundtrip(args) -> int:
    result = colorspace.roundtrip_sweep(
        sample=args.sample, seed=args.seed, gray_only=args.gray_only
    )
    bound = colorspace.ROUNDTRIP_MAX_ERROR
    print(f"samples swept:        {result.samples}")
    print(f"max channel error:    {result.max_error} (frozen bound {bound})")
    print(f"per-channel maxima:   r={result.per_channel_max[0]} "
          f"g={result.per_channel_max[1]} b={result.per_channel_max[2]}")
    print(f"mean channel error:   {result.mean_error:.6f}")
    print(f"first worst triple:   rgb{result.argmax_rgb}")
    if args.report:
        payload = {
            "samples": result.samples,
            "max_error": result.max_error,
            "per_channel_max": list(result.per_channel_max),
            "mean_error": result.mean_error,
            "argmax_rgb": list(result.argmax_rgb),
            "frozen_bound": bound,
        }
        if args.format == "json":
            with open(args.report, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, indent=2)
                fh.write("\n")
        else:
            with open(args.report, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(sorted(payload))
                writer.writerow([payload[k] for k in sorted(payload)])
    if result.max_error > bound:
        print(f"REGRESSION: max error {result.max_error} exceeds frozen bound {bound}")
        return EXIT_REGRESSION
    return EXIT_OK


_COMMANDS = {
    "convert": cmd_convert,
    "histeq": cmd_histeq,
    "bench": cmd_bench,
    "roundtrip": cmd_roundtrip,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, image_io.PnmError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (
        FabricError,
        image_io.ChannelMismatch,
        cycle_model.UnknownKernelConfig,
        cycle_model.MismatchedWorkload,
        cycle_model.Underdetermined,
        histeq.EmptyImage,
        ValueError,
    ) as exc:
        print(f"constraint error: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT


if __name__ == "__main__":
    sys.exit(main())
