"""Command-line driver for search, apply, metrics, bdrate and degrade runs.

Exit codes: 0 success, 2 bad input (missing file, geometry mismatch),
3 unwritable output, 4 parse error (.ccso or CSV). Every command accepts
--manifest PATH to record a replayable description of the run; `ccso
replay manifest.json` re-executes it bit-identically.

Quality reports are one line per frame of space-separated key=value pairs,
identical on stdout and in --report/--out files:

    frame=0 psnr_y=41.234567 psnr_cb=43.123456 psnr_cr=42.000000 psnr_ycbcr=41.468364

PSNR values carry six decimals; a zero-MSE plane prints "lossless". The
search report prefixes the keys with pre_/post_ for the unfiltered and
filtered reconstruction. RD-point CSV files for bdrate need a header row
with columns bitrate_kbps, psnr_y, psnr_cb, psnr_cr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys

from . import __version__
from .frame import Plane, read_frames, write_frames
from .metrics import QualityReport, RdPoint, bd_rate, degrade, format_value, psnr_report
from .pipeline import apply_frame_params
from .search import RdConfig, SweepOptions, search_frame
from .syntax import ParseError, read_params_file, write_params_file

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_OUTPUT = 3
EXIT_PARSE = 4

_PLANE_NAMES = {"y": Plane.Y, "cb": Plane.CB, "cr": Plane.CR}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclasses.dataclass
class RunManifest:
    """Replayable record of one command invocation."""

    tool: str
    version: str
    command: str
    options: dict

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "RunManifest":
        data = json.loads(text)
        return RunManifest(
            tool=data["tool"],
            version=data["version"],
            command=data["command"],
            options=data["options"],
        )


def _geometry_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--width", type=int, required=True, help="luma width in samples")
    parser.add_argument("--height", type=int, required=True, help="luma height in samples")
    parser.add_argument("--bit-depth", type=int, default=8, choices=(8, 10))


def _load_frames(path: str, args, what: str) -> list[Frame]:
    try:
        return read_frames(path, args.width, args.height, args.bit_depth)
    except FileNotFoundError:
        raise CliError(EXIT_INPUT, f"{what}: no such file: {path}")
    except ValueError as e:
        raise CliError(EXIT_INPUT, f"{what}: {e}")


def _write_output(path: str, writer, what: str = "output") -> None:
    try:
        writer(path)
    except OSError as e:
        raise CliError(EXIT_OUTPUT, f"{what}: cannot write {path}: {e}")


def _write_text(path: str, text: str) -> None:
    with open(path, "w") as f:
        f.write(text)


def _parse_planes(text: str) -> tuple[Plane, ...]:
    planes = []
    for token in text.split(","):
        token = token.strip().lower()
        if token not in _PLANE_NAMES:
            raise CliError(EXIT_INPUT, f"unknown plane '{token}' (expected y,cb,cr)")
        planes.append(_PLANE_NAMES[token])
    return tuple(planes)


def _metrics_line(tag: str, frame_idx: int, report: QualityReport, prefix: str = "") -> str:
    fields = [f"{tag}={frame_idx}"]
    for plane in Plane:
        fields.append(f"{prefix}psnr_{plane.name.lower()}={format_value(report.psnr[plane])}")
    fields.append(f"{prefix}psnr_ycbcr={format_value(report.weighted_psnr)}")
    return " ".join(fields)


def cmd_search(args) -> int:
    orig_frames = _load_frames(args.orig, args, "--orig")
    recon_frames = _load_frames(args.recon, args, "--recon")
    if len(orig_frames) != len(recon_frames):
        raise CliError(
            EXIT_INPUT,
            f"frame count mismatch: {len(orig_frames)} original vs "
            f"{len(recon_frames)} reconstructed",
        )
    classify_frames = recon_frames
    if args.classify:
        classify_frames = _load_frames(args.classify, args, "--classify")
        if len(classify_frames) != len(recon_frames):
            raise CliError(EXIT_INPUT, "classification frame count mismatch")

    planes = _parse_planes(args.planes)
    rd = RdConfig(lam=args.rd_lambda)
    sweep = SweepOptions(bo_only_modes=(True,)) if args.bo_only else SweepOptions()

    report_lines = []
    all_params = []
    for i, (orig, recon, clf) in enumerate(zip(orig_frames, recon_frames, classify_frames)):
        result = search_frame(orig, recon, clf, planes=planes, rd=rd, sweep=sweep)
        all_params.append(result.params)
        filtered = apply_frame_params(result.params, recon, clf)
        pre = psnr_report(orig, recon)
        post = psnr_report(orig, filtered)
        report_lines.append(_metrics_line("frame", i, pre, prefix="pre_"))
        report_lines.append(_metrics_line("frame", i, post, prefix="post_"))

    _write_output(
        args.out_params,
        lambda p: write_params_file(p, args.width, args.height, args.bit_depth, all_params),
        "--out-params",
    )
    for line in report_lines:
        print(line)
    if args.report:
        _write_output(
            args.report,
            lambda p: _write_text(p, "\n".join(report_lines) + "\n"),
            "--report",
        )
    return EXIT_OK


def cmd_apply(args) -> int:
    try:
        width, height, bit_depth, records = read_params_file(args.params)
    except FileNotFoundError:
        raise CliError(EXIT_INPUT, f"--params: no such file: {args.params}")
    except ParseError as e:
        raise CliError(EXIT_PARSE, f"--params: {e}")
    if (width, height, bit_depth) != (args.width, args.height, args.bit_depth):
        raise CliError(
            EXIT_INPUT,
            f"geometry mismatch: params file is {width}x{height}@{bit_depth}, "
            f"flags say {args.width}x{args.height}@{args.bit_depth}",
        )
    recon_frames = _load_frames(args.recon, args, "--recon")
    classify_frames = recon_frames
    if args.classify:
        classify_frames = _load_frames(args.classify, args, "--classify")
        if len(classify_frames) != len(recon_frames):
            raise CliError(EXIT_INPUT, "classification frame count mismatch")
    by_index = dict(records)
    out = []
    for i, (recon, clf) in enumerate(zip(recon_frames, classify_frames)):
        params = by_index.get(i)
        if params is None:
            raise CliError(EXIT_INPUT, f"params file holds no record for frame {i}")
        out.append(apply_frame_params(params, recon, clf))
    _write_output(args.out, lambda p: write_frames(p, out), "--out")
    return EXIT_OK


def cmd_metrics(args) -> int:
    orig_frames = _load_frames(args.orig, args, "--orig")
    test_frames = _load_frames(args.test, args, "--test")
    if len(orig_frames) != len(test_frames):
        raise CliError(EXIT_INPUT, "frame count mismatch between --orig and --test")
    lines = [
        _metrics_line("frame", i, psnr_report(o, t))
        for i, (o, t) in enumerate(zip(orig_frames, test_frames))
    ]
    for line in lines:
        print(line)
    if args.out:
        _write_output(
            args.out, lambda p: _write_text(p, "\n".join(lines) + "\n"), "--out"
        )
    return EXIT_OK


def _read_rd_csv(path: str) -> list[RdPoint]:
    points = []
    try:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            required = {"bitrate_kbps", "psnr_y", "psnr_cb", "psnr_cr"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise CliError(
                    EXIT_PARSE,
                    f"{path}: CSV must have columns bitrate_kbps, psnr_y, psnr_cb, psnr_cr",
                )
            for row in reader:
                try:
                    points.append(RdPoint(
                        float(row["bitrate_kbps"]), float(row["psnr_y"]),
                        float(row["psnr_cb"]), float(row["psnr_cr"]),
                    ))
                except (TypeError, ValueError):
                    raise CliError(EXIT_PARSE, f"{path}: non-numeric CSV row: {row}")
    except FileNotFoundError:
        raise CliError(EXIT_INPUT, f"no such file: {path}")
    return points


def cmd_bdrate(args) -> int:
    anchor = _read_rd_csv(args.anchor_csv)
    test = _read_rd_csv(args.test_csv)
    selectors = {
        "y": lambda p: p.psnr_y,
        "cb": lambda p: p.psnr_cb,
        "cr": lambda p: p.psnr_cr,
        "ycbcr": lambda p: p.weighted_psnr,
    }
    results = {}
    for key, quality in selectors.items():
        a = [(p.bitrate_kbps, quality(p)) for p in anchor]
        t = [(p.bitrate_kbps, quality(p)) for p in test]
        try:
            results[key] = bd_rate(a, t)
        except ValueError as e:
            raise CliError(EXIT_PARSE, f"{key} curve: {e}")
    for key in ("y", "cb", "cr"):
        print(f"BD-rate ({key}): {results[key]:.4f}%")
    print(f"BD-rate: {results['ycbcr']:.2f}%")
    return EXIT_OK


def cmd_degrade(args) -> int:
    frames = _load_frames(args.input, args, "--in")
    try:
        out = [degrade(f, args.profile, seed=args.seed) for f in frames]
    except ValueError as e:
        raise CliError(EXIT_INPUT, f"--profile: {e}")
    _write_output(args.out, lambda p: write_frames(p, out), "--out")
    return EXIT_OK


# argparse dest -> flag spelling, where they differ.
_FLAG_NAMES = {"rd_lambda": "lambda", "input": "in"}


def cmd_replay(args) -> int:
    try:
        with open(args.manifest) as f:
            manifest = RunManifest.from_json(f.read())
    except FileNotFoundError:
        raise CliError(EXIT_INPUT, f"no such manifest: {args.manifest}")
    except (json.JSONDecodeError, KeyError) as e:
        raise CliError(EXIT_PARSE, f"bad manifest {args.manifest}: {e}")
    argv = [manifest.command]
    for key, value in manifest.options.items():
        if value is None or value is False:
            continue
        flag = "--" + key.replace("_", "-")
        if value is True:
            argv.append(flag)
        else:
            argv.extend([flag, str(value)])
    return main(argv)


def _manifest_options(args) -> dict:
    skip = {"func", "command", "manifest"}
    options = {}
    for key, value in vars(args).items():
        if key in skip:
            continue
        options[_FLAG_NAMES.get(key, key)] = value
    return options


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccso",
        description="Cross-component sample offset filtering on raw YUV 4:2:0 files.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="derive filter parameters for each frame")
    p.add_argument("--orig", required=True, help="original raw YUV file")
    p.add_argument("--recon", required=True, help="reconstructed raw YUV file")
    p.add_argument("--classify", help="classification-source raw YUV (default: --recon)")
    _geometry_args(p)
    p.add_argument("--planes", default="y,cb,cr", help="comma list of planes to search")
    p.add_argument("--lambda", dest="rd_lambda", type=float, default=0.0,
                   help="rate-distortion multiplier (default 0: pure distortion)")
    p.add_argument("--bo-only", action="store_true",
                   help="restrict the sweep to band-only configurations")
    p.add_argument("--out-params", required=True, help="output .ccso parameter file")
    p.add_argument("--report", help="write pre/post PSNR report to this file")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("apply", help="apply a .ccso parameter file to a reconstruction")
    p.add_argument("--recon", required=True)
    p.add_argument("--classify")
    p.add_argument("--params", required=True)
    _geometry_args(p)
    p.add_argument("--out", required=True, help="output raw YUV file")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("metrics", help="PSNR of a test file against an original")
    p.add_argument("--orig", required=True)
    p.add_argument("--test", required=True)
    _geometry_args(p)
    p.add_argument("--out", help="also write the report to this file")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("bdrate", help="BD-rate between two RD-point CSV files")
    p.add_argument("--anchor-csv", required=True)
    p.add_argument("--test-csv", required=True)
    p.set_defaults(func=cmd_bdrate)

    p = sub.add_parser("degrade", help="deterministically degrade a raw YUV file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--profile", required=True,
                   help="e.g. 'bias:cb:3,noise:chroma:4,blockflat:cb'")
    p.add_argument("--seed", type=int, default=0)
    _geometry_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("replay", help="re-run a recorded manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)

    for name, sp in sub.choices.items():
        if name != "replay":
            sp.add_argument("--manifest", help="record a replayable manifest here")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    if code == EXIT_OK and getattr(args, "manifest", None):
        manifest = RunManifest(
            tool="ccso", version=__version__, command=args.command,
            options=_manifest_options(args),
        )
        try:
            with open(args.manifest, "w") as f:
                f.write(manifest.to_json() + "\n")
        except OSError as e:
            print(f"error: cannot write manifest: {e}", file=sys.stderr)
            return EXIT_OUTPUT
    return code


if __name__ == "__main__":
    sys.exit(main())
