"""Command line front end.

Subcommands: analyze, synthesize, inspect-sei, roundtrip, metrics, bench.
Exit codes: 0 success, 2 usage, 3 I/O, 4 validation, 5 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import itertools
import json
import logging
import os
import platform
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .analysis import AnalysisConfig, DenoiseConfig, analyze_sequence
from .bitio import BitstreamError
from .frame_io import FormatError, VideoFormat, _frame_bytes, open_video, read_y4m, write_raw, write_y4m
from .metrics import grain_sigma, psnr
from .patterns import build_database, load_database, save_database
from .sei import (
    FgcParams,
    Interval,
    IntervalModel,
    SeiValidationError,
    decode_sei,
    encode_sei,
    params_to_dict,
    read_sidecar,
    write_sidecar,
)
from .synthesis import SynthesisConfig, blend_frame, synthesize_sequence

log = logging.getLogger("filmgrain")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VALIDATION = 4
EXIT_INTERNAL = 5


def _parse_format(text: str) -> VideoFormat:
    """Parse WxH[:bits][@num:den], e.g. 1920x1080:10@30000:1001."""
    rate = Fraction(25, 1)
    bits = 8
    if "@" in text:
        text, rate_text = text.split("@", 1)
        if ":" in rate_text:
            num, den = rate_text.split(":", 1)
            rate = Fraction(int(num), int(den))
        else:
            rate = Fraction(int(rate_text), 1)
    if ":" in text:
        text, bits_text = text.split(":", 1)
        bits = int(bits_text)
    w, h = text.lower().split("x", 1)
    return VideoFormat(int(w), int(h), bits, rate)


def _load_config(path: str | None) -> dict:
    """key = value lines; # starts a comment; values are parsed as python
    literals when possible, else kept as strings."""
    if not path:
        return {}
    table: dict = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SeiValidationError([f"{path}:{lineno}: expected key = value, got {raw!r}"])
            key, value = (part.strip() for part in line.split("=", 1))
            try:
                table[key] = json.loads(value)
            except json.JSONDecodeError:
                table[key] = value
    return table


def _build_dataclass(cls, table: dict, used: set):
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in table:
            kwargs[f.name] = table[f.name]
            used.add(f.name)
    return cls(**kwargs)


def _configs_from_file(path: str | None) -> tuple[DenoiseConfig, AnalysisConfig]:
    table = _load_config(path)
    used: set = set()
    dcfg = _build_dataclass(DenoiseConfig, table, used)
    acfg = _build_dataclass(AnalysisConfig, table, used)
    unknown = set(table) - used
    if unknown:
        raise SeiValidationError([f"unknown config keys: {', '.join(sorted(unknown))}"])
    return dcfg, acfg


def _open_input(args, permissive: bool = False):
    if not os.path.exists(args.input):
        raise FileNotFoundError(f"input video not found: {args.input}")
    fmt = _parse_format(args.format) if getattr(args, "format", None) else None
    return open_video(args.input, fmt, permissive)


def _database(args):
    if getattr(args, "db_cache", None) and os.path.exists(args.db_cache):
        return load_database(args.db_cache)
    db = build_database(args.db_seed)
    if getattr(args, "db_cache", None):
        save_database(db, args.db_cache)
    return db


def _cmd_analyze(args) -> int:
    dcfg, acfg = _configs_from_file(args.config)
    db = _database(args)
    fmt, frames, handle = _open_input(args, args.permissive)
    try:
        params_list, diagnostics = analyze_sequence(frames, dcfg, acfg, db.sigma_db)
    finally:
        handle.close()
    records = [(i, encode_sei(p)) for i, p in enumerate(params_list)]
    write_sidecar(records, args.output)
    log.info("analyzed %d frames, %d epochs -> %s", len(records), len(diagnostics["epochs"]), args.output)
    if args.diagnostics:
        with open(args.diagnostics, "w", encoding="utf-8") as f:
            json.dump(diagnostics, f, indent=2, default=_json_default)
    return EXIT_OK


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _params_stream_from_sidecar(path):
    records = dict(read_sidecar(path))
    index = 0
    while True:
        payload = records.get(index)
        if payload is None:
            yield None
        else:
            try:
                yield decode_sei(payload)
            except (BitstreamError, SeiValidationError) as exc:
                log.warning("frame %d: SEI decode failed (%s), passing through", index, exc)
                yield None
        index += 1


def _cmd_synthesize(args) -> int:
    db = _database(args)
    cfg = SynthesisConfig(
        master_seed=args.seed,
        deblock_enabled=not args.no_deblock,
        deblock_horizontal=args.deblock_horizontal,
        threads=args.threads,
        use_numba=False if args.no_numba else None,
    )
    fmt, frames, handle = _open_input(args, args.permissive)
    reports = []

    def grained():
        stream = synthesize_sequence(frames, _params_stream_from_sidecar(args.sidecar), db, cfg)
        for frame, report in stream:
            reports.append(report)
            yield frame

    try:
        with open(args.output, "wb") as sink:
            if args.output.lower().endswith(".y4m"):
                write_y4m(fmt, grained(), sink)
            else:
                write_raw(fmt, grained(), sink)
    finally:
        handle.close()
    log.info("synthesized %d frames -> %s", len(reports), args.output)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            json.dump([r.to_dict() for r in reports], f, indent=2)
    return EXIT_OK


def _cmd_inspect(args) -> int:
    records = read_sidecar(args.sidecar)
    rendered = []
    for frame_index, payload in records:
        params = decode_sei(payload)
        rendered.append(
            {"frame_index": frame_index, "payload_bytes": len(payload), **params_to_dict(params)}
        )
    if args.json:
        json.dump(rendered, sys.stdout, indent=2)
        sys.stdout.write("\n")
        return EXIT_OK
    for item in rendered:
        print(f"frame {item['frame_index']}: model {item['film_grain_model_id']}, "
              f"log2_scale_factor {item['log2_scale_factor']}, {item['payload_bytes']} bytes")
        for comp, model in item["components"].items():
            print(f"  {comp}: {len(model['intervals'])} interval(s), "
                  f"{model['num_model_values']} model value(s)")
            for iv in model["intervals"]:
                print(f"    [{iv['lower_bound']:3d}, {iv['upper_bound']:3d}] "
                      f"sf {iv['scaling_factor']:3d} cutoffs ({iv['h_cutoff']}, {iv['v_cutoff']})")
    return EXIT_OK


def _injected_params(args) -> FgcParams:
    model = IntervalModel(
        intervals=(
            Interval(0, 255, args.sf, args.cutoff_h, args.cutoff_v),
        ),
        num_model_values=3,
    )
    return FgcParams(log2_scale_factor=args.l2sf, component_models=(model, None, None))


def _cmd_roundtrip(args) -> int:
    db = _database(args)
    injected = _injected_params(args)
    cfg = SynthesisConfig(master_seed=args.seed, threads=args.threads)
    dcfg, acfg = _configs_from_file(args.config)
    fmt, frames, handle = _open_input(args, args.permissive)
    try:
        grained = (
            frame for frame, _ in synthesize_sequence(frames, itertools.repeat(injected), db, cfg)
        )
        params_list, diagnostics = analyze_sequence(grained, dcfg, acfg, db.sigma_db)
    finally:
        handle.close()
    recovered = params_list[-1] if params_list else None
    rec_model = recovered.model_for(0) if recovered else None
    report: dict = {
        "injected": params_to_dict(injected),
        "recovered": params_to_dict(recovered) if recovered else None,
        "frames": diagnostics["n_frames"],
    }
    if rec_model and args.sf > 0:
        # compare at the injected shift: scaling factors scale by 2^shift_delta
        peak_sf = max(iv.scaling_factor for iv in rec_model.intervals)
        delta = injected.log2_scale_factor - recovered.log2_scale_factor
        normalized = peak_sf * (2.0**delta)
        report["recovered_sf_at_injected_shift"] = normalized
        report["sf_relative_error"] = (normalized - args.sf) / args.sf
        report["cutoff_delta"] = [
            rec_model.intervals[0].h_cutoff - args.cutoff_h,
            rec_model.intervals[0].v_cutoff - args.cutoff_v,
        ]
    elif args.sf == 0:
        report["recovered_sf_at_injected_shift"] = (
            max(iv.scaling_factor for iv in rec_model.intervals) if rec_model else 0
        )
    out = json.dumps(report, indent=2, default=_json_default)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(out + "\n")
    else:
        print(out)
    return EXIT_OK


def _cmd_metrics(args) -> int:
    fmt_r, ref_frames, h1 = _open_input_path(args.reference, args.format, args.permissive)
    fmt_t, test_frames, h2 = _open_input_path(args.test, args.format, args.permissive)
    try:
        per_frame = []
        sigma = None
        n = 0
        sums = [0.0, 0.0, 0.0]
        counts = [0, 0, 0]
        for ref, test in zip(ref_frames, test_frames):
            vals = psnr(ref, test)
            per_frame.append(vals)
            for c, v in enumerate(vals):
                if v != float("inf"):
                    sums[c] += v
                    counts[c] += 1
            if sigma is None:
                sigma = grain_sigma(test)
            n += 1
        if n == 0:
            raise FormatError("no overlapping frames to compare")
        # identical frames stay out of the divisor, matching sequence_psnr
        mean = [sums[c] / counts[c] if counts[c] else float("inf") for c in range(3)]
    finally:
        h1.close()
        h2.close()
    def clean(v):
        # JSON has no Infinity; null marks an identical pair
        return None if v == float("inf") else v

    report = {
        "frame_count": n,
        "psnr": {"Y": clean(mean[0]), "Cb": clean(mean[1]), "Cr": clean(mean[2])},
        "grain_sigma_first_test_frame": {
            "Y": sigma[0],
            "Cb": sigma[1],
            "Cr": sigma[2],
        },
    }
    if args.per_frame:
        report["per_frame_psnr"] = [
            {"frame": i, "Y": clean(v[0]), "Cb": clean(v[1]), "Cr": clean(v[2])}
            for i, v in enumerate(per_frame)
        ]
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as f:
            f.write("frame,psnr_y,psnr_cb,psnr_cr\n")
            for i, v in enumerate(per_frame):
                f.write(f"{i},{v[0]},{v[1]},{v[2]}\n")
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def _open_input_path(path, fmt_text, permissive):
    if not os.path.exists(path):
        raise FileNotFoundError(f"input video not found: {path}")
    fmt = _parse_format(fmt_text) if fmt_text else None
    return open_video(path, fmt, permissive)


def bench_run(frames, params_stream, db, threads_list, deblock=True, seed=0, repeats=3):
    """Measure pass-through vs synthesis throughput over an in-memory video.

    Both runs execute the full pipeline: parse the Y4M byte stream, walk
    every frame, serialize it back out. The pass-through run does exactly
    that; the synthesis run inserts grain blending between parse and write.
    Each mode takes the best of `repeats` timings to shed scheduler noise.
    Returns one row per thread count.
    """
    params_list = list(params_stream)
    n = len(frames)
    fmt = frames[0].format
    buf = io.BytesIO()
    write_y4m(fmt, frames, buf)
    data = buf.getvalue()
    # warm the kernels so compilation is not timed
    blend_frame(frames[0], params_list[0] if params_list else None, db,
                SynthesisConfig(master_seed=seed), 0)
    rows = []
    with open(os.devnull, "wb") as devnull:
        for threads in threads_list:
            cfg = SynthesisConfig(master_seed=seed, deblock_enabled=deblock, threads=threads)
            t_pass = min(
                _timed(lambda: _drain_pipeline(data, None, db, cfg, devnull))
                for _ in range(repeats)
            )
            t_enabled = min(
                _timed(lambda: _drain_pipeline(data, params_list, db, cfg, devnull))
                for _ in range(repeats)
            )
            rows.append(
                {
                    "threads": threads,
                    "passthrough_fps": n / t_pass if t_pass > 0 else float("inf"),
                    "enabled_fps": n / t_enabled if t_enabled > 0 else float("inf"),
                    "overhead_pct": (t_enabled - t_pass) / t_pass * 100.0 if t_pass > 0 else None,
                    "ms_per_frame": t_enabled / n * 1000.0,
                }
            )
    return rows


def _timed(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def _drain_pipeline(data: bytes, params_list, db, cfg, sink) -> None:
    _fmt, frame_iter = read_y4m(io.BytesIO(data))
    if params_list is None:
        for frame in frame_iter:
            sink.write(_frame_bytes(frame))
    else:
        for frame, _report in synthesize_sequence(frame_iter, params_list, db, cfg):
            sink.write(_frame_bytes(frame))


def _cmd_bench(args) -> int:
    db = _database(args)
    fmt, frame_iter, handle = _open_input(args, args.permissive)
    try:
        frames = []
        for i, f in enumerate(frame_iter):
            if i >= args.frames:
                break
            frames.append(f)
    finally:
        handle.close()
    if not frames:
        raise FormatError("no frames to benchmark")
    if args.sidecar:
        params_list = [p for _, p in zip(frames, _params_stream_from_sidecar(args.sidecar))]
    else:
        params_list = [_injected_params(args)] * len(frames)
    threads_list = [int(t) for t in args.threads.split(",")]
    rows = bench_run(frames, params_list, db, threads_list, deblock=not args.no_deblock, seed=args.seed)
    report = {
        "machine": f"{platform.machine()} {platform.processor() or 'unknown'} x{os.cpu_count()}",
        "video": f"{fmt.width}x{fmt.height} {fmt.bit_depth}-bit",
        "frames": len(frames),
        "results": rows,
    }
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="filmgrain",
        description="Film grain analysis, parameter coding, and synthesis for raw video.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="increase log detail")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_video_input(p):
        p.add_argument("input", help="input video (.y4m self-describing, otherwise raw planar)")
        p.add_argument("--format", help="raw input format WxH[:bits][@num:den], e.g. 1920x1080:10@24")
        p.add_argument("--permissive", action="store_true", help="mask out-of-range 10-bit samples instead of failing")

    def add_db(p):
        p.add_argument("--db-seed", type=int, default=1234, help="grain database seed (default 1234)")
        p.add_argument("--db-cache", help="database cache file to load or create")

    p = sub.add_parser("analyze", help="estimate grain parameters, write a sidecar")
    add_video_input(p)
    add_db(p)
    p.add_argument("-o", "--output", required=True, help="output sidecar (.fgs)")
    p.add_argument("--config", help="key = value config file for analysis settings")
    p.add_argument("--diagnostics", help="write measurement diagnostics JSON here")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("synthesize", help="blend grain from a sidecar onto video")
    add_video_input(p)
    add_db(p)
    p.add_argument("--sidecar", required=True, help="input sidecar (.fgs)")
    p.add_argument("-o", "--output", required=True, help="output video (.y4m or raw)")
    p.add_argument("--seed", type=int, default=0, help="master synthesis seed")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--no-deblock", action="store_true", help="skip grain seam smoothing")
    p.add_argument("--deblock-horizontal", action="store_true", help="also smooth horizontal seams")
    p.add_argument("--no-numba", action="store_true", help="force the numpy path")
    p.add_argument("--report", help="write per-frame blend reports JSON here")
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser("inspect-sei", help="print a sidecar's parameter sets")
    p.add_argument("sidecar")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("roundtrip", help="inject known grain, analyze it back, report recovery")
    add_video_input(p)
    add_db(p)
    p.add_argument("--sf", type=int, default=40, help="injected scaling factor")
    p.add_argument("--cutoff-h", type=int, default=8)
    p.add_argument("--cutoff-v", type=int, default=8)
    p.add_argument("--l2sf", type=int, default=3, help="injected log2 scale factor")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--config", help="analysis config file")
    p.add_argument("-o", "--output", help="write the JSON report here instead of stdout")
    p.set_defaults(func=_cmd_roundtrip)

    p = sub.add_parser("metrics", help="PSNR and grain sigma between two videos")
    p.add_argument("reference")
    p.add_argument("test")
    p.add_argument("--format", help="raw format for headerless inputs")
    p.add_argument("--permissive", action="store_true")
    p.add_argument("--per-frame", action="store_true", help="include per-frame PSNR in the JSON")
    p.add_argument("--csv", help="also write per-frame PSNR as CSV here")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("bench", help="throughput with and without synthesis")
    add_video_input(p)
    add_db(p)
    p.add_argument("--sidecar", help="sidecar to apply; defaults to a synthetic single interval")
    p.add_argument("--frames", type=int, default=30, help="frames to load for timing")
    p.add_argument("--threads", default="1", help="comma-separated thread counts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sf", type=int, default=64, help="synthetic interval scaling factor")
    p.add_argument("--cutoff-h", type=int, default=8)
    p.add_argument("--cutoff-v", type=int, default=8)
    p.add_argument("--l2sf", type=int, default=5)
    p.add_argument("--no-deblock", action="store_true")
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SeiValidationError, BitstreamError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # pragma: no cover - defensive
        logging.getLogger("filmgrain").exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
