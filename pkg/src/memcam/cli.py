"""Command line entry point: ``memcam <subcommand>``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .bench import BenchConfig, emit_report, frame_name, run_retrieval_bench, run_roundtrip_bench
from .camera import DEFAULT_ASPECT, DEFAULT_FAR, DEFAULT_FOV_H, DEFAULT_NEAR, Intrinsics
from .covisibility import CovisConfig, covisibility, covisibility_oracle
from .errors import MemCamError
from .memory import MemoryStore, SelectionStrategy, apply_context_dropout, select_context
from .metrics import roundtrip_metrics, save_frame
from .oracles import run_compress_checks
from .posefile import (
    PoseRecord,
    camera_from_dict,
    format_re10k,
    load_cameras,
    trajectory_to_json,
)
from .synth_world import SceneSpec, render_ids, ids_to_image, save_ids_png
from .trajectory import roundtrip_trajectory

log = logging.getLogger("memcam")


def _write(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text)


def _camera_arg(inline, path, index, args):
    if inline is not None:
        _, pose, intr = camera_from_dict(json.loads(inline))
        return pose, intr
    if path is None:
        raise SystemExit("give an inline pose or --poses with an index")
    _, pose, intr = load_cameras(path)[index]
    return pose, intr


def _covis_config(args) -> CovisConfig:
    return CovisConfig(n_samples=args.samples, near=args.near, far=args.far, seed=args.seed)


def cmd_trajectory(args):
    traj = roundtrip_trajectory(args.kind, args.segment_len)
    intr = Intrinsics(args.fov, args.aspect)
    if args.format == "re10k":
        text = format_re10k(PoseRecord(float(i), intr, p) for i, p in enumerate(traj.poses))
    else:
        text = trajectory_to_json(traj.poses, intr)
    _write(text, args.output)


def cmd_covis(args):
    c1 = _camera_arg(args.pose1, args.poses, args.i, args)
    c2 = _camera_arg(args.pose2, args.poses, args.j, args)
    res = covisibility(c1, c2, _covis_config(args)).to_dict()
    if args.oracle:
        res["oracle_iou"] = covisibility_oracle(c1, c2, args.oracle, args.near, args.far)
    _write(json.dumps(res), args.output)


def cmd_select(args):
    store = MemoryStore.load(args.memory)
    predicted = load_cameras(args.predicted)
    if args.renumber:
        start = store.last_id + 1
        predicted = [(start + n, p, i) for n, (_, p, i) in enumerate(predicted)]
    a = select_context(
        store,
        predicted,
        args.strategy,
        args.k,
        _covis_config(args),
        rng_seed=args.seed,
        context_stride=args.context_stride,
    )
    if args.dropout:
        a = apply_context_dropout(a, args.dropout, rng_seed=args.seed + 1)
    _write(json.dumps(a.to_dict()), args.output)


def _parse_size(text):
    w, h = text.lower().split("x")
    return int(w), int(h)


def cmd_render(args):
    scene = SceneSpec(palette_seed=args.scene_seed)
    if args.pose is not None:
        _, pose, intr = camera_from_dict(json.loads(args.pose))
        cams = [(0, pose, intr)]
    elif args.trajectory is not None:
        cams = load_cameras(args.trajectory)
    else:
        raise SystemExit("give --pose or --trajectory")
    w, h = _parse_size(args.size)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    for fid, pose, intr in cams:
        ids = render_ids(scene, pose, intr, w, h)
        save_frame(out / frame_name(fid), ids_to_image(scene, ids))
        if args.ids:
            save_ids_png(out / f"ids_{fid:06d}.png", scene, ids)
    log.info("rendered %d frames into %s", len(cams), out)


def _bench_config(args) -> BenchConfig:
    d = {}
    if args.config:
        d = json.loads(Path(args.config).read_text())
    overrides = {
        "benchmark": args.benchmark,
        "segment_len": args.segment_len,
        "k": args.k,
        "context_stride": args.context_stride,
        "dropout": args.dropout,
        "output_dir": args.out,
        "n_jobs": args.jobs,
    }
    if args.strategy:
        overrides["strategies"] = [s for item in args.strategy for s in item.split(",")]
    if args.size:
        overrides["image_size"] = list(_parse_size(args.size))
    d.update({k: v for k, v in overrides.items() if v is not None})
    if args.seed_given:
        d["seed"] = args.seed
    covis = dict(d.get("covis", {}))
    if args.samples is not None:
        covis["n_samples"] = args.samples
    if args.seed_given:
        covis["seed"] = args.seed
    d["covis"] = covis
    return BenchConfig.from_dict(d)


def cmd_bench(args):
    cfg = _bench_config(args)
    out = Path(cfg.output_dir or ".")
    report = run_retrieval_bench(cfg)
    summary = {"benchmark": cfg.benchmark, "strategies": {}}
    for name, res in report.strategies.items():
        s = res.summary()
        summary["strategies"][name] = {k: s[k] for k in ("mean", "min", "median", "mean_assigned")}
    for fmt in args.format.split(","):
        emit_report(report, fmt, out / f"retrieval_{cfg.benchmark}.{fmt}")
    if args.roundtrip:
        rt = run_roundtrip_bench(cfg)
        for fmt in args.format.split(","):
            emit_report(rt, fmt, out / f"roundtrip_{cfg.benchmark}.{fmt}")
        summary["roundtrip"] = {"mean_psnr": rt.mean_psnr, "mean_ssim": rt.mean_ssim, "pairs": rt.pair_count}
    print(json.dumps(summary, indent=1))


def cmd_metrics(args):
    report = roundtrip_metrics(args.frames, args.benchmark, args.segment_len)
    if args.output:
        emit_report(report, args.format, args.output)
    print(json.dumps({"pairs": report.pair_count, "mean_psnr": report.mean_psnr, "mean_ssim": report.mean_ssim}))


def cmd_compress_check(args):
    results = run_compress_checks(args.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())
    if not all(ok for _, ok, _ in results):
        return 1
    return 0


def _global_flags(parser, default):
    parser.add_argument("--seed", type=int, default=default, help="global random seed (default 0)")
    parser.add_argument("--config", default=default, help="JSON file mirroring BenchConfig")
    parser.add_argument("-v", "--verbose", action="store_true", default=default or False)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="memcam", description=__doc__)
    _global_flags(p, None)
    # repeated on each subcommand; SUPPRESS keeps a flag given before the
    # subcommand from being reset by the subparser default
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, argparse.SUPPRESS)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def covis_flags(sp):
        sp.add_argument("--samples", type=int, default=10_000)
        sp.add_argument("--near", type=float, default=DEFAULT_NEAR)
        sp.add_argument("--far", type=float, default=DEFAULT_FAR)

    sp = sub.add_parser("trajectory", parents=[common], help="write a round-trip trajectory")
    sp.add_argument("--kind", choices=["deg90", "deg360"], default="deg90")
    sp.add_argument("--segment-len", type=int, default=76)
    sp.add_argument("--fov", type=float, default=DEFAULT_FOV_H)
    sp.add_argument("--aspect", type=float, default=DEFAULT_ASPECT)
    sp.add_argument("--format", choices=["json", "re10k"], default="json")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_trajectory)

    sp = sub.add_parser("covis", parents=[common], help="co-visibility of two cameras")
    sp.add_argument("--pose1", help="inline JSON {R, t, fov_h, aspect}")
    sp.add_argument("--pose2", help="inline JSON {R, t, fov_h, aspect}")
    sp.add_argument("--poses", help="pose file (.json, .jsonl or RealEstate10K .txt)")
    sp.add_argument("--i", type=int, default=0)
    sp.add_argument("--j", type=int, default=1)
    sp.add_argument("--oracle", type=int, default=0, help="also report the lattice oracle at this resolution")
    covis_flags(sp)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_covis)

    sp = sub.add_parser("select", parents=[common], help="select context frames from a memory store")
    sp.add_argument("--memory", required=True, help="memory store JSONL")
    sp.add_argument("--predicted", required=True, help="pose file of the frames to predict")
    sp.add_argument("--renumber", action="store_true", help="number predicted frames after the memory")
    sp.add_argument("--strategy", default="ours", choices=[s.value for s in SelectionStrategy])
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--context-stride", type=int, default=1)
    sp.add_argument("--dropout", type=float, default=0.0)
    covis_flags(sp)
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("render", parents=[common], help="render the synthetic room")
    sp.add_argument("--pose", help="inline JSON pose")
    sp.add_argument("--trajectory", help="pose file to render frame by frame")
    sp.add_argument("--size", default="640x352")
    sp.add_argument("--scene-seed", type=int, default=0)
    sp.add_argument("--ids", action="store_true", help="also write 16-bit id buffers")
    sp.add_argument("-o", "--output", default="frames")
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("bench", parents=[common], help="run the segment-wise retrieval benchmark")
    sp.add_argument("--benchmark", choices=["deg90", "deg360"])
    sp.add_argument("--segment-len", type=int)
    sp.add_argument("--strategy", action="append", help="strategy name(s), repeatable or comma separated")
    sp.add_argument("--k", type=int)
    sp.add_argument("--context-stride", type=int)
    sp.add_argument("--dropout", type=float)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--size")
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--out", help="output directory; ground-truth frames are written here")
    sp.add_argument("--format", default="json,csv")
    sp.add_argument("--roundtrip", action="store_true", help="also score ground-truth renders round-trip")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("metrics", parents=[common], help="round-trip PSNR/SSIM of a frame directory")
    sp.add_argument("--frames", required=True)
    sp.add_argument("--benchmark", choices=["deg90", "deg360"], required=True)
    sp.add_argument("--segment-len", type=int, default=76)
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_metrics)

    sp = sub.add_parser("compress-check", parents=[common], help="run the compressor self-checks")
    sp.set_defaults(func=cmd_compress_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args) or 0
    except MemCamError as exc:
        print(f"memcam: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"memcam: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
