"""Command-line front end.

Exit codes: 1 usage error, 2 I/O error (missing/malformed files), 3 numeric
failure (e.g. nothing to evaluate).  All randomness flows through --seed,
so repeated invocations with identical inputs produce byte-identical
output files.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .core import DisparityMap, Rng, disparity_to_depth
from .evaluation import METRIC_NAMES, EvalConfig, compute_metrics, garg_crop
from .hints import HintCandidateSet, fuse, generate_candidates, param_grid, random_params
from .losses import hint_gated_loss, hint_usage_fraction, reduce_mean
from .optimizer import FlatInit, MapInit, OptimizeConfig, RandomInit, cost_curve, optimize
from .photometric import photometric_loss_of_disparity
from .sgm import SgmParams, sgm_match
from . import io as shio

EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read(loader, path):
    try:
        return loader(path)
    except (OSError, ValueError) as e:
        raise InputError(str(e)) from e


def _fmt(x: float) -> str:
    return repr(float(x))


def _default_threads() -> int:
    return int(os.environ.get("DEPTHHINTS_THREADS", "1"))


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stereohints", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("render", help="render a synthetic scene to left/right/gt/occlusion files")
    r.add_argument("--scene", required=True, help="scene spec JSON")
    r.add_argument("--out", required=True, help="output directory")

    def add_pair(sp):
        sp.add_argument("--left", required=True, help="left image (PNG/PGM)")
        sp.add_argument("--right", required=True, help="right image (PNG/PGM)")

    def add_sgm_params(sp):
        sp.add_argument("--block", type=int, default=5, help="census block size (odd)")
        sp.add_argument("--disps", type=int, default=64, help="number of disparities (multiple of 16)")
        sp.add_argument("--p1", type=int, default=None, help="small-jump penalty (default 8*block^2)")
        sp.add_argument("--p2", type=int, default=None, help="large-jump penalty (default 32*block^2)")
        sp.add_argument("--uniqueness", type=int, default=10, help="WTA uniqueness margin in percent")
        sp.add_argument("--paths", type=int, default=8, choices=(4, 8), help="aggregation directions")

    s = sub.add_parser("sgm", help="run the matcher once, over the 12-config grid, or with random params")
    add_pair(s)
    add_sgm_params(s)
    s.add_argument("--grid", action="store_true", help="run all 12 grid configurations")
    s.add_argument("--random", action="store_true", help="draw the configuration with --seed")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--lr-check", action="store_true", help="apply the left-right consistency check")
    s.add_argument("--out", required=True, help="output PNG16 path (file; directory with --grid)")

    f = sub.add_parser("fuse-hints", help="fuse candidate disparities by photometric score")
    add_pair(f)
    f.add_argument("--grid", action="store_true", help="generate the 12 grid candidates first")
    f.add_argument("--candidates", default=None, help="directory of candidate PNG16s (instead of --grid)")
    f.add_argument("--lr-check", action="store_true")
    f.add_argument("--alpha", type=float, default=0.85)
    f.add_argument("--threads", type=int, default=None, help="worker cap (env DEPTHHINTS_THREADS)")
    f.add_argument("--out", required=True, help="output directory")

    l = sub.add_parser("loss-map", help="DSSIM+L1 loss of a disparity map (optionally hint-gated)")
    add_pair(l)
    l.add_argument("--disp", required=True, help="disparity PNG16")
    l.add_argument("--hint", default=None, help="hint disparity PNG16")
    l.add_argument("--alpha", type=float, default=0.85)
    l.add_argument("--direction", type=int, default=-1, choices=(-1, 1))
    l.add_argument("--out", required=True, help="loss PFM path")
    l.add_argument("--gate-out", default=None, help="gate mask PNG path (with --hint)")

    c = sub.add_parser("cost-curve", help="single-pixel loss over trial disparities, as CSV")
    add_pair(c)
    c.add_argument("--x", type=int, required=True)
    c.add_argument("--y", type=int, required=True)
    c.add_argument("--d-max", type=float, required=True)
    c.add_argument("--steps", type=int, default=200)
    c.add_argument("--alpha", type=float, default=0.85)
    c.add_argument("--direction", type=int, default=-1, choices=(-1, 1))
    c.add_argument("--out", required=True, help="CSV path")

    o = sub.add_parser("optimize", help="per-pixel disparity descent with trajectory export")
    add_pair(o)
    o.add_argument("--iterations", type=int, required=True)
    o.add_argument("--step", type=float, required=True)
    o.add_argument("--record-every", type=int, default=50)
    o.add_argument("--alpha", type=float, default=0.85)
    o.add_argument("--d-max", type=float, default=None)
    o.add_argument("--direction", type=int, default=-1, choices=(-1, 1))
    o.add_argument("--init-flat", type=float, default=None, help="flat initial disparity")
    o.add_argument("--init-map", default=None, help="initial disparity PNG16")
    o.add_argument("--init-random", type=float, nargs=2, metavar=("LO", "HI"), default=None)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--hints", default=None, help="hint disparity PNG16 (enables gating)")
    o.add_argument("--out", required=True, help="output directory")

    e = sub.add_parser("eval", help="seven-metric depth evaluation of disparity predictions")
    e.add_argument("--pred", required=True, help="predicted disparity PNG16")
    e.add_argument("--gt", required=True, help="ground-truth disparity PNG16")
    e.add_argument("--calib", required=True, help="calibration text file")
    e.add_argument("--min-depth", type=float, default=1e-3)
    e.add_argument("--max-depth", type=float, default=80.0)
    e.add_argument("--garg-crop", action="store_true")
    e.add_argument("--median-scaling", action="store_true")
    e.add_argument("--format", choices=("csv", "json"), default="csv")
    e.add_argument("--out", default=None, help="write the row here instead of stdout")
    return p


def _cmd_render(args) -> int:
    spec = _read(shio.load_scene_spec, args.scene)
    pair = shio.render_scene(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    shio.write_image(out / "left.png", pair.left)
    shio.write_image(out / "right.png", pair.right)
    shio.write_disparity_png16(out / "gt_disp.png", pair.gt_disparity)
    occluded = shio.Image((~pair.co_visible).astype(np.float64))
    shio.write_image(out / "occlusion.png", occluded)
    return 0


def _params_from_args(args) -> SgmParams:
    return SgmParams(
        block_size=args.block,
        num_disparities=args.disps,
        p1=args.p1,
        p2=args.p2,
        uniqueness_ratio=args.uniqueness,
        num_paths=args.paths,
    )


def _cmd_sgm(args) -> int:
    if args.grid and args.random:
        raise UsageError("--grid and --random are mutually exclusive")
    left = _read(shio.read_image, args.left)
    right = _read(shio.read_image, args.right)
    if args.grid:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for p in param_grid():
            d = sgm_match(left, right, p, with_lr_check=args.lr_check)
            shio.write_disparity_png16(out / f"sgm_b{p.block_size}_d{p.num_disparities}.png", d)
        return 0
    params = random_params(Rng(args.seed)) if args.random else _params_from_args(args)
    d = sgm_match(left, right, params, with_lr_check=args.lr_check)
    shio.write_disparity_png16(args.out, d)
    return 0


def _cmd_fuse_hints(args) -> int:
    left = _read(shio.read_image, args.left)
    right = _read(shio.read_image, args.right)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    threads = args.threads if args.threads is not None else _default_threads()
    if args.candidates and args.grid:
        raise UsageError("--grid and --candidates are mutually exclusive")
    if args.candidates:
        files = sorted(Path(args.candidates).glob("*.png"))
        if not files:
            raise InputError(f"no candidate PNGs in {args.candidates}")
        maps = [_read(shio.read_disparity_png16, f) for f in files]
        grid = param_grid() if len(maps) == len(param_grid()) else [SgmParams()] * len(maps)
        cands = HintCandidateSet(tuple(maps), tuple(grid))
    else:
        grid = param_grid()
        cands = generate_candidates(left, right, grid, with_lr=args.lr_check, threads=threads)
        for p, d in zip(cands.params, cands.candidates):
            shio.write_disparity_png16(out / f"candidate_b{p.block_size}_d{p.num_disparities}.png", d)
    fused = fuse(cands, left, right, alpha=args.alpha)
    shio.write_disparity_png16(out / "fused.png", fused.disp)
    # index + 1 so that 0 keeps meaning "hole", matching the disparity PNGs
    idx = (fused.source_index + 1).astype(np.uint16)
    from PIL import Image as PILImage

    PILImage.fromarray(idx).save(out / "source_index.png", format="PNG")
    shio.write_pfm(out / "score.pfm", fused.score.astype(np.float32))
    return 0


def _cmd_loss_map(args) -> int:
    left = _read(shio.read_image, args.left)
    right = _read(shio.read_image, args.right)
    disp = _read(shio.read_disparity_png16, args.disp)
    if args.hint is None:
        loss = photometric_loss_of_disparity(left, right, disp, args.direction, args.alpha)
        shio.write_pfm(args.out, loss.loss.astype(np.float32))
    else:
        hint = _read(shio.read_disparity_png16, args.hint)
        gated = hint_gated_loss(left, right, disp, hint, args.direction, args.alpha)
        shio.write_pfm(args.out, gated.loss.loss.astype(np.float32))
        if args.gate_out:
            shio.write_image(args.gate_out, shio.Image(gated.gate.astype(np.float64)))
        print(f"hint_usage_fraction {_fmt(hint_usage_fraction(gated))}")
    return 0


def _cmd_cost_curve(args) -> int:
    left = _read(shio.read_image, args.left)
    right = _read(shio.read_image, args.right)
    curve = cost_curve(left, right, (args.x, args.y), args.d_max, args.steps,
                       alpha=args.alpha, direction=args.direction)
    lines = ["disparity,loss"]
    lines += [f"{_fmt(d)},{_fmt(l)}" for d, l in curve]
    Path(args.out).write_text("\n".join(lines) + "\n")
    return 0


def _cmd_optimize(args) -> int:
    left = _read(shio.read_image, args.left)
    right = _read(shio.read_image, args.right)
    inits = [v for v in (args.init_flat, args.init_map, args.init_random) if v is not None]
    if len(inits) != 1:
        raise UsageError("exactly one of --init-flat / --init-map / --init-random is required")
    if args.init_flat is not None:
        init = FlatInit(args.init_flat)
    elif args.init_map is not None:
        init = MapInit(_read(shio.read_disparity_png16, args.init_map))
    else:
        init = RandomInit(args.init_random[0], args.init_random[1], args.seed)
    hint = _read(shio.read_disparity_png16, args.hints) if args.hints else None
    cfg = OptimizeConfig(
        iterations=args.iterations,
        step_size=args.step,
        init=init,
        use_hints=hint is not None,
        alpha=args.alpha,
        record_every=args.record_every,
        d_max=args.d_max,
    )
    traj = optimize(left, right, cfg, hint=hint, direction=args.direction)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["iteration,mean_loss,hint_fraction"]
    for point in traj.snapshots:
        lines.append(f"{point.iteration},{_fmt(point.mean_loss)},{_fmt(point.hint_fraction)}")
        shio.write_disparity_png16(out / f"snapshot_{point.iteration:06d}.png", point.disparity)
    (out / "trajectory.csv").write_text("\n".join(lines) + "\n")
    return 0


def _cmd_eval(args) -> int:
    pred_disp = _read(shio.read_disparity_png16, args.pred)
    gt_disp = _read(shio.read_disparity_png16, args.gt)
    calib = _read(shio.read_calibration, args.calib)
    pred = disparity_to_depth(pred_disp, calib)
    gt = disparity_to_depth(gt_disp, calib)
    cfg = EvalConfig(
        min_depth=args.min_depth,
        max_depth=args.max_depth,
        crop=garg_crop if args.garg_crop else None,
        median_scaling=args.median_scaling,
    )
    m = compute_metrics(pred, gt, cfg)
    if args.format == "csv":
        text = ",".join(METRIC_NAMES) + "\n" + ",".join(_fmt(v) for v in m.as_tuple()) + "\n"
    else:
        import json

        text = json.dumps(dict(zip(METRIC_NAMES, m.as_tuple())), indent=None) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


_COMMANDS = {
    "render": _cmd_render,
    "sgm": _cmd_sgm,
    "fuse-hints": _cmd_fuse_hints,
    "loss-map": _cmd_loss_map,
    "cost-curve": _cmd_cost_curve,
    "optimize": _cmd_optimize,
    "eval": _cmd_eval,
}


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ZeroDivisionError, FloatingPointError) as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
