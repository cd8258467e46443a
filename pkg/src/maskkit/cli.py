"""maskkit command line: generate masks, apply them, analyze patterns.

Every command is deterministic given its full flag set: outputs embed a
manifest (command, parameters, seed, tool version, RNG name) as header
comments, and re-running those parameters reproduces the file byte for byte.
A timestamp is added only behind --stamp, since wall-clock text would break
reproducibility. Exit codes: 0 success, 2 usage or validation error, 1
internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .augment import CropSpec, cutmix, mixup_pixels, random_flip, random_resized_crop, sample_lambda
from .grid import MaskMap, apply_mask, bare_grid, partition
from .metrics import class_weights, confusion_from_pairs, metrics
from .occlusion import Region, exact_mesh_occlusion, exact_random_occlusion, mc_occlusion, patch_mask_frequency
from .patterns import (
    GENERATOR_NAME,
    BlockwiseSpec,
    MeshSpec,
    RandomSpec,
    SquareSpec,
    generate,
    spec_fields,
)
from .pnm import read_gray, read_mask, write_gray, write_mask
from .propagation import StageStack, dense_propagate, sparse_propagate


def _parse_pair(text: str, sep: str, what: str) -> tuple[int, int]:
    parts = text.split(sep)
    if len(parts) != 2:
        raise ValueError(f"{what} must look like A{sep}B, got {text!r}")
    try:
        a, b = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(f"{what} must hold integers, got {text!r}") from None
    return a, b


def _parse_range(text: str, what: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"{what} must look like LO:HI, got {text!r}")
    return float(parts[0]), float(parts[1])


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("MASKKIT_SEED")
    if env is None:
        raise ValueError("a seed is required: pass --seed or set MASKKIT_SEED")
    try:
        return int(env)
    except ValueError:
        raise ValueError(f"MASKKIT_SEED={env!r} is not an integer") from None


def _manifest(command: str, params: dict[str, str], stamp: bool) -> list[str]:
    items = {"command": command, **params, "version": __version__, "rng": GENERATOR_NAME}
    if stamp:
        items["timestamp"] = datetime.now(timezone.utc).isoformat()
    return [f"{k}={v}" for k, v in items.items()]


def _emit_csv(
    out: str | None, manifest: list[str], header: list[str], rows: list[list[str]]
) -> None:
    text = "".join(f"# {line}\n" for line in manifest)
    text += ",".join(header) + "\n"
    text += "".join(",".join(row) + "\n" for row in rows)
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_bytes(text.encode())


def _pattern_spec(args: argparse.Namespace):
    name = args.pattern
    if name == "mesh":
        return MeshSpec(args.ratio, rounding=args.rounding, parity_mode=args.parity_mode)
    if name == "random":
        return RandomSpec(args.ratio)
    if name == "square":
        if args.side is None:
            raise ValueError("--side is required for the square pattern")
        return SquareSpec(args.side, args.ratio)
    if name == "blockwise":
        lo, hi = _parse_range(args.aspect, "--aspect")
        return BlockwiseSpec(args.ratio, min_block_area=args.min_block_area, aspect_low=lo, aspect_high=hi)
    raise ValueError(f"unknown pattern {name!r}")


def _add_pattern_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pattern", required=True, choices=["mesh", "random", "square", "blockwise"])
    p.add_argument("--grid", required=True, help="patch grid as COLSxROWS, e.g. 7x7")
    p.add_argument("--ratio", required=True, help="mask ratio (decimal string, kept exact)")
    p.add_argument("--side", type=int, help="square pattern: side length in patches")
    p.add_argument("--min-block-area", type=int, default=4, help="blockwise: smallest rectangle area")
    p.add_argument("--aspect", default="0.3:3.3333333333333335", help="blockwise aspect range LO:HI")
    p.add_argument("--rounding", choices=["floor", "round"], default="floor", help="mesh kept-count rounding")
    p.add_argument("--parity-mode", choices=["linear", "checkerboard"], default="linear")


def _pattern_manifest(args: argparse.Namespace) -> dict[str, str]:
    fields = spec_fields(_pattern_spec(args))
    fields.pop("rng")  # appended once by _manifest
    fields["grid"] = args.grid
    return fields


def cmd_gen(args: argparse.Namespace) -> int:
    cols, rows = _parse_pair(args.grid, "x", "--grid")
    grid = bare_grid(cols, rows)
    spec = _pattern_spec(args)
    seed = _resolve_seed(args.seed)
    mask = generate(spec, grid, seed)
    params = _pattern_manifest(args)
    params["seed"] = str(seed)
    params["masked_count"] = str(mask.masked_count)
    write_mask(args.out, mask, _manifest("gen", params, args.stamp))
    return 0


def cmd_apply(args: argparse.Namespace) -> int:
    image = read_gray(args.image)
    raw = read_mask(args.mask)
    grid = partition(image.width, image.height, args.patch_size)
    if (grid.cols, grid.rows) != (raw.grid.cols, raw.grid.rows):
        raise ValueError(
            f"mask is {raw.grid.cols}x{raw.grid.rows} but image {image.width}x"
            f"{image.height} with patch size {args.patch_size} gives {grid.cols}x{grid.rows}"
        )
    out = apply_mask(image, MaskMap(grid, raw.cells), args.fill)
    params = {
        "image": args.image,
        "mask": args.mask,
        "patch_size": str(args.patch_size),
        "fill": str(args.fill),
    }
    write_gray(args.out, out, _manifest("apply", params, args.stamp), binary=args.binary)
    return 0


def cmd_occlusion(args: argparse.Namespace) -> int:
    cols, rows = _parse_pair(args.grid, "x", "--grid")
    grid = bare_grid(cols, rows)
    w, h = _parse_pair(args.region, "x", "--region")
    x, y = _parse_pair(args.at, ",", "--at")
    region = Region(x=x, y=y, w=w, h=h)
    spec = _pattern_spec(args)
    params = _pattern_manifest(args)
    params.update({"region": args.region, "at": args.at, "mode": args.mode})
    seed_cell = ""
    if args.mode == "exact":
        if args.masked_count is not None and args.pattern != "random":
            raise ValueError("--masked-count applies to the random pattern only")
        if args.pattern == "mesh":
            est = exact_mesh_occlusion(grid, args.ratio, region, parity_mode=args.parity_mode)
        elif args.pattern == "random":
            est = exact_random_occlusion(grid, args.ratio, region, masked_count=args.masked_count)
            if args.masked_count is not None:
                params["masked_count"] = str(args.masked_count)
        else:
            raise ValueError(
                f"pattern {args.pattern!r} has no exact occlusion form; use --mode mc"
            )
    else:
        seed = _resolve_seed(args.seed)
        est = mc_occlusion(spec, grid, region, args.trials, seed, threads=args.threads)
        params.update({"trials": str(args.trials), "seed": str(seed), "threads": str(args.threads)})
        seed_cell = str(seed)
    header = ["pattern", "ratio", "region_w", "region_h", "method", "probability", "stderr", "trials", "seed"]
    row = [
        args.pattern,
        str(args.ratio),
        str(w),
        str(h),
        est.method,
        str(est.probability),
        str(est.stderr),
        str(est.trials),
        seed_cell,
    ]
    _emit_csv(args.out, _manifest("occlusion", params, args.stamp), header, [row])
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    cols, rows = _parse_pair(args.grid, "x", "--grid")
    grid = bare_grid(cols, rows)
    spec = _pattern_spec(args)
    seed = _resolve_seed(args.seed)
    freq = patch_mask_frequency(spec, grid, args.trials, seed)
    params = _pattern_manifest(args)
    params.update({"trials": str(args.trials), "seed": str(seed)})
    rows_out = [
        [str(c), str(r), str(float(freq[r, c]))]
        for r in range(grid.rows)
        for c in range(grid.cols)
    ]
    _emit_csv(args.out, _manifest("stats", params, args.stamp), ["col", "row", "frequency"], rows_out)
    return 0


def cmd_propagate(args: argparse.Namespace) -> int:
    mask = read_mask(args.mask)
    stack = StageStack(
        num_stages=args.stages,
        layers_per_stage=args.layers,
        kernel_radius=args.radius,
    )
    run = dense_propagate if args.mode == "dense" else sparse_propagate
    stages = run(mask, stack)
    # Row 0 is the input support; later stage inputs are pooled transitions
    # and are not separate rows.
    frames = [stages[0][0]]
    for seq in stages:
        frames.extend(seq[1:])
    params = {
        "mask": args.mask,
        "mode": args.mode,
        "stages": str(args.stages),
        "layers": str(args.layers),
        "radius": str(args.radius),
    }
    rows_out = [
        [str(i), str(s.active_count), str(int(s.is_full))] for i, s in enumerate(frames)
    ]
    if args.frames:
        for i, s in enumerate(frames):
            sys.stdout.write(f"layer {i} ({s.cols}x{s.rows})\n")
            arr = s.as_array()
            for row in arr:
                sys.stdout.write("".join("#" if v else "." for v in row) + "\n")
            sys.stdout.write("\n")
    _emit_csv(
        args.out, _manifest("propagate", params, args.stamp), ["layer", "active_count", "is_full"], rows_out
    )
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    lines = Path(args.csv).read_text().splitlines()
    truth, pred = [], []
    first_data_line = True
    for ln, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 2:
            raise ValueError(f"{args.csv}:{ln}: expected two columns, got {line!r}")
        if first_data_line:
            first_data_line = False
            if not (cells[0].isdigit() and cells[1].isdigit()):
                continue  # header row
        truth.append(int(cells[0]))
        pred.append(int(cells[1]))
    report = metrics(confusion_from_pairs(truth, pred))
    pct = report.percents()
    header = ["accuracy", "precision", "recall", "f1"]
    _emit_csv(
        args.out,
        _manifest("metrics", {"csv": args.csv, "pairs": str(len(truth))}, args.stamp),
        header,
        [[pct[name] for name in header]],
    )
    return 0


def cmd_weights(args: argparse.Namespace) -> int:
    cw = class_weights(args.n0, args.n1)
    _emit_csv(
        args.out,
        _manifest("weights", {"n0": str(args.n0), "n1": str(args.n1)}, args.stamp),
        ["n0", "n1", "w0", "w1"],
        [[str(cw.n0), str(cw.n1), str(cw.w0), str(cw.w1)]],
    )
    return 0


def cmd_augment(args: argparse.Namespace) -> int:
    op = args.augment_op
    if op == "mixup":
        a, b = read_gray(args.a), read_gray(args.b)
        if args.lam is not None:
            lam, seed_txt = float(args.lam), ""
        else:
            seed = _resolve_seed(args.seed)
            lam, seed_txt = sample_lambda(args.alpha, seed), str(seed)
        out = mixup_pixels(a, b, lam)
        params = {"a": args.a, "b": args.b, "lam": str(lam), "seed": seed_txt}
        write_gray(args.out, out, _manifest("augment mixup", params, args.stamp))
        sys.stdout.write(f"lam={lam}\nseed={seed_txt}\n")
    elif op == "cutmix":
        a, b = read_gray(args.a), read_gray(args.b)
        seed = _resolve_seed(args.seed)
        out, lam = cutmix(a, b, args.alpha, seed)
        params = {"a": args.a, "b": args.b, "alpha": str(args.alpha), "seed": str(seed), "lam": str(lam)}
        write_gray(args.out, out, _manifest("augment cutmix", params, args.stamp))
        sys.stdout.write(f"lam={lam}\nseed={seed}\n")
    elif op == "crop":
        img = read_gray(args.image)
        lo, hi = _parse_range(args.scale, "--scale")
        alo, ahi = _parse_range(args.aspect, "--aspect")
        spec = CropSpec(scale_low=lo, scale_high=hi, aspect_low=alo, aspect_high=ahi, out_size=args.size)
        seed = _resolve_seed(args.seed)
        out = random_resized_crop(img, spec, seed)
        params = {
            "image": args.image,
            "scale": args.scale,
            "aspect": args.aspect,
            "size": str(args.size),
            "seed": str(seed),
        }
        write_gray(args.out, out, _manifest("augment crop", params, args.stamp))
        sys.stdout.write(f"seed={seed}\n")
    else:  # flip
        img = read_gray(args.image)
        seed = _resolve_seed(args.seed)
        out = random_flip(img, args.p, seed)
        params = {"image": args.image, "p": str(args.p), "seed": str(seed)}
        write_gray(args.out, out, _manifest("augment flip", params, args.stamp))
        sys.stdout.write(f"seed={seed}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maskkit",
        description="Deterministic patch-mask generation and analysis toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"maskkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a mask file")
    _add_pattern_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--out", required=True, help="output P1 bitmap path")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("apply", help="apply a mask to a graymap image")
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--patch-size", type=int, required=True)
    p.add_argument("--fill", type=int, default=0)
    p.add_argument("--binary", action="store_true", help="write P5 instead of P2")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("occlusion", help="probability that a region is fully masked")
    _add_pattern_flags(p)
    p.add_argument("--region", required=True, help="region size as WxH")
    p.add_argument("--at", default="0,0", help="region top-left as X,Y")
    p.add_argument("--mode", choices=["exact", "mc"], default="exact")
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--masked-count", type=int,
                   help="random pattern: override floor(ratio*total) for count-matched comparisons")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_occlusion)

    p = sub.add_parser("stats", help="per-cell masked frequency over seeded trials")
    _add_pattern_flags(p)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("propagate", help="support propagation through a conv stack")
    p.add_argument("--mask", required=True, help="P1 mask file")
    p.add_argument("--mode", choices=["dense", "sparse"], required=True)
    p.add_argument("--stages", type=int, default=1)
    p.add_argument("--layers", type=int, default=4, help="layers per stage")
    p.add_argument("--radius", type=int, default=1, help="kernel radius in cells")
    p.add_argument("--frames", action="store_true", help="print per-layer grids")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("metrics", help="confusion metrics from a truth,pred CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("weights", help="inverse-frequency class weights")
    p.add_argument("--n0", type=int, required=True, help="negative count")
    p.add_argument("--n1", type=int, required=True, help="positive count")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("augment", help="image augmentation operations")
    aug = p.add_subparsers(dest="augment_op", required=True)

    q = aug.add_parser("mixup", help="pixel-wise blend of two images")
    q.add_argument("--a", required=True)
    q.add_argument("--b", required=True)
    q.add_argument("--lam", help="mixing coefficient; omit to sample from Beta(alpha, alpha)")
    q.add_argument("--alpha", type=float, default=1.0)
    q.add_argument("--seed", type=int)
    q.add_argument("-o", "--out", required=True)

    q = aug.add_parser("cutmix", help="paste a random rectangle of b into a")
    q.add_argument("--a", required=True)
    q.add_argument("--b", required=True)
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--seed", type=int)
    q.add_argument("-o", "--out", required=True)

    q = aug.add_parser("crop", help="random resized crop")
    q.add_argument("--image", required=True)
    q.add_argument("--scale", default="0.08:1.0", help="area fraction range LO:HI")
    q.add_argument("--aspect", default="0.75:1.3333333333333333")
    q.add_argument("--size", type=int, required=True, help="square output size")
    q.add_argument("--seed", type=int)
    q.add_argument("-o", "--out", required=True)

    q = aug.add_parser("flip", help="horizontal flip with probability p")
    q.add_argument("--image", required=True)
    q.add_argument("--p", type=float, default=0.5)
    q.add_argument("--seed", type=int)
    q.add_argument("-o", "--out", required=True)

    p.set_defaults(func=cmd_augment)
    parser.add_argument("--stamp", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"maskkit: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"maskkit: internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
