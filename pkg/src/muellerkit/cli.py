"""Command-line interface.

Subcommands: validate, project, decompose, synth, rotate, mask, metrics,
split, serve.  Machine-readable results (JSON or CSV) go to stdout;
human progress and diagnostics go to stderr.

Exit codes: 0 success, 1 I/O or usage problems, 2 validation found
defects, 3 contract violations (e.g. decomposing a masked cube).

An optional --config FILE (JSON, keys matching flag destinations)
supplies defaults; explicit flags always win.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import augment, dataio, evalkit, luchipman, realizability, synth
from ._parallel import WORKERS_ENV, resolve_workers
from .errors import (
    BadHeaderError,
    BadMagicError,
    MissingPlaneError,
    MuellerKitError,
    TruncatedError,
)
from .polcore import MuellerCube

EXIT_OK = 0
EXIT_IO_USAGE = 1
EXIT_VALIDATION = 2
EXIT_CONTRACT = 3

# format/path problems are I/O-level; everything else in the taxonomy is
# a contract violation
_IO_ERRORS = (BadMagicError, BadHeaderError, TruncatedError, MissingPlaneError)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse defaults to exit 2
        raise _UsageError(message)


def _emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _progress_printer(label: str):
    def show(done: int, total: int) -> None:
        step = max(1, total // 10)
        if done == total or done % step == 0:
            sys.stderr.write(f"{label}: {done}/{total} chunks\n")
            sys.stderr.flush()

    return show


def _parse_floats(text: str, n: int, flag: str) -> list[float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != n:
        raise _UsageError(f"{flag} needs {n} comma-separated values, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise _UsageError(f"{flag}: could not parse {text!r}") from None


def _parse_int_list(text: str, flag: str) -> list[int]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if not parts:
        raise _UsageError(f"{flag} needs at least one value")
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise _UsageError(f"{flag}: could not parse {text!r}") from None


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    report = dataio.validate_file(
        args.input, tol_phys=args.tol_phys, workers=args.workers
    )
    if args.physical_out and report.kind == "cube":
        outdir = Path(args.physical_out)
        outdir.mkdir(parents=True, exist_ok=True)
        scan = realizability.scan_cube(
            dataio.read_cube(args.input), tol_phys=args.tol_phys,
            workers=args.workers,
        )
        for li, lam in enumerate(report.wavelengths):
            dataio.write_plane(
                scan.physical[li].astype(np.uint8),
                dataio.PlaneKind.LABEL,
                lam,
                outdir / f"physical_{lam:g}.mmp",
            )
    payload = dataclasses.asdict(report)
    payload["min_eigenvalue"] = _json_safe(payload["min_eigenvalue"])
    _emit(payload)
    return EXIT_OK if report.clean else EXIT_VALIDATION


def cmd_project(args) -> int:
    cube = dataio.read_cube(args.input)
    projected, n_clipped = realizability.project_cube(
        cube, clip=args.clip, workers=args.workers
    )
    dataio.write_cube(projected, args.output)
    _emit(
        {
            "output": str(args.output),
            "n_pixels": cube.n_pixels,
            "n_clipped": n_clipped,
            "fraction_clipped": n_clipped / cube.n_pixels,
        }
    )
    return EXIT_OK


def cmd_decompose(args) -> int:
    cube = dataio.read_cube(args.input)
    opts = luchipman.DecomposeOptions(
        project_unphysical=not args.no_project,
        clip=args.clip,
        wavelength_selection=(
            _parse_int_list(args.wavelength, "--wavelength")
            if args.wavelength
            else None
        ),
    )
    maps = luchipman.decompose_cube(
        cube,
        opts,
        workers=args.workers,
        progress=_progress_printer("decompose"),
    )
    outdir = Path(args.outdir)
    written = [str(p) for p in dataio.write_maps(maps, outdir)]
    if args.write_m00:
        sel = opts.wavelength_selection or range(cube.n_wavelengths)
        for li in sel:
            lam = cube.wavelengths[li]
            path = dataio.map_plane_path(outdir, dataio.PlaneKind.M00, lam)
            dataio.write_plane(
                np.asarray(cube.data[li, :, :, 0, 0], dtype=np.float64),
                dataio.PlaneKind.M00,
                lam,
                path,
            )
            written.append(str(path))
    if args.previews:
        planes = {
            "delta": maps.depolarization,
            "ret": maps.retardance,
            "diat": maps.diattenuation,
        }
        for li, lam in enumerate(maps.wavelengths):
            for stem, arr in planes.items():
                path = outdir / f"{stem}_{lam:g}.png"
                dataio.plane_to_png(arr[li], path)
                written.append(str(path))
    statuses = {
        s.name.lower(): int(np.count_nonzero(maps.status == s))
        for s in luchipman.PixelStatus
    }
    _emit({"outdir": str(outdir), "files": written, "status_counts": statuses})
    return EXIT_OK


def cmd_synth(args) -> int:
    dims = dict(
        height=args.height,
        width=args.width,
        wavelengths=[float(v) for v in args.lambdas.split(",")],
        dtype=np.float32 if args.dtype == "f32" else np.float64,
    )
    if args.kind == "identity":
        cube = synth.identity_cube(**dims)
    elif args.kind == "depolarizer":
        a, b, c = _parse_floats(args.params, 3, "--params")
        cube = synth.depolarizer_cube(a, b, c, **dims)
    elif args.kind == "retarder":
        theta, delta = _parse_floats(args.params, 2, "--params")
        cube = synth.retarder_cube(theta, delta, **dims)
    elif args.kind == "diattenuator":
        cube = synth.diattenuator_cube(_parse_floats(args.params, 3, "--params"), **dims)
    elif args.kind == "composed":
        cube = synth.composed_cube(**dims)
    elif args.kind == "unphysical-tile":
        cube = synth.unphysical_tile_cube(**dims)
    else:  # random-physical
        cube = synth.random_physical_cube(seed=args.seed, **dims)
    dataio.write_cube(cube, args.output)
    _emit(
        {
            "output": str(args.output),
            "kind": args.kind,
            "height": cube.height,
            "width": cube.width,
            "wavelengths": cube.wavelengths,
        }
    )
    return EXIT_OK


def cmd_rotate(args) -> int:
    cube = dataio.read_cube(args.input)
    if args.frame_rad is not None:
        if args.deg or args.flip:
            raise _UsageError("--frame-rad excludes --deg/--flip")
        from .polcore import make_rotator

        flat = np.asarray(cube.data, dtype=np.float64).reshape(-1, 4, 4)
        rotated = (
            make_rotator(-args.frame_rad) @ flat @ make_rotator(args.frame_rad)
        ).reshape(cube.data.shape)
        out = MuellerCube(
            data=rotated.astype(cube.data.dtype),
            wavelengths=list(cube.wavelengths),
            normalized=cube.normalized,
            m00_plane=cube.m00_plane,
            mask=cube.mask,
        )
        t_desc = {"frame_rad": args.frame_rad}
    else:
        t = augment.SpatialTransform(
            rotation_deg=args.deg or 0,
            flip_h=args.flip == "h",
            flip_v=args.flip == "v",
        )
        out = augment.rotate_cube(cube, t)
        t_desc = {
            "rotation_deg": t.rotation_deg,
            "flip_h": t.flip_h,
            "flip_v": t.flip_v,
        }
    dataio.write_cube(out, args.output)
    _emit({"output": str(args.output), "transform": t_desc})
    return EXIT_OK


def cmd_mask(args) -> int:
    cube = dataio.read_cube(args.input)
    if (args.preset is None) == (args.bits is None):
        raise _UsageError("exactly one of --preset/--bits is required")
    spec = args.preset if args.preset is not None else args.bits
    masked = augment.apply_mask(cube, augment.parse_mask(spec), fill=args.fill)
    dataio.write_cube(masked, args.output)
    _emit(
        {
            "output": str(args.output),
            "mask_bits": masked.mask.bits,
            "mask_hex": f"0x{masked.mask.bits:04X}",
        }
    )
    return EXIT_OK


def _read_label_plane(path: str) -> np.ndarray:
    plane, _, _ = dataio.read_plane(path)
    return plane


def cmd_metrics(args) -> int:
    pred = _read_label_plane(args.pred)
    gt = _read_label_plane(args.gt)
    rows: list[tuple[str, str, float]] = []
    if args.metric == "dice":
        class_ids = _parse_int_list(args.classes, "--classes")
        for c in class_ids:
            rows.append(("dice", str(c), evalkit.dice(pred, gt, c, args.ignore)))
        rows.append(
            ("macro_dice", "all", evalkit.macro_dice(pred, gt, class_ids, args.ignore))
        )
    else:  # cls
        conf = evalkit.BinaryConfusion.from_planes(
            pred, gt, positive_class=args.positive_class, ignore_label=args.ignore
        )
        m = evalkit.classify_metrics(conf)
        cls = str(args.positive_class)
        rows += [
            ("accuracy", cls, m.accuracy),
            ("sensitivity", cls, m.sensitivity),
            ("specificity", cls, m.specificity),
        ]
    sys.stdout.write(evalkit.metrics_csv(rows))
    return EXIT_OK


def cmd_split(args) -> int:
    if args.scheme == "few-shot":
        spec = evalkit.SplitSpec(
            n_items=args.n, fraction=args.fraction, seed=args.seed
        )
        _emit({"indices": evalkit.fewshot_indices(spec)})
    elif args.scheme == "nested-cv":
        for s in evalkit.nested_cv_splits(args.n):
            _emit({"test": s.test, "val": s.val, "train": list(s.train)})
    else:  # train-val-test
        train, val, test = evalkit.train_val_test_split(args.n, args.seed)
        _emit({"train": train, "val": val, "test": test})
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_workers(p: _Parser) -> None:
    p.add_argument(
        "--workers",
        type=int,
        default=None,
        help=f"worker threads (default: ${WORKERS_ENV} or 1); "
        "never changes output bytes",
    )


def build_parser() -> tuple[_Parser, dict[str, _Parser]]:
    parser = _Parser(prog="muellerkit", description=__doc__)
    subs = parser.add_subparsers(dest="subcommand", metavar="COMMAND")
    by_name: dict[str, _Parser] = {}

    def sub(name: str, **kw) -> _Parser:
        p = subs.add_parser(name, **kw)
        p.add_argument("--config", default=None, help="JSON file with flag defaults")
        by_name[name] = p
        return p

    p = sub("validate", help="check a container file; exit 2 on defects")
    p.add_argument("input")
    p.add_argument("--tol-phys", type=float, default=realizability.TOL_PHYS)
    p.add_argument(
        "--physical-out",
        default=None,
        help="directory for per-wavelength u8 physicality planes",
    )
    _add_workers(p)
    p.set_defaults(func=cmd_validate)

    p = sub("project", help="clip negative coherency eigenvalues per pixel")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--clip", type=float, default=realizability.CLIP_EIGENVALUE)
    _add_workers(p)
    p.set_defaults(func=cmd_project)

    p = sub("decompose", help="write depolarization/retardance/diattenuation maps")
    p.add_argument("input")
    p.add_argument("outdir")
    p.add_argument("--no-project", action="store_true")
    p.add_argument("--clip", type=float, default=realizability.CLIP_EIGENVALUE)
    p.add_argument(
        "--wavelength",
        default=None,
        help="comma-separated wavelength indices (default: all)",
    )
    p.add_argument("--previews", action="store_true", help="also write PNG previews")
    p.add_argument("--write-m00", action="store_true", help="also write m00 planes")
    _add_workers(p)
    p.set_defaults(func=cmd_decompose)

    p = sub("synth", help="generate known-answer cubes")
    p.add_argument(
        "kind",
        choices=[
            "identity",
            "depolarizer",
            "retarder",
            "diattenuator",
            "composed",
            "unphysical-tile",
            "random-physical",
        ],
    )
    p.add_argument("output")
    p.add_argument("--height", type=int, default=16)
    p.add_argument("--width", type=int, default=16)
    p.add_argument("--lambdas", default="550", help="comma-separated nm values")
    p.add_argument("--params", default=None, help="kind-specific values")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dtype", choices=["f32", "f64"], default="f64")
    p.set_defaults(func=cmd_synth)

    p = sub("rotate", help="exact spatial transform or pure frame rotation")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--deg", type=int, choices=[90, 180, 270], default=None)
    p.add_argument("--flip", choices=["h", "v"], default=None)
    p.add_argument(
        "--frame-rad",
        type=float,
        default=None,
        help="rotate every matrix's reference frame by this angle, no pixel moves",
    )
    p.set_defaults(func=cmd_rotate)

    p = sub("mask", help="zero out unmeasured Mueller elements")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--preset", choices=sorted(augment.MASK_PRESETS), default=None)
    p.add_argument("--bits", default=None, help="16-bit word, e.g. 0x0777")
    p.add_argument("--fill", type=float, default=0.0)
    p.set_defaults(func=cmd_mask)

    p = sub("metrics", help="dice or classification metrics as CSV")
    p.add_argument("metric", choices=["dice", "cls"])
    p.add_argument("pred")
    p.add_argument("gt")
    p.add_argument("--classes", default="1", help="comma-separated class ids (dice)")
    p.add_argument("--positive-class", type=int, default=1)
    p.add_argument("--ignore", type=int, default=evalkit.IGNORE_LABEL)
    p.set_defaults(func=cmd_metrics)

    p = sub("split", help="few-shot / nested-cv / train-val-test listings")
    p.add_argument("scheme", choices=["few-shot", "nested-cv", "train-val-test"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--fraction", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_split)

    p = sub("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser, by_name


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser, by_name = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "subcommand", None) is None:
            parser.print_help(sys.stderr)
            return EXIT_IO_USAGE
        if args.config:
            with open(args.config) as fh:
                defaults = json.load(fh)
            if not isinstance(defaults, dict):
                raise _UsageError(f"{args.config}: config must be a JSON object")
            by_name[args.subcommand].set_defaults(**defaults)
            args = parser.parse_args(argv)  # explicit flags still win
        if hasattr(args, "workers"):
            # fail fast on a malformed env var before doing real work
            resolve_workers(args.workers)
        return args.func(args)
    except _UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO_USAGE
    except OSError as exc:
        _emit({"error": "BadPath", "detail": str(exc)})
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO_USAGE
    except _IO_ERRORS as exc:
        _emit({"error": exc.code, "detail": str(exc)})
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO_USAGE
    except MuellerKitError as exc:
        _emit({"error": exc.code, "detail": str(exc)})
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONTRACT
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO_USAGE


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
