"""Command line entry point.

Subcommands:

  generate   build a patched surface from a config and export OBJ + CSV
  surgery    apply branch-point cuts from the config to a generated surface
  distance   fast-march geodesic distance over an exported OBJ
  validate   reimport an export and run the structural checks

Exit codes: 0 success, 1 configuration error, 2 numerical failure
(non-convergence, unsolvable quad, grid too coarse).
"""
from __future__ import annotations

import argparse
import logging
import sys

from .amsler import (
    GridTooCoarseError,
    IterationConfig,
    NonConvergenceError,
    SectorSpec,
    patch_sectors,
    symmetric_angles,
)
from .geodesic import fast_march
from .io import (
    ConfigError,
    build_report,
    export_mesh,
    import_mesh,
    parse_config,
    trimesh_from_obj,
    write_report,
)
from .lelieuvre import QuadError
from .mesh import validate_complex
from .surgery import insert_branch_point

logger = logging.getLogger("ksurf")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="path to a YAML run configuration")
    p.add_argument("--out", help="output OBJ path (overrides the config)")
    p.add_argument("--tol", type=float, help="iteration tolerance override")
    p.add_argument("--epsilon", type=float, help="target curvature deviation override")
    p.add_argument("--sectors", type=int, dest="n_sectors",
                   help="half the number of sectors around the center")
    p.add_argument("--grid", help="grid size as I or I,J")
    p.add_argument("--quiet", action="store_true", help="log warnings only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ksurf",
        description="discrete surfaces of prescribed negative Gaussian curvature",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="generate and export a patched surface")
    _add_common(p_gen)

    p_sur = sub.add_parser("surgery", help="generate, then insert branch points")
    _add_common(p_sur)

    p_dist = sub.add_parser("distance", help="geodesic distance over an exported OBJ")
    p_dist.add_argument("--mesh", required=True, help="input OBJ path")
    p_dist.add_argument("--source", action="append", type=int, default=None,
                        help="source vertex index (repeatable; default 0)")
    p_dist.add_argument("--out", help="output CSV path (default: stdout)")
    p_dist.add_argument("--quiet", action="store_true")

    p_val = sub.add_parser("validate", help="structural checks on an export")
    p_val.add_argument("--mesh", required=True, help="input OBJ path")
    p_val.add_argument("--csv", required=True, help="matching CSV sidecar")
    p_val.add_argument("--quiet", action="store_true")
    return parser


def _load_config(args) -> "RunConfig":
    from .io import RunConfig  # local to keep module import light

    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        cfg = parse_config(text)
    else:
        cfg = parse_config("")
    if args.tol is not None:
        if args.tol <= 0:
            raise ConfigError(f"--tol must be positive, got {args.tol!r}")
        cfg.tol = args.tol
    if args.epsilon is not None:
        if args.epsilon < 0:
            raise ConfigError(f"--epsilon must be nonnegative, got {args.epsilon!r}")
        from .amsler import auto_schedule
        cfg.curvature = cfg.curvature.with_epsilon(args.epsilon)
        cfg.schedule = auto_schedule(args.epsilon)
    if args.n_sectors is not None:
        if args.n_sectors < 2:
            raise ConfigError(f"--sectors must be at least 2, got {args.n_sectors}")
        cfg.n = args.n_sectors
        cfg.angles = None
    if args.grid is not None:
        parts = args.grid.split(",")
        try:
            sizes = [int(p) for p in parts]
        except ValueError:
            raise ConfigError(f"--grid expects I or I,J, got {args.grid!r}")
        if len(sizes) == 1:
            cfg.I = cfg.J = sizes[0]
        elif len(sizes) == 2:
            cfg.I, cfg.J = sizes
        else:
            raise ConfigError(f"--grid expects I or I,J, got {args.grid!r}")
        if cfg.I < 1 or cfg.J < 1:
            raise ConfigError(f"--grid sizes must be at least 1, got {args.grid!r}")
    if args.out:
        cfg.out_mesh = args.out
        cfg.out_csv = args.out.rsplit(".", 1)[0] + ".csv"
        cfg.out_report = args.out.rsplit(".", 1)[0] + ".report.txt"
    return cfg


def _generate_complex(cfg):
    spec = SectorSpec(u_max=cfg.u_max, v_max=cfg.v_max, I=cfg.I, J=cfg.J)
    angles = cfg.angles if cfg.angles is not None else symmetric_angles(cfg.n)
    return patch_sectors(angles, spec, cfg.curvature, cfg.iteration_config())


def _export_all(cx, cfg) -> None:
    export_mesh(cx, cfg.out_mesh, cfg.out_csv)
    report = build_report(cx)
    write_report(report, cfg.out_report)
    logger.info("report written to %s", cfg.out_report)


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    cx = _generate_complex(cfg)
    _export_all(cx, cfg)
    return EXIT_OK


def cmd_surgery(args) -> int:
    cfg = _load_config(args)
    if not cfg.surgery:
        raise ConfigError("surgery: config lists no cuts")
    cx = _generate_complex(cfg)
    for cut in cfg.surgery:
        cx = insert_branch_point(cx, cut, cfg.curvature, cfg.iteration_config())
    _export_all(cx, cfg)
    return EXIT_OK


def cmd_distance(args) -> int:
    mesh = trimesh_from_obj(args.mesh)
    raw = args.source if args.source else [0]
    sources = []
    for s in raw:
        if not 0 <= s < mesh.n_vertices:
            raise ConfigError(
                f"--source {s} out of range for {mesh.n_vertices} vertices")
        sources.append((s, 0.0))
    result = fast_march(mesh, sources)
    lines = ["vertex_index,D"]
    for v in range(mesh.n_vertices):
        lines.append("%d,%.17g" % (v, result.d[v]))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
        logger.info("distances for %d vertices written to %s",
                    mesh.n_vertices, args.out)
    else:
        sys.stdout.write(text)
    if result.unreachable:
        logger.warning("%d vertices unreachable from the sources",
                       len(result.unreachable))
    return EXIT_OK


def cmd_validate(args) -> int:
    cx = import_mesh(args.mesh, args.csv)
    report = validate_complex(cx)
    sys.stdout.write(str(report))
    if not report.passed:
        logger.error("structural validation failed")
        return EXIT_NUMERICAL
    diag = build_report(cx)
    sys.stdout.write(diag.to_text())
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers = {
        "generate": cmd_generate,
        "surgery": cmd_surgery,
        "distance": cmd_distance,
        "validate": cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except (NonConvergenceError, QuadError, GridTooCoarseError) as exc:
        logger.error("%s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
