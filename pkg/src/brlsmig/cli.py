"""Command-line front end.

Subcommands::

    brlsmig model   --config cfg [--out DIR] [--seed N] [--quiet]
    brlsmig adjoint --config cfg [--out DIR] [--seed N] [--quiet]
    brlsmig lsm     --config cfg [--out DIR] [--seed N] [--quiet]
    brlsmig brls    --config cfg [--out DIR] [--seed N] [--quiet]
    brlsmig dottest --config cfg [--out DIR] [--seed N] [--quiet]
    brlsmig render  GRID OUT.pgm [--clip PCT] [--quiet]

Exit codes: 0 success, 1 usage error (bad flags, config, or files),
2 numerical failure (failed dot test, singular system, non-finite solve).

``model`` synthesizes and writes the velocity, truth reflectivity, and one
gather grid per shot.  The imaging commands read those files back, write
the image grid, a key=value report, and matplotlib figures alongside.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .gridfile import GridFile, GridFileError, read_grid, write_grid, write_pgm
from .linop import CorruptedAdjoint, IdentityOperator, dot_test, stack_rows
from .metrics import (
    RunReport,
    data_misfit,
    format_report,
    model_error,
    scale_to_data,
    vertical_band,
)
from .rls import DataBlock, brls_solve, make_window_plan
from .solver import CgConfig, SingularSystemError, cgls
from .synth import make_velocity, synthesize_data
from .wem import Grid2D, Reflectivity, survey_operators

USAGE_ERROR = 1
NUMERICAL_ERROR = 2
DOT_TEST_LIMIT = 1e-8


def _say(quiet: bool, *parts) -> None:
    if not quiet:
        print(*parts)


def _gather_path(out_dir: Path, shot: int) -> Path:
    return out_dir / f"gather_{shot:04d}.brg"


def _apply_seed(cfg: RunConfig, seed) -> RunConfig:
    if seed is None:
        return cfg
    return RunConfig(
        spec=cfg.spec.with_(seed=int(seed)),
        out_dir=cfg.out_dir,
        corrupt_adjoint=cfg.corrupt_adjoint,
    )


def _resolve_out(cfg: RunConfig, out_flag) -> Path:
    out = Path(out_flag) if out_flag else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_model(cfg: RunConfig, out_dir: Path, quiet: bool) -> int:
    spec = cfg.spec
    blocks, truth = synthesize_data(spec)
    velocity = make_velocity(spec)

    written = []
    vel_grid = GridFile(
        values=velocity.values, d1=spec.dz, d2=spec.dx, kind="velocity"
    )
    path = out_dir / "velocity.brg"
    write_grid(path, vel_grid)
    written.append(path)

    refl_grid = GridFile(
        values=truth.values, d1=spec.dz, d2=spec.dx, kind="reflectivity"
    )
    path = out_dir / "reflectivity.brg"
    write_grid(path, refl_grid)
    written.append(path)

    geometry = spec.geometry()
    for block in blocks:
        traces = block.data.reshape(geometry.receivers_per_shot, spec.n_t)
        first_rec = float(geometry.receiver_positions(block.block_index).min())
        gather = GridFile(
            values=traces.T,  # time is the fast axis
            d1=spec.dt,
            d2=spec.receiver_spacing * spec.dx,
            o2=first_rec * spec.dx,
            kind="gather",
        )
        path = _gather_path(out_dir, block.block_index)
        write_grid(path, gather)
        written.append(path)

    _say(quiet, f"# manifest: {len(written)} files")
    for p in written:
        _say(quiet, str(p))
    return 0


def _load_survey(cfg: RunConfig, out_dir: Path):
    """Rebuild operators from the config and read data grids from disk."""
    spec = cfg.spec
    velocity = make_velocity(spec)
    geometry = spec.geometry()
    ops = survey_operators(velocity, geometry, spec.wavelet(), spec.band)

    refl_path = out_dir / "reflectivity.brg"
    if not refl_path.exists():
        raise ConfigError(f"missing {refl_path}; run the 'model' command first")
    refl = read_grid(refl_path)
    truth = Reflectivity(
        Grid2D(refl.values.astype(np.float64), d1=refl.d1, d2=refl.d2)
    )

    blocks = []
    for i, op in enumerate(ops):
        path = _gather_path(out_dir, i)
        if not path.exists():
            raise ConfigError(f"missing {path}; run the 'model' command first")
        grid = read_grid(path)
        if grid.kind != "gather":
            raise GridFileError(f"{path}: expected a gather grid, got {grid.kind!r}")
        if grid.values.shape != (spec.n_t, geometry.receivers_per_shot):
            raise GridFileError(
                f"{path}: gather is {grid.values.shape}, config expects "
                f"({spec.n_t}, {geometry.receivers_per_shot})"
            )
        traces = grid.values.astype(np.float64).T
        blocks.append(DataBlock(block_index=i, operator=op, data=traces.ravel()))
    return velocity, blocks, truth


def _finish_image(
    cfg: RunConfig,
    out_dir: Path,
    quiet: bool,
    method: str,
    image: np.ndarray,
    blocks,
    truth,
    velocity,
    elapsed: float,
    per_window_iterations=None,
) -> RunReport:
    spec = cfg.spec
    band = vertical_band(spec.band, float(velocity.values.min()), float(velocity.values.max()))
    if not truth.values.any() and not image.any():
        err = 0.0  # zero survey: image matches the (zero) truth exactly
    else:
        err = model_error(image, truth, band=band)
    report = RunReport(
        method=method,
        data_misfit=data_misfit(blocks, image),
        model_error=err,
        wall_time=elapsed,
        per_window_iterations=per_window_iterations,
    )

    grid = GridFile(
        values=image.reshape(spec.nz, spec.nx), d1=spec.dz, d2=spec.dx, kind="image"
    )
    write_grid(out_dir / f"{method}.brg", grid)
    (out_dir / f"{method}_report.txt").write_text(
        format_report(report), encoding="utf-8"
    )

    from . import figures  # deferred: matplotlib is slow to import

    figures.save_grid_figure(
        grid.values,
        spec.dz,
        spec.dx,
        out_dir / f"{method}.png",
        title=f"{method} image",
    )
    if per_window_iterations is not None:
        figures.save_iterations_figure(
            per_window_iterations, out_dir / f"{method}_iterations.png"
        )

    _say(quiet, format_report(report).rstrip())
    return report


def cmd_adjoint(cfg: RunConfig, out_dir: Path, quiet: bool) -> int:
    velocity, blocks, truth = _load_survey(cfg, out_dir)
    t0 = time.perf_counter()
    image = np.zeros(blocks[0].operator.model_dim)
    for block in blocks:
        image += block.operator.adjoint(block.data)
    image *= scale_to_data(blocks, image)
    _finish_image(
        cfg, out_dir, quiet, "adjoint", image, blocks, truth, velocity,
        time.perf_counter() - t0,
    )
    return 0


def cmd_lsm(cfg: RunConfig, out_dir: Path, quiet: bool) -> int:
    spec = cfg.spec
    velocity, blocks, truth = _load_survey(cfg, out_dir)
    t0 = time.perf_counter()
    op = stack_rows([b.operator for b in blocks])
    d = np.concatenate([b.data for b in blocks])
    config = CgConfig(
        max_iterations=spec.lsm_iterations,
        tolerance=spec.cg_tolerance,
        lam=spec.lam,
    )
    image, _ = cgls(op, d, config)
    if not np.all(np.isfinite(image)):
        raise FloatingPointError("lsm: solver produced a non-finite image")
    _finish_image(
        cfg, out_dir, quiet, "lsm", image, blocks, truth, velocity,
        time.perf_counter() - t0,
    )
    return 0


def cmd_brls(cfg: RunConfig, out_dir: Path, quiet: bool) -> int:
    spec = cfg.spec
    velocity, blocks, truth = _load_survey(cfg, out_dir)
    t0 = time.perf_counter()
    plan = make_window_plan(spec.n_shots, spec.q, spec.k)
    config = CgConfig(
        max_iterations=spec.cg_max_iterations,
        tolerance=spec.cg_tolerance,
        lam=spec.lam,
    )
    result = brls_solve(blocks, plan, config)
    iterations = [r.iterations_run for r in result.window_reports]
    _finish_image(
        cfg, out_dir, quiet, "brls", result.model, blocks, truth, velocity,
        time.perf_counter() - t0, per_window_iterations=iterations,
    )
    return 0


def cmd_dottest(cfg: RunConfig, out_dir: Path, quiet: bool) -> int:
    spec = cfg.spec
    if cfg.identity_smoke:
        # smoke mode: exercises the reporting path with exact-zero errors
        ops = [IdentityOperator(spec.nz * spec.nx) for _ in range(spec.n_shots)]
        named = [(f"identity_operator[{i}]", op) for i, op in enumerate(ops)]
    else:
        velocity = make_velocity(spec)
        geometry = spec.geometry()
        ops = survey_operators(velocity, geometry, spec.wavelet(), spec.band)
        if cfg.corrupt_adjoint:
            # verification hook: flip one sign at a well-illuminated image
            # cell (mid depth, under the middle shot)
            cell = (spec.nz // 2) * spec.nx + geometry.shot_positions[len(ops) // 2]
            ops = [CorruptedAdjoint(ops[0], component=cell), *ops[1:]]
        named = [(f"shot_operator[{i}]", op) for i, op in enumerate(ops)]

    worst = 0.0
    failed = False
    named.append(("survey_operator", stack_rows(ops)))
    for name, op in named:
        rel = max(dot_test(op, spec.seed + trial)[2] for trial in range(3))
        worst = max(worst, rel)
        status = "ok" if rel < DOT_TEST_LIMIT else "FAIL"
        failed = failed or rel >= DOT_TEST_LIMIT
        _say(quiet, f"{name}: relative_error={rel:.3e} {status}")
    _say(quiet, f"worst relative_error={worst:.3e}")
    if failed:
        print("dot test FAILED", file=sys.stderr)
        return NUMERICAL_ERROR
    return 0


def cmd_render(grid_path: str, out_path: str, clip: float, quiet: bool) -> int:
    grid = read_grid(grid_path)
    write_pgm(out_path, grid.values, clip_percentile=clip)
    _say(quiet, f"{out_path}: {grid.n2}x{grid.n1} pixels (clip {clip}%)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brlsmig",
        description="matrix-free block-row recursive least-squares imaging",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--quiet", action="store_true")
        return p

    add_run_command("model", "synthesize velocity, reflectivity, and shot gathers")
    add_run_command("adjoint", "migrate by applying the adjoint once")
    add_run_command("lsm", "least-squares migration (batch CGLS)")
    add_run_command("brls", "block-row recursive least-squares migration")
    add_run_command("dottest", "verify forward/adjoint consistency")

    render = sub.add_parser("render", help="render a grid file to 8-bit PGM")
    render.add_argument("grid", help="input grid file")
    render.add_argument("out", help="output PGM path")
    render.add_argument(
        "--clip", type=float, default=98.0,
        help="clip percentile of |values| (default 98)",
    )
    render.add_argument("--quiet", action="store_true")
    return parser


_RUN_COMMANDS = {
    "model": cmd_model,
    "adjoint": cmd_adjoint,
    "lsm": cmd_lsm,
    "brls": cmd_brls,
    "dottest": cmd_dottest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; remap (0 stays 0 for --help)
        return 0 if exc.code == 0 else USAGE_ERROR

    try:
        if args.command == "render":
            return cmd_render(args.grid, args.out, args.clip, args.quiet)
        cfg = _apply_seed(load_config(args.config), args.seed)
        out_dir = _resolve_out(cfg, args.out)
        return _RUN_COMMANDS[args.command](cfg, out_dir, args.quiet)
    except (SingularSystemError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR
    except (ValueError, OSError) as exc:
        # ConfigError and GridFileError are ValueErrors: bad inputs
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
