"""Command-line pipeline runner.

Subcommands: ``forward``, ``reconstruct``, ``kernel-map``, ``phantom-render``
and ``selftest``. Exit codes: 0 success, 1 invalid input, 2 failed numerical
acceptance.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import _backend
from .config import ConfigError, RunConfig, load_config
from .forward import Phantom, eval_phantom, forward_data, wave_from_means_even, wave_from_means_odd
from .geometry import domain_from_spec
from .inversion import (
    make_grid,
    reconstruct_means,
    reconstruction_error,
    universal_backprojection_wave,
)
from .io import grid_image, load_data, save_data, save_grid, write_csv, write_json, write_pgm
from .kernels import KernelEvaluator, kernel_k

EXIT_OK, EXIT_INVALID, EXIT_ACCEPTANCE = 0, 1, 2


def build(cfg: RunConfig):
    """Domain and phantom of a config, validated against each other."""
    try:
        domain = domain_from_spec(cfg.domain)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("domain", str(exc)) from exc
    if domain.dimension != cfg.dimension:
        raise ConfigError("domain", "dimension differs from 'dimension'")
    try:
        phantom = Phantom(cfg.phantom["bumps"], cfg.dimension)
        phantom.check_inside(domain)
    except ValueError as exc:
        raise ConfigError("phantom", str(exc)) from exc
    return domain, phantom


def run_forward(cfg: RunConfig, out_dir) -> Path:
    """Spherical means (or wave data for the wave pipeline) written to ``out_dir``."""
    domain, phantom = build(cfg)
    data = forward_data(phantom, domain, cfg.boundary_res, cfg.radial_res, check=False)
    if cfg.pipeline == "wave":
        if cfg.dimension % 2:
            data = wave_from_means_odd(data)
        else:
            times = None
            if cfg.time_res:
                times = (4.0 * data.radii[-1], cfg.time_res)
            data = wave_from_means_even(data, times=times)
    return save_data(data, out_dir)


def run_reconstruct(cfg: RunConfig, data_dir, out_dir) -> dict:
    """Reconstruct from a data directory; writes CSV, PGM and ``report.json``."""
    start = time.perf_counter()
    domain, phantom = build(cfg)
    data = load_data(data_dir)
    if data.dimension != cfg.dimension or domain_from_spec(data.domain_spec).to_spec() != domain.to_spec():
        raise ConfigError("domain", "data directory was generated for a different domain")
    expected = "wave" if cfg.pipeline == "wave" else "means"
    actual = "wave" if type(data).__name__ == "WaveData" else "means"
    if expected != actual:
        raise ConfigError("pipeline", f"data directory holds {actual} data")
    grid = make_grid(domain, cfg.grid_res)
    info: dict = {}
    if actual == "wave":
        recon = universal_backprojection_wave(data, domain, grid, cfg.dimension, cfg.variant, info=info)
    else:
        recon = reconstruct_means(data, domain, grid, cfg.dimension, cfg.variant)
    truth = grid.with_values(eval_phantom(phantom, grid.interior_points()))
    err = reconstruction_error(truth, recon)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_grid(recon, out / "recon.csv")
    write_pgm(out / "recon.pgm", grid_image(recon))
    report = dict(err)
    report.update(info)
    report["runtime"] = time.perf_counter() - start
    report["backend"] = _backend.BACKEND
    write_json(out / "report.json", report)
    return report


def run_kernel_map(cfg: RunConfig, out_dir) -> Path:
    """``k(x0, .)`` on a 2-D slice through ``x0`` (first two coordinates)."""
    domain = domain_from_spec(cfg.domain)
    ev = KernelEvaluator(domain, cfg.dimension, cfg.kernel_route)
    x0 = np.asarray(cfg.kernel_x0 or np.zeros(cfg.dimension), dtype=float)
    if not domain.contains(x0):
        raise ConfigError("kernel.x0", "must lie inside the domain")
    lo, hi = (np.asarray(v, float) for v in domain.bounding_box)
    m = cfg.grid_res
    xs = lo[0] + (np.arange(m) + 0.5) * (hi[0] - lo[0]) / m
    ys = lo[1] + (np.arange(m) + 0.5) * (hi[1] - lo[1]) / m
    rows = []
    for y in ys:
        for x in xs:
            p = x0.copy()
            p[0], p[1] = x, y
            val = np.nan
            if domain.contains(p) and not np.allclose(p, x0):
                try:
                    val = kernel_k(ev, x0, p)
                except ValueError:
                    pass
            rows.append((x, y, val))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    arr = np.array(rows)
    write_csv(out / "kernel_map.csv", arr, ["x", "y", "k"])
    img = np.nan_to_num(arr[:, 2].reshape(m, m))[::-1]
    write_pgm(out / "kernel_map.pgm", img)
    return out / "kernel_map.csv"


def run_phantom_render(cfg: RunConfig, out_dir) -> Path:
    domain, phantom = build(cfg)
    grid = make_grid(domain, cfg.grid_res)
    img = grid.with_values(eval_phantom(phantom, grid.interior_points()))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_grid(img, out / "phantom.csv")
    write_pgm(out / "phantom.pgm", grid_image(img))
    return out / "phantom.csv"


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sphmean", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_config=True):
        sp.add_argument("--config", required=needs_config, help="TOML run configuration")
        sp.add_argument("--out", help="output directory (default: config 'output')")
        sp.add_argument("--threads", type=int, default=None, help="worker threads")

    common(sub.add_parser("forward", help="generate spherical-mean or wave data"))
    rec = sub.add_parser("reconstruct", help="reconstruct from a data directory")
    common(rec)
    rec.add_argument("--data", help="data directory (default: <out>/data)")
    common(sub.add_parser("kernel-map", help="dump the kernel on a 2-D slice"))
    common(sub.add_parser("phantom-render", help="render the phantom on the grid"))
    st = sub.add_parser("selftest", help="run the acceptance criteria")
    common(st, needs_config=False)
    st.add_argument("--level", choices=("quick", "full"), default="quick")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "selftest":
            _backend.set_threads(args.threads)
            from .acceptance import run_suite

            results = run_suite(args.level)
            for r in results:
                print(r.line())
            report = [r.as_dict() for r in results]
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                write_json(Path(args.out) / "selftest.json", report)
            return EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPTANCE
        cfg = load_config(args.config)
        threads = args.threads if args.threads is not None else cfg.threads
        _backend.set_threads(threads)
        out = Path(args.out or cfg.output)
        if args.command == "forward":
            path = run_forward(cfg, out / "data")
            print(f"wrote {path}")
        elif args.command == "reconstruct":
            data_dir = Path(args.data) if args.data else out / "data"
            if cfg.pipeline == "kernel-map":
                print(f"wrote {run_kernel_map(cfg, out)}")
                return EXIT_OK
            report = run_reconstruct(cfg, data_dir, out)
            print(json.dumps(report, sort_keys=True))
        elif args.command == "kernel-map":
            print(f"wrote {run_kernel_map(cfg, out)}")
        elif args.command == "phantom-render":
            print(f"wrote {run_phantom_render(cfg, out)}")
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
