"""Command-line front end: ``leakycav <command> --config FILE``.

Exit codes: 0 success, 2 configuration error, 3 numerical error.
Every command writing tables emits ``<prefix><name>.csv`` plus a sidecar
``<prefix><name>.meta.json`` with the schema version, seed and RNG.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config
from .errors import ConfigError, DegenerateScheme, LeakyCavityError
from .fock_engine import DensityMatrix, exact_phase_space, output_count_distribution
from .noise_model import check_constraints, degenerate_residual, manifold_dimension
from .temporal_modes import (analytic_inner, build_modes, mode_budget, quad_inner, reflect,
                             spectrum, time_grid)
from .tomography import (UnbalancedConfig, cascaded_reconstruct, require_reconstructible,
                         simulate_quadrature_samples, tradeoff_curves, tradeoff_intersection,
                         unbalanced_monte_carlo)

SCHEMA_VERSION = 1
RNG_NAME = "numpy Philox4x64 via SeedSequence(seed, spawn_key=(point_index,))"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

GRID_COLUMNS = ["re_alpha", "im_alpha", "re_beta", "im_beta", "estimate", "stderr", "exact"]


def point_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-mode stream for grid point ``index``; independent of evaluation order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_table(cfg: ExperimentConfig, name: str, columns, rows, meta: dict) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, f"{cfg.prefix}{name}.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    full = {"schema_version": SCHEMA_VERSION, "package_version": __version__,
            "table": name, "columns": list(columns), "seed": cfg.seed, "rng": RNG_NAME,
            "config": cfg.echo(), **meta}
    with open(os.path.join(cfg.out_dir, f"{cfg.prefix}{name}.meta.json"), "w") as fh:
        json.dump(full, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path


def _complex_fields(name: str, z: complex):
    return [(f"re_{name}", z.real), (f"im_{name}", z.imag)]


def cmd_coeffs(cfg: ExperimentConfig, args) -> int:
    c = cfg.cavity
    report = check_constraints(c)
    budget = mode_budget(c)
    rows = [("gamma_total", c.gamma_total), ("omega_cav", c.omega_cav)]
    for key in ("t_c", "t_o", "r_o"):
        rows += _complex_fields(key, getattr(c, key))
    for k, (ac, ao) in enumerate(zip(c.a_c, c.a_o)):
        rows += _complex_fields(f"a_c{k + 1}", ac) + _complex_fields(f"a_o{k + 1}", ao)
    rows += [("residual_decay", report.decay), ("residual_unitarity", report.unitarity),
             ("residual_cross", report.cross), ("degenerate_residual", degenerate_residual(c)),
             ("eta_ext", budget.eta_ext), ("eta_ref_under", budget.eta_ref_under),
             ("eta_ref_over", budget.eta_ref_over)]
    for key in ("epsilon", "phase_phi", "phase_chi"):
        v = getattr(budget, key)
        rows.append((key, math.nan if v is None else v))
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {v:.10g}")
    if budget.zero_reflection:
        print("degenerate cavity: the matched input mode is not reflected into the CAOM")
    write_table(cfg, "coeffs", ["name", "value"], rows,
                {"constraints_passed": report.passed, "zero_reflection": budget.zero_reflection})
    return EXIT_OK if report.passed else EXIT_NUMERIC


def cmd_check(cfg: ExperimentConfig, args) -> int:
    c = cfg.cavity
    report = check_constraints(c)
    dim = manifold_dimension(c)
    deg = degenerate_residual(c)
    print(f"decay residual      {report.decay:.3e}")
    print(f"unitarity residual  {report.unitarity:.3e}")
    print(f"cross residual      {report.cross:.3e}")
    print(f"manifold dimension  {dim}")
    print(f"degenerate residual {deg:.3e}")
    print("constraints " + ("PASS" if report.passed else "FAIL") + f" (tol {report.tol:g})")
    return EXIT_OK if report.passed else EXIT_NUMERIC


def cmd_modes(cfg: ExperimentConfig, args) -> int:
    c = cfg.cavity
    caom, mim, aom = build_modes(c)
    budget = mode_budget(c)
    grid = time_grid(c.gamma_total)
    u_c, u_m, u_a = caom.sample(grid), mim.sample(grid), aom.sample(grid)
    refl = reflect(c, mim, grid).sample(grid)
    expected = math.sqrt(budget.eta_ref_under) * u_c + math.sqrt(budget.eta_ref_over) * u_a
    residual = math.sqrt(abs(quad_inner(refl - expected, refl - expected, grid)))
    summary = {
        "norm_caom_quad": abs(quad_inner(u_c, u_c, grid)),
        "norm_aom_quad": abs(quad_inner(u_a, u_a, grid)),
        "overlap_quad": abs(quad_inner(u_c, u_a, grid)),
        "norm_caom_exact": abs(analytic_inner(caom, caom)),
        "norm_aom_exact": abs(analytic_inner(aom, aom)),
        "overlap_exact": abs(analytic_inner(caom, aom)),
        "reflect_residual": residual,
    }
    for k, v in summary.items():
        print(f"{k:<18} {v:.3e}")
    omega = c.omega_cav + c.gamma_total * np.linspace(-5.0, 5.0, 201)
    sc, sa = spectrum(caom, omega), spectrum(aom, omega)
    rows = [(t, *_ri(a), *_ri(b), *_ri(d), *_ri(e)) for t, a, b, d, e in zip(grid, u_c, u_m, u_a, refl)]
    write_table(cfg, "modes",
                ["t", "re_caom", "im_caom", "re_mim", "im_mim", "re_aom", "im_aom",
                 "re_reflected_mim", "im_reflected_mim"], rows, {"summary": summary})
    write_table(cfg, "spectra", ["omega", "caom", "aom"], zip(omega, sc, sa), {})
    return EXIT_OK


def _ri(z):
    return z.real, z.imag


def cmd_tradeoff(cfg: ExperimentConfig, args) -> int:
    rows = tradeoff_curves(cfg.eta_c, cfg.s)
    root, value = tradeoff_intersection(cfg.eta_c, cfg.s)
    print(f"intersection eta_ext = {root:.10f}, xi = epsilon = {value:.10f}")
    write_table(cfg, "tradeoff", ["eta_ext", "xi", "epsilon"], rows,
                {"intersection": {"eta_ext": root, "value": value}})
    return EXIT_OK


def cmd_simulate_counts(cfg: ExperimentConfig, args) -> int:
    budget = mode_budget(cfg.cavity)
    dist = output_count_distribution(budget, cfg.state(), cfg.beta, cfg.eta_c, cfg.tail_tol)
    counts = dist.sample(cfg.events, point_rng(cfg.seed, 0))
    freq = np.bincount(counts, minlength=dist.probs.size) / cfg.events
    rows = [(n, p, f) for n, (p, f) in enumerate(zip(dist.probs, freq))]
    print(f"mean count exact {dist.mean:.6f}, sampled {counts.mean():.6f} ({cfg.events} events)")
    write_table(cfg, "counts", ["n", "probability", "frequency"], rows,
                {"events": cfg.events, "beta": str(cfg.beta)})
    return EXIT_OK


def _unbalanced_point(task):
    index, alpha, budget, elems, cfg = task
    rho = DensityMatrix(elems)
    ucfg = UnbalancedConfig(cfg.s, cfg.eta_c, budget)
    beta = budget.cavity_to_lo_amplitude(alpha)
    dist = output_count_distribution(budget, rho, beta, cfg.eta_c, cfg.tail_tol)
    counts = dist.sample(cfg.events, point_rng(cfg.seed, index))
    est, err = unbalanced_monte_carlo(counts, alpha, ucfg)
    return (alpha.real, alpha.imag, beta.real, beta.imag, est, err,
            exact_phase_space(rho, alpha, cfg.s, cfg.tail_tol))


def _cascaded_point(task):
    index, alpha, budget, elems, cfg = task
    rho = DensityMatrix(elems)
    beta = budget.cavity_to_lo_amplitude(alpha)
    x = simulate_quadrature_samples(budget, rho, beta, cfg.eta_c, cfg.events,
                                    point_rng(cfg.seed, index), r=cfg.r)
    est, err = cascaded_reconstruct(x, alpha, cfg.s, budget.eta_ext * cfg.eta_c)
    return (alpha.real, alpha.imag, beta.real, beta.imag, est, err,
            exact_phase_space(rho, alpha, cfg.s, cfg.tail_tol))


def _run_grid(cfg: ExperimentConfig, args, name: str, worker) -> int:
    budget = mode_budget(cfg.cavity)
    rho = cfg.state()
    points = cfg.grid.points()
    degenerate = budget.zero_reflection
    if degenerate:
        points = [0j]
    tasks = [(i, a, budget, rho.elems, cfg) for i, a in enumerate(points)]
    start = time.perf_counter()
    if args.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(worker, tasks, chunksize=max(1, len(tasks) // (4 * args.workers))))
    else:
        rows = [worker(t) for t in tasks]
    meta = {"grid_points": len(points), "events_per_point": cfg.events,
            "degenerate": degenerate,
            "eta_ext": budget.eta_ext, "eta_ref_under": budget.eta_ref_under,
            "eta_ref_over": budget.eta_ref_over, "epsilon": budget.epsilon}
    path = write_table(cfg, name, GRID_COLUMNS, rows, meta)
    inside = sum(abs(r[4] - r[6]) <= 3 * r[5] for r in rows)
    print(f"wrote {path}: {len(rows)} points, {inside / len(rows):.1%} within 3 stderr "
          f"of the exact value ({time.perf_counter() - start:.1f} s)")
    if degenerate:
        try:
            require_reconstructible(budget)
        except DegenerateScheme as exc:
            print(f"error: {exc}; only the origin row was written", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_figure4(cfg: ExperimentConfig, args) -> int:
    return _run_grid(cfg, args, "figure4", _unbalanced_point)


def cmd_cascaded(cfg: ExperimentConfig, args) -> int:
    return _run_grid(cfg, args, "cascaded", _cascaded_point)


COMMANDS = {
    "coeffs": cmd_coeffs,
    "check": cmd_check,
    "modes": cmd_modes,
    "tradeoff": cmd_tradeoff,
    "simulate-counts": cmd_simulate_counts,
    "figure4": cmd_figure4,
    "cascaded": cmd_cascaded,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leakycav",
                                     description="Leaky-cavity input-output simulations.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI experiment file")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", default=None, help="output directory (overrides config)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out_dir"] = args.out
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        if overrides:
            cfg = ExperimentConfig(**{**cfg.__dict__, **overrides})
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LeakyCavityError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
