"""Command-line entry point: experiment orchestration and result persistence.

Usage: ``hallcond <experiment> --config <path> [--out <dir>] [--seed <u64>]
[--threads <n>] [--plot]``.  Reports are written as JSON with the fully
resolved configuration and a config hash; convergence series go to CSV
(RFC 4180, header row).  Timestamps live in a separate meta file so the main
report is byte-identical across reruns of the same configuration.  Exit codes:
0 experiment passed its acceptance checks, 1 failed, 2 error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .config import EXPERIMENTS, RunConfig, load_config
from .errors import ConfigError, HallcondError
from .lattice import Boundary

# -- experiment implementations -------------------------------------------------


def _free_system(cfg: RunConfig):
    from .models import build_one_body
    from .spectral import fermi_sea
    lat = cfg.lattice()
    spec = cfg.model_spec()
    h = build_one_body(spec, lat)
    sea = fermi_sea(h, cfg.experiment["mu"])
    return lat, spec, h, sea


def _mb_system(cfg: RunConfig):
    from .models import build_interaction
    from .odmap import many_body_context
    from .spectral import ground_state
    from .weightfn import build_weight
    lat = cfg.lattice()
    spec = cfg.model_spec()
    H = build_interaction(spec, lat)
    gs = ground_state(H)
    wp = cfg.weight_params
    diam = float(gs.eig.energies[-1] - gs.eig.energies[0])
    ds = wp["ds_factor"] / gs.gap if wp["ds_factor"] else min(0.002 / diam, 0.04 / gs.gap)
    T = wp["t_factor"] / gs.gap if wp["t_factor"] else None
    W = build_weight(gs.gap, smoothness_order=wp["smoothness_order"], T=T, ds=ds)
    return lat, spec, H, gs, W, many_body_context(H, gs, W)


def run_conductance(cfg: RunConfig):
    from .conductance import chern_fhs, hall_conductance_free, hall_conductance_mb
    exp, tol = cfg.experiment, cfg.tolerances
    shift = tuple(exp["shift"])
    if exp["engine"] == "free":
        lat, spec, h, sea = _free_system(cfg)
        rep = hall_conductance_free(sea, lat, shift=shift)
        clean = replace(spec, disorder_strength=0.0)
        C = chern_fhs(clean, grid=exp["chern_grid"], mu=exp["mu"])
        quant = abs(2.0 * np.pi * rep.sigma - C)
        passed = bool(quant <= tol["quantization"])
        results = {"sigma": rep.sigma, "chern": C, "converged": rep.converged,
                   "quantization_residual": quant, "report": rep.to_dict()}
    else:
        lat, spec, H, gs, W, ctx = _mb_system(cfg)
        rep = hall_conductance_mb(ctx, shift=shift)
        resum = rep.extras["resummation_residual"]
        passed = bool(resum <= tol["resummation"])
        results = {"sigma": rep.sigma, "resummation_residual": resum,
                   "report": rep.to_dict()}
    series = {"convergence": (["radius", "value", "increment"], rep.convergence)}
    return passed, results, series


def run_equivalence(cfg: RunConfig):
    from .conductance import hall_conductance_free, hall_conductivity_position_free
    exp, tol = cfg.experiment, cfg.tolerances
    lat, spec, h, sea = _free_system(cfg)
    sw = hall_conductance_free(sea, lat)
    pos = hall_conductivity_position_free(sea, lat, k=exp["box_k"])
    diff = abs(sw.sigma - pos.convergence[-1][1])
    passed = bool(diff <= tol["equivalence"])
    results = {"sigma_switch": sw.sigma,
               "sigma_position": pos.convergence[-1][1],
               "difference": diff,
               "switch_report": sw.to_dict(), "position_report": pos.to_dict()}
    series = {"position_series": (["k", "average", "increment"], pos.convergence)}
    return passed, results, series


def _default_window(lat):
    from .conductance import EDGE_MARGIN
    return max(1, lat.distance_to_edge((0, 0)) - EDGE_MARGIN)


def run_scan_eps(cfg: RunConfig):
    from .conductance import hall_conductance_free
    from .neass import linear_response_scan_free, linear_response_scan_mb
    exp, tol = cfg.experiment, cfg.tolerances
    eps_list = exp["eps_list"]
    if exp["engine"] == "free":
        lat, spec, h, sea = _free_system(cfg)
        R = exp["window_radius"] or _default_window(lat)
        scan = linear_response_scan_free(h, lat, eps_list, R, mu=exp["mu"])
        sigma = hall_conductance_free(sea, lat).sigma
    else:
        from .conductance import hall_conductance_mb
        lat, spec, H, gs, W, ctx = _mb_system(cfg)
        R = exp["window_radius"] or _default_window(lat)
        scan = linear_response_scan_mb(H, eps_list, R)
        sigma = hall_conductance_mb(ctx).extras["double_sum"]
    per_eps = [abs(dj / e - sigma) for e, dj in zip(scan.epsilons, scan.delta_j)
               if e != 0.0]
    exp_ok = (scan.residual_exponent >= tol["residual_exponent"])
    passed = bool(max(per_eps, default=0.0) <= tol["slope"] and exp_ok)
    results = {"slope": scan.slope, "sigma_reference": sigma,
               "worst_ratio_error": max(per_eps, default=0.0),
               "residual_exponent": scan.residual_exponent,
               "scan": scan.to_dict()}
    rows = [(e, dj, r) for e, dj, r in
            zip(scan.epsilons, scan.delta_j, scan.residuals)]
    return passed, results, {"scan": (["epsilon", "delta_j", "residual"], rows)}


def run_bloch(cfg: RunConfig):
    from .conductance import hall_conductance_free, stripe_current
    from .neass import perturbed_sea, perturbed_state
    exp, tol = cfg.experiment, cfg.tolerances
    k = exp["stripe_k"]
    if exp["engine"] == "free":
        lat, spec, h, sea = _free_system(cfg)
        sc = stripe_current(sea, h, lat, k)
        eps = exp["eps"]
        sea_eps = perturbed_sea(h, lat, eps, exp["mu"])
        contrast = stripe_current(sea_eps, h, lat, k)
        sigma = hall_conductance_free(sea, lat).sigma
        rel = abs(contrast["sum"] - sc["sum"] - eps * sigma) / max(abs(eps * sigma), 1e-300)
        results = {"stripe_average": sc["average"], "contrast_sum": contrast["sum"],
                   "expected_contrast": eps * sigma, "contrast_relative_error": rel,
                   "stripe": sc}
        passed = bool(abs(sc["average"]) <= tol["stripe"] and rel <= 0.1)
    else:
        lat, spec, H, gs, W, ctx = _mb_system(cfg)
        sc = stripe_current(gs, H, lat, k)
        results = {"stripe_average": sc["average"], "stripe": sc}
        passed = bool(abs(sc["average"]) <= tol["stripe"])
    series = {"stripe_series": (["k", "average", "sum"], sc["series"])}
    return passed, results, series


def run_pump(cfg: RunConfig):
    from .neass import charge_pump, delta_current_mb, perturbed_state
    from .spectral import ground_state
    from .models import build_interaction
    exp, tol = cfg.experiment, cfg.tolerances
    lat = cfg.lattice()
    H = build_interaction(cfg.model_spec(), lat)
    eps = exp["eps"]
    R = exp["window_radius"] or _default_window(lat)
    pump = charge_pump(H, eps, R)
    gs0 = ground_state(H, keep_spectrum=False)
    gse = perturbed_state(H, eps)
    dc = delta_current_mb(gse, gs0, H, R)
    sigma_ne = dc.value / eps
    sigma_cp = pump["delta_q"]
    diff = abs(sigma_ne - sigma_cp)
    passed = bool(diff <= tol["pump"])
    results = {"sigma_ne": sigma_ne, "sigma_cp": sigma_cp, "difference": diff,
               "delta_q": pump["delta_q"], "steps": pump["steps"]}
    return passed, results, {}


def run_verify_algebra(cfg: RunConfig):
    from .verify import run_suite
    lat = cfg.lattice()
    if lat.n_sites > 8:
        raise ConfigError("verify-algebra needs a lattice of at most 8 sites")
    m = cfg.sections["model"]
    rep = run_suite(lat.L1, lat.L2, t=m["t"], V=m["v"], mu=m["mu"],
                    seed=m["rng_seed"])
    matrix = {k: v["passed"] for k, v in rep.items() if isinstance(v, dict)}
    return bool(rep["passed"]), {"matrix": matrix, "detail": rep}, {}


def run_weight(cfg: RunConfig):
    from .models import bloch_gap
    from .weightfn import build_weight, verify_weight
    wp = cfg.weight_params
    g = bloch_gap(cfg.model_spec(), cfg.experiment["mu"])
    T = wp["t_factor"] / g if wp["t_factor"] else None
    ds = wp["ds_factor"] / g if wp["ds_factor"] else None
    W = build_weight(g, smoothness_order=wp["smoothness_order"], T=T, ds=ds)
    rep = verify_weight(W)
    return bool(rep["passed"]), {"weight_report": rep}, {}


def run_lga_invariance(cfg: RunConfig):
    from .lga import (conductance_invariance_test, gauge_circuit,
                      random_local_circuit)
    from .models import build_interaction
    exp, tol = cfg.experiment, cfg.tolerances
    lat = cfg.lattice()
    H = build_interaction(cfg.model_spec(), lat)
    rng = np.random.default_rng(cfg.sections["model"]["rng_seed"])
    thetas = {s: float(rng.uniform(0.0, 2.0 * np.pi)) for s in lat.sites()}
    gauge = conductance_invariance_test(H, circuit=gauge_circuit(H.space, thetas))
    circ = random_local_circuit(H.space, exp["lga_depth"], rng)
    local = conductance_invariance_test(H, circuit=circ)
    passed = bool(gauge["difference"] <= 1e-10 and
                  local["difference"] <= tol["invariance"])
    results = {"gauge_difference": gauge["difference"],
               "circuit_difference": local["difference"],
               "gap_original": local["gap_original"],
               "gap_transformed": local["gap_transformed"]}
    return passed, results, {}


_RUNNERS = {
    "conductance": run_conductance,
    "equivalence": run_equivalence,
    "scan-eps": run_scan_eps,
    "bloch": run_bloch,
    "pump": run_pump,
    "verify-algebra": run_verify_algebra,
    "weight": run_weight,
    "lga-invariance": run_lga_invariance,
}


# -- persistence -------------------------------------------------------------------

def _write_outputs(out_dir, report, series, plot=False):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "report.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    for name, (header, rows) in series.items():
        with open(os.path.join(out_dir, f"{name}.csv"), "w", newline="",
                  encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow(list(row))
    if plot and series:
        _write_svg(out_dir, series)
    return path


def _write_svg(out_dir, series):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    name, (header, rows) = next(iter(series.items()))
    xs = [row[0] for row in rows]
    ys = [row[1] for row in rows]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(xs, ys, "o-")
    ax.set_xlabel(header[0])
    ax.set_ylabel(header[1])
    ax.set_title(name)
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, f"{name}.svg"))
    plt.close(fig)


def run(cfg: RunConfig, out_dir: str = None, plot: bool = False) -> int:
    """Execute one experiment; returns the process exit code."""
    t0 = time.time()
    kind = cfg.experiment["kind"]
    runner = _RUNNERS[kind]
    try:
        passed, results, series = runner(cfg)
    except HallcondError:
        raise
    report = {
        "experiment": kind,
        "passed": passed,
        "results": _jsonable(results),
        "config": cfg.to_dict(),
        "provenance": {"config_hash": cfg.config_hash(),
                       "code_version": __version__},
    }
    if out_dir:
        _write_outputs(out_dir, report, series, plot=plot)
        meta = {"timestamp_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                "runtime_seconds": time.time() - t0}
        with open(os.path.join(out_dir, "run_meta.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        print(json.dumps(report, indent=2, sort_keys=True))
    print(f"{kind}: {'PASS' if passed else 'FAIL'} ({time.time() - t0:.1f}s)")
    return 0 if passed else 1


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and (np.isnan(obj) or np.isinf(obj)):
        return repr(obj)
    return obj


def _resolve_threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get("HALLCOND_THREADS")
    return int(env) if env else None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hallcond",
        description="Hall conductance experiments on finite lattice windows")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        cfg.sections["experiment"]["kind"] = args.experiment
        if args.seed is not None:
            cfg.sections["model"]["rng_seed"] = args.seed
        cfg = RunConfig(cfg.sections)
        threads = _resolve_threads(args.threads)
        if threads:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=threads):
                return run(cfg, args.out, plot=args.plot)
        return run(cfg, args.out, plot=args.plot)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HallcondError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
