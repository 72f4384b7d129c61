"""Command-line entry point: experiment orchestration and result emission.

Subcommands: simulate, linear, picard, uc, verify, diagnose.  Results land
in the output directory as CSV files (17-significant-digit floats, so byte
reproducibility follows from seed determinism) plus a summary.json.

Exit codes: 0 success, 2 configuration error, 3 numerical abort (blow-up,
CFL audit, contraction failure), 4 verification-suite failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Sequence

import numpy as np

from . import fields as data_families
from .diagnostics import (
    NormSpec,
    algebra_ratio,
    commutator_ratio,
    conservation_report,
    half_derivative_commutator_ratio,
    interpolation_ratio,
    norm,
    trilinear_ratio,
)
from .grid import RealField, make_grid
from .io import write_csv, write_json, write_snapshot
from .manifest import ManifestError, RunManifest, load_manifest
from .solver import (
    PicardDivergence,
    RunDiagnostics,
    SolverAbort,
    picard_solve,
    run,
)
from .stein import SteinConfig, phase_bound, refine_divergence, stein_derivative
from .uc import CutoffSpec, b1_indicator, domain_growth_study, moment_drift, persistence_scan
from .weights import WeightSpec, a2_statistic, beta, beta_audit, weight_field

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VERIFY = 4


def _pool_size() -> int:
    env = os.environ.get("BOZK_THREADS", "")
    if env.strip():
        try:
            return max(1, int(env))
        except ValueError:
            raise ManifestError(f"BOZK_THREADS is not an integer: {env!r}")
    return min(4, os.cpu_count() or 1)


def _say(quiet: bool, msg: str) -> None:
    if not quiet:
        print(msg)


def _series_rows(series) -> tuple[List[str], List[List]]:
    hs_labels = [f"hs_{s:g}" for s in series.hs]
    w_labels = [f"w_{lbl}" for lbl in series.weighted]
    header = ["t", "l2"] + hs_labels + ["zmode_linf_drift", "moment_x"] + w_labels
    drift = series.zero_mode_drift()
    rows = []
    for i in range(len(series.t)):
        row = [series.t[i], series.l2[i]]
        row += [series.hs[s][i] for s in series.hs]
        row += [drift[i], series.moment_x[i]]
        row += [series.weighted[lbl][i] for lbl in series.weighted]
        rows.append(row)
    return header, rows


def _cmd_simulate(m: RunManifest, out: Path, quiet: bool, linear_only: bool) -> int:
    grid = m.grid()
    phi = m.initial_data(grid)
    cfg = m.solver_config()
    if linear_only:
        from dataclasses import replace

        cfg = replace(cfg, nonlinear=False)
    diag = RunDiagnostics(hs_orders=m.hs_orders, weights=m.weights)
    result = run(phi, cfg, diag)
    header, rows = _series_rows(result.series)
    write_csv(out / "series.csv", header, rows)
    write_snapshot(out / "final.bozk", result.final)
    summary = {
        "subcommand": "linear" if linear_only else "simulate",
        "grid": {"nx": grid.nx, "ny": grid.ny, "lx": grid.lx, "ly": grid.ly},
        "mu": cfg.mu,
        "dt": cfg.dt,
        "t_final": result.series.t[-1],
        "records": len(result.series.t),
    }
    if cfg.mu == 0.0:
        rep = conservation_report(result.series)
        summary["conservation"] = {
            "l2_drift": rep.l2_drift,
            "zero_mode_drift": rep.zero_mode_drift,
            "moment_residual": rep.moment_residual,
        }
    write_json(out / "summary.json", summary)
    _say(quiet, f"wrote {out}/series.csv ({len(rows)} records)")
    return EXIT_OK


def _cmd_picard(m: RunManifest, out: Path, quiet: bool) -> int:
    grid = m.grid()
    phi = m.initial_data(grid)
    res = picard_solve(
        phi,
        m.picard_t_final,
        mu=m.picard_mu,
        max_iter=m.picard_max_iter,
        tol=m.picard_tol,
        n_nodes=m.picard_nodes,
    )
    write_csv(
        out / "picard_residuals.csv",
        ["iteration", "residual"],
        [[i + 1, r] for i, r in enumerate(res.residuals)],
    )
    write_snapshot(out / "final.bozk", res.final)
    write_json(
        out / "summary.json",
        {
            "subcommand": "picard",
            "iterations": res.iterations,
            "t_final": m.picard_t_final,
            "mu": m.picard_mu,
            "final_residual": res.residuals[-1],
        },
    )
    _say(quiet, f"picard converged in {res.iterations} iterations")
    return EXIT_OK


def _cmd_uc(m: RunManifest, out: Path, quiet: bool) -> int:
    grid = m.grid()
    phi = m.initial_data(grid)
    cut = CutoffSpec(m.uc_epsilon)
    report = b1_indicator(phi, m.uc_t, cut, levels=m.uc_levels)
    rows = []
    for i, lev in enumerate(report.levels):
        ratio = report.ratios[i - 1] if i > 0 else ""
        rows.append([i, lev.window_norm, ratio, report.verdict])
    write_csv(out / "uc_report.csv", ["level", "window_norm", "ratio", "verdict"], rows)

    table = persistence_scan(phi, m.solver_config(), m.uc_r_list, m.uc_s)
    header = ["t"] + [f"z_{r:g}" for r in m.uc_r_list]
    prows = [
        [table.t[i]] + [table.series[float(r)][i] for r in m.uc_r_list]
        for i in range(len(table.t))
    ]
    write_csv(out / "persistence.csv", header, prows)

    # the moment law holds for the mu = 0 flow; reuse the scan's own series
    md = moment_drift(table.raw) if m.mu == 0.0 else None

    summary = {
        "subcommand": "uc",
        "b1_verdict": report.verdict,
        "b1_ratios": report.ratios,
        "persistence": [
            {
                "r": row.r,
                "initial": row.initial,
                "peak": row.peak,
                "growth": row.growth,
                "flagged": row.flagged,
            }
            for row in table.rows
        ],
        "boundary_ratio": table.boundary_ratio,
    }
    if md is not None:
        summary["moment"] = {
            "slope": md.slope,
            "predicted": md.predicted,
            "rel_error": md.rel_error,
            "zero_crossings": md.zero_crossings,
        }

    if m.uc_doublings > 0:
        growth = domain_growth_study(
            lambda g: m.initial_data(g),
            grid,
            m.solver_config(),
            r_list=(2.0, 2.5),
            doublings=m.uc_doublings,
            cut=CutoffSpec(max(m.uc_epsilon, 16.0 * 2.0 * math.pi / grid.lx)),
        )
        gheader = ["length"] + [f"ind_{r:g}" for r in sorted(growth.factors)]
        grows = [
            [row.length] + [row.indicators[r] for r in sorted(growth.factors)]
            for row in growth.rows
        ]
        write_csv(out / "growth.csv", gheader, grows)
        summary["domain_growth"] = {
            "factors": {f"{r:g}": growth.factors[r] for r in growth.factors},
            "obstructed": {f"{r:g}": growth.obstructed[r] for r in growth.obstructed},
            "stable": {f"{r:g}": growth.stable[r] for r in growth.stable},
            "threshold": growth.threshold,
        }

    write_json(out / "summary.json", summary)
    _say(quiet, f"uc verdict: {report.verdict}")
    return EXIT_OK


def _cmd_diagnose(m: RunManifest, out: Path, quiet: bool) -> int:
    grid = m.grid()
    u = m.initial_data(grid)
    rows = [["l2", u.l2()]]
    for s in m.hs_orders:
        rows.append([NormSpec.hs(s).label(), norm(u, NormSpec.hs(s))])
    for w in m.weights:
        rows.append([NormSpec.l2w(w).label(), norm(u, NormSpec.l2w(w))])
    for r in m.uc_r_list:
        rows.append([NormSpec.l2r(r).label(), norm(u, NormSpec.l2r(r))])
        if m.uc_s >= 2 * r:
            rows.append([NormSpec.zsr(m.uc_s, r).label(), norm(u, NormSpec.zsr(m.uc_s, r))])
    write_csv(out / "diagnose.csv", ["norm", "value"], rows)
    write_json(out / "summary.json", {"subcommand": "diagnose", "entries": len(rows)})
    _say(quiet, f"wrote {out}/diagnose.csv")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verification suite
# ---------------------------------------------------------------------------


def _exact_phase_constant(b: float) -> float:
    """sqrt of int |1 - e^(iy)|^2 / |y|^(1+2b) dy via the Gamma closed form
    (independent of the sampled quadrature path)."""
    from scipy.special import gamma as gamma_fn

    s = 2.0 * b
    if abs(s - 1.0) < 1e-12:
        return math.sqrt(2.0 * math.pi)
    return math.sqrt(4.0 * (-gamma_fn(-s)) * math.cos(math.pi * s / 2.0))


def _verify_weights(rows: List[List], seed: int) -> None:
    rows.append(["weights", "beta(5,5)=sqrt26", beta(5, 5.0), math.sqrt(26.0),
                 abs(beta(5, 5.0) - math.sqrt(26.0)) < 1e-12])
    rows.append(["weights", "beta(7,0)=1", beta(7, 0.0), 1.0, beta(7, 0.0) == 1.0])
    rows.append(["weights", "beta(3,12)=6", beta(3, 12.0), 6.0, beta(3, 12.0) == 6.0])
    for n in (1, 2, 4, 8, 16, 32):
        audit = beta_audit(n)
        ok = audit.min_slope >= -1e-9 and audit.max_slope <= 1.0 + 1e-9
        rows.append(["weights", f"beta_slope_N{n}", audit.max_slope, 1.0, ok])
    g = make_grid(64, 64, 48.0, 48.0)
    wn = weight_field(g, WeightSpec.truncated(4)).samples
    pl = weight_field(g, WeightSpec.polynomial(1.0)).samples
    rows.append(["weights", "wN<=poly1", float(np.max(wn - pl)), 0.0,
                 bool(np.all(wn <= pl + 1e-12))])
    grads = []
    for lam in (0.5, 0.1, 0.01, 0.001):
        w = weight_field(g, WeightSpec.damped(1.0, lam)).samples
        gx = np.gradient(w, g.dx, axis=1)
        gy = np.gradient(w, g.dy, axis=0)
        grads.append(float(np.max(np.hypot(gx, gy))))
    rows.append(["weights", "damped_grad_uniform", max(grads), 1.5, max(grads) < 1.5])
    for L in (1.0, 5.0, 40.0):
        v = a2_statistic(0.5, (-L, L))
        rows.append(["weights", f"a2_half_L{L:g}", v, 4.0 / 3.0,
                     abs(v - 4.0 / 3.0) < 1e-12])
    rows.append(["weights", "a2_3half_inf", a2_statistic(1.5, (-1.0, 2.0)), math.inf,
                 math.isinf(a2_statistic(1.5, (-1.0, 2.0)))])
    rows.append(["weights", "a2_zero_one", a2_statistic(0.0, (2.0, 7.0)), 1.0,
                 a2_statistic(0.0, (2.0, 7.0)) == 1.0])


def _verify_stein(rows: List[List], seed: int) -> None:
    r_out = 400.0
    dx = 0.005
    n = math.ceil((r_out + 20.0) / dx)
    xs = dx * np.arange(-n, n + 1)
    for c in (1.0, 2.0, 4.0):
        res = stein_derivative(
            xs, np.exp(1j * c * xs), SteinConfig(b=0.5, r_outer=r_out), [0.0]
        )
        exact = math.sqrt(2.0 * math.pi * c)
        rel = abs(res.values[0] - exact) / exact
        rows.append(["stein", f"pure_phase_c{c:g}", res.values[0], exact, rel < 1e-3])
    for b in (0.25, 0.5, 0.75):
        cst = _exact_phase_constant(b)
        for eta, t in ((1.0, 1.0), (2.0, 1.0), (1.0, 0.5)):
            ceff = t * eta * eta
            res = stein_derivative(
                xs, np.exp(1j * ceff * xs), SteinConfig(b=b, r_outer=r_out), [0.0]
            )
            meas, up = res.values[0], res.upper()[0]
            bound = phase_bound(b, eta, t)
            exact = cst * ceff**b
            ok = meas <= bound * (1 + 1e-12) and meas - 1e-3 * exact <= exact <= up + 1e-3 * exact
            rows.append(["stein", f"phase_b{b:g}_e{eta:g}_t{t:g}", meas, bound, ok])
    heav = refine_divergence(lambda x: (x >= 0).astype(float), 0.5, 5)
    rows.append(["stein", "heaviside_divergent", heav.ratios[-1], 1.10,
                 heav.verdict == "divergent"])
    bump = refine_divergence(lambda x: np.exp(-8.0 * x**2), 0.5, 6)
    rows.append(["stein", "bump_convergent", bump.ratios[-1], 1.02,
                 bump.verdict == "convergent"])


def _verify_ratios(rows: List[List], seed: int) -> None:
    g = make_grid(48, 48, 20.0, 20.0)
    fam = [data_families.random_smooth(g, seed + k) for k in range(12)]
    ceilings = {"interpolation": 1.2, "commutator": 1.5, "algebra": 0.5,
                "trilinear": 0.1, "d_half": 0.2}
    worst = {k: 0.0 for k in ceilings}
    for i, f in enumerate(fam):
        a = fam[(i + 1) % len(fam)]
        worst["interpolation"] = max(worst["interpolation"],
                                     interpolation_ratio(f, 2.0, 1.0, 0.5))
        worst["commutator"] = max(worst["commutator"], commutator_ratio(a, f, 1, 1))
        worst["algebra"] = max(worst["algebra"], algebra_ratio(f, a, 3.0, 3.0))
        worst["trilinear"] = max(worst["trilinear"], trilinear_ratio(f, 3.0, 2.5))
        worst["d_half"] = max(worst["d_half"], half_derivative_commutator_ratio(a, f))
    for k, ceil in ceilings.items():
        rows.append(["ratios", f"{k}_ceiling", worst[k], ceil, worst[k] <= ceil])
    f = fam[0]
    base = interpolation_ratio(f, 2.0, 1.0, 0.5)
    scaled = interpolation_ratio(RealField(g, 3.0 * f.samples), 2.0, 1.0, 0.5)
    rows.append(["ratios", "interp_scale_exact", abs(base - scaled), 1e-12,
                 abs(base - scaled) <= 1e-12 * max(base, 1.0)])
    per_n = [interpolation_ratio(f, 2.0, 1.0, 0.5, weight=WeightSpec.truncated(nn))
             for nn in (4, 8, 16, 32)]
    ok = max(per_n) <= 1.1 * per_n[1]
    rows.append(["ratios", "interp_wN_uniform", max(per_n), 1.1 * per_n[1], ok])


def _cmd_verify(m: RunManifest, out: Path, quiet: bool) -> int:
    rows: List[List] = []
    suites = (_verify_weights, _verify_stein, _verify_ratios)
    buckets: List[List[List]] = [[] for _ in suites]
    with ThreadPoolExecutor(max_workers=min(_pool_size(), len(suites))) as pool:
        futures = [
            pool.submit(suite, bucket, m.seed)
            for suite, bucket in zip(suites, buckets)
        ]
        for fut in futures:
            fut.result()
    for bucket in buckets:
        rows.extend(bucket)
    n_fail = sum(1 for r in rows if not r[-1])
    write_csv(out / "verify.csv", ["suite", "check", "measured", "reference", "passed"], rows)
    write_json(
        out / "summary.json",
        {"subcommand": "verify", "checks": len(rows), "failures": n_fail},
    )
    _say(quiet, f"verify: {len(rows) - n_fail}/{len(rows)} checks passed")
    return EXIT_OK if n_fail == 0 else EXIT_VERIFY


def execute(argv: Sequence[str]) -> int:
    parser = argparse.ArgumentParser(
        prog="bozk",
        description="Pseudospectral lab for a nonlocal-dispersive 2-D wave equation",
    )
    parser.add_argument(
        "subcommand",
        choices=["simulate", "linear", "picard", "uc", "verify", "diagnose"],
    )
    parser.add_argument("--config", type=str, default=None, help="manifest path")
    parser.add_argument("--out", type=str, default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override manifest seed")
    parser.add_argument("--quiet", action="store_true")
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK

    try:
        if args.config is not None:
            m = load_manifest(args.config)
        else:
            m = RunManifest(raw={})
        if args.seed is not None:
            m.seed = args.seed
        _pool_size()  # validate BOZK_THREADS early
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)

        if args.subcommand == "simulate":
            return _cmd_simulate(m, out, args.quiet, linear_only=False)
        if args.subcommand == "linear":
            return _cmd_simulate(m, out, args.quiet, linear_only=True)
        if args.subcommand == "picard":
            return _cmd_picard(m, out, args.quiet)
        if args.subcommand == "uc":
            return _cmd_uc(m, out, args.quiet)
        if args.subcommand == "verify":
            return _cmd_verify(m, out, args.quiet)
        if args.subcommand == "diagnose":
            return _cmd_diagnose(m, out, args.quiet)
        return EXIT_CONFIG
    except ManifestError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverAbort as exc:
        write_json(
            Path(args.out) / "abort.json",
            {"reason": exc.reason, "t": exc.t, "step": exc.step, "detail": exc.detail},
        )
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PicardDivergence as exc:
        write_json(
            Path(args.out) / "abort.json",
            {"reason": "picard_divergence", "residuals": exc.residuals},
        )
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(execute(sys.argv[1:]))


if __name__ == "__main__":
    main()
