"""Command-line front end: ``verify``, ``scan`` and ``twobody``.

Exit codes: 0 all checks pass, 1 a check failed, 2 config error,
3 numerical degeneracy, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, linop
from .config import ConfigParseError, ScenarioConfig, dump_config, load_config
from .diagnostics import (
    DiagnosticsReport,
    ScanDegenerateError,
    Thresholds,
    approximation_error_scan,
    coupling_scan,
    loglog_slope,
    unitarity_defect,
)
from .linop import NearSingularError, ScatteringError, dagger, op_norm
from .modelspace import ConfigError, build_flat_model, build_yamaguchi_grid, energy_grid
from .multibody import (
    exact_t,
    faddeev_solve,
    heitler_exact_k,
    k_components_solve,
    linearized_t,
    osborn_t,
    pair_operators,
    script_t_components,
    t_from_k_full,
    unitary_impulse_t,
)
from .twobody import (
    PairChannel,
    binding_energies,
    grid_ls_solve,
    k_from_t,
    two_body_heitler_residual,
    yamaguchi_binding_energy,
    yamaguchi_on_shell_t,
)

log = logging.getLogger("scatterkit")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4

CSV_DIGITS = 12


class OutputError(Exception):
    pass


def _rel(a, b) -> float:
    nb = op_norm(b)
    d = op_norm(np.asarray(a) - np.asarray(b))
    return d / nb if nb > 0 else d


def _fmt_csv(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.{CSV_DIGITS}g}"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, PairChannel):
        return str(x)
    return x


def _write_json(path: Path, obj) -> None:
    # repr-based float output is shortest round-trip, i.e. at most 17 significant digits
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=False, allow_nan=False) + "\n", encoding="utf-8")


def _prepare_out(directory) -> Path:
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OutputError(f"output directory {out} is not writable: {exc.strerror}") from None
    return out


def _metadata(cfg: ScenarioConfig, started: float, **extra) -> dict:
    meta = {
        "version": __version__,
        "config": cfg.to_dict(),
        "thresholds": dataclasses.asdict(cfg.thresholds),
        "wall_clock_s": time.perf_counter() - started,
    }
    meta.update(extra)
    return meta


# -- verify -------------------------------------------------------------------


def identity_battery(cfg: ScenarioConfig) -> tuple[dict, dict]:
    """Run every exact identity on the configured model at the first grid point.

    Returns ``(checks, context)`` with ``checks[name] = {value, tolerance, pass}``.
    """
    th = cfg.thresholds
    system = build_flat_model(cfg.model)
    z = energy_grid(cfg.grid)[0]
    pairs = pair_operators(system, z)
    g1 = pairs.g1
    t = exact_t(system, z)
    k = heitler_exact_k(system, z)
    checks = {}

    def add(name, value, tol):
        checks[name] = {"value": float(value), "tolerance": float(tol), "pass": bool(value <= tol)}

    add("faddeev_sum", _rel(faddeev_solve(system, z, pairs).total(), t), th.identity)
    add("k_component_sum", _rel(k_components_solve(system, z, pairs).total(), k), th.identity)
    add("heitler_t_from_k", _rel(t_from_k_full(k, g1), t), th.identity)
    direct, transformed = script_t_components(pairs.t, pairs.k, g1)
    add("script_t_direct_vs_transformed", max(_rel(transformed[b], direct[b]) for b in direct), th.identity)
    add("script_t_sum_vs_linearized", _rel(direct.total(), linearized_t(pairs.k, g1)), th.identity)
    # two-channel specialization: only (1,2) and (1,3) interact
    t12, t13 = pairs.t[PairChannel(1, 2)], pairs.t[PairChannel(1, 3)]
    fixed = system
    for c in system.channel_list:
        if c not in (PairChannel(1, 2), PairChannel(1, 3)):
            fixed = fixed.with_potential(c, type(system.potentials[c]).zero(system.dim))
    fixed_pairs = pair_operators(fixed, z)
    add("osborn_coincidence", op_norm(unitary_impulse_t(fixed_pairs.t, g1) - osborn_t(t12, t13, g1)), th.osborn)
    pud = 0.0
    heit = 0.0
    kft = 0.0
    for c in pairs.t:
        tc, kc = pairs.t[c], pairs.k[c]
        td = dagger(tc)
        pud = max(pud, op_norm(tc - td - 2.0 * td @ g1 @ tc) / max(1.0, op_norm(tc) ** 2))
        heit = max(heit, two_body_heitler_residual(tc, kc, g1) if tc.any() else 0.0)
        kft = max(kft, _rel(k_from_t(tc, g1), kc))
    add("pair_unitarity", pud, th.pair_unitarity)
    add("pair_heitler_residual", heit, th.identity)
    add("pair_k_from_t", kft, th.identity)
    add("exact_t_unitarity", unitarity_defect(t, g1), th.identity)
    add("linearized_t_unitarity", unitarity_defect(linearized_t(pairs.k, g1), g1), th.identity)
    herm = op_norm(k - dagger(k)) / op_norm(k) if k.any() else 0.0
    add("exact_k_hermiticity", herm, th.hermiticity)
    return checks, {"z": {"re": z.e0, "im": z.eps}, "channels": [str(c) for c in system.channel_list]}


def cmd_verify(cfg: ScenarioConfig, out: Path) -> int:
    started = time.perf_counter()
    checks, ctx = identity_battery(cfg)
    passed = all(c["pass"] for c in checks.values())
    report = {"passed": passed, "checks": checks, **ctx, "metadata": _metadata(cfg, started)}
    _write_json(out / "verify_report.json", report)
    for name, c in checks.items():
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {name:34s} {c['value']:.3e}  (tol {c['tolerance']:.0e})")
    return EXIT_OK if passed else EXIT_FAIL


# -- scan ---------------------------------------------------------------------


def _write_rows_csv(path: Path, rows: list[DiagnosticsReport], lead: list[tuple[str, list]] = ()) -> None:
    header = rows[0].header()
    extra = [name for name, _ in lead]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(extra + header)
        for i, r in enumerate(rows):
            vals = r.values()
            vals["index"] = i
            w.writerow([_fmt_csv(col[i]) for _, col in lead] + [_fmt_csv(vals[h]) for h in header])


TRACKED_SLOPES = ("norm_TaG0", "norm_TaG1", "norm_KaG2", "born_T", "relerr_impulse", "relerr_uia")


def cmd_scan(cfg: ScenarioConfig, out: Path, threads: int) -> int:
    started = time.perf_counter()
    system = build_flat_model(cfg.model)
    grid = energy_grid(cfg.grid)
    result = approximation_error_scan(system, grid, cfg.thresholds, threads=threads)
    slopes = {}
    e = np.array([r.e0 for r in result.rows])
    for name in TRACKED_SLOPES:
        col = result.column(name)
        ok = np.isfinite(col) & (col > 0)
        slopes[name] = loglog_slope(e[ok], col[ok]) if ok.sum() >= 2 else None
    meta = _metadata(cfg, started, skipped=result.metadata["skipped"], e_b_min=result.metadata["e_b_min"],
                     regime_onset=result.metadata["regime_onset"], loglog_slopes=slopes,
                     columns=result.header())
    coupling_rows = None
    if cfg.coupling_scan is not None and cfg.coupling_scan.scales:
        coupling_rows = coupling_scan(system, grid[0], cfg.coupling_scan.scales)
        scales = list(cfg.coupling_scan.scales)
        cslopes = {}
        for name in ("defect_impulse", "defect_uia", "defect_impulse_abs", "defect_uia_abs",
                     "reduction_gap", "reduction_side", "second_order", "product_expansion"):
            col = np.array([r.values()[name] for r in coupling_rows])
            cslopes[name] = loglog_slope(scales, col) if np.all(col > 0) else None
        meta["coupling_scan"] = {"scales": scales, "z": {"re": grid[0].e0, "im": grid[0].eps},
                                 "loglog_slopes": cslopes}
    if cfg.outputs.csv:
        _write_rows_csv(out / "scan.csv", result.rows)
        if coupling_rows is not None:
            _write_rows_csv(out / "coupling_scan.csv", coupling_rows, [("scale", list(cfg.coupling_scan.scales))])
    if cfg.outputs.json:
        rows_json = [{"skipped": r.skipped, **r.values()} for r in result.rows]
        _write_json(out / "scan.json", {"metadata": meta, "rows": rows_json})
    if cfg.outputs.plots:
        pdir = out / "plots"
        pdir.mkdir(exist_ok=True)
        for name in result.header():
            if name in ("index", "re_z"):
                continue
            col = result.column(name)
            lines = [f"{_fmt_csv(x)} {_fmt_csv(y)}" for x, y in zip(e, col)]
            (pdir / f"{name}.dat").write_text("# re_z " + name + "\n" + "\n".join(lines) + "\n", encoding="utf-8")
    print(f"scan: {len(result.rows)} rows, {len(result.metadata['skipped'])} skipped -> {out}")
    return EXIT_OK


# -- twobody ------------------------------------------------------------------


def twobody_report(cfg: ScenarioConfig) -> dict:
    tb = cfg.twobody
    if tb is None:
        raise ConfigParseError("twobody command needs a [twobody] section")
    pot, grid = build_yamaguchi_grid(tb.beta, tb.lam, tb.nodes, tb.cutoff, tb.k_on)
    sol = grid_ls_solve(pot, grid)
    analytic = yamaguchi_on_shell_t(tb.lam, tb.beta, tb.k_on) if tb.lam != 0 else 0.0
    gap = abs(sol.on_shell_t - analytic) / abs(analytic) if analytic != 0 else abs(sol.on_shell_t)
    counts = [tb.convergence_base * 2 ** i for i in range(3)]
    seq = []
    for n in counts:
        p_n, g_n = build_yamaguchi_grid(tb.beta, tb.lam, n, tb.cutoff, tb.k_on)
        seq.append(grid_ls_solve(p_n, g_n).on_shell_t)
    d1, d2 = abs(seq[1] - seq[0]), abs(seq[2] - seq[1])
    ratio = d2 / d1 if d1 > 0 else 0.0
    scale = max(1.0, tb.beta ** 2)
    e_grid = binding_energies(pot, grid.free_spectrum(), energy_scale=scale) if tb.lam != 0 else 0.0
    e_ana = yamaguchi_binding_energy(tb.lam, tb.beta)
    if e_ana != 0:
        b_gap = abs(e_grid - e_ana) / abs(e_ana)
    else:
        b_gap = abs(e_grid)
    unit = 1.0 / sol.on_shell_t if sol.on_shell_t != 0 else None
    checks = {
        "on_shell_vs_analytic": {"value": gap, "tolerance": tb.tolerance, "pass": gap <= tb.tolerance},
        "self_convergence_ratio": {"value": ratio, "tolerance": tb.convergence_ratio_max,
                                   "pass": ratio < tb.convergence_ratio_max},
        "binding_energy": {"value": b_gap, "tolerance": tb.binding_tolerance, "pass": b_gap <= tb.binding_tolerance},
    }
    return {
        "on_shell_t": {"re": sol.on_shell_t.real, "im": sol.on_shell_t.imag},
        "analytic_t": {"re": complex(analytic).real, "im": complex(analytic).imag},
        "relative_gap": gap,
        "im_inverse_t": None if unit is None else unit.imag,
        "pi_density_of_states": np.pi * tb.k_on / 2.0,
        "binding_energy_grid": e_grid,
        "binding_energy_analytic": e_ana,
        "convergence": {"nodes": counts, "on_shell_re": [x.real for x in seq], "on_shell_im": [x.imag for x in seq],
                        "differences": [d1, d2], "ratio": ratio},
        "checks": checks,
        "passed": all(c["pass"] for c in checks.values()),
    }


def cmd_twobody(cfg: ScenarioConfig, out: Path) -> int:
    started = time.perf_counter()
    rep = twobody_report(cfg)
    rep["metadata"] = _metadata(cfg, started)
    _write_json(out / "twobody_report.json", rep)
    for name, c in rep["checks"].items():
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {name:24s} {c['value']:.3e}  (tol {c['tolerance']:.0e})")
    return EXIT_OK if rep["passed"] else EXIT_FAIL


# -- entry point ----------------------------------------------------------------


def _threads(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("SCATTERKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigParseError(f"SCATTERKIT_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scatterkit", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: $SCATTERKIT_THREADS or CPU count)")
    p.add_argument("--out", default=None, help="output directory (overrides [outputs].directory)")
    p.add_argument("--seed-override", type=int, default=None, help="replace model.seed")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("verify", "run the exact-identity battery"),
                           ("scan", "energy and coupling scans"),
                           ("twobody", "continuum two-body grid solver vs closed form")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("config")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed_override is not None:
            cfg = dataclasses.replace(cfg, model=dataclasses.replace(cfg.model, seed=args.seed_override))
        threads = _threads(args.threads)
    except (ConfigParseError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    linop.COND_MAX = cfg.thresholds.cond_max
    try:
        out = _prepare_out(args.out or cfg.outputs.directory)
        (out / "config.echo.toml").write_text(dump_config(cfg), encoding="utf-8")
        if args.command == "verify":
            return cmd_verify(cfg, out)
        if args.command == "scan":
            return cmd_scan(cfg, out, threads)
        return cmd_twobody(cfg, out)
    except (ConfigParseError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NearSingularError, ScanDegenerateError) as exc:
        print(f"numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OutputError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ScatteringError as exc:
        print(f"numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    finally:
        linop.COND_MAX = Thresholds().cond_max


if __name__ == "__main__":
    sys.exit(main())
