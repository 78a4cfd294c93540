"""Smallness norms, unitarity defects, and approximation-error scans."""
from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .linop import (
    InvalidInputError,
    NearSingularError,
    ScatteringError,
    SpectralParameter,
    dagger,
    frob_norm,
    op_norm,
)
from .multibody import (
    ChannelOperatorSet,
    PairOperators,
    ScatteringSystem,
    exact_t,
    faddeev_kernel,
    impulse_t,
    linearized_t,
    pair_operators,
    uia_term,
    unitary_impulse_t,
    script_t_components,
)
from .twobody import RESIDUAL_FLOOR, min_binding_energy

log = logging.getLogger(__name__)

__all__ = [
    "Thresholds",
    "DiagnosticsReport",
    "ReductionCheck",
    "ScanResult",
    "ScanDegenerateError",
    "PairUnitarityViolation",
    "smallness_report",
    "second_order_norm",
    "third_order_norm",
    "commutator_residual",
    "product_expansion_residual",
    "unitarity_defect",
    "unitarity_reduction_check",
    "diagnose",
    "approximation_error_scan",
    "coupling_scan",
    "loglog_slope",
    "first_below",
]

APPROXIMATIONS = ("impulse", "linearized", "uia")


class ScanDegenerateError(ScatteringError, RuntimeError):
    pass


class PairUnitarityViolation(ScatteringError, ValueError):
    pass


@dataclass(frozen=True)
class Thresholds:
    """Tolerances used by diagnostics and the verify battery."""

    smallness: float = 1e-2
    identity: float = 1e-10
    pair_unitarity: float = 1e-12
    hermiticity: float = 1e-12
    osborn: float = 1e-14
    cond_max: float = 1e12
    pair_unitarity_precondition: float = 1e-8
    trend_step: float = 0.05
    max_skip_fraction: float = 0.5


def unitarity_defect(t, g1, relative: bool = True) -> float:
    """``||T - T^+ - 2 T^+ G1 T||``, divided by ``max(||T||, floor)`` if ``relative``."""
    t = np.asarray(t, dtype=complex)
    g1 = np.asarray(g1, dtype=complex)
    if t.shape != g1.shape:
        raise InvalidInputError("shape mismatch")
    td = dagger(t)
    d = op_norm(t - td - 2.0 * td @ g1 @ t)
    if not relative:
        return d
    return d / max(op_norm(t), RESIDUAL_FLOOR)


def second_order_norm(t_pairs: ChannelOperatorSet, g1) -> float:
    """``max_{a,b} ||T_a G1 T_b G1||`` over ordered channel pairs (diagonal included)."""
    tg = {a: t_pairs[a] @ g1 for a in t_pairs}
    return max(op_norm(tg[a] @ tg[b]) for a in tg for b in tg)


def third_order_norm(t_pairs: ChannelOperatorSet, g1) -> float:
    """``max_{a,b,c} ||T_a G1 T_b G1 T_c||``."""
    tg = {a: t_pairs[a] @ g1 for a in t_pairs}
    return max(op_norm(tg[a] @ tg[b] @ t_pairs[c]) for a in tg for b in tg for c in tg)


def commutator_residual(t_pairs: ChannelOperatorSet, g1) -> float:
    """``max_{a != b} ||[1 + T_a G1, 1 + T_b G1]||``; 0 for a single channel."""
    tg = {a: t_pairs[a] @ g1 for a in t_pairs}
    best = 0.0
    for a, b in itertools.combinations(tg, 2):
        best = max(best, op_norm(tg[a] @ tg[b] - tg[b] @ tg[a]))
    return best


def product_expansion_residual(t_pairs: ChannelOperatorSet, g1) -> float:
    """Distance between ``prod_b (1 + T_b G1)`` (lexicographic order) and ``1 + sum_b T_b G1``."""
    d = t_pairs.dim
    eye = np.eye(d, dtype=complex)
    prod = eye.copy()
    lin = eye.copy()
    for b in t_pairs:
        f = t_pairs[b] @ g1
        prod = prod @ (eye + f)
        lin += f
    return op_norm(prod - lin)


@dataclass(frozen=True, eq=False)
class ReductionCheck:
    """Both sides of the unitarity condition for the asymptotic solution.

    ``lhs_reduced`` is ``T - T^+`` rewritten through pair unitarity,
    ``sum_a (2 T_a^+ G1 T_a + sum_{b != a} (T_b G1 T_a + T_a^+ G1 T_b^+))``.
    ``rhs_reduced`` is ``2 T^+ G1 T`` with every term carrying two or more
    ``G1`` factors dropped, ``2 sum_{a,c} T_a^+ G1 T_c``.  Their difference
    consists of third-order products only.  ``common_form`` is the fully
    symmetrized ``2 sum_{a,c} T_a G1 T_c`` that both sides reduce to once
    ``T^+`` is replaced by ``T`` inside second-order terms.
    """

    lhs_reduced: np.ndarray
    rhs_reduced: np.ndarray
    gap: float
    common_form: np.ndarray
    third_order: float
    n_channels: int

    def __iter__(self):
        return iter((self.lhs_reduced, self.rhs_reduced, self.gap))

    @property
    def bound(self) -> float:
        return 16.0 * self.n_channels ** 2 * self.third_order


def unitarity_reduction_check(t_pairs: ChannelOperatorSet, g1, tol: float = 1e-8) -> ReductionCheck:
    g1 = np.asarray(g1, dtype=complex)
    for a in t_pairs:
        t = t_pairs[a]
        td = dagger(t)
        pud = op_norm(t - td - 2.0 * td @ g1 @ t)
        if pud > tol * max(1.0, op_norm(t) ** 2):
            raise PairUnitarityViolation(f"channel {a} violates two-body unitarity by {pud:.3e}")
    d = t_pairs.dim
    lhs = np.zeros((d, d), dtype=complex)
    rhs = np.zeros((d, d), dtype=complex)
    common = np.zeros((d, d), dtype=complex)
    tdag = {a: dagger(t_pairs[a]) for a in t_pairs}
    for a in t_pairs:
        ta = t_pairs[a]
        lhs += 2.0 * tdag[a] @ g1 @ ta
        for b in t_pairs:
            if b != a:
                lhs += t_pairs[b] @ g1 @ ta + tdag[a] @ g1 @ tdag[b]
            rhs += 2.0 * tdag[a] @ g1 @ t_pairs[b]
            common += 2.0 * ta @ g1 @ t_pairs[b]
    return ReductionCheck(
        lhs_reduced=lhs,
        rhs_reduced=rhs,
        gap=op_norm(lhs - rhs),
        common_form=common,
        third_order=third_order_norm(t_pairs, g1),
        n_channels=len(t_pairs),
    )


def smallness_report(sys: ScatteringSystem, z: SpectralParameter, pairs: PairOperators | None = None) -> dict:
    """Per-channel smallness norms and Born residuals at one spectral point.

    Returns a dict of ``{field: {channel: value}}``.
    """
    pairs = pairs or pair_operators(sys, z)
    out = {k: {} for k in ("norm_TaG0", "norm_TaG1", "norm_KaG2", "born_T", "born_K", "resid_TG1v", "norm_vaG0",
                           "norm_TaG0_frob")}
    for c, p in sys.channels:
        v = p.matrix
        t, k = pairs.t[c], pairs.k[c]
        vn = op_norm(v)
        out["norm_TaG0"][c] = op_norm(t @ pairs.g0)
        out["norm_TaG0_frob"][c] = frob_norm(t @ pairs.g0)
        out["norm_TaG1"][c] = op_norm(t @ pairs.g1)
        out["norm_KaG2"][c] = op_norm(k @ pairs.g2)
        out["norm_vaG0"][c] = op_norm(v @ pairs.g0)
        if vn == 0.0:
            out["born_T"][c] = out["born_K"][c] = out["resid_TG1v"][c] = 0.0
        else:
            out["born_T"][c] = op_norm(t - v) / vn
            out["born_K"][c] = op_norm(k - v) / vn
            out["resid_TG1v"][c] = op_norm(t - v - t @ pairs.g1 @ v) / vn
    return out


@dataclass
class DiagnosticsReport:
    """All diagnostics for one (system, z) evaluation."""

    e0: float
    eps: float
    channels: list
    per_channel: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)
    skipped: Optional[str] = None

    # scalar columns, in output order
    SCALAR_FIELDS = (
        "e_b_min",
        "second_order",
        "third_order",
        "commutator",
        "product_expansion",
        "defect_exact",
        "defect_impulse",
        "defect_linearized",
        "defect_uia",
        "defect_impulse_abs",
        "defect_uia_abs",
        "relerr_impulse",
        "relerr_linearized",
        "relerr_uia",
        "reduction_gap",
        "reduction_side",
        "collapse_uia",
        "kernel_radius",
    )
    CHANNEL_FIELDS = (
        ("norm_TaG0", "norm_TaG0"),
        ("norm_TaG0_frob", "frob_TaG0"),
        ("norm_TaG1", "norm_TaG1"),
        ("norm_KaG2", "norm_KaG2"),
        ("norm_vaG0", "born_vaG0"),
        ("born_T", "born_T"),
        ("born_K", "born_K"),
        ("resid_TG1v", "resid_TG1v"),
    )

    def header(self) -> list[str]:
        cols = ["index", "re_z", "im_z"]
        for _, name in self.CHANNEL_FIELDS:
            cols.append(name)
            cols.extend(f"{name}_c{c.label}" for c in self.channels)
        cols.extend(self.SCALAR_FIELDS)
        return cols

    def values(self) -> dict:
        """Flat ``column -> float`` map; NaN marks a skipped row."""
        row = {"re_z": self.e0, "im_z": self.eps}
        for key, name in self.CHANNEL_FIELDS:
            per = self.per_channel.get(key, {})
            vals = [per.get(c, np.nan) for c in self.channels]
            row[name] = max(vals) if per else np.nan
            for c, v in zip(self.channels, vals):
                row[f"{name}_c{c.label}"] = v
        for k in self.SCALAR_FIELDS:
            row[k] = self.scalars.get(k, np.nan)
        return row


def diagnose(sys: ScatteringSystem, z: SpectralParameter, e_b_min: float | None = None) -> DiagnosticsReport:
    """Evaluate every diagnostic column at one spectral point."""
    chans = sys.channel_list
    pairs = pair_operators(sys, z)
    rep = DiagnosticsReport(z.e0, z.eps, chans)
    rep.per_channel = smallness_report(sys, z, pairs)
    g1 = pairs.g1
    t_exact = exact_t(sys, z)
    approx = {
        "impulse": impulse_t(pairs.t),
        "linearized": linearized_t(pairs.k, g1),
        "uia": unitary_impulse_t(pairs.t, g1),
    }
    tn = op_norm(t_exact)
    s = rep.scalars
    s["e_b_min"] = e_b_min if e_b_min is not None else min_binding_energy([p for _, p in sys.channels], sys.h0)
    s["second_order"] = second_order_norm(pairs.t, g1)
    s["third_order"] = third_order_norm(pairs.t, g1)
    s["commutator"] = commutator_residual(pairs.t, g1)
    s["product_expansion"] = product_expansion_residual(pairs.t, g1)
    s["defect_exact"] = unitarity_defect(t_exact, g1)
    for name in APPROXIMATIONS:
        s[f"defect_{name}"] = unitarity_defect(approx[name], g1)
    s["defect_impulse_abs"] = unitarity_defect(approx["impulse"], g1, relative=False)
    s["defect_uia_abs"] = unitarity_defect(approx["uia"], g1, relative=False)
    for name, col in (("impulse", "relerr_impulse"), ("linearized", "relerr_linearized"),
                      ("uia", "relerr_uia")):
        s[col] = op_norm(approx[name] - t_exact) / tn if tn > 0 else 0.0
    red = unitarity_reduction_check(pairs.t, g1)
    s["reduction_gap"] = red.gap
    s["reduction_side"] = op_norm(red.rhs_reduced)
    direct, _ = script_t_components(pairs.t, pairs.k, g1)
    s["collapse_uia"] = max(op_norm(direct[b] - uia_term(pairs.t, g1, b)) for b in chans)
    kern = faddeev_kernel(pairs.t, pairs.g0)
    s["kernel_radius"] = float(np.max(np.abs(np.linalg.eigvals(kern)))) if kern.any() else 0.0
    return rep


@dataclass
class ScanResult:
    rows: list
    metadata: dict

    def header(self) -> list[str]:
        return self.rows[0].header()

    def column(self, name: str) -> np.ndarray:
        return np.array([r.values()[name] for r in self.rows], dtype=float)


def approximation_error_scan(sys: ScatteringSystem, energy_grid: Sequence[SpectralParameter],
                             thresholds: Thresholds = Thresholds(), threads: int = 1) -> ScanResult:
    """One :class:`DiagnosticsReport` per grid point, ordered by ``Re(z)``.

    Points where a solve hits a pole are kept as flagged rows (all NaN) and
    listed in ``metadata['skipped']``.
    """
    grid = sorted(energy_grid, key=lambda z: z.e0)
    if not grid:
        raise InvalidInputError("empty energy grid")
    e_b = min_binding_energy([p for _, p in sys.channels], sys.h0)

    def one(z):
        try:
            return diagnose(sys, z, e_b)
        except NearSingularError as exc:
            log.warning("skipping E=%g: %s", z.e0, exc)
            return DiagnosticsReport(z.e0, z.eps, sys.channel_list, skipped=str(exc))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, grid))
    else:
        rows = [one(z) for z in grid]
    skipped = [{"index": i, "re_z": r.e0, "reason": r.skipped} for i, r in enumerate(rows) if r.skipped]
    if len(skipped) > thresholds.max_skip_fraction * len(rows):
        raise ScanDegenerateError(f"{len(skipped)} of {len(rows)} grid points hit near-singular solves")
    meta = {"skipped": skipped, "e_b_min": e_b, "regime_onset": _regime_onset(rows, thresholds.smallness)}
    return ScanResult(rows, meta)


def _regime_onset(rows, threshold: float) -> dict:
    out = {}
    for _, name in DiagnosticsReport.CHANNEL_FIELDS:
        es = [r.e0 for r in rows]
        vals = [r.values()[name] for r in rows]
        out[name] = first_below(es, vals, threshold)
    return out


def first_below(energies, values, threshold: float) -> Optional[float]:
    """Smallest energy from which ``values`` stay at or below ``threshold``."""
    onset = None
    for e, v in zip(energies, values):
        if np.isfinite(v) and v <= threshold:
            if onset is None:
                onset = e
        else:
            onset = None
    return onset


def coupling_scan(sys: ScatteringSystem, z: SpectralParameter, scales: Sequence[float]) -> list[DiagnosticsReport]:
    """Diagnostics at fixed ``z`` for potentials scaled by each entry of ``scales``."""
    return [diagnose(sys.scaled(s), z) for s in scales]


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise InvalidInputError("log-log fit needs positive data")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])
