"""Pair-channel operators: two-body T and K matrices and their relations.

Also holds a continuum s-wave Lippmann-Schwinger solver on a momentum grid,
used with Yamaguchi form factors where the separable closed form is known.
Units: hbar^2 / 2mu = 1, so the free energy of momentum p is p**2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .linop import (
    DomainError,
    FreeSpectrum,
    InvalidInputError,
    ScatteringError,
    as_operator,
    dagger,
    op_norm,
    solve_operator_equation,
)

__all__ = [
    "PairChannel",
    "PairPotential",
    "GridSpec",
    "GridSolution",
    "RegridError",
    "BindingSearchError",
    "RESIDUAL_FLOOR",
    "all_channels",
    "solve_t_pair",
    "solve_k_pair",
    "k_from_t",
    "separable_amplitude",
    "two_body_heitler_residual",
    "pair_unitarity_defect",
    "grid_ls_solve",
    "min_binding_energy",
    "binding_energies",
    "yamaguchi_loop_integral",
    "yamaguchi_on_shell_t",
    "yamaguchi_binding_energy",
]

RESIDUAL_FLOOR = 1e-30


class RegridError(DomainError):
    """The on-shell momentum coincides with a quadrature node."""


class BindingSearchError(ScatteringError, RuntimeError):
    def __init__(self, msg: str, bracket: tuple[float, float]):
        self.bracket = bracket
        super().__init__(f"{msg} (bracket [{bracket[0]:.6g}, {bracket[1]:.6g}])")


@dataclass(frozen=True, order=True)
class PairChannel:
    """Unordered particle pair ``(m, n)`` with ``1 <= m < n``."""

    m: int
    n: int

    def __post_init__(self):
        if not (1 <= self.m < self.n):
            raise InvalidInputError(f"pair channel needs 1 <= m < n, got ({self.m}, {self.n})")

    @property
    def label(self) -> str:
        return f"{self.m}{self.n}"

    def __str__(self):
        return f"({self.m},{self.n})"


def all_channels(n_particles: int) -> list[PairChannel]:
    """The N(N-1)/2 pair channels in lexicographic order."""
    return [PairChannel(m, n) for m in range(1, n_particles + 1) for n in range(m + 1, n_particles + 1)]


@dataclass(frozen=True, eq=False)
class PairPotential:
    """A Hermitian pair interaction, stored densely or as ``strength * g g^+``.

    Use the :meth:`dense`, :meth:`separable` and :meth:`zero` constructors.
    For separable potentials built on a momentum grid, ``profile`` holds the
    continuum form factor ``g(p)`` (unweighted) so that the grid solver can
    evaluate it off the nodes.
    """

    kind: str
    dim: int
    data: Optional[np.ndarray] = None
    strength: float = 0.0
    form_factor: Optional[np.ndarray] = None
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    @classmethod
    def dense(cls, m) -> "PairPotential":
        a = as_operator(m, "pair potential")
        scale = max(op_norm(a), 1.0)
        if np.max(np.abs(a - dagger(a))) > 1e-14 * scale:
            raise InvalidInputError("dense pair potential is not Hermitian")
        a = 0.5 * (a + dagger(a))
        a.setflags(write=False)
        return cls(kind="dense", dim=a.shape[0], data=a)

    @classmethod
    def separable(cls, strength: float, g, profile=None) -> "PairPotential":
        g = np.asarray(g, dtype=complex).ravel()
        if not np.isfinite(strength):
            raise InvalidInputError("separable strength must be finite")
        if g.size == 0 or not np.all(np.isfinite(g)) or not np.any(g):
            raise InvalidInputError("separable form factor must be finite and nonzero")
        g.setflags(write=False)
        return cls(kind="separable", dim=g.size, strength=float(strength), form_factor=g, profile=profile)

    @classmethod
    def zero(cls, dim: int) -> "PairPotential":
        a = np.zeros((dim, dim), dtype=complex)
        a.setflags(write=False)
        return cls(kind="dense", dim=dim, data=a)

    @property
    def is_inert(self) -> bool:
        if self.kind == "separable":
            return self.strength == 0.0
        return not self.data.any()

    @property
    def matrix(self) -> np.ndarray:
        if self.kind == "dense":
            return np.array(self.data)
        g = self.form_factor
        return self.strength * np.outer(g, np.conj(g))

    def scaled(self, s: float) -> "PairPotential":
        if self.kind == "dense":
            return PairPotential.dense(s * self.data)
        return PairPotential.separable(s * self.strength, self.form_factor, self.profile)

    def __eq__(self, other):
        if not isinstance(other, PairPotential) or self.kind != other.kind or self.dim != other.dim:
            return NotImplemented if not isinstance(other, PairPotential) else False
        if self.kind == "dense":
            return bool(np.array_equal(self.data, other.data))
        return self.strength == other.strength and bool(np.array_equal(self.form_factor, other.form_factor))

    __hash__ = None


def _as_matrix(v) -> np.ndarray:
    if isinstance(v, PairPotential):
        return v.matrix
    return as_operator(v, "potential")


def solve_t_pair(v, g0, *, z=None) -> np.ndarray:
    """Two-body T matrix ``T = (1 - v G0)^-1 v``."""
    vm = _as_matrix(v)
    g0 = as_operator(g0, "g0")
    if not vm.any():
        return np.zeros_like(vm)
    return solve_operator_equation(vm @ g0, vm, what="pair T-matrix (pole proximity)", z=z)


def solve_k_pair(v, g2, *, z=None) -> np.ndarray:
    """Two-body K matrix ``K = (1 - v G2)^-1 v``; Hermitian when ``v`` and ``G2`` are."""
    vm = _as_matrix(v)
    g2 = as_operator(g2, "g2")
    if not vm.any():
        return np.zeros_like(vm)
    k = solve_operator_equation(vm @ g2, vm, what="pair K-matrix (pole proximity)", z=z)
    return k


def k_from_t(t, g1) -> np.ndarray:
    """Recover the K matrix from T: ``K = (1 + T G1)^-1 T``."""
    t = as_operator(t, "t")
    g1 = as_operator(g1, "g1")
    if not t.any():
        return np.zeros_like(t)
    return solve_operator_equation(-(t @ g1), t, what="K from T")


def separable_amplitude(strength: float, g, green) -> complex:
    """Scalar ``strength / (1 - strength g^+ G g)`` of a rank-one potential.

    With ``G = G0`` this is tau(z) in ``T = tau g g^+``; with ``G = G2`` it is
    the corresponding K amplitude.
    """
    g = np.asarray(g, dtype=complex)
    loop = np.conj(g) @ np.asarray(green) @ g
    return strength / (1.0 - strength * loop)


def two_body_heitler_residual(t, k, g1) -> float:
    """Relative residual of ``T = K + T G1 K``."""
    t = as_operator(t, "t")
    k = as_operator(k, "k")
    g1 = as_operator(g1, "g1")
    if not (t.shape == k.shape == g1.shape):
        raise InvalidInputError("shape mismatch")
    r = t - k - t @ g1 @ k
    return op_norm(r) / max(op_norm(t), RESIDUAL_FLOOR)


def pair_unitarity_defect(t, g1) -> float:
    """Absolute defect ``||T - T^+ - 2 T^+ G1 T||`` of two-body unitarity."""
    t = as_operator(t, "t")
    g1 = as_operator(g1, "g1")
    td = dagger(t)
    return op_norm(t - td - 2.0 * td @ g1 @ t)


# -- continuum grid -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Momentum quadrature on ``(0, cutoff]`` plus the on-shell momentum."""

    nodes: np.ndarray
    weights: np.ndarray
    cutoff: float
    on_shell_momentum: float

    def __post_init__(self):
        q = np.asarray(self.nodes, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if q.ndim != 1 or q.shape != w.shape:
            raise InvalidInputError("nodes and weights must be 1-d arrays of equal length")
        if q.size < 16:
            raise InvalidInputError(f"grid needs at least 16 nodes, got {q.size}")
        if np.any(np.diff(q) <= 0) or q[0] <= 0 or q[-1] > self.cutoff:
            raise InvalidInputError("nodes must be strictly increasing within (0, cutoff]")
        if np.any(w <= 0):
            raise InvalidInputError("quadrature weights must be positive")
        if not (0 < self.on_shell_momentum < self.cutoff):
            raise InvalidInputError("on-shell momentum must lie in (0, cutoff)")
        object.__setattr__(self, "nodes", q)
        object.__setattr__(self, "weights", w)

    @property
    def energy(self) -> float:
        return self.on_shell_momentum ** 2

    def free_spectrum(self) -> FreeSpectrum:
        return FreeSpectrum(tuple(self.nodes ** 2))


@dataclass(frozen=True, eq=False)
class GridSolution:
    momenta: np.ndarray  # nodes followed by the on-shell momentum
    half_off_shell: np.ndarray  # T(p_i, k_on)
    on_shell_t: complex


def grid_ls_solve(v: PairPotential, grid: GridSpec, eps: float = 0.0) -> GridSolution:
    """Solve the s-wave Lippmann-Schwinger equation for a separable potential.

    ``eps == 0`` means the ``E + i0`` limit: the Green function is split into
    a principal value, handled by subtracting the on-shell integrand, and the
    ``-i pi delta(E - q^2)`` term.  ``eps > 0`` uses the regular kernel
    ``1 / (E + i eps - q^2)`` directly.
    """
    if v.kind != "separable":
        raise InvalidInputError("grid solver supports separable potentials only")
    if v.profile is None:
        raise InvalidInputError("separable potential carries no continuum form factor")
    if eps < 0:
        raise DomainError("eps must be nonnegative (0 selects the +i0 limit)")
    q, w = grid.nodes, grid.weights
    k = grid.on_shell_momentum
    lam = v.strength
    n = q.size
    p = np.append(q, k)
    if lam == 0.0:
        zeros = np.zeros(n + 1, dtype=complex)
        return GridSolution(p, zeros, 0.0j)

    gp = np.asarray(v.profile(p), dtype=float)
    vmat = lam * np.outer(gp, gp)
    e = k * k
    d = np.zeros(n + 1, dtype=complex)
    if eps == 0.0:
        if np.min(np.abs(q - k)) < 1e-8 * k:
            raise RegridError(f"on-shell momentum {k!r} collides with a quadrature node")
        d[:n] = w * q * q / (e - q * q)
        lam_cut = grid.cutoff
        pv_tail = np.log((lam_cut + k) / (lam_cut - k)) / (2.0 * k)
        d[n] = k * k * (pv_tail - np.sum(w / (e - q * q))) - 0.5j * np.pi * k
    else:
        d[:n] = w * q * q / (e + 1j * eps - q * q)
    kernel = vmat * d[np.newaxis, :]
    col = solve_operator_equation(kernel, vmat[:, n], what="grid Lippmann-Schwinger system (pole proximity)")
    return GridSolution(p, col, complex(col[n]))


def yamaguchi_loop_integral(beta: float, energy: complex) -> complex:
    """``int_0^inf q^2 g(q)^2 / (E - q^2) dq`` for ``g = 1/(q^2+beta^2)``.

    Real positive energies are taken on the physical sheet (``E + i0``).
    """
    energy = complex(energy)
    if energy.imag == 0 and energy.real > 0:
        kappa = -1j * np.sqrt(energy.real)
    else:
        kappa = np.sqrt(-energy)
    return -np.pi / (4.0 * beta * (beta + kappa) ** 2)


def yamaguchi_on_shell_t(strength: float, beta: float, k: float) -> complex:
    """Closed-form on-shell ``T(k, k; k^2 + i0)`` for the Yamaguchi potential."""
    g = 1.0 / (k * k + beta * beta)
    tau = strength / (1.0 - strength * yamaguchi_loop_integral(beta, k * k))
    return tau * g * g


def yamaguchi_binding_energy(strength: float, beta: float) -> float:
    """Bound-state energy (negative) from ``1 = strength * I(-kappa^2)``, or 0."""
    if strength >= 0:
        return 0.0
    kappa = np.sqrt(-strength * np.pi / (4.0 * beta)) - beta
    if kappa <= 0:
        return 0.0
    return -kappa * kappa


# -- bound states ---------------------------------------------------------------


def _has_level_below(h0: np.ndarray, vm: np.ndarray, energy: float) -> bool:
    # Sylvester inertia: H0 + v - E and 1 + A^1/2 v A^1/2 (A = (H0 - E)^-1 > 0)
    # have the same number of negative eigenvalues
    a_half = 1.0 / np.sqrt(h0 - energy)
    bs = a_half[:, None] * vm * a_half[None, :]
    bs = 0.5 * (bs + dagger(bs))
    return np.linalg.eigvalsh(bs)[0] < -1.0


def binding_energies(v, h0: FreeSpectrum, energy_scale: float | None = None, rtol: float = 1e-14) -> float:
    """Deepest bound-state energy of ``H0 + v`` below ``min(0, min H0)``, or 0.

    Bisection on the Birman-Schwinger criterion over the bracket
    ``[-100 * energy_scale, min(0, min H0))``, stopped once the bracket is
    narrower than ``rtol`` times its upper end.
    """
    vm = _as_matrix(v)
    lam = h0.values
    if vm.shape[0] != lam.size:
        raise InvalidInputError("potential and free spectrum dimensions differ")
    if not vm.any():
        return 0.0
    if energy_scale is None:
        energy_scale = max(1.0, h0.width, op_norm(vm))
    lo = -100.0 * energy_scale
    hi = min(0.0, lam[0]) - 1e-13 * energy_scale
    if not _has_level_below(lam, vm, hi):
        return 0.0
    if _has_level_below(lam, vm, lo):
        raise BindingSearchError("bound state lies below the search bracket", (lo, hi))
    for _ in range(400):
        if hi - lo <= rtol * abs(hi):
            break
        mid = 0.5 * (lo + hi)
        if _has_level_below(lam, vm, mid):
            hi = mid
        else:
            lo = mid
    else:
        raise BindingSearchError("bisection did not converge", (lo, hi))
    return 0.5 * (lo + hi)


def min_binding_energy(v_set: Sequence, h0: FreeSpectrum, energy_scale: float | None = None) -> float:
    """Magnitude of the deepest pair binding energy over all channels (0 if none)."""
    if len(v_set) == 0:
        raise InvalidInputError("need at least one channel potential")
    return max(abs(binding_energies(v, h0, energy_scale)) for v in v_set)
