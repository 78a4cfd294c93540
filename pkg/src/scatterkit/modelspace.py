"""Reproducible model systems and energy grids."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linop import FreeSpectrum, InvalidInputError, SpectralParameter, dagger, op_norm
from .multibody import ScatteringSystem
from .twobody import GridSpec, PairChannel, PairPotential, all_channels

__all__ = [
    "ConfigError",
    "ModelConfig",
    "EnergyGridSpec",
    "build_flat_model",
    "build_tensor_model_n3",
    "build_yamaguchi_grid",
    "yamaguchi_form_factor",
    "energy_grid",
    "random_hermitian",
]

POTENTIAL_KINDS = ("dense_hermitian", "separable_rank1")
H0_KINDS = ("linear", "quadratic", "explicit")
SPACINGS = ("linear", "logarithmic")


class ConfigError(InvalidInputError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    n_particles: int = 3
    dim: int = 12
    seed: int = 1
    coupling_scale: float = 0.1
    potential_kind: str = "dense_hermitian"
    h0_kind: str = "linear"
    h0_spacing: float = 1.0
    h0_values: tuple = ()
    inert_channels: tuple = ()  # of (m, n) pairs

    def __post_init__(self):
        if not isinstance(self.n_particles, int) or self.n_particles < 3:
            raise ConfigError(f"n_particles must be an integer >= 3, got {self.n_particles!r}")
        if not isinstance(self.dim, int) or self.dim < 2:
            raise ConfigError(f"dim must be an integer >= 2, got {self.dim!r}")
        if not isinstance(self.seed, int) or not (0 <= self.seed < 2 ** 64):
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if not np.isfinite(self.coupling_scale):
            raise ConfigError("coupling_scale must be finite")
        if self.potential_kind not in POTENTIAL_KINDS:
            raise ConfigError(f"potential_kind must be one of {POTENTIAL_KINDS}, got {self.potential_kind!r}")
        if self.h0_kind not in H0_KINDS:
            raise ConfigError(f"h0_kind must be one of {H0_KINDS}, got {self.h0_kind!r}")
        if self.h0_kind == "explicit" and len(self.h0_values) != self.dim:
            raise ConfigError(f"explicit h0 needs {self.dim} values, got {len(self.h0_values)}")
        if not (self.h0_spacing > 0):
            raise ConfigError("h0_spacing must be positive")
        inert = tuple(tuple(int(x) for x in c) for c in self.inert_channels)
        valid = {(c.m, c.n) for c in all_channels(self.n_particles)}
        for c in inert:
            if c not in valid:
                raise ConfigError(f"inert channel {c} is not a pair channel of {self.n_particles} particles")
        object.__setattr__(self, "inert_channels", inert)
        object.__setattr__(self, "h0_values", tuple(float(x) for x in self.h0_values))

    def free_spectrum(self) -> FreeSpectrum:
        k = np.arange(self.dim, dtype=float)
        if self.h0_kind == "linear":
            ev = k * self.h0_spacing
        elif self.h0_kind == "quadratic":
            ev = k * k * self.h0_spacing
        else:
            ev = np.asarray(self.h0_values)
        try:
            return FreeSpectrum(tuple(ev))
        except InvalidInputError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class EnergyGridSpec:
    """Grid of spectral points.

    ``eps`` is shared by every point unless ``eps_relative`` is set, in which
    case point ``k`` gets ``eps_k = eps_relative * e_k``.
    """

    e_min: float = 10.0
    e_max: float = 100.0
    points: int = 9
    spacing: str = "logarithmic"
    eps: float = 0.5
    eps_relative: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.e_min < self.e_max) or not np.isfinite(self.e_max):
            raise ConfigError(f"need 0 < e_min < e_max, got e_min={self.e_min!r}, e_max={self.e_max!r}")
        if not isinstance(self.points, int) or self.points < 2:
            raise ConfigError(f"points must be an integer >= 2, got {self.points!r}")
        if self.spacing not in SPACINGS:
            raise ConfigError(f"spacing must be one of {SPACINGS}, got {self.spacing!r}")
        if self.eps_relative is None:
            if not (self.eps > 0) or not np.isfinite(self.eps):
                raise ConfigError(f"eps must be finite and > 0, got {self.eps!r}")
        elif not (self.eps_relative > 0) or not np.isfinite(self.eps_relative):
            raise ConfigError(f"eps_relative must be finite and > 0, got {self.eps_relative!r}")


def energy_grid(spec: EnergyGridSpec) -> list[SpectralParameter]:
    if spec.spacing == "linear":
        e = np.linspace(spec.e_min, spec.e_max, spec.points)
    else:
        e = np.logspace(np.log10(spec.e_min), np.log10(spec.e_max), spec.points)
    e[0], e[-1] = spec.e_min, spec.e_max
    if spec.eps_relative is None:
        return [SpectralParameter(float(x), float(spec.eps)) for x in e]
    return [SpectralParameter(float(x), float(spec.eps_relative * x)) for x in e]


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Hermitian matrix with unit spectral norm."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = 0.5 * (a + dagger(a))
    h = h / op_norm(h)
    # exact Hermiticity after the rescale
    return np.triu(h) + dagger(np.triu(h, 1))


def build_flat_model(cfg: ModelConfig) -> ScatteringSystem:
    """Seeded system with independent potentials of norm ``coupling_scale`` per channel."""
    h0 = cfg.free_spectrum()
    rng = np.random.default_rng(cfg.seed)
    s = cfg.coupling_scale
    inert = set(cfg.inert_channels)
    chans = []
    for c in all_channels(cfg.n_particles):
        # draw for every channel so that marking one inert leaves the others unchanged
        if cfg.potential_kind == "dense_hermitian":
            unit = random_hermitian(rng, cfg.dim)
            pot = PairPotential.dense(s * unit)
        else:
            g = rng.standard_normal(cfg.dim) + 1j * rng.standard_normal(cfg.dim)
            g = g / np.linalg.norm(g)
            sign = 1.0 if rng.random() < 0.5 else -1.0
            pot = PairPotential.separable(sign * s, g)
        if (c.m, c.n) in inert or s == 0:
            pot = PairPotential.zero(cfg.dim)
        chans.append((c, pot))
    return ScatteringSystem(cfg.n_particles, h0, tuple(chans))


def build_tensor_model_n3(per_particle_dim: int, pair_potential: PairPotential, pair_23: PairPotential | None = None,
                          spacing: float = 1.0) -> ScatteringSystem:
    """Three-body model in the frame of particle 1, basis ``|a>_2 (x) |b>_3``.

    ``pair_potential`` (dimension ``per_particle_dim``) is the interaction of
    particle 1 with either of the others, so ``v_12 = v (x) 1`` and
    ``v_13 = 1 (x) v``.  ``pair_23`` acts on the full product space; when it
    is omitted the (2,3) channel is inert, which is the fixed-centres limit.
    """
    p = per_particle_dim
    if not isinstance(p, int) or p < 2 or p > 4:
        raise ConfigError(f"per_particle_dim must be an integer in [2, 4], got {p!r}")
    if pair_potential.dim != p:
        raise ConfigError(f"pair potential has dim {pair_potential.dim}, expected {p}")
    eye = np.eye(p)
    h = np.arange(p, dtype=float) * spacing
    h0 = FreeSpectrum(tuple(np.sort(np.add.outer(h, h).ravel())))
    order = np.argsort(np.add.outer(h, h).ravel(), kind="stable")
    perm = np.eye(p * p)[order]  # sorts basis so that H0 is ascending

    def reorder(m):
        return perm @ m @ perm.T

    v = pair_potential.matrix
    v12 = PairPotential.dense(reorder(np.kron(v, eye)))
    v13 = PairPotential.dense(reorder(np.kron(eye, v)))
    if pair_23 is None:
        v23 = PairPotential.zero(p * p)
    else:
        if pair_23.dim != p * p:
            raise ConfigError(f"pair_23 must act on the {p * p}-dim product space")
        v23 = PairPotential.dense(reorder(pair_23.matrix))
    chans = ((PairChannel(1, 2), v12), (PairChannel(1, 3), v13), (PairChannel(2, 3), v23))
    return ScatteringSystem(3, h0, chans)


def tensor_swap_23(per_particle_dim: int, spacing: float = 1.0) -> np.ndarray:
    """Permutation exchanging particles 2 and 3, in the sorted basis of :func:`build_tensor_model_n3`."""
    p = per_particle_dim
    h = np.arange(p, dtype=float) * spacing
    order = np.argsort(np.add.outer(h, h).ravel(), kind="stable")
    perm = np.eye(p * p)[order]
    swap = np.zeros((p * p, p * p))
    for a in range(p):
        for b in range(p):
            swap[b * p + a, a * p + b] = 1.0
    return perm @ swap @ perm.T


def yamaguchi_form_factor(beta: float):
    def g(p):
        p = np.asarray(p, dtype=float)
        return 1.0 / (p * p + beta * beta)
    return g


def build_yamaguchi_grid(beta: float, lam: float, nodes: int, cutoff: float, k_on: float = 0.7,
                         map_scale: float | None = None) -> tuple[PairPotential, GridSpec]:
    """Yamaguchi potential sampled on a mapped Gauss-Legendre grid.

    Nodes come from the rational map ``q = c (1+x) / (1 - x + 2c/cutoff)``
    (``c = map_scale``, default ``beta``), which sends ``[-1, 1]`` onto
    ``[0, cutoff]`` and crowds nodes where the form factor varies.  The
    separable form factor is stored as ``sqrt(w) q g(q)`` so that discrete
    inner products reproduce the radial integrals.
    """
    if not (beta > 0):
        raise ConfigError("beta must be positive")
    if not (cutoff > beta):
        raise ConfigError(f"cutoff {cutoff!r} must exceed beta {beta!r}")
    if nodes < 16:
        raise ConfigError(f"need at least 16 nodes, got {nodes}")
    c = beta if map_scale is None else map_scale
    x, w = np.polynomial.legendre.leggauss(nodes)
    a = 2.0 * c / cutoff
    q = c * (1.0 + x) / (1.0 - x + a)
    wq = w * c * (2.0 + a) / (1.0 - x + a) ** 2
    grid = GridSpec(q, wq, float(cutoff), float(k_on))
    prof = yamaguchi_form_factor(beta)
    if lam == 0:
        # inert channel; keep the profile so the grid solver still runs
        pot = PairPotential(kind="separable", dim=nodes, strength=0.0,
                            form_factor=np.sqrt(wq) * q * prof(q) + 0j, profile=prof)
    else:
        pot = PairPotential.separable(lam, np.sqrt(wq) * q * prof(q), prof)
    return pot, grid
