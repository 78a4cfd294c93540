"""N-particle assembly: exact T, Faddeev and Heitler components, approximations.

All pair potentials act on one shared finite-dimensional space; the identities
checked here are pure operator algebra and do not need tensor structure.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from .linop import (
    FreeSpectrum,
    InvalidInputError,
    NearSingularError,
    SpectralParameter,
    green_split,
    resolvent_free,
    solve_operator_equation,
)
from .twobody import PairChannel, PairPotential, all_channels, solve_k_pair, solve_t_pair

__all__ = [
    "ScatteringSystem",
    "ChannelOperatorSet",
    "PairOperators",
    "KINDS",
    "total_potential",
    "pair_operators",
    "exact_t",
    "faddeev_solve",
    "heitler_exact_k",
    "t_from_k_full",
    "k_components_solve",
    "impulse_t",
    "linearized_t",
    "script_t_components",
    "unitary_impulse_t",
    "osborn_t",
    "uia_term",
    "faddeev_kernel",
]

KINDS = ("T_pair", "K_pair", "T_component", "K_component", "script_T")


@dataclass(frozen=True, eq=False)
class ScatteringSystem:
    """N particles with free spectrum ``h0`` and one potential per pair channel."""

    n_particles: int
    h0: FreeSpectrum
    channels: tuple  # ((PairChannel, PairPotential), ...) in lexicographic order

    def __post_init__(self):
        if self.n_particles < 3:
            raise InvalidInputError(f"need at least 3 particles, got {self.n_particles}")
        chans = tuple(sorted(((c, p) for c, p in self.channels), key=lambda cp: cp[0]))
        expected = all_channels(self.n_particles)
        got = [c for c, _ in chans]
        if got != expected:
            raise InvalidInputError(
                f"channel list must cover each of {[str(c) for c in expected]} exactly once, "
                f"got {[str(c) for c in got]}"
            )
        for c, p in chans:
            if not isinstance(p, PairPotential):
                raise InvalidInputError(f"channel {c} does not carry a PairPotential")
            if p.dim != self.h0.dim:
                raise InvalidInputError(f"channel {c} potential has dim {p.dim}, expected {self.h0.dim}")
        object.__setattr__(self, "channels", chans)

    @property
    def dim(self) -> int:
        return self.h0.dim

    @property
    def channel_list(self) -> list[PairChannel]:
        return [c for c, _ in self.channels]

    @property
    def potentials(self) -> dict[PairChannel, PairPotential]:
        return dict(self.channels)

    def scaled(self, s: float) -> "ScatteringSystem":
        return ScatteringSystem(self.n_particles, self.h0, tuple((c, p.scaled(s)) for c, p in self.channels))

    def with_potential(self, channel: PairChannel, pot: PairPotential) -> "ScatteringSystem":
        chans = tuple((c, pot if c == channel else p) for c, p in self.channels)
        return ScatteringSystem(self.n_particles, self.h0, chans)


class ChannelOperatorSet(Mapping):
    """Read-only map channel -> matrix, iterated in lexicographic channel order."""

    def __init__(self, entries: Mapping[PairChannel, np.ndarray], kind: str):
        if kind not in KINDS:
            raise InvalidInputError(f"unknown operator-set kind {kind!r}")
        if not entries:
            raise InvalidInputError("operator set needs at least one channel")
        shapes = {np.shape(m) for m in entries.values()}
        if len(shapes) != 1:
            raise InvalidInputError(f"operator set matrices disagree in shape: {shapes}")
        self._entries = {c: np.asarray(entries[c], dtype=complex) for c in sorted(entries)}
        self.kind = kind

    def __getitem__(self, c: PairChannel) -> np.ndarray:
        return self._entries[c]

    def __iter__(self) -> Iterator[PairChannel]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def dim(self) -> int:
        return next(iter(self._entries.values())).shape[0]

    def total(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for m in self._entries.values():
            out += m
        return out

    def __repr__(self):
        return f"ChannelOperatorSet(kind={self.kind!r}, channels={[str(c) for c in self]})"


def total_potential(sys: ScatteringSystem) -> np.ndarray:
    v = np.zeros((sys.dim, sys.dim), dtype=complex)
    for _, p in sys.channels:
        v += p.matrix
    return v


@dataclass(frozen=True, eq=False)
class PairOperators:
    """Everything derived per channel at one spectral point."""

    z: SpectralParameter
    g0: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    t: ChannelOperatorSet
    k: ChannelOperatorSet


def pair_operators(sys: ScatteringSystem, z: SpectralParameter) -> PairOperators:
    g0 = resolvent_free(sys.h0, z)
    g1, g2 = green_split(sys.h0, z)
    ts, ks = {}, {}
    for c, p in sys.channels:
        try:
            ts[c] = solve_t_pair(p, g0, z=z.z)
            ks[c] = solve_k_pair(p, g2, z=z.z)
        except NearSingularError as exc:
            raise NearSingularError(exc.cond, f"{exc.what}, channel {c}", z.z, exc.limit) from exc
    return PairOperators(z, g0, g1, g2, ChannelOperatorSet(ts, "T_pair"), ChannelOperatorSet(ks, "K_pair"))


def exact_t(sys: ScatteringSystem, z: SpectralParameter) -> np.ndarray:
    """Full Lippmann-Schwinger solution ``T = (1 - V G0)^-1 V``."""
    v = total_potential(sys)
    if not v.any():
        return np.zeros_like(v)
    g0 = resolvent_free(sys.h0, z)
    return solve_operator_equation(v @ g0, v, what="N-body T-matrix (pole proximity)", z=z.z)


def _block_solve(pairs: ChannelOperatorSet, green: np.ndarray, what: str, z) -> dict:
    # X^a - P_a G sum_{b != a} X^b = P_a, assembled as one (C d) x (C d) system
    chans = list(pairs)
    d = pairs.dim
    rhs = np.concatenate([pairs[a] for a in chans], axis=0)
    x = solve_operator_equation(faddeev_kernel(pairs, green), rhs, what=what, z=z)
    return {a: x[i * d:(i + 1) * d] for i, a in enumerate(chans)}


def faddeev_kernel(pairs: ChannelOperatorSet, green: np.ndarray) -> np.ndarray:
    """Off-diagonal block kernel of the coupled component equations."""
    chans = list(pairs)
    c, d = len(chans), pairs.dim
    kernel = np.zeros((c * d, c * d), dtype=complex)
    for i, a in enumerate(chans):
        pg = pairs[a] @ green
        for j in range(c):
            if j != i:
                kernel[i * d:(i + 1) * d, j * d:(j + 1) * d] = pg
    return kernel


def faddeev_solve(sys: ScatteringSystem, z: SpectralParameter, pairs: PairOperators | None = None) -> ChannelOperatorSet:
    """Faddeev components ``T^a = T_a + T_a G0 sum_{b != a} T^b``."""
    pairs = pairs or pair_operators(sys, z)
    comps = _block_solve(pairs.t, pairs.g0, f"Faddeev block system at E={z.e0:g}", z.z)
    return ChannelOperatorSet(comps, "T_component")


def heitler_exact_k(sys: ScatteringSystem, z: SpectralParameter) -> np.ndarray:
    """Full K matrix ``K = (1 - V G2)^-1 V``."""
    v = total_potential(sys)
    if not v.any():
        return np.zeros_like(v)
    _, g2 = green_split(sys.h0, z)
    return solve_operator_equation(v @ g2, v, what="N-body K-matrix (pole proximity)", z=z.z)


def t_from_k_full(k, g1) -> np.ndarray:
    """Heitler resummation ``T = (1 - K G1)^-1 K``."""
    k = np.asarray(k, dtype=complex)
    if not k.any():
        return np.zeros_like(k)
    return solve_operator_equation(k @ np.asarray(g1), k, what="Heitler resummation (1 - K G1)")


def k_components_solve(sys: ScatteringSystem, z: SpectralParameter, pairs: PairOperators | None = None) -> ChannelOperatorSet:
    """Heitler components ``K^a = K_a + K_a G2 sum_{b != a} K^b``."""
    pairs = pairs or pair_operators(sys, z)
    comps = _block_solve(pairs.k, pairs.g2, f"K-component block system at E={z.e0:g}", z.z)
    return ChannelOperatorSet(comps, "K_component")


def impulse_t(t_pairs: ChannelOperatorSet) -> np.ndarray:
    """Single-scattering sum of the pair T matrices."""
    return t_pairs.total()


def linearized_t(k_pairs: ChannelOperatorSet, g1) -> np.ndarray:
    """``(1 - sum_a K_a G1)^-1 sum_b K_b``: Heitler form with K truncated to pair terms."""
    return t_from_k_full(k_pairs.total(), g1)


def script_t_components(t_pairs: ChannelOperatorSet, k_pairs: ChannelOperatorSet, g1):
    """Per-channel pieces of the linearized T, computed two independent ways.

    ``direct`` resolves against the summed pair K matrices; ``transformed``
    uses only the pair T matrices, with each K_a replaced by
    ``(1 + T_a G1)^-1 T_a``.  Returns ``(direct, transformed)``.
    """
    g1 = np.asarray(g1, dtype=complex)
    chans = list(t_pairs)
    d = t_pairs.dim
    eye = np.eye(d, dtype=complex)
    ksum_g1 = k_pairs.total() @ g1
    direct = {
        b: solve_operator_equation(ksum_g1, k_pairs[b], what=f"(1 - sum K G1) for channel {b}")
        for b in chans
    }
    # (1 + T_a G1)^-1 T_a G1 for every channel
    dressed = {
        a: solve_operator_equation(-(t_pairs[a] @ g1), t_pairs[a] @ g1, what=f"(1 + T G1) for channel {a}")
        for a in chans
    }
    transformed = {}
    for b in chans:
        inner = np.zeros((d, d), dtype=complex)
        for a in chans:
            if a != b:
                inner += dressed[a]
        kernel = (eye + t_pairs[b] @ g1) @ inner
        transformed[b] = solve_operator_equation(kernel, t_pairs[b], what=f"transformed resolvent for channel {b}")
    return ChannelOperatorSet(direct, "script_T"), ChannelOperatorSet(transformed, "script_T")


def uia_term(t_pairs: ChannelOperatorSet, g1, beta: PairChannel) -> np.ndarray:
    """``(1 + sum_{g != b} T_g G1) T_b`` expanded as a sum of products."""
    g1 = np.asarray(g1, dtype=complex)
    tb = t_pairs[beta]
    out = tb.copy()
    for g in t_pairs:
        if g != beta:
            out += t_pairs[g] @ (g1 @ tb)
    return out


def unitary_impulse_t(t_pairs: ChannelOperatorSet, g1) -> np.ndarray:
    """Inversion-free asymptotic solution ``sum_b (1 + sum_{g != b} T_g G1) T_b``."""
    out = np.zeros((t_pairs.dim, t_pairs.dim), dtype=complex)
    for b in t_pairs:
        out += uia_term(t_pairs, g1, b)
    return out


def osborn_t(t_12, t_13, g1) -> np.ndarray:
    """Fixed-centres three-body amplitude ``(1 + T13 G1) T12 + (1 + T12 G1) T13``."""
    t_12 = np.asarray(t_12, dtype=complex)
    t_13 = np.asarray(t_13, dtype=complex)
    g1 = np.asarray(g1, dtype=complex)
    if not (t_12.shape == t_13.shape == g1.shape):
        raise InvalidInputError("shape mismatch")
    return (t_12 + t_13 @ (g1 @ t_12)) + (t_13 + t_12 @ (g1 @ t_13))
