"""Dense complex operator algebra shared by the scattering modules.

Operators are plain ``numpy.ndarray`` objects of dtype ``complex128``.
The free Hamiltonian is carried only through its (real, diagonal) spectrum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

__all__ = [
    "ScatteringError",
    "InvalidInputError",
    "DomainError",
    "DegenerateInputError",
    "NearSingularError",
    "SpectralParameter",
    "FreeSpectrum",
    "as_operator",
    "op_norm",
    "frob_norm",
    "dagger",
    "resolvent_free",
    "green_split",
    "green_limits_check",
    "solve_operator_equation",
    "COND_MAX",
]

# beyond this the residual guarantee of a double-precision solve is void
COND_MAX = 1e12


class ScatteringError(Exception):
    """Base class for all errors raised by scatterkit."""


class InvalidInputError(ScatteringError, ValueError):
    pass


class DomainError(ScatteringError, ValueError):
    pass


class DegenerateInputError(ScatteringError, ValueError):
    pass


class NearSingularError(ScatteringError, ArithmeticError):
    """Raised when ``1 - a`` is too ill-conditioned to solve reliably.

    Carries the condition estimate and, when known, which quantity was
    being solved for (``what``) so callers can report the offending object.
    """

    def __init__(self, cond: float, what: str = "operator equation", z=None, limit: float | None = None):
        self.cond = float(cond)
        self.what = what
        self.z = z
        self.limit = COND_MAX if limit is None else limit
        where = f" at z={z}" if z is not None else ""
        super().__init__(
            f"near-singular {what}{where}: condition estimate {self.cond:.3e} "
            f"exceeds {self.limit:.0e}"
        )


@dataclass(frozen=True)
class SpectralParameter:
    """Complex energy ``z = e0 + i*eps`` with ``eps > 0``."""

    e0: float
    eps: float

    def __post_init__(self):
        if not (np.isfinite(self.e0) and np.isfinite(self.eps)):
            raise InvalidInputError(f"non-finite spectral parameter {self.e0!r}, {self.eps!r}")
        if self.eps <= 0:
            raise DomainError(f"eps must be strictly positive, got {self.eps!r}")

    @property
    def z(self) -> complex:
        return complex(self.e0, self.eps)

    @property
    def zconj(self) -> complex:
        return complex(self.e0, -self.eps)


@dataclass(frozen=True)
class FreeSpectrum:
    """Diagonal of the free Hamiltonian, ascending and nonnegative."""

    eigenvalues: tuple

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if ev.ndim != 1 or ev.size == 0:
            raise InvalidInputError("free spectrum must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(ev)):
            raise InvalidInputError("free spectrum has non-finite entries")
        if np.any(ev < 0):
            raise InvalidInputError("free spectrum must be nonnegative")
        if np.any(np.diff(ev) < 0):
            raise InvalidInputError("free spectrum must be ordered ascending")
        object.__setattr__(self, "eigenvalues", tuple(float(x) for x in ev))

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.eigenvalues, dtype=float)

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    @property
    def width(self) -> float:
        return self.eigenvalues[-1] - self.eigenvalues[0]

    def matrix(self) -> np.ndarray:
        return np.diag(self.values).astype(complex)


def as_operator(m, name: str = "operator") -> np.ndarray:
    """Validate ``m`` as a finite square matrix and return it as complex128."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidInputError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return a


def op_norm(m) -> float:
    """Spectral norm (largest singular value)."""
    a = as_operator(m)
    if not a.any():
        return 0.0
    return float(np.linalg.norm(a, 2))


def frob_norm(m) -> float:
    return float(np.linalg.norm(as_operator(m), "fro"))


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def _check_eps(z: SpectralParameter):
    if not isinstance(z, SpectralParameter):
        raise InvalidInputError(f"expected SpectralParameter, got {type(z).__name__}")
    # SpectralParameter validates on construction; guard against object.__setattr__ tricks
    if z.eps <= 0:
        raise DomainError(f"eps must be strictly positive, got {z.eps!r}")


def resolvent_free(h0: FreeSpectrum, z: SpectralParameter) -> np.ndarray:
    """Free Green function ``G0(z) = (z - H0)^-1`` as a diagonal matrix."""
    _check_eps(z)
    return np.diag(1.0 / (z.z - h0.values))


def green_split(h0: FreeSpectrum, z: SpectralParameter) -> tuple[np.ndarray, np.ndarray]:
    """Split ``G0(z)`` into its anti-Hermitian part ``g1`` and Hermitian part ``g2``.

    Entries are evaluated in closed form rather than by differencing two
    resolvents, so ``g1`` is exactly imaginary and ``g2`` exactly real on the
    diagonal:

        g1_kk = -i eps / ((e0 - l_k)^2 + eps^2)
        g2_kk = (e0 - l_k) / ((e0 - l_k)^2 + eps^2)
    """
    _check_eps(z)
    x = z.e0 - h0.values
    den = x * x + z.eps * z.eps
    g1 = np.diag(-1j * z.eps / den)
    g2 = np.diag((x / den).astype(complex))
    return g1, g2


def green_limits_check(h0: FreeSpectrum, e0: float, eps_sequence) -> list[tuple[float, float, float]]:
    """Tabulate how the Green function split approaches its eps -> 0 limits.

    Returns rows ``(eps, ||G1||, ||G2 - P/(e0 - H0)||)``.  Off the spectrum
    both columns vanish linearly in ``eps``.
    """
    ev = h0.values
    gap = np.min(np.abs(e0 - ev))
    if gap <= np.finfo(float).eps * max(1.0, abs(e0)):
        raise DegenerateInputError(
            f"e0={e0!r} coincides with a free eigenvalue; the limit is distributional there"
        )
    pv = np.diag(1.0 / (e0 - ev)).astype(complex)
    rows = []
    for eps in eps_sequence:
        g1, g2 = green_split(h0, SpectralParameter(e0, float(eps)))
        rows.append((float(eps), op_norm(g1), op_norm(g2 - pv)))
    return rows


def _cond_estimate(lu: np.ndarray, anorm: float) -> float:
    rcond, info = lapack.zgecon(lu, anorm, norm="1")
    if info != 0 or rcond <= 0:
        return np.inf
    return 1.0 / rcond


def solve_operator_equation(a, b, *, cond_max: float | None = None, what: str = "operator equation", z=None) -> np.ndarray:
    """Solve ``(1 - a) X = b`` by LU factorization.

    ``cond_max`` defaults to the module-level ``COND_MAX``.

    Raises
    ------
    NearSingularError
        If the 1-norm condition estimate of ``1 - a`` exceeds ``cond_max``.
    """
    a = as_operator(a, "a")
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != a.shape[0]:
        raise InvalidInputError(f"shape mismatch: a is {a.shape}, b is {b.shape}")
    if not np.all(np.isfinite(b)):
        raise InvalidInputError("b has non-finite entries")
    m = np.eye(a.shape[0], dtype=complex) - a
    anorm = np.linalg.norm(m, 1)
    lu, piv = sla.lu_factor(m, check_finite=False)
    cond = _cond_estimate(lu, anorm)
    limit = COND_MAX if cond_max is None else cond_max
    if not np.isfinite(cond) or cond > limit:
        raise NearSingularError(cond, what, z, limit)
    x = sla.lu_solve((lu, piv), b, check_finite=False)
    # one step of iterative refinement keeps the residual at roundoff level
    r = b - m @ x
    x = x + sla.lu_solve((lu, piv), r, check_finite=False)
    return x
