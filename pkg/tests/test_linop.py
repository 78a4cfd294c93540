import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from scatterkit import linop
from scatterkit.linop import (
    DegenerateInputError,
    DomainError,
    FreeSpectrum,
    InvalidInputError,
    NearSingularError,
    SpectralParameter,
    dagger,
    green_limits_check,
    green_split,
    op_norm,
    resolvent_free,
    solve_operator_equation,
)


def test_op_norm_examples():
    assert op_norm(np.zeros((4, 4))) == 0.0
    assert op_norm(np.eye(4)) == pytest.approx(1.0, abs=1e-15)
    assert op_norm(np.diag([2j, -1])) == pytest.approx(2.0, abs=1e-15)


def test_op_norm_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        op_norm(np.array([[np.nan, 0], [0, 1]]))
    with pytest.raises(InvalidInputError):
        op_norm(np.ones((2, 3)))


def test_spectral_parameter_requires_positive_eps():
    with pytest.raises(DomainError):
        SpectralParameter(1.0, 0.0)
    with pytest.raises(DomainError):
        SpectralParameter(1.0, -1e-3)
    z = SpectralParameter(2.0, 0.5)
    assert z.zconj == np.conj(z.z)


def test_free_spectrum_validation():
    with pytest.raises(InvalidInputError):
        FreeSpectrum((1.0, 0.5))
    with pytest.raises(InvalidInputError):
        FreeSpectrum((-1.0, 0.5))
    assert FreeSpectrum((0, 1, 3)).width == 3.0


def test_resolvent_examples():
    g = resolvent_free(FreeSpectrum((0.0,)), SpectralParameter(1.0, 0.1))
    assert g[0, 0] == pytest.approx(1 / (1 + 0.1j), rel=1e-15)
    h0 = FreeSpectrum((0.0, 1.0, 2.0))
    z = SpectralParameter(0.5, 0.01)
    g = resolvent_free(h0, z)
    np.testing.assert_allclose(np.diag(g), 1 / (0.5 + 0.01j - np.array([0, 1, 2])), rtol=1e-15)
    gc = np.diag(1 / (z.zconj - h0.values))
    np.testing.assert_allclose(gc, np.conj(g), rtol=0, atol=1e-15)


def test_green_split_closed_form():
    g1, g2 = green_split(FreeSpectrum((0.0,)), SpectralParameter(1.0, 1.0))
    assert g1[0, 0] == pytest.approx(-0.5j, abs=1e-16)
    assert g2[0, 0] == pytest.approx(0.5, abs=1e-16)


spectra = st.lists(st.floats(0, 50, allow_nan=False), min_size=1, max_size=10).map(lambda v: FreeSpectrum(tuple(sorted(v))))
params = st.builds(SpectralParameter, st.floats(-10, 60), st.floats(1e-6, 10))


@given(spectra, params)
@settings(max_examples=80, deadline=None)
def test_green_split_algebra(h0, z):
    g0 = resolvent_free(h0, z)
    g1, g2 = green_split(h0, z)
    scale = max(1.0, op_norm(g0))
    assert op_norm(g1 + g2 - g0) <= 1e-14 * scale
    assert op_norm(g1 + dagger(g1)) <= 1e-14 * scale
    assert op_norm(g2 - dagger(g2)) <= 1e-14 * scale
    # conjugate point gives the adjoint resolvent
    gc = resolvent_free(h0, SpectralParameter(z.e0, z.eps))
    assert op_norm(np.diag(1 / (z.zconj - h0.values)) - dagger(gc)) <= 1e-14 * scale


@given(st.integers(1, 6), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=50, deadline=None)
def test_op_norm_submultiplicative(d, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    b = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    assert op_norm(a @ b) <= op_norm(a) * op_norm(b) + 1e-12


def test_green_limits_trend():
    h0 = FreeSpectrum((0.0, 1.0))
    eps = 10.0 ** -np.arange(2, 9)
    rows = green_limits_check(h0, 0.5, eps)
    e, n1, n2 = map(np.array, zip(*rows))
    assert np.all(np.diff(n1) < 0) and np.all(np.diff(n2) < 0)
    s1 = np.polyfit(np.log(e), np.log(n1), 1)[0]
    s2 = np.polyfit(np.log(e), np.log(n2), 1)[0]
    assert s1 == pytest.approx(1.0, abs=0.05)
    # the Hermitian part approaches the principal value quadratically in eps
    assert s2 == pytest.approx(2.0, abs=0.05)


def test_green_limits_examples():
    rows = green_limits_check(FreeSpectrum((0.0,)), 5.0, [1e-3])
    assert rows[0][1] == pytest.approx(1e-3 / (25 + 1e-6), rel=1e-14)
    assert green_limits_check(FreeSpectrum((0.0,)), 5.0, []) == []
    with pytest.raises(DegenerateInputError):
        green_limits_check(FreeSpectrum((0.0, 1.0)), 1.0, [1e-3])


def test_solve_examples():
    b = np.arange(4.0).reshape(2, 2) + 1j
    np.testing.assert_array_equal(solve_operator_equation(np.zeros((2, 2)), b), b)
    x = solve_operator_equation(np.diag([0.5, 0.5]), np.eye(2))
    np.testing.assert_allclose(x, np.diag([2.0, 2.0]), atol=1e-15)


@pytest.mark.parametrize("seed", range(10))
def test_solve_residual(seed):
    rng = np.random.default_rng(seed)
    a = 0.3 * (rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))) / np.sqrt(8)
    b = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    x = solve_operator_equation(a, b)
    assert op_norm((np.eye(8) - a) @ x - b) <= 1e-12 * op_norm(b)


def test_solve_near_singular():
    a = np.diag([1.0 - 1e-14, 0.2])
    with pytest.raises(NearSingularError) as info:
        solve_operator_equation(a, np.eye(2), what="probe")
    assert info.value.cond > 1e12
    assert info.value.limit == linop.COND_MAX
    assert "probe" in str(info.value)
    # a looser limit lets the same system through
    x = solve_operator_equation(a, np.eye(2), cond_max=1e15)
    assert np.isfinite(x).all()
