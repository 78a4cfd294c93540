import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import flat_system, rel
from scatterkit.diagnostics import second_order_norm, unitarity_defect
from scatterkit.linop import InvalidInputError, SpectralParameter, dagger, op_norm, resolvent_free
from scatterkit.modelspace import build_tensor_model_n3, random_hermitian, tensor_swap_23
from scatterkit.multibody import (
    ChannelOperatorSet,
    ScatteringSystem,
    exact_t,
    faddeev_solve,
    heitler_exact_k,
    impulse_t,
    k_components_solve,
    linearized_t,
    osborn_t,
    pair_operators,
    script_t_components,
    t_from_k_full,
    total_potential,
    uia_term,
    unitary_impulse_t,
)
from scatterkit.twobody import PairChannel, PairPotential, solve_t_pair

C12, C13, C23 = PairChannel(1, 2), PairChannel(1, 3), PairChannel(2, 3)


def single_channel(sys, keep=C13):
    for c in sys.channel_list:
        if c != keep:
            sys = sys.with_potential(c, PairPotential.zero(sys.dim))
    return sys


def test_system_validation(system3):
    chans = system3.channels
    with pytest.raises(InvalidInputError):
        ScatteringSystem(3, system3.h0, chans[:2])
    with pytest.raises(InvalidInputError):
        ScatteringSystem(3, system3.h0, chans + chans[:1])
    with pytest.raises(InvalidInputError):
        ScatteringSystem(2, system3.h0, chans[:1])
    # order of the given channel list does not matter
    assert ScatteringSystem(3, system3.h0, chans[::-1]).channel_list == [C12, C13, C23]


def test_operator_set_order_and_validation():
    m = np.eye(2)
    s = ChannelOperatorSet({C23: m, C12: 2 * m, C13: 3 * m}, "T_pair")
    assert list(s) == [C12, C13, C23]
    np.testing.assert_array_equal(s.total(), 6 * m)
    with pytest.raises(InvalidInputError):
        ChannelOperatorSet({C12: m}, "bogus")
    with pytest.raises(InvalidInputError):
        ChannelOperatorSet({C12: m, C13: np.eye(3)}, "T_pair")


def test_zero_system(zpoint):
    sys = flat_system(s=0.0)
    assert not exact_t(sys, zpoint).any()
    assert not heitler_exact_k(sys, zpoint).any()
    pairs = pair_operators(sys, zpoint)
    assert not impulse_t(pairs.t).any()
    assert not linearized_t(pairs.k, pairs.g1).any()
    assert not unitary_impulse_t(pairs.t, pairs.g1).any()
    assert not t_from_k_full(np.zeros((8, 8)), pairs.g1).any()


@pytest.mark.parametrize("seed", range(6))
def test_exact_t_residuals(seed, zpoint):
    sys = flat_system(seed=seed, dim=12)
    v = total_potential(sys)
    g0 = resolvent_free(sys.h0, zpoint)
    t = exact_t(sys, zpoint)
    k = heitler_exact_k(sys, zpoint)
    pairs = pair_operators(sys, zpoint)
    assert op_norm(t - v - v @ g0 @ t) <= 1e-12 * op_norm(v)
    assert op_norm(k - v - v @ pairs.g2 @ k) <= 1e-12 * op_norm(v)
    assert op_norm(k - dagger(k)) <= 1e-12 * op_norm(k)
    assert rel(t_from_k_full(k, pairs.g1), t) <= 1e-10
    np.testing.assert_array_equal(t_from_k_full(k, np.zeros_like(k)), k)


def test_single_channel_reductions(system3, zpoint):
    sys = single_channel(system3)
    pairs = pair_operators(sys, zpoint)
    t13 = pairs.t[C13]
    assert rel(exact_t(sys, zpoint), t13) <= 1e-12
    comps = faddeev_solve(sys, zpoint)
    assert rel(comps[C13], t13) <= 1e-12
    assert not comps[C12].any() and not comps[C23].any()
    kc = k_components_solve(sys, zpoint)
    assert rel(kc[C13], pairs.k[C13]) <= 1e-12
    np.testing.assert_array_equal(impulse_t(pairs.t), t13)
    assert rel(linearized_t(pairs.k, pairs.g1), t13) <= 1e-10
    direct, transformed = script_t_components(pairs.t, pairs.k, pairs.g1)
    assert rel(direct[C13], t13) <= 1e-10 and rel(transformed[C13], t13) <= 1e-10
    np.testing.assert_array_equal(unitary_impulse_t(pairs.t, pairs.g1), t13)


@pytest.mark.parametrize("n", [3, 4])
def test_decompositions(n, zpoint):
    sys = flat_system(seed=11, n=n, dim=8, s=0.4)
    pairs = pair_operators(sys, zpoint)
    t = exact_t(sys, zpoint)
    k = heitler_exact_k(sys, zpoint)
    assert rel(faddeev_solve(sys, zpoint, pairs).total(), t) <= 1e-10
    assert rel(k_components_solve(sys, zpoint, pairs).total(), k) <= 1e-10
    direct, transformed = script_t_components(pairs.t, pairs.k, pairs.g1)
    lin = linearized_t(pairs.k, pairs.g1)
    for b in direct:
        assert rel(transformed[b], direct[b]) <= 1e-10
    assert rel(direct.total(), lin) <= 1e-12
    assert unitarity_defect(lin, pairs.g1) <= 1e-10
    assert unitarity_defect(t, pairs.g1) <= 1e-10


def test_k_component_coupling_is_second_order(zpoint):
    base = flat_system(seed=5, s=1.0)
    s_grid = np.array([1e-1, 1e-2, 1e-3])
    dev = []
    for s in s_grid:
        sys = base.scaled(s)
        pairs = pair_operators(sys, zpoint)
        kc = k_components_solve(sys, zpoint, pairs)
        dev.append(max(op_norm(kc[c] - pairs.k[c]) for c in kc))
    assert np.polyfit(np.log(s_grid), np.log(dev), 1)[0] == pytest.approx(2.0, abs=0.1)


def test_impulse_error_decreases_with_energy():
    sys = flat_system(seed=2, dim=8, s=0.3)
    errs = []
    for e in np.logspace(1.5, 2.5, 6):
        z = SpectralParameter(e, 0.1 * e)
        errs.append(rel(impulse_t(pair_operators(sys, z).t), exact_t(sys, z)))
    assert np.all(np.diff(errs) < 0)


def test_osborn_basic():
    rng = np.random.default_rng(0)
    t = rng.standard_normal((4, 4)) + 0j
    g1 = np.diag(-1j * rng.uniform(0.1, 1, 4))
    z4 = np.zeros((4, 4))
    assert not osborn_t(z4, z4, g1).any()
    np.testing.assert_array_equal(osborn_t(t, z4, g1), t)
    with pytest.raises(InvalidInputError):
        osborn_t(t, np.zeros((3, 3)), g1)


@pytest.mark.parametrize("seed", range(5))
def test_osborn_coincidence(seed, zpoint):
    sys = flat_system(seed=seed, inert_channels=((2, 3),))
    pairs = pair_operators(sys, zpoint)
    uia = unitary_impulse_t(pairs.t, pairs.g1)
    osb = osborn_t(pairs.t[C12], pairs.t[C13], pairs.g1)
    assert op_norm(uia - osb) <= 1e-14


def test_uia_collapse_tracks_second_order():
    """The dropped terms of the per-channel linearized pieces shrink like the second-order norm."""
    sys = flat_system(seed=8, s=0.3)
    gaps, so = [], []
    for e in np.logspace(1.5, 2.5, 5):
        z = SpectralParameter(e, 0.1 * e)
        p = pair_operators(sys, z)
        direct, _ = script_t_components(p.t, p.k, p.g1)
        gaps.append(max(op_norm(direct[b] - uia_term(p.t, p.g1, b)) for b in direct))
        so.append(second_order_norm(p.t, p.g1))
    e = np.logspace(1.5, 2.5, 5)
    assert np.all(np.diff(gaps) < 0)
    s_gap = np.polyfit(np.log(e), np.log(gaps), 1)[0]
    s_so = np.polyfit(np.log(e), np.log(so), 1)[0]
    assert s_gap == pytest.approx(s_so, abs=0.3)


def test_tensor_model_symmetry():
    rng = np.random.default_rng(4)
    v = PairPotential.dense(0.4 * random_hermitian(rng, 3))
    sys = build_tensor_model_n3(3, v)
    assert sys.dim == 9
    p = tensor_swap_23(3)
    v12 = sys.potentials[C12].matrix
    v13 = sys.potentials[C13].matrix
    np.testing.assert_allclose(p @ v12 @ p.T, v13, atol=1e-15)
    np.testing.assert_allclose(p @ sys.h0.matrix() @ p.T, sys.h0.matrix(), atol=1e-15)
    z = SpectralParameter(3.3, 0.2)
    comps = faddeev_solve(sys, z)
    # swapping particles 2 and 3 exchanges the (1,2) and (1,3) components
    np.testing.assert_allclose(p @ comps[C12] @ p.T, comps[C13], atol=1e-12)
    assert unitarity_defect(exact_t(sys, z), pair_operators(sys, z).g1) <= 1e-10


def test_tensor_model_free():
    sys = build_tensor_model_n3(2, PairPotential.zero(2))
    assert sys.dim == 4
    assert not exact_t(sys, SpectralParameter(1.5, 0.1)).any()


@given(st.integers(0, 2 ** 32 - 1), st.floats(2.0, 40.0), st.floats(0.05, 2.0), st.floats(0.05, 0.5),
       st.sampled_from(["dense_hermitian", "separable_rank1"]))
@settings(max_examples=40, deadline=None)
def test_exact_identities_property(seed, e0, eps, s, kind):
    sys = flat_system(seed=seed, dim=6, s=s, kind=kind)
    z = SpectralParameter(e0, eps)
    pairs = pair_operators(sys, z)
    t = exact_t(sys, z)
    assert rel(faddeev_solve(sys, z, pairs).total(), t) <= 1e-10
    assert rel(t_from_k_full(heitler_exact_k(sys, z), pairs.g1), t) <= 1e-10
    assert unitarity_defect(t, pairs.g1) <= 1e-10
    assert unitarity_defect(linearized_t(pairs.k, pairs.g1), pairs.g1) <= 1e-10


def test_single_channel_exact_matches_pair(system3, zpoint):
    sys = single_channel(system3, C12)
    g0 = resolvent_free(sys.h0, zpoint)
    assert rel(exact_t(sys, zpoint), solve_t_pair(sys.potentials[C12], g0)) <= 1e-12
