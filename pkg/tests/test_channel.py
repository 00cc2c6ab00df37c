import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfisher import channel as ch
from qfisher.errors import InvalidChannelError, LengthMismatchError
from qfisher.ensembles import random_density_matrix, random_observable
from qfisher.su_basis import ObservableRepr, build_generators, observable_to_coeffs, state_to_bloch

from conftest import PAULI


def _all_channels(rng):
    out = [ch.identity_channel(2), ch.identity_channel(3), ch.dephasing(0.7), ch.depolarizing(0.4, 2),
           ch.depolarizing(0.3, 3), ch.amplitude_damping(0.35), ch.rotation_x(1.1),
           ch.unitary_channel(ch.random_unitary(3, rng))]
    out += [ch.random_channel(d, rng) for d in (2, 3, 4)]
    return out


def _depolarize_direct(rho, p):
    n = rho.shape[0]
    return p * rho + (1 - p) * np.eye(n) / n


def test_apply_examples(rng):
    rho = random_density_matrix(2, rng)
    np.testing.assert_allclose(ch.apply(ch.identity_channel(2), rho), rho, atol=1e-15)
    full = ch.KrausChannel([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    np.testing.assert_allclose(ch.apply(full, rho), np.diag(np.diag(rho)), atol=1e-15)
    g = 0.8
    out = ch.apply(ch.dephasing(g), rho)
    np.testing.assert_allclose(np.diag(out), np.diag(rho), atol=1e-15)
    assert out[0, 1] == pytest.approx(math.exp(-g) * rho[0, 1], abs=1e-15)
    # the same map written as a mixture of rho and sigma_z rho sigma_z
    q = math.exp(-g)
    mix = 0.5 * (1 + q) * rho + 0.5 * (1 - q) * PAULI["z"] @ rho @ PAULI["z"]
    np.testing.assert_allclose(out, mix, atol=1e-15)


def test_affine_examples():
    ident = ch.identity_channel(3).affine
    np.testing.assert_allclose(ident.A, np.eye(8), atol=1e-15)
    np.testing.assert_allclose(ident.c, 0, atol=1e-15)
    g = 0.6
    np.testing.assert_allclose(ch.dephasing(g).affine.A, np.diag([math.exp(-g), math.exp(-g), 1]), atol=1e-15)
    np.testing.assert_allclose(ch.dephasing(g).affine.A, ch.dephasing_affine(g).A, atol=1e-15)


@pytest.mark.parametrize("dim", [2, 3, 4])
@pytest.mark.parametrize("p", [0.0, 0.25, 0.9])
def test_depolarizing_affine_is_scaled_identity(dim, p, rng):
    kraus = ch.depolarizing(p, dim)
    np.testing.assert_allclose(kraus.affine.A, p * np.eye(dim * dim - 1), atol=1e-14)
    np.testing.assert_allclose(kraus.affine.c, 0, atol=1e-14)
    rho = random_density_matrix(dim, rng)
    np.testing.assert_allclose(ch.apply(kraus, rho), _depolarize_direct(rho, p), atol=1e-14)


def test_amplitude_damping_closed_form():
    g = 0.3
    a = ch.amplitude_damping(g).affine
    r = math.sqrt(1 - g)
    np.testing.assert_allclose(a.A, np.diag([r, r, 1 - g]), atol=1e-15)
    np.testing.assert_allclose(a.c, [0, 0, g], atol=1e-15)


def test_kraus_affine_consistency(rng):
    for kraus in _all_channels(rng):
        basis = build_generators(kraus.dim)
        ach = kraus.affine
        for _ in range(100):
            rho = random_density_matrix(kraus.dim, rng)
            out = state_to_bloch(ch.apply(kraus, rho), basis)
            assert np.abs(out - ach(state_to_bloch(rho, basis))).max() <= 1e-10


def test_adjoint_duality_and_unitality(rng):
    for kraus in _all_channels(rng):
        n = kraus.dim
        basis = build_generators(n)
        assert np.abs(ch.adjoint_apply(kraus, np.eye(n)) - np.eye(n)).max() <= 1e-10
        for _ in range(20):
            rho = random_density_matrix(n, rng)
            Y = random_observable(n, rng).to_matrix(basis)
            lhs = np.trace(ch.apply(kraus, rho) @ Y)
            rhs = np.trace(rho @ ch.adjoint_apply(kraus, Y))
            assert abs(lhs - rhs) <= 1e-10


def test_adjoint_examples(rng):
    Y = random_observable(2, rng).to_matrix(build_generators(2))
    np.testing.assert_allclose(ch.adjoint_apply(ch.identity_channel(2), Y), Y, atol=1e-15)
    g = 1.3
    np.testing.assert_allclose(ch.adjoint_apply(ch.dephasing(g), PAULI["x"]), math.exp(-g) * PAULI["x"], atol=1e-15)


def test_adjoint_affine_matches_dense(rng):
    ident = ch.identity_channel(2).affine
    obs = random_observable(2, rng)
    out = ch.adjoint_affine(ident, obs)
    assert out.x0 == obs.x0
    np.testing.assert_array_equal(out.x, obs.x)
    g = 0.4
    out = ch.adjoint_affine(ch.dephasing_affine(g), ObservableRepr(0.0, [1, 0, 0]))
    np.testing.assert_allclose(out.x, [math.exp(-g), 0, 0], atol=1e-15)
    for dim in (2, 3):
        basis = build_generators(dim)
        for _ in range(10):
            kraus = ch.random_channel(dim, rng)
            obs = random_observable(dim, rng)
            dense = observable_to_coeffs(ch.adjoint_apply(kraus, obs.to_matrix(basis)), basis)
            out = ch.adjoint_affine(kraus.affine, obs)
            assert out.x0 == pytest.approx(dense.x0, abs=1e-12)
            np.testing.assert_allclose(out.x, dense.x, atol=1e-12)


def test_injectivity():
    assert ch.check_injective(ch.identity_channel(2).affine)
    assert ch.identity_channel(2).affine.min_singular_value == pytest.approx(1.0)
    assert not ch.check_injective(ch.depolarizing(0.0).affine)
    assert ch.check_injective(ch.dephasing_affine(15.0))
    assert not ch.check_injective(ch.dephasing_affine(math.inf))
    # flag flips exactly at the tolerance
    assert ch.check_injective(ch.dephasing_affine(-math.log(2e-9)))
    assert not ch.check_injective(ch.dephasing_affine(-math.log(0.5e-9)))
    assert ch.check_injective(ch.dephasing_affine(-math.log(0.5e-9)), tol=1e-10)


def test_compose_examples(rng):
    a = ch.random_channel(3, rng).affine
    out = ch.compose(ch.identity_channel(3).affine, a)
    np.testing.assert_allclose(out.A, a.A, atol=1e-14)
    np.testing.assert_allclose(out.c, a.c, atol=1e-14)
    out = ch.compose(ch.dephasing_affine(0.2), ch.dephasing_affine(0.5))
    np.testing.assert_allclose(out.A, ch.dephasing_affine(0.7).A, atol=1e-15)
    rot = ch.compose(ch.rotation_x(0.4).affine, ch.dephasing_affine(0.5))
    off = rot.A - np.diag(np.diag(rot.A))
    assert np.abs(off).max() > 0.1


def test_compose_matches_kraus_products(rng):
    for dim in (2, 3):
        for _ in range(10):
            first, second = ch.random_channel(dim, rng), ch.random_channel(dim, rng)
            via_affine = ch.compose(second.affine, first.affine)
            via_kraus = ch.compose_kraus(second, first).affine
            assert np.abs(via_affine.A - via_kraus.A).max() <= 1e-10
            assert np.abs(via_affine.c - via_kraus.c).max() <= 1e-10


def test_unitary_examples(rng):
    np.testing.assert_allclose(ch.unitary_channel(np.eye(2)).affine.A, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(ch.rotation_x(math.pi).affine.A, np.diag([1, -1, -1]), atol=1e-15)
    for dim in (2, 3, 4):
        A = ch.unitary_channel(ch.random_unitary(dim, rng)).affine.A
        np.testing.assert_allclose(A @ A.T, np.eye(dim * dim - 1), atol=1e-12)


def test_invalid_channels():
    with pytest.raises(InvalidChannelError):
        ch.KrausChannel([np.eye(2), np.eye(2)])
    with pytest.raises(InvalidChannelError):
        ch.unitary_channel(np.array([[1, 1], [0, 1]]))
    with pytest.raises(InvalidChannelError):
        ch.depolarizing(1.5)
    with pytest.raises(InvalidChannelError):
        ch.dephasing(-0.1)
    with pytest.raises(LengthMismatchError):
        ch.apply(ch.identity_channel(2), np.eye(3) / 3)
    with pytest.raises(LengthMismatchError):
        ch.compose(ch.identity_channel(2).affine, ch.identity_channel(3).affine)


@settings(max_examples=30, deadline=None)
@given(dim=st.sampled_from([2, 3]), seed=st.integers(0, 2**32 - 1),
       noise=st.floats(0.0, 1.0), n_kraus=st.integers(1, 4))
def test_random_channels_are_contractive_and_trace_preserving(dim, seed, noise, n_kraus):
    rng = np.random.default_rng(seed)
    kraus = ch.random_channel(dim, rng, n_kraus=n_kraus, noise=noise)
    tp = np.einsum("kba,kbc->ac", kraus.kraus.conj(), kraus.kraus)
    assert np.abs(tp - np.eye(dim)).max() <= 1e-10
    if dim == 2:
        # qubit channels map the Bloch ball into itself
        assert np.linalg.norm(kraus.affine.A, 2) <= 1 + 1e-12
