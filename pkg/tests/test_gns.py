import numpy as np
import pytest
from hypothesis import given, strategies as st

from partialcross.algebra import AlgebraElement, BlockShape, TracialState, is_positive, random_element
from partialcross.errors import StructuralError
from partialcross.gns import (GNSSpace, LinearMap, MatrixAlgebra, check_completely_positive,
                              check_tau_decreasing, choi_matrix, faithful_representation, finite_rank_approximation,
                              hs_conditional_expectation, induce_operator, trace_map, two_norm)
from partialcross.random_systems import Budget, random_crossed_product, random_ucp_map

seeds = st.integers(0, 10 ** 6)


def transpose_map(shape):
    return LinearMap.from_function(MatrixAlgebra(shape), lambda a: AlgebraElement(shape, [b.T for b in a.blocks]))


def kraus_map(shape, ks):
    """a -> sum_k K a K^* blockwise; Kraus form is an independent CP oracle."""
    return LinearMap.from_function(
        MatrixAlgebra(shape), lambda a: AlgebraElement(shape, [sum(k[i] @ b @ k[i].conj().T for k in ks)
                                                               for i, b in enumerate(a.blocks)]))


def test_two_norm_examples(w1):
    space = GNSSpace.of_trace(w1.trace)
    assert two_norm(space, AlgebraElement.identity(w1.shape)) == pytest.approx(1)
    assert two_norm(space, AlgebraElement.central(w1.shape, [0, 1])) == pytest.approx(np.sqrt(0.5))


def test_two_norm_definition(rng):
    tau = TracialState((2, 1), (0.3, 0.4))
    space = GNSSpace.of_trace(tau)
    a = random_element(tau.shape, rng)
    assert two_norm(space, a) ** 2 == pytest.approx(tau(a.adjoint() @ a).real, abs=1e-12)


def test_nonfaithful_trace_rejected():
    with pytest.raises(StructuralError):
        GNSSpace.of_trace(TracialState((1, 1), (1.0, 0.0)))


def test_induced_operators(w1):
    space = GNSSpace.of_trace(w1.trace)
    ident = LinearMap.identity(MatrixAlgebra(w1.shape))
    assert np.allclose(induce_operator(space, ident), np.eye(2))
    p = induce_operator(space, trace_map(w1.trace))
    # orthonormal vector of the unit is (sqrt(1/2), sqrt(1/2))
    v = np.array([1, 1]) / np.sqrt(2)
    assert np.allclose(p, np.outer(v, v))


def test_induce_operator_is_multiplicative(rng):
    tau = TracialState.normalized((2, 1), [1, 2])
    space = GNSSpace.of_trace(tau)
    phi, psi = random_ucp_map(tau, rng), random_ucp_map(tau, rng)
    lhs = induce_operator(space, phi @ psi)
    assert np.abs(lhs - induce_operator(space, phi) @ induce_operator(space, psi)).max() < 1e-12


def test_finite_rank_approximation(rng):
    tau = TracialState((2, 1), (0.3, 0.4))
    model = MatrixAlgebra(tau.shape)
    space = GNSSpace.of_trace(tau)
    ident = LinearMap.identity(model)
    assert finite_rank_approximation(space, ident, 1.0).rank == 0
    assert finite_rank_approximation(space, ident, 0.0).rank == model.dim
    noise = LinearMap(model, 0.01 * rng.standard_normal((5, 5)) / 5)
    approx = finite_rank_approximation(space, trace_map(tau) + noise, 0.05)
    assert approx.rank == 1
    err = induce_operator(space, trace_map(tau) + noise - approx.map)
    assert np.linalg.norm(err, 2) <= approx.bound + 1e-12 <= 0.05


def test_tau_decreasing_examples(w1):
    model = MatrixAlgebra(w1.shape)
    assert check_tau_decreasing(w1.trace, LinearMap.identity(model))
    assert check_tau_decreasing(w1.trace, trace_map(w1.trace))
    assert not check_tau_decreasing(w1.trace, 2 * LinearMap.identity(model))


def test_choi_of_transpose():
    shape = BlockShape((2,))
    cert = check_completely_positive(transpose_map(shape))
    assert not cert and cert.certificate == pytest.approx(-1)
    # transpose is still positive at level one
    assert check_completely_positive(LinearMap.identity(MatrixAlgebra(shape)))


def test_choi_reshuffle_matches_definition(rng):
    d = 2
    k = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    superop = np.kron(k, k.conj())
    units = [np.outer(np.eye(d)[r], np.eye(d)[s]) for r in range(d) for s in range(d)]
    oracle = sum(np.kron(e, k @ e @ k.conj().T) for e in units)
    assert np.allclose(choi_matrix(superop, d), oracle)


@given(seeds)
def test_kraus_maps_are_certified(seed):
    rng = np.random.default_rng(seed)
    shape = BlockShape(tuple(int(n) for n in rng.integers(1, 3, size=2)))
    ks = [[rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for n in shape.dims] for _ in range(2)]
    phi = kraus_map(shape, ks)
    assert check_completely_positive(phi)
    # CP implies positivity on random positive elements
    a = random_element(shape, rng)
    assert is_positive(phi(a.adjoint() @ a))


@given(seeds)
def test_composition_closure(seed):
    rng = np.random.default_rng(seed)
    tau = TracialState.normalized((1, 2), rng.uniform(0.2, 1, 2))
    phi, psi = random_ucp_map(tau, rng), random_ucp_map(tau, rng)
    for m in (phi, psi, phi @ psi):
        assert check_completely_positive(m) and check_tau_decreasing(tau, m) and m.is_unital()


@given(seeds)
def test_hs_expectation_properties(seed):
    X, _ = random_crossed_product(seed, Budget(max_order=4, max_algebra_dim=5))
    rng = np.random.default_rng(seed)
    d, R = faithful_representation(X)
    E = hs_conditional_expectation(X)
    assert np.allclose(E @ E, E, atol=1e-10)
    # unital, trace-preserving
    eye = np.eye(d).ravel()
    assert np.allclose(E @ eye, eye, atol=1e-10)
    assert np.allclose(eye @ E, eye, atol=1e-10)
    # completely positive
    assert np.linalg.eigvalsh(choi_matrix(E, d)).min() > -1e-10
    # bimodule property for b, c in rho(B)
    b = (R @ rng.standard_normal(X.dim)).reshape(d, d)
    c = (R @ rng.standard_normal(X.dim)).reshape(d, d)
    x = rng.standard_normal((d, d))
    ex = (E @ x.ravel()).reshape(d, d)
    assert np.allclose((E @ (b @ x @ c).ravel()).reshape(d, d), b @ ex @ c, atol=1e-9)


def test_regular_kind_agrees_with_gns(w1_system):
    X = w1_system
    # a_g delta_g -> chi(g) a_g delta_g is an automorphism (dual action of the sign character)
    flip = LinearMap(X, np.diag([1, 1, -1]))
    # e2 + e2 delta_g is positive, its image e2 + 3 e2 delta_g is not
    stretch = LinearMap(X, np.diag([1, 1, 3]))
    for kind in ("gns", "regular"):
        assert check_completely_positive(LinearMap.identity(X), kind=kind)
        assert check_completely_positive(flip, kind=kind)
        cert = check_completely_positive(stretch, kind=kind)
        assert not cert and cert.certificate < -0.5


def test_ucp_contracts_two_norm(rng):
    tau = TracialState.normalized((2, 1, 1), [1, 1, 2])
    space = GNSSpace.of_trace(tau)
    for _ in range(5):
        phi = random_ucp_map(tau, rng)
        assert np.linalg.norm(induce_operator(space, phi), 2) <= 1 + 1e-9
