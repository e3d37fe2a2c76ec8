import numpy as np
import pytest
from hypothesis import given, strategies as st

from partialcross.algebra import AlgebraElement, TracialState
from partialcross.crossed_product import CrossedElement, CrossedProduct
from partialcross.errors import CertificationError, DomainError
from partialcross.gns import (LinearMap, MatrixAlgebra, check_completely_positive, check_tau_decreasing,
                              check_ucp, trace_map)
from partialcross.groups import cyclic_group, is_scalar_positive_definite, symmetric_group
from partialcross.haagerup import (CenterValuedPDFunction, certify_haagerup_data, compress_to_algebra,
                                   contraction_transfer, convention_divergence, equivariance_defect, eta_from_ucp, h_from_eta,
                                   induce_ucp_on_crossed, is_pd_wrt_action, pd_matrix, truncation_estimate)
from partialcross.partial_action import PartialAction, global_action, trivial_action
from partialcross.random_systems import Budget, random_crossed_product, random_equivariant_ucp_map, random_eta

seeds = st.integers(0, 10 ** 6)
SMALL = Budget(max_order=6, max_algebra_dim=6)


def w1_h(w1, c):
    return CenterValuedPDFunction(w1.action, [[1, 1], [0, c]])


def identity_on(shape):
    return LinearMap.identity(MatrixAlgebra(shape))


def test_support_is_enforced(w1):
    with pytest.raises(DomainError):
        CenterValuedPDFunction(w1.action, [[1, 1], [1, 0.5]])


def test_w1_pd_matrix(w1):
    c = 0.4
    m = pd_matrix(w1.action, w1_h(w1, c), [0, 1])
    assert np.allclose(m.blocks[0], [[1, 0], [0, 0]])
    assert np.allclose(m.blocks[1], [[1, c], [c, 1]])
    dup = pd_matrix(w1.action, w1_h(w1, c), [1, 1])
    assert np.allclose(dup.blocks[0], 0) and np.allclose(dup.blocks[1], 1)


def test_w1_paper_convention_diverges(w1):
    c = 0.5
    m = pd_matrix(w1.action, w1_h(w1, c), [0, 1], "paper")
    # h(e) = 1 is not in D_g, so the paper branch zeroes the (g, g) entry
    assert np.allclose(m.blocks[1], [[1, c], [c, 0]])
    assert convention_divergence(w1.action, w1_h(w1, c)) == [(1, 1)]
    cert = is_pd_wrt_action(w1.action, w1_h(w1, c), convention="paper")
    assert not cert
    # eigenvalues of [[1, c], [c, 0]]
    assert cert.min_eigenvalue == pytest.approx((1 - np.sqrt(1 + 4 * c * c)) / 2)


def test_w1_pd_examples(w1):
    assert is_pd_wrt_action(w1.action, w1_h(w1, 0.5))
    cert = is_pd_wrt_action(w1.action, w1_h(w1, 1.5))
    assert not cert and cert.min_eigenvalue == pytest.approx(-0.5)
    delta = CenterValuedPDFunction(w1.action, [[1, 1], [0, 0]])
    assert is_pd_wrt_action(w1.action, delta)


def test_units_on_trivial_action():
    act = trivial_action(symmetric_group(3), [1, 2])
    assert is_pd_wrt_action(act, CenterValuedPDFunction.units(act))


@given(seeds)
def test_global_degeneration(seed):
    rng = np.random.default_rng(seed)
    group = [cyclic_group(4), symmetric_group(3)][seed % 2]
    act = trivial_action(group, [1, 2])
    eta = random_eta(group, rng)
    if seed % 3 == 0:
        eta = eta + 0.3 * rng.standard_normal(group.order)
    h = CenterValuedPDFunction.from_eta(act, eta)
    ours, classical = is_pd_wrt_action(act, h), is_scalar_positive_definite(group, eta)
    assert bool(ours) == bool(classical)
    assert abs(ours.min_eigenvalue - classical.min_eigenvalue) < 1e-12


@given(seeds)
def test_schur_stability(seed):
    X, _ = random_crossed_product(seed, SMALL)
    rng = np.random.default_rng(seed)
    h1 = h_from_eta(X.action, random_eta(X.group, rng))
    h2 = h_from_eta(X.action, random_eta(X.group, rng))
    assert is_pd_wrt_action(X.action, h1) and is_pd_wrt_action(X.action, h2)
    assert is_pd_wrt_action(X.action, h1 * h2)


@given(seeds)
def test_eta_to_h_is_positive_definite(seed):
    X, _ = random_crossed_product(seed, SMALL)
    eta = random_eta(X.group, np.random.default_rng(seed))
    assert is_pd_wrt_action(X.action, h_from_eta(X.action, eta))


def test_h_from_eta_w1(w1):
    h = h_from_eta(w1.action, [1, 0.5])
    assert np.allclose(h.values, [[1, 1], [0, 0.5]])
    assert np.allclose(pd_matrix(w1.action, h, [0, 1]).blocks[1], [[1, 0.5], [0.5, 1]])
    boundary = is_pd_wrt_action(w1.action, h_from_eta(w1.action, [1, 1]))
    assert boundary and abs(boundary.min_eigenvalue) < 1e-12


def test_induced_map_w1(w1_system, w1):
    X = w1_system
    Phi = induce_ucp_on_crossed(X, identity_on(X.shape), w1_h(w1, 0.5))
    x = CrossedElement.from_dict(X, {1: AlgebraElement.central(X.shape, [0, 1])})
    assert Phi(x).max_deviation(0.5 * x) < 1e-15
    a = AlgebraElement.central(X.shape, [2, -1])
    assert Phi(CrossedElement.embed(X, a)).max_deviation(CrossedElement.embed(X, a)) < 1e-15
    units = CenterValuedPDFunction.units(X.action)
    assert np.allclose(induce_ucp_on_crossed(X, identity_on(X.shape), units).matrix, np.eye(X.dim))


def test_induced_map_preconditions(w1_system, w1):
    X = w1_system
    with pytest.raises(CertificationError):
        induce_ucp_on_crossed(X, identity_on(X.shape), w1_h(w1, 1.5))
    with pytest.raises(CertificationError):
        induce_ucp_on_crossed(X, 2 * identity_on(X.shape), w1_h(w1, 0.5))
    half = CenterValuedPDFunction(X.action, [[0.5, 0.5], [0, 0.1]])
    with pytest.raises(CertificationError):
        induce_ucp_on_crossed(X, identity_on(X.shape), half)


@given(seeds)
def test_induced_map_is_ucp(seed):
    X, _ = random_crossed_product(seed, SMALL)
    rng = np.random.default_rng(seed)
    phi = random_equivariant_ucp_map(X.action, X.trace, rng)
    assert equivariance_defect(X.action, phi) < 1e-12
    h = h_from_eta(X.action, random_eta(X.group, rng))
    Phi = induce_ucp_on_crossed(X, phi, h)
    assert check_ucp(Phi)
    assert check_tau_decreasing(X.trace_functional, Phi)
    # compression returns phi and inherits the certificates
    comp = compress_to_algebra(X, Phi)
    assert np.abs(comp.matrix - phi.matrix).max() < 1e-12
    assert check_ucp(comp) and check_tau_decreasing(X.trace, comp)
    assert contraction_transfer(X, Phi, comp) <= 1e-10


def test_swap_counterexample_needs_equivariance():
    # Z2 swapping the blocks of C + C; phi(a, b) = (a, a) is UCP but not equivariant
    act = global_action(cyclic_group(2), [1, 1], {1: {0: 1, 1: 0}})
    X = CrossedProduct(act, TracialState.uniform(act.shape))
    phi = LinearMap(MatrixAlgebra(X.shape), np.array([[1, 0], [1, 0]]))
    assert check_ucp(phi)
    assert equivariance_defect(act, phi) == 1
    Phi = induce_ucp_on_crossed(X, phi, CenterValuedPDFunction.units(act))
    assert not Phi.is_hermitian_preserving()
    assert not check_completely_positive(Phi)


def test_compression_examples(w1_system, w1):
    X = w1_system
    assert np.allclose(compress_to_algebra(X, LinearMap.identity(X)).matrix, np.eye(2))
    Phi = induce_ucp_on_crossed(X, identity_on(X.shape), w1_h(w1, 0.5))
    assert np.allclose(compress_to_algebra(X, Phi).matrix, np.eye(2))
    tr = LinearMap(X, np.outer(X.unit_vector(), X.trace_functional))
    assert np.allclose(compress_to_algebra(X, tr).matrix, trace_map(X.trace).matrix)


def test_eta_from_ucp_examples(w1_system):
    X = w1_system
    assert np.allclose(eta_from_ucp(X, LinearMap.identity(X)), [1, 0.5])
    tr = LinearMap(X, np.outer(X.unit_vector(), X.trace_functional))
    assert np.allclose(eta_from_ucp(X, tr), [1, 0])
    act = trivial_action(cyclic_group(3), [2])
    Y = CrossedProduct(act, TracialState.uniform(act.shape))
    assert np.allclose(eta_from_ucp(Y, LinearMap.identity(Y)), 1)


@given(seeds)
def test_eta_from_ucp_is_positive_definite(seed):
    X, _ = random_crossed_product(seed, SMALL)
    rng = np.random.default_rng(seed)
    phi = random_equivariant_ucp_map(X.action, X.trace, rng)
    Phi = induce_ucp_on_crossed(X, phi, h_from_eta(X.action, random_eta(X.group, rng)))
    eta = eta_from_ucp(X, Phi)
    assert abs(eta[X.group.identity] - 1) < 1e-12
    assert is_scalar_positive_definite(X.group, eta)
    assert np.abs(eta).max() <= 1 + 1e-9


@given(seeds)
def test_round_trip_at_unit(seed):
    X, _ = random_crossed_product(seed, SMALL)
    h = h_from_eta(X.action, random_eta(X.group, np.random.default_rng(seed)))
    Phi = induce_ucp_on_crossed(X, identity_on(X.shape), h)
    assert abs(eta_from_ucp(X, Phi)[X.group.identity] - 1) < 1e-12


def test_truncation_trivial_cases(w1_system, w1):
    X = w1_system
    phi = identity_on(X.shape)
    h = w1_h(w1, 0.5)
    full = truncation_estimate(X, phi, h, phi, X.group.elements())
    assert full.measured < 1e-14 and full.bound == 0 and full.holds
    zero = LinearMap(MatrixAlgebra(X.shape), np.zeros((2, 2)))
    empty = truncation_estimate(X, phi, h, zero, [])
    # Phi~ has singular values 1, 1, 0.5
    assert empty.measured == pytest.approx(1.0)
    assert empty.measured <= np.sqrt(2 * (empty.k_inf + empty.phi_norm ** 2)) * (1 + 1e-9)
    assert empty.rank == 0


def test_truncation_w1_at_identity(w1_system, w1):
    X = w1_system
    phi = identity_on(X.shape)
    c = 0.5
    r = truncation_estimate(X, phi, w1_h(w1, c), phi, [0])
    # the only discarded component is c e2 delta_g, whose induced operator has norm |c|
    assert r.measured == pytest.approx(c)
    assert r.delta == pytest.approx(c * np.sqrt(0.5))
    assert r.bound == pytest.approx(np.sqrt(2) * r.delta * r.phi_norm)
    assert r.sharp_bound == pytest.approx(c)
    assert r.rank <= r.rank_limit


def test_truncation_bound_with_small_ideal():
    # tau(1_g) = 1/5 < 1/2: the 2-norm delta undershoots the discarded operator norm
    act = PartialAction.build(cyclic_group(2), [1, 1], {1: ({1: 1}, {})})
    X = CrossedProduct(act, TracialState(act.shape, (0.8, 0.2)))
    phi = identity_on(X.shape)
    h = CenterValuedPDFunction(act, [[1, 1], [0, 0.5]])
    r = truncation_estimate(X, phi, h, phi, [0])
    assert r.measured == pytest.approx(0.5)
    assert r.bound == pytest.approx(np.sqrt(2 * 0.2) * 0.5)
    assert not r.holds
    assert r.holds_sharp


def test_certify_constant_identity(w1_system):
    act = trivial_action(cyclic_group(3), [1, 2])
    Y = CrossedProduct(act, TracialState.uniform(act.shape))
    stages = [(identity_on(Y.shape), CenterValuedPDFunction.units(act))] * 3
    reports = certify_haagerup_data(Y, stages, [1e-12] * 3)
    assert all(r.passed and r.deviation == 0 for r in reports)
    # on a proper partial action 1_g stays away from 1 by sqrt(tau(1 - 1_g))
    X = w1_system
    stages = [(identity_on(X.shape), CenterValuedPDFunction.units(X.action))] * 2
    for r in certify_haagerup_data(X, stages, [1.0] * 2):
        assert r.h_deviation == pytest.approx(np.sqrt(0.5))
        assert r.h_deviation_from_units == 0 and r.phi_deviation == 0 and r.Phi_deviation == 0


def test_certify_w1_sequence(w1_system):
    X = w1_system
    stages = [(identity_on(X.shape), CenterValuedPDFunction(X.action, [[1, 1], [0, 1 - 1 / n]]))
              for n in range(1, 5)]
    reports = certify_haagerup_data(X, stages, [1.0] * 4)
    for n, r in enumerate(reports, start=1):
        assert r.h_deviation == pytest.approx(np.sqrt(0.5 * (1 + 1 / n ** 2)))
        assert r.h_deviation_from_units == pytest.approx(np.sqrt(0.5) / n)
        assert r.prop_estimate_holds and r.passed
    devs = [r.Phi_deviation for r in reports]
    assert devs == sorted(devs, reverse=True)


def test_certify_fixed_sequence_fails(w1_system):
    X = w1_system
    h = CenterValuedPDFunction(X.action, [[1, 1], [0, 0.3]])
    stages = [(identity_on(X.shape), h)] * 3
    reports = certify_haagerup_data(X, stages, [1 / n for n in (1, 10, 100)])
    assert reports[0].passed
    assert not reports[2].passed and "exceeds" in reports[2].failures()[0]
