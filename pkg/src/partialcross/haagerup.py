"""Positive-definite functions relative to a partial action and the maps they induce.

Central elements of a multi-matrix algebra are per-block scalars, so a
center-valued function ``h: G -> Z(A)`` is stored as a ``|G| x k`` array.

Two conventions are available for the twisted Gram matrix. With
``"cutdown"`` the (i, j) entry is ``alpha_{g_i}(1_{g_i^-1} h(g_i^-1 g_j))``,
which is hermitian whenever ``h(g^-1) = alpha_{g^-1}(h(g)*)`` and turns
``h(g) = eta(g) 1_g`` into ``eta(g_i^-1 g_j) 1_{g_i} 1_{g_j}``.
With ``"paper"`` the entry is ``alpha_{g_j}(h(g_i^-1 g_j))`` when that value
already lies in the domain ``D_{g_j^-1}`` and 0 otherwise. For proper partial
actions the second one rejects ``h(g) = eta(g) 1_g`` (diagonal entries vanish).
Twisting by ``g_j`` while cutting down is not hermitian in general once the
group has elements of order above 2, so it is not offered.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .algebra import DEFAULT_TOL, AlgebraElement, center_component
from .crossed_product import CrossedElement, CrossedProduct
from .errors import CertificationError, DomainError, StructuralError
from .gns import (Certificate, GNSSpace, LinearMap, MatrixAlgebra, check_completely_positive,
                  check_tau_decreasing, check_ucp, induce_operator, rank_curve, two_norm)
from .groups import PDCertificate
from .partial_action import PartialAction

CONVENTIONS = ("cutdown", "paper")


@dataclass(frozen=True, eq=False)
class CenterValuedPDFunction:
    """h: G -> Z(A) with h(g) supported on D_g."""

    action: PartialAction
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        G, shape = self.action.group, self.action.shape
        if v.shape != (G.order, shape.num_blocks):
            raise StructuralError(f"expected values of shape {(G.order, shape.num_blocks)}, got {v.shape}")
        for g in G.elements():
            bad = [i for i in range(shape.num_blocks) if i not in self.action.range(g) and abs(v[g, i]) > DEFAULT_TOL]
            if bad:
                raise DomainError(f"h({g}) is not supported on D_{g}; offending blocks {bad}", bad)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_eta(cls, action: PartialAction, eta: Sequence[complex]) -> "CenterValuedPDFunction":
        """g -> eta(g) 1_g."""
        G, k = action.group, action.shape.num_blocks
        v = np.zeros((G.order, k), dtype=complex)
        for g in G.elements():
            for i in action.range(g):
                v[g, i] = eta[g]
        return cls(action, v)

    @classmethod
    def units(cls, action: PartialAction) -> "CenterValuedPDFunction":
        return cls.from_eta(action, np.ones(action.group.order))

    @classmethod
    def from_elements(cls, action: PartialAction, elements: Sequence[AlgebraElement]) -> "CenterValuedPDFunction":
        return cls(action, np.array([center_component(a) for a in elements]))

    def __call__(self, g: int) -> AlgebraElement:
        return AlgebraElement.central(self.action.shape, self.values[g])

    def __mul__(self, other: "CenterValuedPDFunction") -> "CenterValuedPDFunction":
        """Pointwise product g -> h(g) h'(g)."""
        if other.action is not self.action:
            raise StructuralError("functions relative to different actions")
        return CenterValuedPDFunction(self.action, self.values * other.values)


def _entry(action: PartialAction, h: CenterValuedPDFunction, gi: int, gj: int, convention: str) -> np.ndarray:
    """Per-block scalars of the (i, j) entry."""
    G = action.group
    z = h.values[G.mul(G.inv(gi), gj)]
    k = action.shape.num_blocks
    out = np.zeros(k, dtype=complex)
    if convention == "paper":
        bmap = action.block_map(gj)
        if any(abs(z[i]) > DEFAULT_TOL for i in range(k) if i not in bmap):
            return out
    elif convention == "cutdown":
        bmap = action.block_map(gi)
    else:
        raise ValueError(f"unknown convention {convention!r}")
    for s, t in bmap.items():
        out[t] = z[s]
    return out


def pd_matrix(action: PartialAction, h: CenterValuedPDFunction, elements: Iterable[int],
              convention: str = "cutdown") -> AlgebraElement:
    """The n x n matrix over A as an element of Mat_n(A) = (+)_i M_{n n_i}."""
    els = list(elements)
    n = len(els)
    shape = action.shape
    scal = np.zeros((shape.num_blocks, n, n), dtype=complex)
    for i, gi in enumerate(els):
        for j, gj in enumerate(els):
            scal[:, i, j] = _entry(action, h, gi, gj, convention)
    return AlgebraElement(shape.scaled(n), [np.kron(scal[b], np.eye(d)) for b, d in enumerate(shape.dims)])


def scalar_pd_blocks(action: PartialAction, h: CenterValuedPDFunction, convention: str = "cutdown") -> np.ndarray:
    """Per block of A, the |G| x |G| scalar matrix of the full-tuple entries."""
    G = action.group
    m = G.order
    scal = np.zeros((action.shape.num_blocks, m, m), dtype=complex)
    for gi in G.elements():
        for gj in G.elements():
            scal[:, gi, gj] = _entry(action, h, gi, gj, convention)
    return scal


def is_pd_wrt_action(action: PartialAction, h: CenterValuedPDFunction, tol: float = DEFAULT_TOL,
                     convention: str = "cutdown") -> PDCertificate:
    """PSD test of the full-tuple matrix in Mat_|G|(A)."""
    mat = pd_matrix(action, h, action.group.elements(), convention)
    lo, herm, scale = np.inf, 0.0, 1.0
    for b in mat.blocks:
        herm = max(herm, float(np.abs(b - b.conj().T).max()))
        lo = min(lo, float(np.linalg.eigvalsh((b + b.conj().T) / 2)[0]))
        scale = max(scale, 1.0 + float(np.abs(b).max()))
    return PDCertificate(bool(herm <= tol * scale and lo >= -tol * scale), lo)


def convention_divergence(action: PartialAction, h: CenterValuedPDFunction) -> list[tuple[int, int]]:
    """Pairs (g_i, g_j) where the two conventions give different entries."""
    G = action.group
    return [(gi, gj) for gi in G.elements() for gj in G.elements()
            if np.abs(_entry(action, h, gi, gj, "cutdown") - _entry(action, h, gi, gj, "paper")).max() > DEFAULT_TOL]


def _range_projection(action: PartialAction, g: int) -> np.ndarray:
    shape = action.shape
    diag = np.zeros(shape.dim)
    for t in action.range(g):
        diag[shape.offsets[t]:shape.offsets[t] + shape.dims[t] ** 2] = 1.0
    return np.diag(diag)


def equivariance_defect(action: PartialAction, phi: LinearMap) -> float:
    """How far phi is from preserving each D_g and commuting with alpha_g on D_{g^-1}.

    Zero exactly when phi(D_g) is contained in D_g and phi(alpha_g(a)) = alpha_g(phi(a))
    for a in D_{g^-1}. Without this the coefficient-wise map need not be positive.
    """
    M = phi.matrix
    out = 0.0
    for g in action.group.elements():
        S = action.superoperators[g]
        P = _range_projection(action, g)
        Q = _range_projection(action, action.group.inv(g))
        out = max(out, float(np.abs((np.eye(len(M)) - P) @ M @ P).max(initial=0.0)),
                  float(np.abs(M @ S - S @ M @ Q).max(initial=0.0)))
    return out


def _induced_matrix(system: CrossedProduct, phi_matrix: np.ndarray, h: CenterValuedPDFunction,
                    support: Iterable[int] | None = None) -> np.ndarray:
    keep = set(system.group.elements()) if support is None else set(support)
    out = np.zeros((system.dim, system.dim), dtype=complex)
    shape = system.shape
    for g in system.group.elements():
        if g not in keep:
            continue
        cols = system.coefficient_columns(g)
        if not len(cols):
            continue
        scale = np.concatenate([np.full(shape.dims[i] ** 2, h.values[g, i]) for i in sorted(system.action.range(g))])
        sl = system.coefficient_slice(g)
        out[sl, sl] = scale[:, None] * phi_matrix[np.ix_(cols, cols)]
    return out


def induce_ucp_on_crossed(system: CrossedProduct, phi: LinearMap, h: CenterValuedPDFunction,
                          tol: float = DEFAULT_TOL, certify: bool = True) -> LinearMap:
    """Phi(sum a_g d_g) = sum phi(a_g) h(g) d_g.

    With ``certify`` the preconditions are checked first: phi unital and CP,
    h positive definite relative to the action, h(e) = 1.
    """
    if h.action is not system.action:
        raise StructuralError("h is defined for a different action")
    if certify:
        if not phi.is_unital(tol):
            raise CertificationError("phi is not unital")
        cp = check_completely_positive(phi, tol)
        if not cp:
            raise CertificationError("phi is not completely positive", cp.certificate)
        pd = is_pd_wrt_action(system.action, h, tol)
        if not pd:
            raise CertificationError("h is not positive definite relative to the action", pd.min_eigenvalue)
        dev = float(np.abs(h.values[system.group.identity] - 1).max())
        if dev > tol:
            raise CertificationError("h(e) is not the unit", dev)
    return LinearMap(system, _induced_matrix(system, phi.matrix, h))


@dataclass
class TruncationReport:
    truncated: LinearMap
    measured: float
    eps_phi: float
    delta: float
    delta_op: float
    k_inf: float
    k_two: float
    phi_norm: float
    bound: float
    holds: bool
    sharp_bound: float
    holds_sharp: bool
    coarse_bound_squared: float
    holds_coarse: bool
    rank: int
    rank_limit: int

    def as_dict(self):
        d = {k: v for k, v in self.__dict__.items() if k != "truncated"}
        return d


def truncation_estimate(system: CrossedProduct, phi: LinearMap, h: CenterValuedPDFunction,
                        phi_approx: LinearMap, F: Iterable[int], tol: float = DEFAULT_TOL) -> TruncationReport:
    """T(sum a_g d_g) = sum_{g in F} phi_approx(a_g) h(g) d_g, with error bounds.

    ``bound`` is sqrt(2 (eps_phi^2 K_inf + delta^2 ||phi~||^2)) with delta the
    largest 2-norm of h off F and K_inf the largest squared operator norm of h.
    ``sharp_bound`` replaces delta by the operator norm of h off F and uses
    orthogonality of the delta_g components. ``coarse_bound_squared`` is
    max(eps_phi, delta) sqrt(2 (K_2 + ||phi~||)) with K_2 the largest squared
    2-norm of h; it is recorded, not enforced.
    """
    F = set(F)
    G = system.group
    space_a = GNSSpace.of_trace(system.trace)
    space_x = GNSSpace.of_crossed_product(system)
    phi_op = induce_operator(space_a, phi)
    approx_op = induce_operator(space_a, phi_approx)
    eps_phi = float(np.linalg.norm(phi_op - approx_op, 2))
    phi_norm = float(np.linalg.norm(phi_op, 2))
    op_norms = np.abs(h.values).max(axis=1)
    two_norms = np.array([two_norm(space_a, h(g)) for g in G.elements()])
    outside = [g for g in G.elements() if g not in F]
    delta = float(max((two_norms[g] for g in outside), default=0.0))
    delta_op = float(max((op_norms[g] for g in outside), default=0.0))
    k_inf = float((op_norms ** 2).max())
    k_two = float((two_norms ** 2).max())

    Phi = _induced_matrix(system, phi.matrix, h)
    T = _induced_matrix(system, phi_approx.matrix, h, F)
    diff = induce_operator(space_x, LinearMap(system, Phi - T))
    measured = float(np.linalg.norm(diff, 2)) if diff.size else 0.0
    bound = float(np.sqrt(2 * (eps_phi ** 2 * k_inf + delta ** 2 * phi_norm ** 2)))
    k_inf_f = float(max((op_norms[g] ** 2 for g in F), default=0.0))
    sharp = float(np.sqrt(max(eps_phi ** 2 * k_inf_f, delta_op ** 2 * phi_norm ** 2)))
    coarse_sq = float(max(eps_phi, delta) * np.sqrt(2 * (k_two + phi_norm)))
    t_op = induce_operator(space_x, LinearMap(system, T))
    rank = int(np.linalg.matrix_rank(t_op, tol=1e-10)) if t_op.size else 0
    approx_rank = int(np.linalg.matrix_rank(approx_op, tol=1e-10))
    slack = tol * (1 + measured)
    return TruncationReport(
        truncated=LinearMap(system, T), measured=measured, eps_phi=eps_phi, delta=delta, delta_op=delta_op,
        k_inf=k_inf, k_two=k_two, phi_norm=phi_norm, bound=bound, holds=measured <= bound + slack,
        sharp_bound=sharp, holds_sharp=measured <= sharp + slack, coarse_bound_squared=coarse_sq,
        holds_coarse=measured ** 2 <= coarse_sq + slack, rank=rank, rank_limit=approx_rank * len(F))


def compress_to_algebra(system: CrossedProduct, Phi: LinearMap) -> LinearMap:
    """phi(a) = E(Phi(a delta_e))."""
    e = system.group.identity
    sl = system.coefficient_slice(e)
    return LinearMap(MatrixAlgebra(system.shape), Phi.matrix[sl, sl])


def contraction_transfer(system: CrossedProduct, Phi: LinearMap, phi: LinearMap) -> float:
    """max over matrix units a of ||phi(a) - a||_2 - ||Phi(a d_e) - a d_e||_2 (<= 0 when it holds)."""
    space_a = GNSSpace.of_trace(system.trace)
    space_x = GNSSpace.of_crossed_product(system)
    e = system.group.identity
    sl = system.coefficient_slice(e)
    worst = -np.inf
    for k in range(system.shape.dim):
        a = np.zeros(system.shape.dim, dtype=complex)
        a[k] = 1.0
        x = np.zeros(system.dim, dtype=complex)
        x[sl] = a
        lhs = np.linalg.norm(space_a.sqrt @ (phi.matrix @ a - a))
        rhs = np.linalg.norm(space_x.sqrt @ (Phi.matrix @ x - x))
        worst = max(worst, float(lhs - rhs))
    return worst


def eta_from_ucp(system: CrossedProduct, Phi: LinearMap) -> np.ndarray:
    """eta(g) = tau~(Phi(1_g d_g) (1_g d_g)^*)."""
    G = system.group
    t = system.trace_functional
    out = np.zeros(G.order, dtype=complex)
    for g in G.elements():
        u = system.to_vector(CrossedElement.from_dict(system, {g: system.action.ideal_unit(g)}))
        prod = system.multiply_vectors(Phi.matrix @ u, system.adjoint_vector(u))
        out[g] = t @ prod
    return out


def h_from_eta(action: PartialAction, eta: Sequence[complex]) -> CenterValuedPDFunction:
    """g -> eta(g) 1_g."""
    return CenterValuedPDFunction.from_eta(action, eta)


# staged certification of approximation data

@dataclass
class StageReport:
    index: int
    epsilon: float
    phi_ucp: Certificate
    phi_tau_decreasing: Certificate
    h_positive_definite: PDCertificate
    phi_deviation: float
    Phi_deviation: float
    prop_estimate: float
    prop_estimate_holds: bool
    h_deviation: float
    h_deviation_from_units: float
    singular_values: list[float]
    rank_curve: list[tuple[float, int, float]]

    @property
    def deviation(self) -> float:
        return max(self.phi_deviation, self.h_deviation)

    @property
    def passed(self) -> bool:
        return bool(self.phi_ucp and self.phi_tau_decreasing and self.h_positive_definite
                    and self.deviation <= self.epsilon)

    def failures(self) -> list[str]:
        out = []
        if not self.phi_ucp:
            out.append("phi not UCP")
        if not self.phi_tau_decreasing:
            out.append("phi not tau-decreasing")
        if not self.h_positive_definite:
            out.append("h not positive definite")
        if self.deviation > self.epsilon:
            out.append(f"deviation {self.deviation:.6g} exceeds {self.epsilon:.6g}")
        return out


def certify_haagerup_data(system: CrossedProduct, stages: Sequence[tuple[LinearMap, CenterValuedPDFunction]],
                          epsilons: Sequence[float], curve_eps: Sequence[float] = (0.5, 0.25, 0.1, 0.01),
                          tol: float = DEFAULT_TOL) -> list[StageReport]:
    """Per-stage quantitative rendering of the approximation data.

    For each stage: phi_n UCP and tau-decreasing, h_n positive definite,
    max over matrix units of ||phi_n(a) - a||_2, max over basis elements x of
    ||Phi_n(x) - x||_2 together with the estimate
    2 (K ||h_n(g) - 1||^2 + ||phi_n(a) - a||^2), K = max ||phi_n(a)||_2,
    the pointwise deviation max_g ||h_n(g) - 1||_2 and the rank-vs-eps curve of Phi_n.
    """
    if len(stages) != len(epsilons):
        raise StructuralError("one epsilon per stage required")
    G = system.group
    space_a = GNSSpace.of_trace(system.trace)
    space_x = GNSSpace.of_crossed_product(system)
    one = AlgebraElement.identity(system.shape)
    reports = []
    for n, ((phi, h), eps) in enumerate(zip(stages, epsilons), start=1):
        ucp = check_ucp(phi, tol)
        tdec = check_tau_decreasing(system.trace, phi, tol)
        pd = is_pd_wrt_action(system.action, h, tol)
        Phi = LinearMap(system, _induced_matrix(system, phi.matrix, h))
        eye_a = np.eye(system.shape.dim)
        phi_dev = max(float(np.linalg.norm(space_a.sqrt @ (phi.matrix @ eye_a[k] - eye_a[k])))
                      for k in range(system.shape.dim))
        h_dev = np.array([two_norm(space_a, h(g) - one) for g in G.elements()])
        h_dev_units = max(two_norm(space_a, h(g) - system.action.ideal_unit(g)) for g in G.elements())
        Phi_dev, estimate, est_ok = 0.0, 0.0, True
        labels = system.basis_labels()
        for k, (g, _, _, _) in enumerate(labels):
            x = np.zeros(system.dim, dtype=complex)
            x[k] = 1.0
            dev = float(np.linalg.norm(space_x.sqrt @ (Phi.matrix @ x - x)))
            cols = system.coefficient_columns(g)
            a = np.zeros(system.shape.dim, dtype=complex)
            a[cols[k - system.coefficient_slice(g).start]] = 1.0
            phi_a = phi.matrix @ a
            K = float(np.linalg.norm(space_a.sqrt @ phi_a))
            est = 2 * (K * h_dev[g] ** 2 + float(np.linalg.norm(space_a.sqrt @ (phi_a - a))) ** 2)
            Phi_dev = max(Phi_dev, dev)
            estimate = max(estimate, est)
            est_ok = est_ok and dev ** 2 <= est + tol
        op = induce_operator(space_x, Phi)
        sv = np.linalg.svd(op, compute_uv=False) if op.size else np.zeros(0)
        curve = rank_curve(space_x, Phi, curve_eps) if op.size else []
        reports.append(StageReport(n, float(eps), ucp, tdec, pd, phi_dev, Phi_dev, estimate, est_ok,
                                   float(h_dev.max()), float(h_dev_units), [float(s) for s in sv], curve))
    return reports
