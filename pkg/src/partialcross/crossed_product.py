"""Algebraic and reduced partial crossed products ``A x_alpha G``.

Elements are finite sums ``sum_g a_g delta_g`` with ``a_g`` in ``D_g``. The
reduced norm is the operator norm in the regular representation built from
the defining (block-diagonal) representation of A on C^N.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from .algebra import (DEFAULT_TOL, AlgebraElement, TracialState, block_matrix_units, evaluate_trace,
                      random_element)
from .errors import CertificationError, DomainError, StructuralError
from .partial_action import (PartialAction, ValidationReport, Violation, apply, apply_cut,
                             check_invariant_trace)


def _matrix_algebra_structure(shape) -> np.ndarray:
    """T[p, q, r]: coordinate r of (unit p)(unit q) in a multi-matrix algebra."""
    d = shape.dim
    t = np.zeros((d, d, d))
    for i, n in enumerate(shape.dims):
        o = shape.offsets[i]
        for r in range(n):
            for s in range(n):
                for u in range(n):
                    t[o + r * n + s, o + s * n + u, o + r * n + u] = 1.0
    return t


@dataclass(frozen=True, eq=False)
class CrossedProduct:
    """The system (A, G, alpha), optionally with a G-invariant faithful trace."""

    action: PartialAction
    trace: TracialState | None = None

    def __post_init__(self):
        if self.trace is not None:
            _require_invariant(self.action, self.trace)

    @property
    def group(self):
        return self.action.group

    @property
    def shape(self):
        return self.action.shape

    def with_trace(self, tau: TracialState) -> "CrossedProduct":
        return CrossedProduct(self.action, tau)

    # coordinates: for g in order, blocks of D_g in increasing order, row-major

    @cached_property
    def _layout(self):
        shape = self.shape
        spans, start = [], 0
        for g in self.group.elements():
            cols = []
            for i in sorted(self.action.range(g)):
                o, n = shape.offsets[i], shape.dims[i]
                cols.extend(range(o, o + n * n))
            spans.append((start, np.array(cols, dtype=int)))
            start += len(cols)
        return tuple(spans), start

    @property
    def dim(self) -> int:
        return self._layout[1]

    def coefficient_slice(self, g: int) -> slice:
        start, cols = self._layout[0][g]
        return slice(start, start + len(cols))

    def coefficient_columns(self, g: int) -> np.ndarray:
        """Positions of the D_g coordinates inside the algebra coordinates of A."""
        return self._layout[0][g][1]

    def basis_labels(self) -> list[tuple[int, int, int, int]]:
        """(g, block, row, col) for every basis element E delta_g."""
        out = []
        for g in self.group.elements():
            for i in sorted(self.action.range(g)):
                n = self.shape.dims[i]
                out.extend((g, i, r, s) for r in range(n) for s in range(n))
        return out

    def to_vector(self, x: "CrossedElement") -> np.ndarray:
        self._check(x)
        v = np.zeros(self.dim, dtype=complex)
        for g, a in enumerate(x.coefficients):
            v[self.coefficient_slice(g)] = a.vector()[self.coefficient_columns(g)]
        return v

    def from_vector(self, v) -> "CrossedElement":
        v = np.asarray(v)
        if v.shape != (self.dim,):
            raise StructuralError(f"vector of length {v.shape} for crossed product of dim {self.dim}")
        coeffs = []
        for g in self.group.elements():
            full = np.zeros(self.shape.dim, dtype=complex)
            full[self.coefficient_columns(g)] = v[self.coefficient_slice(g)]
            coeffs.append(AlgebraElement.from_vector(self.shape, full))
        return CrossedElement(self, coeffs)

    def basis(self) -> list["CrossedElement"]:
        eye = np.eye(self.dim)
        return [self.from_vector(eye[k]) for k in range(self.dim)]

    def unit(self) -> "CrossedElement":
        return CrossedElement.embed(self, AlgebraElement.identity(self.shape))

    def _check(self, x: "CrossedElement"):
        if not isinstance(x, CrossedElement) or x.system.action is not self.action:
            raise StructuralError("element belongs to a different crossed product")

    # structure

    @cached_property
    def structure_constants(self) -> np.ndarray:
        """C[a, b, c]: coordinate c of (basis a)(basis b)."""
        G, act = self.group, self.action
        T = _matrix_algebra_structure(self.shape)
        S = act.superoperators
        C = np.zeros((self.dim, self.dim, self.dim), dtype=complex)
        for g in G.elements():
            cg = self.coefficient_columns(g)
            if not len(cg):
                continue
            # alpha_{g^-1} applied to the basis of D_g, as full coordinates
            left = S[G.inv(g)][:, cg]
            for h in G.elements():
                ch = self.coefficient_columns(h)
                if not len(ch):
                    continue
                k = G.mul(g, h)
                ck = self.coefficient_columns(k)
                prod = np.einsum("pa,pqr->aqr", left, T[:, ch, :])
                full = np.einsum("aqr,sr->aqs", prod, S[g])
                C[self.coefficient_slice(g), self.coefficient_slice(h), self.coefficient_slice(k)] = full[:, :, ck]
        C.setflags(write=False)
        return C

    @cached_property
    def adjoint_matrix(self) -> np.ndarray:
        """J with to_vector(x*) = J @ conj(to_vector(x))."""
        cols = [self.to_vector(cp_adjoint(b)) for b in self.basis()]
        return np.array(cols).T if cols else np.zeros((0, 0))

    def multiply_vectors(self, x, y) -> np.ndarray:
        return np.einsum("a,b,abc->c", x, y, self.structure_constants)

    def adjoint_vector(self, x) -> np.ndarray:
        return self.adjoint_matrix @ np.conj(x)

    def unit_vector(self) -> np.ndarray:
        return self.to_vector(self.unit())

    def gram_matrix(self, functional) -> np.ndarray:
        """G[a, b] = t((basis a)^* (basis b)) for the linear functional t."""
        m = self.structure_constants @ np.asarray(functional)
        return self.adjoint_matrix.T @ m

    @cached_property
    def trace_functional(self) -> np.ndarray:
        """Row vector of the induced trace tau o E."""
        if self.trace is None:
            raise StructuralError("crossed product has no trace attached")
        t = np.zeros(self.dim, dtype=complex)
        e = self.group.identity
        t[self.coefficient_slice(e)] = self.trace.functional[self.coefficient_columns(e)]
        return t


def _require_invariant(action: PartialAction, tau: TracialState):
    if not tau.faithful:
        raise CertificationError("trace is not faithful", certificate=min(tau.weights))
    rep = check_invariant_trace(action, tau)
    if not rep.ok:
        raise CertificationError("trace is not G-invariant", certificate=rep.max_deviation)


class CrossedElement:
    """Immutable finite sum ``sum_g a_g delta_g``."""

    __slots__ = ("system", "coefficients")

    def __init__(self, system: CrossedProduct, coefficients, tol: float = DEFAULT_TOL):
        coeffs = tuple(coefficients)
        if len(coeffs) != system.group.order:
            raise StructuralError(f"expected {system.group.order} coefficients, got {len(coeffs)}")
        for g, a in enumerate(coeffs):
            if a.shape != system.shape:
                raise StructuralError("coefficient shape mismatch")
            bad = sorted(a.support(tol) - system.action.range(g))
            if bad:
                raise DomainError(f"coefficient at {g} is not in D_{g}; offending blocks {bad}", bad)
        object.__setattr__(self, "system", system)
        object.__setattr__(self, "coefficients", coeffs)

    def __setattr__(self, name, value):
        raise AttributeError("CrossedElement is immutable")

    @classmethod
    def from_dict(cls, system: CrossedProduct, coeffs: Mapping[int, AlgebraElement]) -> "CrossedElement":
        zero = AlgebraElement.zero(system.shape)
        return cls(system, [coeffs.get(g, zero) for g in system.group.elements()])

    @classmethod
    def embed(cls, system: CrossedProduct, a: AlgebraElement) -> "CrossedElement":
        """a delta_e."""
        return cls.from_dict(system, {system.group.identity: a})

    @classmethod
    def zero(cls, system: CrossedProduct) -> "CrossedElement":
        return cls.from_dict(system, {})

    def __getitem__(self, g: int) -> AlgebraElement:
        return self.coefficients[g]

    def __add__(self, other):
        self.system._check(other)
        return CrossedElement(self.system, [a + b for a, b in zip(self.coefficients, other.coefficients)])

    def __sub__(self, other):
        self.system._check(other)
        return CrossedElement(self.system, [a - b for a, b in zip(self.coefficients, other.coefficients)])

    def __mul__(self, c):
        if isinstance(c, CrossedElement):
            return NotImplemented
        return CrossedElement(self.system, [c * a for a in self.coefficients])

    __rmul__ = __mul__

    def __matmul__(self, other):
        return cp_multiply(self, other)

    def vector(self) -> np.ndarray:
        return self.system.to_vector(self)

    def max_deviation(self, other: "CrossedElement") -> float:
        return max(a.max_deviation(b) for a, b in zip(self.coefficients, other.coefficients))

    def __repr__(self):
        return f"CrossedElement(|G|={len(self.coefficients)}, dims={self.system.shape.dims})"


def cp_multiply(x: CrossedElement, y: CrossedElement) -> CrossedElement:
    """Bilinear extension of a d_g . b d_h = alpha_g(alpha_{g^-1}(a) b) d_{gh}."""
    sys_ = x.system
    sys_._check(y)
    G, act = sys_.group, sys_.action
    out = [AlgebraElement.zero(sys_.shape) for _ in G.elements()]
    for g, a in enumerate(x.coefficients):
        if not act.range(g) or not a.support(0.0):
            continue
        pulled = apply_cut(act, G.inv(g), a)
        for h, b in enumerate(y.coefficients):
            if not act.range(h):
                continue
            k = G.mul(g, h)
            out[k] = out[k] + apply_cut(act, g, pulled @ b)
    return CrossedElement(sys_, out)


def cp_adjoint(x: CrossedElement) -> CrossedElement:
    """(a d_g)^* = alpha_{g^-1}(a^*) d_{g^-1}."""
    sys_ = x.system
    G, act = sys_.group, sys_.action
    out = [None] * G.order
    for g, a in enumerate(x.coefficients):
        out[G.inv(g)] = apply_cut(act, G.inv(g), a.adjoint())
    return CrossedElement(sys_, out)


def conditional_expectation(x: CrossedElement) -> AlgebraElement:
    """E(sum a_g d_g) = a_e."""
    return x.coefficients[x.system.group.identity]


def induced_trace(tau: TracialState, x: CrossedElement) -> complex:
    """tau o E; tau must be faithful and G-invariant for the system's action."""
    _require_invariant(x.system.action, tau)
    return evaluate_trace(tau, conditional_expectation(x))


def random_crossed_element(system: CrossedProduct, rng: np.random.Generator) -> CrossedElement:
    return CrossedElement(system, [random_element(system.shape, rng, system.action.range(g))
                                   for g in system.group.elements()])


# regular representation

@dataclass(frozen=True, eq=False)
class RegularRepresentation:
    """Regular representation on l^2(G, H) with fibres ordered as the group elements.

    ``multiplicity`` and ``conjugator`` replace the defining representation pi
    of A on C^N by ``V (1_m (x) pi) V^*``; they exist so that independence of
    the reduced norm from the chosen faithful representation can be tested.
    """

    system: CrossedProduct
    multiplicity: int = 1
    conjugator: np.ndarray | None = field(default=None, repr=False)

    @property
    def fiber_dim(self) -> int:
        return self.multiplicity * self.system.shape.total

    @property
    def total_dim(self) -> int:
        return self.system.group.order * self.fiber_dim

    def pi(self, a: AlgebraElement) -> np.ndarray:
        m = np.kron(np.eye(self.multiplicity), a.dense())
        if self.conjugator is not None:
            v = self.conjugator
            m = v @ m @ v.conj().T
        return m

    def pi_prime(self, g: int, a: AlgebraElement) -> np.ndarray:
        """pi(alpha_{g^-1}(a 1_g)): the extension of pi o alpha_{g^-1} vanishing off its essential space."""
        act = self.system.action
        return self.pi(apply_cut(act, act.group.inv(g), a))

    def pi_tilde(self, a: AlgebraElement) -> np.ndarray:
        G = self.system.group
        d = self.fiber_dim
        out = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        for g in G.elements():
            out[g * d:(g + 1) * d, g * d:(g + 1) * d] = self.pi_prime(g, a)
        return out

    @cached_property
    def lambdas(self) -> tuple[np.ndarray, ...]:
        """(lambda_g f)(h) = f(g^{-1} h): fibre h is sent to fibre gh."""
        G = self.system.group
        d = self.fiber_dim
        out = []
        for g in G.elements():
            perm = np.zeros((G.order, G.order))
            for h in G.elements():
                perm[G.mul(g, h), h] = 1.0
            m = np.kron(perm, np.eye(d)).astype(complex)
            m.setflags(write=False)
            out.append(m)
        return tuple(out)

    def integrate(self, x: CrossedElement) -> np.ndarray:
        """Integrated form sum_g pi_tilde(a_g) lambda_g."""
        self.system._check(x)
        return sum(self.pi_tilde(a) @ self.lambdas[g] for g, a in enumerate(x.coefficients))


def build_regular_representation(system: CrossedProduct, multiplicity: int = 1,
                                 conjugator: np.ndarray | None = None) -> RegularRepresentation:
    if multiplicity < 1:
        raise StructuralError("multiplicity must be positive")
    if conjugator is not None:
        n = multiplicity * system.shape.total
        conjugator = np.asarray(conjugator, dtype=complex)
        if conjugator.shape != (n, n):
            raise StructuralError(f"conjugator must be {n} x {n}")
    return RegularRepresentation(system, multiplicity, conjugator)


def check_covariance(rep: RegularRepresentation, tol: float = 1e-10) -> ValidationReport:
    """lambda_g pi_tilde(a) lambda_{g^-1} = pi_tilde(alpha_g(a)) on matrix units of D_{g^-1}."""
    act = rep.system.action
    G = act.group
    viol, worst = [], 0.0
    for g in G.elements():
        lg, lgi = rep.lambdas[g], rep.lambdas[G.inv(g)]
        for x in block_matrix_units(act.shape, act.domain(g)):
            lhs = lg @ rep.pi_tilde(x) @ lgi
            rhs = rep.pi_tilde(apply(act, g, x))
            d = float(np.abs(lhs - rhs).max())
            if d > worst:
                worst = d
            if d > tol:
                block = next(iter(x.support(0.0)))
                viol.append(Violation("covariance", g, None, block, d))
    return ValidationReport("covariance", viol, worst, tol)


def reduced_norm(rep: RegularRepresentation, x: CrossedElement) -> float:
    m = rep.integrate(x)
    return float(np.linalg.norm(m, 2)) if m.size else 0.0
