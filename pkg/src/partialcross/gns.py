"""GNS spaces of tracial states, induced operators, and positivity certificates.

Two algebra models are supported: :class:`MatrixAlgebra` (a multi-matrix
algebra in matrix-unit coordinates) and
:class:`~partialcross.crossed_product.CrossedProduct` (basis ``E delta_g``).
Both expose ``dim``, ``to_vector``/``from_vector``, ``multiply_vectors``,
``adjoint_vector``, ``unit_vector`` and ``gram_matrix``.

Complete positivity of a map on a represented algebra ``B <= M_d`` is decided
exactly: ``phi`` is CP iff the Choi matrix of ``phi o E_B`` is PSD, where
``E_B`` is the Hilbert-Schmidt orthogonal projection of ``M_d`` onto ``B``.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .algebra import DEFAULT_TOL, AlgebraElement, BlockShape, TracialState, as_shape
from .crossed_product import CrossedProduct, build_regular_representation
from .errors import StructuralError


@dataclass(frozen=True, eq=False)
class MatrixAlgebra:
    """A multi-matrix algebra viewed as a vector space with matrix-unit basis."""

    shape: BlockShape

    def __post_init__(self):
        object.__setattr__(self, "shape", as_shape(self.shape))

    @property
    def dim(self) -> int:
        return self.shape.dim

    def to_vector(self, a: AlgebraElement) -> np.ndarray:
        if a.shape != self.shape:
            raise StructuralError("shape mismatch")
        return a.vector()

    def from_vector(self, v) -> AlgebraElement:
        return AlgebraElement.from_vector(self.shape, v)

    def multiply_vectors(self, x, y) -> np.ndarray:
        return (self.from_vector(x) @ self.from_vector(y)).vector()

    def adjoint_vector(self, x) -> np.ndarray:
        return self.from_vector(x).adjoint().vector()

    def unit_vector(self) -> np.ndarray:
        return AlgebraElement.identity(self.shape).vector()

    def gram_matrix(self, functional) -> np.ndarray:
        """G[a, b] = t(E_a^* E_b); block i equals I_n (x) [t(E_{i;s s'})]."""
        t = np.asarray(functional)
        blocks = []
        for i, n in enumerate(self.shape.dims):
            o = self.shape.offsets[i]
            ti = t[o:o + n * n].reshape(n, n)
            blocks.append(np.kron(np.eye(n), ti))
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for i, n in enumerate(self.shape.dims):
            o = self.shape.offsets[i]
            out[o:o + n * n, o:o + n * n] = blocks[i]
        return out


def algebra_model(obj):
    if isinstance(obj, (MatrixAlgebra, CrossedProduct)):
        return obj
    return MatrixAlgebra(as_shape(obj))


# faithful representations (d, R) with vec(rho(x)) = R @ coords(x), row-major vec

_REP_CACHE = weakref.WeakKeyDictionary()


def faithful_representation(model, kind: str | None = None) -> tuple[int, np.ndarray]:
    """Faithful *-representation of the model as a linear map into M_d.

    MatrixAlgebra: the defining block-diagonal representation on C^N.
    CrossedProduct: ``kind='gns'`` (default when a trace is attached) is the
    left-regular representation on L^2(B, tau o E) in an orthonormal basis;
    ``kind='regular'`` is the integrated regular representation on l^2(G, C^N).
    """
    if isinstance(model, MatrixAlgebra):
        kind = "defining"
    elif kind is None:
        kind = "gns" if model.trace is not None else "regular"
    cached = _REP_CACHE.setdefault(model, {})
    if kind in cached:
        return cached[kind]
    if kind == "defining":
        eye = np.eye(model.dim)
        mats = [model.from_vector(eye[k]).dense() for k in range(model.dim)]
        d = model.shape.total
    elif kind == "gns":
        space = GNSSpace(model, model.trace_functional)
        C = model.structure_constants
        d = model.dim
        mats = [space.sqrt @ C[a].T @ space.inv_sqrt for a in range(model.dim)]
    elif kind == "regular":
        rep = build_regular_representation(model)
        d = rep.total_dim
        mats = [rep.integrate(b) for b in model.basis()]
    else:
        raise StructuralError(f"unknown representation kind {kind!r}")
    R = np.array([m.ravel() for m in mats]).T.reshape(d * d, model.dim)
    R.setflags(write=False)
    cached[kind] = (d, R)
    return d, R


class LinearMap:
    """A linear map on an algebra model, stored as its matrix on coordinates."""

    __slots__ = ("model", "matrix")

    def __init__(self, model, matrix):
        model = algebra_model(model)
        m = np.array(matrix, dtype=complex)
        if m.shape != (model.dim, model.dim):
            raise StructuralError(f"map matrix has shape {m.shape}, algebra has dim {model.dim}")
        m.setflags(write=False)
        object.__setattr__(self, "model", model)
        object.__setattr__(self, "matrix", m)

    def __setattr__(self, name, value):
        raise AttributeError("LinearMap is immutable")

    @classmethod
    def from_function(cls, model, fn: Callable) -> "LinearMap":
        """Tabulate ``fn`` (element -> element) on the coordinate basis."""
        model = algebra_model(model)
        eye = np.eye(model.dim)
        cols = [model.to_vector(fn(model.from_vector(eye[k]))) for k in range(model.dim)]
        return cls(model, np.array(cols).T.reshape(model.dim, model.dim))

    @classmethod
    def identity(cls, model) -> "LinearMap":
        model = algebra_model(model)
        return cls(model, np.eye(model.dim))

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            return self.matrix @ x
        return self.model.from_vector(self.matrix @ self.model.to_vector(x))

    def __matmul__(self, other: "LinearMap") -> "LinearMap":
        if other.model is not self.model and other.model.dim != self.model.dim:
            raise StructuralError("cannot compose maps on different algebras")
        return LinearMap(self.model, self.matrix @ other.matrix)

    def __add__(self, other: "LinearMap") -> "LinearMap":
        return LinearMap(self.model, self.matrix + other.matrix)

    def __sub__(self, other: "LinearMap") -> "LinearMap":
        return LinearMap(self.model, self.matrix - other.matrix)

    def __mul__(self, c) -> "LinearMap":
        return LinearMap(self.model, c * self.matrix)

    __rmul__ = __mul__

    def is_unital(self, tol: float = DEFAULT_TOL) -> bool:
        one = self.model.unit_vector()
        return bool(np.abs(self.matrix @ one - one).max() <= tol)

    def is_hermitian_preserving(self, tol: float = DEFAULT_TOL) -> bool:
        eye = np.eye(self.model.dim)
        for k in range(self.model.dim):
            lhs = self.matrix @ self.model.adjoint_vector(eye[k])
            rhs = self.model.adjoint_vector(self.matrix @ eye[k])
            if np.abs(lhs - rhs).max() > tol * (1 + np.abs(self.matrix).max()):
                return False
        return True


def trace_map(tau: TracialState) -> LinearMap:
    """a -> tau(a) 1."""
    model = MatrixAlgebra(tau.shape)
    return LinearMap(model, np.outer(model.unit_vector(), tau.functional))


class GNSSpace:
    """L^2 of an algebra model for a faithful trace functional ``t`` (a row vector)."""

    def __init__(self, model, functional):
        self.model = algebra_model(model)
        self.functional = np.asarray(functional, dtype=complex)
        g = self.model.gram_matrix(self.functional)
        self.gram = (g + g.conj().T) / 2
        w, v = np.linalg.eigh(self.gram)
        self.min_gram_eigenvalue = float(w[0]) if len(w) else 1.0
        if len(w) and w[0] <= 0:
            raise StructuralError(f"trace is not faithful: Gram eigenvalue {w[0]:.3e}")
        self.sqrt = (v * np.sqrt(w)) @ v.conj().T
        self.inv_sqrt = (v / np.sqrt(w)) @ v.conj().T

    @classmethod
    def of_trace(cls, tau: TracialState) -> "GNSSpace":
        return cls(MatrixAlgebra(tau.shape), tau.functional)

    @classmethod
    def of_crossed_product(cls, system: CrossedProduct) -> "GNSSpace":
        return cls(system, system.trace_functional)

    @property
    def dim(self) -> int:
        return self.model.dim

    def orthonormal_consistency(self) -> float:
        """Deviation of S^2 from the Gram matrix."""
        return float(np.abs(self.sqrt @ self.sqrt - self.gram).max())

    def embed(self, x) -> np.ndarray:
        """GNS vector (orthonormal coordinates) of an element or coordinate vector."""
        v = x if isinstance(x, np.ndarray) else self.model.to_vector(x)
        return self.sqrt @ v

    def inner(self, x, y) -> complex:
        return complex(np.vdot(self.embed(x), self.embed(y)))

    def trace(self, x) -> complex:
        v = x if isinstance(x, np.ndarray) else self.model.to_vector(x)
        return complex(self.functional @ v)


def two_norm(space: GNSSpace, a) -> float:
    """||a||_{2,tau} = sqrt(tau(a^* a))."""
    return float(np.linalg.norm(space.embed(a)))


def induce_operator(space: GNSSpace, phi: LinearMap) -> np.ndarray:
    """Matrix of a + N -> phi(a) + N in orthonormal GNS coordinates."""
    return space.sqrt @ phi.matrix @ space.inv_sqrt


def operator_from_gns(space: GNSSpace, op: np.ndarray) -> LinearMap:
    """Inverse of :func:`induce_operator`."""
    return LinearMap(space.model, space.inv_sqrt @ op @ space.sqrt)


class FiniteRankApproximation(NamedTuple):
    map: LinearMap
    rank: int
    bound: float
    singular_values: np.ndarray


def finite_rank_approximation(space: GNSSpace, phi: LinearMap, eps: float) -> FiniteRankApproximation:
    """Smallest-rank SVD truncation R with ||phi(a) - R(a)||_2 <= eps ||a||_2.

    ``bound`` is the achieved operator-norm error, the first discarded
    singular value (0 when nothing is discarded).
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    op = induce_operator(space, phi)
    u, s, vh = np.linalg.svd(op)
    rank = int(np.sum(s > eps))
    trunc = (u[:, :rank] * s[:rank]) @ vh[:rank]
    bound = float(s[rank]) if rank < len(s) else 0.0
    return FiniteRankApproximation(operator_from_gns(space, trunc), rank, bound, s)


def rank_curve(space: GNSSpace, phi: LinearMap, eps_values) -> list[tuple[float, int, float]]:
    """(eps, rank, achieved bound) rows."""
    out = []
    for eps in eps_values:
        fr = finite_rank_approximation(space, phi, eps)
        out.append((float(eps), fr.rank, fr.bound))
    return out


class Certificate(NamedTuple):
    check: str
    passed: bool
    certificate: float
    tolerance: float

    def __bool__(self):
        return self.passed

    def as_dict(self):
        return {"check": self.check, "pass": self.passed, "certificate": self.certificate,
                "tolerance": self.tolerance}


def _psd_min(m: np.ndarray) -> tuple[float, float, float]:
    """(min eigenvalue of hermitian part, hermiticity defect, scale)."""
    herm = float(np.abs(m - m.conj().T).max()) if m.size else 0.0
    lo = float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0]) if m.size else 0.0
    scale = 1.0 + (float(np.abs(m).max()) if m.size else 0.0)
    return lo, herm, scale


def functional_density(model, functional, kind: str | None = None) -> np.ndarray:
    """Density rho in M_d with f(E_B(X)) = Tr(rho X)."""
    d, R = faithful_representation(model, kind)
    row = np.asarray(functional) @ np.linalg.pinv(R)
    return row.reshape(d, d).T


def is_positive_functional(model, functional, tol: float = DEFAULT_TOL, kind: str | None = None) -> Certificate:
    rho = functional_density(model, functional, kind)
    lo, herm, scale = _psd_min(rho)
    return Certificate("positive-functional", bool(herm <= tol * scale and lo >= -tol * scale), lo, tol)


def check_tau_decreasing(trace_functional, phi: LinearMap, tol: float = DEFAULT_TOL,
                         kind: str | None = None) -> Certificate:
    """tau - tau o phi is a positive functional; certificate = min eigenvalue of its density."""
    if isinstance(trace_functional, TracialState):
        trace_functional = trace_functional.functional
    t = np.asarray(trace_functional)
    f = t - t @ phi.matrix
    cert = is_positive_functional(phi.model, f, tol, kind)
    return cert._replace(check="tau-decreasing")


def hs_conditional_expectation(model, kind: str | None = None) -> np.ndarray:
    """Superoperator on vec(M_d) of the HS-orthogonal projection onto rho(B)."""
    d, R = faithful_representation(model, kind)
    return R @ np.linalg.pinv(R)


def choi_matrix(superop: np.ndarray, d: int) -> np.ndarray:
    """Choi matrix sum_{rs} E_rs (x) Psi(E_rs) of a superoperator on row-major vec(M_d)."""
    t = superop.reshape(d, d, d, d)  # [i, j, r, s] = Psi(E_rs)[i, j]
    return t.transpose(2, 0, 3, 1).reshape(d * d, d * d)


def check_completely_positive(phi: LinearMap, tol: float = DEFAULT_TOL, kind: str | None = None) -> Certificate:
    """Exact CP test via the Choi matrix of rho o phi o rho^{-1} o E_B."""
    d, R = faithful_representation(phi.model, kind)
    psi = R @ phi.matrix @ np.linalg.pinv(R)
    choi = choi_matrix(psi, d)
    lo, herm, scale = _psd_min(choi)
    return Certificate("completely-positive", bool(herm <= tol * scale and lo >= -tol * scale), lo, tol)


def check_ucp(phi: LinearMap, tol: float = DEFAULT_TOL, kind: str | None = None) -> Certificate:
    cp = check_completely_positive(phi, tol, kind)
    unital = phi.is_unital(tol)
    return Certificate("ucp", bool(cp.passed and unital), cp.certificate, tol)
