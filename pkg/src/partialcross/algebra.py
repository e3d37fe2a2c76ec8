"""Finite-dimensional C*-algebras as multi-matrix algebras ``M_{n_1} + ... + M_{n_k}``.

Elements are stored as one dense complex matrix per block. Coordinates used by
the linear-algebra layers concatenate the row-major ravel of every block.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.linalg import block_diag

from .errors import CentralityError, StructuralError

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class BlockShape:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if not dims:
            raise StructuralError("a block shape needs at least one block")
        if any(n < 1 for n in dims):
            raise StructuralError(f"block sizes must be positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def num_blocks(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        """Size N of the defining representation on C^N."""
        return sum(self.dims)

    @property
    def dim(self) -> int:
        """Vector-space dimension of the algebra."""
        return sum(n * n for n in self.dims)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for n in self.dims:
            out.append(acc)
            acc += n * n
        return tuple(out)

    @cached_property
    def row_offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for n in self.dims:
            out.append(acc)
            acc += n
        return tuple(out)

    def scaled(self, n: int) -> "BlockShape":
        """Shape of Mat_n over this algebra."""
        return BlockShape(tuple(n * d for d in self.dims))

    def __len__(self):
        return len(self.dims)


def as_shape(shape) -> BlockShape:
    return shape if isinstance(shape, BlockShape) else BlockShape(tuple(shape))


class AlgebraElement:
    """Immutable element of a multi-matrix algebra."""

    __slots__ = ("shape", "blocks")

    def __init__(self, shape, blocks: Iterable):
        shape = as_shape(shape)
        mats = []
        for n, b in zip(shape.dims, blocks):
            m = np.array(b, dtype=complex)
            if m.shape != (n, n):
                raise StructuralError(f"block of shape {m.shape} does not match size {n}")
            m.setflags(write=False)
            mats.append(m)
        if len(mats) != shape.num_blocks:
            raise StructuralError(f"expected {shape.num_blocks} blocks, got {len(mats)}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "blocks", tuple(mats))

    def __setattr__(self, name, value):
        raise AttributeError("AlgebraElement is immutable")

    # constructors

    @classmethod
    def zero(cls, shape) -> "AlgebraElement":
        shape = as_shape(shape)
        return cls(shape, [np.zeros((n, n)) for n in shape.dims])

    @classmethod
    def identity(cls, shape) -> "AlgebraElement":
        shape = as_shape(shape)
        return cls(shape, [np.eye(n) for n in shape.dims])

    @classmethod
    def central(cls, shape, scalars: Sequence[complex]) -> "AlgebraElement":
        """Central element with the given scalar on each block."""
        shape = as_shape(shape)
        if len(scalars) != shape.num_blocks:
            raise StructuralError("one scalar per block required")
        return cls(shape, [c * np.eye(n) for c, n in zip(scalars, shape.dims)])

    @classmethod
    def matrix_unit(cls, shape, block: int, r: int, s: int) -> "AlgebraElement":
        shape = as_shape(shape)
        blocks = [np.zeros((n, n)) for n in shape.dims]
        blocks[block][r, s] = 1.0
        return cls(shape, blocks)

    @classmethod
    def from_vector(cls, shape, vec) -> "AlgebraElement":
        shape = as_shape(shape)
        vec = np.asarray(vec)
        if vec.shape != (shape.dim,):
            raise StructuralError(f"vector of length {vec.shape} for algebra of dim {shape.dim}")
        return cls(shape, [vec[o:o + n * n].reshape(n, n) for o, n in zip(shape.offsets, shape.dims)])

    # views

    def vector(self) -> np.ndarray:
        return np.concatenate([b.ravel() for b in self.blocks])

    def dense(self) -> np.ndarray:
        """Block-diagonal N x N matrix of the defining representation."""
        return block_diag(*self.blocks).astype(complex)

    def support(self, tol: float = DEFAULT_TOL) -> frozenset[int]:
        return frozenset(i for i, b in enumerate(self.blocks) if np.abs(b).max(initial=0.0) > tol)

    # arithmetic

    def _check(self, other: "AlgebraElement"):
        if not isinstance(other, AlgebraElement):
            raise StructuralError(f"expected AlgebraElement, got {type(other).__name__}")
        if other.shape != self.shape:
            raise StructuralError(f"shape mismatch {self.shape.dims} vs {other.shape.dims}")

    def __add__(self, other):
        self._check(other)
        return AlgebraElement(self.shape, [a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        self._check(other)
        return AlgebraElement(self.shape, [a - b for a, b in zip(self.blocks, other.blocks)])

    def __neg__(self):
        return AlgebraElement(self.shape, [-a for a in self.blocks])

    def __mul__(self, c):
        if isinstance(c, AlgebraElement):
            return NotImplemented
        return AlgebraElement(self.shape, [c * a for a in self.blocks])

    __rmul__ = __mul__

    def __matmul__(self, other):
        return multiply(self, other)

    def adjoint(self) -> "AlgebraElement":
        return adjoint(self)

    def allclose(self, other: "AlgebraElement", tol: float = DEFAULT_TOL) -> bool:
        self._check(other)
        return all(np.allclose(a, b, atol=tol, rtol=0) for a, b in zip(self.blocks, other.blocks))

    def max_deviation(self, other: "AlgebraElement") -> float:
        self._check(other)
        return max(float(np.abs(a - b).max(initial=0.0)) for a, b in zip(self.blocks, other.blocks))

    def __repr__(self):
        return f"AlgebraElement(dims={self.shape.dims})"


def multiply(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    a._check(b)
    return AlgebraElement(a.shape, [x @ y for x, y in zip(a.blocks, b.blocks)])


def adjoint(a: AlgebraElement) -> AlgebraElement:
    return AlgebraElement(a.shape, [x.conj().T for x in a.blocks])


def operator_norm(a: AlgebraElement) -> float:
    return max(float(np.linalg.norm(x, 2)) for x in a.blocks)


def is_hermitian(a: AlgebraElement, tol: float = DEFAULT_TOL) -> bool:
    scale = 1.0 + operator_norm(a)
    return all(np.abs(x - x.conj().T).max() <= tol * scale for x in a.blocks)


class PositivityCertificate(NamedTuple):
    positive: bool
    min_eigenvalue: float

    def __bool__(self):
        return self.positive


def is_positive(a: AlgebraElement, tol: float = DEFAULT_TOL) -> PositivityCertificate:
    """PSD test; the certificate is the smallest eigenvalue of the hermitian part."""
    scale = 1.0 + operator_norm(a)
    herm = is_hermitian(a, tol)
    lo = min(float(np.linalg.eigvalsh((x + x.conj().T) / 2)[0]) for x in a.blocks)
    return PositivityCertificate(bool(herm and lo >= -tol * scale), lo)


def center_component(a: AlgebraElement, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Per-block scalars of a central element; raises CentralityError otherwise."""
    out = np.empty(a.shape.num_blocks, dtype=complex)
    for i, x in enumerate(a.blocks):
        c = np.trace(x) / x.shape[0]
        if np.abs(x - c * np.eye(x.shape[0])).max() > tol * (1.0 + abs(c)):
            raise CentralityError(f"block {i} is not a scalar multiple of the identity", block=i)
        out[i] = c
    return out


@dataclass(frozen=True)
class Ideal:
    """Two-sided ideal of a multi-matrix algebra: the blocks in ``support``."""

    support: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "support", frozenset(int(i) for i in self.support))

    def unit(self, shape) -> AlgebraElement:
        shape = as_shape(shape)
        return AlgebraElement.central(shape, [1.0 if i in self.support else 0.0
                                              for i in range(shape.num_blocks)])

    def offending_blocks(self, a: AlgebraElement, tol: float = DEFAULT_TOL) -> list[int]:
        return sorted(a.support(tol) - self.support)

    def contains(self, a: AlgebraElement, tol: float = DEFAULT_TOL) -> bool:
        return not self.offending_blocks(a, tol)

    def cut(self, a: AlgebraElement) -> AlgebraElement:
        """The product ``1_S a``."""
        return AlgebraElement(a.shape, [b if i in self.support else np.zeros_like(b)
                                        for i, b in enumerate(a.blocks)])


def unit_of(shape, blocks: Iterable[int]) -> AlgebraElement:
    return Ideal(frozenset(blocks)).unit(shape)


@dataclass(frozen=True)
class TracialState:
    """tau(a) = sum_i w_i Tr(a_i), normalised so that tau(1) = 1."""

    shape: BlockShape
    weights: tuple[float, ...]

    def __post_init__(self):
        shape = as_shape(self.shape)
        w = tuple(float(x) for x in self.weights)
        if len(w) != shape.num_blocks:
            raise StructuralError(f"{len(w)} weights for {shape.num_blocks} blocks")
        if any(x < 0 for x in w):
            raise StructuralError(f"trace weights must be nonnegative, got {w}")
        total = sum(x * n for x, n in zip(w, shape.dims))
        if abs(total - 1.0) > 1e-12:
            raise StructuralError(f"trace is not unital: sum w_i n_i = {total}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "weights", w)

    @classmethod
    def normalized(cls, shape, raw_weights) -> "TracialState":
        """Rescale arbitrary nonnegative weights so that tau(1) = 1."""
        shape = as_shape(shape)
        raw = np.asarray(raw_weights, dtype=float)
        total = float(raw @ np.asarray(shape.dims))
        if total <= 0:
            raise StructuralError("weights must not all vanish")
        return cls(shape, tuple(raw / total))

    @classmethod
    def uniform(cls, shape) -> "TracialState":
        """The normalised trace of the defining representation."""
        shape = as_shape(shape)
        return cls.normalized(shape, [1.0] * shape.num_blocks)

    @property
    def faithful(self) -> bool:
        return all(w > 0 for w in self.weights)

    @cached_property
    def functional(self) -> np.ndarray:
        """Row vector t with tau(a) = t @ a.vector()."""
        parts = [w * np.eye(n).ravel() for w, n in zip(self.weights, self.shape.dims)]
        return np.concatenate(parts).astype(complex)

    def __call__(self, a: AlgebraElement) -> complex:
        return evaluate_trace(self, a)


def evaluate_trace(tau: TracialState, a: AlgebraElement) -> complex:
    if a.shape != tau.shape:
        raise StructuralError(f"shape mismatch {a.shape.dims} vs {tau.shape.dims}")
    return complex(sum(w * np.trace(x) for w, x in zip(tau.weights, a.blocks)))


def matrix_units(shape) -> list[AlgebraElement]:
    """Basis of matrix units in coordinate order."""
    shape = as_shape(shape)
    return [AlgebraElement.matrix_unit(shape, i, r, s)
            for i, n in enumerate(shape.dims) for r in range(n) for s in range(n)]


def block_matrix_units(shape, blocks: Iterable[int]) -> list[AlgebraElement]:
    """Matrix units of the ideal spanned by ``blocks``."""
    shape = as_shape(shape)
    return [AlgebraElement.matrix_unit(shape, i, r, s)
            for i in sorted(blocks) for r in range(shape.dims[i]) for s in range(shape.dims[i])]


def random_element(shape, rng: np.random.Generator, support: Iterable[int] | None = None) -> AlgebraElement:
    shape = as_shape(shape)
    keep = set(range(shape.num_blocks)) if support is None else set(support)
    blocks = []
    for i, n in enumerate(shape.dims):
        if i in keep:
            blocks.append(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        else:
            blocks.append(np.zeros((n, n)))
    return AlgebraElement(shape, blocks)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))
