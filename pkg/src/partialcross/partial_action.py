"""Partial actions of finite groups on multi-matrix algebras.

A *-isomorphism between block ideals is stored as a block bijection
``b_g: S_{g^-1} -> S_g`` (dimension preserving) together with a unitary
``U_{g,j}`` for every target block j, so that

    alpha_g(a)_j = U_{g,j} a_{b_g^{-1}(j)} U_{g,j}^*.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, NamedTuple

import numpy as np

from .algebra import DEFAULT_TOL, AlgebraElement, BlockShape, TracialState, as_shape, unit_of
from .errors import DomainError, StructuralError
from .groups import FiniteGroup


@dataclass(frozen=True, eq=False)
class PartialAction:
    group: FiniteGroup
    shape: BlockShape
    # per group element: ((source, target), ...) sorted by source
    block_maps: tuple[tuple[tuple[int, int], ...], ...]
    # per group element: ((target, unitary), ...) sorted by target
    unitaries: tuple[tuple[tuple[int, np.ndarray], ...], ...] = field(repr=False)

    @classmethod
    def build(cls, group: FiniteGroup, shape, records: Mapping[int, tuple[Mapping[int, int], Mapping[int, object]]]):
        """Assemble from ``{g: (block_map, unitaries)}``.

        Elements missing from ``records`` get the empty map, except the identity,
        which defaults to the identity automorphism. Missing unitaries default to
        the identity matrix.
        """
        shape = as_shape(shape)
        maps, units = [], []
        for g in group.elements():
            if g in records:
                bmap, umap = records[g]
            elif g == group.identity:
                bmap, umap = {i: i for i in range(shape.num_blocks)}, {}
            else:
                bmap, umap = {}, {}
            bmap = {int(k): int(v) for k, v in bmap.items()}
            umap = {int(k): v for k, v in umap.items()}
            targets = list(bmap.values())
            if len(set(targets)) != len(targets):
                raise StructuralError(f"block map of element {g} is not injective")
            for s, t in bmap.items():
                for b in (s, t):
                    if not 0 <= b < shape.num_blocks:
                        raise StructuralError(f"element {g}: block index {b} out of range")
                if shape.dims[s] != shape.dims[t]:
                    raise StructuralError(f"element {g}: block {s} (size {shape.dims[s]}) cannot map "
                                          f"to block {t} (size {shape.dims[t]})")
            extra = set(umap) - set(targets)
            if extra:
                raise StructuralError(f"element {g}: unitaries given for blocks {sorted(extra)} outside the range")
            ulist = []
            for t in sorted(targets):
                u = np.array(umap.get(t, np.eye(shape.dims[t])), dtype=complex)
                if u.shape != (shape.dims[t], shape.dims[t]):
                    raise StructuralError(f"element {g}: unitary for block {t} has shape {u.shape}")
                u.setflags(write=False)
                ulist.append((t, u))
            maps.append(tuple(sorted(bmap.items())))
            units.append(tuple(ulist))
        return cls(group, shape, tuple(maps), tuple(units))

    # block-level data

    def block_map(self, g: int) -> dict[int, int]:
        return dict(self.block_maps[g])

    def unitary(self, g: int, target: int) -> np.ndarray:
        return dict(self.unitaries[g])[target]

    def domain(self, g: int) -> frozenset[int]:
        """Blocks of D_{g^-1}, the domain of alpha_g."""
        return frozenset(s for s, _ in self.block_maps[g])

    def range(self, g: int) -> frozenset[int]:
        """Blocks of D_g, the range of alpha_g."""
        return frozenset(t for _, t in self.block_maps[g])

    def ideal_unit(self, g: int) -> AlgebraElement:
        """The unit 1_g of D_g."""
        return unit_of(self.shape, self.range(g))

    # linear-map view

    @cached_property
    def superoperators(self) -> tuple[np.ndarray, ...]:
        """Matrix of alpha_g on algebra coordinates (zero on columns outside the domain)."""
        shape = self.shape
        out = []
        for g in self.group.elements():
            m = np.zeros((shape.dim, shape.dim), dtype=complex)
            umap = dict(self.unitaries[g])
            for s, t in self.block_maps[g]:
                u = umap[t]
                n = shape.dims[s]
                ot, os_ = shape.offsets[t], shape.offsets[s]
                m[ot:ot + n * n, os_:os_ + n * n] = np.kron(u, u.conj())
            m.setflags(write=False)
            out.append(m)
        return tuple(out)


def apply(action: PartialAction, g: int, a: AlgebraElement, tol: float = DEFAULT_TOL) -> AlgebraElement:
    """alpha_g(a) for a in D_{g^-1}; raises DomainError naming blocks outside the domain."""
    if a.shape != action.shape:
        raise StructuralError(f"shape mismatch {a.shape.dims} vs {action.shape.dims}")
    bmap = action.block_map(g)
    bad = sorted(a.support(tol) - set(bmap))
    if bad:
        raise DomainError(f"element is not supported on the domain of alpha_{g}; offending blocks {bad}", bad)
    umap = dict(action.unitaries[g])
    blocks = [np.zeros((n, n), dtype=complex) for n in action.shape.dims]
    for s, t in bmap.items():
        u = umap[t]
        blocks[t] = u @ a.blocks[s] @ u.conj().T
    return AlgebraElement(action.shape, blocks)


def apply_cut(action: PartialAction, g: int, a: AlgebraElement) -> AlgebraElement:
    """alpha_g(1_{g^-1} a): apply after cutting down to the domain."""
    v = action.superoperators[g] @ a.vector()
    return AlgebraElement.from_vector(action.shape, v)


class Violation(NamedTuple):
    kind: str
    g: int | None
    h: int | None
    block: int | None
    deviation: float

    def as_dict(self):
        return {"kind": self.kind, "g": self.g, "h": self.h, "block": self.block,
                "deviation": self.deviation}


@dataclass
class ValidationReport:
    name: str
    violations: list[Violation]
    max_deviation: float
    tolerance: float
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_partial_action(action: PartialAction, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check the partial-action axioms on matrix-unit bases.

    Condition (1): alpha_e is the identity on all of A. Inverse consistency:
    b_{g^-1} = b_g^{-1} and alpha_{g^-1} alpha_g = id on D_{g^-1}. Composition:
    alpha_g alpha_h = alpha_{gh} on every matrix unit of alpha_h^{-1}(D_{g^-1}).
    """
    G, shape = action.group, action.shape
    e = G.identity
    viol: list[Violation] = []
    worst = 0.0
    every = frozenset(range(shape.num_blocks))

    # condition (1)
    if action.block_map(e) != {i: i for i in every}:
        viol.append(Violation("identity-domain", e, None, None, 1.0))
    for t, u in action.unitaries[e]:
        d = float(np.abs(u - np.eye(len(u))).max())
        worst = max(worst, d)
        if d > tol:
            viol.append(Violation("identity-unitary", e, None, t, d))

    for g in G.elements():
        for t, u in action.unitaries[g]:
            d = float(np.abs(u.conj().T @ u - np.eye(len(u))).max())
            worst = max(worst, d)
            if d > tol:
                viol.append(Violation("unitarity", g, None, t, d))

    S = action.superoperators
    for g in G.elements():
        gi = G.inv(g)
        fwd, back = action.block_map(g), action.block_map(gi)
        if {t: s for s, t in fwd.items()} != back:
            viol.append(Violation("inverse-block-map", g, gi, None, 1.0))
        for s in sorted(action.domain(g)):
            n = shape.dims[s]
            o = shape.offsets[s]
            cols = slice(o, o + n * n)
            d = float(np.abs((S[gi] @ S[g])[:, cols] - np.eye(shape.dim)[:, cols]).max())
            worst = max(worst, d)
            if d > tol:
                viol.append(Violation("inverse-map", g, gi, s, d))

    for g in G.elements():
        for h in G.elements():
            gh = G.mul(g, h)
            dom_g = action.domain(g)
            comp_domain = [i for i, t in action.block_map(h).items() if t in dom_g]
            prod = S[g] @ S[h]
            for i in comp_domain:
                n = shape.dims[i]
                o = shape.offsets[i]
                cols = slice(o, o + n * n)
                if i not in action.domain(gh):
                    viol.append(Violation("composition-domain", g, h, i, 1.0))
                    continue
                d = float(np.abs(prod[:, cols] - S[gh][:, cols]).max())
                worst = max(worst, d)
                if d > tol:
                    viol.append(Violation("composition", g, h, i, d))
    return ValidationReport("partial-action", viol, worst, tol)


def global_action(group: FiniteGroup, shape, permutations: Mapping[int, Mapping[int, int]],
                  unitaries: Mapping[int, Mapping[int, object]] | None = None) -> PartialAction:
    """Action with full supports: ``permutations[g]`` maps every block."""
    unitaries = unitaries or {}
    records = {g: (permutations[g], unitaries.get(g, {})) for g in permutations}
    return PartialAction.build(group, shape, records)


def trivial_action(group: FiniteGroup, shape) -> PartialAction:
    """Every alpha_g is the identity automorphism of A."""
    shape = as_shape(shape)
    ident = {i: i for i in range(shape.num_blocks)}
    return PartialAction.build(group, shape, {g: (ident, {}) for g in group.elements()})


class Restriction(NamedTuple):
    action: PartialAction
    blocks: tuple[int, ...]
    globalization_covers: bool


def restrict_global(action: PartialAction, blocks) -> Restriction:
    """Restriction of a global action on B to the ideal A spanned by ``blocks``.

    The restricted algebra has the blocks of A in increasing order. D_g is
    b_g(A) intersected with A. ``globalization_covers`` reports whether the
    translates of A cover every block of B.
    """
    every = set(range(action.shape.num_blocks))
    for g in action.group.elements():
        if set(action.block_map(g)) != every:
            raise StructuralError(f"action is not global: alpha_{g} is not defined on every block")
    keep = sorted(set(int(b) for b in blocks))
    if not keep:
        raise StructuralError("the ideal must contain at least one block")
    pos = {b: k for k, b in enumerate(keep)}
    shape = BlockShape(tuple(action.shape.dims[b] for b in keep))
    records = {}
    covered = set()
    for g in action.group.elements():
        bmap = action.block_map(g)
        covered.update(bmap[b] for b in keep)
        umap = dict(action.unitaries[g])
        sub = {pos[s]: pos[t] for s, t in bmap.items() if s in pos and t in pos}
        subu = {pos[t]: umap[t] for s, t in bmap.items() if s in pos and t in pos}
        records[g] = (sub, subu)
    restricted = PartialAction.build(action.group, shape, records)
    return Restriction(restricted, tuple(keep), covered == every)


def check_invariant_trace(action: PartialAction, tau: TracialState, tol: float = DEFAULT_TOL) -> ValidationReport:
    """tau(alpha_g(a)) = tau(a) on D_{g^-1}: weight equality plus a matrix-unit check."""
    if tau.shape != action.shape:
        raise StructuralError("trace and action live on different shapes")
    viol = []
    worst = 0.0
    t = tau.functional
    for g in action.group.elements():
        for s, tgt in action.block_maps[g]:
            d = abs(tau.weights[tgt] - tau.weights[s])
            if d > tol:
                viol.append(Violation("weight", g, None, s, d))
            n = action.shape.dims[s]
            o = action.shape.offsets[s]
            cols = slice(o, o + n * n)
            num = float(np.abs(t @ action.superoperators[g][:, cols] - t[cols]).max())
            worst = max(worst, num, d)
            if num > tol and d <= tol:
                viol.append(Violation("matrix-unit", g, None, s, num))
    return ValidationReport("invariant-trace", viol, worst, tol)
