"""Finite groups given by Cayley tables, and scalar positive-definite functions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .algebra import DEFAULT_TOL
from .errors import GroupAxiomError


def _axiom_violations(table: np.ndarray) -> list[str]:
    m = table.shape[0]
    out = []
    if table.ndim != 2 or table.shape != (m, m):
        return [f"table must be square, got shape {table.shape}"]
    if m == 0:
        return ["table is empty"]
    if table.min() < 0 or table.max() >= m:
        return [f"entries must lie in 0..{m - 1}"]
    full = np.arange(m)
    for i in range(m):
        if not np.array_equal(np.sort(table[i]), full):
            out.append(f"Latin square violated in row {i}")
        if not np.array_equal(np.sort(table[:, i]), full):
            out.append(f"Latin square violated in column {i}")
    if out:
        return out
    ids = [e for e in range(m) if np.array_equal(table[e], full) and np.array_equal(table[:, e], full)]
    if not ids:
        return ["no two-sided identity"]
    # (xy)z = x(yz) on all triples
    lhs = table[table[:, :, None], np.arange(m)[None, None, :]]
    rhs = table[np.arange(m)[:, None, None], table[None, :, :]]
    bad = np.argwhere(lhs != rhs)
    for x, y, z in bad[:5]:
        out.append(f"associativity fails on ({x}, {y}, {z})")
    if len(bad) > 5:
        out.append(f"... {len(bad) - 5} more associativity failures")
    return out


@dataclass(frozen=True)
class FiniteGroup:
    """A finite group on the elements 0..m-1; ``table[g, h]`` is the index of gh."""

    table: tuple[tuple[int, ...], ...]
    name: str = ""

    def __post_init__(self):
        arr = np.asarray(self.table, dtype=int)
        problems = _axiom_violations(arr)
        if problems:
            raise GroupAxiomError(problems)
        object.__setattr__(self, "table", tuple(tuple(int(x) for x in row) for row in arr))

    @cached_property
    def array(self) -> np.ndarray:
        a = np.asarray(self.table, dtype=int)
        a.setflags(write=False)
        return a

    @property
    def order(self) -> int:
        return len(self.table)

    def __len__(self):
        return self.order

    @cached_property
    def identity(self) -> int:
        full = np.arange(self.order)
        return next(e for e in range(self.order) if np.array_equal(self.array[e], full))

    @cached_property
    def inverses(self) -> tuple[int, ...]:
        e = self.identity
        return tuple(int(np.flatnonzero(self.array[g] == e)[0]) for g in range(self.order))

    def mul(self, g: int, h: int) -> int:
        return self.table[g][h]

    def inv(self, g: int) -> int:
        return self.inverses[g]

    def elements(self) -> range:
        return range(self.order)


def validate_group(table, name: str = "") -> FiniteGroup:
    """Build a FiniteGroup, raising GroupAxiomError with every violated axiom."""
    return FiniteGroup(tuple(tuple(int(x) for x in row) for row in table), name)


def cyclic_group(n: int) -> FiniteGroup:
    idx = np.arange(n)
    return FiniteGroup(tuple(map(tuple, (idx[:, None] + idx[None, :]) % n)), f"Z{n}")


def _perm_compose(p, q):
    # (p*q)(x) = p(q(x))
    return tuple(p[x] for x in q)


def group_from_permutations(generators: Sequence[Sequence[int]], name: str = "") -> FiniteGroup:
    """Close a set of permutations under composition and return its Cayley table."""
    gens = [tuple(g) for g in generators]
    if not gens:
        raise GroupAxiomError(["no generators"])
    degree = len(gens[0])
    ident = tuple(range(degree))
    elements = [ident]
    seen = {ident: 0}
    frontier = [ident]
    while frontier:
        nxt = []
        for p in frontier:
            for s in gens:
                q = _perm_compose(s, p)
                if q not in seen:
                    seen[q] = len(elements)
                    elements.append(q)
                    nxt.append(q)
        frontier = nxt
    table = [[seen[_perm_compose(p, q)] for q in elements] for p in elements]
    return validate_group(table, name)


def symmetric_group(n: int) -> FiniteGroup:
    if n < 1:
        raise ValueError("symmetric group needs n >= 1")
    perms = list(itertools.permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    table = [[index[_perm_compose(p, q)] for q in perms] for p in perms]
    return validate_group(table, f"S{n}")


def direct_product(g1: FiniteGroup, g2: FiniteGroup) -> FiniteGroup:
    """Elements (a, b) are indexed a * |g2| + b."""
    m2 = g2.order
    table = [[g1.mul(a, c) * m2 + g2.mul(b, d)
              for c in range(g1.order) for d in range(m2)]
             for a in range(g1.order) for b in range(m2)]
    return validate_group(table, f"{g1.name}x{g2.name}")


def subgroups(group: FiniteGroup) -> list[frozenset[int]]:
    """All subgroups generated by at most two elements (every subgroup for order < 16)."""
    found = set()
    for a in group.elements():
        for b in group.elements():
            if b < a:
                continue
            sub = {group.identity}
            frontier = [group.identity]
            while frontier:
                nxt = []
                for x in frontier:
                    for s in (a, b):
                        y = group.mul(s, x)
                        if y not in sub:
                            sub.add(y)
                            nxt.append(y)
                frontier = nxt
            found.add(frozenset(sub))
    return sorted(found, key=lambda s: (len(s), sorted(s)))


# scalar positive-definite functions

class PDCertificate(NamedTuple):
    positive_definite: bool
    min_eigenvalue: float

    def __bool__(self):
        return self.positive_definite


def gram_matrix(group: FiniteGroup, eta: Sequence[complex], elements: Sequence[int] | None = None) -> np.ndarray:
    """Matrix with entry (i, j) equal to eta(g_j^{-1} g_i)."""
    eta = np.asarray(eta, dtype=complex)
    els = list(group.elements()) if elements is None else list(elements)
    inv = group.inverses
    idx = np.array([[group.mul(inv[gj], gi) for gj in els] for gi in els], dtype=int)
    return eta[idx]


def is_scalar_positive_definite(group: FiniteGroup, eta: Sequence[complex],
                                tol: float = DEFAULT_TOL) -> PDCertificate:
    """PSD test of the full |G| x |G| Gram matrix; covers every finite tuple."""
    m = gram_matrix(group, eta)
    scale = 1.0 + float(np.abs(m).max())
    herm = np.abs(m - m.conj().T).max() <= tol * scale
    lo = float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])
    return PDCertificate(bool(herm and lo >= -tol * scale), lo)


def epsilon_support(group: FiniteGroup, eta: Sequence[complex], eps: float) -> frozenset[int]:
    """Smallest set F with |eta(g)| >= eps implying g in F."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return frozenset(g for g in group.elements() if abs(eta[g]) >= eps)


def random_positive_definite(group: FiniteGroup, rng: np.random.Generator) -> np.ndarray:
    """eta(g) = <lambda_g f, f> for a random unit vector f in l^2(G); eta(e) = 1."""
    m = group.order
    f = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    f /= np.linalg.norm(f)
    inv = group.inverses
    # (lambda_g f)(k) = f(g^{-1} k)
    return np.array([sum(f[group.mul(inv[g], k)] * np.conj(f[k]) for k in range(m))
                     for g in range(m)])
