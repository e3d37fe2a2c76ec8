"""Seeded generators for random partial dynamical systems, maps and chains.

Partial actions are produced as restrictions of random global actions. A
global action on B is induced from subgroups: each orbit of blocks is G/H for
a subgroup H acting on C^n through a unitary representation sigma, and

    U_{g, gx} = W_{gx} sigma(r_{gx}^{-1} g r_x) W_x^*

for coset representatives r_x and random unitaries W_x. Restricting to a
random set of blocks yields a genuinely partial action.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraElement, BlockShape, TracialState, random_unitary
from .crossed_product import CrossedProduct
from .gns import LinearMap, MatrixAlgebra, faithful_representation, trace_map
from .groups import (FiniteGroup, cyclic_group, direct_product, group_from_permutations,
                     random_positive_definite, subgroups, symmetric_group)
from .partial_action import PartialAction, restrict_global


def small_groups(max_order: int) -> list[FiniteGroup]:
    z2 = cyclic_group(2)
    pool = [cyclic_group(n) for n in range(1, 9)]
    pool += [direct_product(z2, z2), symmetric_group(3), direct_product(z2, cyclic_group(4)),
             direct_product(direct_product(z2, z2), z2),
             group_from_permutations([(1, 2, 3, 0), (3, 2, 1, 0)], "D4")]
    return [g for g in pool if g.order <= max_order]


def coset_data(group: FiniteGroup, sub: frozenset[int]):
    """Left cosets of ``sub``: representatives, element -> coset, and g . coset."""
    reps, owner = [], {}
    for g in group.elements():
        if g in owner:
            continue
        idx = len(reps)
        reps.append(g)
        for h in sub:
            owner[group.mul(g, h)] = idx
    act = [[owner[group.mul(g, r)] for r in reps] for g in group.elements()]
    return reps, owner, act


def _subgroup_rep(group: FiniteGroup, sub: frozenset[int], n: int, rng) -> dict[int, np.ndarray]:
    """Unitary representation of ``sub`` on C^n: a coset permutation representation when possible."""
    elems = sorted(sub)
    options = [k for k in subgroups(group) if k <= sub and len(sub) // len(k) == n]
    if n > 1 and options and rng.random() < 0.7:
        k = options[rng.integers(len(options))]
        # action of sub on its own cosets of k
        reps, owner = [], {}
        for h in elems:
            if h in owner:
                continue
            owner.update({group.mul(h, x): len(reps) for x in k})
            reps.append(h)
        v = random_unitary(n, rng)
        out = {}
        for h in elems:
            p = np.zeros((n, n))
            for c, r in enumerate(reps):
                p[owner[group.mul(h, r)], c] = 1.0
            out[h] = v @ p @ v.conj().T
        return out
    return {h: np.eye(n, dtype=complex) for h in elems}


def random_global_action(group: FiniteGroup, orbits: list[tuple[frozenset[int], int]], rng):
    """Global action on the blocks of all orbits ``(H, n)``; returns (action, orbit id per block)."""
    dims, orbit_of, perm, units = [], [], {g: {} for g in group.elements()}, {g: {} for g in group.elements()}
    for oid, (sub, n) in enumerate(orbits):
        reps, _, act = coset_data(group, sub)
        base = len(dims)
        dims.extend([n] * len(reps))
        orbit_of.extend([oid] * len(reps))
        sigma = _subgroup_rep(group, sub, n, rng)
        w = [random_unitary(n, rng) for _ in reps]
        inv = group.inverses
        for g in group.elements():
            for x, r in enumerate(reps):
                gx = act[g][x]
                stab = group.mul(inv[reps[gx]], group.mul(g, r))
                perm[g][base + x] = base + gx
                units[g][base + gx] = w[gx] @ sigma[stab] @ w[x].conj().T
    shape = BlockShape(tuple(dims))
    action = PartialAction.build(group, shape, {g: (perm[g], units[g]) for g in group.elements()})
    return action, orbit_of


@dataclass(frozen=True)
class Budget:
    max_order: int = 8
    max_total: int = 6
    max_algebra_dim: int | None = None
    max_crossed_dim: int | None = None


def random_crossed_product(seed: int, budget: Budget = Budget()) -> tuple[CrossedProduct, dict]:
    """Random validated system with a G-invariant faithful trace; deterministic per seed."""
    rng = np.random.default_rng(seed)
    groups = small_groups(budget.max_order)
    for _ in range(1000):
        group = groups[rng.integers(len(groups))]
        subs = subgroups(group)
        orbits = []
        for _ in range(int(rng.integers(1, 4))):
            sub = subs[rng.integers(len(subs))]
            n = int(rng.integers(1, min(3, budget.max_total + 1)))
            orbits.append((sub, n))
        glob, orbit_of = random_global_action(group, orbits, rng)
        order = rng.permutation(glob.shape.num_blocks)
        keep, total, adim = [], 0, 0
        for b in order:
            n = glob.shape.dims[b]
            if total + n > budget.max_total:
                continue
            if budget.max_algebra_dim is not None and adim + n * n > budget.max_algebra_dim:
                continue
            keep.append(int(b))
            total += n
            adim += n * n
            if rng.random() < 0.35:
                break
        if not keep:
            continue
        res = restrict_global(glob, keep)
        orbit_weight = rng.uniform(0.2, 1.0, size=len(orbits))
        raw = [orbit_weight[orbit_of[b]] for b in res.blocks]
        tau = TracialState.normalized(res.action.shape, raw)
        system = CrossedProduct(res.action, tau)
        if budget.max_crossed_dim is not None and system.dim > budget.max_crossed_dim:
            continue
        meta = {"seed": seed, "group": group.name, "global_dims": list(glob.shape.dims),
                "kept_blocks": list(res.blocks), "globalization_covers": res.globalization_covers}
        return system, meta
    raise RuntimeError("budget too small to generate a system")


# random maps

def random_ucp_map(tau: TracialState, rng, terms: int = 3) -> LinearMap:
    """Random unital, completely positive, tau-preserving map on A.

    Convex mixture of block-unitary conjugations, random-basis pinchings,
    weight-preserving block permutations and a -> tau(a) 1.
    """
    shape = tau.shape
    model = MatrixAlgebra(shape)
    parts = []
    for _ in range(terms):
        kind = rng.integers(4)
        if kind == 0:
            us = [random_unitary(n, rng) for n in shape.dims]
            parts.append(LinearMap.from_function(model, lambda a, us=us: AlgebraElement(
                shape, [u @ b @ u.conj().T for u, b in zip(us, a.blocks)])))
        elif kind == 1:
            us = [random_unitary(n, rng) for n in shape.dims]

            def pinch(a, us=us):
                out = []
                for u, b in zip(us, a.blocks):
                    d = np.diag(np.diag(u.conj().T @ b @ u))
                    out.append(u @ d @ u.conj().T)
                return AlgebraElement(shape, out)
            parts.append(LinearMap.from_function(model, pinch))
        elif kind == 2:
            perm = _weight_preserving_permutation(tau, rng)
            parts.append(LinearMap.from_function(model, lambda a, p=perm: AlgebraElement(
                shape, [a.blocks[p[i]] for i in range(shape.num_blocks)])))
        else:
            parts.append(trace_map(tau))
    coef = rng.dirichlet(np.ones(len(parts)))
    return LinearMap(model, sum(c * p.matrix for c, p in zip(coef, parts)))


def fixed_point_unitary(action: PartialAction, rng) -> AlgebraElement:
    """Random unitary u with alpha_g(1_{g^-1} u) = 1_g u for every g."""
    shape = action.shape
    eye = np.eye(shape.dim)
    rows = []
    for g in action.group.elements():
        proj = np.zeros(shape.dim)
        for t in action.range(g):
            proj[shape.offsets[t]:shape.offsets[t] + shape.dims[t] ** 2] = 1.0
        rows.append(action.superoperators[g] - eye * proj)
    _, sv, vh = np.linalg.svd(np.vstack(rows))
    null = vh[int((sv > 1e-10).sum()):].conj().T
    x = null @ (rng.standard_normal(null.shape[1]) + 1j * rng.standard_normal(null.shape[1]))
    a = AlgebraElement.from_vector(shape, x)
    out = []
    for b in a.blocks:
        w, v = np.linalg.eigh((b + b.conj().T) / 2)
        out.append((v * np.exp(1j * w)) @ v.conj().T)
    return AlgebraElement(shape, out)


def random_equivariant_ucp_map(action: PartialAction, tau: TracialState, rng, terms: int = 3) -> LinearMap:
    """Random unital, completely positive, tau-preserving map commuting with the partial action.

    Convex mixture of conjugations by fixed-point unitaries and blockwise
    depolarizations whose strength is constant along block orbits.
    """
    shape = tau.shape
    model = MatrixAlgebra(shape)
    orbit = list(range(shape.num_blocks))
    for g in action.group.elements():
        for s, t in action.block_map(g).items():
            orbit[t] = orbit[s] = min(orbit[s], orbit[t])
    for i in range(len(orbit)):
        while orbit[i] != orbit[orbit[i]]:
            orbit[i] = orbit[orbit[i]]
    parts = []
    for _ in range(terms):
        if rng.integers(2) == 0:
            u = fixed_point_unitary(action, rng)
            parts.append(LinearMap.from_function(model, lambda a, u=u: AlgebraElement(
                shape, [v @ b @ v.conj().T for v, b in zip(u.blocks, a.blocks)])))
        else:
            p = rng.uniform(0, 1, size=shape.num_blocks)
            parts.append(LinearMap.from_function(model, lambda a, p=p: AlgebraElement(shape, [
                (1 - p[orbit[i]]) * b + p[orbit[i]] * np.trace(b) / n * np.eye(n)
                for i, (n, b) in enumerate(zip(shape.dims, a.blocks))])))
    coef = rng.dirichlet(np.ones(len(parts)))
    return LinearMap(model, sum(c * m.matrix for c, m in zip(coef, parts)))


def _weight_preserving_permutation(tau: TracialState, rng) -> list[int]:
    shape = tau.shape
    classes: dict = {}
    for i, (n, w) in enumerate(zip(shape.dims, tau.weights)):
        classes.setdefault((n, round(w, 12)), []).append(i)
    perm = list(range(shape.num_blocks))
    for members in classes.values():
        shuffled = list(rng.permutation(members))
        for src, dst in zip(members, shuffled):
            perm[src] = int(dst)
    return perm


def random_unitary_in(system: CrossedProduct, rng) -> np.ndarray:
    """Coordinates of exp(iH) for a random self-adjoint H in the crossed product."""
    d, R = faithful_representation(system)
    x = rng.standard_normal(system.dim) + 1j * rng.standard_normal(system.dim)
    h = (x + system.adjoint_vector(x)) / 2
    m = (R @ h).reshape(d, d)
    m = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(m)
    u = (v * np.exp(1j * w)) @ v.conj().T
    return np.linalg.pinv(R) @ u.ravel()


def inner_automorphism(system: CrossedProduct, u: np.ndarray) -> LinearMap:
    """x -> u x u^*."""
    us = system.adjoint_vector(u)
    eye = np.eye(system.dim)
    cols = [system.multiply_vectors(system.multiply_vectors(u, eye[k]), us) for k in range(system.dim)]
    return LinearMap(system, np.array(cols).T)


def random_eta(group: FiniteGroup, rng) -> np.ndarray:
    return random_positive_definite(group, rng)
