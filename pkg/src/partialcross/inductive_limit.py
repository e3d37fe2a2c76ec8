"""Trace-compatible chains of multi-matrix algebras and their GNS spaces.

An embedding is stored as Bratteli data: target block i holds ``m[i, j]``
copies of source block j, stacked in increasing j, conjugated by a unitary
``W_i``. Rows with fewer rows than the target block are padded with zeros,
which makes the embedding non-unital; validation rejects that.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.linalg import block_diag

from .algebra import DEFAULT_TOL, AlgebraElement, BlockShape, TracialState, as_shape, random_unitary
from .crossed_product import (CrossedProduct, build_regular_representation,
                              random_crossed_element, reduced_norm)
from .errors import StructuralError
from .gns import (Certificate, GNSSpace, LinearMap, MatrixAlgebra, check_tau_decreasing, check_ucp)
from .partial_action import PartialAction, ValidationReport, Violation, validate_partial_action


@dataclass(frozen=True, eq=False)
class ChainStage:
    shape: BlockShape
    trace: TracialState
    action: PartialAction | None = None

    def __post_init__(self):
        object.__setattr__(self, "shape", as_shape(self.shape))
        if self.trace.shape != self.shape:
            raise StructuralError("trace lives on a different shape")
        if not self.trace.faithful:
            raise StructuralError("stage trace must be faithful")
        if self.action is not None:
            if self.action.shape != self.shape:
                raise StructuralError("action lives on a different shape")
            report = validate_partial_action(self.action)
            if not report:
                raise StructuralError(f"stage action is invalid: {report.violations[:3]}")

    @cached_property
    def gns(self) -> GNSSpace:
        return GNSSpace.of_trace(self.trace)

    @cached_property
    def crossed_product(self) -> CrossedProduct:
        if self.action is None:
            raise StructuralError("stage has no action")
        return CrossedProduct(self.action, self.trace)


@dataclass(frozen=True, eq=False)
class Embedding:
    source: BlockShape
    target: BlockShape
    multiplicities: np.ndarray = field(repr=False)
    unitaries: tuple[np.ndarray, ...] = field(repr=False, default=None)

    def __post_init__(self):
        src, tgt = as_shape(self.source), as_shape(self.target)
        m = np.array(self.multiplicities, dtype=int)
        if m.shape != (tgt.num_blocks, src.num_blocks):
            raise StructuralError(f"multiplicity matrix must be {tgt.num_blocks} x {src.num_blocks}, got {m.shape}")
        if (m < 0).any():
            raise StructuralError("multiplicities must be nonnegative")
        used = m @ np.array(src.dims)
        over = [i for i, (u, n) in enumerate(zip(used, tgt.dims)) if u > n]
        if over:
            raise StructuralError(f"target blocks {over} are too small for their multiplicities")
        units = self.unitaries
        if units is None:
            units = tuple(np.eye(n, dtype=complex) for n in tgt.dims)
        units = tuple(np.array(u, dtype=complex) for u in units)
        if len(units) != tgt.num_blocks or any(u.shape != (n, n) for u, n in zip(units, tgt.dims)):
            raise StructuralError("one unitary per target block of matching size required")
        m.setflags(write=False)
        for u in units:
            u.setflags(write=False)
        object.__setattr__(self, "source", src)
        object.__setattr__(self, "target", tgt)
        object.__setattr__(self, "multiplicities", m)
        object.__setattr__(self, "unitaries", units)

    @classmethod
    def identity(cls, shape) -> "Embedding":
        shape = as_shape(shape)
        return cls(shape, shape, np.eye(shape.num_blocks, dtype=int))

    @property
    def is_unital(self) -> bool:
        return bool((self.multiplicities @ np.array(self.source.dims) == np.array(self.target.dims)).all())

    def apply(self, a: AlgebraElement) -> AlgebraElement:
        if a.shape != self.source:
            raise StructuralError("element does not live on the source shape")
        out = []
        for i, n in enumerate(self.target.dims):
            parts = [a.blocks[j] for j in range(self.source.num_blocks) for _ in range(self.multiplicities[i, j])]
            used = sum(p.shape[0] for p in parts)
            if used < n:
                parts.append(np.zeros((n - used, n - used)))
            w = self.unitaries[i]
            out.append(w @ block_diag(*parts) @ w.conj().T)
        return AlgebraElement(self.target, out)

    __call__ = apply

    @cached_property
    def matrix(self) -> np.ndarray:
        """J with coords(phi(a)) = J coords(a)."""
        eye = np.eye(self.source.dim)
        cols = [self.apply(AlgebraElement.from_vector(self.source, eye[k])).vector() for k in range(self.source.dim)]
        m = np.array(cols).T if cols else np.zeros((self.target.dim, 0))
        m.setflags(write=False)
        return m

    def compose(self, inner: "Embedding") -> "Embedding":
        """self after inner."""
        if inner.target != self.source:
            raise StructuralError("shapes do not chain")
        m1, m2 = inner.multiplicities, self.multiplicities
        src = inner.source
        units = []
        for k, nk in enumerate(self.target.dims):
            # nested slot order: for each middle block i, m2[k,i] copies of (W1_i (+) a_j^{m1[i,j]} W1_i^*)
            slots, conj = [], []
            for i, ni in enumerate(inner.target.dims):
                for _ in range(m2[k, i]):
                    conj.append(inner.unitaries[i])
                    for j in range(src.num_blocks):
                        slots.extend([j] * m1[i, j])
                    slots.append(("pad", ni - int(m1[i] @ np.array(src.dims))))
            # canonical positions of each copy of source block j
            counts = (m2 @ m1)[k]
            starts = np.concatenate([[0], np.cumsum([counts[j] * src.dims[j] for j in range(src.num_blocks)])])
            next_copy = [0] * src.num_blocks
            pad_pos = int(starts[-1])
            perm = []
            for s in slots:
                if isinstance(s, tuple):
                    perm.extend(range(pad_pos, pad_pos + s[1]))
                    pad_pos += s[1]
                else:
                    base = int(starts[s]) + next_copy[s] * src.dims[s]
                    perm.extend(range(base, base + src.dims[s]))
                    next_copy[s] += 1
            perm.extend(range(pad_pos, nk))
            p = np.zeros((nk, nk))
            p[np.arange(nk), perm] = 1.0
            d = block_diag(*conj, np.eye(nk - sum(c.shape[0] for c in conj))) if conj else np.eye(nk)
            units.append(self.unitaries[k] @ d @ p)
        return Embedding(src, self.target, m2 @ m1, tuple(units))


def validate_embedding(emb: Embedding, tau_src: TracialState, tau_tgt: TracialState,
                       tol: float = DEFAULT_TOL) -> ValidationReport:
    """Unital *-homomorphism on matrix units and tau_tgt o phi = tau_src."""
    if tau_src.shape != emb.source or tau_tgt.shape != emb.target:
        raise StructuralError("traces do not match the embedding shapes")
    viol, worst = [], 0.0
    if not emb.is_unital:
        viol.append(Violation("unital", None, None, None, 1.0))
    for i, u in enumerate(emb.unitaries):
        d = float(np.abs(u.conj().T @ u - np.eye(len(u))).max())
        worst = max(worst, d)
        if d > tol:
            viol.append(Violation("unitarity", None, None, i, d))
    src, tgt = MatrixAlgebra(emb.source), MatrixAlgebra(emb.target)
    J = emb.matrix
    eye = np.eye(emb.source.dim)
    for p in range(emb.source.dim):
        d = float(np.abs(J @ src.adjoint_vector(eye[p]) - tgt.adjoint_vector(J[:, p])).max())
        worst = max(worst, d)
        if d > tol:
            viol.append(Violation("adjoint", p, None, None, d))
        for q in range(emb.source.dim):
            d = float(np.abs(J @ src.multiply_vectors(eye[p], eye[q]) - tgt.multiply_vectors(J[:, p], J[:, q])).max())
            worst = max(worst, d)
            if d > tol:
                viol.append(Violation("multiplicative", p, q, None, d))
    w_pred = emb.multiplicities.T @ np.array(tau_tgt.weights)
    for j, (w, wp) in enumerate(zip(tau_src.weights, w_pred)):
        d = abs(w - wp)
        worst = max(worst, d)
        if d > tol:
            viol.append(Violation("trace-weight", None, None, j, d))
    d = float(np.abs(tau_tgt.functional @ J - tau_src.functional).max()) if J.size else 0.0
    worst = max(worst, d)
    if d > tol:
        viol.append(Violation("trace-basis", None, None, None, d))
    return ValidationReport("embedding", viol, worst, tol)


def gns_isometry(emb: Embedding, tau_src: TracialState, tau_tgt: TracialState) -> np.ndarray:
    """U(a + N) = phi(a) + N in orthonormal GNS coordinates."""
    s, t = GNSSpace.of_trace(tau_src), GNSSpace.of_trace(tau_tgt)
    return t.sqrt @ emb.matrix @ s.inv_sqrt


def isometry_defect(u: np.ndarray) -> float:
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[1])).max()) if u.size else 0.0


def extend_operator(T: np.ndarray, U: np.ndarray) -> np.ndarray:
    """T' = U T U^*, i.e. T transported along U composed with the projection P = U U^*."""
    return U @ T @ U.conj().T


def conditional_expectation_matrix(emb: Embedding, tau_src: TracialState, tau_tgt: TracialState) -> np.ndarray:
    """E with <a, E b>_src = <phi(a), b>_tgt, in algebra coordinates (target -> source)."""
    gs, gt = GNSSpace.of_trace(tau_src).gram, GNSSpace.of_trace(tau_tgt).gram
    return np.linalg.solve(gs, emb.matrix.conj().T @ gt)


def lift_ucp(phi: LinearMap, emb: Embedding, tau_src: TracialState, tau_tgt: TracialState) -> LinearMap:
    """psi = iota o phi o E_iota on the target algebra."""
    if phi.matrix.shape != (emb.source.dim, emb.source.dim):
        raise StructuralError("phi does not act on the embedding source")
    E = conditional_expectation_matrix(emb, tau_src, tau_tgt)
    return LinearMap(MatrixAlgebra(emb.target), emb.matrix @ phi.matrix @ E)


@dataclass
class LiftReport:
    psi: LinearMap
    ucp: Certificate
    tau_decreasing: Certificate
    compatibility: float
    deviation_gap: float

    @property
    def passed(self) -> bool:
        return bool(self.ucp and self.tau_decreasing)


def certify_lift(phi: LinearMap, emb: Embedding, tau_src: TracialState, tau_tgt: TracialState,
                 tol: float = DEFAULT_TOL) -> LiftReport:
    """Certificates for lift_ucp: UCP, tau-decreasing, psi o iota = iota o phi, equal deviations."""
    psi = lift_ucp(phi, emb, tau_src, tau_tgt)
    J = emb.matrix
    compat = float(np.abs(psi.matrix @ J - J @ phi.matrix).max()) if J.size else 0.0
    s, t = GNSSpace.of_trace(tau_src), GNSSpace.of_trace(tau_tgt)
    gap = 0.0
    eye = np.eye(emb.source.dim)
    for k in range(emb.source.dim):
        a = eye[k]
        dn = np.linalg.norm(s.sqrt @ (phi.matrix @ a - a))
        dk = np.linalg.norm(t.sqrt @ (psi.matrix @ J @ a - J @ a))
        gap = max(gap, float(abs(dn - dk)))
    return LiftReport(psi, check_ucp(psi, tol), check_tau_decreasing(tau_tgt, psi, tol), compat, gap)


@dataclass(frozen=True, eq=False)
class Chain:
    stages: tuple[ChainStage, ...]
    embeddings: tuple[Embedding, ...]

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        object.__setattr__(self, "embeddings", tuple(self.embeddings))
        if len(self.embeddings) != len(self.stages) - 1:
            raise StructuralError("a chain with k stages needs k - 1 embeddings")
        for n, emb in enumerate(self.embeddings):
            if emb.source != self.stages[n].shape or emb.target != self.stages[n + 1].shape:
                raise StructuralError(f"embedding {n} does not connect stages {n} and {n + 1}")

    def __len__(self):
        return len(self.stages)

    def truncate(self, k: int) -> "Chain":
        k = max(1, min(k, len(self.stages)))
        return Chain(self.stages[:k], self.embeddings[:k - 1])

    def composite(self, n: int, k: int) -> Embedding:
        """phi_{n,k} = phi_{k-1} o ... o phi_n."""
        if not 0 <= n <= k < len(self.stages):
            raise StructuralError(f"invalid stage range {n}..{k}")
        out = Embedding.identity(self.stages[n].shape)
        for m in range(n, k):
            out = self.embeddings[m].compose(out)
        return out

    def isometry(self, n: int, k: int) -> np.ndarray:
        return gns_isometry(self.composite(n, k), self.stages[n].trace, self.stages[k].trace)


# equivariant chains

def check_equivariance(emb: Embedding, src: PartialAction, tgt: PartialAction,
                       tol: float = DEFAULT_TOL) -> ValidationReport:
    """phi o alpha_g = alpha'_g o phi on D_{g^-1} and phi(D_g) inside D'_g."""
    viol, worst = [], 0.0
    J = emb.matrix
    for g in src.group.elements():
        cols = np.concatenate([np.arange(src.shape.offsets[s], src.shape.offsets[s] + src.shape.dims[s] ** 2)
                               for s in sorted(src.range(g))] or [np.zeros(0, int)])
        outside = [i for i in range(tgt.shape.num_blocks) if i not in tgt.range(g)]
        for i in outside:
            o, n = tgt.shape.offsets[i], tgt.shape.dims[i]
            d = float(np.abs(J[o:o + n * n][:, cols]).max()) if len(cols) else 0.0
            worst = max(worst, d)
            if d > tol:
                viol.append(Violation("range-inclusion", g, None, i, d))
        dcols = np.concatenate([np.arange(src.shape.offsets[s], src.shape.offsets[s] + src.shape.dims[s] ** 2)
                                for s in sorted(src.domain(g))] or [np.zeros(0, int)])
        if len(dcols):
            lhs = J @ src.superoperators[g][:, dcols]
            rhs = tgt.superoperators[g] @ J[:, dcols]
            d = float(np.abs(lhs - rhs).max())
            worst = max(worst, d)
            if d > tol:
                viol.append(Violation("equivariance", g, None, None, d))
    return ValidationReport("equivariance", viol, worst, tol)


def induced_crossed_embedding(emb: Embedding, src: CrossedProduct, tgt: CrossedProduct) -> np.ndarray:
    """Matrix of sum a_g delta_g -> sum phi(a_g) delta_g in crossed-product coordinates."""
    J = emb.matrix
    out = np.zeros((tgt.dim, src.dim), dtype=complex)
    for g in src.group.elements():
        rs, cs = tgt.coefficient_slice(g), src.coefficient_slice(g)
        out[rs, cs] = J[np.ix_(tgt.coefficient_columns(g), src.coefficient_columns(g))]
    return out


@dataclass
class StageCertification:
    index: int
    equivariance: ValidationReport
    homomorphism: float
    isometric: float
    expectation: float
    trace: float
    tolerance: float
    norm_tolerance: float

    @property
    def checks(self) -> dict[str, bool]:
        return {"equivariance": self.equivariance.ok,
                "unital-homomorphism": self.homomorphism <= self.tolerance,
                "isometric": self.isometric <= self.norm_tolerance,
                "expectation": self.expectation <= self.tolerance,
                "trace": self.trace <= self.tolerance}

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def equivariant_chain_crossed_products(chain: Chain, rng=None, samples: int = 5, tol: float = DEFAULT_TOL,
                                       norm_tol: float = 1e-9) -> list[StageCertification]:
    """Stagewise certification of the induced embeddings of crossed products."""
    rng = np.random.default_rng(0) if rng is None else rng
    out = []
    for n, emb in enumerate(chain.embeddings):
        s_stage, t_stage = chain.stages[n], chain.stages[n + 1]
        if s_stage.action is None or t_stage.action is None:
            raise StructuralError("every stage needs an action")
        eq = check_equivariance(emb, s_stage.action, t_stage.action, tol)
        if not eq.ok:
            out.append(StageCertification(n, eq, np.inf, np.inf, np.inf, np.inf, tol, norm_tol))
            continue
        X, Y = s_stage.crossed_product, t_stage.crossed_product
        I = induced_crossed_embedding(emb, X, Y)
        hom = float(np.abs(I @ X.unit_vector() - Y.unit_vector()).max())
        hom = max(hom, float(np.abs(I @ X.adjoint_matrix - Y.adjoint_matrix @ I.conj()).max()))
        lhs = np.einsum("rc,abc->rab", I, X.structure_constants, optimize=True)
        rhs = np.einsum("ap,bq,abc->cpq", I, I, Y.structure_constants, optimize=True)
        hom = max(hom, float(np.abs(lhs - rhs).max()))
        rx, ry = build_regular_representation(X), build_regular_representation(Y)
        iso = 0.0
        for _ in range(samples):
            x = random_crossed_element(X, rng)
            y = Y.from_vector(I @ x.vector())
            nx, ny = reduced_norm(rx, x), reduced_norm(ry, y)
            iso = max(iso, abs(nx - ny) / max(nx, 1e-300))
        e = X.group.identity
        ex = np.zeros((X.dim, X.dim))
        ex[X.coefficient_slice(e), X.coefficient_slice(e)] = np.eye(X.shape.dim)
        ey = np.zeros((Y.dim, Y.dim))
        ey[Y.coefficient_slice(e), Y.coefficient_slice(e)] = np.eye(Y.shape.dim)
        expct = float(np.abs(ey @ I - I @ ex).max())
        tr = float(np.abs(Y.trace_functional @ I - X.trace_functional).max())
        out.append(StageCertification(n, eq, hom, iso, expct, tr, tol, norm_tol))
    return out


# random chains

def _random_bratteli_step(src: BlockShape, rng, max_total: int, max_blocks: int = 3):
    for _ in range(200):
        k = int(rng.integers(1, max_blocks + 1))
        m = rng.integers(0, 3, size=(k, src.num_blocks))
        if (m.sum(axis=0) == 0).any() or (m.sum(axis=1) == 0).any():
            continue
        dims = m @ np.array(src.dims)
        if dims.sum() <= max_total:
            return m, BlockShape(tuple(int(d) for d in dims))
    m = np.eye(src.num_blocks, dtype=int)
    return m, src


def random_chain(seed: int, stages: int = 4, max_total: int = 8) -> Chain:
    """Random unital trace-compatible chain; weights are pulled back from the last stage."""
    rng = np.random.default_rng(seed)
    first = BlockShape(tuple(int(n) for n in rng.integers(1, 3, size=int(rng.integers(1, 3)))))
    shapes, mults = [first], []
    for _ in range(stages - 1):
        m, nxt = _random_bratteli_step(shapes[-1], rng, max_total)
        mults.append(m)
        shapes.append(nxt)
    weights = [None] * stages
    weights[-1] = rng.uniform(0.2, 1.0, size=shapes[-1].num_blocks)
    for n in range(stages - 2, -1, -1):
        weights[n] = mults[n].T @ weights[n + 1]
    scale = float(np.dot(weights[-1], shapes[-1].dims))
    traces = [TracialState(s, tuple(float(x) for x in w / scale)) for s, w in zip(shapes, weights)]
    embs = [Embedding(shapes[n], shapes[n + 1], mults[n],
                      tuple(random_unitary(d, rng) for d in shapes[n + 1].dims)) for n in range(stages - 1)]
    return Chain(tuple(ChainStage(s, t) for s, t in zip(shapes, traces)), tuple(embs))


def _block_orbits(action: PartialAction) -> list[int]:
    k = action.shape.num_blocks
    parent = list(range(k))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x
    for g in action.group.elements():
        for s, t in action.block_map(g).items():
            parent[find(s)] = find(t)
    return [find(i) for i in range(k)]


def amplify_stage(stage: ChainStage, factors: Sequence[int], rng) -> tuple[ChainStage, Embedding]:
    """Next stage with block i replaced by M_{n_i r_i}; r must be constant on orbits of blocks."""
    act = stage.action
    shape = stage.shape
    r = [int(x) for x in factors]
    orb = _block_orbits(act)
    for i in range(shape.num_blocks):
        if r[i] != r[orb[i]]:
            raise StructuralError("amplification factors must be constant on orbits")
    new = BlockShape(tuple(n * f for n, f in zip(shape.dims, r)))
    ws = [random_unitary(n, rng) for n in new.dims]
    records = {}
    for g in act.group.elements():
        bmap = act.block_map(g)
        records[g] = (bmap, {t: ws[t] @ np.kron(np.eye(r[t]), act.unitary(g, t)) @ ws[s].conj().T
                             for s, t in bmap.items()})
    new_action = PartialAction.build(act.group, new, records)
    tau = TracialState(new, tuple(w / f for w, f in zip(stage.trace.weights, r)))
    emb = Embedding(shape, new, np.diag(r), tuple(ws))
    return ChainStage(new, tau, new_action), emb


def random_equivariant_chain(seed: int, stages: int = 4, max_total: int = 8, max_order: int = 4,
                             max_algebra_dim: int = 16) -> Chain:
    """Chain of amplifications of a random partial dynamical system."""
    from .random_systems import Budget, random_crossed_product
    rng = np.random.default_rng(seed)
    system, _ = random_crossed_product(int(rng.integers(2 ** 31)),
                                       Budget(max_order=max_order, max_total=min(4, max_total), max_algebra_dim=6))
    st = [ChainStage(system.shape, system.trace, system.action)]
    embs = []
    for _ in range(stages - 1):
        cur = st[-1]
        orb = _block_orbits(cur.action)
        choice = {o: int(rng.integers(1, 3)) for o in set(orb)}
        r = [choice[o] for o in orb]
        dims = [n * f for n, f in zip(cur.shape.dims, r)]
        if sum(dims) > max_total or sum(d * d for d in dims) > max_algebra_dim:
            r = [1] * cur.shape.num_blocks
        nxt, emb = amplify_stage(cur, r, rng)
        st.append(nxt)
        embs.append(emb)
    return Chain(tuple(st), tuple(embs))
