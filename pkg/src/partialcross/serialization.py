"""JSON interchange for systems, elements, center-valued functions and chains.

Complex numbers are written as ``[re, im]`` pairs and matrices as row-major
nested lists. Block indices and group elements are 0-based. Readers accept a
plain real number wherever a complex one is expected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .algebra import AlgebraElement, BlockShape, TracialState
from .crossed_product import CrossedElement, CrossedProduct
from .errors import StructuralError
from .groups import FiniteGroup, cyclic_group, symmetric_group, validate_group
from .inductive_limit import Chain, ChainStage, Embedding
from .partial_action import PartialAction, global_action, restrict_global


class ParseError(ValueError):
    """Malformed input; ``location`` is a JSON path such as ``$.action[0].block_map``."""

    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.message = message
        self.location = location


# scalars and matrices

def _complex(x, loc: str) -> complex:
    if isinstance(x, bool):
        raise ParseError("expected a number", loc)
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                                           for v in x):
        return complex(x[0], x[1])
    raise ParseError("expected a number or an [re, im] pair", loc)


def parse_matrix(obj, n: int, loc: str) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != n:
        raise ParseError(f"expected a {n} x {n} matrix", loc)
    out = np.zeros((n, n), dtype=complex)
    for r, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"expected a row of length {n}", f"{loc}[{r}]")
        for c, x in enumerate(row):
            out[r, c] = _complex(x, f"{loc}[{r}][{c}]")
    return out


def encode_complex(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def encode_matrix(m: np.ndarray) -> list:
    return [[encode_complex(z) for z in row] for row in np.asarray(m)]


def _int(x, loc: str, lo: int | None = None, hi: int | None = None) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ParseError("expected an integer", loc)
    if (lo is not None and x < lo) or (hi is not None and x >= hi):
        raise ParseError(f"integer {x} out of range", loc)
    return x


def _require(obj: dict, key: str, loc: str):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", loc)
    if key not in obj:
        raise ParseError(f"missing field {key!r}", loc)
    return obj[key]


# groups

def parse_group(spec, loc: str = "$.group") -> FiniteGroup:
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ParseError('expected one of {"cyclic": n}, {"symmetric": n}, {"table": [...]}', loc)
    kind, val = next(iter(spec.items()))
    if kind == "cyclic":
        return cyclic_group(_int(val, f"{loc}.cyclic", 1, 65))
    if kind == "symmetric":
        return symmetric_group(_int(val, f"{loc}.symmetric", 1, 5))
    if kind == "table":
        try:
            return validate_group(np.array(val, dtype=int))
        except (StructuralError, ValueError, TypeError) as exc:
            raise ParseError(str(exc), f"{loc}.table") from exc
    raise ParseError(f"unknown group kind {kind!r}", loc)


def encode_group(group: FiniteGroup, spec: dict | None = None) -> dict:
    return spec if spec is not None else {"table": group.array.tolist()}


# systems

@dataclass
class SystemDescription:
    group_spec: dict
    group: FiniteGroup
    action: PartialAction
    trace: TracialState
    name: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def shape(self) -> BlockShape:
        return self.action.shape

    def crossed_product(self) -> CrossedProduct:
        return CrossedProduct(self.action, self.trace)

    def to_json(self) -> dict:
        return encode_system(self)


def parse_system(obj: Any, loc: str = "$") -> SystemDescription:
    if isinstance(obj, dict) and set(obj) == {"preset"}:
        name = obj["preset"]
        if name not in PRESETS:
            raise ParseError(f"unknown preset {name!r}", f"{loc}.preset")
        return preset(name)
    group_spec = _require(obj, "group", loc)
    group = parse_group(group_spec, f"{loc}.group")
    dims = _require(obj, "shape", loc)
    if not isinstance(dims, list) or not dims:
        raise ParseError("expected a nonempty list of block sizes", f"{loc}.shape")
    shape = BlockShape(tuple(_int(n, f"{loc}.shape[{i}]", 1) for i, n in enumerate(dims)))
    records = {}
    acts = obj.get("action", [])
    if not isinstance(acts, list):
        raise ParseError("expected a list of action records", f"{loc}.action")
    for r, rec in enumerate(acts):
        rl = f"{loc}.action[{r}]"
        g = _int(_require(rec, "g", rl), f"{rl}.g", 0, group.order)
        if g in records:
            raise ParseError(f"duplicate record for element {g}", rl)
        pairs = _require(rec, "block_map", rl)
        if not isinstance(pairs, list):
            raise ParseError("expected a list of [source, target] pairs", f"{rl}.block_map")
        bmap = {}
        for p, pair in enumerate(pairs):
            pl = f"{rl}.block_map[{p}]"
            if not isinstance(pair, list) or len(pair) != 2:
                raise ParseError("expected a [source, target] pair", pl)
            s = _int(pair[0], f"{pl}[0]", 0, shape.num_blocks)
            t = _int(pair[1], f"{pl}[1]", 0, shape.num_blocks)
            bmap[s] = t
        units = {}
        for u, item in enumerate(rec.get("unitaries", [])):
            ul = f"{rl}.unitaries[{u}]"
            if not isinstance(item, list) or len(item) != 2:
                raise ParseError("expected a [target, matrix] pair", ul)
            t = _int(item[0], f"{ul}[0]", 0, shape.num_blocks)
            units[t] = parse_matrix(item[1], shape.dims[t], f"{ul}[1]")
        records[g] = (bmap, units)
    try:
        action = PartialAction.build(group, shape, records)
    except StructuralError as exc:
        raise ParseError(str(exc), f"{loc}.action") from exc
    w = obj.get("trace")
    try:
        if w is None:
            trace = TracialState.uniform(shape)
        else:
            if not isinstance(w, list) or len(w) != shape.num_blocks:
                raise ParseError("expected one weight per block", f"{loc}.trace")
            trace = TracialState(shape, tuple(float(_complex(x, f"{loc}.trace[{i}]").real) for i, x in enumerate(w)))
    except StructuralError as exc:
        raise ParseError(str(exc), f"{loc}.trace") from exc
    return SystemDescription(group_spec, group, action, trace, obj.get("name"))


def encode_system(desc: SystemDescription) -> dict:
    act = desc.action
    records = []
    for g in act.group.elements():
        records.append({"g": g, "block_map": [[s, t] for s, t in act.block_maps[g]],
                        "unitaries": [[t, encode_matrix(u)] for t, u in act.unitaries[g]]})
    out = {"group": desc.group_spec, "shape": list(act.shape.dims), "trace": list(desc.trace.weights),
           "action": records}
    if desc.name:
        out = {"name": desc.name, **out}
    return out


def load_system(text: str) -> SystemDescription:
    return parse_system(loads(text))


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc


# presets

def _w1() -> SystemDescription:
    g = cyclic_group(2)
    act = PartialAction.build(g, [1, 1], {1: ({1: 1}, {})})
    return SystemDescription({"cyclic": 2}, g, act, TracialState(act.shape, (0.5, 0.5)), "W1")


def _trivial() -> SystemDescription:
    g = cyclic_group(3)
    ident = {0: 0, 1: 1}
    act = PartialAction.build(g, [1, 2], {k: (ident, {}) for k in g.elements()})
    return SystemDescription({"cyclic": 3}, g, act, TracialState.uniform(act.shape), "trivial")


def _restriction_example() -> SystemDescription:
    # rotation of three one-dimensional blocks, restricted to the first two
    g = cyclic_group(3)
    glob = global_action(g, [1, 1, 1], {k: {i: (i + k) % 3 for i in range(3)} for k in g.elements()})
    res = restrict_global(glob, [0, 1])
    desc = SystemDescription({"cyclic": 3}, g, res.action, TracialState.uniform(res.action.shape),
                             "restriction-example")
    desc.extra = {"global_shape": [1, 1, 1], "kept_blocks": list(res.blocks),
                  "globalization_covers": res.globalization_covers}
    return desc


PRESETS = {"W1": _w1, "trivial": _trivial, "restriction-example": _restriction_example}


def preset(name: str) -> SystemDescription:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ParseError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


# elements and functions

def parse_algebra_element(obj, shape: BlockShape, loc: str) -> AlgebraElement:
    if isinstance(obj, dict) and set(obj) == {"central"}:
        vals = obj["central"]
        if not isinstance(vals, list) or len(vals) != shape.num_blocks:
            raise ParseError("expected one scalar per block", f"{loc}.central")
        return AlgebraElement.central(shape, [_complex(x, f"{loc}.central[{i}]") for i, x in enumerate(vals)])
    if not isinstance(obj, list) or len(obj) != shape.num_blocks:
        raise ParseError('expected a list of blocks or {"central": [...]}', loc)
    return AlgebraElement(shape, [parse_matrix(b, n, f"{loc}[{i}]") for i, (b, n) in enumerate(zip(obj, shape.dims))])


def encode_algebra_element(a: AlgebraElement) -> list:
    return [encode_matrix(b) for b in a.blocks]


def parse_crossed_element(obj, system: CrossedProduct, loc: str = "$.element") -> CrossedElement:
    """``{"g": coefficient}`` with string keys; missing elements are zero."""
    if not isinstance(obj, dict):
        raise ParseError("expected an object mapping group elements to coefficients", loc)
    coeffs = {}
    for key, val in obj.items():
        try:
            g = int(key)
        except ValueError:
            raise ParseError(f"group element key {key!r} is not an integer", loc) from None
        if not 0 <= g < system.group.order:
            raise ParseError(f"group element {g} out of range", f"{loc}.{key}")
        a = parse_algebra_element(val, system.shape, f"{loc}.{key}")
        bad = sorted(a.support() - system.action.range(g))
        if bad:
            raise ParseError(f"coefficient at {g} is not in D_{g}; offending blocks {bad}", f"{loc}.{key}")
        coeffs[g] = a
    try:
        return CrossedElement.from_dict(system, coeffs)
    except ValueError as exc:
        raise ParseError(str(exc), loc) from exc


def encode_crossed_element(x: CrossedElement) -> dict:
    return {str(g): encode_algebra_element(a) for g, a in enumerate(x.coefficients)
            if np.abs(a.vector()).max(initial=0) > 0}


def parse_h_values(obj, action: PartialAction, loc: str = "$.h") -> np.ndarray:
    """|G| x k array from a list of per-block scalar lists."""
    G, k = action.group.order, action.shape.num_blocks
    if not isinstance(obj, list) or len(obj) != G:
        raise ParseError(f"expected {G} rows of per-block scalars", loc)
    out = np.zeros((G, k), dtype=complex)
    for g, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != k:
            raise ParseError(f"expected {k} scalars", f"{loc}[{g}]")
        for i, x in enumerate(row):
            out[g, i] = _complex(x, f"{loc}[{g}][{i}]")
    return out


def parse_eta(obj, order: int, loc: str = "$.eta") -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != order:
        raise ParseError(f"expected {order} values", loc)
    return np.array([_complex(x, f"{loc}[{i}]") for i, x in enumerate(obj)])


# chains

def parse_chain(obj, loc: str = "$") -> Chain:
    """``{"stages": [{"shape", "trace", "action"?}], "embeddings": [{"multiplicities", "unitaries"?}]}``.

    A stage action uses the same record format as a system and needs a
    top-level ``group``.
    """
    stages_obj = _require(obj, "stages", loc)
    embs_obj = obj.get("embeddings", [])
    group = parse_group(obj["group"], f"{loc}.group") if "group" in obj else None
    if not isinstance(stages_obj, list) or not stages_obj:
        raise ParseError("expected a nonempty list of stages", f"{loc}.stages")
    stages = []
    for n, st in enumerate(stages_obj):
        sl = f"{loc}.stages[{n}]"
        if "action" in st:
            if group is None:
                raise ParseError("stage actions need a top-level group", sl)
            desc = parse_system({"group": obj["group"], **st}, sl)
            try:
                stages.append(ChainStage(desc.shape, desc.trace, desc.action))
            except StructuralError as exc:
                raise ParseError(str(exc), f"{sl}.action") from exc
        else:
            desc_shape = _require(st, "shape", sl)
            shape = BlockShape(tuple(_int(x, f"{sl}.shape[{i}]", 1) for i, x in enumerate(desc_shape)))
            w = st.get("trace")
            try:
                tau = TracialState.uniform(shape) if w is None else TracialState(shape, tuple(float(x) for x in w))
                stages.append(ChainStage(shape, tau))
            except StructuralError as exc:
                raise ParseError(str(exc), f"{sl}.trace") from exc
    if not isinstance(embs_obj, list) or len(embs_obj) != len(stages) - 1:
        raise ParseError(f"expected {len(stages) - 1} embeddings", f"{loc}.embeddings")
    embs = []
    for n, e in enumerate(embs_obj):
        el = f"{loc}.embeddings[{n}]"
        m = _require(e, "multiplicities", el)
        src, tgt = stages[n].shape, stages[n + 1].shape
        units = e.get("unitaries")
        if units is not None:
            if not isinstance(units, list) or len(units) != tgt.num_blocks:
                raise ParseError("expected one unitary per target block", f"{el}.unitaries")
            units = tuple(parse_matrix(u, d, f"{el}.unitaries[{i}]") for i, (u, d) in enumerate(zip(units, tgt.dims)))
        try:
            embs.append(Embedding(src, tgt, np.array(m, dtype=int), units))
        except (StructuralError, ValueError, TypeError) as exc:
            raise ParseError(str(exc), el) from exc
    try:
        return Chain(tuple(stages), tuple(embs))
    except StructuralError as exc:
        raise ParseError(str(exc), loc) from exc


def encode_chain(chain: Chain, group_spec: dict | None = None) -> dict:
    stages = []
    for st in chain.stages:
        rec = {"shape": list(st.shape.dims), "trace": list(st.trace.weights)}
        if st.action is not None:
            rec["action"] = encode_system(SystemDescription({}, st.action.group, st.action, st.trace))["action"]
        stages.append(rec)
    out = {"stages": stages,
           "embeddings": [{"multiplicities": e.multiplicities.tolist(),
                           "unitaries": [encode_matrix(u) for u in e.unitaries]} for e in chain.embeddings]}
    if any(st.action is not None for st in chain.stages):
        group = next(st.action.group for st in chain.stages if st.action is not None)
        out = {"group": group_spec or encode_group(group), **out}
    return out
