"""Command-line driver: parse a system, run certifications, emit a report.

Exit status is 0 when every check passes, 1 when a check fails and 2 when
the input cannot be parsed.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import DEFAULT_TOL, random_unitary
from .crossed_product import (CrossedProduct, build_regular_representation, check_covariance,
                              reduced_norm)
from .errors import CertificationError
from .gns import LinearMap, MatrixAlgebra, check_completely_positive, check_tau_decreasing, check_ucp, trace_map
from .groups import _axiom_violations, is_scalar_positive_definite
from .haagerup import (CONVENTIONS, CenterValuedPDFunction, certify_haagerup_data, compress_to_algebra,
                       contraction_transfer, convention_divergence, equivariance_defect, eta_from_ucp,
                       induce_ucp_on_crossed, is_pd_wrt_action, pd_matrix)
from .inductive_limit import (certify_lift, equivariant_chain_crossed_products, extend_operator, isometry_defect,
                              random_chain, random_equivariant_chain, validate_embedding)
from .partial_action import check_invariant_trace, validate_partial_action
from .random_systems import Budget, random_crossed_product, random_ucp_map
from .serialization import (ParseError, SystemDescription, encode_chain, encode_system, loads, parse_chain,
                            parse_crossed_element, parse_eta, parse_h_values, parse_matrix, parse_system, preset)

TOL_ENV = "PARTIALCROSS_TOL"


# report plumbing

def clean(x):
    """JSON-ready copy: floats to 12 significant digits, tiny values flushed to 0."""
    if isinstance(x, dict):
        return {str(k): clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return clean(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        z = complex(x)
        if abs(z.imag) < 1e-12:
            return clean(z.real)
        return [clean(z.real), clean(z.imag)]
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if abs(v) < 1e-12:
            return 0.0
        return float(f"{v:.12g}")
    return x


def check(name: str, passed: bool, certificate=None, tolerance=None, deviation=None) -> dict:
    return {"name": name, "pass": bool(passed), "certificate": certificate, "tolerance": tolerance,
            "deviation": deviation}


def digest(obj) -> str:
    return hashlib.sha256(json.dumps(clean(obj), sort_keys=True).encode()).hexdigest()


def render_text(report: dict) -> str:
    lines = [f"command: {report['command']}", f"inputs: {report['inputs_digest'][:16]}",
             f"seed: {report['seed']}", f"tolerance: {report['tolerance']}"]
    for c in report["checks"]:
        flag = "PASS" if c["pass"] else "FAIL"
        lines.append(f"{flag} {c['name']}  deviation={c['deviation']}  certificate={c['certificate']}"
                     f"  tolerance={c['tolerance']}")
    for k, v in report["data"].items():
        lines.append(f"{k}: {json.dumps(v)}")
    if "timings" in report:
        lines.append(f"timings: {json.dumps(report['timings'])}")
    return "\n".join(lines) + "\n"


# inputs

def _read_json_arg(value: str, what: str):
    """Inline JSON, or ``@path`` / an existing path to a JSON file."""
    path = value[1:] if value.startswith("@") else value
    if value.startswith("@") or (not value.lstrip().startswith(("{", "[")) and Path(path).is_file()):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ParseError(f"cannot read {what} file: {exc}", path) from exc
        try:
            return loads(text)
        except ParseError as exc:
            raise ParseError(exc.message, f"{path}: {exc.location}") from exc
    return loads(value)


def generate_random_system(seed: int, budget: Budget = Budget()) -> SystemDescription:
    """Seeded random validated system, as a description with an explicit Cayley table."""
    system, meta = random_crossed_product(seed, budget)
    g = system.group
    return SystemDescription({"table": g.array.tolist()}, g, system.action, system.trace, f"random-{seed}", meta)


def load_system_arg(args) -> SystemDescription:
    if args.preset:
        return preset(args.preset)
    if args.random is not None:
        return generate_random_system(args.random, Budget(max_order=args.max_order, max_total=args.max_total))
    if args.system:
        return parse_system(_read_json_arg(args.system, "system"))
    raise ParseError("one of --system, --preset or --random is required")


def _h_arg(args, desc: SystemDescription) -> CenterValuedPDFunction:
    act = desc.action
    if args.h is not None:
        vals = parse_h_values(_read_json_arg(args.h, "h"), act, "$.h")
    elif args.eta is not None:
        eta = parse_eta(_read_json_arg(args.eta, "eta"), act.group.order, "$.eta")
        return CenterValuedPDFunction.from_eta(act, eta)
    else:
        raise ParseError("one of --h or --eta is required")
    try:
        return CenterValuedPDFunction(act, vals)
    except ValueError as exc:
        raise ParseError(str(exc), "$.h") from exc


def _phi_arg(value: str, desc: SystemDescription) -> LinearMap:
    model = MatrixAlgebra(desc.shape)
    if value == "identity":
        return LinearMap.identity(model)
    if value == "trace":
        return trace_map(desc.trace)
    obj = _read_json_arg(value, "phi")
    return LinearMap(model, parse_matrix(obj, model.dim, "$.phi"))


# commands

def cmd_validate(args, desc: SystemDescription, tol: float):
    checks, data = [], {}
    viol = _axiom_violations(desc.group.array)
    checks.append(check("group-axioms", not viol, len(viol), tol, 0.0 if not viol else 1.0))
    rep = validate_partial_action(desc.action, tol)
    checks.append(check("partial-action", rep.ok, len(rep.violations), tol, rep.max_deviation))
    w = min(desc.trace.weights)
    checks.append(check("trace-faithful", desc.trace.faithful, w, tol, None))
    inv = check_invariant_trace(desc.action, desc.trace, tol)
    checks.append(check("trace-invariant", inv.ok, len(inv.violations), tol, inv.max_deviation))
    act = desc.action
    data["group"] = {"name": desc.group.name, "order": desc.group.order}
    data["shape"] = list(act.shape.dims)
    data["trace_weights"] = list(desc.trace.weights)
    data["ranges"] = {str(g): sorted(act.range(g)) for g in act.group.elements()}
    data["violations"] = [v.as_dict() for v in rep.violations + inv.violations]
    if desc.extra:
        data["generator"] = desc.extra
    return checks, data


def _crossed(desc: SystemDescription, checks: list, tol: float) -> CrossedProduct | None:
    try:
        return desc.crossed_product()
    except CertificationError as exc:
        checks.append(check("trace-invariant", False, exc.certificate, tol, None))
        return None


def cmd_build(args, desc, tol):
    checks, data = [], {}
    X = _crossed(desc, checks, tol)
    if X is None:
        return checks, data
    C = X.structure_constants
    left = np.einsum("abd,dce->abce", C, C, optimize=True)
    right = np.einsum("bcd,ade->abce", C, C, optimize=True)
    assoc = float(np.abs(left - right).max()) if C.size else 0.0
    checks.append(check("associativity", assoc <= tol, None, tol, assoc))
    J = X.adjoint_matrix
    inv = float(np.abs(J @ J.conj() - np.eye(X.dim)).max())
    # (xy)* = y* x* on basis pairs: J conj(C[a,b,:]) = sum C[c,d,:] J[c,b] J[d,a]
    lhs = np.einsum("ec,abc->abe", J, C.conj(), optimize=True)
    rhs = np.einsum("cb,da,cde->abe", J, J, C, optimize=True)
    anti = float(np.abs(lhs - rhs).max()) if C.size else 0.0
    checks.append(check("involution", max(inv, anti) <= tol, None, tol, max(inv, anti)))
    u = X.unit_vector()
    unit = float(max(np.abs(np.einsum("a,abc->bc", u, C) - np.eye(X.dim)).max(),
                     np.abs(np.einsum("b,abc->ac", u, C) - np.eye(X.dim)).max()))
    checks.append(check("unit", unit <= tol, None, tol, unit))
    # product coefficients stay in the ideals D_gh
    leak = 0.0
    G = X.group
    for g in G.elements():
        for h in G.elements():
            k = G.mul(g, h)
            block = C[X.coefficient_slice(g), X.coefficient_slice(h)]
            mask = np.ones(X.dim, bool)
            mask[X.coefficient_slice(k)] = False
            if block.size and mask.any():
                leak = max(leak, float(np.abs(block[:, :, mask]).max()))
    checks.append(check("ideal-coefficients", leak <= tol, None, tol, leak))
    t = X.trace_functional
    ct = C @ t
    tracial = float(np.abs(ct - ct.T).max()) if ct.size else 0.0
    checks.append(check("trace-tracial", tracial <= tol, None, tol, tracial))
    unital = abs(t @ u - 1)
    checks.append(check("trace-unital", unital <= tol, None, tol, unital))
    gram = X.gram_matrix(t)
    lo = float(np.linalg.eigvalsh((gram + gram.conj().T) / 2)[0])
    checks.append(check("trace-faithful", lo > 1e-12, lo, 1e-12, None))
    rep = build_regular_representation(X)
    data["dim"] = X.dim
    data["dims_per_element"] = {str(g): int(len(X.coefficient_columns(g))) for g in G.elements()}
    data["regular_representation"] = {"fiber_dim": rep.fiber_dim, "total_dim": rep.total_dim}
    data["structure_constants_nonzero"] = int(np.count_nonzero(np.abs(C) > 1e-12))
    data["structure_constants_digest"] = digest(np.round(C, 10))
    return checks, data


def cmd_covariance(args, desc, tol):
    checks, data = [], {}
    X = _crossed(desc, checks, tol)
    if X is None:
        return checks, data
    rep = check_covariance(build_regular_representation(X), tol)
    checks.append(check("covariance", rep.ok, len(rep.violations), tol, rep.max_deviation))
    data["violations"] = [v.as_dict() for v in rep.violations]
    return checks, data


def cmd_norm(args, desc, tol):
    checks, data = [], {}
    X = _crossed(desc, checks, tol)
    if X is None:
        return checks, data
    x = parse_crossed_element(_read_json_arg(args.element, "element"), X, "$")
    rng = np.random.default_rng(args.seed)
    base = build_regular_representation(X)
    n = reduced_norm(base, x)
    n2 = reduced_norm(build_regular_representation(X, 2), x)
    v = random_unitary(X.shape.total, rng)
    n3 = reduced_norm(build_regular_representation(X, 1, v), x)
    rel = max(abs(n2 - n), abs(n3 - n)) / max(n, 1e-300) if n > 0 else max(n2, n3)
    checks.append(check("representation-independence", rel <= tol, None, tol, rel))
    data["norm"] = n
    data["norms"] = {"pi": n, "pi+pi": n2, "conjugated": n3}
    return checks, data


def cmd_check_pd(args, desc, tol):
    checks, data = [], {}
    h = _h_arg(args, desc)
    act = desc.action
    conventions = CONVENTIONS if args.convention == "both" else (args.convention,)
    for conv in conventions:
        cert = is_pd_wrt_action(act, h, tol, conv)
        checks.append(check(f"positive-definite-{conv}", cert.positive_definite, cert.min_eigenvalue, tol, None))
        mat = pd_matrix(act, h, act.group.elements(), conv)
        data[f"matrix_{conv}"] = [b.real.tolist() if np.allclose(b.imag, 0) else b.tolist() for b in mat.blocks]
    data["h"] = h.values
    data["divergent_entries"] = [list(p) for p in convention_divergence(act, h)]
    if args.eta is not None:
        eta = parse_eta(_read_json_arg(args.eta, "eta"), act.group.order)
        cert = is_scalar_positive_definite(act.group, eta, tol)
        data["eta_positive_definite"] = {"pass": cert.positive_definite, "min_eigenvalue": cert.min_eigenvalue}
    return checks, data


def cmd_induce_ucp(args, desc, tol):
    checks, data = [], {}
    X = _crossed(desc, checks, tol)
    if X is None:
        return checks, data
    phi = _phi_arg(args.phi, desc)
    h = _h_arg(args, desc)
    ucp = check_ucp(phi, tol)
    checks.append(check("phi-ucp", ucp.passed, ucp.certificate, tol, None))
    eq = equivariance_defect(X.action, phi)
    checks.append(check("phi-equivariant", eq <= tol, None, tol, eq))
    pd = is_pd_wrt_action(X.action, h, tol)
    checks.append(check("h-positive-definite", pd.positive_definite, pd.min_eigenvalue, tol, None))
    he = float(np.abs(h.values[X.group.identity] - 1).max())
    checks.append(check("h-unit-at-identity", he <= tol, None, tol, he))
    try:
        Phi = induce_ucp_on_crossed(X, phi, h, tol)
    except CertificationError:
        return checks, data
    cp = check_completely_positive(Phi, tol)
    checks.append(check("Phi-completely-positive", cp.passed, cp.certificate, tol, None))
    unital = float(np.abs(Phi.matrix @ X.unit_vector() - X.unit_vector()).max())
    checks.append(check("Phi-unital", unital <= tol, None, tol, unital))
    if check_tau_decreasing(desc.trace, phi, tol):
        td = check_tau_decreasing(X.trace_functional, Phi, tol)
        checks.append(check("Phi-tau-decreasing", td.passed, td.certificate, tol, None))
    comp = compress_to_algebra(X, Phi)
    cucp = check_ucp(comp, tol)
    checks.append(check("compression-ucp", cucp.passed, cucp.certificate, tol, None))
    gap = contraction_transfer(X, Phi, comp)
    checks.append(check("contraction-transfer", gap <= tol, None, tol, max(gap, 0.0)))
    eta = eta_from_ucp(X, Phi)
    ecert = is_scalar_positive_definite(X.group, eta, tol)
    checks.append(check("eta-positive-definite", ecert.positive_definite, ecert.min_eigenvalue, tol, None))
    data["eta"] = eta
    data["compression_deviation_from_phi"] = float(np.abs(comp.matrix - phi.matrix).max())
    data["Phi_diagonal"] = np.diag(Phi.matrix)
    return checks, data


def _certify_sequence(args, desc):
    act = desc.action
    G = act.group
    if args.sequence:
        obj = _read_json_arg(args.sequence, "sequence")
        stages_obj = obj.get("stages") if isinstance(obj, dict) else None
        if not isinstance(stages_obj, list) or not stages_obj:
            raise ParseError("expected a nonempty list of stages", "$.stages")
        stages, eps = [], obj.get("epsilons", [1.0] * len(stages_obj))
        if not isinstance(eps, list) or len(eps) != len(stages_obj):
            raise ParseError("expected one epsilon per stage", "$.epsilons")
        for n, st in enumerate(stages_obj):
            loc = f"$.stages[{n}]"
            phi = st.get("phi", "identity")
            if isinstance(phi, str):
                phi = _phi_arg(phi, desc)
            else:
                phi = LinearMap(MatrixAlgebra(desc.shape), parse_matrix(phi, desc.shape.dim, f"{loc}.phi"))
            if "h" in st:
                h = CenterValuedPDFunction(act, parse_h_values(st["h"], act, f"{loc}.h"))
            else:
                h = CenterValuedPDFunction.from_eta(act, parse_eta(st.get("eta"), G.order, f"{loc}.eta"))
            stages.append((phi, h))
        return stages[:args.stages] if args.stages else stages, [float(e) for e in eps][:args.stages or None]
    k = args.stages or 3
    ident = LinearMap.identity(MatrixAlgebra(desc.shape))
    stages = []
    for n in range(1, k + 1):
        eta = np.full(G.order, 1 - 1 / n)
        eta[G.identity] = 1.0
        stages.append((ident, CenterValuedPDFunction.from_eta(act, eta)))
    eps = args.eps if args.eps else [1.0] * k
    if len(eps) == 1:
        eps = eps * k
    if len(eps) != k:
        raise ParseError(f"expected 1 or {k} values for --eps", "--eps")
    return stages, eps


def cmd_certify(args, desc, tol):
    checks, data = [], {}
    X = _crossed(desc, checks, tol)
    if X is None:
        return checks, data
    stages, eps = _certify_sequence(args, desc)
    reports = certify_haagerup_data(X, stages, eps, tol=tol)
    rows = []
    for r in reports:
        checks.append(check(f"stage-{r.index}", r.passed, r.h_positive_definite.min_eigenvalue, r.epsilon,
                            r.deviation))
        rows.append({"stage": r.index, "epsilon": r.epsilon, "phi_ucp": r.phi_ucp.passed,
                     "phi_tau_decreasing": r.phi_tau_decreasing.passed,
                     "h_positive_definite": r.h_positive_definite.positive_definite,
                     "phi_deviation": r.phi_deviation, "h_deviation": r.h_deviation,
                     "h_deviation_from_ideal_units": r.h_deviation_from_units,
                     "Phi_deviation": r.Phi_deviation, "estimate": r.prop_estimate,
                     "estimate_holds": r.prop_estimate_holds,
                     "rank_curve": [list(c) for c in r.rank_curve], "failures": r.failures()})
    data["stages"] = rows
    return checks, data


def cmd_chain(args, tol):
    checks, data = [], {}
    if args.chain:
        chain = parse_chain(_read_json_arg(args.chain, "chain"))
    elif args.equivariant:
        chain = random_equivariant_chain(args.seed, stages=args.stages or 4)
    else:
        chain = random_chain(args.seed, stages=args.stages or 4)
    if args.stages:
        chain = chain.truncate(args.stages)
    rng = np.random.default_rng(args.seed)
    rows = []
    for n, emb in enumerate(chain.embeddings):
        s, t = chain.stages[n], chain.stages[n + 1]
        rep = validate_embedding(emb, s.trace, t.trace, tol)
        checks.append(check(f"embedding-{n}", rep.ok, len(rep.violations), tol, rep.max_deviation))
        iso = isometry_defect(chain.isometry(n, n + 1))
        checks.append(check(f"isometry-{n}", iso <= 1e-10, None, 1e-10, iso))
        rows.append({"stage": n, "embedding_deviation": rep.max_deviation, "isometry_defect": iso})
    k = len(chain) - 1
    if k > 0:
        U = chain.isometry(0, k)
        prod = np.eye(chain.stages[0].shape.dim)
        for n in range(k):
            prod = chain.isometry(n, n + 1) @ prod
        fun = float(np.abs(U - prod).max())
        checks.append(check("functoriality", fun <= 1e-10, None, 1e-10, fun))
        T = rng.standard_normal((U.shape[1], U.shape[1]))
        Tp = extend_operator(T, U)
        nd = abs(np.linalg.norm(T, 2) - np.linalg.norm(Tp, 2))
        same_rank = np.linalg.matrix_rank(T) == np.linalg.matrix_rank(Tp)
        checks.append(check("extend-operator", bool(nd <= 1e-10 and same_rank), None, 1e-10, nd))
        phi = random_ucp_map(chain.stages[0].trace, rng)
        lift = certify_lift(phi, chain.composite(0, k), chain.stages[0].trace, chain.stages[k].trace, tol)
        checks.append(check("lift-ucp", lift.ucp.passed, lift.ucp.certificate, tol, None))
        checks.append(check("lift-tau-decreasing", lift.tau_decreasing.passed, lift.tau_decreasing.certificate,
                            tol, None))
        checks.append(check("lift-compatibility", lift.compatibility <= 1e-10, None, 1e-10, lift.compatibility))
        checks.append(check("lift-deviation", lift.deviation_gap <= 1e-10, None, 1e-10, lift.deviation_gap))
    if all(st.action is not None for st in chain.stages) and k > 0:
        for cert in equivariant_chain_crossed_products(chain, rng, tol=tol):
            for name, ok in cert.checks.items():
                dev = {"equivariance": cert.equivariance.max_deviation, "unital-homomorphism": cert.homomorphism,
                       "isometric": cert.isometric, "expectation": cert.expectation, "trace": cert.trace}[name]
                tl = cert.norm_tolerance if name == "isometric" else tol
                checks.append(check(f"crossed-{name}-{cert.index}", ok, None, tl, dev))
                rows[cert.index][f"crossed_{name}"] = dev
    data["shapes"] = [list(st.shape.dims) for st in chain.stages]
    data["stages"] = rows
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            keys = sorted({key for r in rows for key in r}, key=lambda s: (s != "stage", s))
            w = csv.DictWriter(fh, fieldnames=keys)
            w.writeheader()
            for r in rows:
                w.writerow(clean(r))
    if args.dump:
        data["chain"] = encode_chain(chain)
    return checks, data, encode_chain(chain)


SYSTEM_COMMANDS = {"validate": cmd_validate, "build": cmd_build, "check-covariance": cmd_covariance,
                   "norm": cmd_norm, "check-pd": cmd_check_pd, "induce-ucp": cmd_induce_ucp,
                   "certify": cmd_certify}


def _default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    try:
        return float(raw)
    except ValueError:
        raise ParseError(f"{TOL_ENV} is not a number: {raw!r}", TOL_ENV) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="partialcross", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help=f"tolerance (default ${TOL_ENV} or {DEFAULT_TOL})")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--no-timings", action="store_true", help="omit wall-clock timings (byte-stable output)")
    sysargs = argparse.ArgumentParser(add_help=False)
    src = sysargs.add_mutually_exclusive_group()
    src.add_argument("--system", help="system JSON (inline, path, or @path)")
    src.add_argument("--preset", choices=("W1", "trivial", "restriction-example"))
    src.add_argument("--random", type=int, metavar="SEED", help="generate a random system from SEED")
    sysargs.add_argument("--max-order", type=int, default=8)
    sysargs.add_argument("--max-total", type=int, default=6)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common, sysargs], help="validate group, action and trace")
    sub.add_parser("build", parents=[common, sysargs], help="build the crossed product and check its laws")
    sub.add_parser("check-covariance", parents=[common, sysargs], help="covariance of the regular representation")
    p = sub.add_parser("norm", parents=[common, sysargs], help="reduced norm of an element")
    p.add_argument("element", help='element JSON, e.g. {"0": {"central": [0, 1]}}')
    for name, helptext in (("check-pd", "positive definiteness relative to the action"),
                           ("induce-ucp", "induced map on the crossed product")):
        p = sub.add_parser(name, parents=[common, sysargs], help=helptext)
        p.add_argument("--h", help="per-element rows of per-block scalars")
        p.add_argument("--eta", help="scalar function on G; h(g) = eta(g) 1_g")
        if name == "check-pd":
            p.add_argument("--convention", choices=("cutdown", "paper", "both"), default="cutdown")
        else:
            p.add_argument("--phi", default="identity", help="identity, trace, or a matrix JSON")
    p = sub.add_parser("certify", parents=[common, sysargs], help="staged approximation data")
    p.add_argument("--stages", type=int, default=None)
    p.add_argument("--eps", type=float, nargs="+", default=None)
    p.add_argument("--sequence", help="JSON with stages [{phi, h | eta}] and epsilons")
    p = sub.add_parser("chain", parents=[common], help="trace-compatible chain certification")
    p.add_argument("--chain", help="chain JSON; random when omitted")
    p.add_argument("--equivariant", action="store_true", help="random chain of partial dynamical systems")
    p.add_argument("--stages", type=int, default=None)
    p.add_argument("--csv", help="write per-stage deviations as CSV")
    p.add_argument("--dump", action="store_true", help="include the chain JSON in the report")
    return parser


def run(args: argparse.Namespace) -> tuple[dict, int]:
    """Execute a parsed command; returns the report and the exit code."""
    t0 = time.perf_counter()
    tol = args.tol if args.tol is not None else _default_tol()
    if args.command == "chain":
        checks, data, chain_json = cmd_chain(args, tol)
        inputs = {"chain": chain_json}
    else:
        desc = load_system_arg(args)
        checks, data = SYSTEM_COMMANDS[args.command](args, desc, tol)
        inputs = {"system": encode_system(desc)}
    inputs["args"] = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "format", "csv", "no_timings")}
    report = {"command": args.command, "inputs_digest": digest(inputs), "seed": args.seed, "tolerance": tol,
              "checks": checks, "data": data}
    if not args.no_timings:
        report["timings"] = {"total_s": time.perf_counter() - t0}
    report = clean(report)
    code = 0 if all(c["pass"] for c in report["checks"]) else 1
    return report, code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, code = run(args)
    except ParseError as exc:
        print(f"parse error at {exc.location}: {exc.message}", file=sys.stderr)
        return 2
    text = render_text(report) if args.format == "text" else json.dumps(report, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
