"""Command-line entry point: ``maxmono <command> [options]``.

Every command reads one JSON document (``--input`` path, or stdin) and writes
one JSON document (or a plain table with ``--table``). Exit codes: 0 when the
check passes or the computation succeeds, 1 when a check returns a false
verdict (the certificate is still printed), 2 for usage and validation errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any, Callable

import numpy as np

from . import __version__
from .convex import (
    Grid,
    NotCyclicallyMonotone,
    SearchFailed,
    br_search,
    descent_witness,
    directional_derivative,
    eps_subdifferential_test,
    fenchel_conjugate,
    function_from_json,
    maximality_probe,
    reconstruct_potential,
    subgradient_test,
)
from .core import (
    DEFAULT_TOL,
    EXACT,
    Covector,
    Norm,
    OperatorGraph,
    Point,
    Tolerance,
    decode_graph,
    decode_pair,
    decode_scalar,
    decode_vector,
    encode_graph,
    encode_value,
)
from .debrunner_flor import browder_witness, extend_constant, extend_general, kakutani_witness
from .duality import duality_map, positive_check, project, projection_vi_check, resolvent
from .gallery import NAMES, report
from .lp import Infeasible
from .monotonicity import (
    StepFunction1D,
    check_cyclic,
    check_monotone,
    check_n_cyclic,
    coercivity_profile,
    invert,
    maximalize_1d,
    monotonically_related,
    separation_witness,
    sum_graphs,
)
from .regions import Box, ConvexRegion, region_from_json


class UsageError(ValueError):
    """Invalid input; maps to exit code 2."""


class Context:
    """Decoding helpers bound to the run configuration."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.exact = args.backend == "exact"
        if self.exact:
            self.tol = EXACT
        else:
            self.tol = Tolerance(args.tol_abs if args.tol_abs is not None else DEFAULT_TOL.abs,
                                 args.tol_rel if args.tol_rel is not None else DEFAULT_TOL.rel)
        # grid searches produce floats, so they keep a float tolerance
        self.search_tol = DEFAULT_TOL if self.exact else self.tol
        self.rng = np.random.default_rng(args.seed)

    def scalar(self, v):
        return decode_scalar(v, self.exact)

    def point(self, v) -> Point:
        return decode_vector(_list(v), Point, self.exact)

    def covector(self, v) -> Covector:
        return decode_vector(_list(v), Covector, self.exact)

    def graph(self, doc: dict, key: str = "graph") -> OperatorGraph:
        return decode_graph(_find(doc, key, "pairs"), self.exact)

    def region(self, doc: dict, key: str = "region") -> ConvexRegion:
        return region_from_json(_require(doc, key), self.exact)

    def function(self, doc: dict, key: str = "function"):
        return function_from_json(_require(doc, key), self.exact)

    def grid(self, doc: dict, key: str = "grid") -> Grid | None:
        return Grid.from_json(doc[key]) if key in doc else None


def _list(v):
    return v if isinstance(v, list) else [v]


def _require(doc: dict, key: str):
    if not isinstance(doc, dict) or key not in doc:
        raise UsageError(f"input JSON needs the key {key!r}")
    return doc[key]


def _find(doc: dict, key: str, marker: str):
    """``doc[key]``, or a previous command's ``result``, or the document itself."""
    if isinstance(doc, dict):
        if key in doc:
            return doc[key]
        if isinstance(doc.get("result"), dict) and marker in doc["result"]:
            return doc["result"]
        if marker in doc:
            return doc
    raise UsageError(f"input JSON needs a {key!r} object")


def parse_norm(text: str | None) -> Norm:
    """``euclidean``, ``sup``, ``lp:<p>`` or ``weighted:<w1>,<w2>,...``."""
    if text is None or text == "euclidean":
        return Norm.euclidean()
    if text == "sup":
        return Norm.sup()
    if text.startswith("lp:"):
        return Norm.lp(float(text[3:]))
    if text.startswith("weighted:"):
        return Norm.weighted_l2([v for v in text[9:].split(",")])
    raise UsageError(f"unknown norm {text!r}")


def _numbers(text: str, ctx: Context) -> list:
    try:
        return [ctx.scalar(v.strip()) for v in text.split(",") if v.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad number list {text!r}: {exc}") from exc


# --- commands -------------------------------------------------------------------------------
# each returns (verdict, result)

def cmd_check_monotone(doc, ctx):
    cert = check_monotone(ctx.graph(doc), ctx.tol)
    return cert.verdict, cert


def cmd_check_cyclic(doc, ctx):
    g = ctx.graph(doc)
    n = ctx.args.n
    rep = check_cyclic(g, ctx.tol) if n == "full" else check_n_cyclic(g, int(n), ctx.tol)
    return rep.verdict, rep


def cmd_related(doc, ctx):
    p = decode_pair(_require(doc, "pair"), ctx.exact)
    cert = monotonically_related(p, ctx.graph(doc), ctx.tol)
    return cert.verdict, cert


def cmd_invert(doc, ctx):
    return True, encode_graph(invert(ctx.graph(doc)))


def cmd_sum(doc, ctx):
    s = decode_graph(_require(doc, "s"), ctx.exact)
    t = decode_graph(_require(doc, "t"), ctx.exact)
    return True, encode_graph(sum_graphs(s, t, ctx.tol))


def cmd_coercivity(doc, ctx):
    norm = Norm.from_json(doc.get("norm", {})) if isinstance(doc, dict) else Norm.euclidean()
    prof = coercivity_profile(ctx.graph(doc), norm, _numbers(ctx.args.radii, ctx))
    return prof.coercive_on_sample, prof


def cmd_witness(doc, ctx):
    lam = ctx.scalar(ctx.args.lam)
    b, bstar, r = separation_witness(ctx.point(_require(doc, "z")), ctx.covector(_require(doc, "zstar")),
                                     ctx.point(_require(doc, "y")), ctx.covector(_require(doc, "ystar")), lam)
    return True, {"b": b, "bstar": bstar, "r": r}


def cmd_conjugate(doc, ctx):
    f = ctx.function(doc)
    dual = Grid.from_json(_require(doc, "dual_grid"))
    g = fenchel_conjugate(f, dual, ctx.grid(doc, "primal_grid"))
    return True, g


def cmd_subgrad(doc, ctx):
    cert = subgradient_test(ctx.function(doc), ctx.point(_require(doc, "x")), ctx.covector(_require(doc, "xstar")),
                            ctx.tol)
    return cert.verdict, cert


def cmd_eps_subgrad(doc, ctx):
    cert = eps_subdifferential_test(ctx.function(doc), ctx.point(_require(doc, "x")),
                                    ctx.covector(_require(doc, "xstar")), ctx.scalar(_require(doc, "eps")), ctx.tol)
    return cert.verdict, cert


def cmd_d_plus(doc, ctx):
    v = directional_derivative(ctx.function(doc), ctx.point(_require(doc, "x")), ctx.point(_require(doc, "y")),
                               numeric=bool(doc.get("numeric", False)))
    return True, {"d_plus": v}


def cmd_br_search(doc, ctx):
    x, xs = br_search(ctx.function(doc), ctx.point(_require(doc, "x0")), ctx.args.alpha, ctx.args.beta,
                      ctx.grid(doc), tol=ctx.search_tol)
    return True, {"x": x, "xstar": xs}


def cmd_descent(doc, ctx):
    z, zs = descent_witness(ctx.function(doc), ctx.point(_require(doc, "x")), ctx.grid(doc), ctx.search_tol)
    return True, {"z": z, "zstar": zs}


def cmd_reconstruct(doc, ctx):
    try:
        rec = reconstruct_potential(ctx.graph(doc), ctx.args.base, ctx.tol)
    except NotCyclicallyMonotone as exc:
        return False, exc.report if hasattr(exc, "report") else {"error": str(exc)}
    return True, rec


def cmd_minty(doc, ctx):
    samples = [ctx.scalar(v) if not isinstance(v, list) else [ctx.scalar(u) for u in v]
               for v in _require(doc, "samples")]
    cert = maximality_probe(ctx.function(doc), samples, ctx.grid(doc), ctx.search_tol)
    return cert.verdict, cert


def cmd_dualmap(doc, ctx):
    norm = parse_norm(ctx.args.norm) if ctx.args.norm else Norm.from_json(doc.get("norm", {}))
    return True, {"J": duality_map(norm, ctx.point(_require(doc, "x")))}


def cmd_project(doc, ctx):
    return True, {"projection": project(ctx.region(doc), ctx.point(_require(doc, "x")))}


def cmd_vi_check(doc, ctx):
    C = ctx.region(doc)
    if "probes" in doc:
        probes = [ctx.point(p) for p in doc["probes"]]
    else:
        probes = [Point(v) for v in C.sample(ctx.rng, 32)]
    others = [ctx.point(p) for p in doc.get("others", [])]
    cert = projection_vi_check(C, ctx.point(_require(doc, "x")), probes, others, ctx.tol)
    return cert.verdict, cert


def _step_from_json(doc: dict, ctx) -> StepFunction1D:
    pieces = [[ctx.scalar(v) for v in _list(p)] if isinstance(p, list) else ctx.scalar(p) for p in doc["pieces"]]
    pvs = doc.get("point_values")
    if pvs is not None:
        pvs = [None if v is None else [ctx.scalar(u) for u in _list(v)] for v in pvs]
    f = StepFunction1D([ctx.scalar(b) for b in doc.get("breakpoints", [])], pieces, pvs)
    return maximalize_1d(f) if doc.get("maximalize", True) else f


def cmd_resolvent(doc, ctx):
    lam = ctx.scalar(ctx.args.lam)
    if "operator" in doc:
        op = _step_from_json(doc["operator"], ctx)
    else:
        op = ctx.function(doc)
    return True, {"x": resolvent(op, lam, ctx.scalar(_require(doc, "ystar")), ctx.grid(doc))}


def cmd_positive(doc, ctx):
    A = [[ctx.scalar(v) for v in row] for row in _require(doc, "matrix")]
    samples = doc.get("samples")
    samples = None if samples is None else [[ctx.scalar(v) for v in s] for s in samples]
    cert = positive_check(A, samples, ctx.tol)
    return cert.verdict, cert


PHIS: dict[str, Callable[[Covector], Point]] = {
    "identity": lambda s: Point(s.coords),
    "negate": lambda s: Point((-s).coords),
    "zero": lambda s: Point([0.0] * s.dim),
}


def cmd_df_extend(doc, ctx):
    M = ctx.graph(doc)
    C = ctx.region(doc)
    if (ctx.args.constant is None) == (ctx.args.phi is None):
        raise UsageError("df-extend needs exactly one of --constant or --phi")
    if ctx.args.constant is not None:
        s = extend_constant(M, C, Point(_numbers(ctx.args.constant, ctx)), ctx.tol)
    else:
        if ctx.args.phi not in PHIS:
            raise UsageError(f"unknown phi {ctx.args.phi!r}; choose from {', '.join(sorted(PHIS))}")
        s = extend_general(M, C, PHIS[ctx.args.phi], ctx.search_tol)
    return True, {"xstar": s}


def cmd_browder(doc, ctx):
    norm = Norm.from_json(doc.get("norm", {}))
    p = browder_witness(ctx.graph(doc), ctx.args.r, norm, ctx.search_tol)
    return True, p


def _map_from_json(doc: dict, ctx) -> Callable[[Point], ConvexRegion]:
    kind = doc.get("kind")
    if kind == "identity":
        return lambda u: Box(u.coords, u.coords)
    if kind == "constant":
        c = ctx.point(doc["point"])
        return lambda u: Box(c.coords, c.coords)
    if kind == "affine_box":
        lo, hi = [float(v) for v in doc["lo"]], [float(v) for v in doc["hi"]]
        ls = [float(v) for v in doc.get("lo_slope", [0] * len(lo))]
        hs = [float(v) for v in doc.get("hi_slope", [0] * len(hi))]

        def R(u):
            a = [l + s * float(v) for l, s, v in zip(lo, ls, u.coords)]
            b = [h + s * float(v) for h, s, v in zip(hi, hs, u.coords)]
            if any(x > y for x, y in zip(a, b)):
                return None
            return Box(a, b)
        return R
    raise UsageError(f"unknown set-valued map kind {kind!r}")


def cmd_kakutani(doc, ctx):
    K = region_from_json(_require(doc, "K"), ctx.exact)
    R = _map_from_json(_require(doc, "map"), ctx)
    u = kakutani_witness(R, K, Tolerance(float(ctx.args.tol), 0.0))
    return True, {"u": u}


def cmd_gallery(doc, ctx):
    rep = report(ctx.args.name)
    return rep.passed, rep


COMMANDS: dict[str, tuple[Callable, str]] = {
    "check-monotone": (cmd_check_monotone, "pairwise monotonicity of a sampled graph"),
    "check-cyclic": (cmd_check_cyclic, "n-cyclic or full cyclic monotonicity"),
    "related": (cmd_related, "monotone relatedness of one pair to a graph"),
    "invert": (cmd_invert, "swap points and covectors"),
    "sum": (cmd_sum, "pointwise sum of two graphs"),
    "coercivity": (cmd_coercivity, "empirical coercivity profile"),
    "witness-4-7": (cmd_witness, "separation witness for a violating pair"),
    "conjugate": (cmd_conjugate, "Fenchel conjugate on a dual grid"),
    "subgrad-test": (cmd_subgrad, "subgradient membership"),
    "eps-subgrad": (cmd_eps_subgrad, "eps-subdifferential membership"),
    "d-plus": (cmd_d_plus, "right directional derivative"),
    "br-search": (cmd_br_search, "nearby point with a small subgradient"),
    "descent-witness": (cmd_descent, "subgradient pair pointing back to x"),
    "reconstruct": (cmd_reconstruct, "convex potential of a cyclically monotone graph"),
    "minty-probe": (cmd_minty, "solve y* in df(x) + x on a grid"),
    "dualmap": (cmd_dualmap, "duality map of a norm"),
    "project": (cmd_project, "metric projection onto a region"),
    "vi-check": (cmd_vi_check, "variational inequality of the projection"),
    "resolvent": (cmd_resolvent, "solve y* in T(x) + lambda x"),
    "positive-check": (cmd_positive, "positivity of a matrix"),
    "df-extend": (cmd_df_extend, "monotone extension by one covector"),
    "browder": (cmd_browder, "pair related to a graph inside rB with x* in -J(x)"),
    "kakutani": (cmd_kakutani, "approximate fixed point of a set-valued map"),
    "gallery": (cmd_gallery, "exact reproduction of a named example"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--backend", choices=("float", "exact"), default="float")
    common.add_argument("--tol-abs", type=float, default=None)
    common.add_argument("--tol-rel", type=float, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--input", default=None, help="JSON input path (default: stdin)")
    common.add_argument("--output", default=None, help="output path (default: stdout)")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
    fmt.add_argument("--table", dest="fmt", action="store_const", const="table")
    common.set_defaults(fmt="json")

    parser = argparse.ArgumentParser(prog="maxmono", description="Monotone operator and convex analysis checks.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=helptext)
        if name == "check-cyclic":
            p.add_argument("--n", default="full", help="cycle length bound, or 'full'")
        elif name == "coercivity":
            p.add_argument("--radii", required=True, help="comma-separated increasing radii")
        elif name == "witness-4-7":
            p.add_argument("--lambda", dest="lam", required=True)
        elif name == "br-search":
            p.add_argument("--alpha", type=float, required=True)
            p.add_argument("--beta", type=float, required=True)
        elif name == "reconstruct":
            p.add_argument("--base", type=int, default=0)
        elif name == "dualmap":
            p.add_argument("--norm", default=None, help="euclidean, sup, lp:<p> or weighted:<w,...>")
        elif name == "resolvent":
            p.add_argument("--lambda", dest="lam", default="1")
        elif name == "df-extend":
            p.add_argument("--constant", default=None, help="comma-separated x0")
            p.add_argument("--phi", default=None, help=f"builtin map: {', '.join(sorted(PHIS))}")
        elif name == "browder":
            p.add_argument("--r", type=float, required=True)
        elif name == "kakutani":
            p.add_argument("--tol", default="1e-6")
        elif name == "gallery":
            p.add_argument("name", choices=NAMES)
    return parser


def _read_input(args) -> Any:
    if args.command == "gallery":
        return {}
    text = open(args.input, encoding="utf-8").read() if args.input else sys.stdin.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON at line {exc.lineno} column {exc.colno} (char {exc.pos}): {exc.msg}")


def _table(doc: Any, indent: str = "") -> list[str]:
    lines = []
    if isinstance(doc, dict):
        for k in sorted(doc):
            v = doc[k]
            if isinstance(v, (dict, list)) and v and not all(not isinstance(u, (dict, list)) for u in _items(v)):
                lines.append(f"{indent}{k}:")
                lines += _table(v, indent + "  ")
            else:
                lines.append(f"{indent}{k}: {json.dumps(v, sort_keys=True)}")
    elif isinstance(doc, list):
        for i, v in enumerate(doc):
            if isinstance(v, (dict, list)):
                lines.append(f"{indent}[{i}]")
                lines += _table(v, indent + "  ")
            else:
                lines.append(f"{indent}[{i}] {json.dumps(v)}")
    else:
        lines.append(f"{indent}{json.dumps(doc)}")
    return lines


def _items(v):
    return v.values() if isinstance(v, dict) else v


def _clean(v):
    # json cannot carry infinities; the scalar encoder already spells them out
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else "-inf" if v < 0 else "nan"
    if isinstance(v, dict):
        return {k: _clean(u) for k, u in v.items()}
    if isinstance(v, list):
        return [_clean(u) for u in v]
    return v


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    if args.backend == "exact" and (args.tol_abs is not None or args.tol_rel is not None):
        print("error: the exact backend does not take tolerance overrides", file=sys.stderr)
        return 2
    try:
        ctx = Context(args)
        doc = _read_input(args)
        fn = COMMANDS[args.command][0]
        verdict, result = fn(doc, ctx)
        code = 0 if verdict else 1
    except (SearchFailed, Infeasible) as exc:
        best = getattr(exc, "best", None)
        result = {"error": str(exc), "best": encode_value(best), "residual": encode_value(getattr(exc, "residual", None))}
        verdict, code = False, 1
    except (UsageError, ValueError, KeyError, TypeError, IndexError, ZeroDivisionError, OSError,
            NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    payload = {"command": args.command, "backend": args.backend, "verdict": bool(verdict),
               "result": _clean(encode_value(result))}
    if args.fmt == "table":
        if args.command == "gallery":
            text = result.table() + "\n"
        else:
            text = "\n".join(_table(payload)) + "\n"
    else:
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
