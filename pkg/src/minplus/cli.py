"""Command line driver: ``minplus gen | solve | reduce | verify | bench``.

Instances and reports are JSON lines.  Every random choice of an item is
drawn from a generator seeded with (seed, item index), so outputs are
byte-identical across runs and worker counts.  Wall-clock fields appear only
with ``--timings``.

Exit codes: 0 ok, 1 verification failure, 2 usage or bad input, 3 internal error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import generators as gen
from .addcomb import doubling_constant
from .core import MaskedMatrix, TriangleInstance, exact_triangle_brute, exact_triangles, min_plus_brute, min_plus_small_universe, min_plus_via_exact_triangle
from .errors import DomainError, HashUnavailable, ShapeError
from .exact_triangle import (
    Knobs,
    PotentialAdjustment,
    ReductionOutput,
    check_tags,
    min_plus_low_doubling,
    reduce_low_rank_to_low_doubling,
    reduce_low_rank_to_slice_uniform,
    reduce_low_rank_to_uniform_regular,
    solve_low_rank,
    solve_uniform_low_doubling,
    verify_potential_adjustment,
    verify_reduction_output,
)
from . import intermediate as im
from .minplus_reductions import SamplingConfig, doubling_reduction, hash_universe_compression, small_universe_reduction
from .rank import RankDecomposition, trivial_decomposition

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3

KNOBS = {
    # name: parser
    "t": int,
    "p": float,
    "q": float,
    "q_reg": float,
    "R": float,
    "L": int,
    "K": Fraction,
    "rep_constant": float,
    "n2p": int,
    "c": int,
    "r": int,
    "u": int,
    "plant": int,
    "size": int,
}

GEN_KINDS = ("uniform", "planted", "low-rank", "all-exact", "low-doubling", "regular", "bd")
TRIANGLE_ALGOS = ("brute", "low-rank", "low-doubling")
PRODUCT_ALGOS = ("brute", "small-universe", "via-triangle", "low-doubling")
PRODUCT_REDUCTIONS = (
    "identity",
    "small-universe",
    "doubling",
    "hash",
    "min-product",
    "min-equality",
    "min-witness",
    "monotone",
    "rank-substitution",
    "node-gadget",
    "apsp-directed",
    "apsp-undirected",
)
TRIANGLE_REDUCTIONS = ("identity", "slice-uniform", "uniform-regular", "low-doubling")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Seed, knobs, corpus shape and output path of one invocation."""

    seed: int | None = None
    knobs: dict = field(default_factory=dict)
    shape: tuple[int, int, int] = (4, 4, 4)
    count: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.seed is not None:
            self.seed = int(self.seed)
            if not 0 <= self.seed < 2**64:
                raise UsageError("seed must fit in 64 bits")
        parsed = {}
        for k, v in self.knobs.items():
            if k not in KNOBS:
                raise UsageError(f"unknown knob {k!r}; known: {', '.join(sorted(KNOBS))}")
            try:
                val = KNOBS[k](str(v)) if KNOBS[k] is Fraction else KNOBS[k](v)
            except (TypeError, ValueError, ZeroDivisionError):
                raise UsageError(f"knob {k}={v!r} is not a valid {KNOBS[k].__name__}") from None
            if val < 1:
                raise UsageError(f"knob {k}={v} must be >= 1")
            parsed[k] = val
        self.knobs = parsed
        self.shape = tuple(int(s) for s in self.shape)
        if len(self.shape) != 3 or min(self.shape) < 1:
            raise UsageError("shape must be three positive integers")
        if int(self.count) < 1:
            raise UsageError("count must be >= 1")
        self.count = int(self.count)

    def require_seed(self, what: str) -> int:
        if self.seed is None:
            raise UsageError(f"{what} is randomized and needs --seed (or a seed in --config)")
        return self.seed

    def knob(self, name, default=None):
        return self.knobs.get(name, default)

    def triangle_knobs(self) -> Knobs:
        kw = {k: self.knobs[k] for k in ("t", "p", "q", "q_reg", "R", "L", "K") if k in self.knobs}
        return Knobs(**kw)

    def sampling(self) -> SamplingConfig:
        cfg = SamplingConfig(knobs=self.triangle_knobs())
        if "rep_constant" in self.knobs:
            cfg.rep_constant = float(self.knobs["rep_constant"])
        return cfg

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "knobs": {k: (str(v) if isinstance(v, Fraction) else v) for k, v in sorted(self.knobs.items())},
            "shape": list(self.shape),
            "count": self.count,
            "out": self.out,
        }


def _parse_shape(s: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in s.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"shape must look like 4x4x4, got {s!r}") from None


def _parse_knob(s: str) -> tuple[str, str]:
    if "=" not in s:
        raise argparse.ArgumentTypeError(f"knob must be key=value, got {s!r}")
    k, v = s.split("=", 1)
    return k.strip(), v.strip()


def build_config(args) -> RunConfig:
    base = {}
    if getattr(args, "config", None):
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"{args.config}: {e}") from None
        if not isinstance(base, dict):
            raise UsageError(f"{args.config}: expected a JSON object")
    knobs = dict(base.get("knobs", {}))
    knobs.update(dict(getattr(args, "knob", None) or []))
    return RunConfig(
        seed=args.seed if args.seed is not None else base.get("seed"),
        knobs=knobs,
        shape=getattr(args, "shape", None) or base.get("shape", (4, 4, 4)),
        count=getattr(args, "count", None) or base.get("count", 1),
        out=args.out if args.out is not None else base.get("out"),
    )


# --------------------------------------------------------------------------
# records


def _item_rng(seed: int, index: int):
    return np.random.default_rng([seed, index])


def generate_item(kind: str, cfg: RunConfig, index: int, style: str = "progression") -> dict:
    rng = _item_rng(cfg.require_seed("gen"), index)
    n1, n2, n3 = cfg.shape
    u = int(cfg.knob("u", 8))
    rec: dict = {"id": f"{kind}-{index:05d}", "kind": kind}
    if kind == "uniform":
        rec.update(A=gen.random_matrix(rng, n1, n2, 0, u).to_json(), B=gen.random_matrix(rng, n2, n3, 0, u).to_json())
    elif kind in ("planted", "low-rank"):
        r = int(cfg.knob("r", 2))
        plant = int(cfg.knob("plant", 4)) if kind == "planted" else 0
        I, d = gen.low_rank_instance(rng, n1, n2, n3, r, u, plant=0)
        if plant:
            # plant on a full C so every planted triple becomes exact
            d = RankDecomposition(d.r, d.U, d.V, np.where(d.S >= 0, d.S, 0))
            I = TriangleInstance(I.A, I.B, d.matrix())
            I, planted = _plant(rng, I, plant)
            rec["planted"] = planted
        rec.update(I.to_json())
        rec["d"] = d.to_json()
    elif kind == "all-exact":
        rec.update(gen.all_exact_instance(rng, n1, n2, n3, u).to_json())
    elif kind == "low-doubling":
        X = gen.low_doubling_set(rng, int(cfg.knob("size", 3)), style)
        pick = lambda n, m: MaskedMatrix(np.asarray(X)[rng.integers(0, len(X), (n, m))])  # noqa: E731
        rec.update(A=pick(n1, n2).to_json(), B=pick(n2, n3).to_json(), X=X, doubling=str(doubling_constant(X)))
    elif kind == "regular":
        X = gen.low_doubling_set(rng, int(cfg.knob("size", 3)), "progression")
        I = gen.regular_instance(rng, X, 1, max(1, n2 // len(X)), 1)
        rec.update(I.to_json(), X=X)
    elif kind == "bd":
        c = int(cfg.knob("c", 1))
        rec.update(A=MaskedMatrix(gen.bd_matrix(rng, n1, n2, c)).to_json(), B=gen.random_matrix(rng, n2, n3, 0, u).to_json(), c=c)
    else:
        raise UsageError(f"unknown kind {kind!r}")
    return rec


def _plant(rng, I: TriangleInstance, count: int):
    """Plant exact triples on distinct A and B entries so none overwrites another."""
    A, B, C = I.A.copy(), I.B.copy(), I.C
    n1, n2, n3 = I.dims
    used_a, used_b, planted = set(), set(), 0
    for _ in range(50 * count):
        if planted == count:
            break
        i, k, j = (int(x) for x in (rng.integers(0, n1), rng.integers(0, n2), rng.integers(0, n3)))
        if (i, k) in used_a or (k, j) in used_b:
            continue
        A.values[i, k], A.mask[i, k] = 0, True
        B.values[k, j], B.mask[k, j] = C.values[i, j], True
        used_a.add((i, k))
        used_b.add((k, j))
        planted += 1
    return TriangleInstance(A, B, C), planted


class InputError(Exception):
    pass


def _matrix(rec, key) -> MaskedMatrix:
    return MaskedMatrix.from_json(rec[key])


def is_triangle(rec: dict) -> bool:
    return "C" in rec


def load_instance(rec: dict):
    if is_triangle(rec):
        I = TriangleInstance.from_json(rec)
        d = RankDecomposition.from_json(rec["d"]) if "d" in rec else None
        if d is not None and d.shape != I.C.shape:
            raise ShapeError(f"decomposition shape {d.shape} does not match C{I.C.shape}")
        if d is not None and not d.matrix() == I.C:
            raise DomainError("decomposition does not represent C")
        return I, d
    A, B = _matrix(rec, "A"), _matrix(rec, "B")
    if A.cols != B.rows:
        raise ShapeError(f"inner dimensions differ: A{A.shape} B{B.shape}")
    return (A, B), None


def read_jsonl(path: str) -> list[tuple[str, dict]]:
    """(location, record) pairs; location is ``file:line``."""
    out = []
    try:
        fh = sys.stdin if path == "-" else open(path)
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None
    with fh:
        for ln, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise InputError(f"{path}:{ln}: {e.msg}") from None
            if not isinstance(rec, dict):
                raise InputError(f"{path}:{ln}: expected a JSON object")
            out.append((f"{path}:{ln}", rec))
    return out


# --------------------------------------------------------------------------
# solve / reduce / verify


def solve_record(rec: dict, algorithm: str, cfg: RunConfig) -> dict:
    inst, d = load_instance(rec)
    out = {"id": rec.get("id"), "op": "solve", "algorithm": algorithm}
    if is_triangle(rec):
        if algorithm == "brute":
            f = exact_triangle_brute(inst)
        elif algorithm == "low-rank":
            d = d if d is not None else trivial_decomposition(inst.C)
            f = solve_low_rank(inst, d, cfg.triangle_knobs())
        elif algorithm == "low-doubling":
            f = solve_uniform_low_doubling(inst)
        else:
            raise UsageError(f"algorithm {algorithm!r} does not apply to triangle instances; use one of {TRIANGLE_ALGOS}")
        out["flags"] = f.to_json()
        return out
    A, B = inst
    if algorithm == "brute":
        P = min_plus_brute(A, B)
    elif algorithm == "small-universe":
        vals = np.concatenate([A.values[A.mask], B.values[B.mask]])
        if vals.size and vals.min() < 0:
            raise DomainError("small-universe needs non-negative entries")
        P = min_plus_small_universe(A, B, int(vals.max()) if vals.size else 0)
    elif algorithm == "via-triangle":
        P = min_plus_via_exact_triangle(A, B)
    elif algorithm == "low-doubling":
        P = min_plus_low_doubling(A, B)
    else:
        raise UsageError(f"algorithm {algorithm!r} does not apply to product instances; use one of {PRODUCT_ALGOS}")
    out["product"] = P.to_json()
    return out


def _product_reduction(A: MaskedMatrix, B: MaskedMatrix, name: str, cfg: RunConfig, seed: int) -> tuple[MaskedMatrix, dict, dict]:
    """(decoded product, checks, counters)."""
    stats: dict = {}
    checks: dict = {}
    if name == "identity":
        P = min_plus_brute(A, B)
    elif name == "small-universe":
        P = small_universe_reduction(A, B, int(cfg.knob("n2p", max(A.cols, 1))), int(cfg.knob("t", 2)), seed=seed, config=cfg.sampling(), stats=stats)
    elif name == "doubling":
        P = doubling_reduction(A, B, cfg.knob("K", 2), seed=seed, config=cfg.sampling(), stats=stats)
    elif name == "hash":
        P = hash_universe_compression(A, B, seed=seed, config=cfg.sampling(), stats=stats)
    elif name in ("min-product", "min-equality", "min-witness"):
        red = {"min-product": im.reduce_minplus_to_min_product, "min-equality": im.reduce_minplus_to_min_equality, "min-witness": im.reduce_minplus_to_min_witness}[name](A, B)
        stats["inner"] = len(red.inner)
        if name == "min-product":
            P = red.decode(im.min_product_brute(red.left, red.right))
        elif name == "min-equality":
            P = red.decode(im.min_eq_brute(red.left, red.right))
        else:
            P, W = red.decode(im.min_witness_brute(red.left, red.right))
            ii, jj = np.nonzero(W.mask)
            k = W.values[ii, jj]
            checks["witnesses_valid"] = bool((A.mask[ii, k] & B.mask[k, jj] & (A.values[ii, k] + B.values[k, jj] == P.values[ii, jj])).all())
    elif name == "monotone":
        c = int(cfg.knob("c", 1))
        T = im.monotone_bd_transform(A, B, c)
        checks.update(T.checks())
        P = T.decode(min_plus_brute(MaskedMatrix(T.A), MaskedMatrix(T.B)))
        stats["universe"] = int(T.universe)
    elif name == "rank-substitution":
        P = im.rank_substitution_bd_reduction(A, B, int(cfg.knob("L", 2)), seed=seed, stats=stats)
        checks["bad_pairs_within_bound"] = stats["bad_pairs"] <= stats["bad_bound"]
    elif name in ("node-gadget", "apsp-directed", "apsp-undirected"):
        if name == "node-gadget":
            g = im.node_weighted_gadget(A, B)
        else:
            g = im.min_plus_to_apsp_graph(A, B, "directed-layered" if name == "apsp-directed" else "undirected-3layer", cfg.knob("u"))
        P = g.solve()
        stats.update({k: v for k, v in g.meta.items() if isinstance(v, int)})
        stats["vertices"] = g.graph.n
        stats["edges"] = len(g.graph.edges)
        checks["vertex_bound"] = g.graph.n <= g.meta["vertex_bound"]
    else:
        raise UsageError(f"unknown product reduction {name!r}; use one of {PRODUCT_REDUCTIONS}")
    checks["equals_brute"] = P == min_plus_brute(A, B)
    return P, checks, stats


def _triangle_reduction(I: TriangleInstance, d, name: str, cfg: RunConfig) -> ReductionOutput:
    d = d if d is not None else trivial_decomposition(I.C)
    kn = cfg.triangle_knobs()
    if name == "identity":
        return ReductionOutput([PotentialAdjustment.identity(I)])
    if name == "slice-uniform":
        return reduce_low_rank_to_slice_uniform(I, d, kn.t, kn.R)
    if name == "uniform-regular":
        return reduce_low_rank_to_uniform_regular(I, d, kn)
    if name == "low-doubling":
        return reduce_low_rank_to_low_doubling(I, d, kn)
    raise UsageError(f"unknown triangle reduction {name!r}; use one of {TRIANGLE_REDUCTIONS}")


def _reduction_checks(I: TriangleInstance, out: ReductionOutput) -> dict:
    return {
        "reduction_valid": verify_reduction_output(I, out),
        "adjustments_valid": all(verify_potential_adjustment(I, a) for a in out.instances),
        "tags_hold": all(check_tags(a) for a in out.instances),
    }


def _json_stats(stats: dict) -> dict:
    out = {}
    for k in sorted(stats):
        v = stats[k]
        if isinstance(v, (np.integer,)):
            v = int(v)
        elif isinstance(v, (np.floating,)):
            v = float(v)
        elif isinstance(v, Fraction):
            v = str(v)
        elif isinstance(v, (list, tuple)):
            v = [int(x) if isinstance(x, np.integer) else x for x in v]
        elif isinstance(v, dict):
            v = {str(a): b for a, b in v.items()}
        out[k] = v
    return out


def reduce_record(rec: dict, name: str, cfg: RunConfig, index: int) -> dict:
    seed = int(_item_rng(cfg.require_seed("reduce"), index).integers(0, 2**63))
    inst, d = load_instance(rec)
    out = {"id": rec.get("id"), "op": "reduce", "reduction": name}
    if is_triangle(rec) and name in TRIANGLE_REDUCTIONS:
        res = _triangle_reduction(inst, d, name, cfg)
        out["output"] = res.to_json(inst)
        out["checks"] = _reduction_checks(inst, res)
        depth = [a.tags for a in res.instances]
        out["counters"] = {"instances": len(res.instances), "triples": len(res.triples), "tagged": sum(1 for t in depth if t)}
        out["counters"].update(_json_stats(res.stats))
        return out
    A, B = (inst.A, inst.B) if is_triangle(rec) else inst
    P, checks, stats = _product_reduction(A, B, name, cfg, seed)
    out["product"] = P.to_json()
    out["checks"] = checks
    out["counters"] = _json_stats(stats)
    return out


def verify_record(rec: dict, report: dict) -> dict:
    """Re-derive every property of a report line from the raw instance."""
    inst, _ = load_instance(rec)
    checks: dict = {}
    A, B = (inst.A, inst.B) if is_triangle(rec) else inst
    if "product" in report:
        P = MaskedMatrix.from_json(report["product"])
        checks["product_equals_brute"] = P == min_plus_brute(A, B)
    if is_triangle(rec):
        I = inst
        if "flags" in report:
            truth = exact_triangle_brute(I)
            got = report["flags"]
            checks["flags_equal_brute"] = all(np.array_equal(np.asarray(got[k], dtype=bool).reshape(getattr(truth, k).shape), getattr(truth, k)) for k in "abc")
        if "output" in report:
            res = ReductionOutput.from_json(report["output"], I)
            checks.update(_reduction_checks(I, res))
            exact = exact_triangles(I)
            checks["triples_exact"] = all(tuple(t) in exact for t in res.triples)
    if not checks:
        checks["recognized"] = False
    return {"id": rec.get("id"), "op": "verify", "checks": checks, "ok": all(checks.values())}


def bench_record(rec: dict, t_values: list[int], reduction: str, cfg: RunConfig) -> list[dict]:
    inst, d = load_instance(rec)
    if not is_triangle(rec):
        raise DomainError("bench runs the triangle reductions; product instances are not supported")
    rows = []
    for t in t_values:
        local = RunConfig(cfg.seed, {**{k: v for k, v in cfg.knobs.items()}, "t": t}, cfg.shape, cfg.count, cfg.out)
        start = time.perf_counter()
        res = _triangle_reduction(inst, d, reduction, local)
        elapsed = time.perf_counter() - start
        rows.append(
            {
                "id": rec.get("id"),
                "reduction": reduction,
                "t": t,
                "instances": len(res.instances),
                "triples": len(res.triples),
                "max_entries": max((a.instance.A.nnz + a.instance.B.nnz + a.instance.C.nnz for a in res.instances), default=0),
                "seconds": elapsed,
            }
        )
    return rows


# --------------------------------------------------------------------------
# plumbing


def _emit(lines: list[str], out: str | None):
    text = "".join(lines)
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


class _Job:
    """Picklable per-item task; errors come back as values with their location."""

    def __init__(self, fn, *extra):
        self.fn, self.extra = fn, extra

    def __call__(self, item):
        loc, rec, index = item
        try:
            return ("ok", self.fn(rec, index, *self.extra))
        except (ShapeError, DomainError, HashUnavailable, UsageError, KeyError, TypeError, ValueError) as e:
            what = f"missing field {e}" if isinstance(e, KeyError) else str(e)
            return ("input", f"{loc}: {type(e).__name__}: {what}")


def _solve_job(rec, index, algorithm, cfg):
    return solve_record(rec, algorithm, cfg)


def _reduce_job(rec, index, name, cfg):
    return reduce_record(rec, name, cfg, index)


def _bench_job(rec, index, t_values, reduction, cfg):
    return bench_record(rec, t_values, reduction, cfg)


def _run(records, job, workers: int) -> list:
    items = [(loc, rec, i) for i, (loc, rec) in enumerate(records)]
    results = _map(job, items, workers)
    for status, val in results:
        if status != "ok":
            raise InputError(val)
    return [val for _, val in results]


def _timed(rec: dict, seconds: float, on: bool) -> dict:
    if on:
        rec = dict(rec, seconds=round(seconds, 6))
    return rec


def cmd_gen(args, cfg: RunConfig) -> int:
    cfg.require_seed("gen")
    lines = [_dump(generate_item(args.kind, cfg, i, args.set_style)) for i in range(cfg.count)]
    _emit(lines, cfg.out)
    return EXIT_OK


def cmd_solve(args, cfg: RunConfig) -> int:
    recs = read_jsonl(args.instances)
    start = time.perf_counter()
    res = _run(recs, _Job(_solve_job, args.algorithm, cfg), args.workers)
    el = (time.perf_counter() - start) / max(len(res), 1)
    _emit([_dump(_timed(r, el, args.timings)) for r in res], cfg.out)
    return EXIT_OK


def cmd_reduce(args, cfg: RunConfig) -> int:
    cfg.require_seed("reduce")
    recs = read_jsonl(args.instances)
    start = time.perf_counter()
    res = _run(recs, _Job(_reduce_job, args.reduction, cfg), args.workers)
    el = (time.perf_counter() - start) / max(len(res), 1)
    _emit([_dump(_timed(r, el, args.timings)) for r in res], cfg.out)
    return EXIT_OK if all(all(r["checks"].values()) for r in res) else EXIT_VERIFY


def cmd_verify(args, cfg: RunConfig) -> int:
    recs = {}
    for loc, rec in read_jsonl(args.instances):
        recs[rec.get("id")] = (loc, rec)
    lines, ok = [], True
    for loc, rep in read_jsonl(args.report):
        key = rep.get("id")
        if key not in recs:
            raise InputError(f"{loc}: no instance with id {key!r} in {args.instances}")
        iloc, rec = recs[key]
        try:
            v = verify_record(rec, rep)
        except (ShapeError, DomainError, KeyError, TypeError, ValueError) as e:
            v = {"id": key, "op": "verify", "checks": {"parse": False}, "ok": False, "error": f"{loc}: {type(e).__name__}: {e}"}
        ok &= v["ok"]
        lines.append(_dump(v))
    _emit(lines, cfg.out)
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_bench(args, cfg: RunConfig) -> int:
    cfg.require_seed("bench")
    t_values = [int(x) for x in args.t_values.split(",")]
    if min(t_values) < 1:
        raise UsageError("t values must be >= 1")
    recs = read_jsonl(args.corpus)
    rows = [row for rs in _run(recs, _Job(_bench_job, t_values, args.reduction, cfg), args.workers) for row in rs]
    fields = ["id", "reduction", "t", "instances", "triples", "max_entries"] + (["seconds"] if args.timings else [])
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    # summary: totals per t
    for t in t_values:
        sel = [r for r in rows if r["t"] == t]
        w.writerow({"id": "TOTAL", "reduction": args.reduction, "t": t, "instances": sum(r["instances"] for r in sel), "triples": sum(r["triples"] for r in sel), "max_entries": max((r["max_entries"] for r in sel), default=0), "seconds": sum(r["seconds"] for r in sel)})
    _emit([buf.getvalue()], cfg.out)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="64-bit seed for every randomized path")
    common.add_argument("--config", help="JSON RunConfig: seed, knobs, shape, count, out")
    common.add_argument("--knob", action="append", type=_parse_knob, metavar="KEY=VAL", help=f"override a knob ({', '.join(KNOBS)})")
    common.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--timings", action="store_true", help="include wall-clock fields (breaks byte-determinism)")

    p = _Parser(prog="minplus", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="generate a seeded corpus")
    g.add_argument("--kind", choices=GEN_KINDS, default="uniform")
    g.add_argument("--shape", type=_parse_shape, default=None, help="n1xn2xn3")
    g.add_argument("--count", type=int, default=None)
    g.add_argument("--set-style", choices=("progression", "geometric", "random"), default="progression", help="entry set of the low-doubling kind")

    s = sub.add_parser("solve", parents=[common], help="solve product or triangle instances")
    s.add_argument("instances")
    s.add_argument("--algorithm", default="brute", choices=sorted(set(TRIANGLE_ALGOS + PRODUCT_ALGOS)))

    r = sub.add_parser("reduce", parents=[common], help="run a reduction and check it")
    r.add_argument("instances")
    r.add_argument("--reduction", required=True, choices=sorted(set(PRODUCT_REDUCTIONS + TRIANGLE_REDUCTIONS)))

    v = sub.add_parser("verify", parents=[common], help="re-check a report against its instances")
    v.add_argument("instances")
    v.add_argument("report")

    b = sub.add_parser("bench", parents=[common], help="instance counts of a triangle reduction against t")
    b.add_argument("corpus")
    b.add_argument("--reduction", default="slice-uniform", choices=TRIANGLE_REDUCTIONS)
    b.add_argument("--t-values", default="2,3,4")
    return p


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "reduce": cmd_reduce, "verify": cmd_verify, "bench": cmd_bench}


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
        cfg = build_config(args)
        return COMMANDS[args.cmd](args, cfg)
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except (UsageError, InputError) as e:
        print(f"minplus: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001
        print(f"minplus: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
