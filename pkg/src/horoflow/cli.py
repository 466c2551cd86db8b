"""``horoflow`` command line: flow, group, keylemma, hirsch, density.

Exit codes: 0 success, 1 numeric failure, 2 usage or validation error,
3 inconclusive verdict.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from . import config
from .config import DensityConfig, GridSpec, KeyLemmaConfig
from .core import Frame, MoebiusMap, affine_act, frame_geometry, geodesic_flow, horocycle_flow
from .errors import (
    BudgetExceededError,
    DegenerateError,
    EscapeFailError,
    HoroflowError,
    NoClusterError,
    NoConvergenceError,
)

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Validated view of one invocation."""

    subcommand: str
    action: str | None = None
    group: str | None = None
    inputs: list[str] = field(default_factory=list)
    out: str | None = None
    threads: int = 1
    normalize_det: bool = False
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.threads < 1:
            raise UsageError("--threads must be >= 1")


# --- output helpers ------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return repr(x + 0.0)  # no signed zeros
    return str(x)


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _frame(entries) -> Frame:
    if entries is None:
        return Frame.identity()
    a, b, c, d = entries
    try:
        return Frame(MoebiusMap.from_entries(a, b, c, d))
    except ValueError as exc:
        raise UsageError(f"bad frame: {exc}") from exc


def _group(name_or_path: str, normalize_det: bool):
    from .fuchsian import builtin_group, load_group_spec

    if os.path.exists(name_or_path):
        return load_group_spec(name_or_path, normalize_det=normalize_det)
    return builtin_group(name_or_path)


# --- flow ------------------------------------------------------------------------------


def run_flow(args) -> int:
    u = _frame(args.frame)
    rows = []
    if args.geodesic:
        for t in args.t or [1.0]:
            rows.append((t, geodesic_flow(u, t)))
    elif args.horocycle:
        for s in args.s or [1.0]:
            rows.append((s, horocycle_flow(u, s)))
    else:
        if args.a is None or args.b is None:
            raise UsageError("--affine needs --a and --b")
        if not args.a > 0:
            raise UsageError("--a must be positive")
        rows.append((args.a, affine_act(u, args.a, args.b)))
    out = []
    for p, v in rows:
        base, direction, fwd = frame_geometry(v)
        out.append((p, *v.g.entries(), base.re, base.im, direction, fwd))
    _emit(_csv(["param", "a", "b", "c", "d", "base_re", "base_im", "direction", "forward"], out), args.out)
    return EXIT_OK


# --- group -----------------------------------------------------------------------------


def run_group(args) -> int:
    from .core import axis_data, translation_length
    from .fuchsian import (
        closed_geodesics_in_band,
        dirichlet_reduce,
        group_to_dict,
        relator_residual,
    )

    G = _group(args.group, args.normalize_det)
    if args.action == "geodesics":
        a, b = args.band
        if not (0 < a <= b):
            raise UsageError("--band needs 0 < a <= b")
        recs = closed_geodesics_in_band(G, args.maxlen, a, b)
        rows = [
            (G.word_str(r.element.word), r.length, r.repelling, r.attracting) for r in recs
        ]
        _emit(_csv(["word", "length", "repelling", "attracting"], rows), args.out)
    elif args.action == "reduce":
        f, el = dirichlet_reduce(G, _frame(args.frame))
        base, direction, fwd = frame_geometry(f)
        rows = [(G.word_str(el.word) or "e", *f.g.entries(), base.re, base.im, direction)]
        _emit(_csv(["word", "a", "b", "c", "d", "base_re", "base_im", "direction"], rows), args.out)
    elif args.action == "info":
        rows = []
        for nm, g in zip(G.names, G.generators):
            rep, att, length = axis_data(g)
            rows.append((nm, g.trace, translation_length(g), rep, att))
        text = _csv(["name", "trace", "length", "repelling", "attracting"], rows)
        for w in G.relators:
            text += f"# relator {G.word_str(w)} residual {relator_residual(G, w)!r}\n"
        _emit(text, args.out)
    elif args.action == "export":
        _emit(json.dumps(group_to_dict(G), indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


# --- keylemma --------------------------------------------------------------------------


def keylemma_report(desk) -> dict:
    run = desk.run
    rep = {
        "a0": desk.a0,
        "band": list(desk.band),
        "k": desk.k,
        "elements": desk.elements,
        "crossings": [{"t_n": c.t_n, "angle": c.angle, "length": c.length} for c in desk.crossings],
        "status": "ok" if run else type(desk.error).__name__,
        "message": None if run else str(desk.error),
    }
    if run is not None:
        rep.update(
            {
                "B": run.busemann_values,
                "t0": run.t0,
                "bounds": list(run.bounds),
                "bounds_ok": run.bounds_ok,
                "cluster": run.cluster,
                "subsequence": run.subsequence,
                "s_n": [w.s_n for w in run.witnesses],
                "frame_error": [w.frame_error for w in run.witnesses],
                "final_error": run.final_error,
                "monotone": run.monotone(),
            }
        )
    return rep


def keylemma_csv(desk) -> str:
    run = desk.run
    values = run.busemann_values if run else [math.nan] * len(desk.crossings)
    matched = {w.index: w for w in run.candidates} if run else {}
    selected = set(run.subsequence) if run else set()
    rows = []
    for i, (c, B) in enumerate(zip(desk.crossings, values)):
        w = matched.get(i)
        rows.append((i, c.t_n, c.angle, c.length, B, i in selected,
                     "" if w is None else w.s_n, "" if w is None else w.frame_error))
    return _csv(["index", "t_n", "angle", "length", "B", "selected", "s_n", "frame_error"], rows)


def run_keylemma(args) -> int:
    from .keylemma import desk_run

    G = _group(args.group, args.normalize_det)
    cfg = KeyLemmaConfig()
    upd = {
        "max_word_length": args.maxlen,
        "conjugator_length": args.conj_len,
        "core_length": args.core_len,
        "horizon": args.horizon,
        "eps_xi": args.eps_xi,
        "eps_B": args.eps_b,
    }
    cfg = replace(cfg, **{k: v for k, v in upd.items() if v is not None})
    for name in ("max_word_length", "conjugator_length", "core_length"):
        if getattr(cfg, name) < 1:
            raise UsageError(f"{name} must be >= 1")
    band = None
    if args.band is not None:
        a, b = args.band
        if not (0 < a <= b):
            raise UsageError("--band needs 0 < a <= b")
        band = (a, b)
    u = _frame(args.frame) if args.frame else None
    desk = desk_run(G, cfg, u, band)
    report = json.dumps(keylemma_report(desk), indent=2, sort_keys=True) + "\n"
    table = keylemma_csv(desk)
    if args.out:
        _emit(report, os.path.join(args.out, "keylemma.json"))
        _emit(table, os.path.join(args.out, "crossings.csv"))
    else:
        sys.stdout.write(report)
    if desk.run is None:
        return EXIT_INCONCLUSIVE
    return EXIT_OK if desk.run.bounds_ok else EXIT_NUMERIC


# --- hirsch ----------------------------------------------------------------------------


def run_hirsch(args) -> int:
    from .hirsch import (
        AngleParam,
        classification_csv,
        classify_all,
        coarse_tameness_graph_check,
        handle_crossings,
        pants_tree,
    )

    if args.action == "classify":
        if args.qmax < 1:
            raise UsageError("--qmax must be >= 1")
        _emit(classification_csv(classify_all(args.qmax, args.threads)), args.out)
        return EXIT_OK
    try:
        theta = AngleParam.of(args.theta)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad --theta {args.theta!r}") from exc
    if not (1 <= args.depth <= 20):
        raise UsageError("--depth must be in [1, 20]")
    tree = pants_tree(theta, args.depth, args.cuff)
    if args.action == "tree":
        _emit(tree.edge_list(), args.out)
    else:
        path = tree.spine() if args.path is None else args.path
        crossed, ok = coarse_tameness_graph_check(tree, path)
        handles = handle_crossings(tree, path)
        _emit(_csv(["cuffs_crossed", "all_in_band", "handle_depths"], [(crossed, ok, " ".join(map(str, handles)))]), args.out)
    return EXIT_OK


# --- density ---------------------------------------------------------------------------

DENSITY_KEYS = {f.name for f in fields(DensityConfig)} | {"group"}


def load_density_config(path: str) -> tuple[DensityConfig, str | None]:
    import yaml

    with open(path) as fh:
        doc = yaml.safe_load(fh) or {}
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: expected a key-value document")
    extra = set(doc) - DENSITY_KEYS
    if extra:
        raise UsageError(f"unknown keys in density config: {sorted(extra)}")
    group = doc.pop("group", None)
    if "grid" in doc:
        g = doc["grid"]
        if not isinstance(g, dict) or set(g) - {"x_bins", "y_bins", "angle_bins"}:
            raise UsageError("grid needs x_bins, y_bins, angle_bins")
        doc["grid"] = GridSpec(**{k: int(v) for k, v in g.items()})
    for key in ("seed_frame", "budgets"):
        if key in doc:
            doc[key] = tuple(float(x) for x in doc[key])
    return DensityConfig(**doc), group


def run_density(args) -> int:
    from .density import (
        Flow,
        Verdict,
        coverage_fraction,
        dichotomy_experiment,
        grid_for_group,
        sample_orbit,
    )

    cfg, group = (DensityConfig(), None)
    if args.config:
        cfg, group = load_density_config(args.config)
    group = args.group or group or "genus2"
    upd = {
        "flow": args.flow,
        "seed_frame": tuple(args.frame) if args.frame else None,
        "budgets": tuple(args.budgets) if args.budgets else None,
        "ds": args.ds,
        "grid": GridSpec(*args.grid) if args.grid else None,
        "affine_rows": args.rows,
    }
    cfg = replace(cfg, **{k: v for k, v in upd.items() if v is not None})
    if cfg.flow not in {f.value for f in Flow}:
        raise UsageError(f"unknown flow {cfg.flow!r}")
    if not cfg.ds > 0 or not cfg.budgets or min(cfg.budgets) < cfg.ds:
        raise UsageError("need ds > 0 and budgets >= ds")
    if min(cfg.grid.x_bins, cfg.grid.y_bins, cfg.grid.angle_bins) < 1:
        raise UsageError("grid bins must be >= 1")
    if cfg.affine_rows < 1 or cfg.affine_rows % 2 == 0:
        raise UsageError("--rows must be odd")
    G = _group(group, args.normalize_det)
    u = _frame(cfg.seed_frame)
    grid = grid_for_group(G, cfg.grid)
    affine = {"rows": cfg.affine_rows, "t_max": cfg.affine_t_max} if cfg.flow == "affine" else {}
    report = dichotomy_experiment(G, u, list(cfg.budgets), cfg.ds, grid, cfg.flow, **affine)
    rows = [tuple(r.values()) for r in report.rows()]
    _emit(_csv(["budget", "flow", "cells_hit", "cells_total", "coverage", "verdict"], rows), args.out)
    if report.im_bound is not None:
        stalled = report.stalled_rows[-1] if report.stalled_rows else []
        sys.stderr.write(
            f"stall: im bound {report.im_bound!r}; empty rows above it at every budget: "
            f"{'yes' if report.stalled else 'no'} {stalled}\n"
        )
    if args.points or args.heat:
        sample = sample_orbit(G, u, cfg.flow, cfg.budgets[-1], cfg.ds, **affine)
        if args.points:
            stride = max(1, sample.count // args.max_points)
            pts = zip(sample.xs[::stride], sample.ys[::stride], sample.directions[::stride])
            _emit(_csv(["x", "y", "direction"], ((float(a), float(b), float(c)) for a, b, c in pts)), args.points)
        if args.heat:
            hits = grid.hits(sample)
            mask = grid.mask
            heat = [
                (i, j, int(hits[i, j].sum()), grid.angle_bins if mask is None or mask[i, j] else 0)
                for i in range(grid.x_bins)
                for j in range(grid.y_bins)
            ]
            _emit(_csv(["ix", "iy", "hits", "admissible"], heat), args.heat)
    return EXIT_OK if report.verdict is not Verdict.INCONCLUSIVE else EXIT_INCONCLUSIVE


# --- parser ------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="horoflow", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=1, help="worker cap; outputs do not depend on it")
    p.add_argument("--normalize-det", action="store_true", help="rescale group generators to det 1")
    sub = p.add_subparsers(dest="subcommand", required=True)

    f = sub.add_parser("flow", help="frame trajectories of g_t, h_s and the affine action")
    kind = f.add_mutually_exclusive_group(required=True)
    kind.add_argument("--geodesic", action="store_true")
    kind.add_argument("--horocycle", action="store_true")
    kind.add_argument("--affine", action="store_true")
    f.add_argument("--t", type=float, nargs="+")
    f.add_argument("--s", type=float, nargs="+")
    f.add_argument("--a", type=float)
    f.add_argument("--b", type=float)
    f.add_argument("--frame", type=float, nargs=4, metavar=("A", "B", "C", "D"))
    f.add_argument("--out")

    g = sub.add_parser("group", help="group engine: geodesics, reduction, info, export")
    g.add_argument("action", choices=["geodesics", "reduce", "info", "export"])
    g.add_argument("--group", default="genus2", help="builtin name or YAML/JSON spec path")
    g.add_argument("--band", type=float, nargs=2, default=[0.5, 3.0])
    g.add_argument("--maxlen", type=int, default=4)
    g.add_argument("--frame", type=float, nargs=4, metavar=("A", "B", "C", "D"))
    g.add_argument("--out")

    k = sub.add_parser("keylemma", help="horocycle return desk run")
    k.add_argument("--group", default="genus2-kernel")
    k.add_argument("--band", type=float, nargs=2)
    k.add_argument("--maxlen", type=int)
    k.add_argument("--conj-len", type=int)
    k.add_argument("--core-len", type=int)
    k.add_argument("--horizon", type=float)
    k.add_argument("--eps-xi", type=float)
    k.add_argument("--eps-b", type=float)
    k.add_argument("--frame", type=float, nargs=4, metavar=("A", "B", "C", "D"))
    k.add_argument("--out", help="directory for keylemma.json and crossings.csv")

    h = sub.add_parser("hirsch", help="doubling-map leaf classification and pants trees")
    h.add_argument("action", choices=["classify", "tree", "check"])
    h.add_argument("--qmax", type=int, default=16)
    h.add_argument("--theta", default="0")
    h.add_argument("--depth", type=int, default=5)
    h.add_argument("--cuff", type=float, default=1.0)
    h.add_argument("--path", type=int, nargs="*")
    h.add_argument("--out")

    d = sub.add_parser("density", help="orbit coverage experiment")
    d.add_argument("--config", help="YAML/JSON experiment config")
    d.add_argument("--group")
    d.add_argument("--flow", choices=["horocycle", "geodesic", "affine"])
    d.add_argument("--budgets", type=float, nargs="+")
    d.add_argument("--ds", type=float)
    d.add_argument("--frame", type=float, nargs=4, metavar=("A", "B", "C", "D"))
    d.add_argument("--grid", type=int, nargs=3, metavar=("NX", "NY", "NA"))
    d.add_argument("--rows", type=int, help="affine sweep rows (odd)")
    d.add_argument("--points", help="CSV point cloud of folded bases")
    d.add_argument("--max-points", type=int, default=20000)
    d.add_argument("--heat", help="CSV coverage heat grid")
    d.add_argument("--out")
    return p


HANDLERS = {
    "flow": run_flow,
    "group": run_group,
    "keylemma": run_keylemma,
    "hirsch": run_hirsch,
    "density": run_density,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if config.TOL_ERROR:
        print(f"horoflow: {config.TOL_ERROR}", file=sys.stderr)
        return EXIT_USAGE
    try:
        RunConfig(args.subcommand, getattr(args, "action", None), threads=args.threads)
        return HANDLERS[args.subcommand](args)
    except UsageError as exc:
        print(f"horoflow: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoClusterError, EscapeFailError) as exc:
        print(f"horoflow: inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (NoConvergenceError, BudgetExceededError, DegenerateError, ArithmeticError) as exc:
        print(f"horoflow: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (HoroflowError, ValueError, OSError) as exc:
        print(f"horoflow: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
