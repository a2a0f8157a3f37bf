"""Command-line front end: ``fibvar <command> [options]``.

Every command writes its files into ``--out`` (created if missing) and prints
a short summary, or a JSON document with ``--json``.  Failures print a single
``error: ...`` line on stderr and exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import render
from .cocycle import CocycleEvaluator
from .diffraction import (
    LABELS,
    closed_form_1d,
    closed_form_product,
    diffract,
    enumerate_module,
    monte_carlo_random_chain,
    patch_amplitude,
    peaks_to_csv,
    randomized_diffraction,
)
from .inflation import (
    InflationRule,
    all_dpv_codes,
    generate_patch,
    parse_rule,
    steps_for_tiles,
)
from .windows import (
    ORIGINAL_CODES,
    AmbiguousClassification,
    CatalogEntry,
    classify,
    classify_code,
    solve_windows,
    window_areas,
    window_ifs,
)

MAX_PATCH_TILES = 10**7


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise CliError(message)


def _slug(rule: InflationRule) -> str:
    return rule.name.replace(":", "-").replace(",", "-")


def _weights(text: str | None, n: int) -> list[complex]:
    if text is None:
        return [1.0] * n
    try:
        vals = [complex(x.strip().replace("i", "j")) for x in text.split(",")]
    except ValueError:
        raise CliError(f"malformed weights {text!r}") from None
    if len(vals) != n:
        raise CliError(f"need {n} weights, got {len(vals)}")
    return [v.real if v.imag == 0 else v for v in vals]


def _count(text: str) -> int:
    """Integer that may be written as ``1e6``."""
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x.is_integer() or x < 1:
        raise argparse.ArgumentTypeError(f"need a positive integer, got {text!r}")
    return int(x)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _emit(args, summary: dict, lines: Sequence[str]) -> None:
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        for line in lines:
            print(line)


def _pool(threads: int | None, fn, items):
    """Map in a process pool; results come back in input order."""
    n = threads or os.cpu_count() or 1
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# --- diffract ------------------------------------------------------------------


def cmd_diffract(args) -> int:
    rule = parse_rule(args.rule)
    weights = _weights(args.weights, rule.size)
    peaks = diffract(rule, weights, args.kmax, args.ystarmax)
    out = _outdir(args)
    stem = f"diffraction_{_slug(rule)}"
    csv_path = out / f"{stem}.csv"
    csv_path.write_text(peaks_to_csv(peaks, rule.dim))
    img_path = out / f"{stem}.ppm"
    render.write_ppm(img_path, render.diffraction_image(peaks, rule.dim, args.kmax, args.res))
    files = [str(csv_path), str(img_path)]
    if args.png:
        fig = out / f"{stem}.png"
        render.diffraction_figure(peaks, rule.dim, args.kmax, fig, rule.name)
        files.append(str(fig))
    top = peaks[:5]
    summary = {
        "rule": rule.name,
        "n_peaks": len(peaks),
        "top": [{"index": list(pk.index.flat()), "k": list(pk.k), "intensity": pk.intensity} for pk in top],
        "files": files,
    }
    lines = [f"{rule.name}: {len(peaks)} peaks"]
    lines += [f"  k={tuple(round(x, 6) for x in pk.k)} I={_fmt(pk.intensity)}" for pk in top]
    lines += [f"wrote {f}" for f in files]
    _emit(args, summary, lines)
    return 0


# --- windows -------------------------------------------------------------------


def _window_summary(rule: InflationRule, res: int) -> tuple[dict, object]:
    ws = solve_windows(window_ifs(rule), res, inner=False)
    areas = window_areas(ws)
    summary = {
        "rule": rule.name,
        "resolution": res,
        "areas_lower": [a for a, _ in areas],
        "areas_upper": [b for _, b in areas],
        "bitmap_areas": ws.bitmap_areas(),
        "certified_polygons": ws.polygons is not None,
    }
    if rule.dim == 2:
        wc = classify(rule, ws)
        summary["class"] = wc.tag
        summary["boundary_dim_estimate"] = wc.dimension
    else:
        summary["class"] = "interval"
        summary["boundary_dim_estimate"] = 0.0
    return summary, ws


def cmd_windows(args) -> int:
    rule = parse_rule(args.rule)
    summary, ws = _window_summary(rule, args.res)
    out = _outdir(args)
    stem = f"windows_{_slug(rule)}"
    img = out / f"{stem}.ppm"
    render.write_ppm(img, render.window_image(ws))
    files = [str(img)]
    if args.png:
        fig = out / f"{stem}.png"
        render.window_figure(ws, fig, rule.name)
        files.append(str(fig))
    js = out / f"{stem}.json"
    js.write_text(json.dumps(summary, indent=2) + "\n")
    files.append(str(js))
    summary["files"] = files
    lines = [f"{rule.name}: class {summary['class']}"]
    for i, (lo, hi) in enumerate(zip(summary["areas_lower"], summary["areas_upper"])):
        lines.append(f"  W{i}: area in [{_fmt(lo)}, {_fmt(hi)}]")
    lines += [f"wrote {f}" for f in files]
    _emit(args, summary, lines)
    return 0


# --- catalog -------------------------------------------------------------------


def _catalog_row(code: tuple[int, int, int], res: int) -> dict:
    entry: CatalogEntry = classify_code(code, res)
    wc = entry.window_class
    row = {
        "code": list(entry.code),
        "class": wc.tag,
        "areas": [[lo, hi] for lo, hi in entry.areas],
        "certified": wc.certified,
    }
    if wc.tag in ("original-rectangle", "parallelogram"):
        # vertical edges have infinite slope, which JSON cannot carry as a number
        row["slopes"] = [[x if math.isfinite(x) else "inf" for x in hs] for hs in wc.slopes]
    else:
        row["dimension"] = wc.dimension
    anchors = {}
    if entry.code in ORIGINAL_CODES:
        anchors["original"] = wc.tag == "original-rectangle"
    if entry.code == (0, 0, 1):
        anchors["parallelogram"] = wc.tag == "parallelogram"
    if entry.code == (0, 0, 6):
        anchors["castle"] = wc.tag == "castle"
    row["anchors"] = anchors
    return row


def _catalog_worker(task):
    code, res = task
    return _catalog_row(code, res)


def build_catalog(res: int = 1024, threads: int | None = 1) -> dict:
    codes = [c.as_tuple() for c in all_dpv_codes()]
    rows = _pool(threads, _catalog_worker, [(c, res) for c in codes])
    census = {t: 0 for t in ("original-rectangle", "parallelogram", "castle", "cross", "island")}
    for r in rows:
        census[r["class"]] += 1
    return {"resolution": res, "entries": rows, "census": census}


def validate_catalog(doc: dict) -> None:
    import jsonschema
    from importlib.resources import files

    schema = json.loads(files("fibvar").joinpath("data/catalog.schema.json").read_text())
    jsonschema.validate(doc, schema)


def cmd_catalog(args) -> int:
    doc = build_catalog(args.res, args.threads)
    validate_catalog(doc)
    out = _outdir(args)
    path = out / "catalog.json"
    path.write_text(json.dumps(doc, indent=2) + "\n")
    lines = [f"{tag}: {n}" for tag, n in doc["census"].items()]
    lines.append(f"wrote {path}")
    _emit(args, {"census": doc["census"], "files": [str(path)]}, lines)
    return 0


# --- random --------------------------------------------------------------------


def cmd_random(args) -> int:
    if not 0.0 <= args.p <= 1.0:
        raise CliError("p must lie in [0, 1]")
    u = _weights(args.weights or "1,-1,0", 3)
    rd = randomized_diffraction(args.p, u[0], u[1], u[2], args.kmax, args.ystarmax)
    out = _outdir(args)
    tag = f"p{args.p:g}_seed{args.seed}"
    pp_path = out / f"random_pp_{tag}.csv"
    pp_path.write_text(peaks_to_csv(rd.pp, 1))
    mc = monte_carlo_random_chain(args.p, tuple(u), args.tiles, args.seed)
    z = mc.zscores
    rows = []
    n_pairs = len(LABELS)
    for n, zz in enumerate(mc.zs):
        for a in range(n_pairs):
            for b in range(n_pairs):
                rows.append(
                    {
                        "z": list(zz),
                        "pair": f"{LABELS[a]},{LABELS[b]}",
                        "empirical": float(mc.empirical.values[a, b, n]),
                        "theory": float(mc.theory.values[a, b, n]),
                        "stderr": float(mc.stderr[a, b, n]),
                        "zscore": float(z[a, b, n]) if math.isfinite(z[a, b, n]) else None,
                    }
                )
    report = {
        "p": args.p,
        "seed": args.seed,
        "n_tiles": mc.n_tiles,
        "weights": [[c.real, c.imag] for c in map(complex, u)],
        "ac_density": rd.ac_density,
        "candidates": mc.candidates,
        "extra_mass": mc.extra_mass,
        "selected_candidate": mc.selected_candidate(),
        "max_abs_z": mc.max_abs_z(),
        "pair_correlations": rows,
    }
    rep_path = out / f"random_report_{tag}.json"
    rep_path.write_text(json.dumps(report, indent=2) + "\n")
    lines = [
        f"p={args.p:g} seed={args.seed} tiles={mc.n_tiles}",
        f"  ac density {_fmt(rd.ac_density)}",
        f"  extra mass at 0: {_fmt(mc.extra_mass)}",
    ]
    lines += [f"  candidate {k}: {_fmt(v)}" for k, v in mc.candidates.items()]
    lines.append(f"  selected: {mc.selected_candidate()}")
    lines.append(f"  max |z| over {len(mc.zs)} distances: {mc.max_abs_z():.3f}")
    lines += [f"wrote {pp_path}", f"wrote {rep_path}"]
    _emit(args, {k: v for k, v in report.items() if k != "pair_correlations"}, lines)
    return 0


# --- patch / oracle ---------------------------------------------------------------


def _bounded_steps(rule: InflationRule, steps: int) -> int:
    M = np.array([[len(rule.displacements[i][j]) for j in range(rule.size)] for i in range(rule.size)], dtype=np.int64)
    col = np.zeros(rule.size, dtype=np.int64)
    col[0] = 1
    for _ in range(steps):
        col = M @ col
        if col.sum() > MAX_PATCH_TILES:
            raise CliError(f"{steps} steps exceed {MAX_PATCH_TILES} tiles")
    return steps


def cmd_patch(args) -> int:
    rule = parse_rule(args.rule)
    seed_tile = rule.size - 1
    if args.steps < 0:
        raise CliError("steps must be non-negative")
    _bounded_steps(rule, args.steps)
    patch = generate_patch(rule, args.steps, seed_tile)
    out = _outdir(args)
    stem = f"patch_{_slug(rule)}_{args.steps}"
    svg = out / f"{stem}.svg"
    svg.write_text(render.patch_svg(patch))
    js = out / f"{stem}.json"
    js.write_text(patch.to_json() + "\n")
    counts = patch.counts().tolist()
    _emit(
        args,
        {"rule": rule.name, "steps": args.steps, "tiles": len(patch), "counts": counts, "files": [str(svg), str(js)]},
        [f"{rule.name}: {len(patch)} tiles after {args.steps} steps, counts {counts}", f"wrote {svg}", f"wrote {js}"],
    )
    return 0


def oracle_table(rule: InflationRule, kmax: float, ystarmax: float, n_tiles: int, top: int = 20) -> dict:
    """Closed form (when known), cocycle and patch-sum amplitudes side by side."""
    ev = CocycleEvaluator(rule)
    ks = enumerate_module(rule.dim, kmax, ystarmax)
    coc = ev.amplitudes(ks)
    closed = None
    if rule.dim == 1 and rule.size == 2:
        closed = np.array([closed_form_1d(k) for k in ks])
    elif rule.dim == 2:
        first = closed_form_product(rule, ks[0])
        if first is not None:
            closed = np.array([closed_form_product(rule, k) for k in ks])
    dev_closed = float(np.max(np.abs(coc - closed))) if closed is not None else None
    seed_tile = rule.size - 1
    patch = generate_patch(rule, steps_for_tiles(rule, n_tiles, seed_tile), seed_tile)
    # relative patch deviation on the strongest peaks of the unit-weight pattern
    strength = np.abs(coc.sum(axis=1))
    order = np.lexsort((np.arange(len(ks)), -strength))[:top]
    rows, rel = [], []
    for n in order:
        ap = patch_amplitude(patch, ks[n])
        ac = coc[n]
        r = float(np.max(np.abs(ap - ac)) / np.max(np.abs(ac)))
        rel.append(r)
        row = {
            "index": list(ks[n].flat()),
            "k": list(ks[n].value()),
            "cocycle": [[a.real, a.imag] for a in ac],
            "patch": [[a.real, a.imag] for a in ap],
            "rel_dev_patch": r,
        }
        if closed is not None:
            row["closed_form"] = [[a.real, a.imag] for a in closed[n]]
        rows.append(row)
    return {
        "rule": rule.name,
        "n_points": len(ks),
        "n_tiles": len(patch),
        "max_dev_cocycle_closed_form": dev_closed,
        "max_rel_dev_patch": max(rel) if rel else 0.0,
        "peaks": rows,
    }


def cmd_oracle(args) -> int:
    rule = parse_rule(args.rule)
    if args.tiles > MAX_PATCH_TILES:
        raise CliError(f"at most {MAX_PATCH_TILES} tiles")
    table = oracle_table(rule, args.kmax, args.ystarmax, args.tiles)
    out = _outdir(args)
    path = out / f"oracle_{_slug(rule)}.json"
    path.write_text(json.dumps(table, indent=2) + "\n")
    dc = table["max_dev_cocycle_closed_form"]
    lines = [
        f"{rule.name}: {table['n_points']} module points, patch of {table['n_tiles']} tiles",
        f"  max |cocycle - closed form| = {'n/a' if dc is None else f'{dc:.3e}'}",
        f"  max relative patch deviation (top {len(table['peaks'])}) = {table['max_rel_dev_patch']:.3e}",
        f"wrote {path}",
    ]
    _emit(args, {k: v for k, v in table.items() if k != "peaks"}, lines)
    return 0


# --- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fibvar", description="Fibonacci-type tilings: diffraction, windows and variants.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, rule=True):
        if rule:
            sp.add_argument("--rule", default="fib1d", help="builtin name or dpv:i1,i2,i3")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--json", action="store_true", help="print a JSON summary")
        sp.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")

    sp = sub.add_parser("diffract", help="Bragg peaks, CSV and disk image")
    common(sp)
    sp.add_argument("--kmax", type=float, default=2.0)
    sp.add_argument("--ystarmax", type=float, default=40.0)
    sp.add_argument("--weights", default=None, help="comma-separated scattering strengths, one per tile type")
    sp.add_argument("--res", type=int, default=512, help="image size in pixels")
    sp.add_argument("--png", action="store_true", help="also render a matplotlib PNG")
    sp.set_defaults(func=cmd_diffract)

    sp = sub.add_parser("windows", help="solve the window IFS and classify")
    common(sp)
    sp.add_argument("--res", type=int, default=1024)
    sp.add_argument("--png", action="store_true", help="also render a matplotlib PNG")
    sp.set_defaults(func=cmd_windows)

    sp = sub.add_parser("catalog", help="classify all 48 direct-product variations")
    common(sp, rule=False)
    sp.add_argument("--res", type=int, default=1024)
    sp.set_defaults(func=cmd_catalog)

    sp = sub.add_parser("random", help="randomly relabelled Fibonacci chain")
    common(sp, rule=False)
    sp.add_argument("--p", type=float, default=0.5, help="probability that an a-tile keeps its label")
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--tiles", type=_count, default=10**6)
    sp.add_argument("--weights", default=None, help="u_a,u_a_,u_b (default 1,-1,0)")
    sp.add_argument("--kmax", type=float, default=5.0)
    sp.add_argument("--ystarmax", type=float, default=20.0)
    sp.set_defaults(func=cmd_random)

    sp = sub.add_parser("patch", help="inflate a patch, write SVG and JSON")
    common(sp)
    sp.add_argument("--steps", type=int, default=6)
    sp.set_defaults(func=cmd_patch)

    sp = sub.add_parser("oracle", help="compare closed form, cocycle and patch amplitudes")
    common(sp)
    sp.add_argument("--kmax", type=float, default=5.0)
    sp.add_argument("--ystarmax", type=float, default=20.0)
    sp.add_argument("--tiles", type=_count, default=10**5)
    sp.set_defaults(func=cmd_oracle)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "res", 8) < 8:
            raise CliError("res must be at least 8")
        return args.func(args)
    except (CliError, ValueError, OSError, AmbiguousClassification, OverflowError) as exc:
        msg = " ".join(str(exc).split())
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
