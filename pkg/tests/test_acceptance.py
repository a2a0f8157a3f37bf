"""Acceptance criteria 1-9, one test each; results are echoed after the run."""

import json
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from fibvar.cli import main, oracle_table
from fibvar.cocycle import CocycleEvaluator, cocycle_product
from fibvar.diffraction import diffract, enumerate_module, monte_carlo_random_chain, shear_check, twisted_intensities
from fibvar.golden import TAU
from fibvar.inflation import builtin_rule, dpv_rule, substitution_matrix
from fibvar.windows import (
    DIMENSION_RESOLUTION,
    ORIGINAL_CODES,
    boundary_dimension_estimate,
    hausdorff_dimension,
    raster_hausdorff,
    rasterize_boxes,
    rasterize_intervals,
    sampled_windows,
    solve_windows,
    window_ifs,
)

pytestmark = pytest.mark.slow

WA = (TAU - 2, TAU - 1)
WB = (-1.0, TAU - 2)
TARGET_AREAS = ((TAU - 1) ** 2, TAU - 1, TAU - 1, 1.0)


def report(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def catalog_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("catalog_a")
    t0 = time.perf_counter()
    assert main(["catalog", "--res", "1024", "--out", str(out)]) == 0
    elapsed = time.perf_counter() - t0
    path = out / "catalog.json"
    return json.loads(path.read_text()), path, elapsed


def test_criterion_1_oracle():
    t0 = time.perf_counter()
    table = oracle_table(builtin_rule("fib1d"), 5.0, 20.0, 10**5)
    elapsed = time.perf_counter() - t0
    dev, rel = table["max_dev_cocycle_closed_form"], table["max_rel_dev_patch"]
    ok = dev < 1e-9 and rel < 5e-2 and elapsed < 30.0
    report(
        1, ok,
        f"{table['n_points']} points, |cocycle-closed| {dev:.2e}, patch ({table['n_tiles']} tiles) rel {rel:.2e}, {elapsed:.1f}s",
    )
    assert ok


def _algebra(rule, rng, n_y=100):
    ev = CocycleEvaluator(rule)
    M = substitution_matrix(rule).astype(float)
    lam = ev.pf.lam
    exact = all(
        np.array_equal(cocycle_product(ev.B, np.zeros(rule.dim), n).real.round(), np.linalg.matrix_power(M, n))
        and np.max(np.abs(cocycle_product(ev.B, np.zeros(rule.dim), n) - np.linalg.matrix_power(M, n))) == 0
        for n in range(1, 13)
    )
    split = fix = rank = 0.0
    for _ in range(n_y):
        y = rng.uniform(-10, 10, rule.dim)
        n, m = rng.integers(1, 8, 2)
        lhs = cocycle_product(ev.B, y, n + m)
        rhs = cocycle_product(ev.B, y, n) @ cocycle_product(ev.B, (-1 / TAU) ** n * y, m)
        split = max(split, float(np.max(np.abs(lhs - rhs)) / max(1.0, np.max(np.abs(lhs)))))
        C = ev.scaled_product(y, 80)
        fix = max(fix, float(np.linalg.norm(lam * C - C @ M)))
        s = np.linalg.svd(C, compute_uv=False)
        rank = max(rank, float(s[1] / s[0]))
    return exact, split, fix, rank


def test_criterion_2_cocycle_algebra():
    rng = np.random.default_rng(2024)
    details, ok = [], True
    for rule in (builtin_rule("fib1d"), dpv_rule((0, 0, 6))):
        exact, split, fix, rank = _algebra(rule, rng)
        ok &= exact and split < 1e-12 and fix < 1e-8 and rank < 1e-8
        details.append(f"{rule.name}: B(0)^n=M^n {exact}, split {split:.1e}, |lam C - C M| {fix:.1e}, s2/s1 {rank:.1e}")
    report(2, ok, "; ".join(details))
    assert ok


def test_criterion_3_windows(catalog_run):
    doc, _, elapsed = catalog_run
    ws = solve_windows(window_ifs(dpv_rule((0, 0, 0))), 1024, inner=False, sample=False)
    rect = rasterize_boxes(ws.grid, [(WB, WB), (WA, WB), (WB, WA), (WA, WA)])
    hd = max(raster_hausdorff(a, b, "chessboard") for a, b in zip(ws.outer, rect))
    contained, narrow, widest = 0, 0, 0.0
    for e in doc["entries"]:
        c = all(lo - 1e-9 <= t <= hi + 1e-9 for (lo, hi), t in zip(e["areas"], TARGET_AREAS))
        w = max(hi - lo for lo, hi in e["areas"])
        contained += c
        narrow += w < 0.01
        widest = max(widest, w)
    ok = hd <= 1.0 and contained == 48 and narrow == 48 and elapsed < 600
    report(
        3, ok,
        f"(0,0,0) raster distance {hd:.0f}px; brackets contain targets {contained}/48, "
        f"width<0.01 {narrow}/48 (widest {widest:.3f}); catalog {elapsed:.0f}s",
    )
    assert ok


def test_criterion_4_census(catalog_run):
    doc, _, _ = catalog_run
    tags = {tuple(e["code"]): e["class"] for e in doc["entries"]}
    originals = {c for c, t in tags.items() if t == "original-rectangle"}
    expected = {"original-rectangle": 4, "parallelogram": 24, "castle": 4, "cross": 8, "island": 8}
    ok = (
        doc["census"] == expected
        and originals == set(ORIGINAL_CODES)
        and tags[(0, 0, 1)] == "parallelogram"
        and tags[(0, 0, 6)] == "castle"
    )
    report(4, ok, f"census {doc['census']}; originals {sorted(originals)}")
    assert ok


def test_criterion_5_shear():
    ks = enumerate_module(2, 1.5, 4.0)
    rng = np.random.default_rng(5)
    pick = [ks[i] for i in sorted(rng.choice(len(ks), 50, replace=False))]
    rep = shear_check(pick, 1e-9)
    report(5, rep.ok, f"max deviation {rep.max_deviation:.2e} on {rep.n_points} points")
    assert rep.ok


def test_criterion_6_dimensions():
    refs = {"castle": 1.875, "cross": 1.756, "island": 1.561}
    codes = {"castle": (0, 0, 6), "cross": (0, 0, 5), "island": (0, 0, 7)}
    ok, parts = True, []
    for tag, ref in refs.items():
        d = hausdorff_dimension(tag)
        ws = sampled_windows(dpv_rule(codes[tag]), DIMENSION_RESOLUTION)
        est = [boundary_dimension_estimate(ws, i) for i in range(4)]
        ok &= abs(d - ref) < 1e-3 and all(abs(e - d) <= 0.1 for e in est)
        parts.append(f"{tag} {d:.4f} est {min(est):.3f}..{max(est):.3f}")
    report(6, ok, "; ".join(parts))
    assert ok


def test_criterion_7_random_chain():
    ok, parts = True, []
    for u in ((1.0, -1.0, 0.0), (1.0, 0.0, 0.0)):
        for p in (0.2, 0.5):
            mc = monte_carlo_random_chain(p, u, 10**6, 42)
            zmax = mc.max_abs_z()
            sel = mc.selected_candidate()
            ok &= zmax <= 3.0 and sel is not None and len(mc.zs) == 20
            parts.append(f"u={u} p={p}: max|z| {zmax:.2f}, selects {sel}")
    report(7, ok, "; ".join(parts))
    assert ok


def test_criterion_8_twisted(fib_rule):
    rule = builtin_rule("twisted4")
    ev = np.linalg.eigvals(substitution_matrix(rule).astype(float))
    expected = [TAU, 1 - TAU, 0.5 + 0.5j * np.sqrt(3), 0.5 - 0.5j * np.sqrt(3)]
    spec_dev = max(min(abs(e - x) for e in ev) for x in expected)
    ws = solve_windows(window_ifs(rule), 1024, inner=False, sample=False)
    ref = rasterize_intervals(ws.grid, [WA, WA, WB, WB])
    hd = max(raster_hausdorff(a, b) for a, b in zip(ws.outer, ref))
    idev = 0.0
    for ua, ub in ((1.0, 1.0), (1.0, 0.5), (0.3 + 0.4j, -1.0)):
        tw = twisted_intensities([ua, ua, ub, ub], 5.0, 20.0)
        plain = {pk.index: pk.intensity for pk in diffract(fib_rule, [ua, ub], 5.0, 20.0)}
        idev = max(idev, max(abs(pk.intensity - plain[pk.index]) for pk in tw))
    ok = spec_dev < 1e-12 and hd <= 2.0 and idev < 1e-9
    report(8, ok, f"spectrum {spec_dev:.1e}, window distance {hd:.1f}px, intensities {idev:.1e}")
    assert ok


def _same_files(a, b):
    names = sorted(f.name for f in a.iterdir())
    return names == sorted(f.name for f in b.iterdir()) and all(
        (a / n).read_bytes() == (b / n).read_bytes() for n in names
    )


def test_criterion_9_determinism(catalog_run, tmp_path):
    _, first, _ = catalog_run
    second = tmp_path / "catalog_b"
    assert main(["catalog", "--res", "1024", "--out", str(second)]) == 0
    same_catalog = first.read_bytes() == (second / "catalog.json").read_bytes()
    runs = {
        "diffract": ["diffract", "--rule", "dpv:0,0,6", "--kmax", "2", "--ystarmax", "10"],
        "random": ["random", "--p", "0.5", "--seed", "42", "--tiles", "1e5"],
    }
    same = {}
    for name, argv in runs.items():
        for d in ("a", "b"):
            assert main(argv + ["--out", str(tmp_path / name / d)]) == 0
        same[name] = _same_files(tmp_path / name / "a", tmp_path / name / "b")
    ok = same_catalog and all(same.values())
    report(9, ok, f"catalog identical {same_catalog}; " + ", ".join(f"{k} identical {v}" for k, v in same.items()))
    assert ok
