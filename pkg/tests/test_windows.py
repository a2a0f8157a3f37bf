import math

import numpy as np
import pytest

from fibvar.golden import TAU
from fibvar.inflation import all_dpv_codes, builtin_rule, dpv_rule, pf_data
from fibvar.windows import (
    BOX_HALF,
    DIMENSIONS,
    AmbiguousClassification,
    Grid,
    box_counts,
    certify_intervals,
    classify,
    diagonal_reflection,
    hausdorff_dimension,
    invariance_defect,
    largest_real_root,
    raster_hausdorff,
    rasterize_boxes,
    rasterize_intervals,
    rasterize_polygon,
    sampled_windows,
    shift_variogram,
    solve_windows,
    window_areas,
    window_ifs,
)

WA = (TAU - 2, TAU - 1)
WB = (-1.0, TAU - 2)


def test_box_is_invariant_for_every_rule():
    rules = [dpv_rule(c) for c in all_dpv_codes()] + [builtin_rule("fib1d"), builtin_rule("twisted4")]
    for r in rules:
        ifs = window_ifs(r)
        assert ifs.box_is_invariant(BOX_HALF), r.name
        # the wider box [-2, 2] would not be needed; [-tau^2, tau^2] already is
        assert ifs.invariant_half_width() <= BOX_HALF + 1e-12


@pytest.mark.parametrize("code", [(0, 0, 0), (0, 0, 5), (1, 1, 0), (0, 1, 4)])
def test_outer_raster_invariance(code):
    ws = solve_windows(window_ifs(dpv_rule(code)), 256, inner=False, sample=False)
    assert invariance_defect(ws) <= 2.0


def test_1d_windows_exact(fib_rule):
    ws = solve_windows(window_ifs(fib_rule), 2048, inner=False)
    assert ws.polygons.float_intervals() == pytest.approx([WA, WB])
    assert np.ravel(window_areas(ws)) == pytest.approx([1.0, 1.0, TAU - 1, TAU - 1])
    iv = rasterize_intervals(ws.grid, [WA, WB])
    assert all(raster_hausdorff(a, b) <= 1.0 for a, b in zip(ws.outer, iv))


def test_twisted_certificate():
    cert = certify_intervals(window_ifs(builtin_rule("twisted4")))
    assert cert.float_intervals() == pytest.approx([WA, WA, WB, WB])


def test_original_polygons_are_rectangles():
    ws = solve_windows(window_ifs(dpv_rule((0, 0, 0))), 512, inner=False)
    boxes = [(WB, WB), (WA, WB), (WB, WA), (WA, WA)]
    for poly, (bx, by) in zip(ws.polygons.float_polygons(), boxes):
        assert poly[:, 0].min() == pytest.approx(bx[0]) and poly[:, 0].max() == pytest.approx(bx[1])
        assert poly[:, 1].min() == pytest.approx(by[0]) and poly[:, 1].max() == pytest.approx(by[1])
    assert np.ravel(window_areas(ws)) == pytest.approx(np.repeat([1 / TAU**2, 1 / TAU, 1 / TAU, 1.0], 2))
    rect = rasterize_boxes(ws.grid, boxes)
    assert all(raster_hausdorff(a, b, "chessboard") <= 1.0 for a, b in zip(ws.outer, rect))


def test_shear_windows():
    """The (0,0,1) windows are S W + c with S = [[1, -1], [0, 1]]."""
    S = np.array([[1.0, -1.0], [0.0, 1.0]])
    w0 = solve_windows(window_ifs(dpv_rule((0, 0, 0))), 64, inner=False, sample=False)
    w1 = solve_windows(window_ifs(dpv_rule((0, 0, 1))), 64, inner=False, sample=False)
    p0 = [p @ S.T for p in w0.polygons.float_polygons()]
    p1 = w1.polygons.float_polygons()
    shift = p1[3].mean(axis=0) - p0[3].mean(axis=0)
    for a, b in zip(p0, p1):
        assert sorted(map(tuple, np.round(a + shift, 9))) == sorted(map(tuple, np.round(b, 9)))
    ws = sampled_windows(dpv_rule((0, 0, 1)), 512)
    for a, poly in zip(ws.sample, p0):
        ref = rasterize_polygon(ws.grid, poly + shift)
        assert raster_hausdorff(a, ref, "chessboard") <= 2.0


def test_translation_moves_windows_by_offset_over_tau():
    ifs = window_ifs(dpv_rule((0, 0, 1)))
    half = 3.5
    grid = Grid(256, half, 2)
    m = (5, -3)  # whole-pixel window shift
    offset = tuple(TAU * k * grid.h for k in m)
    a = solve_windows(ifs, 256, half=half, inner=False, sample=False)
    b = solve_windows(ifs.translated(offset), 256, half=half, inner=False, sample=False)
    for ra, rb in zip(a.outer, b.outer):
        rolled = np.roll(np.roll(ra, m[0], axis=1), m[1], axis=0)
        assert raster_hausdorff(rolled, rb, "chessboard") <= 1.0


def test_area_ratios_follow_frequencies():
    rule = dpv_rule((0, 1, 1))
    ws = sampled_windows(rule, 1024)
    v = pf_data(window_ifs(rule).counts()).v
    cov = np.array(ws.coverage)
    assert cov / cov.sum() == pytest.approx(v / v.sum(), rel=0.03)


def test_castle_reflections():
    """Two castles are diagonal-symmetric; the other two swap."""
    b = {c: sampled_windows(dpv_rule(c), 256).sample[3] for c in [(0, 0, 6), (0, 1, 3), (1, 0, 9), (1, 1, 0)]}

    def refl(x):
        return diagonal_reflection(np.stack([x, x, x, x]))[3]

    assert np.array_equal(refl(b[(0, 0, 6)]), b[(0, 0, 6)])
    assert np.array_equal(refl(b[(1, 1, 0)]), b[(1, 1, 0)])
    assert np.array_equal(refl(b[(0, 1, 3)]), b[(1, 0, 9)])


def test_hausdorff_dimensions():
    for tag, ref in DIMENSIONS.items():
        assert hausdorff_dimension(tag) == pytest.approx(ref, abs=1e-3)
    # root of the castle polynomial, frozen
    assert largest_real_root((1, -4, 5, -3)) == pytest.approx(2.4655712318767682, abs=1e-12)
    with pytest.raises(ValueError):
        hausdorff_dimension("square")


def test_dimension_estimators_on_a_disc():
    R = 1024
    y, x = np.mgrid[0:R, 0:R]
    disc = (x - R / 2) ** 2 + (y - R / 2) ** 2 < (R / 3) ** 2
    scales = [2, 4, 8, 16, 32, 64]
    assert box_counts(disc, scales).slope == pytest.approx(1.0, abs=0.05)
    S = shift_variogram(disc, scales)
    assert 2 - np.polyfit(np.log(scales), np.log(S), 1)[0] == pytest.approx(1.0, abs=0.05)
    with pytest.raises(ValueError):
        box_counts(disc, scales[:4])


def test_classify_polygons():
    for code, tag in [((0, 0, 0), "original-rectangle"), ((1, 1, 6), "original-rectangle"), ((0, 0, 1), "parallelogram")]:
        rule = dpv_rule(code)
        wc = classify(rule, sampled_windows(rule, 1024))
        assert wc.tag == tag and wc.certified
        assert wc.hull_vertices == [4, 4, 4, 4]


def test_resolution_checks():
    ifs = window_ifs(dpv_rule((0, 0, 0)))
    with pytest.raises(ValueError):
        solve_windows(ifs, 100)
    with pytest.raises(ValueError):
        solve_windows(ifs, 64, tol=1e-6)


def test_ambiguity_is_raised(monkeypatch):
    import fibvar.windows as w

    rule = dpv_rule((0, 0, 7))
    fine = sampled_windows(rule, 256)
    mid = 0.5 * (DIMENSIONS["cross"] + DIMENSIONS["island"])
    monkeypatch.setattr(w, "boundary_dimension_estimate", lambda ws, i, scales=None: mid)
    with pytest.raises(AmbiguousClassification):
        classify(rule, fine, fine=fine)
