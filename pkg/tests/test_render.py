import numpy as np
import pytest

from fibvar.diffraction import diffract
from fibvar.golden import TAU
from fibvar.inflation import builtin_rule, dpv_rule, generate_patch
from fibvar.render import (
    PALETTE,
    diffraction_image,
    patch_svg,
    read_ppm,
    save_raster,
    window_image,
    write_ppm,
)
from fibvar.windows import solve_windows, window_ifs


def test_ppm_roundtrip(tmp_path):
    rgb = np.random.default_rng(0).integers(0, 256, (7, 5, 3), dtype=np.uint8)
    write_ppm(tmp_path / "a.ppm", rgb)
    assert np.array_equal(read_ppm(tmp_path / "a.ppm"), rgb)
    with pytest.raises(ValueError):
        write_ppm(tmp_path / "b.ppm", rgb[..., 0])


def test_png_is_stable_and_has_no_software_tag(tmp_path):
    rgb = np.zeros((8, 8, 3), dtype=np.uint8)
    rgb[2:5, 3:6] = PALETTE[1]
    save_raster(tmp_path / "a.png", rgb)
    save_raster(tmp_path / "b.png", rgb)
    a = (tmp_path / "a.png").read_bytes()
    assert a == (tmp_path / "b.png").read_bytes()
    assert b"Software" not in a and b"matplotlib" not in a
    with pytest.raises(ValueError):
        save_raster(tmp_path / "a.gif", rgb)


def test_diffraction_disks_scale_with_intensity():
    rule = builtin_rule("fib1d")
    peaks = diffract(rule, [1.0, 1.0], 2.0, 20.0)
    img = diffraction_image(peaks, 1, 2.0, size=201)
    mid = img[100]
    # the central peak is the strongest, so its disk is centred in the image
    assert tuple(mid[100]) == (0, 0, 0)
    assert np.count_nonzero(np.all(img == 0, axis=2)) > 0
    with pytest.raises(ValueError):
        diffraction_image(peaks, 1, 0.0)


def test_window_image_draws_box_and_colours():
    ws = solve_windows(window_ifs(dpv_rule((0, 0, 0))), 128, inner=False, sample=False)
    img = window_image(ws)
    assert img.shape == (128, 128, 3)
    colours = {tuple(c) for c in img.reshape(-1, 3)}
    for c in PALETTE:
        assert tuple(c) in colours
    assert (0, 0, 0) in colours


def test_patch_svg_has_one_rect_per_tile():
    patch = generate_patch(dpv_rule((0, 0, 0)), 3, 3)
    svg = patch_svg(patch)
    assert svg.count("<rect") == len(patch)
    assert f'stroke-width="{0.02 * TAU:.6f}"' in svg
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
