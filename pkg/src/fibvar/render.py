"""Images: diffraction disks, window rasters and tiling patches.

Raw rasters are written as binary PPM (P6) with numpy alone; PNG output goes
through matplotlib with the ``Software`` metadata removed so files are
byte-stable across runs.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .diffraction import Peak
from .golden import TAU
from .inflation import Patch
from .windows import WindowSet

# red, yellow, green, blue for windows / tile types 0..3
PALETTE = np.array(
    [[220, 40, 40], [240, 200, 30], [40, 170, 60], [40, 80, 220]], dtype=np.uint8
)
WHITE = np.array([255, 255, 255], dtype=np.uint8)
BLACK = np.array([0, 0, 0], dtype=np.uint8)
GREY = np.array([150, 150, 150], dtype=np.uint8)
PNG_METADATA = {"Software": None}


def _colour(i: int) -> np.ndarray:
    return PALETTE[i % len(PALETTE)]


def _hex(i: int) -> str:
    r, g, b = (int(c) for c in _colour(i))
    return f"#{r:02x}{g:02x}{b:02x}"


def write_ppm(path, rgb: np.ndarray) -> None:
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("expected an (h, w, 3) array")
    h, w, _ = rgb.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise ValueError("only 8-bit PPM is supported")
    return np.frombuffer(parts[4][: w * h * 3], dtype=np.uint8).reshape(h, w, 3)


def save_raster(path, rgb: np.ndarray) -> None:
    """PPM or PNG depending on the file suffix."""
    suffix = Path(path).suffix.lower()
    if suffix == ".ppm":
        write_ppm(path, rgb)
    elif suffix == ".png":
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        plt.imsave(path, rgb, metadata=PNG_METADATA)
    else:
        raise ValueError(f"unsupported image format {suffix!r}")


# --- diffraction -------------------------------------------------------------


def diffraction_image(
    peaks: Sequence[Peak], dim: int, kmax: float, size: int = 512, max_radius: float | None = None
) -> np.ndarray:
    """Filled disks centred at the peaks with area proportional to intensity.

    The view is ``[-kmax, kmax]^d``; one-dimensional patterns are drawn along
    the horizontal midline.  Disks with radius under half a pixel are skipped.
    """
    if kmax <= 0:
        raise ValueError("kmax must be positive")
    img = np.full((size, size, 3), 255, dtype=np.uint8)
    inten = np.array([pk.intensity for pk in peaks], dtype=float)
    if len(inten) == 0 or inten.max() <= 0:
        return img
    rmax = size / 30.0 if max_radius is None else max_radius
    scale = (size - 1) / (2.0 * kmax)
    yy, xx = np.mgrid[0:size, 0:size]
    # draw weak peaks first so strong disks stay on top
    for n in np.argsort(inten, kind="stable"):
        r = rmax * math.sqrt(inten[n] / inten.max())
        if r < 0.5:
            continue
        k = peaks[n].k
        cx = (k[0] + kmax) * scale
        cy = (size - 1) / 2.0 if dim == 1 else (kmax - k[1]) * scale
        x0, x1 = max(0, int(cx - r) - 1), min(size, int(cx + r) + 2)
        y0, y1 = max(0, int(cy - r) - 1), min(size, int(cy + r) + 2)
        if x0 >= x1 or y0 >= y1:
            continue
        sub = (xx[y0:y1, x0:x1] - cx) ** 2 + (yy[y0:y1, x0:x1] - cy) ** 2 <= r * r
        img[y0:y1, x0:x1][sub] = BLACK
    return img


def diffraction_figure(peaks: Sequence[Peak], dim: int, kmax: float, path, title: str = "") -> None:
    """Annotated matplotlib rendering of the same disks."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 6 if dim == 2 else 2.5))
    inten = np.array([pk.intensity for pk in peaks], dtype=float)
    if len(inten) and inten.max() > 0:
        keep = inten > 1e-6 * inten.max()
        ks = np.array([pk.k for pk in peaks], dtype=float)[keep]
        xs = ks[:, 0]
        ys = np.zeros_like(xs) if dim == 1 else ks[:, 1]
        ax.scatter(xs, ys, s=200.0 * inten[keep] / inten.max(), c="k", linewidths=0)
    ax.set_xlim(-kmax, kmax)
    ax.set_xlabel("$k_1$")
    if dim == 2:
        ax.set_ylim(-kmax, kmax)
        ax.set_aspect("equal")
        ax.set_ylabel("$k_2$")
    else:
        ax.set_yticks([])
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, metadata=PNG_METADATA)
    plt.close(fig)


# --- windows -----------------------------------------------------------------


def _to_pixel(x: float, half: float, R: int) -> int:
    return int(round((x + half) / (2.0 * half) * (R - 1)))


def window_image(ws: WindowSet, rasters: np.ndarray | None = None) -> np.ndarray:
    """Colour-coded windows with axes and the ``[-tau, tau]^d`` box outlined.

    Planar rasters are indexed ``[y, x]`` with ``y`` increasing upwards in the
    image.  Intervals are drawn as one horizontal band per window.
    """
    rasters = ws.bitmap() if rasters is None else rasters
    R, half = ws.grid.R, ws.grid.half
    if ws.ifs.dim == 2:
        img = np.full((R, R, 3), 255, dtype=np.uint8)
        for i in range(len(rasters)):
            img[rasters[i][::-1]] = _colour(i)
        c = _to_pixel(0.0, half, R)
        img[:, c] = np.where(img[:, c] == WHITE, GREY, img[:, c])
        img[R - 1 - c, :] = np.where(img[R - 1 - c, :] == WHITE, GREY, img[R - 1 - c, :])
        lo, hi = _to_pixel(-TAU, half, R), _to_pixel(TAU, half, R)
        img[R - 1 - hi : R - lo, lo] = BLACK
        img[R - 1 - hi : R - lo, hi] = BLACK
        img[R - 1 - hi, lo : hi + 1] = BLACK
        img[R - 1 - lo, lo : hi + 1] = BLACK
        return img
    band = max(4, R // 32)
    n = len(rasters)
    img = np.full((band * (n + 1), R, 3), 255, dtype=np.uint8)
    for i in range(n):
        rows = slice(band * i + band // 4, band * (i + 1) - band // 4 + band // 2)
        img[rows][:, rasters[i]] = _colour(i)
    axis = band * n + band // 2
    img[axis, :] = GREY
    img[:, _to_pixel(0.0, half, R)] = GREY
    for x in (-TAU, TAU):
        img[:, _to_pixel(x, half, R)] = BLACK
    return img


def window_figure(ws: WindowSet, path, title: str = "") -> None:
    """Matplotlib rendering with labelled axes and the box ``[-tau, tau]^d``."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.patches import Rectangle

    rasters = ws.bitmap()
    half = ws.grid.half
    fig, ax = plt.subplots(figsize=(6, 6 if ws.ifs.dim == 2 else 2.5))
    if ws.ifs.dim == 2:
        rgba = np.zeros(rasters.shape[1:] + (4,))
        for i in range(len(rasters)):
            rgba[rasters[i], :3] = _colour(i) / 255.0
            rgba[rasters[i], 3] = 1.0
        ax.imshow(rgba, origin="lower", extent=(-half, half, -half, half), interpolation="nearest")
        ax.add_patch(Rectangle((-TAU, -TAU), 2 * TAU, 2 * TAU, fill=False, ec="k", lw=0.8))
        ax.axhline(0.0, color="0.6", lw=0.5)
        ax.axvline(0.0, color="0.6", lw=0.5)
        ax.set_aspect("equal")
        ax.set_ylim(-half, half)
        ax.set_ylabel("$y_2$")
    else:
        xs = ws.grid.centers()
        for i in range(len(rasters)):
            ax.fill_between(xs, i + 0.2, i + 0.8, where=rasters[i], color=_colour(i) / 255.0, step="mid")
        ax.axvline(-TAU, color="k", lw=0.8)
        ax.axvline(TAU, color="k", lw=0.8)
        ax.axvline(0.0, color="0.6", lw=0.5)
        ax.set_yticks([i + 0.5 for i in range(len(rasters))], [str(i) for i in range(len(rasters))])
    ax.set_xlim(-half, half)
    ax.set_xlabel("$y_1$")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, metadata=PNG_METADATA)
    plt.close(fig)


# --- patches -----------------------------------------------------------------


def patch_svg(patch: Patch, unit: float = 20.0) -> str:
    """SVG with one rectangle per tile, coloured by type, stroke ``0.02 tau``."""
    rule = patch.rule
    pos = patch.positions()
    ext = np.array([[float(e) for e in p.extent] for p in rule.prototiles])
    if rule.dim == 1:
        pos = np.column_stack([pos[:, 0], np.zeros(len(pos))])
        ext = np.column_stack([ext[:, 0], np.ones(len(ext))])
    size = ext[patch.types]
    hi = (pos + size).max(axis=0) if len(pos) else np.zeros(2)
    lo = pos.min(axis=0) if len(pos) else np.zeros(2)
    stroke = 0.02 * TAU
    w, h = hi - lo
    lines = [
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{w * unit:.3f}" height="{h * unit:.3f}" '
        f'viewBox="{lo[0] - stroke:.6f} {-hi[1] - stroke:.6f} {w + 2 * stroke:.6f} {h + 2 * stroke:.6f}">',
        f'<g stroke="#000000" stroke-width="{stroke:.6f}">',
    ]
    for t, p, s in zip(patch.types.tolist(), pos, size):
        # flip y so the patch grows upwards
        lines.append(
            f'<rect x="{p[0]:.6f}" y="{-(p[1] + s[1]):.6f}" width="{s[0]:.6f}" height="{s[1]:.6f}" fill="{_hex(t)}"/>'
        )
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
