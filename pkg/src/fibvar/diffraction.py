"""Bragg peaks on the Fourier module, brute-force oracles and the random/twisted chains."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .cocycle import CocycleEvaluator
from .golden import SIGMA, SQRT5, TAU, FourierIndex
from .inflation import (
    InflationRule,
    Patch,
    builtin_rule,
    dpv_rule,
    generate_patch,
    steps_for_tiles,
)

DENS_1D = TAU / SQRT5  # control points per unit length in the Fibonacci chain
_CHUNK = 1 << 15
_EPS = 1e-12


def _axis_points(kmax: float, ystarmax: float) -> list[tuple[int, int]]:
    # k = (p + q tau)/sqrt5 and k* = -(p + q sigma)/sqrt5 give q = k + k*,
    # so q is boxed by kmax + ystarmax and p by either constraint.
    qlim = math.floor(kmax + ystarmax + 1e-9)
    out = []
    for q in range(-qlim, qlim + 1):
        lo = max(-SQRT5 * kmax - q * TAU, -SQRT5 * ystarmax - q * SIGMA)
        hi = min(SQRT5 * kmax - q * TAU, SQRT5 * ystarmax - q * SIGMA)
        for p in range(math.floor(lo) - 1, math.ceil(hi) + 2):
            k = (p + q * TAU) / SQRT5
            ks = -(p + q * SIGMA) / SQRT5
            if abs(k) <= kmax + _EPS and abs(ks) <= ystarmax + _EPS:
                out.append((p, q))
    out.sort(key=lambda pq: ((pq[0] + pq[1] * TAU), pq))
    return out


def enumerate_module(d: int, kmax: float, ystarmax: float) -> list[FourierIndex]:
    """All module points with ``|k| <= kmax`` and ``|k*| <= ystarmax`` on every axis."""
    if kmax < 0 or ystarmax < 0:
        raise ValueError("bounds must be non-negative")
    axis = _axis_points(kmax, ystarmax)
    return [FourierIndex(tuple(c)) for c in product(axis, repeat=d)]


@dataclass
class Peak:
    index: FourierIndex
    k: tuple[float, ...]
    kstar: tuple[float, ...]
    amplitudes: np.ndarray = field(repr=False)
    intensity: float
    weighted_amplitude: complex = 0j


def _amplitude_matrix(ev: CocycleEvaluator, ks: Sequence[FourierIndex]) -> np.ndarray:
    out = np.empty((len(ks), ev.rule.size), dtype=complex)
    for start in range(0, len(ks), _CHUNK):
        out[start : start + _CHUNK] = ev.amplitudes(ks[start : start + _CHUNK])
    return out


def peaks_from_amplitudes(
    ks: Sequence[FourierIndex], amps: np.ndarray, weights: Sequence[complex]
) -> list[Peak]:
    w = np.asarray(weights, dtype=complex)
    total = amps @ w
    inten = np.abs(total) ** 2
    peaks = [
        Peak(k, k.value(), k.star_value(), amps[n], float(inten[n]), complex(total[n]))
        for n, k in enumerate(ks)
    ]
    peaks.sort(key=lambda pk: (-pk.intensity, pk.index.flat()))
    return peaks


def diffract(
    rule: InflationRule,
    weights: Sequence[complex],
    kmax: float,
    ystarmax: float = 40.0,
    evaluator: CocycleEvaluator | None = None,
) -> list[Peak]:
    """Peak list ``I(k) = |sum_i u_i A_i(k)|^2`` sorted by decreasing intensity."""
    if len(weights) != rule.size:
        raise ValueError(f"need {rule.size} weights, got {len(weights)}")
    ev = evaluator or CocycleEvaluator(rule)
    ks = enumerate_module(rule.dim, kmax, ystarmax)
    return peaks_from_amplitudes(ks, _amplitude_matrix(ev, ks), weights)


def _window_ft(lo: float, hi: float, y: float) -> complex:
    """``int_lo^hi exp(2 pi i x y) dx``."""
    if y == 0.0:
        return complex(hi - lo)
    return (np.exp(2j * np.pi * hi * y) - np.exp(2j * np.pi * lo * y)) / (2j * np.pi * y)


FIB_WINDOW_A = (TAU - 2.0, TAU - 1.0)
FIB_WINDOW_B = (-1.0, TAU - 2.0)


def closed_form_1d(k: FourierIndex) -> tuple[complex, complex]:
    """Amplitudes of the a- and b-points from the interval windows."""
    (ks,) = k.star_value()
    return (
        _window_ft(*FIB_WINDOW_A, ks) / SQRT5,
        _window_ft(*FIB_WINDOW_B, ks) / SQRT5,
    )


def sinc_amplitude_1d(k: FourierIndex) -> complex:
    (ks,) = k.star_value()
    x = np.pi * TAU * ks
    sinc = 1.0 if x == 0 else math.sin(x) / x
    return DENS_1D * np.exp(1j * np.pi * ks * (TAU - 2.0)) * sinc


def _compensated_sum(values: np.ndarray) -> complex:
    return complex(math.fsum(values.real), math.fsum(values.imag))


def patch_amplitude(
    patch: Patch,
    k: FourierIndex | Sequence[float],
    region: Sequence[tuple[float, float]] | None = None,
) -> np.ndarray:
    """Finite-patch average ``(1/vol) sum_{x in L_i, x in region} exp(-2 pi i k.x)``.

    ``region`` is a box given per axis as ``(lo, hi)``; the default is the
    patch's bounding box.  Sums are compensated (``math.fsum``) per type.
    """
    pos = patch.positions()
    if isinstance(k, FourierIndex):
        kv = np.array(k.value())
    else:
        kv = np.asarray(k, dtype=float)
    if region is None:
        hi = [float(x) for x in patch.footprint()]
        region = [(0.0, h) for h in hi]
    vol = 1.0
    mask = np.ones(len(patch), dtype=bool)
    for axis, (lo, hi) in enumerate(region):
        vol *= hi - lo
        mask &= (pos[:, axis] >= lo) & (pos[:, axis] < hi)
    if vol <= 0 or not mask.any():
        raise ValueError("empty region")
    phase = np.exp(-2j * np.pi * (pos[mask] @ kv))
    types = patch.types[mask]
    return np.array(
        [_compensated_sum(phase[types == i]) / vol for i in range(patch.rule.size)]
    )


def shear_index(k: FourierIndex) -> FourierIndex:
    """Action of ``S^T``, ``S = [[1, -1], [0, 1]]``, on module indices."""
    (p1, q1), (p2, q2) = k.pairs
    return FourierIndex(((p1, q1), (p2 - p1, q2 - q1)))


@dataclass(frozen=True)
class ShearReport:
    max_deviation: float
    n_points: int
    ok: bool


def shear_check(ks: Sequence[FourierIndex], tol: float = 1e-9) -> ShearReport:
    """Compare the (0,0,1) amplitudes at ``k`` with the (0,0,0) ones at ``S^T k``."""
    base = CocycleEvaluator(dpv_rule((0, 0, 0)))
    sheared = CocycleEvaluator(dpv_rule((0, 0, 1)))
    lhs = sheared.amplitudes(list(ks))
    rhs = base.amplitudes([shear_index(k) for k in ks])
    dev = float(np.max(np.abs(lhs - rhs))) if len(ks) else 0.0
    return ShearReport(dev, len(ks), dev < tol)


def twisted_intensities(
    weights: Sequence[complex], kmax: float, ystarmax: float = 40.0
) -> list[Peak]:
    """Pure-point part for the bar-swap chain, weights ordered (a, a_, b, b_)."""
    return diffract(builtin_rule("twisted4"), weights, kmax, ystarmax)


# --- random relabelling of the a-tiles --------------------------------------

LABELS = ("a", "a_", "b")


def randomize_chain(patch: Patch, p: float, seed: int) -> np.ndarray:
    """Labels 0 (a), 1 (a_), 2 (b); each a-tile becomes a_ with probability 1 - p.

    Draws come from ``numpy.random.Generator(PCG64(seed))``, one uniform per
    a-tile in patch order.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if patch.rule.dim != 1 or patch.rule.size != 2:
        raise ValueError("randomisation needs a Fibonacci chain patch")
    rng = np.random.Generator(np.random.PCG64(seed))
    labels = np.where(patch.types == 0, 0, 2).astype(np.int64)
    is_a = np.flatnonzero(patch.types == 0)
    flips = rng.random(len(is_a)) < (1.0 - p)
    labels[is_a[flips]] = 1
    return labels


def spawn_seeds(root_seed: int, n: int) -> list[int]:
    """Independent child seeds: ``SeedSequence(root).spawn(n)``, first 32-bit word of each."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(root_seed).spawn(n)]


def _z_key(za: np.ndarray, zb: np.ndarray) -> np.ndarray:
    return za * (1 << 32) + zb


@dataclass
class PairCorrelation:
    """``nu[alpha, beta][z]`` for a finite list of separations ``z = za + zb*tau``."""

    labels: tuple[str, ...]
    z: list[tuple[int, int]]
    values: np.ndarray  # shape (n_labels, n_labels, n_z)

    def z_float(self) -> np.ndarray:
        return np.array([a + b * TAU for a, b in self.z])

    def nu(self, alpha: str, beta: str, z: tuple[int, int]) -> float:
        return float(
            self.values[self.labels.index(alpha), self.labels.index(beta), self.z.index(z)]
        )


def difference_set(patch: Patch, n_z: int) -> list[tuple[int, int]]:
    """The ``n_z`` smallest non-negative separations occurring in a 1D patch."""
    coords = patch.coords[:, 0, :]
    zmax = 4
    while True:
        # every tile has length >= 1, so separations up to zmax need lags <= zmax
        found: set[int] = set()
        for lag in range(0, zmax + 1):
            d = coords[lag:] - coords[: len(coords) - lag]
            found.update(np.unique(_z_key(d[:, 0], d[:, 1])).tolist())
        # separations are sums of tile lengths 1 and tau, so both parts are >= 0
        zs = [divmod(k, 1 << 32) for k in found]
        zs = sorted((z for z in zs if z[0] + z[1] * TAU <= zmax), key=lambda z: z[0] + z[1] * TAU)
        if len(zs) >= n_z or zmax > len(coords):
            break
        zmax *= 2
    if len(zs) < n_z:
        raise ValueError("patch too small for the requested number of separations")
    return zs[:n_z]


def _pairs_at(patch: Patch, z: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs ``(j, j')`` with ``x_j' - x_j = z`` in a sorted 1D patch."""
    coords = patch.coords[:, 0, :]
    zf = z[0] + z[1] * TAU
    lag_max = int(math.floor(zf + 1e-9)) + 1
    left, right = [], []
    for lag in range(0, lag_max + 1):
        d = coords[lag:] - coords[: len(coords) - lag]
        hit = np.flatnonzero((d[:, 0] == z[0]) & (d[:, 1] == z[1]))
        left.append(hit)
        right.append(hit + lag)
    return np.concatenate(left), np.concatenate(right)


def pair_correlations(
    patch: Patch, labels: np.ndarray, n_labels: int, zs: Sequence[tuple[int, int]],
    names: tuple[str, ...],
) -> PairCorrelation:
    """Empirical ``nu_ab(z) = #{x in L_a : x + z in L_b} / #L`` on a 1D patch."""
    n = len(patch)
    vals = np.zeros((n_labels, n_labels, len(zs)))
    for iz, z in enumerate(zs):
        j, jp = _pairs_at(patch, z)
        code = labels[j] * n_labels + labels[jp]
        counts = np.bincount(code, minlength=n_labels * n_labels)
        vals[:, :, iz] = counts.reshape(n_labels, n_labels) / n
    return PairCorrelation(names, list(zs), vals)


def base_pair_correlations(patch: Patch, zs: Sequence[tuple[int, int]]) -> PairCorrelation:
    return pair_correlations(patch, patch.types, 2, zs, ("a", "b"))


def pair_correlations_theoretical(p: float, base: PairCorrelation) -> PairCorrelation:
    """Correlations of the relabelled chain expressed through the plain ones."""
    q = 1.0 - p
    a, b = 0, 1
    A, AB, B = 0, 1, 2
    vals = np.zeros((3, 3, len(base.z)))
    nu = base.values
    for iz, z in enumerate(base.z):
        zero = z == (0, 0)
        if zero:
            vals[A, A, iz] = p * nu[a, a, iz]
            vals[AB, AB, iz] = q * nu[a, a, iz]
            vals[A, AB, iz] = vals[AB, A, iz] = 0.0
        else:
            vals[A, A, iz] = p * p * nu[a, a, iz]
            vals[AB, AB, iz] = q * q * nu[a, a, iz]
            vals[A, AB, iz] = p * q * nu[a, a, iz]
            vals[AB, A, iz] = p * q * nu[a, a, iz]
        vals[A, B, iz] = p * nu[a, b, iz]
        vals[B, A, iz] = p * nu[b, a, iz]
        vals[AB, B, iz] = q * nu[a, b, iz]
        vals[B, AB, iz] = q * nu[b, a, iz]
        vals[B, B, iz] = nu[b, b, iz]
    return PairCorrelation(LABELS, list(base.z), vals)


def pair_correlation_stderr(
    patch: Patch, p: float, zs: Sequence[tuple[int, int]]
) -> np.ndarray:
    """Exact standard deviation of the empirical relabelled ``nu`` given the patch.

    Labels of distinct a-tiles are independent; for a fixed ``z`` two pairs
    share a tile only when they form a chain ``(i, j), (j, k)``, so the
    variance is the sum of per-pair variances plus twice the chain covariances.
    """
    q = 1.0 - p
    n = len(patch)
    base = patch.types
    # pi[label, base type]: probability that a tile of that base type carries the label
    pi = np.array([[p, 0.0], [q, 0.0], [0.0, 1.0]])
    out = np.zeros((3, 3, len(zs)))
    for iz, z in enumerate(zs):
        j, jp = _pairs_at(patch, z)
        if z == (0, 0):
            for al in range(3):
                pr = pi[al, base[j]]
                out[al, al, iz] = math.sqrt(float(np.sum(pr * (1 - pr)))) / n
            continue
        partner = np.full(n, -1, dtype=np.int64)
        partner[j] = np.arange(len(j))
        nxt = partner[jp]  # pair whose left tile is this pair's right tile
        has = nxt >= 0
        for al in range(3):
            for be in range(3):
                e = pi[al, base[j]] * pi[be, base[jp]]
                var = float(np.sum(e * (1 - e)))
                P, Q = np.flatnonzero(has), nxt[has]
                i_, m_, k_ = base[j[P]], base[jp[P]], base[jp[Q]]
                both = pi[al, m_] if al == be else 0.0
                cov = pi[al, i_] * both * pi[be, k_] - pi[al, i_] * pi[be, m_] * pi[al, m_] * pi[be, k_]
                var += 2.0 * float(np.sum(cov))
                out[al, be, iz] = math.sqrt(max(var, 0.0)) / n
    return out


@dataclass
class RandomizedDiffraction:
    pp: list[Peak]
    ac_density: float
    candidates: dict[str, float]
    v: tuple[complex, complex]


def ac_candidates(p: float, u_a: complex, u_abar: complex) -> dict[str, float]:
    """Three candidate constants for the extra point mass at z = 0.

    ``first_principles`` is dens(L) / tau * p q |du|^2 = dens(L_a) p q |du|^2;
    ``display`` keeps dens(L) without the 1/tau; ``theorem`` drops the density.
    """
    q = 1.0 - p
    base = p * q * abs(u_a - u_abar) ** 2
    return {
        "first_principles": DENS_1D / TAU * base,
        "display": DENS_1D * base,
        "theorem": base,
    }


def randomized_diffraction(
    p: float, u_a: complex, u_abar: complex, u_b: complex, kmax: float, ystarmax: float = 40.0
) -> RandomizedDiffraction:
    """Pure-point part with averaged weights plus the constant a.c. density."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    q = 1.0 - p
    v_a = p * u_a + q * u_abar
    pp = diffract(builtin_rule("fibonacci1d"), [v_a, u_b], kmax, ystarmax)
    cands = ac_candidates(p, u_a, u_abar)
    return RandomizedDiffraction(pp, cands["first_principles"], cands, (v_a, u_b))


def central_mass(patch: Patch, weights_by_label: np.ndarray, labels: np.ndarray) -> float:
    """Autocorrelation mass at 0, ``(1/length) sum_x |w(x)|^2``."""
    length = float(patch.footprint()[0])
    return math.fsum(np.abs(weights_by_label[labels]) ** 2) / length


@dataclass
class MonteCarloReport:
    p: float
    n_tiles: int
    seed: int
    zs: list[tuple[int, int]]
    empirical: PairCorrelation
    theory: PairCorrelation
    stderr: np.ndarray
    extra_mass: float
    candidates: dict[str, float]

    @property
    def zscores(self) -> np.ndarray:
        diff = self.empirical.values - self.theory.values
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(self.stderr > 0, diff / self.stderr, np.where(np.abs(diff) < 1e-12, 0.0, np.inf))
        return z

    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.zscores)))

    def selected_candidate(self, rel_tol: float = 0.01) -> str | None:
        hits = [
            name
            for name, val in self.candidates.items()
            if val > 0 and abs(self.extra_mass - val) <= rel_tol * val
        ]
        return hits[0] if len(hits) == 1 else None


def monte_carlo_random_chain(
    p: float,
    u: tuple[complex, complex, complex] = (1.0, -1.0, 0.0),
    n_tiles: int = 10**6,
    seed: int = 42,
    n_z: int = 20,
    patch: Patch | None = None,
) -> MonteCarloReport:
    """Relabel a Fibonacci supertile and compare with the relabelling formulas."""
    if patch is None:
        rule = builtin_rule("fibonacci1d")
        patch = generate_patch(rule, steps_for_tiles(rule, n_tiles), 0)
    labels = randomize_chain(patch, p, seed)
    zs = difference_set(patch, n_z)
    base = base_pair_correlations(patch, zs)
    theory = pair_correlations_theoretical(p, base)
    emp = pair_correlations(patch, labels, 3, zs, LABELS)
    err = pair_correlation_stderr(patch, p, zs)
    w = np.asarray(u, dtype=complex)
    q = 1.0 - p
    v = np.array([p * w[0] + q * w[1], p * w[0] + q * w[1], w[2]])
    extra = central_mass(patch, w, labels) - central_mass(patch, v, labels)
    return MonteCarloReport(
        p, len(patch), seed, zs, emp, theory, err, extra, ac_candidates(p, u[0], u[1])
    )


# --- output -------------------------------------------------------------------


def peaks_to_csv(peaks: Iterable[Peak], dim: int) -> str:
    buf = io.StringIO()
    if dim == 1:
        buf.write("p1,q1,k1,kstar1,re_amp,im_amp,intensity\n")
    else:
        buf.write("p1,q1,p2,q2,k1,k2,kstar1,kstar2,re_amp,im_amp,intensity\n")
    for pk in peaks:
        fields = [str(x) for x in pk.index.flat()]
        fields += [repr(float(x)) for x in pk.k]
        fields += [repr(float(x)) for x in pk.kstar]
        fields += [repr(pk.weighted_amplitude.real), repr(pk.weighted_amplitude.imag)]
        fields.append(repr(pk.intensity))
        buf.write(",".join(fields) + "\n")
    return buf.getvalue()


def closed_form_product(rule: InflationRule, k: FourierIndex) -> np.ndarray | None:
    """Product of interval-window amplitudes when ``rule`` is the plain direct product.

    A side of length ``tau`` carries an a-window and a unit side a b-window.
    Returns ``None`` for rules whose windows are not products of intervals.
    """
    if rule.dim != 2 or not rule.same_geometry(dpv_rule((0, 0, 0))):
        return None
    axes = [closed_form_1d(FourierIndex((pair,))) for pair in k.pairs]
    out = []
    for proto in rule.prototiles:
        amp = 1.0 + 0j
        for axis, ext in enumerate(proto.extent):
            long_side = float(ext) > 1.5
            amp *= axes[axis][0] if long_side else axes[axis][1]
        out.append(amp)
    return np.array(out)
