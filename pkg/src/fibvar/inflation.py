"""Inflation rules with exact displacement data, Perron-Frobenius data and patches.

A rule is stored as its set-valued displacement matrix ``T``: ``T[i][j]`` holds
the lower-left corners of the type-``i`` subtiles inside the inflated type-``j``
prototile.  Control-point sets then satisfy ``L_i = U_j (tau L_j + T[i][j])``.
All inflations here use the factor tau on every axis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .golden import ONE, TAU_G, ZERO, GoldenNumber, GoldenVec, sign

__all__ = [
    "Prototile",
    "InflationRule",
    "DPVCode",
    "PFData",
    "Patch",
    "StoneReport",
    "builtin_rule",
    "dpv_rule",
    "all_dpv_codes",
    "parse_rule",
    "substitution_matrix",
    "pf_data",
    "generate_patch",
    "verify_stone_inflation",
    "reflect_rule",
]


@dataclass(frozen=True)
class Prototile:
    id: int
    extent: tuple[GoldenNumber, ...]
    name: str = ""

    def __post_init__(self) -> None:
        if any(sign(e) <= 0 for e in self.extent):
            raise ValueError(f"prototile {self.id} has a non-positive side")

    @property
    def area(self) -> GoldenNumber:
        out = ONE
        for e in self.extent:
            out = out * e
        return out


def _sort_key(t: GoldenVec) -> tuple[float, ...]:
    return tuple(reversed(t.to_float()))


@dataclass(frozen=True)
class InflationRule:
    """Prototiles plus displacement matrix; immutable."""

    name: str
    prototiles: tuple[Prototile, ...]
    displacements: tuple[tuple[tuple[GoldenVec, ...], ...], ...]

    def __post_init__(self) -> None:
        n = len(self.prototiles)
        if len(self.displacements) != n or any(len(row) != n for row in self.displacements):
            raise ValueError("displacement matrix must be N x N")
        canon = tuple(
            tuple(tuple(sorted(set(cell), key=_sort_key)) for cell in row)
            for row in self.displacements
        )
        object.__setattr__(self, "displacements", canon)

    @property
    def dim(self) -> int:
        return len(self.prototiles[0].extent)

    @property
    def size(self) -> int:
        return len(self.prototiles)

    def T(self, i: int, j: int) -> tuple[GoldenVec, ...]:
        return self.displacements[i][j]

    def children(self, j: int) -> list[tuple[int, GoldenVec]]:
        """Subtiles ``(type, corner)`` of the inflated prototile ``j``, sorted by position."""
        out = [(i, t) for i in range(self.size) for t in self.displacements[i][j]]
        out.sort(key=lambda it: _sort_key(it[1]))
        return out

    def same_geometry(self, other: "InflationRule") -> bool:
        return (
            self.prototiles == other.prototiles
            and self.displacements == other.displacements
        )


@dataclass(frozen=True, order=True)
class DPVCode:
    i1: int
    i2: int
    i3: int

    def __post_init__(self) -> None:
        if self.i1 not in (0, 1) or self.i2 not in (0, 1) or not 0 <= self.i3 <= 11:
            raise ValueError(f"invalid DPV code {self.as_tuple()}")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.i1, self.i2, self.i3)

    def __str__(self) -> str:
        return f"({self.i1},{self.i2},{self.i3})"


def all_dpv_codes() -> list[DPVCode]:
    return [DPVCode(i1, i2, i3) for i1 in (0, 1) for i2 in (0, 1) for i3 in range(12)]


def _g(a: int, b: int = 0) -> GoldenNumber:
    return GoldenNumber(a, b)


def _v(*coords) -> GoldenVec:
    return GoldenVec.of(*coords)


def _empty(n: int) -> list[list[list[GoldenVec]]]:
    return [[[] for _ in range(n)] for _ in range(n)]


def _freeze(cells: list[list[list[GoldenVec]]]) -> tuple:
    return tuple(tuple(tuple(c) for c in row) for row in cells)


_TAU = TAU_G


def _fibonacci1d() -> InflationRule:
    tiles = (Prototile(0, (_TAU,), "a"), Prototile(1, (ONE,), "b"))
    T = _empty(2)
    T[0][0] = [_v(0)]
    T[0][1] = [_v(0)]
    T[1][0] = [_v((0, 1))]
    return InflationRule("fibonacci1d", tiles, _freeze(T))


def _twisted4() -> InflationRule:
    # order a, a_, b, b_ ; a -> a b, a_ -> a_ b_, b -> a_, b_ -> a
    tiles = (
        Prototile(0, (_TAU,), "a"),
        Prototile(1, (_TAU,), "a_"),
        Prototile(2, (ONE,), "b"),
        Prototile(3, (ONE,), "b_"),
    )
    T = _empty(4)
    T[0][0] = [_v(0)]
    T[2][0] = [_v((0, 1))]
    T[1][1] = [_v(0)]
    T[3][1] = [_v((0, 1))]
    T[1][2] = [_v(0)]
    T[0][3] = [_v(0)]
    return InflationRule("twisted4", tiles, _freeze(T))


# 2D prototiles: 0 = 1x1, 1 = tau x 1, 2 = 1 x tau, 3 = tau x tau
_SQUARE_TILES = (
    Prototile(0, (ONE, ONE), "0"),
    Prototile(1, (_TAU, ONE), "1"),
    Prototile(2, (ONE, _TAU), "2"),
    Prototile(3, (_TAU, _TAU), "3"),
)


def _big_square_layout(i3: int) -> list[tuple[int, GoldenVec]]:
    """Subtiles of the inflated big square for the label ``i3 = 3c + s``.

    ``c`` is the corner of the tau x tau subtile (LL, LR, UR, UL); the
    remaining L-shaped region is a horizontal and a vertical unit-width band
    meeting in the outer corner cell.  ``s = 0`` puts the small square in the
    outer corner; otherwise one band runs full length and the small square sits
    at its end away from the outer corner.
    """
    c, s = divmod(i3, 3)
    bx = 0 if c in (0, 3) else 1  # big square x-offset (0 or 1)
    by = 0 if c in (0, 1) else 1
    x0 = _TAU if bx == 0 else ZERO  # vertical band / outer corner column
    y0 = _TAU if by == 0 else ZERO  # horizontal band / outer corner row
    big = (3, GoldenVec((_g(bx), _g(by))))
    if s == 0:
        mode = "corner"
    elif (s == 1) == (c in (0, 1)):
        mode = "hfull"
    else:
        mode = "vfull"
    if mode == "corner":
        small = GoldenVec((x0, y0))
        hbar = GoldenVec((_g(bx), y0))
        vbar = GoldenVec((x0, _g(by)))
    elif mode == "hfull":
        # horizontal band of length tau^2 holds small + tau x 1 tile
        if bx == 0:
            small, hbar = GoldenVec((ZERO, y0)), GoldenVec((ONE, y0))
        else:
            small, hbar = GoldenVec((_TAU, y0)), GoldenVec((ZERO, y0))
        vbar = GoldenVec((x0, _g(by)))
    else:
        if by == 0:
            small, vbar = GoldenVec((x0, ZERO)), GoldenVec((x0, ONE))
        else:
            small, vbar = GoldenVec((x0, _TAU)), GoldenVec((x0, ZERO))
        hbar = GoldenVec((_g(bx), y0))
    return [big, (0, small), (1, hbar), (2, vbar)]


def dpv_rule(code: DPVCode | Sequence[int]) -> InflationRule:
    """One of the 48 rearrangements of the planar direct-product inflation."""
    if not isinstance(code, DPVCode):
        code = DPVCode(*code)
    T = _empty(4)
    T[3][0] = [_v(0, 0)]
    if code.i1 == 0:
        T[3][1] = [_v(0, 0)]
        T[2][1] = [_v((0, 1), 0)]
    else:
        T[2][1] = [_v(0, 0)]
        T[3][1] = [_v(1, 0)]
    if code.i2 == 0:
        T[3][2] = [_v(0, 0)]
        T[1][2] = [_v(0, (0, 1))]
    else:
        T[1][2] = [_v(0, 0)]
        T[3][2] = [_v(0, 1)]
    for i, t in _big_square_layout(code.i3):
        T[i][3] = [t]
    return InflationRule(f"dpv:{code.i1},{code.i2},{code.i3}", _SQUARE_TILES, _freeze(T))


_BUILTINS = {
    "fibonacci1d": _fibonacci1d,
    "fib1d": _fibonacci1d,
    "twisted4": _twisted4,
    "square00x": lambda: dpv_rule(DPVCode(0, 0, 0)),
}


def builtin_rule(name: str) -> InflationRule:
    try:
        rule = _BUILTINS[name]()
    except KeyError:
        raise ValueError(f"unknown rule {name!r}; expected one of {sorted(_BUILTINS)}") from None
    if name == "square00x":
        rule = InflationRule("square00x", rule.prototiles, rule.displacements)
    return rule


def parse_rule(selector: str) -> InflationRule:
    """Resolve a CLI selector: a builtin name or ``dpv:i1,i2,i3``."""
    selector = selector.strip()
    if selector.startswith("dpv:"):
        try:
            parts = tuple(int(x) for x in selector[4:].split(","))
        except ValueError:
            raise ValueError(f"malformed DPV selector {selector!r}") from None
        if len(parts) != 3:
            raise ValueError(f"malformed DPV selector {selector!r}")
        return dpv_rule(DPVCode(*parts))
    return builtin_rule(selector)


def substitution_matrix(rule: InflationRule) -> np.ndarray:
    n = rule.size
    return np.array(
        [[len(rule.displacements[i][j]) for j in range(n)] for i in range(n)], dtype=np.int64
    )


@dataclass(frozen=True)
class PFData:
    lam: float
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    @property
    def projector(self) -> np.ndarray:
        return np.outer(self.v, self.u)


def is_primitive(M: np.ndarray) -> bool:
    n = M.shape[0]
    A = (np.asarray(M) > 0).astype(np.int64)
    P = A.copy()
    for _ in range((n - 1) ** 2 + 1):
        if (P > 0).all():
            return True
        P = ((P @ A) > 0).astype(np.int64)
    return bool((P > 0).all())


def _power_iterate(A: np.ndarray, tol: float = 1e-15, max_iter: int = 5000) -> np.ndarray:
    x = np.ones(A.shape[0])
    x /= x.sum()
    for _ in range(max_iter):
        y = A @ x
        y /= y.sum()
        if np.max(np.abs(y - x)) < tol:
            return y
        x = y
    return x


def pf_data(M: np.ndarray) -> PFData:
    """PF eigenvalue and eigenvectors normalised by <1|v> = <u|v> = 1."""
    M = np.asarray(M, dtype=float)
    if not is_primitive(M):
        raise ValueError("substitution matrix is not primitive")
    v = _power_iterate(M)
    u = _power_iterate(M.T)
    lam = float(u @ M @ v / (u @ v))
    v = v / v.sum()
    u = u / (u @ v)
    return PFData(lam, u, v)


@dataclass(frozen=True)
class StoneReport:
    ok: bool
    failures: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def _box(rule: InflationRule, i: int, t: GoldenVec) -> list[tuple[GoldenNumber, GoldenNumber]]:
    return [(t[k], t[k] + rule.prototiles[i].extent[k]) for k in range(rule.dim)]


def verify_stone_inflation(rule: InflationRule) -> StoneReport:
    """Exactly check that the subtiles partition every inflated prototile.

    Containment plus pairwise interior-disjointness plus equality of total
    area implies a partition up to boundaries; every test is an exact sign.
    """
    failures: list[str] = []
    for j, proto in enumerate(rule.prototiles):
        outer = [_TAU * e for e in proto.extent]
        pieces = rule.children(j)
        for i, t in pieces:
            for k, (lo, hi) in enumerate(_box(rule, i, t)):
                if sign(lo) < 0 or sign(outer[k] - hi) < 0:
                    failures.append(
                        f"tile {j}: subtile {i}@{t} leaves the inflated tile on axis {k}"
                    )
        for m in range(len(pieces)):
            for n in range(m + 1, len(pieces)):
                (i1, t1), (i2, t2) = pieces[m], pieces[n]
                b1, b2 = _box(rule, i1, t1), _box(rule, i2, t2)
                if all(sign(h2 - l1) > 0 and sign(h1 - l2) > 0 for (l1, h1), (l2, h2) in zip(b1, b2)):
                    failures.append(f"tile {j}: subtiles {i1}@{t1} and {i2}@{t2} overlap")
        area = ZERO
        for i, _ in pieces:
            area = area + rule.prototiles[i].area
        target = proto.area
        for _ in range(rule.dim):
            target = target * _TAU
        if area != target:
            failures.append(f"tile {j}: subtile area {area} differs from inflated area {target}")
    return StoneReport(not failures, tuple(failures))


def reflect_rule(rule: InflationRule, axes: Sequence[int]) -> InflationRule:
    """Mirror every inflated prototile along ``axes``, keeping lower-left markers."""
    T = _empty(rule.size)
    for i in range(rule.size):
        for j in range(rule.size):
            for t in rule.displacements[i][j]:
                comps = list(t)
                for k in axes:
                    outer = _TAU * rule.prototiles[j].extent[k]
                    comps[k] = outer - t[k] - rule.prototiles[i].extent[k]
                T[i][j].append(GoldenVec(tuple(comps)))
    return InflationRule(f"{rule.name}|flip{tuple(axes)}", rule.prototiles, _freeze(T))


@dataclass(frozen=True)
class Patch:
    """Tiles as ``(type, lower-left corner)``.

    ``coords[n, k]`` is the pair ``(a, b)`` of the corner's ``k``-th coordinate
    ``a + b*tau``.
    """

    rule: InflationRule = field(repr=False)
    types: np.ndarray = field(repr=False)
    coords: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.types)

    def positions(self) -> np.ndarray:
        from .golden import TAU

        return self.coords[..., 0] + TAU * self.coords[..., 1]

    def counts(self) -> np.ndarray:
        return np.bincount(self.types, minlength=self.rule.size)

    def __iter__(self) -> Iterator[tuple[int, GoldenVec]]:
        for t, c in zip(self.types, self.coords):
            yield int(t), GoldenVec(tuple(GoldenNumber(int(a), int(b)) for a, b in c))

    def footprint(self) -> tuple[GoldenNumber, ...]:
        """Upper corner of the bounding box (lower corner is the origin)."""
        out = []
        for k in range(self.rule.dim):
            best = ZERO
            for i, proto in enumerate(self.rule.prototiles):
                sel = self.coords[self.types == i, k]
                if len(sel) == 0:
                    continue
                x = self.positions()[self.types == i, k]
                m = int(np.argmax(x))
                hi = GoldenNumber(int(sel[m, 0]), int(sel[m, 1])) + proto.extent[k]
                if sign(hi - best) > 0:
                    best = hi
            out.append(best)
        return tuple(out)

    def to_json(self) -> str:
        rows = []
        for t, c in zip(self.types.tolist(), self.coords.tolist()):
            row = {"type": t, "x_a": c[0][0], "x_b": c[0][1]}
            if self.rule.dim == 2:
                row.update({"y_a": c[1][0], "y_b": c[1][1]})
            rows.append(row)
        return json.dumps(rows, separators=(",", ":"))


def _child_table(rule: InflationRule):
    n, d = rule.size, rule.dim
    base = np.zeros(n + 1, dtype=np.int64)
    types, disp = [], []
    for j in range(n):
        kids = rule.children(j)
        base[j + 1] = base[j] + len(kids)
        for i, t in kids:
            types.append(i)
            disp.append([[c.a, c.b] for c in t])
    return base, np.array(types, dtype=np.int64), np.array(disp, dtype=np.int64).reshape(-1, d, 2)


def inflate_patch(patch: Patch) -> Patch:
    """One inflation step: every tile is replaced by its inflated supertile."""
    rule = patch.rule
    base, ctypes, cdisp = _child_table(rule)
    counts = (base[1:] - base[:-1])[patch.types]
    parent = np.repeat(np.arange(len(patch.types)), counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    local = np.arange(len(parent)) - starts
    idx = base[patch.types[parent]] + local
    a = patch.coords[parent, :, 0]
    b = patch.coords[parent, :, 1]
    # tau * (a + b tau) = b + (a + b) tau
    scaled = np.stack([b, a + b], axis=-1)
    if np.abs(scaled).max(initial=0) > 2**62:
        raise OverflowError("patch coordinates exceed 64-bit range")
    return Patch(rule, ctypes[idx], scaled + cdisp[idx])


def generate_patch(rule: InflationRule, steps: int, seed_tile: int = 0) -> Patch:
    """The ``steps``-fold supertile of ``seed_tile`` with its corner at the origin."""
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if not 0 <= seed_tile < rule.size:
        raise ValueError(f"seed tile {seed_tile} out of range")
    patch = Patch(
        rule,
        np.array([seed_tile], dtype=np.int64),
        np.zeros((1, rule.dim, 2), dtype=np.int64),
    )
    for _ in range(steps):
        patch = inflate_patch(patch)
    return patch


def steps_for_tiles(rule: InflationRule, n_tiles: int, seed_tile: int = 0) -> int:
    """Smallest number of inflation steps giving at least ``n_tiles`` tiles."""
    M = substitution_matrix(rule)
    col = np.zeros(rule.size, dtype=np.int64)
    col[seed_tile] = 1
    steps = 0
    while col.sum() < n_tiles:
        col = M @ col
        steps += 1
    return steps
