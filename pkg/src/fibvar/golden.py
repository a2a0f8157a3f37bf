"""Exact arithmetic in the ring Z[tau] of golden integers.

Every coordinate used by the tilings lives in Z[tau] (or Z[tau]^2), so all
geometric predicates are decided with integers.  Floats appear only when a
value is handed to the numerical kernels.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable, Iterator, Sequence

TAU = 1.6180339887498949
SIGMA = 1.0 - TAU  # algebraic conjugate of tau, about -0.618
SQRT5 = 2.23606797749979

_INT64_MAX = 2**63 - 1


def _checked(value: int) -> int:
    if not -_INT64_MAX <= value <= _INT64_MAX:
        raise OverflowError(f"golden integer coefficient {value} exceeds 64 bits")
    return value


@total_ordering
@dataclass(frozen=True, slots=True)
class GoldenNumber:
    """The number ``a + b*tau`` with integer ``a`` and ``b``."""

    a: int = 0
    b: int = 0

    def __post_init__(self) -> None:
        _checked(self.a)
        _checked(self.b)

    @classmethod
    def coerce(cls, x: "GoldenNumber | int") -> "GoldenNumber":
        if isinstance(x, GoldenNumber):
            return x
        if isinstance(x, int):
            return cls(x, 0)
        raise TypeError(f"cannot interpret {x!r} as a golden integer")

    def __add__(self, other):
        other = GoldenNumber.coerce(other)
        return GoldenNumber(_checked(self.a + other.a), _checked(self.b + other.b))

    __radd__ = __add__

    def __neg__(self) -> "GoldenNumber":
        return GoldenNumber(-self.a, -self.b)

    def __sub__(self, other):
        return self + (-GoldenNumber.coerce(other))

    def __rsub__(self, other):
        return GoldenNumber.coerce(other) - self

    def __mul__(self, other):
        other = GoldenNumber.coerce(other)
        a, b, c, d = self.a, self.b, other.a, other.b
        # tau^2 = tau + 1
        return GoldenNumber(_checked(a * c + b * d), _checked(a * d + b * c + b * d))

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "GoldenNumber":
        if n < 0:
            raise ValueError("negative powers leave Z[tau] unless the base is a unit")
        result = GoldenNumber(1, 0)
        for _ in range(n):
            result = result * self
        return result

    def star(self) -> "GoldenNumber":
        """Galois conjugate: tau -> 1 - tau."""
        return GoldenNumber(self.a + self.b, -self.b)

    def sign(self) -> int:
        return sign(self)

    def __lt__(self, other) -> bool:
        return sign(self - GoldenNumber.coerce(other)) < 0

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = GoldenNumber(other, 0)
        if not isinstance(other, GoldenNumber):
            return NotImplemented
        return self.a == other.a and self.b == other.b

    def __hash__(self) -> int:
        return hash((self.a, self.b))

    def __float__(self) -> float:
        return self.a + self.b * TAU

    def norm(self) -> int:
        """Field norm ``x * star(x)``, an integer."""
        return self.a * self.a + self.a * self.b - self.b * self.b

    def __repr__(self) -> str:
        return f"GoldenNumber({self.a}, {self.b})"

    def __str__(self) -> str:
        if self.b == 0:
            return str(self.a)
        if self.a == 0:
            return f"{self.b}τ"
        return f"{self.a}{self.b:+d}τ"


ZERO = GoldenNumber(0, 0)
ONE = GoldenNumber(1, 0)
TAU_G = GoldenNumber(0, 1)
SIGMA_G = GoldenNumber(1, -1)


def mul(x: GoldenNumber, y: GoldenNumber) -> GoldenNumber:
    return x * y


def star(x: GoldenNumber) -> GoldenNumber:
    return x.star()


def sign(x: GoldenNumber) -> int:
    """Exact sign of ``a + b*tau`` using integers only.

    Writing ``2(a + b*tau) = (2a + b) + b*sqrt(5)`` reduces the question to
    the sign of ``u + v*sqrt(5)``, settled by comparing ``u^2`` with ``5 v^2``
    when ``u`` and ``v`` disagree in sign.
    """
    u = 2 * x.a + x.b
    v = x.b
    if u >= 0 and v >= 0:
        return 0 if (u == 0 and v == 0) else 1
    if u <= 0 and v <= 0:
        return -1
    lhs, rhs = u * u, 5 * v * v
    if u > 0:  # v < 0
        return 1 if lhs > rhs else -1
    return 1 if rhs > lhs else -1


def golden_round(x: float, max_b: int = 3, tol: float = 1e-9) -> GoldenNumber | None:
    """Nearest golden integer to ``x`` with ``|b| <= max_b``, if within ``tol``."""
    best = None
    best_err = tol
    for b in sorted(range(-max_b, max_b + 1), key=abs):
        a = round(x - b * TAU)
        err = abs(a + b * TAU - x)
        if err < best_err:
            best, best_err = GoldenNumber(a, b), err
    return best


@dataclass(frozen=True, slots=True)
class GoldenVec:
    """A point of Z[tau]^d, d in {1, 2}."""

    components: tuple[GoldenNumber, ...]

    def __post_init__(self) -> None:
        comps = tuple(GoldenNumber.coerce(c) for c in self.components)
        object.__setattr__(self, "components", comps)

    @classmethod
    def of(cls, *coords) -> "GoldenVec":
        return cls(tuple(_parse_coord(c) for c in coords))

    @property
    def dim(self) -> int:
        return len(self.components)

    def __iter__(self) -> Iterator[GoldenNumber]:
        return iter(self.components)

    def __getitem__(self, i: int) -> GoldenNumber:
        return self.components[i]

    def __add__(self, other: "GoldenVec") -> "GoldenVec":
        return GoldenVec(tuple(x + y for x, y in zip(self, other, strict=True)))

    def __sub__(self, other: "GoldenVec") -> "GoldenVec":
        return GoldenVec(tuple(x - y for x, y in zip(self, other, strict=True)))

    def __neg__(self) -> "GoldenVec":
        return GoldenVec(tuple(-x for x in self))

    def scale(self, s: GoldenNumber | int) -> "GoldenVec":
        return GoldenVec(tuple(s * x for x in self))

    def star(self) -> "GoldenVec":
        return GoldenVec(tuple(x.star() for x in self))

    def to_float(self) -> tuple[float, ...]:
        return tuple(float(x) for x in self)

    def __repr__(self) -> str:
        return "(" + ", ".join(str(c) for c in self.components) + ")"


def _parse_coord(c) -> GoldenNumber:
    if isinstance(c, tuple):
        return GoldenNumber(*c)
    return GoldenNumber.coerce(c)


def golden_vec(*coords) -> GoldenVec:
    """Shorthand: ``golden_vec((0, 1), 0)`` is the vector ``(tau, 0)``."""
    return GoldenVec.of(*coords)


@dataclass(frozen=True, slots=True)
class FourierIndex:
    """A point ``k = (p + q*tau)/sqrt(5)`` of the Fourier module, one pair per axis."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple((int(p), int(q)) for p, q in self.pairs))

    @classmethod
    def of(cls, *pairs: Sequence[int]) -> "FourierIndex":
        return cls(tuple(tuple(p) for p in pairs))

    @property
    def dim(self) -> int:
        return len(self.pairs)

    def value(self) -> tuple[float, ...]:
        return tuple((p + q * TAU) / SQRT5 for p, q in self.pairs)

    def star_value(self) -> tuple[float, ...]:
        # sqrt(5) -> -sqrt(5) together with tau -> 1 - tau
        return tuple(-(p + q * SIGMA) / SQRT5 for p, q in self.pairs)

    def __add__(self, other: "FourierIndex") -> "FourierIndex":
        return FourierIndex(
            tuple((p + r, q + s) for (p, q), (r, s) in zip(self.pairs, other.pairs, strict=True))
        )

    def __neg__(self) -> "FourierIndex":
        return FourierIndex(tuple((-p, -q) for p, q in self.pairs))

    def flat(self) -> tuple[int, ...]:
        return tuple(x for pair in self.pairs for x in pair)


def star_value(k: FourierIndex) -> tuple[float, ...]:
    return k.star_value()


def det2(u: Sequence[GoldenNumber], v: Sequence[GoldenNumber]) -> GoldenNumber:
    """Exact 2x2 determinant (signed parallelogram area) of two golden vectors."""
    return u[0] * v[1] - u[1] * v[0]


def golden_sum(xs: Iterable[GoldenNumber]) -> GoldenNumber:
    total = ZERO
    for x in xs:
        total = total + x
    return total
