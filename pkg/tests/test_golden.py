import math

from hypothesis import given, strategies as st

from fibvar.golden import (
    ONE,
    SIGMA,
    SIGMA_G,
    TAU,
    TAU_G,
    ZERO,
    FourierIndex,
    GoldenNumber,
    GoldenVec,
    det2,
    golden_round,
    golden_sum,
    sign,
)

ints = st.integers(min_value=-10**6, max_value=10**6)
goldens = st.builds(GoldenNumber, ints, ints)


@given(goldens, goldens, goldens)
def test_ring_axioms(x, y, z):
    assert x + y == y + x
    assert x * y == y * x
    assert (x + y) + z == x + (y + z)
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x + ZERO == x and x * ONE == x
    assert x - x == ZERO


@given(goldens, goldens)
def test_star_is_ring_homomorphism(x, y):
    assert (x + y).star() == x.star() + y.star()
    assert (x * y).star() == x.star() * y.star()
    assert x.star().star() == x


@given(goldens, goldens)
def test_norm_is_multiplicative(x, y):
    assert (x * y).norm() == x.norm() * y.norm()


@given(goldens)
def test_sign_matches_float(x):
    f = float(x)
    if abs(f) > 1e-6:
        assert sign(x) == (1 if f > 0 else -1)


@given(goldens, goldens)
def test_order_is_total(x, y):
    assert (x < y) + (y < x) + (x == y) == 1


def test_tau_identities():
    assert TAU_G * TAU_G == TAU_G + ONE
    assert TAU_G * SIGMA_G == GoldenNumber(-1, 0)
    assert TAU_G.star() == SIGMA_G
    assert math.isclose(float(SIGMA_G), SIGMA)
    assert math.isclose(TAU * TAU, TAU + 1)


def test_sign_near_zero():
    # F(n+1) - F(n) tau = sigma^n is tiny but exactly signed
    assert sign(GoldenNumber(1346269, -832040)) == 1
    assert sign(GoldenNumber(832040, -514229)) == -1
    assert sign(ZERO) == 0


@given(st.integers(-50, 50), st.integers(-3, 3))
def test_golden_round_recovers(a, b):
    assert golden_round(a + b * TAU) == GoldenNumber(a, b)


def test_golden_round_rejects():
    assert golden_round(math.pi, max_b=3, tol=1e-9) is None


def test_vectors_and_det():
    u = GoldenVec.of((0, 1), 0)
    v = GoldenVec.of(0, 1)
    assert det2(u, v) == TAU_G
    assert (u + v) - v == u
    assert u.star().to_float()[0] == SIGMA
    assert golden_sum([ONE, TAU_G, TAU_G]) == GoldenNumber(1, 2)


def test_fourier_index_values():
    k = FourierIndex.of((1, 0))
    assert math.isclose(k.value()[0], 1 / math.sqrt(5))
    assert math.isclose(k.star_value()[0], -1 / math.sqrt(5))
    # k + k* = q for every module point
    k = FourierIndex.of((3, -2))
    assert math.isclose(k.value()[0] + k.star_value()[0], -2.0)
    assert (k + (-k)).flat() == (0, 0)
