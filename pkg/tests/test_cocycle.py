import numpy as np
import pytest

from fibvar.cocycle import (
    CocycleEvaluator,
    InternalFourierMatrix,
    cocycle_product,
    fb_amplitude,
    limit_C,
    steps_for_tolerance,
)
from fibvar.golden import SIGMA, SQRT5, TAU, FourierIndex
from fibvar.inflation import builtin_rule, dpv_rule, substitution_matrix


def test_B_at_zero_is_M():
    for rule in (builtin_rule("fib1d"), dpv_rule((1, 0, 7))):
        B = InternalFourierMatrix(rule)
        assert np.array_equal(B(np.zeros(rule.dim)).real, substitution_matrix(rule))


def test_batch_matches_single():
    rule = dpv_rule((0, 1, 5))
    B = InternalFourierMatrix(rule)
    ys = np.random.default_rng(1).uniform(-3, 3, size=(7, 2))
    batch = B.batch(ys)
    for y, b in zip(ys, batch):
        assert np.allclose(B(y), b, atol=1e-14)


def test_hermitian_symmetry(fib_rule):
    B = InternalFourierMatrix(fib_rule)
    y = np.array([0.37])
    assert np.allclose(B(-y), np.conj(B(y)))


def test_product_requires_positive_n(fib_rule):
    with pytest.raises(ValueError):
        cocycle_product(fib_rule, [0.1], 0)


def test_steps_for_tolerance():
    n = steps_for_tolerance(10.0, 1e-9)
    assert abs(SIGMA) ** n * 10.0 < 1e-9 <= abs(SIGMA) ** (n - 1) * 10.0


def test_limit_is_rank_one(fib_rule):
    lim = limit_C(fib_rule, [1.3])
    ev = CocycleEvaluator(fib_rule)
    C = ev.scaled_product([1.3])
    assert np.allclose(C, lim.matrix, atol=1e-9)
    assert lim.residual < 1e-9


def test_amplitude_at_zero_is_density(fib_rule):
    # A_i(0) = density of the i-points = v_i / mean tile length
    A = fb_amplitude(fib_rule, None, FourierIndex.of((0, 0)))
    dens = TAU / SQRT5
    assert A == pytest.approx([dens / TAU, dens / TAU**2], abs=1e-12)


def test_amplitudes_2d_at_zero():
    ev = CocycleEvaluator(dpv_rule((0, 0, 6)))
    A = ev.amplitudes([FourierIndex.of((0, 0), (0, 0))])[0]
    # frozen: product densities (tau/sqrt5)^2 times frequencies
    assert A.sum().real == pytest.approx(TAU**2 / 5, abs=1e-12)
