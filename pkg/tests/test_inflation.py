import json

import numpy as np
import pytest

from fibvar.golden import TAU, TAU_G, GoldenNumber
from fibvar.inflation import (
    DPVCode,
    all_dpv_codes,
    builtin_rule,
    dpv_rule,
    generate_patch,
    is_primitive,
    parse_rule,
    pf_data,
    reflect_rule,
    steps_for_tiles,
    substitution_matrix,
    verify_stone_inflation,
)


def test_48_codes_distinct_and_valid():
    codes = all_dpv_codes()
    assert len(codes) == 48
    rules = [dpv_rule(c) for c in codes]
    assert len({r.displacements for r in rules}) == 48
    for r in rules:
        assert verify_stone_inflation(r), r.name


def test_bad_code_rejected():
    with pytest.raises(ValueError):
        DPVCode(0, 2, 0)
    with pytest.raises(ValueError):
        parse_rule("dpv:0,0")
    with pytest.raises(ValueError):
        parse_rule("nope")


def test_all_dpvs_share_substitution_matrix():
    M0 = substitution_matrix(dpv_rule((0, 0, 0)))
    for c in all_dpv_codes():
        assert np.array_equal(substitution_matrix(dpv_rule(c)), M0)
    # tensor square of the Fibonacci matrix
    F = substitution_matrix(builtin_rule("fib1d"))
    assert sorted(np.linalg.eigvals(M0).real.round(9)) == sorted(
        np.outer(np.linalg.eigvals(F), np.linalg.eigvals(F)).ravel().real.round(9)
    )


def test_pf_normalisation(fib_rule):
    pf = pf_data(substitution_matrix(fib_rule))
    assert pf.lam == pytest.approx(TAU, abs=1e-14)
    assert pf.v.sum() == pytest.approx(1.0)
    assert pf.u @ pf.v == pytest.approx(1.0)
    # frequencies of a and b
    assert pf.v == pytest.approx([1 / TAU, 1 / TAU**2])


def test_primitivity():
    assert is_primitive(np.array([[1, 1], [1, 0]]))
    assert not is_primitive(np.array([[1, 0], [0, 1]]))
    with pytest.raises(ValueError):
        pf_data(np.eye(2))


@pytest.mark.parametrize("name", ["fib1d", "twisted4", "dpv:0,0,6", "dpv:1,1,11"])
def test_patch_counts_follow_matrix(name):
    rule = parse_rule(name)
    M = substitution_matrix(rule)
    seed = rule.size - 1
    for n in range(6):
        e = np.zeros(rule.size, dtype=np.int64)
        e[seed] = 1
        assert np.array_equal(generate_patch(rule, n, seed).counts(), np.linalg.matrix_power(M, n) @ e)


def test_patch_tiles_fill_footprint():
    rule = dpv_rule((0, 0, 6))
    patch = generate_patch(rule, 5, 3)
    fx, fy = patch.footprint()
    assert fx == fy == TAU_G**6
    area = sum(float(rule.prototiles[t].area) for t in patch.types)
    assert area == pytest.approx(float(fx) * float(fy))


def test_1d_positions_are_a_chain(fib_rule):
    patch = generate_patch(fib_rule, 12, 0)
    x = patch.positions()[:, 0]
    assert np.all(np.diff(x) > 0)
    lengths = np.diff(np.append(x, float(patch.footprint()[0])))
    ext = np.array([float(p.extent[0]) for p in fib_rule.prototiles])
    assert np.allclose(lengths, ext[patch.types])


def test_steps_for_tiles(fib_rule):
    n = steps_for_tiles(fib_rule, 10**5)
    assert len(generate_patch(fib_rule, n)) >= 10**5 > len(generate_patch(fib_rule, n - 1))


def test_patch_json_roundtrip(fib_rule):
    patch = generate_patch(fib_rule, 4)
    rows = json.loads(patch.to_json())
    assert len(rows) == len(patch)
    for row, pos in zip(rows, patch.positions()):
        assert GoldenNumber(row["x_a"], row["x_b"]).__float__() == pytest.approx(pos[0])


def test_reflection_preserves_stone_property():
    r = reflect_rule(dpv_rule((0, 0, 6)), (0, 1))
    assert verify_stone_inflation(r)
    assert r.displacements != dpv_rule((0, 0, 6)).displacements


def test_twisted_rule_swaps_bars():
    r = builtin_rule("twisted4")
    M = substitution_matrix(r)
    assert M.shape == (4, 4)
    assert verify_stone_inflation(r)
