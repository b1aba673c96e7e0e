import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lincvx import expr
from lincvx.points import (DimensionError, as_cpoint, bilinear, from_reals, hermitian, pairs,
                           parse_point, random_in_ball, random_unit_directions, to_reals)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


@given(st.lists(finite, min_size=2, max_size=8).filter(lambda v: len(v) % 2 == 0))
def test_real_complex_roundtrip_is_exact(vals):
    z = from_reals(vals)
    assert to_reals(z).tolist() == [float(v) for v in vals]


def test_parse_point():
    z = parse_point("1, 2, -3, 0.5")
    assert np.array_equal(z, np.array([1 + 2j, -3 + 0.5j]))
    with pytest.raises(DimensionError):
        parse_point("1,2,3")
    with pytest.raises(DimensionError):
        parse_point("1,2", n=2)
    with pytest.raises(DimensionError):
        parse_point("a,b")


def test_as_cpoint_forms():
    target = np.array([0.5 + 0j, 0.1 + 0.2j])
    assert np.array_equal(as_cpoint([0.5, 0.1 + 0.2j]), target)
    assert np.array_equal(as_cpoint([[0.5, 0], [0.1, 0.2]]), target)
    assert np.array_equal(as_cpoint([0.5, 0, 0.1, 0.2], 2), target)
    assert np.array_equal(as_cpoint([0.5, 0], 2), np.array([0.5, 0]))
    with pytest.raises(ValueError):
        as_cpoint([np.nan, 0], 1)
    with pytest.raises(DimensionError):
        from_reals(np.zeros(10))


def test_pairings():
    u, v = np.array([1j, 2]), np.array([1j, 1])
    assert bilinear(u, v) == -1 + 2
    assert hermitian(u, v) == 1 + 2
    assert pairs(u) == [[0.0, 1.0], [2.0, 0.0]]


def test_random_samplers_shapes_and_norms():
    rng = np.random.default_rng(0)
    d = random_unit_directions(rng, 50, 2)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    b = random_in_ball(rng, 200, 2, 0.3)
    assert np.all(np.linalg.norm(b, axis=1) <= 0.3)


def test_expression_evaluation():
    tree = ["sub", ["add", ["pow", "x1", 2], ["pow", "y1", 2], ["pow", "x2", 2], ["pow", "y2", 2]], 1]
    expr.validate(tree, 2)
    x = np.array([[0.0, 0, 0, 0], [1, 0, 0, 0], [0.5, 0.5, 0.5, 0.5]])
    assert np.allclose(expr.evaluate(tree, x), [-1.0, 0.0, 0.0])
    ops = ["add", ["neg", "x1"], ["abs", "y1"], ["sqrt", 4], ["exp", 0], ["div", 1, 2],
           ["min", 3, 5], ["max", -1, -2], ["mul", 2, 3]]
    assert np.allclose(expr.evaluate(ops, np.array([[1.0, -2.0]])), [-1 + 2 + 2 + 1 + 0.5 + 3 - 1 + 6])


@pytest.mark.parametrize("bad", [["frob", 1], ["pow", "x1", "y1"], "z1", ["add"], True, [], ["sub", 1]])
def test_expression_rejects_malformed(bad):
    with pytest.raises(expr.ExpressionError):
        expr.validate(bad, 2)


def test_expression_rejects_coordinates_outside_dimension():
    with pytest.raises(expr.ExpressionError):
        expr.validate(["add", "x1", "x2"], 1)
