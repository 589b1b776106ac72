import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcmap import (MapSpecSyntaxError, MapValidationError, affine_map, list_fixtures, load_fixture,
                   parse_map_spec, serialize_map, validate_map)
from pcmap.core import ExprBranch, evaluate
from pcmap.expr import Num, parse_expr, node_count, to_text, interval_eval, compile_expr
from pcmap.fixtures import fixture_text

F1_TEXT = """
# f1
backend = exact
partition = [1/2]
branch {
  kind = affine
  slope = 1/2
  intercept = 1/8
}
branch {
  kind = affine
  slope = 1/2
  intercept = 3/8
}
"""


def test_f1_text_equals_programmatic():
    assert parse_map_spec(F1_TEXT) == affine_map(["1/2"], [("1/2", "1/8"), ("1/2", "3/8")])


def test_malformed_slope_reports_position():
    bad = F1_TEXT.replace("slope = 1/2\n  intercept = 1/8", "slope = ;\n  intercept = 1/8")
    with pytest.raises(MapSpecSyntaxError) as exc:
        parse_map_spec(bad)
    assert exc.value.line == 7
    assert exc.value.column == 11
    assert "line 7, column 11" in str(exc.value)


def test_missing_backend():
    with pytest.raises(MapSpecSyntaxError):
        parse_map_spec(F1_TEXT.replace("backend = exact", ""))


def test_invalid_map_raises_validation_error():
    bad = F1_TEXT.replace("intercept = 3/8", "intercept = 3")
    with pytest.raises(MapValidationError):
        parse_map_spec(bad)
    m = parse_map_spec(bad, validate=False)
    assert not validate_map(m).ok


def test_expression_tree_size():
    # * ( + (sqrt(x), 0.618), + (sqrt(x), 0.618) ): every operator, call,
    # variable and literal is one node
    tree = parse_expr("(sqrt(x) + 0.618) * (sqrt(x) + 0.618)")
    assert node_count(tree) == 9


@pytest.mark.parametrize("text", ["x +", "sqrt(x", "2 ** x", "y + 1", "(x))"])
def test_expression_syntax_errors(text):
    with pytest.raises(MapSpecSyntaxError):
        parse_expr(text)


def test_expression_precedence():
    f = compile_expr(parse_expr("1 - x - x / 2 * 3"))
    assert f(0.5) == pytest.approx(1 - 0.5 - 0.5 / 2 * 3)
    assert to_text(parse_expr("(1 - (x - 2))")) == "1 - (x - 2)"


def test_interval_bound_encloses_samples():
    tree = parse_expr("(sqrt(x) + 0.5) * (sqrt(x) - 0.25)")
    lo, hi = interval_eval(tree, 0.0, 1.0)
    f = compile_expr(tree)
    assert all(lo <= f(j / 200) <= hi for j in range(201))


@pytest.mark.parametrize("name", [n for n, _ in list_fixtures()])
def test_fixture_round_trip(name):
    m = load_fixture(name)
    assert validate_map(m).ok
    text = serialize_map(m)
    assert parse_map_spec(text) == m
    assert serialize_map(parse_map_spec(text)) == text


def test_fixture_text_is_package_data():
    assert "backend = exact" in fixture_text("f1")


_num = st.fractions(min_value=0, max_value=1, max_denominator=1000)


@settings(max_examples=100, deadline=None)
@given(st.lists(_num, min_size=1, max_size=4, unique=True), st.data())
def test_serialize_round_trip_random_affine(interior, data):
    interior = sorted(v for v in interior if 0 < v < 1)
    branches = []
    for _ in range(len(interior) + 1):
        b = data.draw(_num)
        a = data.draw(st.fractions(min_value=0, max_value=1 - b, max_denominator=1000))
        branches.append((a, b))
    m = affine_map(interior, branches)
    assert validate_map(m).ok
    assert parse_map_spec(serialize_map(m)) == m


@settings(max_examples=100, deadline=None)
@given(st.recursive(
    st.sampled_from(["x", "0.5", "2", "1/4"]),
    lambda inner: st.one_of(
        st.builds(lambda a, op, b: f"({a} {op} {b})", inner, st.sampled_from("+-*"), inner),
        st.builds(lambda a: f"sqrt({a})", inner)),
    max_leaves=8))
def test_expression_text_round_trip(text):
    tree = parse_expr(text)
    assert parse_expr(to_text(tree)) == tree


def test_expr_branch_value():
    br = ExprBranch.from_text("x * x")
    assert br(0.5) == 0.25
    assert isinstance(parse_expr("0.25"), Num)


def test_side_lines_parse():
    text = F1_TEXT.replace("partition = [1/2]", "partition = [1/2]\nside = left")
    m = parse_map_spec(text)
    assert evaluate(m, "1/2") == evaluate(m, "0") + 1 / 4
