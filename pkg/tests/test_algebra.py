import itertools
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from selfsim.algebra import (
    COMPLEX,
    EXACT,
    AlgebraElement,
    LevelMatrix,
    ModeError,
    expand_combination,
    expand_element,
    parse_export,
)
from selfsim.catalog import get_automaton, get_pencil
from selfsim.expr import ExpressionError, parse_combination

GROUPS = ["grigorchuk", "basilica", "hanoi", "adding-machine", "img-z2+i", "gw", "sidki"]


def index_of(v, d):
    i = 0
    for x in v:
        i = i * d + x
    return i


@st.composite
def element(draw, names=GROUPS, max_len=5):
    aut = get_automaton(draw(st.sampled_from(names)))
    codes = [s for i in range(len(aut.names)) for s in (i + 1, -(i + 1))]
    return aut, tuple(draw(st.lists(st.sampled_from(codes), max_size=max_len)))


@st.composite
def combination(draw, aut, max_terms=4):
    codes = [s for i in range(len(aut.names)) for s in (i + 1, -(i + 1))]
    terms = {}
    for _ in range(draw(st.integers(1, max_terms))):
        w = aut.reduce(draw(st.lists(st.sampled_from(codes), max_size=3)))
        terms[w] = terms.get(w, 0) + Fraction(draw(st.integers(-5, 5)), draw(st.integers(1, 4)))
    return AlgebraElement(aut, terms, EXACT)


# ---------------------------------------------------------------- examples

def test_grigorchuk_a_level_one():
    g = get_automaton("grigorchuk")
    m = expand_element(g.element("a"), 1)
    assert np.array_equal(m.to_dense(), np.array([[0, 1], [1, 0]], dtype=object))


def test_identity_is_identity_matrix():
    g = get_automaton("basilica")
    for n in range(4):
        m = expand_element(g.identity, n).to_dense()
        assert np.array_equal(m.astype(int), np.eye(2 ** n, dtype=int))


def test_grigorchuk_b_level_two():
    g = get_automaton("grigorchuk")
    m = expand_element(g.element("b"), 2).to_dense().astype(int)
    expected = np.zeros((4, 4), dtype=int)
    expected[:2, :2] = [[0, 1], [1, 0]]
    expected[2:, 2:] = np.eye(2, dtype=int)
    assert np.array_equal(m, expected)


def test_five_parameter_pencil_level_one():
    pencil = get_pencil("grigorchuk", "M5")
    for point in [(1, 2, 3, 4, 5), (Fraction(1, 2), -1, 0, 7, Fraction(-3, 4))]:
        m = pencil.evaluate(dict(zip("xyzuv", point)), EXACT)[0][0]
        dense = expand_combination(m, 1).to_dense()
        s = sum(point[1:])
        assert dense[0, 0] == s and dense[1, 1] == s
        assert dense[0, 1] == point[0] and dense[1, 0] == point[0]


@pytest.mark.parametrize("n", range(1, 7))
def test_grigorchuk_kernel_identity(n):
    g = get_automaton("grigorchuk")
    terms = parse_combination(g, "((b+c+d-1)/2)^2 - 1")
    alpha2 = AlgebraElement.from_symbolic(g, terms)
    a = AlgebraElement.of(g.element("a"))
    x = alpha2 * a * alpha2 * a
    assert not x.is_zero()  # nonzero in the group algebra
    assert expand_combination(x, n).is_zero()


@pytest.mark.parametrize("n", range(1, 7))
def test_gw_kernel_identity(n):
    g = get_automaton("gw")
    x = AlgebraElement.from_symbolic(g, parse_combination(g, "b + c - b*c - 1"))
    assert expand_combination(x, n).is_zero()


def test_level_one_generator_sum():
    g = get_automaton("grigorchuk")
    x = AlgebraElement.from_symbolic(g, parse_combination(g, "a+b+c+d"))
    assert np.array_equal(expand_combination(x, 1).to_dense().astype(int), [[3, 1], [1, 3]])


def test_exact_mode_rejects_floats_as_symbols():
    g = get_automaton("grigorchuk")
    sym = parse_combination(g, "t*a", ["t"])
    with pytest.raises(ModeError):
        AlgebraElement.from_symbolic(g, sym, {sp.Symbol("t"): sp.sqrt(2)}, EXACT)


def test_expression_errors():
    g = get_automaton("grigorchuk")
    for bad in ["a +", "a / b", "q", "(a"]:
        with pytest.raises(ExpressionError):
            parse_combination(g, bad)


def test_export_roundtrip():
    g = get_automaton("hanoi")
    x = AlgebraElement.from_symbolic(g, parse_combination(g, "a + 2*b - c/3"), mode=COMPLEX)
    m = expand_combination(x, 2)
    back = parse_export(m.export())
    assert np.allclose(back.array(), m.array())


def test_sparse_storage_at_high_level():
    g = get_automaton("grigorchuk")
    m = expand_element(g.element("a"), 8, COMPLEX)
    assert m.is_sparse
    assert np.allclose((m @ m).array(), np.eye(256))


# -------------------------------------------------------------- properties

@given(element(), st.integers(0, 5))
def test_expand_matches_action(data, n):
    aut, w = data
    m = expand_element(aut.element(w), n).to_dense()
    d = aut.d
    for v in itertools.product(range(d), repeat=n):
        y = aut.act(w, v)
        col = m[:, index_of(v, d)]
        assert col[index_of(y, d)] == 1
        assert sum(col) == 1


@given(element(), st.integers(0, 5))
def test_inverse_is_transpose(data, n):
    aut, w = data
    m = expand_element(aut.element(w), n)
    mi = expand_element(aut.element(aut.inverse(w)), n)
    assert mi == m.transpose()


@given(element(), st.integers(0, 5))
def test_unitarity(data, n):
    aut, w = data
    m = expand_element(aut.element(w), n)
    mi = expand_element(aut.element(aut.inverse(w)), n)
    prod = (m @ mi).to_dense()
    assert np.array_equal(prod.astype(int), np.eye(aut.d ** n, dtype=int))


@given(st.data(), st.sampled_from(["grigorchuk", "basilica", "hanoi", "gw"]), st.integers(0, 4))
def test_expansion_is_an_algebra_map(data, name, n):
    aut = get_automaton(name)
    x = data.draw(combination(aut))
    y = data.draw(combination(aut))
    ex, ey = expand_combination(x, n), expand_combination(y, n)
    assert expand_combination(x + y, n) == ex + ey
    assert expand_combination(x * y, n) == ex @ ey
    assert expand_combination(x.star(), n) == ex.transpose()


@given(st.sampled_from(["grigorchuk", "hanoi", "c2c2c2", "gw"]), st.integers(0, 5),
       st.lists(st.floats(-3, 3, allow_nan=False), min_size=3, max_size=3))
def test_involutive_generators_give_hermitian_matrices(name, n, coeffs):
    aut = get_automaton(name)
    terms = {(i + 1,): c for i, c in zip(range(len(aut.names)), coeffs)}
    x = AlgebraElement(aut, terms, COMPLEX)
    assert expand_combination(x, n).is_hermitian()


def test_level_matrix_mode_mismatch():
    a = LevelMatrix(1, 2, {(0, 0): Fraction(1)}, EXACT)
    b = LevelMatrix(1, 2, np.eye(2), COMPLEX)
    with pytest.raises(ModeError):
        a + b
