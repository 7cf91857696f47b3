import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from selfsim.algebra import AlgebraElement, EXACT, expand_combination
from selfsim.catalog import get_automaton, get_curve_family, get_map, get_pencil
from selfsim.dynamics import CurveFamily
from selfsim.expr import parse_combination
from selfsim.schur import Pencil
from selfsim.spectra import (
    NotHermitianError,
    SigmaCloud,
    curve_residual,
    hermitian_eigenvalues,
    level_spectrum,
    nested_distance,
    pullback_distance,
    spectrum_sweep,
)


def operator(group, body, spectral="s"):
    return Pencil.from_expressions(get_automaton(group), f"({body}) - {spectral}*e", [spectral])


# ---------------------------------------------------------------- examples

def test_two_by_two():
    assert np.allclose(hermitian_eigenvalues(np.array([[3.0, 1.0], [1.0, 3.0]])), [2, 4])


def test_diagonal_sorted():
    assert np.allclose(hermitian_eigenvalues(np.diag([3.0, -1.0, 2.0])), [-1, 2, 3])


def test_not_hermitian_rejected():
    with pytest.raises(NotHermitianError):
        hermitian_eigenvalues(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_grigorchuk_level_two_against_characteristic_polynomial():
    g = get_automaton("grigorchuk")
    m = expand_combination(AlgebraElement.from_symbolic(g, parse_combination(g, "a+b+c+d")), 2)
    exact = sp.Matrix(m.to_dense().tolist())
    s = sp.Symbol("s")
    roots = sorted(float(r) for r in sp.Poly(exact.charpoly(s).as_expr(), s).all_roots())
    assert np.allclose(hermitian_eigenvalues(m), roots, atol=1e-12)


def test_level_one_slices():
    assert np.allclose(level_spectrum(operator("grigorchuk", "a+b+c+d"), {}, "s", 1).eigenvalues, [2, 4])
    assert np.allclose(level_spectrum(operator("hanoi", "a+b+c"), {}, "s", 1).eigenvalues, [0, 0, 3])
    for n in range(4):
        assert np.allclose(level_spectrum(operator("trivial", "t"), {}, "s", n).eigenvalues, 1.0)


def test_five_parameter_slice():
    ev = level_spectrum(get_pencil("grigorchuk", "M5"), {"x": 1, "y": 1, "z": 1, "u": 1}, "v", 1).eigenvalues
    assert np.allclose(ev, [-4, -2])


def test_sweep_single_point():
    cloud = spectrum_sweep(get_pencil("grigorchuk", "R"), {"lam": [-1.0]}, "mu", 1)
    assert np.allclose(cloud.column("mu"), [1, 3])
    assert np.allclose(cloud.column("lam"), [-1, -1])


def test_sweep_empty_grid():
    cloud = spectrum_sweep(get_pencil("grigorchuk", "R"), {"lam": []}, "mu", 2)
    assert len(cloud) == 0
    assert cloud.csv().splitlines()[1] == "lam,eigenvalue"


def test_basilica_cloud_size_and_nesting():
    pencil = get_pencil("basilica", "R")
    grid = {"lam": list(np.linspace(-2, 2, 50))}
    prev = None
    for n in range(1, 7):
        cloud = spectrum_sweep(pencil, grid, "mu", n)
        assert len(cloud) <= 50 * 2 ** n
        if prev is not None:
            for lam in grid["lam"]:
                inner = prev.points[prev.points[:, 0] == lam, 1]
                outer = cloud.points[cloud.points[:, 0] == lam, 1]
                assert nested_distance(inner, outer) <= 1e-8
        prev = cloud


def test_line_points_have_zero_residual():
    fam = CurveFamily.from_strings(["lam", "mu"], None, [], ["lam + mu - 2"])
    cloud = SigmaCloud(1, ("lam", "mu"), np.array([[t, 2 - t] for t in np.linspace(-3, 3, 7)]))
    assert curve_residual(cloud, fam).max_residual == 0.0


@pytest.mark.parametrize("n", range(1, 6))
def test_grigorchuk_curves(n):
    cloud = spectrum_sweep(get_pencil("grigorchuk", "R"), {"lam": list(np.linspace(-4, 4, 41))}, "mu", n)
    rep = curve_residual(cloud, get_curve_family("grigorchuk", n))
    assert rep.max_residual <= 1e-6


@pytest.mark.parametrize("n", range(0, 5))
def test_hanoi_curves(n):
    cloud = spectrum_sweep(get_pencil("hanoi", "Delta"), {"y": list(np.linspace(-3, 3, 31))}, "x", n)
    rep = curve_residual(cloud, get_curve_family("hanoi", n))
    assert rep.max_residual <= 1e-6
    assert rep.text().startswith("MAX_RESIDUAL")


def test_pullback_small_level():
    pencil = get_pencil("grigorchuk", "R")
    cloud = spectrum_sweep(pencil, {"lam": list(np.linspace(-4, 4, 21))}, "mu", 3)
    worst, checked, _ = pullback_distance(cloud, pencil, "mu", get_map("F"), 2)
    assert checked > 0 and worst <= 1e-6


# -------------------------------------------------------------- properties

@given(st.integers(1, 8))
def test_four_is_always_in_the_spectrum(n):
    ev = level_spectrum(operator("grigorchuk", "a+b+c+d"), {}, "s", n).eigenvalues
    assert np.min(np.abs(ev - 4)) <= 1e-8


@given(st.sampled_from([("grigorchuk", "a+b+c+d"), ("basilica", "a+a'+b+b'"), ("hanoi", "a+b+c")]),
       st.integers(0, 6))
def test_nestedness(case, n):
    group, body = case
    if group == "hanoi" and n > 5:
        n = 5
    op = operator(group, body)
    inner = level_spectrum(op, {}, "s", n).eigenvalues
    outer = level_spectrum(op, {}, "s", n + 1).eigenvalues
    assert nested_distance(inner, outer) <= 1e-8


@given(st.floats(-3.9, 3.9), st.integers(1, 5))
def test_cloud_points_are_singular(lam, n):
    pencil = get_pencil("grigorchuk", "R")
    cloud = spectrum_sweep(pencil, {"lam": [lam]}, "mu", n)
    for _, mu in cloud.points:
        M = pencil.dense((lam, mu), n)
        assert np.linalg.svd(M, compute_uv=False)[-1] <= 1e-8 * max(1.0, np.abs(M).max())


@given(st.integers(1, 6), st.integers(1, 3))
def test_sweep_independent_of_workers(n, workers):
    pencil = get_pencil("grigorchuk", "R")
    grid = {"lam": [-2.0, 0.5, 3.0]}
    assert spectrum_sweep(pencil, grid, "mu", n, workers=workers).csv() == spectrum_sweep(pencil, grid, "mu", n).csv()


def test_exact_mode_charpoly_matches_level_three():
    g = get_automaton("basilica")
    x = AlgebraElement.from_symbolic(g, parse_combination(g, "a+a'+b+b'"), mode=EXACT)
    m = expand_combination(x, 3)
    s = sp.Symbol("s")
    roots = sorted(float(sp.re(r)) for r in sp.Poly(sp.Matrix(m.to_dense().tolist()).charpoly(s).as_expr(), s).all_roots())
    assert np.allclose(hermitian_eigenvalues(m), roots, atol=1e-9)
