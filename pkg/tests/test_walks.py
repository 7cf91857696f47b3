from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from selfsim.catalog import get_automaton
from selfsim.walks import (
    MeasureError,
    MeasureOnG,
    basilica_measure,
    entropy_profile,
    family_agreement,
    family_schur_map,
    finite_subgroup,
    get_family,
    grigorchuk_measure,
    measure_matrix,
    probabilistic_schur,
    self_affine_search,
    simulate_first_hit,
    solve_exact,
    strip_atom,
    tv_distance,
)

F = Fraction


def word(aut, text):
    return aut.parse_word(text)


def expected_mu1(alpha):
    # alpha/(1-alpha) + 4 beta m1 + 4 alpha beta/(1-alpha) m2, m1 = (1+a)/2, m2 = (1+b+c+d)/4
    beta = (1 - 2 * alpha) / 4
    c0, c1, c2 = alpha / (1 - alpha), 4 * beta, 4 * alpha * beta / (1 - alpha)
    return {"e": c0 + c1 / 2 + c2 / 4, "a": c1 / 2, "b": c2 / 4, "c": c2 / 4, "d": c2 / 4}


def coefficients(mu):
    aut = mu.automaton
    return {aut.format_word(w): c for w, c in mu.weights.items()}


rational_alpha = st.fractions(min_value=F(1, 100), max_value=F(49, 100), max_denominator=200)


# ------------------------------------------------------------ measure matrix

def test_delta_gives_diagonal():
    aut = get_automaton("grigorchuk")
    mm = measure_matrix(MeasureOnG.delta(aut))
    assert mm.entries[0][0] == MeasureOnG.delta(aut)
    assert mm.entries[1][1] == MeasureOnG.delta(aut)
    assert mm.entries[0][1].mass == 0 and mm.entries[1][0].mass == 0


def test_basilica_matrix_entries():
    r = F(3, 2)
    mu = basilica_measure(r)
    aut = mu.automaton
    p, q = 1 / (2 * (r + 1)), r / (2 * (r + 1))
    mm = measure_matrix(mu)
    assert coefficients(mm.entries[0][0]) == {"e": 2 * p}
    assert coefficients(mm.entries[1][1]) == {"b": p, "b'": p}
    off = {}
    for cell in (mm.entries[0][1], mm.entries[1][0]):
        for w, c in cell.weights.items():
            off[aut.format_word(w)] = off.get(aut.format_word(w), 0) + c
    assert off == {"a": q, "e": 2 * q, "a'": q}


def test_grigorchuk_matrix_entries():
    mu = grigorchuk_measure(F(1, 3))
    mm = measure_matrix(mu)
    assert coefficients(mm.entries[0][1]) == {"e": F(1, 3)}
    assert coefficients(mm.entries[1][0]) == {"e": F(1, 3)}
    assert coefficients(mm.entries[0][0]) == {"e": F(1, 2), "a": F(1, 6)}
    assert coefficients(mm.entries[1][1]) == {"e": F(5, 12), "b": F(1, 12), "c": F(1, 12), "d": F(1, 12)}


# ------------------------------------------------------- probabilistic Schur

def test_schur_fixes_delta():
    for name in ["grigorchuk", "basilica", "hanoi"]:
        aut = get_automaton(name)
        for i in range(aut.d):
            assert probabilistic_schur(MeasureOnG.delta(aut), i) == MeasureOnG.delta(aut)


@pytest.mark.parametrize("alpha", [F(1, 10), F(1, 5), F(1, 3), F(2, 5)])
def test_grigorchuk_first_hit_law(alpha):
    assert coefficients(probabilistic_schur(grigorchuk_measure(alpha), 0)) == expected_mu1(alpha)


def test_basilica_second_letter():
    r = F(1)
    k = probabilistic_schur(basilica_measure(r), 1)
    got = coefficients(k)
    assert got["a"] == got["a'"] == r / (4 * (r + 1))
    assert k.mass == 1


def test_deficient_measure_rejected():
    aut = get_automaton("grigorchuk")
    with pytest.raises(MeasureError):
        probabilistic_schur(MeasureOnG(aut, {word(aut, "a"): F(1, 2)}), 0)
    with pytest.raises(MeasureError):
        strip_atom(MeasureOnG(aut, {word(aut, "a"): F(1, 2)}))


def test_strip_atom_example():
    aut = get_automaton("grigorchuk")
    mu = MeasureOnG(aut, {(): F(1, 2), word(aut, "a"): F(1, 2)})
    stripped, atom = strip_atom(mu)
    assert atom == F(1, 2)
    assert stripped == MeasureOnG.delta(aut, word(aut, "a"))


def test_neumann_agrees_with_exact():
    mu = grigorchuk_measure(F(1, 5))
    exact = probabilistic_schur(mu, 0)
    approx = probabilistic_schur(mu.to_float(), 0, policy="neumann", mass_tol=1e-9, details=True)
    assert approx.deficit <= 1e-9
    assert tv_distance(approx.measure, exact) <= 1e-6


def test_neumann_deficit_decreases_with_terms():
    mu = grigorchuk_measure(F(1, 5)).to_float()
    deficits = [probabilistic_schur(mu, 0, policy="neumann", N=n, mass_tol=0.0, details=True).deficit
                for n in (1, 2, 4, 8, 16)]
    assert all(b <= a + 1e-15 for a, b in zip(deficits, deficits[1:]))
    assert deficits[-1] < deficits[0]


def test_finite_subgroup_klein():
    aut = get_automaton("grigorchuk")
    elems, _ = finite_subgroup(aut, [word(aut, x) for x in "bcd"])
    assert elems is not None and len(elems) == 4
    elems, _ = finite_subgroup(aut, [word(aut, "ab")], bound=64)
    assert len(elems) == 16  # ab has order 16
    bas = get_automaton("basilica")
    elems, _ = finite_subgroup(bas, [word(bas, "a")], bound=64)
    assert elems is None  # torsion free


def test_solve_exact():
    A = [[F(2), F(1)], [F(1), F(3)]]
    B = [[F(1)], [F(2)]]
    assert solve_exact(A, B) == [[F(1, 5)], [F(3, 5)]]


# ------------------------------------------------------------- Monte Carlo

def test_simulation_of_delta():
    aut = get_automaton("grigorchuk")
    res = simulate_first_hit(MeasureOnG.delta(aut), 0, 1000, seed=0)
    assert res.measure == MeasureOnG.delta(aut)
    assert res.lost == 0


def test_simulation_close_to_exact():
    mu = grigorchuk_measure(F(1, 3))
    res = simulate_first_hit(mu, 0, 20_000, seed=1)
    assert tv_distance(res.measure, probabilistic_schur(mu, 0)) <= 0.03


def test_simulation_independent_of_workers():
    mu = basilica_measure(2)
    a = simulate_first_hit(mu, 1, 20_000, seed=9, workers=1, chunk=4096)
    b = simulate_first_hit(mu, 1, 20_000, seed=9, workers=3, chunk=4096)
    assert a.measure.dumps() == b.measure.dumps()


# ----------------------------------------------------------------- families

def test_family_map_examples():
    assert family_schur_map("grigorchuk-alpha", 0, F(1, 3)) == F(1, 3)
    assert family_schur_map("grigorchuk-alpha", 1, F(2, 5)) == F(1, 5)
    assert family_schur_map("basilica-z", 1, F(1, 2)) == F(1, 2)
    z = F(1, 5)
    assert family_schur_map("basilica-z", 1, family_schur_map("basilica-z", 1, z)) == z


def test_family_domain_enforced():
    with pytest.raises(ValueError):
        family_schur_map("grigorchuk-alpha", 0, F(3, 4))
    with pytest.raises(KeyError):
        get_family("nope")


@pytest.mark.parametrize("k", range(1, 21))
def test_grigorchuk_family_closed_form(k):
    alpha = F(k, 42)
    for i in (0, 1):
        assert family_agreement("grigorchuk-alpha", i, alpha) <= 1e-12


@pytest.mark.parametrize("r", [F(k, 4) for k in range(1, 21)])
def test_basilica_family_closed_form(r):
    assert family_agreement("basilica-r", 1, r) <= 1e-12


def test_search_from_start():
    res = self_affine_search(F(45, 100), 0, tol=1e-12, max_iters=40, family="grigorchuk-alpha")
    assert res.converged and res.value == F(1, 3)
    assert res.coefficient == F(1, 2)
    aut = res.measure.automaton
    assert coefficients(res.measure) == {"a": F(4, 7), "b": F(1, 7), "c": F(1, 7), "d": F(1, 7)}
    assert aut.name == "grigorchuk"


def test_search_second_letter_degenerate():
    res = self_affine_search(F(2, 5), 1, tol=1e-12, max_iters=200, family="grigorchuk-alpha")
    assert res.converged and res.degenerate
    assert res.value == 0


def test_search_on_measures():
    start, _ = strip_atom(grigorchuk_measure(F(2, 5)))
    res = self_affine_search(start, 0, tol=1e-12, max_iters=200)
    assert res.converged and not res.degenerate
    target = MeasureOnG.from_text(start.automaton, "4/7 a + 1/7 b + 1/7 c + 1/7 d")
    assert tv_distance(res.measure, target) <= 1e-10
    assert abs(float(res.coefficient) - 0.5) <= 1e-10


def test_self_affinity_coefficient():
    aut = get_automaton("grigorchuk")
    tilde = MeasureOnG.from_text(aut, "4/7 a + 1/7 b + 1/7 c + 1/7 d")
    k = probabilistic_schur(tilde, 0)
    half = MeasureOnG(aut, {w: c / 2 for w, c in tilde.weights.items()})
    assert k.atom() == F(1, 2)
    assert tv_distance(strip_atom(k)[0], strip_atom(tilde.convolve(MeasureOnG.delta(aut)))[0]) == 0
    assert all(k[w] == half[w] for w in tilde.weights)


def test_serialization_roundtrip():
    mu = grigorchuk_measure(F(1, 7))
    text = mu.dumps("grigorchuk")
    assert text.splitlines()[0] == "# group=grigorchuk mass=1"
    assert MeasureOnG.loads(mu.automaton, text) == mu


def test_entropy_profile_runs():
    prof = entropy_profile(grigorchuk_measure(F(1, 3)), 3)
    assert len(prof) == 3 and all(h >= 0 for h in prof)


# -------------------------------------------------------------- properties

@given(st.sampled_from(["grigorchuk", "basilica", "hanoi", "img-z2+i"]),
       st.lists(st.integers(1, 9), min_size=3, max_size=6))
def test_mass_conservation(name, raw):
    aut = get_automaton(name)
    codes = [s for i in range(len(aut.names)) for s in (i + 1, -(i + 1))]
    total = sum(raw)
    weights = {}
    for k, c in enumerate(raw):
        w = (codes[k % len(codes)],) if k else ()
        weights[w] = weights.get(w, 0) + F(c, total)
    mu = MeasureOnG(aut, weights)
    mm = measure_matrix(mu)
    assert mm.total_mass == aut.d * mu.mass
    for x in range(aut.d):
        assert mm.column_mass(x) == mu.mass


@given(rational_alpha, st.sampled_from([0, 1]))
def test_schur_preserves_probability(alpha, i):
    k = probabilistic_schur(grigorchuk_measure(alpha), i)
    assert k.mass == 1
    assert all(c >= 0 for c in k.weights.values())


@given(rational_alpha)
def test_family_matches_closed_form(alpha):
    assert family_agreement("grigorchuk-alpha", 0, alpha) <= 1e-12
