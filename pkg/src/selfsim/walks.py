"""Probabilistic Schur maps on finitely supported measures and first-hit random walks.

A measure ``mu`` on the group drives the walk ``g -> h g`` with ``h ~ mu``.
Through the wreath recursion this walk becomes a chain on pairs
``(x, g)`` in ``X x G``: from ``(x, g)`` draw ``h``, move to
``(h(x), h|_x g)``.  The group coordinate at the first return to letter
``i`` has law ``k_i(mu) = A + B (I - D)^{-1} C`` where ``A, B, C, D`` are
the blocks of the measure matrix around ``i``.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real

import numpy as np

from .group import MealyAutomaton, WordCanonicalizer, WordProblemUndecided, shortlex_key

MASS_TOL = 1e-12
PRUNE = 1e-15
FINITE_GROUP_BOUND = 512
CHUNK = 8192


class MeasureError(ValueError):
    pass


class ExactPolicyError(MeasureError):
    """The complementary block does not live in a finite subgroup."""


class NeumannDivergence(MeasureError):
    pass


def _num(w):
    if isinstance(w, (Fraction, int)):
        return Fraction(w)
    if isinstance(w, float):
        return w
    if isinstance(w, str):
        return Fraction(w)
    if isinstance(w, Real):
        return float(w)
    raise MeasureError(f"bad weight {w!r}")


class MeasureOnG:
    """Finitely supported sub-probability measure on the group.

    Weights are Fractions (exact) or floats.  Keys are reduced words; the
    deficit ``1 - mass`` stands for truncated or missing mass.
    """

    def __init__(self, automaton: MealyAutomaton, weights: dict, check: bool = True):
        self.automaton = automaton
        acc: dict = {}
        for w, c in weights.items():
            w = automaton.reduce(w)
            acc[w] = acc.get(w, 0) + _num(c)
        self.weights = {w: c for w, c in acc.items() if c != 0}
        if check:
            for w, c in self.weights.items():
                if c < 0:
                    raise MeasureError(f"negative weight {c} on {automaton.format_word(w)}")
            if self.mass > 1 + MASS_TOL:
                raise MeasureError(f"mass {self.mass} exceeds 1")

    @classmethod
    def delta(cls, automaton, word=()):
        return cls(automaton, {word: Fraction(1)})

    @classmethod
    def from_text(cls, automaton, spec: str):
        """``"1/3 a + 1/12 b + ..."`` style measure description."""
        from .expr import parse_combination

        terms = parse_combination(automaton, spec)
        return cls(automaton, {w: Fraction(int(c.p), int(c.q)) for w, c in terms.items()})

    @property
    def exact(self) -> bool:
        return all(isinstance(c, Fraction) for c in self.weights.values())

    @property
    def mass(self):
        return sum(self.weights.values(), Fraction(0) if self.exact else 0.0)

    @property
    def deficit(self):
        return 1 - self.mass

    def __getitem__(self, word):
        return self.weights.get(self.automaton.reduce(word), 0)

    def atom(self):
        return self.weights.get((), 0)

    def support(self):
        return sorted(self.weights, key=shortlex_key)

    def to_float(self) -> "MeasureOnG":
        return MeasureOnG(self.automaton, {w: float(c) for w, c in self.weights.items()}, check=False)

    def canonical(self, depth_bound: int = 32) -> "MeasureOnG":
        """Merge words naming the same element; the shortlex-least spelling is kept."""
        reps = self.automaton.classify(self.weights, depth_bound)
        acc: dict = {}
        for w, c in self.weights.items():
            r = reps[w]
            acc[r] = acc.get(r, 0) + c
        return MeasureOnG(self.automaton, acc, check=False)

    def convolve(self, other: "MeasureOnG", canon=None) -> "MeasureOnG":
        """Law of ``g h`` with ``g ~ self`` and ``h ~ other`` independent."""
        canon = canon or self.automaton.reduce
        acc: dict = {}
        for u, a in self.weights.items():
            for v, b in other.weights.items():
                k = canon(self.automaton.multiply(u, v))
                acc[k] = acc.get(k, 0) + a * b
        return MeasureOnG(self.automaton, acc, check=False)

    def dumps(self, name: str | None = None) -> str:
        buf = io.StringIO()
        buf.write(f"# group={name or self.automaton.name} mass={self.mass}\n")
        for w in self.support():
            buf.write(f"{self.weights[w]}\t{self.automaton.format_word(w)}\n")
        return buf.getvalue()

    @classmethod
    def loads(cls, automaton, text: str) -> "MeasureOnG":
        weights = {}
        for line in text.splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            weight, word = line.split("\t")
            weights[automaton.parse_word(word)] = _num(weight)
        return cls(automaton, weights)

    def __eq__(self, other):
        return isinstance(other, MeasureOnG) and other.automaton is self.automaton and other.weights == self.weights

    def __repr__(self):
        fmt = self.automaton.format_word
        return "MeasureOnG(" + " + ".join(f"{self.weights[w]}*{fmt(w)}" for w in self.support()) + ")"


def tv_distance(mu: MeasureOnG, nu: MeasureOnG, depth_bound: int = 32) -> float:
    """Total variation ``(1/2) sum |mu - nu|`` after identifying equal elements; deficits count."""
    aut = mu.automaton
    reps = aut.classify(list(mu.weights) + list(nu.weights), depth_bound)
    diff: dict = {}
    for w, c in mu.weights.items():
        diff[reps[w]] = diff.get(reps[w], 0) + c
    for w, c in nu.weights.items():
        diff[reps[w]] = diff.get(reps[w], 0) - c
    gap = abs(float(mu.mass) - float(nu.mass))
    return 0.5 * (sum(abs(float(c)) for c in diff.values()) + gap)


# ------------------------------------------------------------ measure matrix

@dataclass
class MeasureMatrix:
    """``entries[y][x]`` collects ``mu(g) delta_{g|_x}`` over ``g`` with ``g(x) = y``."""

    automaton: MealyAutomaton
    entries: list

    @property
    def d(self):
        return len(self.entries)

    def masses(self):
        return [[e.mass for e in row] for row in self.entries]

    @property
    def total_mass(self):
        return sum(e.mass for row in self.entries for e in row)

    def column_mass(self, x):
        return sum(self.entries[y][x].mass for y in range(self.d))


def measure_matrix(mu: MeasureOnG) -> MeasureMatrix:
    aut = mu.automaton
    d = aut.d
    acc = [[{} for _ in range(d)] for _ in range(d)]
    for g, c in mu.weights.items():
        for x in range(d):
            y, sec = aut.step(g, x)
            cell = acc[y][x]
            cell[sec] = cell.get(sec, 0) + c
    return MeasureMatrix(aut, [[MeasureOnG(aut, cell, check=False) for cell in row] for row in acc])


# ------------------------------------------------------ probabilistic Schur

def _reachable(mm: MeasureMatrix, i: int) -> list:
    """Letters other than ``i`` that the chain can visit before returning to ``i``."""
    seen, stack = set(), [i]
    while stack:
        x = stack.pop()
        for y in range(mm.d):
            if y != i and y not in seen and mm.entries[y][x].weights:
                seen.add(y)
                stack.append(y)
    return sorted(seen)


def _check_recurrent(mm: MeasureMatrix, i: int, states: list):
    # every visited state must lead back to i
    for s in states:
        seen, stack, ok = {s}, [s], False
        while stack and not ok:
            x = stack.pop()
            for y in range(mm.d):
                if mm.entries[y][x].weights:
                    if y == i:
                        ok = True
                        break
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
        if not ok:
            raise MeasureError(f"letter {s} is reachable from {i} but never returns: chain not irreducible")


def finite_subgroup(aut: MealyAutomaton, words, bound: int = FINITE_GROUP_BOUND, depth_bound: int = 32):
    """Elements of the subgroup generated by ``words`` if it has at most ``bound`` elements."""
    canon = WordCanonicalizer(aut, depth_bound)
    gens = sorted({canon(w) for w in words if aut.reduce(w)}, key=shortlex_key)
    gens += [canon(aut.inverse(g)) for g in gens]
    elems = [canon(())]
    index = {elems[0]: 0}
    k = 0
    while k < len(elems):
        for g in gens:
            h = canon(aut.multiply(g, elems[k]))
            if h not in index:
                index[h] = len(elems)
                elems.append(h)
                if len(elems) > bound:
                    return None, canon
        k += 1
    return elems, canon


def solve_exact(A: list, B: list) -> list:
    """Solve ``A X = B`` over the rationals by Gauss-Jordan elimination."""
    n = len(A)
    m = len(B[0]) if B else 0
    aug = [list(A[r]) + list(B[r]) for r in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        row = [v / p for v in aug[col]]
        aug[col] = row
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], row)]
    return [r[n:n + m] for r in aug]


def _exact_resolvent(mm: MeasureMatrix, states: list, exact_numbers: bool):
    """``(I - D)^{-1}`` as a matrix of measures, computed in a finite group algebra."""
    aut = mm.automaton
    words = [w for r in states for s in states for w in mm.entries[r][s].weights]
    elems, canon = finite_subgroup(aut, words)
    if elems is None:
        raise ExactPolicyError(
            f"complementary block generates a group with more than {FINITE_GROUP_BOUND} elements; use the neumann policy")
    h = len(elems)
    index = {w: k for k, w in enumerate(elems)}
    m = len(states)
    zero, one = (Fraction(0), Fraction(1)) if exact_numbers else (0.0, 1.0)
    size = m * h
    L = [[zero] * size for _ in range(size)]
    for a in range(size):
        L[a][a] = one
    for ri, r in enumerate(states):
        for si, s in enumerate(states):
            for g, c in mm.entries[r][s].weights.items():
                g = canon(g)
                for hk, hw in enumerate(elems):
                    tgt = index[canon(aut.multiply(g, hw))]
                    L[ri * h + tgt][si * h + hk] -= c
    rhs = [[zero] * m for _ in range(size)]
    for si in range(m):
        rhs[si * h + index[elems[0]]][si] = one
    if exact_numbers:
        sol = solve_exact(L, rhs)
    else:
        sol = np.linalg.solve(np.array(L, dtype=float), np.array(rhs, dtype=float)).tolist()
    Y = [[None] * m for _ in range(m)]
    for ri in range(m):
        for si in range(m):
            Y[ri][si] = MeasureOnG(aut, {elems[k]: sol[ri * h + k][si] for k in range(h)}, check=False)
    return Y, canon


def _add_into(acc: dict, mu: MeasureOnG):
    for w, c in mu.weights.items():
        acc[w] = acc.get(w, 0) + c


@dataclass
class SchurResult:
    measure: MeasureOnG
    deficit: float = 0.0
    terms: int = 0


def probabilistic_schur(mu: MeasureOnG, i: int, policy: str = "exact", N: int | None = None,
                        mass_tol: float = 1e-6, details: bool = False):
    """First-hit law ``k_i(mu) = A + B (I - D)^{-1} C`` of the chain on ``X x G``.

    ``policy="exact"`` inverts ``I - D`` inside the finite group generated by
    the support of ``D``; ``policy="neumann"`` sums ``D^k`` until the mass
    still in transit drops below ``mass_tol`` (or ``N`` terms).
    """
    aut = mu.automaton
    if not 0 <= i < aut.d:
        raise ValueError(f"letter {i} outside the alphabet")
    if abs(float(mu.mass) - 1) > MASS_TOL:
        raise MeasureError(f"k_i needs a probability measure, mass is {mu.mass}")
    mm = measure_matrix(mu)
    states = _reachable(mm, i)
    _check_recurrent(mm, i, states)
    A = mm.entries[i][i]
    if not states:
        res = SchurResult(A.canonical(), 0.0, 1)
        return res if details else res.measure
    if policy == "exact":
        Y, canon = _exact_resolvent(mm, states, mu.exact)
        acc: dict = {}
        _add_into(acc, A)
        for ri, r in enumerate(states):
            for si, s in enumerate(states):
                part = mm.entries[i][r].convolve(Y[ri][si], canon).convolve(mm.entries[s][i], canon)
                _add_into(acc, part)
        out = MeasureOnG(aut, acc, check=False).canonical()
        res = SchurResult(out, float(1 - out.mass), len(states))
    elif policy == "neumann":
        res = _neumann(mm, i, states, N, mass_tol)
    else:
        raise ValueError("policy must be 'exact' or 'neumann'")
    return res if details else res.measure


def _neumann(mm, i, states, N, mass_tol):
    aut = mm.automaton
    canon = WordCanonicalizer(aut)
    fl = lambda m: {canon(w): float(c) for w, c in m.weights.items()}  # noqa: E731
    acc: dict = {}
    for w, c in fl(mm.entries[i][i]).items():
        acc[w] = acc.get(w, 0.0) + c
    # v[s] is the law of the group coordinate on first visits paths ending at s
    v = {s: fl(mm.entries[s][i]) for s in states}
    limit = N if N is not None else 10_000
    transit = sum(sum(x.values()) for x in v.values())
    history = [transit]
    for k in range(limit):
        for s in states:
            for u, b in v[s].items():
                for w, a in mm.entries[i][s].weights.items():
                    key = canon(aut.multiply(w, u))
                    acc[key] = acc.get(key, 0.0) + float(a) * b
        nxt = {r: {} for r in states}
        for s in states:
            for u, b in v[s].items():
                for r in states:
                    for w, a in mm.entries[r][s].weights.items():
                        key = canon(aut.multiply(w, u))
                        nxt[r][key] = nxt[r].get(key, 0.0) + float(a) * b
        v = {r: {w: c for w, c in x.items() if c > PRUNE} for r, x in nxt.items()}
        transit = sum(sum(x.values()) for x in v.values())
        history.append(transit)
        if transit < mass_tol:
            break
        if k >= 50 and transit >= history[k - 50] * (1 - 1e-9):
            raise NeumannDivergence(f"mass in transit not decreasing ({transit:.3e}); spectral mass >= 1")
    else:
        if N is None:
            raise NeumannDivergence(f"no convergence within {limit} terms; mass in transit {transit:.3e}")
    out = MeasureOnG(aut, acc, check=False)
    return SchurResult(out, float(1 - out.mass), len(history))


def strip_atom(mu: MeasureOnG):
    """Remove the identity atom and renormalize; returns ``(measure, removed weight)``."""
    if abs(float(mu.mass) - 1) > MASS_TOL:
        raise MeasureError(f"strip_atom needs mass 1, got {mu.mass}")
    atom = mu.atom()
    if atom >= 1 - (0 if mu.exact else MASS_TOL):
        raise MeasureError("measure is the identity atom")
    rest = {w: c / (1 - atom) for w, c in mu.weights.items() if w != ()}
    return MeasureOnG(mu.automaton, rest, check=False), atom


# ------------------------------------------------------------- Monte Carlo

def _chunk_tables(mu: MeasureOnG):
    aut = mu.automaton
    words = mu.support()
    perms = [aut.first_level(w) for w in words]
    secs = [tuple(aut.step(w, x)[1] for x in range(aut.d)) for w in words]
    probs = np.array([float(mu.weights[w]) for w in words], dtype=float)
    return words, perms, secs, probs


def _reduce_free(word, invol, trivial):
    out = []
    for s in word:
        i = abs(s) - 1
        if i in trivial:
            continue
        if i in invol:
            s = i + 1
            if out and out[-1] == s:
                out.pop()
                continue
        if out and out[-1] == -s:
            out.pop()
        else:
            out.append(s)
    return tuple(out)


def _run_chunk(args):
    perms, secs, probs, i, count, max_steps, seed_seq, invol, trivial = args
    rng = np.random.default_rng(seed_seq)
    cum = np.cumsum(probs)
    total = cum[-1]
    counts: dict = {}
    lost = 0
    batch = np.empty(0, dtype=np.int64)
    pos = 0
    for _ in range(count):
        x, g = i, ()
        for _step in range(max_steps):
            if pos >= len(batch):
                u = rng.random(4096) * total
                batch = np.minimum(np.searchsorted(cum, u, side="right"), len(probs) - 1)
                pos = 0
            j = int(batch[pos])
            pos += 1
            sec = secs[j][x]
            x = perms[j][x]
            if sec:
                g = _reduce_free(sec + g, invol, trivial)
            if x == i:
                counts[g] = counts.get(g, 0) + 1
                break
        else:
            lost += 1
    return counts, lost


@dataclass
class FirstHitSample:
    measure: MeasureOnG
    samples: int
    lost: int
    counts: dict = field(default_factory=dict)


def simulate_first_hit(mu: MeasureOnG, i: int, n_samples: int, max_steps: int = 10_000, seed: int = 0,
                       workers: int = 1, chunk: int = CHUNK) -> FirstHitSample:
    """Empirical law of the group coordinate at the first return to letter ``i``.

    Samples are split into fixed chunks, each with its own stream spawned from
    ``seed``, so the result does not depend on ``workers``.  Runs that do not
    return within ``max_steps`` are counted as missing mass.
    """
    if n_samples < 1 or max_steps < 1:
        raise ValueError("n_samples and max_steps must be positive")
    aut = mu.automaton
    if not 0 <= i < aut.d:
        raise ValueError(f"letter {i} outside the alphabet")
    _, perms, secs, probs = _chunk_tables(mu)
    sizes = [min(chunk, n_samples - k) for k in range(0, n_samples, chunk)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(perms, secs, probs, i, c, max_steps, s, aut._involutions, aut._trivial_states)
            for c, s in zip(sizes, seeds)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(min(workers, len(jobs))) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(j) for j in jobs]
    counts: dict = {}
    lost = 0
    for c, l in parts:
        lost += l
        for w, k in c.items():
            counts[w] = counts.get(w, 0) + k
    reps = aut.classify(counts)
    merged: dict = {}
    for w, k in counts.items():
        merged[reps[w]] = merged.get(reps[w], 0) + k
    emp = MeasureOnG(aut, {w: Fraction(k, n_samples) for w, k in merged.items()}, check=False)
    return FirstHitSample(emp, n_samples, lost, merged)


# ---------------------------------------------------------------- families

def grigorchuk_measure(alpha) -> MeasureOnG:
    """``alpha a + beta (b + c + d) + (alpha + beta) e`` with ``2 alpha + 4 beta = 1``."""
    from .catalog import get_automaton

    alpha = _num(alpha)
    if not 0 <= alpha <= Fraction(1, 2):
        raise MeasureError("alpha must lie in [0, 1/2]")
    beta = (1 - 2 * alpha) / 4
    aut = get_automaton("grigorchuk")
    p = aut.parse_word
    return MeasureOnG(aut, {p("a"): alpha, p("b"): beta, p("c"): beta, p("d"): beta, (): alpha + beta})


def basilica_measure(r) -> MeasureOnG:
    """``(a + a' + r b + r b') / (2 (r + 1))``."""
    from .catalog import get_automaton

    r = _num(r)
    if not r > 0:
        raise MeasureError("r must be positive")
    aut = get_automaton("basilica")
    p = aut.parse_word
    w = 1 / (2 * (r + 1))
    return MeasureOnG(aut, {p("a"): w, p("a'"): w, p("b"): r * w, p("b'"): r * w})


def _basilica_z_measure(z):
    z = _num(z)
    if not z > 0:
        raise MeasureError("z must be positive")
    return basilica_measure(1 / (2 * z))


@dataclass(frozen=True)
class Family:
    name: str
    measure: object  # value -> MeasureOnG
    maps: dict  # letter -> closed-form renormalization
    domain: tuple  # open interval
    parameter: object  # stripped MeasureOnG -> value


def _grig_param(mu):
    # weight on a relative to the non-identity mass of the family measure
    a, b = mu["a"], mu["b"]
    if not b:
        return Fraction(1, 2)
    # alpha / beta = a / b together with 2 alpha + 4 beta = 1
    ratio = a / b
    return ratio / (2 * ratio + 4)


def _bas_param(mu):
    return mu["b"] / mu["a"]


FAMILIES = {
    "grigorchuk-alpha": Family("grigorchuk-alpha", grigorchuk_measure,
                               {0: lambda a: (1 - a) / 2, 1: lambda a: a / 2},
                               (0, Fraction(1, 2)), _grig_param),
    "basilica-r": Family("basilica-r", basilica_measure, {1: lambda r: 2 / r}, (0, math.inf), _bas_param),
    "basilica-z": Family("basilica-z", _basilica_z_measure, {1: lambda z: 1 / (4 * z)}, (0, math.inf),
                         lambda mu: 1 / (2 * _bas_param(mu))),
}
FAMILY_ALIASES = {"grigorchuk": "grigorchuk-alpha", "grigorchuk-α": "grigorchuk-alpha", "basilica": "basilica-r"}


def get_family(name) -> Family:
    name = FAMILY_ALIASES.get(name, name)
    try:
        return FAMILIES[name]
    except KeyError:
        raise KeyError(f"unknown family {name!r}; available: {', '.join(sorted(FAMILIES))}") from None


def family_schur_map(family: str, i: int, value):
    """Closed-form one-dimensional renormalization of a measure family."""
    fam = get_family(family)
    if i not in fam.maps:
        raise ValueError(f"family {fam.name} has no closed form for letter {i}")
    lo, hi = fam.domain
    v = _num(value)
    if not lo < v < hi:
        raise ValueError(f"value {value} outside the domain ({lo}, {hi}) of {fam.name}")
    return fam.maps[i](v)


def family_agreement(family: str, i: int, value) -> float:
    """TV distance between ``strip(k_i(mu(v)))`` and ``strip(mu(phi(v)))``."""
    fam = get_family(family)
    mu = fam.measure(value)
    lhs, _ = strip_atom(probabilistic_schur(mu, i))
    rhs, _ = strip_atom(fam.measure(family_schur_map(family, i, value)))
    return tv_distance(lhs, rhs)


# ------------------------------------------------------- self-affine search

@dataclass
class SelfAffineResult:
    converged: bool
    measure: MeasureOnG | None
    coefficient: object = None
    iterations: int = 0
    degenerate: bool = False
    value: object = None
    history: list = field(default_factory=list)
    message: str = ""


def _is_degenerate(mu: MeasureOnG) -> bool:
    elems, _ = finite_subgroup(mu.automaton, list(mu.weights), bound=64)
    return elems is not None


def self_affine_search(start, i: int, tol: float = 1e-12, max_iters: int = 200, family: str | None = None):
    """Iterate ``strip o k_i`` to a self-affine measure ``k_i(mu) = (1 - c) delta_e + c mu``.

    ``start`` is a MeasureOnG or, with ``family``, a family parameter value.
    A fixed point whose support generates a finite group is reported as
    degenerate.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if family is not None:
        fam = get_family(family)
        v = _num(start)
        history = [v]
        for it in range(1, max_iters + 1):
            nv = family_schur_map(family, i, v) if fam.domain[0] < v < fam.domain[1] else v
            history.append(nv)
            if abs(float(nv) - float(v)) < tol:
                v = nv
                break
            v = nv
        else:
            return SelfAffineResult(False, None, iterations=max_iters, history=history,
                                    message=f"no fixed point within {max_iters} iterations")
        # limit on the boundary of the family domain
        limit = _snap(v, tol)
        mu = fam.measure(limit)
        fixed, _ = strip_atom(mu)
        degenerate = _is_degenerate(fixed)
        coeff = None
        if not degenerate:
            k = probabilistic_schur(fixed, i)
            coeff = 1 - k.atom()
        return SelfAffineResult(True, fixed, coeff, it, degenerate, limit, history,
                                "degenerate fixed point" if degenerate else "")
    mu = start
    if mu.atom():
        mu, _ = strip_atom(mu)
    history = []
    for it in range(1, max_iters + 1):
        k = probabilistic_schur(mu, i)
        try:
            nxt, atom = strip_atom(k)
        except MeasureError:
            return SelfAffineResult(True, MeasureOnG.delta(mu.automaton), None, it, True, message="collapsed to the identity")
        dist = tv_distance(nxt, mu)
        history.append(dist)
        mu = nxt
        if dist < tol:
            break
    else:
        return SelfAffineResult(False, mu, iterations=max_iters, history=history,
                                message=f"no fixed point within {max_iters} iterations")
    degenerate = _is_degenerate(mu)
    coeff = None if degenerate else 1 - probabilistic_schur(mu, i).atom()
    return SelfAffineResult(True, mu, coeff, it, degenerate, None, history,
                            "degenerate fixed point" if degenerate else "")


def _snap(v, tol):
    """Replace a float limit by a nearby simple fraction when one is within ``tol``."""
    if isinstance(v, Fraction) and v.denominator < 10**6:
        return v
    f = Fraction(float(v)).limit_denominator(1000)
    return f if abs(float(f) - float(v)) <= max(tol, 1e-12) * 10 else v


# --------------------------------------------------------------- diagnostics

def entropy_profile(mu: MeasureOnG, steps: int, prune: float = 1e-12, depth_bound: int = 32):
    """``H(mu^{*n}) / n`` for ``n = 1..steps`` (Shannon entropy in nats, pruned supports)."""
    canon = WordCanonicalizer(mu.automaton, depth_bound)
    base = MeasureOnG(mu.automaton, {canon(w): float(c) for w, c in mu.weights.items()}, check=False)
    cur = base
    out = []
    for n in range(1, steps + 1):
        if n > 1:
            cur = cur.convolve(base, canon)
            cur = MeasureOnG(mu.automaton, {w: c for w, c in cur.weights.items() if c > prune}, check=False)
        h = -sum(c * math.log(c) for c in cur.weights.values() if c > 0)
        out.append(h / n)
    return out


def return_probabilities(mu: MeasureOnG, steps: int, prune: float = 1e-12):
    """``mu^{*n}(e)`` for ``n = 1..steps``."""
    canon = WordCanonicalizer(mu.automaton)
    base = MeasureOnG(mu.automaton, {canon(w): float(c) for w, c in mu.weights.items()}, check=False)
    cur, out = base, [float(base.atom())]
    for _ in range(steps - 1):
        cur = cur.convolve(base, canon)
        cur = MeasureOnG(mu.automaton, {w: c for w, c in cur.weights.items() if c > prune}, check=False)
        out.append(float(cur.atom()))
    return out


__all__ = [
    "MeasureOnG", "MeasureMatrix", "measure_matrix", "probabilistic_schur", "simulate_first_hit", "strip_atom",
    "family_schur_map", "family_agreement", "self_affine_search", "tv_distance", "grigorchuk_measure", "basilica_measure",
    "entropy_profile", "return_probabilities", "FAMILIES", "WordProblemUndecided",
]
