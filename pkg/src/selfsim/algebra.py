"""Group-algebra elements and their level-n matrices.

``expand_element(g, n)`` is the permutation matrix with entry 1 at
``(g(v), v)`` for every word ``v`` of length ``n`` (rows are images, columns
are inputs; the first letter of a word is its most significant digit).
Linear combinations expand linearly.  Two scalar modes are supported:
``"exact"`` (``fractions.Fraction``) and ``"complex"`` (numpy complex128).
"""

from __future__ import annotations

import io
from fractions import Fraction
from numbers import Number

import numpy as np
import scipy.sparse as sps

from .group import GroupElement, MealyAutomaton, shortlex_key

EXACT = "exact"
COMPLEX = "complex"
MODES = (EXACT, COMPLEX)
DENSITY_THRESHOLD = 0.25


class ModeError(TypeError):
    pass


def to_exact(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, np.integer)):
        return Fraction(int(c))
    if hasattr(c, "p") and hasattr(c, "q"):  # sympy Rational
        return Fraction(int(c.p), int(c.q))
    if isinstance(c, str):
        return Fraction(c)
    raise ModeError(f"{c!r} is not an exact rational")


def _coerce(c, mode):
    return to_exact(c) if mode == EXACT else complex(c)


class AlgebraElement:
    """Finitely supported combination of group elements.

    Keys are freely reduced words; zero coefficients are never stored.
    """

    __slots__ = ("automaton", "mode", "terms")

    def __init__(self, automaton: MealyAutomaton, terms=None, mode: str = EXACT):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.automaton = automaton
        self.mode = mode
        acc: dict = {}
        for w, c in (terms or {}).items():
            w = automaton.reduce(w.word if isinstance(w, GroupElement) else w)
            acc[w] = acc.get(w, 0) + _coerce(c, mode)
        self.terms = {w: c for w, c in acc.items() if c != 0}

    @classmethod
    def of(cls, g: GroupElement, coeff=1, mode=EXACT):
        return cls(g.automaton, {g.word: coeff}, mode)

    @classmethod
    def from_symbolic(cls, automaton, symbolic: dict, values: dict | None = None, mode=EXACT):
        """Evaluate a parsed combination (word -> sympy coefficient) at ``values``."""
        terms = {}
        for w, c in symbolic.items():
            c = c.subs(values) if values else c
            if mode == EXACT:
                if not c.is_Rational:
                    raise ModeError(f"coefficient {c} is not rational at the given point")
                terms[w] = c
            else:
                terms[w] = complex(c.evalf())
        return cls(automaton, terms, mode)

    def _check(self, other):
        if not isinstance(other, AlgebraElement):
            return
        if other.automaton is not self.automaton:
            raise ValueError("elements belong to different automata")
        if other.mode != self.mode:
            raise ModeError(f"mixed scalar modes {self.mode} and {other.mode}")

    def __add__(self, other):
        if isinstance(other, Number) or isinstance(other, Fraction):
            other = AlgebraElement(self.automaton, {(): other}, self.mode)
        self._check(other)
        terms = dict(self.terms)
        for w, c in other.terms.items():
            terms[w] = terms.get(w, 0) + c
        return AlgebraElement(self.automaton, terms, self.mode)

    __radd__ = __add__

    def __neg__(self):
        return AlgebraElement(self.automaton, {w: -c for w, c in self.terms.items()}, self.mode)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            self._check(other)
            terms: dict = {}
            aut = self.automaton
            for u, cu in self.terms.items():
                for w, cw in other.terms.items():
                    k = aut.multiply(u, w)
                    terms[k] = terms.get(k, 0) + cu * cw
            return AlgebraElement(aut, terms, self.mode)
        c = _coerce(other, self.mode)
        return AlgebraElement(self.automaton, {w: c * v for w, v in self.terms.items()}, self.mode)

    def __rmul__(self, other):
        return self * other

    def __pow__(self, k: int):
        out = AlgebraElement(self.automaton, {(): 1}, self.mode)
        for _ in range(k):
            out = out * self
        return out

    def star(self):
        """Adjoint: inverts words and conjugates coefficients."""
        conj = (lambda c: c) if self.mode == EXACT else (lambda c: c.conjugate())
        return AlgebraElement(self.automaton, {self.automaton.inverse(w): conj(c) for w, c in self.terms.items()},
                              self.mode)

    def coefficient(self, word) -> Number:
        return self.terms.get(self.automaton.reduce(word), 0)

    def support(self):
        return sorted(self.terms, key=shortlex_key)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        return (isinstance(other, AlgebraElement) and other.automaton is self.automaton
                and other.mode == self.mode and other.terms == self.terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        fmt = self.automaton.format_word
        return " + ".join(f"{c}*{fmt(w)}" for w, c in sorted(self.terms.items(), key=lambda t: shortlex_key(t[0])))


class LevelMatrix:
    """Square matrix of dimension ``blocks * d**level``.

    Exact matrices store a dict ``(row, col) -> Fraction``; complex ones a
    scipy CSR matrix or, above the density threshold, a dense ndarray.
    """

    def __init__(self, level: int, d: int, data, mode: str = COMPLEX, blocks: int = 1):
        self.level, self.d, self.mode, self.blocks = int(level), int(d), mode, int(blocks)
        self.dim = self.blocks * self.d ** self.level
        if mode == EXACT:
            self.data = {k: v for k, v in data.items() if v != 0}
        else:
            if sps.issparse(data):
                data = data.tocsr()
                if data.nnz > DENSITY_THRESHOLD * self.dim * self.dim:
                    data = data.toarray()
            else:
                data = np.asarray(data, dtype=complex)
            if data.shape != (self.dim, self.dim):
                raise ValueError(f"shape {data.shape} does not match dimension {self.dim}")
            self.data = data

    @property
    def is_sparse(self):
        return self.mode == EXACT or sps.issparse(self.data)

    def to_dense(self) -> np.ndarray:
        if self.mode == EXACT:
            out = np.zeros((self.dim, self.dim), dtype=object)
            out[:] = Fraction(0)
            for (r, c), v in self.data.items():
                out[r, c] = v
            return out
        return self.data.toarray() if sps.issparse(self.data) else np.array(self.data)

    def to_complex(self) -> "LevelMatrix":
        if self.mode == COMPLEX:
            return self
        rows = [r for r, _ in self.data]
        cols = [c for _, c in self.data]
        vals = [complex(v) for v in self.data.values()]
        return LevelMatrix(self.level, self.d, sps.coo_matrix((vals, (rows, cols)), shape=(self.dim, self.dim)),
                           COMPLEX, self.blocks)

    def array(self) -> np.ndarray:
        """Dense complex ndarray (always a copy)."""
        return self.to_complex().to_dense()

    def entries(self):
        """Nonzero entries in row-major order."""
        if self.mode == EXACT:
            return sorted(self.data.items())
        m = sps.coo_matrix(self.data) if not sps.issparse(self.data) else self.data.tocoo()
        order = np.lexsort((m.col, m.row))
        return [((int(m.row[k]), int(m.col[k])), complex(m.data[k])) for k in order if m.data[k] != 0]

    def is_zero(self, tol: float = 0.0) -> bool:
        if self.mode == EXACT:
            return not self.data
        return all(abs(v) <= tol for _, v in self.entries())

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        if self.mode == EXACT:
            return all(self.data.get((c, r), 0) == v for (r, c), v in self.data.items())
        a = self.to_dense()
        return bool(np.abs(a - a.conj().T).max(initial=0.0) <= tol * max(1.0, np.abs(a).max(initial=0.0)))

    def __matmul__(self, other: "LevelMatrix") -> "LevelMatrix":
        self._check(other)
        if self.mode == EXACT:
            by_row: dict = {}
            for (r, c), v in other.data.items():
                by_row.setdefault(r, []).append((c, v))
            out: dict = {}
            for (r, k), v in self.data.items():
                for c, w in by_row.get(k, ()):
                    out[(r, c)] = out.get((r, c), 0) + v * w
            return LevelMatrix(self.level, self.d, out, EXACT, self.blocks)
        a, b = self.data, other.data
        prod = a @ b if sps.issparse(a) and sps.issparse(b) else np.asarray(self.to_dense() @ other.to_dense())
        return LevelMatrix(self.level, self.d, prod, COMPLEX, self.blocks)

    def __add__(self, other: "LevelMatrix") -> "LevelMatrix":
        self._check(other)
        if self.mode == EXACT:
            out = dict(self.data)
            for k, v in other.data.items():
                out[k] = out.get(k, 0) + v
            return LevelMatrix(self.level, self.d, out, EXACT, self.blocks)
        a, b = self.data, other.data
        s = a + b if sps.issparse(a) and sps.issparse(b) else self.to_dense() + other.to_dense()
        return LevelMatrix(self.level, self.d, s, COMPLEX, self.blocks)

    def scale(self, t) -> "LevelMatrix":
        if self.mode == EXACT:
            t = to_exact(t)
            return LevelMatrix(self.level, self.d, {k: t * v for k, v in self.data.items()}, EXACT, self.blocks)
        return LevelMatrix(self.level, self.d, self.data * complex(t), COMPLEX, self.blocks)

    def __sub__(self, other):
        return self + other.scale(-1)

    def transpose(self) -> "LevelMatrix":
        if self.mode == EXACT:
            return LevelMatrix(self.level, self.d, {(c, r): v for (r, c), v in self.data.items()}, EXACT, self.blocks)
        return LevelMatrix(self.level, self.d, self.data.T, COMPLEX, self.blocks)

    def _check(self, other):
        if (self.dim, self.d, self.blocks) != (other.dim, other.d, other.blocks):
            raise ValueError("dimension mismatch")
        if self.mode != other.mode:
            raise ModeError(f"mixed scalar modes {self.mode} and {other.mode}")

    def export(self) -> str:
        """Coordinate list: header ``# level=<n> dim=<N>`` then ``row col re im`` lines."""
        buf = io.StringIO()
        buf.write(f"# level={self.level} dim={self.dim}\n")
        for (r, c), v in self.entries():
            if self.mode == EXACT:
                buf.write(f"{r} {c} {v} 0\n")
            else:
                buf.write(f"{r} {c} {v.real!r} {v.imag!r}\n")
        return buf.getvalue()

    def __eq__(self, other):
        if not isinstance(other, LevelMatrix) or self.dim != other.dim or self.mode != other.mode:
            return False
        if self.mode == EXACT:
            return self.data == other.data
        return np.array_equal(self.to_dense(), other.to_dense())

    def __repr__(self):
        return f"LevelMatrix(level={self.level}, dim={self.dim}, mode={self.mode})"


def parse_export(text: str) -> LevelMatrix:
    lines = text.splitlines()
    head = dict(item.split("=") for item in lines[0].lstrip("# ").split())
    level, dim = int(head["level"]), int(head["dim"])
    rows, cols, vals = [], [], []
    for line in lines[1:]:
        r, c, re_, im = line.split()
        rows.append(int(r))
        cols.append(int(c))
        vals.append(complex(float(Fraction(re_)), float(Fraction(im))))
    d = round(dim ** (1 / level)) if level else 2
    m = sps.coo_matrix((vals, (rows, cols)), shape=(dim, dim))
    return LevelMatrix(level, d, m, COMPLEX)


def permutation_matrix(perm: np.ndarray, level: int, d: int, mode=COMPLEX, coeff=1) -> LevelMatrix:
    n = len(perm)
    if mode == EXACT:
        c = to_exact(coeff)
        return LevelMatrix(level, d, {(int(perm[j]), j): c for j in range(n)}, EXACT)
    m = sps.csr_matrix((np.full(n, complex(coeff)), (perm, np.arange(n))), shape=(n, n))
    return LevelMatrix(level, d, m, COMPLEX)


def expand_element(g: GroupElement, n: int, mode: str = EXACT) -> LevelMatrix:
    if n < 0:
        raise ValueError("level must be >= 0")
    aut = g.automaton
    return permutation_matrix(aut.level_permutation(g.word, n), n, aut.d, mode)


def expand_combination(a: AlgebraElement, n: int) -> LevelMatrix:
    if n < 0:
        raise ValueError("level must be >= 0")
    aut = a.automaton
    size = aut.d ** n
    cols = np.arange(size)
    if a.mode == EXACT:
        out: dict = {}
        for w, c in a.terms.items():
            perm = aut.level_permutation(w, n)
            for j in range(size):
                key = (int(perm[j]), j)
                out[key] = out.get(key, 0) + c
        return LevelMatrix(n, aut.d, out, EXACT)
    rows_all, cols_all, vals_all = [], [], []
    for w, c in sorted(a.terms.items(), key=lambda t: shortlex_key(t[0])):
        rows_all.append(aut.level_permutation(w, n))
        cols_all.append(cols)
        vals_all.append(np.full(size, c, dtype=complex))
    if not rows_all:
        return LevelMatrix(n, aut.d, sps.csr_matrix((size, size), dtype=complex), COMPLEX)
    m = sps.coo_matrix((np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
                       shape=(size, size)).tocsr()
    m.sum_duplicates()
    m.eliminate_zeros()
    return LevelMatrix(n, aut.d, m, COMPLEX)


def expand_block(entries, n: int, mode: str = COMPLEX) -> LevelMatrix:
    """Expand a k x k array of AlgebraElements into one matrix of dimension k * d**n."""
    k = len(entries)
    parts = [[expand_combination(e, n) for e in row] for row in entries]
    d = parts[0][0].d
    if mode == EXACT:
        size = d ** n
        out = {}
        for bi, row in enumerate(parts):
            for bj, m in enumerate(row):
                for (r, c), v in m.data.items():
                    out[(bi * size + r, bj * size + c)] = v
        return LevelMatrix(n, d, out, EXACT, blocks=k)
    big = sps.bmat([[sps.csr_matrix(m.to_dense()) if not m.is_sparse else m.data for m in row] for row in parts])
    return LevelMatrix(n, d, big, COMPLEX, blocks=k)
