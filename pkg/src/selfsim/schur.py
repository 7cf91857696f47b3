"""Schur complements on level-refined block partitions and pencil renormalization checks."""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import sympy as sp

from .algebra import COMPLEX, EXACT, AlgebraElement, LevelMatrix, expand_block
from .expr import parse_combination
from .group import MealyAutomaton, shortlex_key

SINGULAR_THRESHOLD = 1e-10
DENOMINATOR_MARGIN = 1e-3


class SingularBlockError(ArithmeticError):
    def __init__(self, message, sigma_min=None, prefix=None):
        super().__init__(message)
        self.sigma_min, self.prefix = sigma_min, prefix


class UnsupportedRenormalization(ValueError):
    pass


@dataclass(frozen=True)
class BlockPartition:
    """Splits ``blocks * d**(n+1)`` indices into a kept set and its complement.

    Inside diagonal block ``b`` the kept indices are the words whose first
    letter is ``letters[b]``; for a scalar pencil this is the usual block ``i``.
    """

    d: int
    n: int
    letters: tuple
    blocks: int = 1

    def __post_init__(self):
        if len(self.letters) != self.blocks:
            raise ValueError("need one kept letter per diagonal block")
        if any(not 0 <= x < self.d for x in self.letters):
            raise ValueError("kept letter outside the alphabet")

    @classmethod
    def for_block(cls, d, n, i, blocks=1):
        letters = tuple(i) if isinstance(i, (tuple, list)) else (int(i),) * blocks
        return cls(d, n, letters, blocks)

    @property
    def kept(self) -> np.ndarray:
        size, sub = self.d ** (self.n + 1), self.d ** self.n
        return np.concatenate([b * size + x * sub + np.arange(sub) for b, x in enumerate(self.letters)])

    @property
    def complement(self) -> np.ndarray:
        mask = np.ones(self.blocks * self.d ** (self.n + 1), dtype=bool)
        mask[self.kept] = False
        return np.flatnonzero(mask)


def _as_array(M) -> np.ndarray:
    if isinstance(M, LevelMatrix):
        return M.array()
    a = np.asarray(M)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"matrix must be square, got shape {a.shape}")
    return a


def _max_norm(a) -> float:
    return float(np.abs(a).max(initial=0.0))


def _check_invertible(D, ref_norm, threshold, what="complementary block"):
    if D.size == 0:
        return np.inf
    smin = float(np.linalg.svd(D, compute_uv=False)[-1])
    if not smin > threshold * ref_norm:
        raise SingularBlockError(f"{what} is singular: smallest singular value {smin:.3e}", sigma_min=smin)
    return smin


def schur_on(M, keep, threshold: float = SINGULAR_THRESHOLD) -> np.ndarray:
    """``A - B D^{-1} C`` with ``A`` the principal submatrix on ``keep``."""
    a = _as_array(M)
    keep = np.asarray(keep)
    mask = np.ones(a.shape[0], dtype=bool)
    mask[keep] = False
    comp = np.flatnonzero(mask)
    A = a[np.ix_(keep, keep)]
    if comp.size == 0:
        return A.copy()
    B, C, D = a[np.ix_(keep, comp)], a[np.ix_(comp, keep)], a[np.ix_(comp, comp)]
    _check_invertible(D, max(_max_norm(a), 1e-300), threshold)
    return A - B @ np.linalg.solve(D, C)


def _level_of(M: LevelMatrix | np.ndarray, d, blocks):
    dim = _as_array(M).shape[0] if not isinstance(M, LevelMatrix) else M.dim
    n = 0
    while blocks * d ** n < dim:
        n += 1
    if blocks * d ** n != dim:
        raise ValueError(f"dimension {dim} is not {blocks} * {d}^n")
    return n


def schur_complement(M, i, d: int | None = None, threshold: float = SINGULAR_THRESHOLD):
    """Schur complement onto the indices whose first letter is ``i``.

    ``M`` is a LevelMatrix at level n+1 (or a plain array with ``d`` given);
    ``i`` may be a tuple giving one letter per diagonal block.
    """
    if isinstance(M, LevelMatrix):
        d, blocks = M.d, M.blocks
    else:
        if d is None:
            raise ValueError("alphabet size d required for plain arrays")
        blocks = len(i) if isinstance(i, (tuple, list)) else 1
    n1 = _level_of(M, d, blocks)
    if n1 < 1:
        raise ValueError("need level >= 1 to take a Schur complement")
    part = BlockPartition.for_block(d, n1 - 1, i, blocks)
    S = schur_on(M, part.kept, threshold)
    if isinstance(M, LevelMatrix):
        return LevelMatrix(n1 - 1, d, S, COMPLEX, blocks)
    return S


def isometry_complement(M, keep) -> np.ndarray:
    """The same complement computed as ``(T* M^{-1} T)^{-1}``."""
    a = _as_array(M)
    inv = np.linalg.inv(a)
    return np.linalg.inv(inv[np.ix_(keep, keep)])


def frobenius_inverse(M, keep, threshold: float = SINGULAR_THRESHOLD) -> np.ndarray:
    """Inverse of ``M`` assembled from its 2x2 block form around ``keep``."""
    a = _as_array(M)
    keep = np.asarray(keep)
    mask = np.ones(a.shape[0], dtype=bool)
    mask[keep] = False
    comp = np.flatnonzero(mask)
    ref = max(_max_norm(a), 1e-300)
    A = a[np.ix_(keep, keep)]
    out = np.zeros_like(a, dtype=np.result_type(a.dtype, float))
    if comp.size == 0:
        _check_invertible(A, ref, threshold, "Schur complement")
        out[np.ix_(keep, keep)] = np.linalg.inv(A)
        return out
    B, C, D = a[np.ix_(keep, comp)], a[np.ix_(comp, keep)], a[np.ix_(comp, comp)]
    _check_invertible(D, ref, threshold)
    Dinv = np.linalg.inv(D)
    S = A - B @ Dinv @ C
    if S.size:
        _check_invertible(S, ref, threshold, "Schur complement")
    Sinv = np.linalg.inv(S) if S.size else S
    DC = Dinv @ C
    BD = B @ Dinv
    out[np.ix_(keep, keep)] = Sinv
    out[np.ix_(keep, comp)] = -Sinv @ BD
    out[np.ix_(comp, keep)] = -DC @ Sinv
    out[np.ix_(comp, comp)] = Dinv + DC @ Sinv @ BD
    return out


def path_indices(d: int, level: int, path: Sequence[int]) -> np.ndarray:
    """Indices of length-``level`` words starting with ``path``."""
    k = len(path)
    base = 0
    for x in path:
        base = base * d + int(x)
    sub = d ** (level - k)
    return base * sub + np.arange(sub)


def compose_schur(M, path: Sequence[int], d: int | None = None, threshold: float = SINGULAR_THRESHOLD):
    """Successive complements along ``path``; the first letter is applied first."""
    if isinstance(M, LevelMatrix):
        d = M.d
    cur = _as_array(M)
    for k, x in enumerate(path):
        try:
            cur = schur_complement(cur, int(x), d=d, threshold=threshold)
        except SingularBlockError as exc:
            raise SingularBlockError(f"after prefix {list(path[:k])}: {exc}", exc.sigma_min, tuple(path[:k])) from None
    if isinstance(M, LevelMatrix):
        return LevelMatrix(M.level - len(path), d, cur, COMPLEX)
    return cur


def schur_determinant_gap(M, keep) -> tuple:
    """``(|det M - det S det D|, |det M|)`` for the partition around ``keep``."""
    a = _as_array(M)
    keep = np.asarray(keep)
    mask = np.ones(a.shape[0], dtype=bool)
    mask[keep] = False
    comp = np.flatnonzero(mask)
    S = schur_on(a, keep)
    det_m = np.linalg.det(a)
    det_s = np.linalg.det(S)
    det_d = np.linalg.det(a[np.ix_(comp, comp)]) if comp.size else 1.0
    return abs(det_m - det_s * det_d), abs(det_m)


# ------------------------------------------------------------------ pencils

class Pencil:
    """Parameterized k x k array of group-algebra elements.

    Entries map reduced words to sympy rational-function coefficients in the
    parameters.  A scalar pencil has ``k == 1``.
    """

    def __init__(self, automaton: MealyAutomaton, entries, params: Sequence[str], name: str = ""):
        self.automaton = automaton
        self.name = name
        self.params = tuple(params)
        self.symbols = tuple(sp.Symbol(p) for p in self.params)
        self.entries = [[dict(e) for e in row] for row in entries]
        self.k = len(self.entries)
        if any(len(row) != self.k for row in self.entries):
            raise ValueError("pencil entries must form a square array")
        allowed = set(self.symbols)
        for row in self.entries:
            for e in row:
                for c in e.values():
                    extra = c.free_symbols - allowed
                    if extra:
                        raise ValueError(f"undeclared parameters {sorted(map(str, extra))}")
        self._flat = [(bi, bj, w, c) for bi, row in enumerate(self.entries) for bj, e in enumerate(row)
                      for w, c in sorted(e.items(), key=lambda t: shortlex_key(t[0]))]
        self._coeffs = sp.lambdify(self.symbols, [c for *_, c in self._flat], "numpy")
        self._perm_cache: dict = {}

    @classmethod
    def from_expressions(cls, automaton, body, params=(), name=""):
        if isinstance(body, str):
            body = [[body]]
        entries = [[parse_combination(automaton, text, params) for text in row] for row in body]
        return cls(automaton, entries, params, name)

    @property
    def d(self):
        return self.automaton.d

    def describe(self) -> str:
        def one(e):
            if not e:
                return "0"
            return " + ".join(f"({c})*{self.automaton.format_word(w)}"
                              for w, c in sorted(e.items(), key=lambda t: shortlex_key(t[0])))
        if self.k == 1:
            return one(self.entries[0][0])
        return "[" + "; ".join(", ".join(one(e) for e in row) for row in self.entries) + "]"

    def _point(self, point) -> tuple:
        if isinstance(point, dict):
            missing = [p for p in self.params if p not in point]
            if missing:
                raise ValueError(f"missing parameter values {missing}")
            return tuple(point[p] for p in self.params)
        point = tuple(point)
        if len(point) != len(self.params):
            raise ValueError(f"pencil {self.name} takes {len(self.params)} parameters {self.params}")
        return point

    def evaluate(self, point=(), mode=EXACT):
        """k x k array of AlgebraElements at a parameter point."""
        vals = dict(zip(self.symbols, (sp.nsimplify(v) if mode == EXACT else v for v in self._point(point))))
        return [[AlgebraElement.from_symbolic(self.automaton, e, vals, mode) for e in row] for row in self.entries]

    def level_matrix(self, point, n, mode=COMPLEX) -> LevelMatrix:
        if mode == EXACT:
            return expand_block(self.evaluate(point, EXACT), n, EXACT)
        return LevelMatrix(n, self.d, self.dense(point, n), COMPLEX, self.k)

    def _perms(self, n):
        hit = self._perm_cache.get(n)
        if hit is None:
            hit = [self.automaton.level_permutation(w, n) for _, _, w, _ in self._flat]
            self._perm_cache[n] = hit
        return hit

    def dense(self, point, n) -> np.ndarray:
        """Fast complex ndarray of the pencil at level ``n``."""
        vals = self._coeffs(*self._point(point)) if self.symbols else self._coeffs()
        size = self.d ** n
        out = np.zeros((self.k * size, self.k * size), dtype=complex)
        cols = np.arange(size)
        for (bi, bj, _, _), perm, c in zip(self._flat, self._perms(n), vals):
            out[bi * size + perm, bj * size + cols] += c
        return out

    def split_affine(self, spectral: str):
        """Write the pencil as ``A - c * s * I``; returns ``(A, c)``.

        ``A`` is a Pencil without ``s`` and ``c`` a nonzero constant.
        """
        if spectral not in self.params:
            raise ValueError(f"{spectral!r} is not a parameter of pencil {self.name}")
        s = sp.Symbol(spectral)
        slopes = set()
        rest = []
        for bi, row in enumerate(self.entries):
            new_row = []
            for bj, e in enumerate(row):
                new_e = {}
                for w, c in e.items():
                    dc = sp.simplify(sp.diff(c, s))
                    if dc.free_symbols:
                        raise ValueError(f"pencil {self.name} is not affine in {spectral}")
                    if dc != 0:
                        if w != () or bi != bj:
                            raise ValueError(f"{spectral} must multiply the identity only")
                        slopes.add(dc)
                    c0 = sp.simplify(c - dc * s)
                    if c0 != 0:
                        new_e[w] = c0
                new_row.append(new_e)
            rest.append(new_row)
        if len(slopes) != 1 or (self.k > 1 and any(
                sp.diff(self.entries[b][b].get((), sp.Integer(0)), s) == 0 for b in range(self.k))):
            raise ValueError(f"{spectral} must enter as a multiple of the identity")
        slope = slopes.pop()
        params = [p for p in self.params if p != spectral]
        return Pencil(self.automaton, rest, params, f"{self.name}|{spectral}"), -float(slope)


# ------------------------------------------------------- self-similarity

@dataclass
class SampleResult:
    index: int
    point: tuple
    level: int
    deviation: float
    status: str = "ok"  # ok | fail | singular


@dataclass
class SelfSimilarityReport:
    pencil: str
    map_name: str
    block: object
    tolerance: float
    rows: list = field(default_factory=list)
    rejected: int = 0

    @property
    def max_deviation(self) -> float:
        devs = [r.deviation for r in self.rows if r.status != "singular"]
        return max(devs) if devs else float("nan")

    @property
    def failures(self) -> list:
        return [r for r in self.rows if r.status == "fail"]

    @property
    def passed(self) -> bool:
        return not self.failures and any(r.status == "ok" for r in self.rows)

    def text(self) -> str:
        buf = io.StringIO()
        buf.write(f"# pencil={self.pencil} map={self.map_name} block={self.block} tolerance={self.tolerance!r}\n")
        buf.write(f"# rejected_samples={self.rejected}\n")
        buf.write("sample\tlevel\tpoint\tdeviation\tstatus\n")
        for r in self.rows:
            pt = ",".join(repr(float(x)) for x in r.point)
            buf.write(f"{r.index}\t{r.level}\t{pt}\t{r.deviation!r}\t{r.status}\n")
        buf.write(f"MAX_DEV {self.max_deviation!r}\n")
        return buf.getvalue()


def sample_points(k, count, seed, box=(-4.0, 4.0), admissible=None, max_draws=None):
    """Seeded uniform samples in ``box**k``; inadmissible draws are skipped."""
    rng = np.random.default_rng(seed)
    out, rejected = [], 0
    max_draws = max_draws or 100 * count + 100
    for _ in range(max_draws):
        if len(out) == count:
            break
        z = tuple(float(x) for x in rng.uniform(box[0], box[1], k))
        if admissible is None or admissible(z):
            out.append(z)
        else:
            rejected += 1
    return out, rejected


def projective_fit(S: np.ndarray, T: np.ndarray) -> complex:
    """Least-squares ``c`` minimizing ``|S - c T|``."""
    den = np.vdot(T, T)
    return complex(np.vdot(T, S) / den) if den else 0.0


def verify_self_similarity(pencil: Pencil, rmap, i, levels, samples=200, seed=0, scale=None,
                           tol: float = 1e-8, delta: float = DENOMINATOR_MARGIN,
                           threshold: float = SINGULAR_THRESHOLD, workers: int = 1) -> SelfSimilarityReport:
    """Check ``S_i(P_{n+1}(z)) = scale(z) * P_n(rmap(z))`` on sampled ``z``.

    Deviations are entrywise max norms relative to the larger of ``|P_{n+1}|``
    and ``|S_i(P_{n+1})|``.  Without ``scale`` the best projective factor is
    fitted per sample.
    """
    if rmap.arity != len(pencil.params):
        raise ValueError(f"map {rmap.name} has arity {rmap.arity}, pencil has {len(pencil.params)} parameters")
    if isinstance(scale, str):
        scale = sp.sympify(scale, locals={p: sp.Symbol(p) for p in pencil.params})
    scale_fn = sp.lambdify(pencil.symbols, scale, "numpy") if scale is not None else None
    scale_dens = _denominator_factors(scale, pencil.symbols) if scale is not None else []

    def admissible(z):
        if not rmap.admissible(z, delta):
            return False
        vals = dict(zip(pencil.symbols, z))
        return all(abs(complex(f.evalf(subs=vals))) >= delta for f in scale_dens)

    if isinstance(samples, int):
        points, rejected = sample_points(len(pencil.params), samples, seed, admissible=admissible)
    else:
        points = [tuple(p) for p in samples]
        rejected = sum(not admissible(z) for z in points)
        points = [z for z in points if admissible(z)]

    tasks = [(idx, z, n) for idx, z in enumerate(points) for n in levels]

    def run(task):
        idx, z, n = task
        big = pencil.dense(z, n + 1)
        try:
            S = schur_complement(big, i if pencil.k == 1 else _letters(i, pencil.k), d=pencil.d,
                                 threshold=threshold)
        except SingularBlockError:
            return SampleResult(idx, z, n, float("nan"), "singular")
        target = pencil.dense(rmap(z), n)
        c = complex(scale_fn(*z)) if scale_fn is not None else projective_fit(S, target)
        ref = max(_max_norm(big), _max_norm(S), 1e-300)
        dev = _max_norm(S - c * target) / ref
        return SampleResult(idx, z, n, dev, "ok" if dev <= tol else "fail")

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(run, tasks))
    else:
        rows = [run(t) for t in tasks]
    rows.sort(key=lambda r: (r.index, r.level))
    label = i if not isinstance(i, (tuple, list)) else "".join(map(str, i))
    return SelfSimilarityReport(pencil.name, rmap.name, label, tol, rows, rejected)


def _letters(i, k):
    return tuple(i) if isinstance(i, (tuple, list)) else (int(i),) * k


def _denominator_factors(expr, symbols):
    if expr is None:
        return []
    _, den = sp.fraction(sp.together(expr))
    return [f for f, _ in sp.factor_list(den)[1] if f.free_symbols & set(symbols)]
