"""Multivariate rational maps, identity and semiconjugacy checks, orbits and attractors."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy as sp

DEFAULT_BOX = (-4.0, 4.0)
DEFAULT_MARGIN = 1e-3
DEDUP_TOL = 1e-12


class SingularLocusError(ArithmeticError):
    def __init__(self, factor, point):
        super().__init__(f"singular locus: {factor} = 0 at {tuple(point)}")
        self.factor = factor


class NoAdmissibleSamples(RuntimeError):
    pass


def _factors(exprs, symbols):
    out = []
    for e in exprs:
        _, den = sp.fraction(sp.together(e))
        for f, _ in sp.factor_list(den)[1]:
            if f.free_symbols & set(symbols):
                f = sp.expand(f)
                if all(sp.expand(f - g) != 0 and sp.expand(f + g) != 0 for g in out):
                    out.append(f)
    return out


class RationalMapND:
    """Rational map with exact rational coefficients.

    Each component is a sympy expression in ``variables``; the distinct
    irreducible denominator factors are kept to detect the singular locus.
    """

    def __init__(self, name: str, variables: Sequence, components: Sequence):
        self.name = name
        self.symbols = tuple(sp.Symbol(v) if isinstance(v, str) else v for v in variables)
        self.components = tuple(sp.sympify(c) for c in components)
        extra = set().union(*(c.free_symbols for c in self.components)) - set(self.symbols)
        if extra:
            raise ValueError(f"map {name}: undeclared variables {sorted(map(str, extra))}")
        self.denominators = tuple(_factors(self.components, self.symbols))
        self._num = sp.lambdify(self.symbols, list(self.components), "numpy")
        self._dens = sp.lambdify(self.symbols, list(self.denominators) or [sp.Integer(1)], "numpy")

    @classmethod
    def from_strings(cls, name, variables, comps, subs=None):
        loc = {v: sp.Symbol(v) for v in variables}
        extra = {k: sp.sympify(v, locals=loc) for k, v in (subs or {}).items()}
        exprs = [sp.sympify(c, locals={**loc, **{k: sp.Symbol(k) for k in extra}}).subs(
            {sp.Symbol(k): v for k, v in extra.items()}) for c in comps]
        return cls(name, variables, exprs)

    @classmethod
    def identity(cls, variables):
        return cls("id", variables, [sp.Symbol(v) if isinstance(v, str) else v for v in variables])

    @property
    def arity(self) -> int:
        return len(self.symbols)

    @property
    def variables(self) -> tuple:
        return tuple(str(s) for s in self.symbols)

    def formulas(self) -> list:
        return [f"{v}' = {sp.sstr(c)}" for v, c in zip(self.variables, self.components)]

    def denominator_values(self, z) -> np.ndarray:
        return np.atleast_1d(np.asarray(self._dens(*z), dtype=complex))

    def admissible(self, z, delta: float = DEFAULT_MARGIN) -> bool:
        if not self.denominators:
            return True
        with np.errstate(all="ignore"):
            vals = self.denominator_values(z)
        return bool(np.all(np.isfinite(vals)) and np.all(np.abs(vals) >= delta))

    def __call__(self, z) -> tuple:
        with np.errstate(all="ignore"):
            out = self._num(*z)
        return tuple(complex(v).real if complex(v).imag == 0 else complex(v) for v in out)

    def vectorized(self, arrays):
        """Evaluate on arrays of coordinates (one array per variable)."""
        with np.errstate(all="ignore"):
            out = self._num(*arrays)
        return [np.broadcast_to(np.asarray(o, dtype=float), np.shape(arrays[0])) for o in out]

    def compose(self, inner: "RationalMapND", name=None) -> "RationalMapND":
        """``self o inner``."""
        if inner.arity != self.arity or len(inner.components) != self.arity:
            raise ValueError("arity mismatch in composition")
        sub = dict(zip(self.symbols, inner.components))
        comps = [sp.cancel(c.subs(sub, simultaneous=True)) for c in self.components]
        renamed = [c.subs(dict(zip(inner.symbols, self.symbols)), simultaneous=True) for c in comps]
        return RationalMapND(name or f"{self.name}o{inner.name}", self.symbols, renamed)

    def __repr__(self):
        return f"RationalMapND({self.name}, arity={self.arity})"


def eval_map(m: RationalMapND, point, mode: str = "float", delta: float = 0.0):
    """Evaluate ``m`` at ``point``; names the vanishing denominator on the singular locus."""
    point = tuple(point)
    if len(point) != m.arity:
        raise ValueError(f"map {m.name} takes {m.arity} coordinates")
    if mode == "exact":
        vals = {s: sp.Rational(str(Fraction(v))) if not isinstance(v, sp.Basic) else v
                for s, v in zip(m.symbols, point)}
        for f in m.denominators:
            if f.subs(vals) == 0:
                raise SingularLocusError(f, point)
        out = []
        for c in m.components:
            r = c.xreplace(vals)
            if not r.is_Rational:
                raise ValueError(f"component {c} is not rational at {point}")
            out.append(Fraction(int(r.p), int(r.q)))
        return tuple(out)
    dens = m.denominator_values(point) if m.denominators else []
    for f, v in zip(m.denominators, dens):
        if abs(v) <= delta:
            raise SingularLocusError(f, point)
    return m(point)


# ----------------------------------------------------------- identities

@dataclass
class ResidualReport:
    max_residual: float
    samples: int
    rejected: int

    def __float__(self):
        return self.max_residual


def _draw(arity, samples, seed, box, accept):
    rng = np.random.default_rng(seed)
    pts, rejected = [], 0
    for _ in range(100 * samples + 100):
        if len(pts) == samples:
            break
        z = tuple(float(x) for x in rng.uniform(box[0], box[1], arity))
        if accept(z):
            pts.append(z)
        else:
            rejected += 1
    if not pts:
        raise NoAdmissibleSamples("every sample hit a singular locus")
    return pts, rejected


def _rel(a, b) -> float:
    return max(abs(complex(x) - complex(y)) / max(1.0, abs(complex(y))) for x, y in zip(a, b))


def _chain(maps, z, delta):
    """Apply ``maps`` right to left; ``None`` if any stage is inadmissible."""
    for m in reversed(maps):
        if not m.admissible(z, delta):
            return None
        z = m(z)
        if any(not np.isfinite(complex(v)) for v in z):
            return None
    return z


def check_identity(lhs: Sequence[RationalMapND], rhs: RationalMapND, samples: int = 1000, seed: int = 0,
                   box=DEFAULT_BOX, delta: float = DEFAULT_MARGIN) -> ResidualReport:
    """Max residual of ``lhs[0] o lhs[1] o ... = rhs`` relative to ``max(1, |rhs|)``."""
    if any(m.arity != rhs.arity for m in lhs):
        raise ValueError("arity mismatch")

    def accept(z):
        return rhs.admissible(z, delta) and _chain(lhs, z, delta) is not None

    pts, rejected = _draw(rhs.arity, samples, seed, box, accept)
    worst = max(_rel(_chain(lhs, z, delta), rhs(z)) for z in pts)
    return ResidualReport(worst, len(pts), rejected)


@dataclass
class SemiConjugacy:
    """``psi o source = factor o psi``."""

    source: RationalMapND
    psi: sp.Expr
    factor: RationalMapND

    def __post_init__(self):
        if self.factor.arity != 1:
            raise ValueError("factor map must be one-dimensional")
        extra = self.psi.free_symbols - set(self.source.symbols)
        if extra:
            raise ValueError(f"projection uses unknown variables {sorted(map(str, extra))}")
        self._psi = RationalMapND("psi", self.source.symbols, [self.psi])

    @classmethod
    def from_strings(cls, source, psi, factor):
        return cls(source, sp.sympify(psi, locals={str(s): s for s in source.symbols}), factor)

    def residual(self, z, delta=DEFAULT_MARGIN):
        src = self.source
        if not (src.admissible(z, delta) and self._psi.admissible(z, delta)):
            return None
        w = src(z)
        if not self._psi.admissible(w, delta):
            return None
        p = self._psi(z)
        if not self.factor.admissible(p, delta):
            return None
        return _rel(self._psi(w), self.factor(p))


def check_semiconjugacy(s: SemiConjugacy, samples: int = 1000, seed: int = 0, box=DEFAULT_BOX,
                        delta: float = DEFAULT_MARGIN) -> ResidualReport:
    """Max of ``|psi(m(z)) - f(psi(z))|`` relative to ``max(1, |f(psi(z))|)``."""
    pts, rejected = _draw(s.source.arity, samples, seed, box, lambda z: s.residual(z, delta) is not None)
    return ResidualReport(max(s.residual(z, delta) for z in pts), len(pts), rejected)


# ------------------------------------------------------- backward orbits

@dataclass
class OrbitResult:
    values: list
    complex_dropped: int = 0


def _dedup(vals, tol=DEDUP_TOL):
    out = []
    for v in sorted(vals):
        if not out or abs(v - out[-1]) > tol:
            out.append(v)
    return out


def backward_orbit_1d(f, seeds: Sequence[float], depth: int) -> OrbitResult:
    """All real preimages of ``seeds`` under ``f`` up to ``depth`` iterations.

    ``f`` is a one-variable polynomial map (a RationalMapND or sympy
    expression).  Quadratics use the closed form; higher degrees use numpy roots.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if isinstance(f, RationalMapND):
        if f.arity != 1:
            raise ValueError("backward orbits need a one-dimensional map")
        x, expr = f.symbols[0], f.components[0]
    else:
        expr = sp.sympify(f)
        (x,) = expr.free_symbols
    poly = sp.Poly(sp.expand(expr), x)
    coeffs = [float(c) for c in poly.all_coeffs()]
    deg = poly.degree()
    if deg < 1:
        raise ValueError("constant map has no preimages")
    found = [float(s) for s in seeds]
    frontier = _dedup(found)
    dropped = 0
    for _ in range(depth):
        nxt = []
        for s in frontier:
            c = list(coeffs)
            c[-1] -= s
            if deg == 2:
                a, b, k = c
                disc = b * b - 4 * a * k
                if disc < -1e-14 * max(1.0, b * b, abs(4 * a * k)):
                    dropped += 2
                    continue
                r = np.sqrt(max(disc, 0.0))
                if b == 0:
                    roots = [r / (2 * a), -r / (2 * a)]
                else:
                    # avoids cancellation in the smaller root
                    q = -0.5 * (b + np.copysign(r, b))
                    roots = [q / a, k / q]
            elif deg == 1:
                roots = [-c[1] / c[0]]
            else:
                rts = np.roots(c)
                roots = [float(z.real) for z in rts if abs(z.imag) <= 1e-10 * max(1.0, abs(z))]
                dropped += len(rts) - len(roots)
            nxt.extend(float(v) for v in roots)
        frontier = _dedup(nxt)
        found.extend(frontier)
    return OrbitResult(_dedup(found), dropped)


# -------------------------------------------------------------- attractors

@dataclass
class AttractorCloud:
    map_name: str
    seed: int
    variables: tuple
    points: np.ndarray
    escaped: int = 0
    singular: int = 0
    diagnostic: str = ""

    def csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# map={self.map_name} seed={self.seed} points={len(self.points)} "
                  f"escaped={self.escaped} singular={self.singular}\n")
        buf.write(",".join(self.variables) + "\n")
        for p in self.points:
            buf.write(",".join(repr(float(v)) for v in p) + "\n")
        return buf.getvalue()


def initial_points(k: int, n_points: int, seed: int, box=DEFAULT_BOX) -> np.ndarray:
    """One independent stream per point, split from the master seed."""
    children = np.random.SeedSequence(seed).spawn(n_points)
    return np.array([np.random.default_rng(c).uniform(box[0], box[1], k) for c in children]).reshape(n_points, k)


def attractor_cloud(m: RationalMapND, n_points: int, burn_in: int, seed: int, box=DEFAULT_BOX,
                    escape: float = 1e6, tail: int = 1, delta: float = 1e-12) -> AttractorCloud:
    """Forward-iterate seeded random points; keep the last ``tail`` iterates of bounded orbits."""
    if n_points < 1 or burn_in < 0 or tail < 1:
        raise ValueError("need n_points >= 1, burn_in >= 0, tail >= 1")
    z = initial_points(m.arity, n_points, seed, box)
    cols = [z[:, j].copy() for j in range(m.arity)]
    alive = np.ones(n_points, dtype=bool)
    singular = np.zeros(n_points, dtype=bool)
    kept = []
    for step in range(burn_in + tail):
        if m.denominators:
            with np.errstate(all="ignore"):
                dens = [np.broadcast_to(np.asarray(v, dtype=float), (n_points,))
                        for v in m._dens(*cols)]
            hit = np.zeros(n_points, dtype=bool)
            for v in dens:
                hit |= ~(np.abs(v) > delta)
            singular |= hit & alive
            alive &= ~hit
        cols = m.vectorized(cols)
        cols = [np.where(alive, c, 0.0) for c in cols]
        big = np.zeros(n_points, dtype=bool)
        for c in cols:
            big |= ~np.isfinite(c) | (np.abs(c) > escape)
        alive &= ~big
        if step >= burn_in:
            kept.append(np.stack(cols, axis=1))
    if tail and kept:
        stacked = np.stack(kept, axis=1)  # point, step, coordinate
        pts = stacked[alive].reshape(-1, m.arity)
    else:
        pts = np.zeros((0, m.arity))
    escaped = int((~alive & ~singular).sum())
    diag = "" if len(pts) else "no bounded orbits"
    return AttractorCloud(m.name, seed, m.variables, pts, escaped, int(singular.sum()), diag)


# ---------------------------------------------------------- curve families

@dataclass
class CurveFamily:
    """Lines plus a one-parameter template ``P(vars, theta)`` instantiated at each theta."""

    symbols: tuple
    template: sp.Expr | None
    thetas: list = field(default_factory=list)
    lines: list = field(default_factory=list)

    @classmethod
    def from_strings(cls, variables, template, thetas, lines=()):
        loc = {v: sp.Symbol(v) for v in variables}
        loc["theta"] = sp.Symbol("theta")
        tmpl = sp.sympify(template, locals=loc) if template else None
        return cls(tuple(sp.Symbol(v) for v in variables), tmpl, [float(t) for t in thetas],
                   [sp.sympify(l, locals=loc) for l in lines])

    @property
    def variables(self):
        return tuple(str(s) for s in self.symbols)

    def curves(self) -> list:
        th = sp.Symbol("theta")
        out = list(self.lines)
        if self.template is not None:
            out += [self.template.subs(th, t) for t in self.thetas]
        if not out:
            raise ValueError("empty curve family")
        for c in out:
            if sp.expand(c) == 0:
                raise ValueError("curve equation is identically zero")
        return out

    def min_residual(self, columns: dict) -> np.ndarray:
        """Per point, the smallest ``|equation|`` over all curves."""
        args = [np.asarray(columns[v], dtype=float) for v in self.variables]
        best = np.full(args[0].shape, np.inf)
        for c in self.curves():
            f = sp.lambdify(self.symbols, c, "numpy")
            best = np.minimum(best, np.abs(np.broadcast_to(f(*args), best.shape)))
        return best
