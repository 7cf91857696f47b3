"""Eigenvalues of level matrices, spectral slices of pencils and singular-set clouds."""

from __future__ import annotations

import io
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .algebra import LevelMatrix
from .dynamics import CurveFamily
from .schur import Pencil

HERMITIAN_TOL = 1e-12
DEDUP_TOL = 1e-9
MAX_DIM = 4096


class NotHermitianError(ValueError):
    pass


def hermitian_eigenvalues(M, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix."""
    a = M.array() if isinstance(M, LevelMatrix) else np.asarray(M, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {a.shape[0]} exceeds the dense eigensolver budget {MAX_DIM}")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if float(np.abs(a - a.conj().T).max(initial=0.0)) > tol * scale:
        raise NotHermitianError("matrix is not Hermitian")
    if not np.iscomplexobj(a) or not np.any(a.imag):
        return sla.eigvalsh(a.real)
    return sla.eigvalsh(a)


@dataclass
class SpectralSlice:
    pencil: str
    fixed: dict
    spectral: str
    level: int
    eigenvalues: np.ndarray


def _affine(pencil: Pencil, spectral: str):
    A, c = pencil.split_affine(spectral)
    return A, c


def level_spectrum(pencil: Pencil, fixed: dict, spectral: str, n: int) -> SpectralSlice:
    """Values of the spectral parameter where the level-``n`` pencil is singular."""
    A, c = _affine(pencil, spectral)
    ev = hermitian_eigenvalues(A.dense(fixed, n)) / c
    return SpectralSlice(pencil.name, dict(fixed), spectral, n, np.sort(ev))


def _dedup(vals, tol=DEDUP_TOL):
    out = []
    for v in vals:
        if not out or abs(v - out[-1]) > tol:
            out.append(v)
    return out


@dataclass
class SigmaCloud:
    """Points (non-spectral parameters..., spectral value) of the singular set."""

    level: int
    columns: tuple
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def column(self, name) -> np.ndarray:
        return self.points[:, self.columns.index(name)] if len(self.points) else np.zeros(0)

    def as_columns(self) -> dict:
        return {c: self.column(c) for c in self.columns}

    def __len__(self):
        return len(self.points)

    def csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# level={self.level} points={len(self)}\n")
        buf.write(",".join(self.columns[:-1]) + ("," if len(self.columns) > 1 else "") + "eigenvalue\n")
        for p in self.points:
            buf.write(",".join(repr(float(v)) for v in p) + "\n")
        return buf.getvalue()


def spectrum_sweep(pencil: Pencil, grid: dict, spectral: str, n: int, workers: int = 1) -> SigmaCloud:
    """Singular set on a grid: one slice per grid point, output in grid order."""
    A, c = _affine(pencil, spectral)
    names = list(A.params)
    missing = [p for p in names if p not in grid]
    if missing:
        raise ValueError(f"grid needs values for {missing}")
    cols = tuple(names) + (spectral,)
    combos = list(itertools.product(*[list(grid[p]) for p in names]))
    if not combos or any(len(grid[p]) == 0 for p in names):
        return SigmaCloud(n, cols, np.zeros((0, len(cols))))

    def one(z):
        ev = _dedup(hermitian_eigenvalues(A.dense(dict(zip(names, z)), n)) / c)
        return [tuple(float(v) for v in z) + (float(e),) for e in sorted(ev)]

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(one, combos))
    else:
        parts = [one(z) for z in combos]
    pts = [p for part in parts for p in part]
    return SigmaCloud(n, cols, np.array(pts, dtype=float).reshape(-1, len(cols)))


@dataclass
class CurveReport:
    max_residual: float
    residuals: np.ndarray
    histogram: list  # (upper bound of log10 bin, count)

    def text(self) -> str:
        lines = [f"MAX_RESIDUAL {self.max_residual!r}"]
        lines += [f"<=1e{b} {c}" for b, c in self.histogram]
        return "\n".join(lines) + "\n"


def curve_residual(cloud: SigmaCloud, curves: CurveFamily) -> CurveReport:
    """Per point, the smallest |equation| over the family; max and log histogram."""
    curves.curves()  # validates non-empty
    if not len(cloud):
        return CurveReport(0.0, np.zeros(0), [])
    cols = cloud.as_columns()
    res = curves.min_residual({v: cols[v] for v in curves.variables})
    bins = list(range(-16, 3))
    exps = np.ceil(np.log10(np.maximum(res, 1e-300)))
    hist = [(b, int(np.sum(exps <= b) - np.sum(exps <= b - 1))) for b in bins]
    hist[0] = (bins[0], int(np.sum(exps <= bins[0])))
    over = int(np.sum(exps > bins[-1]))
    if over:
        hist.append((99, over))
    return CurveReport(float(res.max()), res, [h for h in hist if h[1]])


def nested_distance(inner, outer) -> float:
    """Largest distance from a value of ``inner`` to the nearest value of ``outer``."""
    outer = np.sort(np.asarray(outer, dtype=float))
    inner = np.asarray(inner, dtype=float)
    if inner.size == 0:
        return 0.0
    idx = np.clip(np.searchsorted(outer, inner), 1, len(outer) - 1)
    best = np.minimum(np.abs(inner - outer[idx - 1]), np.abs(inner - outer[idx]))
    return float(best.max())


def pullback_distance(cloud: SigmaCloud, pencil: Pencil, spectral: str, rmap, n: int,
                      delta: float = 1e-3) -> tuple:
    """Map every point of a level-(n+1) cloud forward and measure its distance to the level-``n`` set.

    Returns ``(max distance, points checked, points skipped)``; points where
    the map is not admissible are skipped.
    """
    A, c = _affine(pencil, spectral)
    order = list(pencil.params)
    names = list(A.params)
    worst, checked, skipped = 0.0, 0, 0
    for p in cloud.points:
        z = dict(zip(cloud.columns, p))
        point = tuple(z[k] for k in order)
        if not rmap.admissible(point, delta):
            skipped += 1
            continue
        w = dict(zip(order, rmap(point)))
        ev = hermitian_eigenvalues(A.dense({k: w[k] for k in names}, n)) / c
        worst = max(worst, nested_distance([w[spectral]], ev))
        checked += 1
    return worst, checked, skipped
