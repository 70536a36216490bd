"""Star-metric spaces: residuum-induced metrics on [0, inf), their extensions to
the real line, finite products, and the axiom checker.

A space's ``kernel`` takes two arrays of shape ``(..., arity)`` and returns
distances of shape ``(...)`` under numpy broadcasting. Scalar and batched
evaluation therefore go through the same floating-point operations, which the
nearest-neighbour index relies on for bitwise agreement with brute force.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, UnsupportedError, UsageError
from .laws import LawCheck, LawReport
from .tdefiner import (DEFAULT_TOLERANCES, LUKASIEWICZ, STAR_P, STAR_S, TDefiner, ToleranceConfig,
                       quadratic_root, residuum_unchecked)

Kernel = Callable[[np.ndarray, np.ndarray], np.ndarray]
DomainPredicate = Callable[[np.ndarray], np.ndarray]

DEFAULT_TRIPLE_BUDGET = 10**6
PAIR_CHUNK = 1 << 18


def as_points(points, arity: int) -> np.ndarray:
    """Coerce scalars, sequences or arrays to a float array of shape ``(n, arity)``."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if arity == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != arity:
        raise UsageError(f"expected points of arity {arity}, got array of shape {arr.shape}")
    return arr


def as_point(point, arity: int) -> np.ndarray:
    arr = np.asarray(point, dtype=float).reshape(-1)
    if arr.shape[0] != arity:
        raise UsageError(f"expected a point of arity {arity}, got {arr.tolist()}")
    return arr


def _nonneg_domain(p: np.ndarray) -> np.ndarray:
    return np.all(np.isfinite(p) & (p >= 0), axis=-1)


def _real_domain(p: np.ndarray) -> np.ndarray:
    return np.all(np.isfinite(p), axis=-1)


@dataclass(frozen=True)
class StarMetricSpace:
    name: str
    star: TDefiner
    kernel: Kernel
    arity: int
    domain: DomainPredicate = _real_domain
    pseudometric: bool = False
    construction: str = "custom"
    factors: tuple["StarMetricSpace", ...] = ()

    def dist(self, x, y):
        """Distance between two points (float) or between broadcast batches (array)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.arity == 1 and x.ndim == 0 and y.ndim == 0:
            return float(self.kernel(x.reshape(1), y.reshape(1)))
        out = self.kernel(x, y)
        return float(out) if np.ndim(out) == 0 else out

    def check_domain(self, points) -> np.ndarray:
        pts = as_points(points, self.arity)
        ok = self.domain(pts)
        if not np.all(ok):
            i = int(np.argmin(ok))
            raise DomainError(f"point #{i} {pts[i].tolist()} is outside the domain of {self.name}")
        return pts

    def pairwise(self, p: np.ndarray, q: np.ndarray | None = None) -> np.ndarray:
        """Matrix ``D[i, j] = dist(p[i], q[j])``, evaluated in row chunks."""
        q = p if q is None else q
        out = np.empty((len(p), len(q)))
        rows = max(1, PAIR_CHUNK // max(1, len(q)))
        for s in range(0, len(p), rows):
            out[s:s + rows] = self.kernel(p[s:s + rows, None, :], q[None, :, :])
        return out

    def with_star(self, star: TDefiner) -> "StarMetricSpace":
        """The same distance function, judged against a different t-definer."""
        return dataclasses.replace(self, star=star, name=f"{self.name}@{star.name}")


# --- scalar spaces ------------------------------------------------------------

def d_L(a, b):
    return np.abs(np.asarray(b, float) - np.asarray(a, float))


def d_max(a, b):
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    return np.where(a == b, 0.0, np.maximum(a, b))


def _abs_diff_sq(a, b):
    return np.abs((b - a) * (b + a))


def d_s(a, b):
    return quadratic_root(_abs_diff_sq, a, b)


def d_p(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return STAR_P.residuum_closed_form(np.minimum(a, b), np.maximum(a, b))


NAMED_METRICS = {"lukasiewicz": d_L, "max": d_max, "s": d_s, "p": d_p}


def induced_metric(star: TDefiner, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> StarMetricSpace:
    """``d(a, b) = (a -o b) star (b -o a)`` on [0, inf)."""

    def kernel(x, y):
        a, b = x[..., 0], y[..., 0]
        return star.apply(residuum_unchecked(star, a, b, cfg),
                          residuum_unchecked(star, b, a, cfg))

    return StarMetricSpace(f"induced[{star.name}]", star, kernel, 1,
                           domain=_nonneg_domain, construction="induced")


def signed_line_space(star: TDefiner) -> StarMetricSpace:
    """d_L or d_s extended to the whole real line.

    |b - a| stays a metric. sqrt(|b^2 - a^2|) vanishes at b = -a, so the
    extension of d_s is registered as a pseudometric.
    """
    if star is LUKASIEWICZ:
        return StarMetricSpace("signed_line[lukasiewicz]", star,
                               lambda x, y: np.abs(y[..., 0] - x[..., 0]), 1,
                               construction="signed_line")
    if star is STAR_S:
        def kernel(x, y):
            a, b = x[..., 0], y[..., 0]
            return quadratic_root(_abs_diff_sq, a, b)
        return StarMetricSpace("signed_line[s]", star, kernel, 1,
                               pseudometric=True, construction="signed_line")
    raise UnsupportedError(f"real-line extension is only defined for lukasiewicz and s, not {star.name!r}")


# --- products -----------------------------------------------------------------

def _product_layout(factors: Sequence[StarMetricSpace]):
    if len(factors) < 1:
        raise UsageError("a product needs at least one factor")
    star = factors[0].star
    for f in factors[1:]:
        if f.star is not star:
            raise UsageError(f"all factors must share one t-definer; got {star.name!r} and {f.star.name!r}")
    offsets = np.cumsum([0] + [f.arity for f in factors])
    slices = [slice(int(offsets[i]), int(offsets[i + 1])) for i in range(len(factors))]

    def domain(p):
        ok = np.ones(p.shape[:-1], bool)
        for f, s in zip(factors, slices):
            ok &= f.domain(p[..., s])
        return ok

    def coordinate_dists(x, y):
        return [f.kernel(x[..., s], y[..., s]) for f, s in zip(factors, slices)]

    return star, int(offsets[-1]), domain, coordinate_dists


def _product(kind, factors, combine, pseudometric=None) -> StarMetricSpace:
    factors = tuple(factors)
    star, arity, domain, coords = _product_layout(factors)

    def kernel(x, y):
        return combine(star, coords(x, y))

    pseudo = any(f.pseudometric for f in factors) if pseudometric is None else pseudometric
    name = f"{kind}(" + ", ".join(f.name for f in factors) + ")"
    return StarMetricSpace(name, star, kernel, arity, domain=domain,
                           pseudometric=pseudo, construction=kind, factors=factors)


def _combine_max(star, ds):
    acc = ds[0]
    for d in ds[1:]:
        acc = np.maximum(acc, d)
    return acc


def _combine_fold(star, ds):
    acc = ds[0]
    for d in ds[1:]:
        acc = star.apply(acc, d)
    return acc


def _combine_euclid(star, ds):
    acc = ds[0] * ds[0]
    for d in ds[1:]:
        acc = acc + d * d
    return np.sqrt(acc)


def product_max(factors: Sequence[StarMetricSpace]) -> StarMetricSpace:
    """Coordinatewise maximum of factor distances."""
    return _product("product_max", factors, _combine_max)


def product_T(factors: Sequence[StarMetricSpace]) -> StarMetricSpace:
    """Left fold of the shared t-definer over factor distances, in factor order."""
    return _product("product_T", factors, _combine_fold)


def euclidean_product_L(factors: Sequence[StarMetricSpace]) -> StarMetricSpace:
    """sqrt(sum d_i^2); only for ordinary metrics (lukasiewicz factors)."""
    factors = tuple(factors)
    for f in factors:
        if f.star is not LUKASIEWICZ:
            raise UnsupportedError(f"euclidean product needs lukasiewicz factors, got {f.star.name!r}")
    return _product("euclidean_L", factors, _combine_euclid)


# --- axiom checker ------------------------------------------------------------

def check_star_metric_axioms(space: StarMetricSpace, points,
                             cfg: ToleranceConfig = DEFAULT_TOLERANCES,
                             pseudometric_mode: Optional[bool] = None,
                             triple_budget: int = DEFAULT_TRIPLE_BUDGET,
                             seed: int = 0) -> LawReport:
    """Check M1 (or M1'), M2 and the star-triangle inequality on a finite point set.

    All N^2 ordered pairs are checked. All N^3 triples are checked when that
    fits in ``triple_budget``; otherwise ``triple_budget`` triples are drawn
    uniformly with ``seed`` (recorded in the report). A failed triangle check
    reports the triple with the largest violation.
    """
    if pseudometric_mode is None:
        pseudometric_mode = space.pseudometric
    pts = space.check_domain(points)
    n = len(pts)
    if n == 0:
        raise UsageError("need at least one point")
    tol = cfg.abs_tol
    star = space.star
    D = space.pairwise(pts)
    report = LawReport(f"star-metric:{space.name}",
                       tolerances={"abs_tol": tol},
                       counters={"points": n, "pair_checks": n * n})

    def pair_witness(i, j):
        return {"x": pts[i], "y": pts[j], "d_xy": D[i, j]}

    neg = ~np.isfinite(D) | (D < 0)
    _record_pairs(report, "nonnegative", neg, -np.where(np.isfinite(D), D, -np.inf), n,
                  pair_witness)

    same = np.all(pts[:, None, :] == pts[None, :, :], axis=-1)
    bad_zero = same & (np.abs(D) > tol)
    if pseudometric_mode:
        check = _record_pairs(report, "M1' d(x,x) = 0", bad_zero, np.abs(D), n, pair_witness)
    else:
        bad_sep = ~same & (D <= tol)
        check = _record_pairs(report, "M1 identity of indiscernibles", bad_zero | bad_sep,
                              np.where(same, np.abs(D), tol - D), n, pair_witness)
        if (bad_sep & (D > 0)).any():
            check.flags.append("tolerance-ambiguous")

    asym = np.abs(D - D.T)
    _record_pairs(report, "M2 symmetry", asym > tol, asym, n, pair_witness)

    full = n ** 3 <= triple_budget
    worst, worst_ijk = -np.inf, None
    if full:
        for i in range(n):
            bound = star.apply(D[i][:, None], D)  # [k, j] -> d(x_i, z_k) * d(z_k, y_j)
            margin = D[i][None, :] - bound
            k, j = np.unravel_index(int(np.argmax(margin)), margin.shape)
            if margin[k, j] > worst:
                worst, worst_ijk = float(margin[k, j]), (i, int(j), int(k))
        tested = n ** 3
    else:
        rng = np.random.default_rng(seed)
        report.seed = seed
        tested = 0
        while tested < triple_budget:
            m = min(PAIR_CHUNK, triple_budget - tested)
            ijk = rng.integers(0, n, size=(m, 3))
            i, j, k = ijk[:, 0], ijk[:, 1], ijk[:, 2]
            margin = D[i, j] - star.apply(D[i, k], D[k, j])
            t = int(np.argmax(margin))
            if margin[t] > worst:
                worst, worst_ijk = float(margin[t]), (int(i[t]), int(j[t]), int(k[t]))
            tested += m
    report.counters["triangle_checks"] = tested
    report.counters["triangle_mode"] = "exhaustive" if full else "sampled"

    law = f"M3* triangle ({star.name})"
    if worst > tol:
        i, j, k = worst_ijk
        report.add(LawCheck(law, False, tested, {
            "x": pts[i], "y": pts[j], "z": pts[k],
            "d_xy": D[i, j], "d_xz": D[i, k], "d_zy": D[k, j],
            "bound": star.apply(D[i, k], D[k, j]),
        }, worst))
    else:
        report.add(LawCheck(law, True, tested))
    return report


def _record_pairs(report, law, bad, margin, n, witness) -> LawCheck:
    if not bad.any():
        return report.add(LawCheck(law, True, n * n))
    i, j = np.unravel_index(int(np.argmax(bad)), bad.shape)
    return report.add(LawCheck(law, False, n * n, witness(i, j), float(margin[i, j])))


def replay_metric_witness(space: StarMetricSpace, check: LawCheck,
                          cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    """Recompute a failed check from its witness alone; True when it still fails."""
    w = check.witness or {}
    tol = cfg.abs_tol
    x = as_point(w["x"], space.arity)
    y = as_point(w["y"], space.arity)
    dxy = space.dist(x, y)
    if check.law.startswith("M3"):
        z = as_point(w["z"], space.arity)
        return dxy - space.star.apply(space.dist(x, z), space.dist(z, y)) > tol
    if check.law.startswith("M2"):
        return abs(dxy - space.dist(y, x)) > tol
    if check.law.startswith("M1"):
        same = bool(np.all(x == y))
        return abs(dxy) > tol if same else dxy <= tol
    if check.law == "nonnegative":
        return not (np.isfinite(dxy) and dxy >= 0)
    raise UsageError(f"no replay rule for law {check.law!r}")

