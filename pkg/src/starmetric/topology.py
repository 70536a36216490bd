"""Constructive topology on star-metric spaces.

Membership tests always use the plain strict comparison ``dist < r``. Every
floating-point back-off lives in the construction of radii
(:func:`separation_radius`, :func:`normal_separation`), never in membership.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NumericError, UsageError
from .laws import LawCheck, LawReport
from .metric import (StarMetricSpace, as_point, as_points, product_max, product_T)
from .tdefiner import DEFAULT_TOLERANCES, TDefiner, ToleranceConfig, residuum_unchecked

OUT, IN, BOUNDARY = 0, 1, 2


@dataclass(frozen=True)
class Ball:
    space: StarMetricSpace
    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = as_point(self.center, self.space.arity)
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise UsageError(f"ball radius must be a positive real, got {self.radius!r}")
        self.space.check_domain(center[None, :])
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    def mask(self, candidates) -> np.ndarray:
        pts = self.space.check_domain(candidates)
        return self.space.kernel(self.center[None, :], pts) < self.radius

    def __contains__(self, point) -> bool:
        return bool(self.mask(as_point(point, self.space.arity)[None, :])[0])


def ball_members(ball: Ball, candidates) -> np.ndarray:
    """The candidates strictly inside the ball, as an ``(m, arity)`` array."""
    pts = ball.space.check_domain(candidates)
    return pts[ball.mask(pts)]


def interior_witness(ball: Ball, y, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
    """Radius eps with N_eps(y) inside the ball: ``eps = d(center, y) -o r``."""
    y = as_point(y, ball.space.arity)
    d = float(ball.space.kernel(ball.center, y))
    if not d < ball.radius:
        raise UsageError(f"point {y.tolist()} is not inside the ball (distance {d} >= {ball.radius})")
    return float(residuum_unchecked(ball.space.star, d, ball.radius, cfg))


def half_radius(star: TDefiner, target: float, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
    """Largest s (up to one tolerance step) with ``s star s < target``.

    Bisection on the continuous nondecreasing map ``s -> s star s`` over
    [0, target], keeping the left end valid, then backing off by
    ``numeric_residuum_tol`` when that keeps s positive.
    """
    target = float(target)
    if not target > 0:
        raise UsageError(f"separation target must be positive, got {target}")
    tol = cfg.numeric_residuum_tol
    lo, hi = 0.0, target
    for _ in range(cfg.max_bisection_iters):
        if lo > 0 and hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if star.apply(mid, mid) < target:
            lo = mid
        else:
            hi = mid
    if lo <= 0:
        raise NumericError(f"no positive s with s*s < {target} found", bracket=(lo, hi))
    s = lo - tol
    return s if s > 0 and star.apply(s, s) < target else lo


def separation_radius(space: StarMetricSpace, a, b, cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> float:
    """s > 0 with ``s star s < d(a, b)``, so that N_s(a) and N_s(b) are disjoint."""
    a = as_point(a, space.arity)
    b = as_point(b, space.arity)
    space.check_domain(np.stack([a, b]))
    d = float(space.kernel(a, b))
    if not d > 0:
        raise UsageError(f"points {a.tolist()} and {b.tolist()} are indiscernible (distance {d})")
    return half_radius(space.star, d, cfg)


@dataclass
class NormalSeparation:
    U: list[Ball]
    V: list[Ball]

    def masks(self, candidates) -> tuple[np.ndarray, np.ndarray]:
        pts = as_points(candidates, self.U[0].space.arity)
        u = np.zeros(len(pts), bool)
        v = np.zeros(len(pts), bool)
        for ball in self.U:
            u |= ball.mask(pts)
        for ball in self.V:
            v |= ball.mask(pts)
        return u, v

    def overlap(self, candidates) -> np.ndarray:
        pts = as_points(candidates, self.U[0].space.arity)
        u, v = self.masks(pts)
        return pts[u & v]


def normal_separation(space: StarMetricSpace, A, B,
                      cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> NormalSeparation:
    """Disjoint open covers U of A and V of B for finite point sets.

    For a in A, r_a is the distance from a to B shrunk by one tolerance step,
    and s_a satisfies ``s_a star s_a < r_a``; symmetrically for B.
    """
    A = space.check_domain(A)
    B = space.check_domain(B)
    if len(A) == 0 or len(B) == 0:
        raise UsageError("A and B must be nonempty")
    cross = space.pairwise(A, B)
    if np.any(cross <= 0):
        i, j = np.unravel_index(int(np.argmin(cross)), cross.shape)
        raise UsageError(f"A and B overlap: {A[i].tolist()} and {B[j].tolist()} "
                         f"are at distance {cross[i, j]}")

    def radii(row_min):
        r = row_min - cfg.numeric_residuum_tol
        return np.where(r > 0, r, row_min)

    r_a = radii(cross.min(axis=1))
    r_b = radii(cross.min(axis=0))
    U = [Ball(space, a, half_radius(space.star, r, cfg)) for a, r in zip(A, r_a)]
    V = [Ball(space, b, half_radius(space.star, r, cfg)) for b, r in zip(B, r_b)]
    return NormalSeparation(U, V)


def product_ball_inclusion_check(factors: Sequence[StarMetricSpace], star: TDefiner, a, r: float,
                                 candidates) -> LawReport:
    """Check ``N_r^T(a) <= N_r^max(a) <= N_{r*...*r}^T(a)`` pointwise on candidates."""
    factors = tuple(factors)
    if any(f.star is not star for f in factors):
        raise UsageError("all factors must use the given t-definer")
    t_space = product_T(factors)
    m_space = product_max(factors)
    n = len(factors)
    big_r = star.power(r, n)
    center = as_point(a, t_space.arity)
    pts = t_space.check_domain(candidates)

    in_t = Ball(t_space, center, r).mask(pts)
    in_max = Ball(m_space, center, r).mask(pts)
    in_big = Ball(t_space, center, big_r).mask(pts)

    report = LawReport(f"product-inclusion:{star.name}:n={n}",
                       counters={"candidates": len(pts), "in_T": int(in_t.sum()),
                                 "in_max": int(in_max.sum()), "in_T_big": int(in_big.sum())})
    report.tolerances["r"] = float(r)
    report.tolerances["r_star_n"] = big_r
    for law, bad in (("N_r^T subset N_r^max", in_t & ~in_max),
                     ("N_r^max subset N_(r*..*r)^T", in_max & ~in_big)):
        if bad.any():
            i = int(np.argmax(bad))
            report.add(LawCheck(law, False, len(pts), {"point": pts[i], "center": center},
                                flags=[f"violations={int(bad.sum())}"]))
        else:
            report.add(LawCheck(law, True, len(pts)))
    return report


@dataclass
class BallGrid:
    values: np.ndarray  # (resolution, resolution) of OUT / IN / BOUNDARY; row 0 is y = ymax
    xs: np.ndarray
    ys: np.ndarray

    def at(self, x: float, y: float) -> int:
        j = int(np.argmin(np.abs(self.xs - x)))
        i = int(np.argmin(np.abs(self.ys - y)))
        return int(self.values[i, j])


def ball_grid(space: StarMetricSpace, center, r: float, window: Sequence[float], resolution: int,
              cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> BallGrid:
    """Rasterise an open ball of a 2-dimensional space.

    ``window`` is ``(xmin, xmax, ymin, ymax)``. Cells with ``|dist - r| < abs_tol``
    are marked BOUNDARY instead of being decided by rounding.
    """
    if space.arity != 2:
        raise UsageError(f"ball_grid needs a 2-dimensional space, got arity {space.arity}")
    if int(resolution) != resolution or resolution < 2:
        raise UsageError("resolution must be an integer >= 2")
    xmin, xmax, ymin, ymax = (float(v) for v in window)
    if not (xmin < xmax and ymin < ymax):
        raise UsageError(f"degenerate window {window!r}")
    ball = Ball(space, center, r)
    xs = np.linspace(xmin, xmax, int(resolution))
    ys = np.linspace(ymax, ymin, int(resolution))
    gx, gy = np.meshgrid(xs, ys)
    cells = np.stack([gx, gy], axis=-1)
    with np.errstate(invalid="ignore"):
        d = space.kernel(ball.center, cells)
    values = np.where(d < ball.radius, IN, OUT).astype(np.uint8)
    values[np.abs(d - ball.radius) < cfg.abs_tol] = BOUNDARY
    values[~space.domain(cells)] = OUT
    return BallGrid(values, xs, ys)
