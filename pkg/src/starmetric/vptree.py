"""Vantage-point tree over a star-metric space.

Pruning bounds come from the star-triangle inequality plus residuation.
With D = d(q, pivot), mu the node's median radius and x any indexed point:

* inner subtree, d(pivot, x) <= mu:
  D <= d(q, x) * d(x, pivot) <= d(q, x) * mu, hence d(q, x) >= mu -o D.
* outer subtree, d(pivot, x) >= mu:
  mu <= d(x, pivot) <= d(x, q) * D, hence d(q, x) >= D -o mu.

Under the Lukasiewicz t-definer (a + b) these are the classical bounds
max(0, D - mu) and max(0, mu - D).

Computed distances carry a small relative error, and some residuums amplify
it badly near a = b (sqrt((b - a)(b + a)) for the s t-definer). Queries
therefore evaluate the bounds on inputs nudged by DISTANCE_REL_ERROR in the
direction that can only lower them, using monotonicity of the residuum.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import UsageError
from .metric import StarMetricSpace, as_point
from .tdefiner import DEFAULT_TOLERANCES, TDefiner, ToleranceConfig, residuum_unchecked


@dataclass
class Leaf:
    indices: np.ndarray


@dataclass
class Node:
    pivot: int
    mu: float
    inner: Optional["Tree"] = None
    outer: Optional["Tree"] = None


Tree = Union[Node, Leaf]


@dataclass(frozen=True)
class Neighbor:
    point: tuple
    distance: float
    index: int


@dataclass(frozen=True)
class SkipEvent:
    side: str
    bound: float
    threshold: float
    indices: tuple


class NeighborList(list):
    """Neighbors in ascending (distance, input index) order plus query metadata."""

    def __init__(self, items=(), short: bool = False, distance_evals: int = 0,
                 skips: Optional[list] = None):
        super().__init__(items)
        self.short = short
        self.distance_evals = distance_evals
        self.skips = skips

    @property
    def distances(self) -> list[float]:
        return [n.distance for n in self]


def pruning_bounds(star: TDefiner, D, mu, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
    """``(lb_inner, lb_outer) = (mu -o D, D -o mu)``; broadcasts over arrays."""
    return residuum_unchecked(star, mu, D, cfg), residuum_unchecked(star, D, mu, cfg)


DISTANCE_REL_ERROR = 1e-12


def conservative_bounds(star: TDefiner, D: float, mu: float,
                        cfg: ToleranceConfig = DEFAULT_TOLERANCES, rel: float = DISTANCE_REL_ERROR):
    """Pruning bounds that stay valid when D and mu are off by a relative ``rel``.

    ``a -o b`` is nonincreasing in a and nondecreasing in b, so shrinking the
    right argument and growing the left one can only lower the bound.
    """
    lo, hi = 1.0 - rel, 1.0 + rel
    lb_in = residuum_unchecked(star, mu * hi, D * lo, cfg)
    lb_out = residuum_unchecked(star, D * hi, mu * lo, cfg)
    return lb_in, lb_out


def _subtree_indices(tree: Optional[Tree]) -> list[int]:
    out, stack = [], [tree]
    while stack:
        t = stack.pop()
        if t is None:
            continue
        if isinstance(t, Leaf):
            out.extend(int(i) for i in t.indices)
        else:
            out.append(t.pivot)
            stack.extend((t.inner, t.outer))
    return out


def _neighbors(points: np.ndarray, pairs) -> list[Neighbor]:
    return [Neighbor(tuple(points[i].tolist()), float(d), int(i)) for d, i in pairs]


class VpTree:
    """Exact k-NN and range search; immutable once built.

    Pivots are drawn uniformly from each node's points with a generator seeded
    by ``seed``; ``mu`` is the lower median of the pivot distances and points
    at distance exactly ``mu`` go to the inner side.
    """

    def __init__(self, points, space: StarMetricSpace, leaf_size: int = 16, seed: int = 0,
                 cfg: ToleranceConfig = DEFAULT_TOLERANCES):
        if int(leaf_size) != leaf_size or leaf_size < 1:
            raise UsageError("leaf_size must be a positive integer")
        pts = space.check_domain(points)
        if len(pts) == 0:
            raise UsageError("cannot build an index over an empty point set")
        self.space = space
        self.points = pts
        self.leaf_size = int(leaf_size)
        self.build_seed = int(seed)
        self.cfg = cfg
        self.root = self._build(np.random.default_rng(self.build_seed))

    def __len__(self) -> int:
        return len(self.points)

    def _build(self, rng) -> Tree:
        kernel, pts = self.space.kernel, self.points
        root: list = [None]

        def attach(parent, slot, subtree):
            if parent is None:
                root[0] = subtree
            else:
                setattr(parent, slot, subtree)

        # explicit stack: heavy distance ties can make the tree as deep as n
        stack = [(np.arange(len(pts)), None, None)]
        while stack:
            idx, parent, slot = stack.pop()
            if len(idx) <= self.leaf_size:
                attach(parent, slot, Leaf(idx))
                continue
            pos = int(rng.integers(len(idx)))
            pivot = int(idx[pos])
            rest = np.delete(idx, pos)
            d = kernel(pts[pivot][None, :], pts[rest])
            m = (len(d) - 1) // 2
            mu = float(np.partition(d, m)[m])
            node = Node(pivot, mu)
            attach(parent, slot, node)
            inner, outer = rest[d <= mu], rest[d > mu]
            if len(outer):
                stack.append((outer, node, "outer"))
            if len(inner):
                stack.append((inner, node, "inner"))
        return root[0]

    # --- inspection -----------------------------------------------------------

    def depth(self) -> int:
        best, stack = 0, [(self.root, 1)]
        while stack:
            t, dep = stack.pop()
            best = max(best, dep)
            if isinstance(t, Node):
                stack.extend((c, dep + 1) for c in (t.inner, t.outer) if c is not None)
        return best

    def indices(self) -> list[int]:
        return _subtree_indices(self.root)

    def audit_partition(self) -> list[str]:
        """Every violated partition invariant, as human-readable strings (empty when sound)."""
        problems = []
        stack = [self.root]
        while stack:
            t = stack.pop()
            if not isinstance(t, Node):
                continue
            p = self.points[t.pivot][None, :]
            for side, child in (("inner", t.inner), ("outer", t.outer)):
                if child is None:
                    continue
                idx = np.asarray(_subtree_indices(child), int)
                d = self.space.kernel(p, self.points[idx])
                bad = d > t.mu if side == "inner" else d < t.mu
                if bad.any():
                    problems.append(f"pivot {t.pivot}: {int(bad.sum())} {side} points violate mu={t.mu}")
                stack.append(child)
        return problems

    # --- queries --------------------------------------------------------------

    def _slack(self, threshold: float) -> float:
        return self.cfg.abs_tol * (1.0 + abs(threshold)) + DISTANCE_REL_ERROR * abs(threshold)

    def knn(self, q, k: int, audit: bool = False) -> NeighborList:
        """The k nearest points to ``q``, ties broken by input index."""
        if int(k) != k or k < 1:
            raise UsageError(f"k must be a positive integer, got {k!r}")
        k = int(k)
        q = self.space.check_domain(as_point(q, self.space.arity)[None, :])
        kernel, pts, star = self.space.kernel, self.points, self.space.star
        heap: list[tuple[float, int]] = []  # max-heap on (distance, index) via negation
        evals = 0
        skips = [] if audit else None

        def offer(d, i):
            item = (-d, -i)
            if len(heap) < k:
                heapq.heappush(heap, item)
            elif (d, i) < (-heap[0][0], -heap[0][1]):
                heapq.heapreplace(heap, item)

        def tau():
            return -heap[0][0] if len(heap) == k else np.inf

        stack: list[tuple[Tree, float, str]] = [(self.root, 0.0, "root")]
        while stack:
            t, lb, side = stack.pop()
            th = tau()
            if lb > th + self._slack(th):
                if audit:
                    skips.append(SkipEvent(side, float(lb), float(th), tuple(_subtree_indices(t))))
                continue
            if isinstance(t, Leaf):
                d = kernel(q, pts[t.indices])
                evals += len(t.indices)
                for dist, i in zip(d.tolist(), t.indices.tolist()):
                    offer(dist, i)
                continue
            D = float(kernel(q, pts[t.pivot][None, :])[0])
            evals += 1
            offer(D, t.pivot)
            lb_in, lb_out = conservative_bounds(star, D, t.mu, self.cfg)
            near, far = ((t.inner, float(lb_in), "inner"), (t.outer, float(lb_out), "outer"))
            if D > t.mu:
                near, far = far, near
            for child in (far, near):  # near is popped first
                if child[0] is not None:
                    stack.append(child)

        pairs = sorted((-nd, -ni) for nd, ni in heap)
        return NeighborList(_neighbors(pts, pairs), short=k > len(pts),
                            distance_evals=evals, skips=skips)

    def range_query(self, q, r: float, audit: bool = False) -> NeighborList:
        """All points with ``d(q, x) < r`` (strict), ordered by (distance, index)."""
        if not (np.isfinite(r) and r > 0):
            raise UsageError(f"range radius must be a positive real, got {r!r}")
        q = self.space.check_domain(as_point(q, self.space.arity)[None, :])
        kernel, pts, star = self.space.kernel, self.points, self.space.star
        found: list[tuple[float, int]] = []
        evals = 0
        skips = [] if audit else None
        slack = self._slack(r)
        stack: list[tuple[Tree, float, str]] = [(self.root, 0.0, "root")]
        while stack:
            t, lb, side = stack.pop()
            if lb >= r + slack:
                if audit:
                    skips.append(SkipEvent(side, float(lb), float(r), tuple(_subtree_indices(t))))
                continue
            if isinstance(t, Leaf):
                d = kernel(q, pts[t.indices])
                evals += len(t.indices)
                hit = d < r
                found.extend(zip(d[hit].tolist(), t.indices[hit].tolist()))
                continue
            D = float(kernel(q, pts[t.pivot][None, :])[0])
            evals += 1
            if D < r:
                found.append((D, t.pivot))
            lb_in, lb_out = conservative_bounds(star, D, t.mu, self.cfg)
            for child, lb_c, s in ((t.outer, lb_out, "outer"), (t.inner, lb_in, "inner")):
                if child is not None:
                    stack.append((child, float(lb_c), s))
        found.sort()
        return NeighborList(_neighbors(pts, found), distance_evals=evals, skips=skips)

    def verify_skips(self, q, result: NeighborList, strict: bool = True) -> bool:
        """Replay recorded skip events: every skipped point must lie beyond the threshold.

        ``strict`` checks ``d > threshold`` (k-NN); otherwise ``d >= threshold`` (range).
        """
        if result.skips is None:
            raise UsageError("query was not run in audit mode")
        q = as_point(q, self.space.arity)[None, :]
        for ev in result.skips:
            d = self.space.kernel(q, self.points[np.asarray(ev.indices, int)])
            ok = d > ev.threshold if strict else d >= ev.threshold
            if not np.all(ok):
                return False
        return True


def build(points, space: StarMetricSpace, leaf_size: int = 16, seed: int = 0,
          cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> VpTree:
    return VpTree(points, space, leaf_size, seed, cfg)


def brute_force(points, space: StarMetricSpace, q, k: int) -> NeighborList:
    """Full scan sorted by (distance, input index): the ground truth for index tests."""
    if int(k) != k or k < 1:
        raise UsageError(f"k must be a positive integer, got {k!r}")
    pts = space.check_domain(points)
    qq = space.check_domain(as_point(q, space.arity)[None, :])
    d = space.kernel(qq, pts)
    order = np.lexsort((np.arange(len(pts)), d))[:int(k)]
    return NeighborList(_neighbors(pts, zip(d[order], order)), short=k > len(pts),
                        distance_evals=len(pts))


def brute_force_range(points, space: StarMetricSpace, q, r: float) -> NeighborList:
    pts = space.check_domain(points)
    qq = space.check_domain(as_point(q, space.arity)[None, :])
    d = space.kernel(qq, pts)
    hit = np.nonzero(d < r)[0]
    order = hit[np.lexsort((hit, d[hit]))]
    return NeighborList(_neighbors(pts, zip(d[order], order)), distance_evals=len(pts))
