"""T-definers: continuous, associative, commutative, monotone operators on [0, inf)
with identity 0, together with their residuums.

Every operator in this module is written against numpy broadcasting so that
the same callable serves scalar calls, axiom sweeps over large sample grids
and the pruning bounds of the VP-tree. User operators that only work on
Python floats can be wrapped with :meth:`TDefiner.from_scalar`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NumericError, UsageError
from .laws import LawCheck, LawReport

BinaryOp = Callable[[np.ndarray, np.ndarray], np.ndarray]

CONTINUITY_LADDER = (1e-2, 1e-4, 1e-6)
CONTINUITY_SHRINK = 0.5
CONTINUITY_SLACK = 10.0


@dataclass(frozen=True)
class ToleranceConfig:
    abs_tol: float = 1e-9
    numeric_residuum_tol: float = 1e-10
    max_bisection_iters: int = 200

    def __post_init__(self):
        for name in ("abs_tol", "numeric_residuum_tol"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise UsageError(f"{name} must be finite and >= 0, got {v!r}")
        if int(self.max_bisection_iters) != self.max_bisection_iters or self.max_bisection_iters < 1:
            raise UsageError("max_bisection_iters must be a positive integer")


DEFAULT_TOLERANCES = ToleranceConfig()


@dataclass(frozen=True)
class TDefiner:
    """A named t-definer.

    ``apply`` and ``residuum_closed_form`` must broadcast over numpy arrays.
    When no closed form is given, residuums fall back to bisection.
    """

    name: str
    apply: BinaryOp
    residuum_closed_form: Optional[BinaryOp] = None
    description: str = ""

    def __call__(self, a, b):
        return apply(self, a, b)

    @classmethod
    def from_scalar(cls, name: str, fn: Callable[[float, float], float],
                    residuum: Callable[[float, float], float] | None = None,
                    description: str = "") -> "TDefiner":
        vec = np.vectorize(fn, otypes=[float])
        res = np.vectorize(residuum, otypes=[float]) if residuum is not None else None
        return cls(name, vec, res, description)

    def fold(self, values):
        """Left fold of the operator over the last axis of ``values``."""
        values = np.asarray(values, dtype=float)
        acc = values[..., 0]
        for i in range(1, values.shape[-1]):
            acc = self.apply(acc, values[..., i])
        return acc

    def power(self, r: float, n: int) -> float:
        """``r * r * ... * r`` (n times) under this operator."""
        return float(self.fold(np.full(n, float(r))))


# --- built-in operators -------------------------------------------------------

def _lukasiewicz(a, b):
    return a + b


def _lukasiewicz_residuum(a, b):
    return np.maximum(b - a, 0.0)


def _maximum(a, b):
    return np.maximum(a, b)


def _maximum_residuum(a, b):
    a, b = np.broadcast_arrays(a, b)
    return np.where(a >= b, 0.0, b)


_TINY, _HUGE = 2.0 ** -900, 2.0 ** 900
_UP, _DOWN = 2.0 ** 600, 2.0 ** -600
_SMALL_INPUT = 2.0 ** -300


def quadratic_root(quad, a, b):
    """``sqrt(quad(a, b))`` for a ``quad`` homogeneous of degree 2.

    Where ``quad`` would underflow or overflow, the inputs are rescaled by an
    exact power of two first, so the result is what unbounded exponents would
    give. Only exactly rounded operations are used.
    """
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    with np.errstate(over="ignore", under="ignore"):
        q = quad(a, b)
    out = np.sqrt(q)
    # a zero q from large equal inputs is exact; only tiny inputs can underflow
    small = (q < _TINY) & (np.maximum(np.abs(a), np.abs(b)) < _SMALL_INPUT)
    big = q > _HUGE
    if small.any() or big.any():
        out = np.array(out, copy=True)
        for mask, k in ((small, _UP), (big, _DOWN)):
            if mask.any():
                out[mask] = np.sqrt(quad(a[mask] * k, b[mask] * k)) / k
    return out


def _sum_sq(a, b):
    return a * a + b * b


def _diff_sq(a, b):
    # (b - a)(b + a) instead of b^2 - a^2: no cancellation when a is close to b
    return np.maximum((b - a) * (b + a), 0.0)


def _star_s(a, b):
    return quadratic_root(_sum_sq, a, b)


def _star_s_residuum(a, b):
    a, b = np.broadcast_arrays(a, b)
    return np.where(a >= b, 0.0, quadratic_root(_diff_sq, a, b))


def _star_p(a, b):
    # (sqrt a + sqrt b)^2 expanded: never rounds below a + b, and a * 0 is exactly a
    return a + b + 2.0 * np.sqrt(a * b)


def _star_p_residuum(a, b):
    # (sqrt b - sqrt a)^2 rewritten as ((b - a) / (sqrt a + sqrt b))^2: the
    # plain form returns 0 when sqrt a and sqrt b round to the same float
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    with np.errstate(invalid="ignore", divide="ignore"):
        t = (b - a) / (np.sqrt(a) + np.sqrt(b))
    return np.where(a >= b, 0.0, np.where(a == 0, b, t * t))


LUKASIEWICZ = TDefiner("lukasiewicz", _lukasiewicz, _lukasiewicz_residuum,
                       "a + b; its metric spaces are ordinary metric spaces")
MAXIMUM = TDefiner("max", _maximum, _maximum_residuum,
                   "max(a, b); the weakest t-definer, giving ultrametrics")
STAR_S = TDefiner("s", _star_s, _star_s_residuum, "sqrt(a^2 + b^2)")
STAR_P = TDefiner("p", _star_p, _star_p_residuum, "(sqrt(a) + sqrt(b))^2")

BUILTINS: dict[str, TDefiner] = {t.name: t for t in (LUKASIEWICZ, MAXIMUM, STAR_S, STAR_P)}
_REGISTRY: dict[str, TDefiner] = dict(BUILTINS)


def register_tdefiner(star: TDefiner, replace: bool = False) -> TDefiner:
    if star.name in BUILTINS:
        raise UsageError(f"cannot replace built-in t-definer {star.name!r}")
    if star.name in _REGISTRY and not replace:
        raise UsageError(f"t-definer {star.name!r} already registered")
    _REGISTRY[star.name] = star
    return star


def get_tdefiner(name: str) -> TDefiner:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UsageError(f"unknown t-definer {name!r}; known: {sorted(_REGISTRY)}") from None


def registered_tdefiners() -> dict[str, TDefiner]:
    return dict(_REGISTRY)


# --- evaluation ---------------------------------------------------------------

def _nonneg(x, what: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    bad = ~np.isfinite(arr) | (arr < 0)
    if np.any(bad):
        first = arr[bad].flat[0] if arr.ndim else float(arr)
        raise DomainError(f"{what} must be finite and >= 0, got {first!r}")
    return arr


def _finish(result, *inputs):
    if all(np.ndim(x) == 0 for x in inputs):
        return float(result)
    return np.asarray(result, dtype=float)


def apply(star: TDefiner, a, b):
    """Evaluate ``a star b`` with domain validation."""
    a_ = _nonneg(a, "a")
    b_ = _nonneg(b, "b")
    return _finish(star.apply(a_, b_), a, b)


def residuum(star: TDefiner, a, b, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
    """``min{c : c star a >= b}``; closed form when the t-definer has one."""
    a_ = _nonneg(a, "a")
    b_ = _nonneg(b, "b")
    if star.residuum_closed_form is not None:
        out = star.residuum_closed_form(a_, b_)
    else:
        out = bisect_residuum(star, a_, b_, cfg)
    return _finish(out, a, b)


def residuum_numeric(star: TDefiner, a, b, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
    """Residuum by bisection, ignoring any closed form."""
    a_ = _nonneg(a, "a")
    b_ = _nonneg(b, "b")
    return _finish(bisect_residuum(star, a_, b_, cfg), a, b)


def residuum_unchecked(star: TDefiner, a, b, cfg: ToleranceConfig = DEFAULT_TOLERANCES):
    """Residuum without input validation, for hot paths with trusted inputs."""
    if star.residuum_closed_form is not None:
        return star.residuum_closed_form(a, b)
    return bisect_residuum(star, np.asarray(a, float), np.asarray(b, float), cfg)


def bisect_residuum(star: TDefiner, a: np.ndarray, b: np.ndarray,
                    cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> np.ndarray:
    """Vectorised bisection for the smallest c in [0, b] with ``c star a >= b``.

    ``c -> c star a`` is nondecreasing, and b is always feasible, so [0, b]
    brackets the minimum. Iteration stops once the bracket is narrower than
    ``numeric_residuum_tol`` both in c and in the operator value (the value
    criterion matters for operators with unbounded slope at 0, such as
    ``(sqrt(a) + sqrt(b))^2``), or once no float lies strictly inside it.
    The left endpoint is returned, so the result never exceeds the minimum.
    """
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    shape = a.shape
    a = a.ravel()
    b = b.ravel()
    out = np.zeros(a.shape)
    need = np.nonzero(a < b)[0]
    if need.size == 0:
        return out.reshape(shape)

    aa, bb = a[need], b[need]
    lo = np.zeros_like(bb)
    hi = bb.copy()
    f_lo = np.asarray(star.apply(lo, aa), float)
    f_hi = np.asarray(star.apply(hi, aa), float)
    # b is feasible in exact arithmetic; allow for rounding in f(b, a)
    infeasible = bb - f_hi > cfg.abs_tol * np.maximum(1.0, bb)
    if np.any(infeasible):
        i = int(np.argmax(infeasible))
        raise NumericError(
            f"{star.name}: b={bb[i]!r} is not feasible for a={aa[i]!r}; operator violates T3/T4",
            bracket=(lo, hi))
    done = f_lo >= bb  # lo=0 already feasible: minimum is 0
    tol = cfg.numeric_residuum_tol

    for _ in range(cfg.max_bisection_iters):
        active = ~done & (((hi - lo) > tol) | ((f_hi - f_lo) > tol))
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        mid = 0.5 * (lo[idx] + hi[idx])
        stuck = (mid <= lo[idx]) | (mid >= hi[idx])
        done[idx[stuck]] = True
        idx, mid = idx[~stuck], mid[~stuck]
        f_mid = np.asarray(star.apply(mid, aa[idx]), float)
        up = f_mid >= bb[idx]
        hi[idx[up]] = mid[up]
        f_hi[idx[up]] = f_mid[up]
        lo[idx[~up]] = mid[~up]
        f_lo[idx[~up]] = f_mid[~up]
    else:
        active = ~done & (((hi - lo) > tol) | ((f_hi - f_lo) > tol))
        if active.any():
            raise NumericError(
                f"{star.name}: residuum bisection did not converge in "
                f"{cfg.max_bisection_iters} iterations",
                bracket=(lo[active], hi[active]))

    out[need] = lo
    return out.reshape(shape)


# --- ordering -----------------------------------------------------------------

class Ordering(str, enum.Enum):
    WEAKER_OR_EQUAL = "weaker-or-equal"
    STRONGER_OR_EQUAL = "stronger-or-equal"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable-on-samples"


@dataclass
class Comparison:
    verdict: Ordering
    samples_tested: int
    # first pair with star1 > star2 (refutes "weaker") and with star1 < star2
    weaker_counterexample: tuple[float, float] | None = None
    stronger_counterexample: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "samples_tested": self.samples_tested,
            "weaker_counterexample": self.weaker_counterexample,
            "stronger_counterexample": self.stronger_counterexample,
        }


def compare(star1: TDefiner, star2: TDefiner, samples,
            cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> Comparison:
    """Pointwise order of two t-definers on the sampled pairs.

    This is sample evidence, not a proof. No global "strongest" verdict exists.
    """
    pairs = _nonneg(samples, "samples").reshape(-1, 2)
    if pairs.shape[0] == 0:
        raise UsageError("compare needs at least one sample pair")
    v1 = star1.apply(pairs[:, 0], pairs[:, 1])
    v2 = star2.apply(pairs[:, 0], pairs[:, 1])
    above = v1 > v2 + cfg.abs_tol
    below = v1 < v2 - cfg.abs_tol

    def first(mask):
        if not mask.any():
            return None
        i = int(np.argmax(mask))
        return (float(pairs[i, 0]), float(pairs[i, 1]))

    le, ge = not above.any(), not below.any()
    if le and ge:
        verdict = Ordering.EQUAL
    elif le:
        verdict = Ordering.WEAKER_OR_EQUAL
    elif ge:
        verdict = Ordering.STRONGER_OR_EQUAL
    else:
        verdict = Ordering.INCOMPARABLE
    return Comparison(verdict, len(pairs), first(above), first(below))


# --- axiom suite --------------------------------------------------------------

def grid_values(n: int, high: float = 10.0, low: float = 0.0) -> np.ndarray:
    return np.linspace(low, high, n)


def grid_pairs(n: int, high: float = 10.0) -> np.ndarray:
    g = grid_values(n, high)
    a, b = np.meshgrid(g, g, indexing="ij")
    return np.stack([a.ravel(), b.ravel()], axis=1)


def grid_triples(n: int, high: float = 10.0) -> np.ndarray:
    g = grid_values(n, high)
    a, b, c = np.meshgrid(g, g, g, indexing="ij")
    return np.stack([a.ravel(), b.ravel(), c.ravel()], axis=1)


def random_triples(n: int, seed: int, high: float = 10.0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0.0, high, size=(n, 3))


def _record(report: LawReport, law: str, violation: np.ndarray, n: int,
            witness_fn, margin: np.ndarray | None = None) -> LawCheck:
    violation = np.asarray(violation, bool)
    if not violation.any():
        return report.add(LawCheck(law, True, n))
    i = int(np.argmax(violation))
    m = float(margin[i]) if margin is not None else None
    return report.add(LawCheck(law, False, n, witness_fn(i), m))


def continuity_gaps(star: TDefiner, a: np.ndarray, b: np.ndarray,
                    ladder=CONTINUITY_LADDER) -> np.ndarray:
    base = star.apply(a, b)
    return np.stack([np.abs(star.apply(a + d, b) - base) for d in ladder], axis=-1)


def continuity_violations(gaps: np.ndarray, abs_tol: float) -> np.ndarray:
    slack = CONTINUITY_SLACK * abs_tol
    bad = np.zeros(gaps.shape[:-1], bool)
    for i in range(1, gaps.shape[-1]):
        bad |= gaps[..., i] > np.maximum(CONTINUITY_SHRINK * gaps[..., i - 1], slack)
    return bad


def check_tdefiner_axioms(star: TDefiner, samples,
                          cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> LawReport:
    """Sample-based check of T1-T5 and of the lower bound ``a star b >= max(a, b)``.

    T5 is reported as "consistent with continuity": along the ladder
    ``delta in (1e-2, 1e-4, 1e-6)`` each gap ``|f(a+delta, b) - f(a, b)|`` must
    at least halve, up to a slack of ``10 * abs_tol``.
    """
    t = _nonneg(samples, "samples").reshape(-1, 3)
    if t.shape[0] == 0:
        raise UsageError("check_tdefiner_axioms needs at least one sample triple")
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    n = len(t)
    tol = cfg.abs_tol
    f = star.apply
    report = LawReport(f"tdefiner:{star.name}",
                       tolerances={"abs_tol": tol},
                       counters={"triples": n})

    d1 = np.abs(f(a, b) - f(b, a))
    _record(report, "T1 commutativity", d1 > tol, n,
            lambda i: {"a": a[i], "b": b[i]}, d1)

    lhs, rhs = f(a, f(b, c)), f(f(a, b), c)
    d2 = np.abs(lhs - rhs)
    _record(report, "T2 associativity", d2 > tol, n,
            lambda i: {"a": a[i], "b": b[i], "c": c[i]}, d2)

    lo, hi = np.minimum(a, b), np.maximum(a, b)
    d3 = np.maximum(f(lo, c) - f(hi, c), f(c, lo) - f(c, hi))
    _record(report, "T3 monotonicity", d3 > tol, n,
            lambda i: {"lo": lo[i], "hi": hi[i], "c": c[i]}, d3)

    x = t.ravel()
    d4 = np.abs(f(x, np.zeros_like(x)) - x)
    _record(report, "T4 identity", d4 > tol, len(x),
            lambda i: {"a": x[i], "b": 0.0}, d4)

    gaps = continuity_gaps(star, a, b)
    _record(report, "T5 continuity (sampled)", continuity_violations(gaps, tol), n,
            lambda i: {"a": a[i], "b": b[i], "ladder": list(CONTINUITY_LADDER),
                       "gaps": gaps[i]})

    d6 = np.maximum(a, b) - f(a, b)
    _record(report, "lower bound max", d6 > tol, n,
            lambda i: {"a": a[i], "b": b[i]}, d6)
    return report


def replay_tdefiner_witness(star: TDefiner, check: LawCheck,
                            cfg: ToleranceConfig = DEFAULT_TOLERANCES) -> bool:
    """Re-evaluate a failed check's witness; True when it still fails."""
    w = check.witness or {}
    f = star.apply
    tol = cfg.abs_tol
    law = check.law
    if law.startswith("T1"):
        return abs(f(w["a"], w["b"]) - f(w["b"], w["a"])) > tol
    if law.startswith("T2"):
        a, b, c = w["a"], w["b"], w["c"]
        return abs(f(a, f(b, c)) - f(f(a, b), c)) > tol
    if law.startswith("T3"):
        lo, hi, c = w["lo"], w["hi"], w["c"]
        return max(f(lo, c) - f(hi, c), f(c, lo) - f(c, hi)) > tol
    if law.startswith("T4"):
        return abs(f(w["a"], 0.0) - w["a"]) > tol
    if law.startswith("T5"):
        gaps = continuity_gaps(star, np.array([w["a"]]), np.array([w["b"]]))
        return bool(continuity_violations(gaps, tol)[0])
    if law == "lower bound max":
        return max(w["a"], w["b"]) - f(w["a"], w["b"]) > tol
    raise UsageError(f"no replay rule for law {law!r}")


# --- residuum laws ------------------------------------------------------------

MINIMALITY_PROBES = (0.0, 0.5, 0.9)


def check_residuum_laws(star: TDefiner, samples, cfg: ToleranceConfig = DEFAULT_TOLERANCES,
                        numeric: bool = False, tol: float | None = None) -> LawReport:
    """Check the residuum lemma, the residuation property and residuum monotonicity.

    ``numeric=True`` runs every law against the bisection residuum instead of
    the closed form. Clause 5 is checked in the form
    ``a -o b >= (b -o c) -o (a -o c)``, which is what follows from clause 4 and
    residuation (and is the instance clause 6 relies on).
    """
    t = _nonneg(samples, "samples").reshape(-1, 3)
    if t.shape[0] == 0:
        raise UsageError("check_residuum_laws needs at least one sample triple")
    if tol is None:
        tol = cfg.abs_tol
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    n = len(t)
    f = star.apply
    if numeric:
        def r(x, y):
            return bisect_residuum(star, x, y, cfg)
    else:
        def r(x, y):
            return residuum_unchecked(star, x, y, cfg)

    report = LawReport(f"residuum:{star.name}:{'numeric' if numeric else 'closed'}",
                       tolerances={"tol": tol}, counters={"triples": n})

    def abc(i):
        return {"a": a[i], "b": b[i], "c": c[i]}

    r_ab = r(a, b)
    attained = b - f(r_ab, a)
    minimal_bad = np.zeros(n, bool)
    for frac in MINIMALITY_PROBES:
        probe = frac * r_ab
        minimal_bad |= (r_ab > 0) & (f(probe, a) >= b)
    _record(report, "clause 1 minimum", (attained > tol) | minimal_bad, n, abc,
            np.maximum(attained, 0.0))

    d2 = np.abs(r(np.zeros_like(a), a) - a)
    _record(report, "clause 2 zero residuum", d2 > tol, n, lambda i: {"a": a[i]}, d2)

    zero = r_ab == 0
    bad3 = ((a >= b) & ~zero) | (zero & (a < b - tol))
    _record(report, "clause 3 zero iff a >= b", bad3, n, abc, r_ab)

    d4 = np.abs(f(a, r_ab) - np.maximum(a, b))
    _record(report, "clause 4 a*(a-ob) = max", d4 > tol, n, abc, d4)

    r_ac, r_cb, r_bc = r(a, c), r(c, b), r(b, c)
    d5 = r(r_bc, r_ac) - r_ab
    _record(report, "clause 5 a-ob >= (b-oc)-o(a-oc)", d5 > tol, n, abc, d5)

    d6 = r_ab - f(r_ac, r_cb)
    _record(report, "clause 6 a-ob <= (a-oc)*(c-ob)", d6 > tol, n, abc, d6)

    # residuation: c*a >= b  <=>  c >= a-ob, with the band |c - a-ob| <= tol exempt
    probes = np.concatenate([c, np.maximum(r_ab - 2 * tol, 0.0), r_ab + 2 * tol])
    aa, bb, rr = np.tile(a, 3), np.tile(b, 3), np.tile(r_ab, 3)
    holds = f(probes, aa) >= bb
    bad_fwd = holds & (probes < rr - tol)
    bad_bwd = ~holds & (probes >= rr + tol)
    _record(report, "residuation", bad_fwd | bad_bwd, len(probes),
            lambda i: {"a": aa[i], "b": bb[i], "c": probes[i], "residuum": rr[i]})

    lo_a, hi_a = np.minimum(a, c), np.maximum(a, c)
    d_a = r(hi_a, b) - r(lo_a, b)
    lo_b, hi_b = np.minimum(b, c), np.maximum(b, c)
    d_b = r(a, lo_b) - r(a, hi_b)
    _record(report, "monotone: nonincreasing in a", d_a > tol, n,
            lambda i: {"a_lo": lo_a[i], "a_hi": hi_a[i], "b": b[i]}, d_a)
    _record(report, "monotone: nondecreasing in b", d_b > tol, n,
            lambda i: {"a": a[i], "b_lo": lo_b[i], "b_hi": hi_b[i]}, d_b)
    return report
