"""Sphere-packing, random-coding and expurgated rate-reliability functions.

For an input distribution ``P`` and reliability ``E`` (bits):

* sphere packing:  ``R_sp(P,E) = min { I(P,V) : D(V||W|P) <= E }``
* random coding:   ``R_r(P,E)  = min { |I(P,V) + D(V||W|P) - E|^+ : D(V||W|P) <= E }``
* expurgated:      ``R_x(P,E)  = min_Vbar { I(P,Vbar) + |E_{P,Vbar} d_B - E|^+ }``
  over square row-stochastic ``Vbar`` with ``P Vbar = P``.

The sphere-packing problem is scalarized with a multiplier ``lam >= 0``.
For fixed ``lam`` the minimizer of ``I + lam*D`` is found by alternating
between the output marginal ``q`` and the tilted channel
``V(y|x) ~ q(y)**(1-s) W(y|x)**s`` with ``s = lam/(1+lam)``; ``s`` is then
tuned so that the divergence constraint is tight.  The returned rate is the
dual value ``I + lam*(D - E)``, which is insensitive to small errors in ``s``.

The expurgated problem is an entropic transport problem over couplings of
``P`` with itself; for fixed multiplier the optimal coupling is a Sinkhorn
scaling of ``P(x)P(x') 2**(-rho d_B(x,x'))``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import CapabilityError, RangeError, SolverError, ValidationError
from .prob_core import (
    Distribution,
    _cond_divergence,
    _mutual_information,
    _rel,
    as_channel,
    as_distribution,
    bhattacharyya_matrix,
    channel_digest,
)

MAX_OUTER_ALPHABET = 16
THREADS_ENV = "ECAPACITY_THREADS"


class ExponentKind(str, Enum):
    SPHERE_PACKING = "sp"
    RANDOM_CODING = "rc"
    EXPURGATED = "ex"


@dataclass(frozen=True)
class SolverConfig:
    inner_tolerance: float = 1e-10
    # initial bracket for the multiplier lam; the upper end is grown if needed
    multiplier_bracket: tuple[float, float] = (0.0, 1e3)
    max_iterations: int = 10_000
    outer_grid_step: float = 0.01
    multistart_count: int = 16
    oracle_grid_step: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.inner_tolerance <= 0 or self.outer_grid_step <= 0 or self.oracle_grid_step <= 0:
            raise ValidationError("tolerances and grid steps must be positive")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be at least 1")
        lo, hi = self.multiplier_bracket
        if not 0 <= lo < hi:
            raise ValidationError("multiplier_bracket must satisfy 0 <= lo < hi")
        if self.multistart_count < 0:
            raise ValidationError("multistart_count must be nonnegative")


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class ExponentCurve:
    """Sampled ``(E, R)`` curve of one bound function."""

    kind: ExponentKind
    points: tuple[tuple[float, float], ...]
    per_point_optimal_P: Optional[tuple[Distribution, ...]] = None
    channel_digest: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kind", ExponentKind(self.kind))
        pts = tuple((float(e), float(r)) for e, r in self.points)
        object.__setattr__(self, "points", pts)
        if not pts:
            raise ValidationError("curve needs at least one point")
        E = np.array([e for e, _ in pts])
        R = np.array([r for _, r in pts])
        if np.any(np.diff(E) <= 0):
            raise ValidationError("curve E values must be strictly increasing")
        if np.any(R < 0):
            raise ValidationError("curve R values must be nonnegative")
        if np.any(np.diff(R) > 1e-9):
            i = int(np.argmax(np.diff(R) > 1e-9))
            raise ValidationError(f"curve R increases between points {i} and {i + 1}")
        if self.per_point_optimal_P is not None and len(self.per_point_optimal_P) != len(pts):
            raise ValidationError("per_point_optimal_P must match the number of points")

    @property
    def E(self) -> np.ndarray:
        return np.array([e for e, _ in self.points])

    @property
    def R(self) -> np.ndarray:
        return np.array([r for _, r in self.points])

    def interpolate(self, E: float) -> float:
        """Piecewise-linear value at ``E``; an upper bound between nodes of a convex curve."""
        Es = self.E
        if E < Es[0] - 1e-15 or E > Es[-1] + 1e-15:
            raise RangeError(f"E={E!r} outside sampled range [{Es[0]!r}, {Es[-1]!r}]")
        return float(np.interp(E, Es, self.R))


# ---------------------------------------------------------------------------
# sphere packing


def _support(p: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = p > 0
    return p[m], w[m]


def zero_rate_reliability(P, W) -> float:
    """Smallest ``D(V||W|P)`` over channels with identical rows.

    This is where ``R_sp(P, E)`` reaches 0.  The minimizing output law is
    the normalized geometric mean ``prod_x W(y|x)**P(x)``; ``inf`` when no
    output letter is reachable from every input in the support of ``P``.
    """
    p, w = _support(as_distribution(P), as_channel(W))
    return _zero_rate(p, w)


def _zero_rate(p: np.ndarray, w: np.ndarray) -> float:
    with np.errstate(divide="ignore"):
        logs = np.log2(w)
    geo = np.exp2(p @ np.where(w > 0, logs, -np.inf))
    total = float(geo.sum())
    if total <= 0.0:
        return math.inf
    return max(-math.log2(total), 0.0)


def _max_divergence(p: np.ndarray, w: np.ndarray) -> float:
    """Largest ``D(V||W|P)`` over ``V`` absolutely continuous w.r.t. ``W``."""
    worst = np.array([-math.log2(row[row > 0].min()) for row in w])
    return float(p @ worst)


def _tilted(p, w, s, q0, tol, max_iter):
    """Alternating minimization of ``I + lam*D`` at ``s = lam/(1+lam)``.

    For fixed ``q`` the optimal rows are ``V(.|x) ~ q**(1-s) W(.|x)**s``; the
    map ``q -> P V`` is iterated to its fixed point, which maximizes the
    concave ``G(q) = sum_x P(x) log sum_y q**(1-s) W**s``.  Plain iteration
    crawls on nearly useless channels, so steps are extrapolated (SQUAREM)
    and an extrapolation is kept only if it does not decrease ``G``.

    Returns the tilted channel and its output marginal.
    """
    ws = (w > 0).astype(float) if s == 0.0 else w**s
    a = 1.0 - s

    def step(q):
        v = q**a * ws
        v /= v.sum(axis=1, keepdims=True)
        return v, p @ v

    def objective(q):
        with np.errstate(divide="ignore"):
            return float(p @ np.log((q**a * ws).sum(axis=1)))

    q = q0
    for _ in range(max_iter):
        v, q1 = step(q)
        r = q1 - q
        if np.max(np.abs(r)) < tol:
            return step(q1)
        _, q2 = step(q1)
        d = q2 - q1 - r
        nd = float(np.sqrt(d @ d))
        if nd > 0.0:
            alpha = min(-float(np.sqrt(r @ r)) / nd, -1.0)
            qx = np.clip(q - 2 * alpha * r + alpha**2 * d, 0.0, None)
            if qx.sum() > 0:
                _, qx = step(qx / qx.sum())
                if objective(qx) >= objective(q2):
                    q = qx
                    continue
        q = q2
    raise SolverError(
        f"tilted-channel iteration did not converge in {max_iter} steps (s={s!r})", best=(v, q)
    )


class _SpProblem:
    """Sphere-packing instance on the support of ``P``, with warm starts."""

    def __init__(self, p, w, cfg: SolverConfig):
        self.p, self.w, self.cfg = p, w, cfg
        self.q = p @ w
        self.E0 = _zero_rate(p, w)

    def solve_at(self, s: float):
        v, q = _tilted(self.p, self.w, s, self.q, self.cfg.inner_tolerance, self.cfg.max_iterations)
        self.q = q
        return v, _mutual_information(self.p, v), _cond_divergence(self.p, v, self.w)

    def rate(self, E: float, s_min: float = 0.0) -> float:
        """``R_sp`` at ``E`` with the multiplier restricted to ``s >= s_min``."""
        p, w = self.p, self.w
        if E == 0.0:
            return _mutual_information(p, w)
        if E >= self.E0:
            return 0.0
        s_lo = s_min
        lam_lo = self.cfg.multiplier_bracket[0]
        if s_lo == 0.0 and lam_lo > 0.0:
            # configured lower bracket; drop back to 0 if it is already feasible
            s_try = lam_lo / (1.0 + lam_lo)
            if self.solve_at(s_try)[2] > E:
                s_lo = s_try
        if s_lo == 0.0 and math.isinf(self.E0):
            _, i0, d0 = self.solve_at(0.0)
            if d0 <= E:
                return i0
        elif s_lo > 0.0 and s_lo == s_min:
            _, i_lo, d_lo = self.solve_at(s_lo)
            if d_lo <= E:
                lam = s_lo / (1.0 - s_lo)
                return max(i_lo + lam * (d_lo - E), 0.0)
        lam_hi = self.cfg.multiplier_bracket[1]
        while True:
            s_hi = lam_hi / (1.0 + lam_hi)
            if s_hi >= 1.0:
                s_hi = 1.0
                break
            if s_hi > s_lo and self.solve_at(s_hi)[2] < E:
                break
            lam_hi *= 10.0

        def gap(s):
            if s == 0.0 and not math.isinf(self.E0):
                return self.E0 - E
            if s == 1.0:
                return -E
            return self.solve_at(s)[2] - E

        s = brentq(gap, s_lo, s_hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
        if s >= 1.0:
            return _mutual_information(p, w)
        v, i_v, d_v = self.solve_at(s)
        lam = s / (1.0 - s)
        # V = W is always feasible, so I(P,W) caps the value; near E = 0 the
        # multiplier is huge and amplifies the residual in D - E
        return min(max(i_v + lam * (d_v - E), 0.0), _mutual_information(p, w))


def _prepare(P, W, E) -> tuple[np.ndarray, np.ndarray]:
    p, w = as_distribution(P), as_channel(W)
    if p.size != w.shape[0]:
        raise ValidationError(f"distribution has {p.size} letters but channel has {w.shape[0]} rows")
    if not E >= 0:
        raise ValidationError(f"reliability must be nonnegative, got {E!r}")
    return _support(p, w)


def sphere_packing_exponent(P, E: float, W, cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """``min I(P,V)`` subject to ``D(V||W|P) <= E``."""
    p, w = _prepare(P, W, E)
    return _SpProblem(p, w, cfg).rate(float(E))


def tilted_solution(P, W, s: float, cfg: SolverConfig = DEFAULT_CONFIG):
    """Optimal test channel for multiplier ``s/(1-s)``.

    Returns ``(V, E, R)`` with ``V`` restricted to the support of ``P``.
    The point ``(E, R)`` lies on the sphere-packing curve where its slope
    equals ``-s/(1-s)``; ``s = 1/2`` therefore marks the critical reliability.
    """
    if not 0.0 <= s <= 1.0:
        raise ValidationError("s must lie in [0, 1]")
    p, w = _prepare(P, W, 0.0)
    v, i_v, d_v = _SpProblem(p, w, cfg).solve_at(s)
    return v, d_v, i_v


# ---------------------------------------------------------------------------
# random coding


def random_coding_exponent(P, E: float, W, cfg: SolverConfig = DEFAULT_CONFIG,
                           method: str = "direct") -> float:
    """``min |I + D - E|^+`` over ``V`` with ``D(V||W|P) <= E``.

    ``method="direct"`` minimizes the clamped objective itself: the free
    minimizer of ``I + D`` sits at multiplier 1, and if it violates the
    constraint the optimum lies on ``D = E`` with multiplier above 1.
    ``method="transform"`` instead minimizes ``R_sp(E') + E' - E`` over
    ``E' <= E`` with a scalar search.
    """
    p, w = _prepare(P, W, E)
    E = float(E)
    prob = _SpProblem(p, w, cfg)
    if method == "direct":
        if E == 0.0:
            return _mutual_information(p, w)
        _, i_half, d_half = prob.solve_at(0.5)
        if d_half <= E:
            return max(i_half + d_half - E, 0.0)
        return prob.rate(E, s_min=0.5)
    if method == "transform":
        if E == 0.0:
            return prob.rate(0.0)

        def g(e):
            return prob.rate(e) + e

        res = minimize_scalar(g, bounds=(0.0, E), method="bounded", options={"xatol": 1e-9})
        best = min(float(res.fun), g(E), g(0.0))
        return max(best - E, 0.0)
    raise ValidationError(f"unknown method {method!r}")


def rr_from_sp_transform(sp: ExponentCurve, E: float) -> float:
    """Random-coding rate from a sampled sphere-packing curve.

    Computes ``min_{E' <= E} |R_sp(E') + E' - E|^+`` on the piecewise-linear
    interpolant; the minimum of a piecewise-linear function is at a node or
    at ``E`` itself.
    """
    if sp.kind is not ExponentKind.SPHERE_PACKING:
        raise ValidationError("transform needs a sphere-packing curve")
    Es, Rs = sp.E, sp.R
    if Es[0] > 1e-15:
        raise RangeError("sphere-packing curve must start at E = 0")
    at_E = sp.interpolate(E)
    m = Es <= E
    best = min(float(np.min(Rs[m] + Es[m])), at_E + E)
    return max(best - E, 0.0)


# ---------------------------------------------------------------------------
# expurgated


def _sinkhorn(kernel, p, tol, max_iter):
    a = np.ones_like(p)
    b = np.ones_like(p)
    for _ in range(max_iter):
        a = p / (kernel @ b)
        b = p / (kernel.T @ a)
        J = a[:, None] * kernel * b[None, :]
        if np.max(np.abs(J.sum(axis=1) - p)) < tol:
            return J
    raise SolverError(f"Sinkhorn scaling did not converge in {max_iter} steps", best=J)


class _ExProblem:
    def __init__(self, p, w, cfg: SolverConfig):
        self.p, self.cfg = p, cfg
        self.d = np.asarray(bhattacharyya_matrix(w))
        self.finite = np.isfinite(self.d)
        self.pp = np.outer(p, p)
        self.dz = np.where(self.finite, self.d, 0.0)

    def coupling(self, rho: float):
        if rho == 0.0 and self.finite.all():
            J = self.pp  # the independent coupling, exactly
            return J, 0.0, float((J * self.dz).sum())
        if rho == 0.0:
            kernel = self.pp * self.finite
        else:
            kernel = np.where(self.finite, self.pp * np.exp2(-rho * self.dz), 0.0)
        J = _sinkhorn(kernel, self.p, self.cfg.inner_tolerance * 1e-2, self.cfg.max_iterations * 10)
        info = max(float(_rel(J, self.pp).sum()), 0.0)
        avg = float((J * self.dz).sum())
        return J, info, avg

    def rate(self, E: float) -> float:
        _, i0, a0 = self.coupling(0.0)
        if E >= a0:
            return i0
        _, i1, a1 = self.coupling(1.0)
        if E <= a1:
            return max(i1 + a1 - E, 0.0)
        rho = brentq(lambda r: self.coupling(r)[2] - E, 0.0, 1.0, xtol=1e-14, maxiter=200)
        _, i_r, a_r = self.coupling(rho)
        return max(i_r + rho * (a_r - E), 0.0)


def expurgated_exponent(P, E: float, W, cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """``min I(P,Vbar) + |E_{P,Vbar} d_B - E|^+`` over ``Vbar`` with ``P Vbar = P``.

    Pairs of inputs at infinite Bhattacharyya distance are excluded from
    the coupling (they would make the objective infinite).
    """
    p, w = _prepare(P, W, E)
    return _ExProblem(p, w, cfg).rate(float(E))


# ---------------------------------------------------------------------------
# capacity and outer maximization


def _blahut_arimoto(w: np.ndarray, tol: float, max_iter: int):
    p = np.full(w.shape[0], 1.0 / w.shape[0])
    for it in range(1, max_iter + 1):
        q = p @ w
        dx = _rel(w, q[None, :]).sum(axis=1)
        c = np.exp2(dx)
        gap = float(dx.max()) - math.log2(float(p @ c))
        if gap < tol:
            return p, it, max(gap, 0.0)
        p = p * c
        p /= p.sum()
    raise SolverError("Blahut-Arimoto did not converge", best=p)


def capacity_blahut_arimoto(W, tol: float = 1e-12, max_iter: int = 1_000_000):
    """Capacity in bits and a capacity-achieving input distribution.

    Stops when the standard upper bound ``max_x D(W_x || PW)`` and lower
    bound ``log2 sum_x P(x) 2**D(W_x || PW)`` are within ``tol``.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    w = as_channel(W)
    p, _, _ = _blahut_arimoto(w, tol, max_iter)
    return _mutual_information(p, w), Distribution(p)


def _dirichlet_starts(k: int, count: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [rng.dirichlet(np.ones(k)) for _ in range(count)]


def maximize_over_inputs(curve_fn: Callable[[np.ndarray, float], float], E: float, W,
                         cfg: SolverConfig = DEFAULT_CONFIG,
                         starts: Sequence = ()) -> tuple[float, Distribution]:
    """Maximize ``curve_fn(P, E)`` over the input simplex.

    Binary inputs use a grid scan at ``cfg.outer_grid_step`` refined by a
    bounded scalar search.  Larger alphabets run pairwise coordinate ascent
    (mass moved between two letters per line search) from the three best of
    the uniform, capacity-achieving, caller-supplied and Dirichlet starts.
    """
    w = as_channel(W)
    k = w.shape[0]
    if k > MAX_OUTER_ALPHABET:
        raise CapabilityError(f"input alphabet of size {k} exceeds {MAX_OUTER_ALPHABET}")
    if k == 1:
        p = np.ones(1)
        return float(curve_fn(p, E)), Distribution(p)

    _, p_cap = capacity_blahut_arimoto(w, tol=1e-9)
    if k == 2:
        return _maximize_binary(curve_fn, E, cfg, [p_cap.probs, *map(as_distribution, starts)])

    cands = [np.full(k, 1.0 / k), p_cap.probs, *map(as_distribution, starts)]
    cands += _dirichlet_starts(k, cfg.multistart_count, cfg.seed)
    scored = sorted(((float(curve_fn(c, E)), i, c) for i, c in enumerate(cands)),
                    key=lambda t: (-t[0], t[1]))
    best_val, best_p = -math.inf, None
    for val, _, c in scored[:3]:
        val, c = _coordinate_ascent(curve_fn, E, c, val)
        if val > best_val:
            best_val, best_p = val, c
    return best_val, Distribution(best_p)


def _maximize_binary(curve_fn, E, cfg, extra):
    def f(t):
        return float(curve_fn(np.array([t, 1.0 - t]), E))

    step = cfg.outer_grid_step
    grid = sorted(set(np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1).tolist()
                      + [0.5] + [float(e[0]) for e in extra]))
    vals = [f(t) for t in grid]
    i = int(np.argmax(vals))
    best_t, best_v = grid[i], vals[i]
    lo, hi = max(grid[i] - step, 0.0), min(grid[i] + step, 1.0)
    res = minimize_scalar(lambda t: -f(t), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    if -res.fun > best_v:
        best_t, best_v = float(res.x), float(-res.fun)
    return best_v, Distribution([best_t, 1.0 - best_t])


def _coordinate_ascent(curve_fn, E, p, val, sweeps: int = 50, tol: float = 1e-12):
    k = p.size
    p = p.copy()
    for _ in range(sweeps):
        start = val
        for i in range(k):
            for j in range(i + 1, k):
                lo, hi = -p[i], p[j]
                if hi - lo < 1e-14:
                    continue
                direction = np.zeros(k)
                direction[i], direction[j] = 1.0, -1.0

                def point(t):
                    return np.clip(p + t * direction, 0.0, None)

                res = minimize_scalar(lambda t: -float(curve_fn(point(t) / point(t).sum(), E)),
                                      bounds=(lo, hi), method="bounded", options={"xatol": 1e-9})
                if -res.fun > val:
                    q = point(float(res.x))
                    p, val = q / q.sum(), float(-res.fun)
        if val - start <= tol:
            break
    return val, p


# ---------------------------------------------------------------------------
# critical reliability and curves


def critical_reliability(P, W, cfg: SolverConfig = DEFAULT_CONFIG, h: float = 1e-5) -> float:
    """Smallest ``E`` where the slope of ``E -> R_sp(P,E)`` reaches -1.

    Slopes are central differences with step ``h`` (one-sided near 0).  A
    coarse scan finds the first sign change of ``slope + 1`` and a root
    finder refines it.
    """
    p, w = _prepare(P, W, 0.0)
    prob = _SpProblem(p, w, cfg)
    e_hi = prob.E0 if math.isfinite(prob.E0) else _max_divergence(p, w)
    if e_hi <= 0.0:
        return 0.0

    def slope(e):
        if e < h:
            return (prob.rate(e + h) - prob.rate(e)) / h
        return (prob.rate(e + h) - prob.rate(e - h)) / (2 * h)

    if slope(0.0) >= -1.0:
        return 0.0
    grid = np.linspace(0.0, e_hi, 17)
    prev = 0.0
    for e in grid[1:]:
        if slope(e) >= -1.0:
            return float(brentq(lambda x: slope(x) + 1.0, prev, e, xtol=1e-10))
        prev = e
    return float(e_hi)


def default_grid_end(W, cfg: SolverConfig = DEFAULT_CONFIG) -> float:
    """Zero-rate reliability at the capacity-achieving input (upper grid end)."""
    w = as_channel(W)
    _, p_cap = capacity_blahut_arimoto(w, tol=1e-12)
    p, ws = _support(p_cap.probs, w)
    e0 = _zero_rate(p, ws)
    if math.isfinite(e0) and e0 > 0.0:
        return e0
    # infinite (disjoint rows) or zero (useless channel): span the divergence range
    dmax = _max_divergence(p, ws)
    return dmax if dmax > 0.0 else 1.0


def point_solver(kind: ExponentKind, W, cfg: SolverConfig = DEFAULT_CONFIG) -> Callable:
    """``(P, E) -> rate`` for the given bound, without per-call validation of ``W``."""
    kind = ExponentKind(kind)
    w = as_channel(W)

    def fn(p, E):
        p = np.asarray(p, dtype=float)
        ps, ws = _support(p, w)
        if kind is ExponentKind.SPHERE_PACKING:
            return _SpProblem(ps, ws, cfg).rate(float(E))
        if kind is ExponentKind.RANDOM_CODING:
            return random_coding_exponent(p, E, w, cfg)
        return _ExProblem(ps, ws, cfg).rate(float(E))

    return fn


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def exponent_curve(kind, W, E_grid: Sequence[float], cfg: SolverConfig = DEFAULT_CONFIG,
                   P=None) -> ExponentCurve:
    """Sample a bound function on ``E_grid``.

    With ``P`` given the curve is for that input distribution; otherwise each
    point is maximized over inputs.  Grid points are independent and may be
    evaluated on ``ECAPACITY_THREADS`` worker threads; results are merged by
    index.  After the sweep, any point that falls below its right neighbour
    is re-optimized from the neighbour's maximizer.
    """
    kind = ExponentKind(kind)
    w = as_channel(W)
    grid = [float(e) for e in E_grid]
    if not grid or any(e < 0 for e in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValidationError("E grid must be nonempty, nonnegative and strictly increasing")
    fn = point_solver(kind, w, cfg)
    fixed = None if P is None else as_distribution(P)
    if fixed is not None and fixed.size != w.shape[0]:
        raise ValidationError("P does not match the channel input alphabet")

    def one(idx):
        try:
            if fixed is not None:
                return float(fn(fixed, grid[idx])), Distribution(fixed)
            return maximize_over_inputs(fn, grid[idx], w, cfg)
        except (SolverError, CapabilityError) as exc:
            exc.args = (f"grid index {idx} (E={grid[idx]!r}): {exc.args[0]}",) + exc.args[1:]
            raise

    n = _threads()
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(one, range(len(grid))))
    else:
        results = [one(i) for i in range(len(grid))]
    vals = [r for r, _ in results]
    ps = [q for _, q in results]
    if fixed is None:
        for i in range(len(grid) - 2, -1, -1):
            if vals[i] < vals[i + 1]:
                v, q = maximize_over_inputs(fn, grid[i], w, cfg, starts=[ps[i + 1]])
                if v > vals[i]:
                    vals[i], ps[i] = v, q
                vals[i] = max(vals[i], vals[i + 1])
    return ExponentCurve(
        kind=kind,
        points=tuple(zip(grid, vals)),
        per_point_optimal_P=tuple(ps),
        channel_digest=channel_digest(w),
        metadata={
            "interpolation": "linear; upper bound on the convex sphere-packing curve between nodes",
            "maximized_over_inputs": fixed is None,
        },
    )


# ---------------------------------------------------------------------------
# brute-force oracle (tests only)


def brute_force_exponent_oracle(kind, P, E: float, W, step: float) -> float:
    """Exhaustive grid scan of the feasible set; independent of the solvers.

    Sphere packing and random coding need ``|X|, |Y| <= 2`` (at most two free
    parameters, with the true channel's entries added to the grid).
    Expurgated needs ``|X| <= 2``: couplings of ``P`` with itself form a
    segment parametrized by the off-diagonal mass.
    """
    kind = ExponentKind(kind)
    p, w = as_distribution(P), as_channel(W)
    if not E >= 0 or step <= 0:
        raise ValidationError("need E >= 0 and step > 0")
    if kind is ExponentKind.EXPURGATED:
        return _brute_expurgated(p, w, E, step)
    if w.shape[0] > 2 or w.shape[1] > 2:
        raise CapabilityError("grid oracle supports at most 2 inputs and 2 outputs")
    base = np.arange(0.0, 1.0 + step / 2, step)
    base = base[base <= 1.0]
    axes = []
    for x in range(w.shape[0]):
        if w.shape[1] == 1:
            axes.append(np.array([0.0]))
        else:
            axes.append(np.unique(np.concatenate([base, [w[x, 1]]])))
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = [m.ravel() for m in mesh]
    n = flat[0].size
    ky = w.shape[1]
    V = np.empty((n, w.shape[0], ky))
    for x, a in enumerate(flat):
        if ky == 1:
            V[:, x, 0] = 1.0
        else:
            V[:, x, 0] = 1.0 - a
            V[:, x, 1] = a
    q = np.einsum("x,nxy->ny", p, V)
    info = np.einsum("x,nxy->n", p, _rel(V, q[:, None, :]))
    div = np.einsum("x,nxy->n", p, _rel(V, w[None, :, :]))
    feas = div <= E
    if kind is ExponentKind.SPHERE_PACKING:
        return max(float(info[feas].min()), 0.0)
    return float(np.maximum(info + div - E, 0.0)[feas].min())


def _brute_expurgated(p, w, E, step):
    d = np.asarray(bhattacharyya_matrix(w))
    if p.size == 1:
        return 0.0
    if p.size != 2:
        raise CapabilityError("expurgated grid oracle supports exactly 2 inputs")
    tmax = float(min(p))
    t = np.unique(np.concatenate([np.arange(0.0, tmax, step), [tmax, p[0] * p[1]]]))
    J = np.empty((t.size, 2, 2))
    J[:, 0, 0] = p[0] - t
    J[:, 0, 1] = t
    J[:, 1, 0] = t
    J[:, 1, 1] = p[1] - t
    J = np.clip(J, 0.0, None)
    info = _rel(J, np.outer(p, p)[None]).sum(axis=(1, 2))
    with np.errstate(invalid="ignore"):
        avg = np.where(J > 0, J * d[None], 0.0).sum(axis=(1, 2))
    obj = info + np.maximum(avg - E, 0.0)
    return max(float(np.nanmin(obj)), 0.0)
