"""Channel capacity and rate-distortion function by alternating minimization.

Both solvers are Blahut-Arimoto iterations that carry a certificate: the
capacity loop stops when its upper and lower bounds on ``max I(X;Y)`` meet, the
rate-distortion solver brackets ``R(D)`` between an achieving test channel and
the Lagrange-dual lower bound.

Internally the rate-distortion iteration works in nats with slope ``s <= 0``;
everything returned is in bits.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from cipher_region.info_core import (
    Channel,
    DimensionMismatch,
    InvalidDistribution,
    Pmf,
    entropy,
)

LN2 = math.log(2.0)

MAX_ITER = 10_000
CAPACITY_TOL = 1e-7
RD_TOL = 1e-6

# slope limits, in units of the inverse smallest (floor) or largest (ceiling)
# positive row-shifted distortion
_S_FLOOR = -(2.0**20)
_S_CEIL = -(2.0**-30)
# iterations between Newton polishes, and the support cuts each polish tries
_POLISH_EVERY = 200
_POLISH_CUTS = (1e-12, 1e-6)


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted; ``result`` holds the best bounds reached."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class InfeasibleDistortion(ValueError):
    def __init__(self, target, d_min):
        super().__init__(
            f"distortion {target!r} is below the minimal feasible distortion D_min={d_min!r}"
        )
        self.target = target
        self.d_min = d_min


@dataclass(frozen=True, eq=False)
class DistortionMeasure:
    """Bounded single-letter distortion ``d(u, v)``; rows are source letters."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.size == 0:
            raise InvalidDistribution("distortion must be a non-empty 2-D matrix")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise InvalidDistribution("distortion entries must be finite and >= 0")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def d_max(self) -> float:
        return float(self.matrix.max())

    @property
    def source_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def reproduction_size(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def hamming(cls, k: int) -> DistortionMeasure:
        return cls(1.0 - np.eye(k))

    @classmethod
    def difference(cls, rho) -> DistortionMeasure:
        """``d(u, v) = rho[(v - u) mod k]`` on the cyclic group of order ``k = len(rho)``."""
        rho = np.asarray(rho, dtype=float)
        k = rho.size
        u = np.arange(k)
        return cls(rho[(u[None, :] - u[:, None]) % k])

    def difference_profile(self):
        """Return ``rho`` if this is a difference measure on Z_k, else ``None``."""
        k = self.source_size
        if self.reproduction_size != k:
            return None
        rho = self.matrix[0].copy()
        if np.array_equal(DistortionMeasure.difference(rho).matrix, self.matrix):
            return rho
        return None

    def expected(self, source: Pmf, test_channel: Channel) -> float:
        _check_rd_dims(source, self)
        if test_channel.matrix.shape != self.matrix.shape:
            raise DimensionMismatch("test channel shape differs from distortion matrix")
        return float(source.probs @ (test_channel.matrix * self.matrix).sum(axis=1))


@dataclass(frozen=True, eq=False)
class CapacityResult:
    capacity: float
    optimal_input: Pmf
    iterations: int
    gap: float
    lower: float
    upper: float
    lower_history: tuple = field(default=(), repr=False)


@dataclass(frozen=True, eq=False)
class RdPoint:
    """A point on R(D) with its achieving test channel.

    ``test_channel`` only keeps reproduction letters in the support of the
    output marginal; ``reproduction_symbols`` maps its columns back to the full
    reproduction alphabet. ``slope`` is dR/dD in bits per unit distortion.
    """

    distortion: float
    rate: float
    test_channel: Channel
    slope: float
    reproduction_symbols: tuple
    lower_bound: float

    def full_test_channel(self, reproduction_size: int) -> Channel:
        w = np.zeros((self.test_channel.input_size, reproduction_size))
        w[:, list(self.reproduction_symbols)] = self.test_channel.matrix
        return Channel(w)

    def output_marginal(self, source: Pmf, reproduction_size: int) -> Pmf:
        return Pmf(source.probs @ self.full_test_channel(reproduction_size).matrix)


def _check_rd_dims(source: Pmf, d: DistortionMeasure) -> None:
    if source.alphabet_size != d.source_size:
        raise DimensionMismatch(
            f"source has {source.alphabet_size} symbols, distortion matrix has {d.source_size} rows"
        )


def capacity(
    ch: Channel, tol: float = CAPACITY_TOL, max_iter: int = MAX_ITER
) -> CapacityResult:
    """Capacity of a DMC in bits per use, certified to within ``tol``.

    The reported value is the upper bound ``max_x D(W(.|x) || q)``; the lower
    bound ``log2 sum_x r(x) 2^{D(x)}`` is non-decreasing over iterations and is
    recorded in ``lower_history``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    w = ch.matrix
    pos = w > 0
    logw = np.zeros_like(w)
    logw[pos] = np.log2(w[pos])
    r = np.full(ch.input_size, 1.0 / ch.input_size)
    history = []
    lower = upper = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        q = r @ w
        logq = np.zeros_like(q)
        logq[q > 0] = np.log2(q[q > 0])
        div = np.where(pos, w * (logw - logq[None, :]), 0.0).sum(axis=1)
        top = div.max()
        weights = r * np.exp2(div - top)
        lower = top + math.log2(weights.sum())
        upper = float(top)
        history.append(lower)
        if upper - lower <= tol:
            break
        r = weights / weights.sum()
    result = CapacityResult(
        capacity=max(upper, 0.0),
        optimal_input=Pmf(r),
        iterations=it,
        gap=upper - lower,
        lower=max(lower, 0.0),
        upper=max(upper, 0.0),
        lower_history=tuple(history),
    )
    if upper - lower > tol:
        raise ConvergenceError(
            f"capacity did not converge in {max_iter} iterations "
            f"(bounds [{lower:.9g}, {upper:.9g}])",
            result,
        )
    return result


def min_distortion(source: Pmf, d: DistortionMeasure) -> float:
    """D_min: smallest achievable expected distortion."""
    _check_rd_dims(source, d)
    return float(source.probs @ d.matrix.min(axis=1))


def best_constant_reproduction(source: Pmf, d: DistortionMeasure) -> int:
    _check_rd_dims(source, d)
    return int(np.argmin(source.probs @ d.matrix))


def zero_rate_distortion(source: Pmf, d: DistortionMeasure) -> float:
    """D_max_zero: distortion of the best constant reproduction (R(D) = 0 from here on)."""
    _check_rd_dims(source, d)
    return float((source.probs @ d.matrix).min())


@dataclass
class _SlopeSolution:
    s: float
    distortion: float
    rate: float  # bits, I(U;V) of ``channel``
    dual: float  # bits, lower bound on min_Q I - s E d (s in nats scaled to bits)
    channel: np.ndarray  # full |U| x |V|
    q: np.ndarray

    def rate_lower_bound(self, target: float) -> float:
        return self.dual + self.s / LN2 * target


def _rate_bits(p: np.ndarray, w: np.ndarray) -> float:
    q = p @ w
    joint = p[:, None] * w
    pos = joint > 0
    ratio = np.ones_like(w)
    ratio[pos] = w[pos] / np.broadcast_to(q, w.shape)[pos]
    return max(float((joint[pos] * np.log2(ratio[pos])).sum()), 0.0)


def _newton_polish(p, kernel, q, cut, steps=30):
    """Newton ascent on ``sum p log(K q) - sum q`` over the support of ``q``.

    The maximizer over ``q >= 0`` is the fixed point of the slope iteration.
    Letters below ``cut`` times the largest mass start outside the support.
    Near-dependent kernel columns make the objective almost linear along some
    directions; those are followed uphill to the boundary, and the letter that
    reaches zero leaves the support.
    """
    if not np.all(np.isfinite(kernel)):
        return q
    keep = np.flatnonzero(q > cut * q.max())
    x = q[keep].copy()

    def objective(ks, x):
        return float(p @ np.log(ks @ x)) - x.sum()

    for _ in range(steps):
        ks = kernel[:, keep]
        z = ks @ x
        grad = (p / z) @ ks - 1.0
        if np.abs(grad).max() < 1e-15:
            break
        _, sv, vt = np.linalg.svd((ks.T * np.sqrt(p) / z).T, full_matrices=False)
        curv = sv**2
        flat = curv <= 1e-10 * curv.max()
        f0 = objective(ks, x)
        moved = False
        for v, lam in zip(vt[flat], curv[flat]):
            slope = float(grad @ v)
            if slope < 0:
                v, slope = -v, -slope
            if slope <= 0 or not np.any(v < 0):
                continue
            neg = v < 0
            ratios = -x[neg] / v[neg]
            t = float(ratios.min())
            if lam > 0 and slope / lam < t:
                continue
            y = x + t * v
            y[np.flatnonzero(neg)[np.argmin(ratios)]] = 0.0
            if objective(ks, np.maximum(y, 0.0)) >= f0:
                x, moved = np.maximum(y, 0.0), True
                break
        if not moved:
            # Newton step on the curved directions only
            inv = np.where(flat, 0.0, 1.0 / np.where(flat, 1.0, curv))
            delta = vt.T @ (inv * (vt @ grad))
            shrinking = delta < 0
            t = 1.0
            if np.any(x[shrinking] + delta[shrinking] <= 0):
                t = 0.999 * float(np.min(-x[shrinking] / delta[shrinking]))
            while t > 1e-12:
                y = x + t * delta
                if objective(ks, y) >= f0:
                    break
                t /= 2
            else:
                break
            x = y
        gone = (x <= 1e-12 * x.max()) & ((grad < 0) | (x == 0))
        if gone.any():
            keep, x = keep[~gone], x[~gone]
    out = np.zeros_like(q)
    out[keep] = x
    return out / out.sum()


def _solve_slope(p, dmat, s, q0, tol_nats, max_iter) -> _SlopeSolution:
    rowmin = dmat.min(axis=1)
    # per-row shift keeps the largest kernel entry of each row at 1
    kernel = np.exp(s * (dmat - rowmin[:, None]))
    q = q0.copy()
    tiny = np.finfo(float).tiny

    def step(q):
        z = np.maximum(kernel @ q, tiny)
        c = (p / z) @ kernel
        return z, c, np.log(np.maximum(c, tiny))

    z, c, logc = step(q)
    for it in range(max_iter):
        gap = logc.max() - float(q @ logc)
        if gap <= tol_nats:
            break
        if it % _POLISH_EVERY == _POLISH_EVERY - 1:
            # near-degenerate problems make the iteration crawl; a Newton
            # polish is kept only if it shrinks the duality gap
            best = None
            for cut in _POLISH_CUTS:
                cand = _newton_polish(p, kernel, q, cut)
                zc, cc, lc = step(cand)
                cgap = lc.max() - float(cand @ lc)
                if cgap < gap:
                    gap, best = cgap, (cand, zc, cc, lc)
            if best is not None:
                q, z, c, logc = best
                continue
        q = q * c
        q /= q.sum()
        z, c, logc = step(q)
    w = q[None, :] * kernel / z[:, None]
    distortion = float(p @ (w * dmat).sum(axis=1))
    dual_nats = -s * float(p @ rowmin) - float(p @ np.log(z)) - logc.max()
    return _SlopeSolution(
        s=s,
        distortion=distortion,
        rate=_rate_bits(p, w),
        dual=dual_nats / LN2,
        channel=w,
        q=q,
    )


def _zero_rate_solution(source: Pmf, d: DistortionMeasure) -> _SlopeSolution:
    v = best_constant_reproduction(source, d)
    w = np.zeros(d.matrix.shape)
    w[:, v] = 1.0
    q = np.zeros(d.reproduction_size)
    q[v] = 1.0
    return _SlopeSolution(
        s=0.0,
        distortion=zero_rate_distortion(source, d),
        rate=0.0,
        dual=0.0,
        channel=w,
        q=q,
    )


def _to_point(p, dmat, w, rate, slope, lower) -> RdPoint:
    support = np.flatnonzero(p @ w > 0)
    pruned = w[:, support]
    return RdPoint(
        distortion=float(p @ (w * dmat).sum(axis=1)),
        rate=rate,
        test_channel=Channel(pruned),
        slope=slope,
        reproduction_symbols=tuple(int(i) for i in support),
        lower_bound=lower,
    )


def rate_distortion(
    source: Pmf,
    d: DistortionMeasure,
    target_D: float,
    tol: float = RD_TOL,
    max_iter: int = MAX_ITER,
) -> RdPoint:
    """R(target_D) in bits per source symbol.

    Bisects the Lagrange slope until the achieving side (a mixture of the two
    bracketing test channels, which meets ``target_D`` exactly) and the dual
    lower bound are within ``tol``. On a linear stretch of the curve the
    mixture is exactly the convex combination of the endpoints.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    _check_rd_dims(source, d)
    p = source.probs
    dmat = d.matrix
    d_min = min_distortion(source, d)
    d_zero = zero_rate_distortion(source, d)
    scale = max(d.d_max, 1.0)
    if target_D < d_min - 1e-12 * scale:
        raise InfeasibleDistortion(target_D, d_min)
    if target_D >= d_zero:
        z = _zero_rate_solution(source, d)
        return _to_point(p, dmat, z.channel, 0.0, 0.0, 0.0)

    shifted = dmat - dmat.min(axis=1)[:, None]
    gaps = shifted[shifted > 0]
    # subnormal gaps would push the floor to -inf; they stay unresolved
    s_floor = _S_FLOOR / max(gaps.min(), 1e-290)
    s_ceil = _S_CEIL / gaps.max()
    inner_tol = tol * LN2 / 8
    k = d.reproduction_size
    uniform = np.full(k, 1.0 / k)
    warm = uniform

    def solve(s):
        nonlocal warm
        sol = _solve_slope(p, dmat, s, 0.99 * warm + 0.01 * uniform, inner_tol, max_iter)
        warm = sol.q
        return sol

    if target_D <= d_min + 1e-15 * scale:
        sol = solve(s_floor)
        return _to_point(p, dmat, sol.channel, sol.rate, sol.s / LN2, sol.dual + sol.s / LN2 * target_D)

    lo = hi = None
    s0 = -1.0 / gaps.max()
    first = solve(s0)
    if first.distortion <= target_D:
        lo = first
        s = s0
        while hi is None:
            s /= 2
            if s > s_ceil:
                hi = _zero_rate_solution(source, d)
                break
            sol = solve(s)
            if sol.distortion >= target_D:
                hi = sol
            else:
                lo = sol
    else:
        hi = first
        s = s0
        while lo is None:
            s *= 2
            sol = solve(s)
            if sol.distortion <= target_D or s <= s_floor:
                lo = sol
            else:
                hi = sol

    duals = [lo, hi]
    for _ in range(200):
        point, upper = _mix(p, dmat, lo, hi, target_D)
        lower = max(x.rate_lower_bound(target_D) for x in duals)
        if upper - lower <= tol or hi.s - lo.s <= 1e-13 * abs(lo.s):
            break
        sol = solve(0.5 * (lo.s + hi.s))
        duals.append(sol)
        if sol.distortion <= target_D:
            lo = sol
        else:
            hi = sol
    if upper - lower > tol:
        warnings.warn(
            f"R({target_D!r}) certified only to [{lower:.9g}, {upper:.9g}]",
            RuntimeWarning,
            stacklevel=2,
        )
    slope = _chord_slope(lo, hi)
    return _to_point(p, dmat, point, upper, slope, max(lower, 0.0))


def _chord_slope(lo: _SlopeSolution, hi: _SlopeSolution) -> float:
    if hi.distortion - lo.distortion > 1e-12:
        return (hi.rate - lo.rate) / (hi.distortion - lo.distortion)
    return lo.s / LN2


def _mix(p, dmat, lo: _SlopeSolution, hi: _SlopeSolution, target: float):
    span = hi.distortion - lo.distortion
    theta = 0.0 if span <= 0 else min(max((target - lo.distortion) / span, 0.0), 1.0)
    w = (1.0 - theta) * lo.channel + theta * hi.channel
    return w, _rate_bits(p, w)


def distortion_rate_inverse(
    source: Pmf, d: DistortionMeasure, target_R: float, tol: float = RD_TOL
) -> float:
    """Smallest D with R(D) <= target_R, by bisection over D.

    Rates at or above R(D_min) map to D_min; zero rate maps to D_max_zero.
    """
    h = entropy(source)
    if target_R < 0:
        raise ValueError(f"target rate must be >= 0, got {target_R!r}")
    if target_R > h + 1e-12:
        raise ValueError(f"target rate {target_R!r} exceeds the source entropy {h!r}")
    d_min = min_distortion(source, d)
    d_zero = zero_rate_distortion(source, d)
    if target_R == 0:
        return d_zero
    inner = tol / 10
    if rate_distortion(source, d, d_min, inner).rate <= target_R + tol:
        return d_min
    lo, hi = d_min, d_zero
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r = rate_distortion(source, d, mid, inner).rate
        if abs(r - target_R) <= tol / 2 or hi - lo <= 1e-15:
            break
        if r > target_R:
            lo = mid
        else:
            hi = mid
    return mid


def rd_curve(source: Pmf, d: DistortionMeasure, grid, tol: float = RD_TOL) -> list:
    return [rate_distortion(source, d, float(x), tol) for x in grid]
