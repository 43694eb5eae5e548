"""Achievable region of the cipher system with a noisy key-distribution channel.

For a fixed bandwidth ratio ``lam`` (key-channel uses per source symbol) a
triple ``(D, Rc, h)`` is achievable iff ``Rc >= R(D)`` and
``h <= H(U) - [R(D) - lam*C]_+``. The extended evaluators cover the
reproduction-secrecy level ``h'`` (necessary conditions only) and the
noiseless-feedback variant.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from cipher_region.info_core import (
    Channel,
    DimensionMismatch,
    Pmf,
    entropy,
    mutual_information,
    output_distribution,
)
from cipher_region.rd_capacity import (
    CAPACITY_TOL,
    DistortionMeasure,
    capacity,
    min_distortion,
    rate_distortion,
    zero_rate_distortion,
)

ACHIEVABILITY_TOL = 1e-9
REGION_RD_TOL = 1e-8
DEFAULT_GRID_POINTS = 101


def positive_part(x: float) -> float:
    return max(x, 0.0)


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Source, key channel, distortion measure and bandwidth ratio ``lam``.

    ``lam = 0`` is accepted for region evaluation (no key channel at all); the
    simulators need ``lam * N`` to be a positive integer.
    """

    source: Pmf
    key_channel: Channel
    distortion: DistortionMeasure
    lam: float = 1.0
    _rates: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam!r}")
        if self.source.alphabet_size != self.distortion.source_size:
            raise DimensionMismatch(
                f"source has {self.source.alphabet_size} symbols, "
                f"distortion matrix has {self.distortion.source_size} rows"
            )

    @functools.cached_property
    def capacity_result(self):
        return capacity(self.key_channel, CAPACITY_TOL)

    @property
    def capacity(self) -> float:
        return self.capacity_result.capacity

    @property
    def key_rate(self) -> float:
        """lam * C, key bits per source symbol the channel can carry reliably."""
        return self.lam * self.capacity

    @functools.cached_property
    def source_entropy(self) -> float:
        return entropy(self.source)

    @property
    def d_min(self) -> float:
        return min_distortion(self.source, self.distortion)

    @property
    def d_max_zero(self) -> float:
        return zero_rate_distortion(self.source, self.distortion)

    def rate(self, D: float, tol: float = REGION_RD_TOL) -> float:
        key = (float(D), tol)
        if key not in self._rates:
            self._rates[key] = rate_distortion(self.source, self.distortion, D, tol).rate
        return self._rates[key]

    def default_grid(self, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
        return np.linspace(self.d_min, self.d_max_zero, points)


@dataclass(frozen=True)
class TradeoffPoint:
    D: float
    Rc: float
    h: float
    h_prime: Optional[float] = None

    def __post_init__(self):
        for name in ("D", "Rc", "h", "h_prime"):
            v = getattr(self, name)
            if v is not None and not v >= 0:
                raise ValueError(f"{name} must be >= 0, got {v!r}")


class BoundaryRow(NamedTuple):
    D: float
    rate: float
    h_star: float
    perfect_secrecy: bool


def h_star(spec: SystemSpec, D: float, tol: float = REGION_RD_TOL) -> float:
    """Largest achievable equivocation rate at distortion ``D``."""
    h = spec.source_entropy
    return min(h, h - spec.rate(D, tol) + spec.key_rate)


def is_achievable(spec: SystemSpec, pt: TradeoffPoint, tol: float = REGION_RD_TOL) -> bool:
    if pt.h_prime is not None:
        raise ValueError("is_achievable takes (D, Rc, h); use extended_conditions for h'")
    r = spec.rate(pt.D, tol)
    return (
        pt.h <= h_star(spec, pt.D, tol) + ACHIEVABILITY_TOL
        and pt.Rc >= r - ACHIEVABILITY_TOL
    )


def perfect_secrecy_condition(spec: SystemSpec, D: float, tol: float = REGION_RD_TOL) -> bool:
    return spec.rate(D, tol) <= spec.key_rate + ACHIEVABILITY_TOL


def region_boundary(spec: SystemSpec, d_grid=None, tol: float = REGION_RD_TOL) -> list:
    """Rows ``(D, R(D), h*(D), perfect-secrecy flag)`` over ``d_grid``.

    The default grid is ``DEFAULT_GRID_POINTS`` uniform points on
    ``[D_min, D_max_zero]``.
    """
    if d_grid is None:
        d_grid = spec.default_grid()
    rows = []
    for D in d_grid:
        D = float(D)
        r = spec.rate(D, tol)
        rows.append(
            BoundaryRow(
                D=D,
                rate=r,
                h_star=h_star(spec, D, tol),
                perfect_secrecy=r <= spec.key_rate + ACHIEVABILITY_TOL,
            )
        )
    return rows


def secrecy_crossover(spec: SystemSpec, tol: float = 1e-9) -> float:
    """Smallest D with R(D) <= lam*C, i.e. where h* first reaches H(U)."""
    from cipher_region.rd_capacity import distortion_rate_inverse

    target = min(spec.key_rate, spec.source_entropy)
    return distortion_rate_inverse(spec.source, spec.distortion, target, tol)


@dataclass(frozen=True)
class ExtendedConditions:
    """Per-condition verdicts for a (D, Rc, h, h') point under given (P_X, P_{V|U}).

    These are necessary conditions only; the region they carve out is an outer
    bound and is labelled as such.
    """

    h_cap: float
    h_prime_cap: float
    rate_floor: float
    distortion_floor: float
    a: bool
    b: bool
    c: bool
    d: bool
    label: str = "outer bound"

    @property
    def satisfied(self) -> bool:
        return self.a and self.b and self.c and self.d

    def __bool__(self):
        return self.satisfied


def _check_extended_dims(spec: SystemSpec, test_channel: Channel, px: Pmf) -> None:
    if test_channel.input_size != spec.source.alphabet_size:
        raise DimensionMismatch("test channel input alphabet differs from the source alphabet")
    if test_channel.output_size != spec.distortion.reproduction_size:
        raise DimensionMismatch("test channel output alphabet differs from the reproduction alphabet")
    if px.alphabet_size != spec.key_channel.input_size:
        raise DimensionMismatch("key-channel input pmf has the wrong alphabet size")


def _reproduction_terms(spec, test_channel, px):
    _check_extended_dims(spec, test_channel, px)
    i_uv = mutual_information(spec.source, test_channel)
    h_v = entropy(output_distribution(spec.source, test_channel))
    i_xy = mutual_information(px, spec.key_channel)
    h_y = entropy(output_distribution(px, spec.key_channel))
    ed = spec.distortion.expected(spec.source, test_channel)
    return i_uv, h_v, i_xy, h_y, ed


def extended_conditions(
    spec: SystemSpec, test_channel: Channel, input: Pmf, pt: TradeoffPoint
) -> ExtendedConditions:
    if pt.h_prime is None:
        raise ValueError("extended_conditions needs a point with h_prime")
    i_uv, h_v, i_xy, h_y, ed = _reproduction_terms(spec, test_channel, input)
    h_cap = spec.source_entropy - positive_part(i_uv - spec.lam * i_xy)
    hp_cap = min(h_v, spec.lam * h_y)
    tol = ACHIEVABILITY_TOL
    return ExtendedConditions(
        h_cap=h_cap,
        h_prime_cap=hp_cap,
        rate_floor=i_uv,
        distortion_floor=ed,
        a=pt.h <= h_cap + tol,
        b=pt.h_prime <= hp_cap + tol,
        c=pt.Rc >= i_uv - tol,
        d=pt.D >= ed - tol,
    )


def feedback_bounds(spec: SystemSpec, test_channel: Channel, input: Pmf) -> tuple:
    """(h, h') reachable with noiseless feedback of the key-channel output."""
    i_uv, h_v, _, h_y, _ = _reproduction_terms(spec, test_channel, input)
    h = spec.source_entropy - positive_part(i_uv - spec.lam * h_y)
    return h, min(h_v, spec.lam * h_y)


def search_extended_frontier(spec: SystemSpec, samples: int = 500, seed: int = 0) -> list:
    """Heuristic random search over (P_X, P_{V|U}) for the outer-bound frontier.

    Returns the non-dominated ``TradeoffPoint`` s (smaller D and Rc, larger h
    and h') among ``samples`` random draws. No optimality claim is made.
    """
    rng = np.random.default_rng(seed)
    ku = spec.source.alphabet_size
    kv = spec.distortion.reproduction_size
    kx = spec.key_channel.input_size
    found = []
    for _ in range(samples):
        # sharp Dirichlet draws reach near-deterministic channels too
        alpha = rng.choice([0.1, 1.0])
        tc = Channel(rng.dirichlet(np.full(kv, alpha), size=ku))
        px = Pmf(rng.dirichlet(np.full(kx, alpha)))
        i_uv, h_v, i_xy, h_y, ed = _reproduction_terms(spec, tc, px)
        found.append(
            TradeoffPoint(
                D=ed,
                Rc=i_uv,
                h=spec.source_entropy - positive_part(i_uv - spec.lam * i_xy),
                h_prime=min(h_v, spec.lam * h_y),
            )
        )
    return _pareto(found)


def _dominates(a: TradeoffPoint, b: TradeoffPoint) -> bool:
    ge = a.D <= b.D and a.Rc <= b.Rc and a.h >= b.h and a.h_prime >= b.h_prime
    gt = a.D < b.D or a.Rc < b.Rc or a.h > b.h or a.h_prime > b.h_prime
    return ge and gt


def _pareto(points: list) -> list:
    keep = [p for p in points if not any(_dominates(q, p) for q in points)]
    return sorted(keep, key=lambda t: (t.D, t.Rc))
