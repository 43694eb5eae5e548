"""Finite-alphabet probability objects and information measures (bits).

Alphabets are index sets ``0..k-1``. All values are immutable: the arrays held
by :class:`Pmf`, :class:`Channel` and :class:`JointPmf` are flagged read-only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-9


class InvalidDistribution(ValueError):
    """A probability vector or matrix failed validation."""


class DimensionMismatch(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_entries(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise InvalidDistribution(f"{what} has non-finite entries")
    if np.any(a < 0):
        raise InvalidDistribution(f"{what} has negative entries")


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability mass function over ``range(alphabet_size)``.

    Inputs whose total deviates from 1 by at most ``NORM_TOL`` are renormalized;
    larger deviations are rejected.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise InvalidDistribution("pmf must be a non-empty vector")
        _check_entries(p, "pmf")
        total = p.sum()
        if abs(total - 1.0) > NORM_TOL:
            raise InvalidDistribution(f"pmf sums to {total!r}, expected 1")
        object.__setattr__(self, "probs", _frozen(p / total))

    @property
    def alphabet_size(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, k: int) -> Pmf:
        return cls(np.full(k, 1.0 / k))

    @classmethod
    def point(cls, k: int, i: int) -> Pmf:
        p = np.zeros(k)
        p[i] = 1.0
        return cls(p)

    @classmethod
    def bernoulli(cls, p: float) -> Pmf:
        return cls([1.0 - p, p])

    def __len__(self):
        return self.alphabet_size

    def __repr__(self):
        return f"Pmf({np.array2string(self.probs, precision=6)})"


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic matrix ``P(y|x)``; row ``x`` is the output law for input ``x``."""

    matrix: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.matrix, dtype=float)
        if w.ndim != 2 or w.size == 0:
            raise InvalidDistribution("channel must be a non-empty 2-D matrix")
        _check_entries(w, "channel")
        sums = w.sum(axis=1)
        for x, s in enumerate(sums):
            if abs(s - 1.0) > NORM_TOL:
                raise InvalidDistribution(f"channel row {x} sums to {s!r}, expected 1")
        object.__setattr__(self, "matrix", _frozen(w / sums[:, None]))

    @property
    def input_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def output_size(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def identity(cls, k: int) -> Channel:
        return cls(np.eye(k))

    @classmethod
    def bsc(cls, p: float) -> Channel:
        return cls([[1.0 - p, p], [p, 1.0 - p]])

    @classmethod
    def bec(cls, e: float) -> Channel:
        # outputs: 0, 1, erasure
        return cls([[1.0 - e, 0.0, e], [0.0, 1.0 - e, e]])

    @classmethod
    def symmetric(cls, k: int, p: float) -> Channel:
        """k-ary symmetric channel: correct w.p. 1-p, otherwise uniform over the other k-1 letters."""
        w = np.full((k, k), p / (k - 1))
        np.fill_diagonal(w, 1.0 - p)
        return cls(w)

    @classmethod
    def constant(cls, k_in: int, out: Pmf) -> Channel:
        return cls(np.tile(out.probs, (k_in, 1)))

    def __repr__(self):
        return f"Channel({np.array2string(self.matrix, precision=6)})"


@dataclass(frozen=True, eq=False)
class JointPmf:
    """Joint law of a pair ``(A, B)``, rows indexed by ``A``."""

    matrix: np.ndarray

    def __post_init__(self):
        j = np.asarray(self.matrix, dtype=float)
        if j.ndim != 2 or j.size == 0:
            raise InvalidDistribution("joint pmf must be a non-empty 2-D matrix")
        _check_entries(j, "joint pmf")
        total = j.sum()
        if abs(total - 1.0) > NORM_TOL:
            raise InvalidDistribution(f"joint pmf sums to {total!r}, expected 1")
        object.__setattr__(self, "matrix", _frozen(j / total))

    @classmethod
    def from_channel(cls, px: Pmf, ch: Channel) -> JointPmf:
        _check_dims(px, ch)
        return cls(px.probs[:, None] * ch.matrix)

    def marginal_a(self) -> Pmf:
        return Pmf(self.matrix.sum(axis=1))

    def marginal_b(self) -> Pmf:
        return Pmf(self.matrix.sum(axis=0))

    def transpose(self) -> JointPmf:
        return JointPmf(self.matrix.T)


def _plogp(p: np.ndarray) -> np.ndarray:
    # 0 log 0 = 0 by masking, never by perturbing p
    out = np.zeros_like(p, dtype=float)
    pos = p > 0
    out[pos] = p[pos] * np.log2(p[pos])
    return out


def _entropy_array(p: np.ndarray) -> float:
    return float(max(-_plogp(np.asarray(p, dtype=float)).sum(), 0.0))


def _check_dims(px: Pmf, ch: Channel) -> None:
    if px.alphabet_size != ch.input_size:
        raise DimensionMismatch(
            f"input pmf has {px.alphabet_size} symbols, channel expects {ch.input_size}"
        )


def entropy(p: Pmf) -> float:
    """Shannon entropy in bits."""
    return _entropy_array(p.probs)


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binary_entropy needs p in [0, 1], got {p!r}")
    return _entropy_array(np.array([p, 1.0 - p]))


def output_distribution(px: Pmf, ch: Channel) -> Pmf:
    _check_dims(px, ch)
    return Pmf(px.probs @ ch.matrix)


def mutual_information(px: Pmf, ch: Channel) -> float:
    """I(X;Y) = H(Y) - H(Y|X) for input law ``px`` through ``ch``."""
    _check_dims(px, ch)
    hy = _entropy_array(px.probs @ ch.matrix)
    hy_x = -float(px.probs @ _plogp(ch.matrix).sum(axis=1))
    return max(hy - hy_x, 0.0)


def mutual_information_reverse(px: Pmf, ch: Channel) -> float:
    """I(X;Y) evaluated the other way round, as H(X) - H(X|Y)."""
    j = JointPmf.from_channel(px, ch)
    return max(entropy(px) - conditional_entropy(j), 0.0)


def joint_entropy(j: JointPmf) -> float:
    return _entropy_array(j.matrix.ravel())


def conditional_entropy(j: JointPmf) -> float:
    """H(A|B) = H(A,B) - H(B) for a joint whose rows index A."""
    h = joint_entropy(j) - _entropy_array(j.matrix.sum(axis=0))
    return max(h, 0.0)
