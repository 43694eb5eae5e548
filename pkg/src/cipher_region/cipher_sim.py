"""Block-code simulators for joint compression and encryption.

Three strategies are simulated end to end:

* ``SEPARATION``: random rate-distortion codebook, the first ``ell`` index bits
  XORed with key bits, the key delivered over the key channel (idealized
  channel code or uncoded).
* ``MATCHED_ADDITIVE``: uniform key letters added mod k to the source and sent
  uncoded over the key channel, decoder subtracts the channel output.
* ``ADDITIVE_UNCODED``: as above with an arbitrary key-letter law.

Randomness comes from Philox substreams keyed by ``(seed, stream, trial)`` so
every trial is reproducible on its own.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from cipher_region.equivocation import (
    additive_equivocation_rate,
    product_law,
    separation_equivocation_identity,
)
from cipher_region.info_core import Channel, DimensionMismatch, Pmf, entropy
from cipher_region.rd_capacity import (
    DistortionMeasure,
    best_constant_reproduction,
    rate_distortion,
)
from cipher_region.region import SystemSpec, TradeoffPoint

DEFAULT_EPSILON = 0.05
MAX_INDEX_BITS = 24
# |U|^N * 2^m cells for exact expected distortion / cryptogram entropy
EXACT_BUDGET = 2**22

_CODEBOOK_STREAM = 0
_TRIAL_STREAM = 1


class Strategy(str, enum.Enum):
    SEPARATION = "separation"
    MATCHED_ADDITIVE = "matched_additive"
    ADDITIVE_UNCODED = "additive_uncoded"


@dataclass(frozen=True)
class IdealBackend:
    """Channel code abstraction: correct key w.p. 1 - delta, else a uniform block."""

    delta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta!r}")


@dataclass(frozen=True)
class UncodedBackend:
    """Key letters go through the key channel as channel inputs, no decoding."""


Backend = Union[IdealBackend, UncodedBackend]


class RateOverflow(ValueError):
    pass


class SchemeError(ValueError):
    pass


def substream(seed: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence(seed & (2**64 - 1), spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True, eq=False)
class SchemeConfig:
    spec: SystemSpec
    N: int
    epsilon: float = DEFAULT_EPSILON
    strategy: Strategy = Strategy.SEPARATION
    backend: Backend = field(default_factory=IdealBackend)
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon!r}")
        n = self.spec.lam * self.N
        if n < 1 or abs(n - round(n)) > 1e-9:
            raise ValueError(
                f"lambda * N = {n!r} must be a positive integer (lambda={self.spec.lam!r}, N={self.N})"
            )
        object.__setattr__(self, "strategy", Strategy(self.strategy))

    @property
    def n(self) -> int:
        return int(round(self.spec.lam * self.N))


@dataclass(frozen=True, eq=False)
class Codebook:
    codewords: np.ndarray  # (2**index_bits, N) reproduction letters
    rate: float
    index_bits: int
    distortion: DistortionMeasure

    def __post_init__(self):
        cw = np.asarray(self.codewords)
        if cw.ndim != 2 or cw.shape[0] != 2**self.index_bits:
            raise ValueError("codebook must hold exactly 2^index_bits codewords")
        if cw.min() < 0 or cw.max() >= self.distortion.reproduction_size:
            raise ValueError("codeword letters outside the reproduction alphabet")
        cw = cw.astype(np.int64)
        cw.setflags(write=False)
        object.__setattr__(self, "codewords", cw)

    @property
    def N(self) -> int:
        return self.codewords.shape[1]

    @functools.cached_property
    def _packed(self) -> np.ndarray:
        return _pack(self.codewords)

    def __len__(self):
        return self.codewords.shape[0]

    def block_distortions(self, blocks: np.ndarray, rounded: bool = True) -> np.ndarray:
        """Total (unnormalized) distortion of every block against every codeword.

        Returns a ``(len(blocks), len(self))`` matrix. Generic sums are rounded
        to 9 decimals by default so that equal-cost words tie exactly in the
        encoder's argmin; pass ``rounded=False`` for the raw sums.
        """
        blocks = np.atleast_2d(np.asarray(blocks, dtype=np.int64))
        dm = self.distortion.matrix
        if dm.shape == (2, 2) and self.N <= 64:
            return _binary_block_distortions(_pack(blocks), self._packed, N=self.N, dm=dm)
        kv = self.distortion.reproduction_size
        onehot = np.zeros((len(self), self.N * kv))
        cols = np.arange(self.N) * kv
        onehot[np.arange(len(self))[:, None], cols[None, :] + self.codewords] = 1.0
        # per-block row gathers d(u_i, .) for every position
        a = dm[blocks].reshape(len(blocks), -1)
        raw = a @ onehot.T
        return np.round(raw, 9) if rounded else raw


def _pack(bits: np.ndarray) -> np.ndarray:
    weights = np.left_shift(np.uint64(1), np.arange(bits.shape[1], dtype=np.uint64))
    return (bits.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)


def _binary_block_distortions(packed_blocks, packed_words, N, dm) -> np.ndarray:
    u = packed_blocks[:, None]
    c = packed_words[None, :]
    if dm[0, 0] == 0 and dm[1, 1] == 0 and dm[0, 1] == dm[1, 0]:
        # scaled Hamming: integer mismatch counts keep argmin ties exact
        counts = np.bitwise_count(u ^ c)
        return counts if dm[0, 1] == 1 else counts * dm[0, 1]
    mask = np.uint64((1 << N) - 1)
    n01 = np.bitwise_count(~u & c & mask).astype(np.int64)
    n10 = np.bitwise_count(u & ~c & mask).astype(np.int64)
    n11 = np.bitwise_count(u & c).astype(np.int64)
    n00 = N - n01 - n10 - n11
    return n00 * dm[0, 0] + n01 * dm[0, 1] + n10 * dm[1, 0] + n11 * dm[1, 1]


def _ceil(x: float) -> int:
    # N * rate landing a hair above an integer is float noise, not a new bit
    return int(math.ceil(x - 1e-9))


def build_rd_codebook(
    source: Pmf,
    d: DistortionMeasure,
    D: float,
    N: int,
    epsilon: float = DEFAULT_EPSILON,
    seed: int = 0,
    max_index_bits: int = MAX_INDEX_BITS,
) -> Codebook:
    """Random codebook of ``2^ceil(N (R(D) + epsilon))`` words drawn i.i.d.
    from the output marginal of the R(D)-achieving test channel.

    At zero rate (``D >= D_max_zero``) the book is the single best constant
    reproduction and carries no index bits.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    pt = rate_distortion(source, d, D)
    if pt.rate == 0.0:
        v = best_constant_reproduction(source, d)
        return Codebook(np.full((1, N), v), rate=0.0, index_bits=0, distortion=d)
    rate = pt.rate + epsilon
    m = _ceil(N * rate)
    if m > max_index_bits:
        raise RateOverflow(
            f"codebook needs 2^{m} words (N={N}, rate={rate:.6f}); cap is 2^{max_index_bits}"
        )
    q = pt.output_marginal(source, d.reproduction_size).probs
    rng = substream(seed, _CODEBOOK_STREAM)
    words = rng.choice(d.reproduction_size, size=(2**m, N), p=q)
    return Codebook(words, rate=rate, index_bits=m, distortion=d)


def encode_blocks(blocks: np.ndarray, cb: Codebook, chunk: int = 1 << 22):
    """Minimum-distortion indices (ties to the smallest index) and their distortions."""
    blocks = np.atleast_2d(np.asarray(blocks, dtype=np.int64))
    if blocks.shape[1] != cb.N:
        raise DimensionMismatch(f"block length {blocks.shape[1]} != codebook length {cb.N}")
    step = max(1, chunk // len(cb))
    idx = np.empty(len(blocks), dtype=np.int64)
    dist = np.empty(len(blocks))
    for start in range(0, len(blocks), step):
        table = cb.block_distortions(blocks[start : start + step])
        best = table.argmin(axis=1)
        idx[start : start + step] = best
        dist[start : start + step] = table[np.arange(len(best)), best]
    return idx, dist


def encode_source(u_block, cb: Codebook) -> int:
    idx, _ = encode_blocks(np.asarray(u_block)[None, :], cb)
    return int(idx[0])


def index_bits(indices, m: int) -> np.ndarray:
    """MSB-first binary expansion, shape ``(len(indices), m)``."""
    indices = np.atleast_1d(np.asarray(indices, dtype=np.int64))
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    return ((indices[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def bits_index(bits: np.ndarray) -> np.ndarray:
    bits = np.atleast_2d(bits).astype(np.int64)
    m = bits.shape[1]
    weights = 1 << np.arange(m - 1, -1, -1, dtype=np.int64)
    return bits @ weights


def xor_encrypt(index_bits_, key_bits, ell: int) -> np.ndarray:
    """XOR the first ``ell`` bits with the key; the rest pass through."""
    bits = np.array(index_bits_, dtype=np.uint8)
    key = np.asarray(key_bits, dtype=np.uint8)
    if ell < 0 or ell > bits.shape[-1]:
        raise ValueError(f"ell={ell} outside [0, {bits.shape[-1]}]")
    if key.shape[-1] < ell:
        raise ValueError(f"key supplies {key.shape[-1]} bits, {ell} needed")
    bits[..., :ell] ^= key[..., :ell]
    return bits


def sample_channel(rng: np.random.Generator, ch: Channel, inputs) -> np.ndarray:
    inputs = np.asarray(inputs, dtype=np.int64)
    cdf = np.cumsum(ch.matrix, axis=1)
    draws = rng.random(inputs.shape)
    out = (draws[..., None] >= cdf[inputs]).sum(axis=-1)
    return np.minimum(out, ch.output_size - 1)


def ideal_key_budget(spec: SystemSpec, n: int, epsilon: float) -> int:
    """floor(n (C - epsilon)), never negative."""
    return max(int(math.floor(n * (spec.capacity - epsilon) + 1e-9)), 0)


def key_channel_transmit(
    key_bits,
    backend: Backend,
    spec: SystemSpec,
    n: int,
    rng: np.random.Generator,
    epsilon: float = DEFAULT_EPSILON,
) -> np.ndarray:
    key = np.asarray(key_bits, dtype=np.int64)
    ell = key.shape[-1]
    if isinstance(backend, IdealBackend):
        budget = ideal_key_budget(spec, n, epsilon)
        if ell > budget:
            raise RateOverflow(f"{ell} key bits exceed n(C - eps) = {budget} for n={n}")
        if backend.delta > 0 and rng.random() < backend.delta:
            return rng.integers(0, 2, size=key.shape)
        return key.copy()
    if isinstance(backend, UncodedBackend):
        ch = spec.key_channel
        if ch.input_size != ch.output_size:
            raise SchemeError("uncoded key delivery needs matching channel input/output alphabets")
        if ell != n:
            raise SchemeError(f"uncoded key delivery sends exactly n={n} letters, got {ell}")
        if key.size and (key.min() < 0 or key.max() >= ch.input_size):
            raise SchemeError("key letters outside the channel input alphabet")
        return sample_channel(rng, ch, key)
    raise TypeError(f"unknown backend {backend!r}")


@dataclass(frozen=True)
class SchemeTrialReport:
    """Measured figures of merit for one simulated configuration.

    ``expected_distortion`` is the exact mean over source and key randomness
    when it can be enumerated (``None`` otherwise); ``empirical_distortion``
    is the Monte Carlo average over the simulated trials.
    """

    strategy: str
    N: int
    n: int
    trials: int
    empirical_distortion: float
    expected_distortion: Optional[float]
    cryptogram_rate: float
    equivocation_bits: float
    equivocation_rate: float
    equivocation_exact: bool
    key_error_rate: float
    encrypted_bits: int
    index_bits: int

    @property
    def distortion(self) -> float:
        if self.expected_distortion is not None:
            return self.expected_distortion
        return self.empirical_distortion

    def tradeoff_point(self) -> TradeoffPoint:
        return TradeoffPoint(D=self.distortion, Rc=self.cryptogram_rate, h=self.equivocation_rate)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "N": self.N,
            "n": self.n,
            "trials": self.trials,
            "empirical_distortion": self.empirical_distortion,
            "expected_distortion": self.expected_distortion,
            "cryptogram_rate": self.cryptogram_rate,
            "equivocation_bits": self.equivocation_bits,
            "equivocation_rate": self.equivocation_rate,
            "equivocation_exact": self.equivocation_exact,
            "key_error_rate": self.key_error_rate,
            "encrypted_bits": self.encrypted_bits,
            "index_bits": self.index_bits,
        }


def _check_trials(trials: int) -> None:
    if trials < 1:
        raise ValueError("trials must be positive")


def _all_blocks(k: int, N: int) -> np.ndarray:
    grids = np.indices((k,) * N).reshape(N, -1).T
    return grids.astype(np.int64)


def separation_cryptogram(u_block, key_bits, cb: Codebook, ell: int) -> tuple:
    """Deterministic cryptogram map of the separation scheme, for enumeration."""
    idx = encode_source(u_block, cb)
    w = xor_encrypt(index_bits(idx, cb.index_bits)[0], key_bits, ell)
    return tuple(int(b) for b in w)


def _separation_exact(spec, cb, ell, backend, n):
    """(cryptogram entropy, expected distortion) by enumerating U^N, or ``None``."""
    k = spec.source.alphabet_size
    N, m = cb.N, cb.index_bits
    blocks_count = k**N
    if blocks_count * max(len(cb), 1) > EXACT_BUDGET:
        return None
    blocks = _all_blocks(k, N)
    law = product_law(spec.source, N)
    idx = cb.block_distortions(blocks).argmin(axis=1)
    table = cb.block_distortions(blocks, rounded=False)  # (k^N, 2^m)
    low_bits = m - ell
    low = idx & ((1 << low_bits) - 1)
    low_law = np.bincount(low, weights=law, minlength=1 << low_bits)
    h_w = ell + entropy(Pmf(low_law / low_law.sum()))

    correct = float(law @ table[np.arange(blocks_count), idx])
    # index with its top ell bits replaced by r: row of candidates per block
    grouped = table.reshape(blocks_count, 1 << ell, 1 << low_bits)
    candidates = grouped[np.arange(blocks_count), :, low]  # (k^N, 2^ell)
    top = idx >> low_bits
    if isinstance(backend, IdealBackend):
        garbage = float(law @ candidates.mean(axis=1))
        expected = (1 - backend.delta) * correct + backend.delta * garbage
    else:
        w = spec.key_channel.matrix
        flip = 0.5 * (w[0, 1] + w[1, 0])
        patterns = np.arange(1 << ell)
        ones = index_bits(patterns, ell).sum(axis=1) if ell else np.zeros(1, dtype=np.int64)
        p_err = flip**ones * (1 - flip) ** (ell - ones)
        shifted = top[:, None] ^ patterns[None, :]
        per_block = np.take_along_axis(candidates, shifted, axis=1) @ p_err
        expected = float(law @ per_block)
    return h_w, expected / N


def run_separation(config: SchemeConfig, target_D: float, trials: int) -> SchemeTrialReport:
    if config.strategy is not Strategy.SEPARATION:
        raise SchemeError(f"run_separation needs the separation strategy, got {config.strategy.value}")
    _check_trials(trials)
    spec = config.spec
    N, n = config.N, config.n
    cb = build_rd_codebook(spec.source, spec.distortion, target_D, N, config.epsilon, config.seed)
    m = cb.index_bits
    backend = config.backend
    if isinstance(backend, IdealBackend):
        ell = min(ideal_key_budget(spec, n, config.epsilon), m)
        sent = ell
    else:
        if spec.key_channel.input_size != 2:
            raise SchemeError("uncoded key bits need a binary-input key channel")
        # n key bits cross the channel; the first min(n, m) of them encrypt
        ell = min(n, m)
        sent = n

    k = spec.source.alphabet_size
    blocks = np.empty((trials, N), dtype=np.int64)
    keys = np.empty((trials, sent), dtype=np.int64)
    decoded = np.empty((trials, sent), dtype=np.int64)
    for t in range(trials):
        rng = substream(config.seed, _TRIAL_STREAM, t)
        blocks[t] = rng.choice(k, size=N, p=spec.source.probs)
        keys[t] = rng.integers(0, 2, size=sent)
        decoded[t] = key_channel_transmit(keys[t], backend, spec, n, rng, config.epsilon)

    idx, _ = encode_blocks(blocks, cb)
    bits = index_bits(idx, m)
    w = xor_encrypt(bits, keys.astype(np.uint8), ell)
    idx_hat = bits_index(xor_encrypt(w, decoded.astype(np.uint8), ell)) if m else np.zeros(trials, dtype=np.int64)
    key_ok = (keys[:, :ell] == decoded[:, :ell]).all(axis=1)
    if not np.array_equal(idx_hat[key_ok], idx[key_ok]):
        raise AssertionError("correct key failed to recover the encoder's codeword")
    v = cb.codewords[idx_hat]
    dist = spec.distortion.matrix[blocks, v].sum(axis=1) / N

    h_u = spec.source_entropy
    exact = _separation_exact(spec, cb, ell, backend, n)
    if exact is not None:
        h_w, expected = exact
        eq_bits = separation_equivocation_identity(N, m, ell, h_u, h_w)
    else:
        # H(W^m) <= m
        expected = None
        eq_bits = N * h_u - m + ell
    return SchemeTrialReport(
        strategy=config.strategy.value,
        N=N,
        n=n,
        trials=trials,
        empirical_distortion=float(dist.mean()),
        expected_distortion=expected,
        cryptogram_rate=m / N,
        equivocation_bits=float(eq_bits),
        equivocation_rate=float(eq_bits) / N,
        equivocation_exact=exact is not None,
        key_error_rate=float(np.mean(~key_ok)),
        encrypted_bits=ell,
        index_bits=m,
    )


def _additive_setup(config: SchemeConfig):
    spec = config.spec
    k = spec.source.alphabet_size
    ch = spec.key_channel
    if not (ch.input_size == ch.output_size == spec.distortion.reproduction_size == k):
        raise DimensionMismatch(
            "additive schemes need equal source, key-channel and reproduction alphabets"
        )
    if config.n != config.N:
        raise SchemeError(f"additive schemes need lambda = 1, got {spec.lam!r}")
    rho = spec.distortion.difference_profile()
    if rho is None:
        raise SchemeError("additive schemes need a difference distortion d(u, v) = rho(v - u mod k)")
    return spec, k, rho


def _simulate_additive(config: SchemeConfig, z_law: Pmf, trials: int):
    spec, k, rho = _additive_setup(config)
    N = config.N
    dm = spec.distortion.matrix
    total = 0.0
    key_errors = 0
    for t in range(trials):
        rng = substream(config.seed, _TRIAL_STREAM, t)
        u = rng.choice(k, size=N, p=spec.source.probs)
        z = rng.choice(k, size=N, p=z_law.probs)
        w = (u + z) % k
        z_hat = sample_channel(rng, spec.key_channel, z)
        v = (w - z_hat) % k
        d_uv = dm[u, v]
        d_key = rho[(z - z_hat) % k]
        # d(U, V) = rho(V - U) = rho(Z - Z') letter by letter, no tolerance
        if not np.array_equal(d_uv, d_key):
            bad = int(np.flatnonzero(d_uv != d_key)[0])
            raise AssertionError(f"trial {t}, letter {bad}: d(U,V) != rho(Z - Z')")
        total += d_uv.sum()
        key_errors += int((z != z_hat).sum())
    letters = trials * N
    w = spec.key_channel.matrix
    zz = np.arange(k)
    pair_rho = rho[(zz[:, None] - zz[None, :]) % k]  # [z, y] -> rho(z - y)
    expected = float(z_law.probs @ (w * pair_rho).sum(axis=1))
    return spec, k, float(total / letters), expected, key_errors / letters


def run_matched_additive(config: SchemeConfig, trials: int) -> SchemeTrialReport:
    if config.strategy is not Strategy.MATCHED_ADDITIVE:
        raise SchemeError(f"run_matched_additive needs the matched strategy, got {config.strategy.value}")
    _check_trials(trials)
    k = config.spec.source.alphabet_size
    spec, k, emp, expected, ker = _simulate_additive(config, Pmf.uniform(k), trials)
    # uniform key letters make W independent of U
    h = spec.source_entropy
    return SchemeTrialReport(
        strategy=config.strategy.value,
        N=config.N,
        n=config.n,
        trials=trials,
        empirical_distortion=emp,
        expected_distortion=expected,
        cryptogram_rate=math.log2(k),
        equivocation_bits=config.N * h,
        equivocation_rate=h,
        equivocation_exact=True,
        key_error_rate=ker,
        encrypted_bits=config.N,
        index_bits=config.N,
    )


def run_additive_uncoded(config: SchemeConfig, z_law: Pmf, trials: int) -> SchemeTrialReport:
    if config.strategy is not Strategy.ADDITIVE_UNCODED:
        raise SchemeError(f"run_additive_uncoded needs the additive strategy, got {config.strategy.value}")
    _check_trials(trials)
    k = config.spec.source.alphabet_size
    if z_law.alphabet_size != k:
        raise DimensionMismatch(f"key law has {z_law.alphabet_size} letters, source has {k}")
    spec, k, emp, expected, ker = _simulate_additive(config, z_law, trials)
    h = additive_equivocation_rate(spec.source, z_law)
    return SchemeTrialReport(
        strategy=config.strategy.value,
        N=config.N,
        n=config.n,
        trials=trials,
        empirical_distortion=emp,
        expected_distortion=expected,
        cryptogram_rate=math.log2(k),
        equivocation_bits=config.N * h,
        equivocation_rate=h,
        equivocation_exact=True,
        key_error_rate=ker,
        encrypted_bits=config.N,
        index_bits=config.N,
    )
