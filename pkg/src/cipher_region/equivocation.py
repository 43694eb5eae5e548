"""Exact equivocation H(U^N | W^m) for small deterministic schemes.

The brute-force route enumerates every (source block, key string) pair; the
closed forms cover additive ciphers and the compress-then-encrypt scheme.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from cipher_region.info_core import (
    DimensionMismatch,
    JointPmf,
    Pmf,
    conditional_entropy,
    entropy,
)
from cipher_region.region import SystemSpec, positive_part

ENUMERATION_BUDGET = 2**24


class BudgetExceeded(ValueError):
    def __init__(self, size: int, budget: int = ENUMERATION_BUDGET):
        super().__init__(
            f"enumeration needs {size} (source block, key) pairs, "
            f"over the budget of 2^{int(np.log2(budget))} = {budget}"
        )
        self.size = size
        self.budget = budget


def block_index(block: Sequence[int], k: int) -> int:
    """Mixed-radix index of a source block, first letter most significant."""
    idx = 0
    for a in block:
        idx = idx * k + int(a)
    return idx


def bits_to_int(bits: Sequence[int]) -> int:
    """MSB-first."""
    v = 0
    for b in bits:
        v = (v << 1) | int(b)
    return v


def int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


@dataclass(frozen=True, eq=False)
class SchemeJoint:
    """Joint law of (source block, cryptogram); rows index U^N, columns W^m."""

    joint: JointPmf
    N: int
    m: int

    def source_marginal(self) -> np.ndarray:
        return self.joint.matrix.sum(axis=1)

    def cryptogram_marginal(self) -> np.ndarray:
        return self.joint.matrix.sum(axis=0)

    def cryptogram_entropy(self) -> float:
        return entropy(Pmf(self.cryptogram_marginal()))

    def equivocation_bits(self) -> float:
        return conditional_entropy(self.joint)

    def equivocation_rate(self) -> float:
        return self.equivocation_bits() / self.N


def product_law(source: Pmf, N: int) -> np.ndarray:
    """i.i.d. law of U^N in :func:`block_index` order."""
    law = np.ones(1)
    for _ in range(N):
        law = np.outer(law, source.probs).ravel()
    return law


def enumerate_scheme_joint(
    scheme: Callable[[tuple, tuple], Sequence[int]],
    source: Pmf,
    N: int,
    key_bit_count: int,
    budget: int = ENUMERATION_BUDGET,
) -> SchemeJoint:
    """Exact joint of (U^N, W^m) for a deterministic map ``scheme(u_block, key_bits)``.

    Key bits are i.i.d. fair. The cryptogram length ``m`` is taken from the
    scheme's output and must not vary.
    """
    k = source.alphabet_size
    size = k**N * 2**key_bit_count
    if size > budget:
        raise BudgetExceeded(size, budget)
    law = product_law(source, N)
    key_weight = 2.0**-key_bit_count
    keys = list(itertools.product((0, 1), repeat=key_bit_count))
    cells = {}
    m = None
    for ui, u in enumerate(itertools.product(range(k), repeat=N)):
        if law[ui] == 0:
            continue
        for key in keys:
            w = scheme(u, key)
            if m is None:
                m = len(w)
            elif len(w) != m:
                raise ValueError("scheme produced cryptograms of different lengths")
            cell = (ui, bits_to_int(w))
            cells[cell] = cells.get(cell, 0.0) + law[ui] * key_weight
    if m is None:
        m = len(scheme(tuple([0] * N), tuple([0] * key_bit_count)))
    joint = np.zeros((k**N, 2**m))
    for (ui, wi), mass in cells.items():
        joint[ui, wi] += mass
    return SchemeJoint(JointPmf(joint), N=N, m=m)


def cyclic_convolution(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Law of (A + B) mod k for independent A ~ a, B ~ b."""
    k = a.size
    idx = (np.arange(k)[:, None] - np.arange(k)[None, :]) % k
    return b[idx] @ a


def additive_equivocation_rate(source: Pmf, z_law: Pmf) -> float:
    """Per-letter H(U|W) for W = U + Z mod k with Z ~ z_law independent of U."""
    if source.alphabet_size != z_law.alphabet_size:
        raise DimensionMismatch(
            f"source has {source.alphabet_size} symbols, key law has {z_law.alphabet_size}"
        )
    w = cyclic_convolution(source.probs, z_law.probs)
    h = entropy(source) + entropy(z_law) - entropy(Pmf(w))
    return max(h, 0.0)


def separation_equivocation_identity(
    N: int, m: int, ell: int, source_entropy: float, cryptogram_entropy: float
) -> float:
    """N H(U) - H(W^m) + ell, in bits.

    Exact for any deterministic compressor whose first ``ell`` output bits are
    XORed with fair key bits, because then H(W^m | U^N) = ell.
    """
    if not 0 <= ell <= m:
        raise ValueError(f"need 0 <= ell <= m, got ell={ell}, m={m}")
    return N * source_entropy - cryptogram_entropy + ell


def equivocation_lower_bound(spec: SystemSpec, D: float, epsilon: float, N: int) -> float:
    """Guaranteed equivocation (bits) of the separation scheme with slack ``epsilon``."""
    slack = 2 * epsilon * max(1.0, spec.lam)
    return N * (spec.source_entropy - positive_part(spec.rate(D) - spec.key_rate) - slack)
