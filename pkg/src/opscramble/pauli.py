"""Exact algebra of N-qubit Pauli strings in the symplectic (x, z) representation.

A :class:`PauliString` stores two bit masks and a power of ``i``. Site 1 is the
leftmost letter and lives in the most significant bit, which matches the
Kronecker ordering used for dense matrices throughout the package.
"""
from dataclasses import dataclass
from itertools import combinations, product
from math import comb, pi, sqrt

import numpy as np

from .errors import CapacityError

MAX_DENSE_SITES = 14

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {bits: letter for letter, bits in _LETTER_BITS.items()}
_PREFIXES = {0: "", 1: "+i·", 2: "−1·", 3: "−i·"}

SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _popcount(v):
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    """``i**phase`` times a tensor product of single-site Paulis."""

    n_sites: int
    x_mask: int
    z_mask: int
    phase: int = 0

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        limit = 1 << self.n_sites
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise ValueError("masks do not fit in n_sites bits")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n_sites):
        return cls(n_sites, 0, 0)

    @classmethod
    def from_label(cls, label):
        """Parse ``"XIZ"``, ``"-YY"``, ``"−i·IYX"``, ``"+i*Z"`` and similar."""
        text = label.strip().replace("−", "-")
        phase = 0
        for prefix, value in (("+1", 0), ("-1", 2), ("+i", 1), ("-i", 3), ("i", 1), ("+", 0), ("-", 2)):
            if text.startswith(prefix):
                phase = value
                text = text[len(prefix):]
                break
        text = text.lstrip("·*")
        if not text or any(c not in _LETTER_BITS for c in text):
            raise ValueError(f"not a Pauli label: {label!r}")
        x = z = 0
        for c in text:
            xb, zb = _LETTER_BITS[c]
            x = (x << 1) | xb
            z = (z << 1) | zb
        return cls(len(text), x, z, phase)

    @classmethod
    def single(cls, n_sites, site, letter):
        """Single-site Pauli ``letter`` on 1-based ``site``."""
        if not 1 <= site <= n_sites:
            raise ValueError(f"site {site} outside 1..{n_sites}")
        xb, zb = _LETTER_BITS[letter.upper()]
        shift = n_sites - site
        return cls(n_sites, xb << shift, zb << shift)

    @property
    def letters(self):
        out = []
        for site in range(self.n_sites):
            shift = self.n_sites - 1 - site
            out.append(_BITS_LETTER[((self.x_mask >> shift) & 1, (self.z_mask >> shift) & 1)])
        return "".join(out)

    @property
    def key(self):
        """Phase-free integer index ``x * 2**n + z``."""
        return (self.x_mask << self.n_sites) | self.z_mask

    def __str__(self):
        return _PREFIXES[self.phase] + self.letters

    def __mul__(self, other):
        return multiply(self, other)


def weight(p):
    """Number of sites on which ``p`` acts non-trivially."""
    return _popcount(p.x_mask | p.z_mask)


def _check_sizes(p, q):
    if p.n_sites != q.n_sites:
        raise ValueError(f"size mismatch: {p.n_sites} vs {q.n_sites} sites")


def multiply(p, q):
    """Matrix product ``p @ q`` with the phase tracked exactly."""
    _check_sizes(p, q)
    x = p.x_mask ^ q.x_mask
    z = p.z_mask ^ q.z_mask
    # X^a Z^b X^c Z^d = (-1)^{b.c} X^{a^c} Z^{b^d}; Y carries an extra i per site.
    phase = (
        p.phase + q.phase
        + _popcount(p.x_mask & p.z_mask) + _popcount(q.x_mask & q.z_mask)
        + 2 * _popcount(p.z_mask & q.x_mask)
        - _popcount(x & z)
    )
    return PauliString(p.n_sites, x, z, phase)


def symplectic_product(p, q):
    """0 if the strings commute, 1 if they anticommute."""
    _check_sizes(p, q)
    return (_popcount(p.x_mask & q.z_mask) + _popcount(p.z_mask & q.x_mask)) & 1


def commutation_phase(p, q):
    """Phase ``phi`` in ``p q = exp(i phi) q p``: either 0 or pi."""
    return pi * symplectic_product(p, q)


def dense_matrix(p, normalized=False):
    """Dense ``2**n x 2**n`` matrix; normalised strings satisfy ``Tr(P^dag P) = 1``."""
    if p.n_sites > MAX_DENSE_SITES:
        raise CapacityError(f"dense Pauli limited to {MAX_DENSE_SITES} sites, got {p.n_sites}")
    out = np.ones((1, 1), dtype=complex)
    for letter in p.letters:
        out = np.kron(out, SIGMA[letter])
    out *= 1j ** p.phase
    if normalized:
        out /= sqrt(2.0) ** p.n_sites
    return out


def weight_class_dim(n_sites, k):
    """``binom(n, k) * 3**k`` strings of weight ``k``."""
    if not 0 <= k <= n_sites:
        return 0
    return comb(n_sites, k) * 3 ** k


def enumerate_weight_class(n_sites, k):
    """All weight-``k`` strings: site combinations in lexicographic order, letters X<Y<Z."""
    if n_sites < 1:
        raise ValueError("n_sites must be positive")
    if not 0 <= k <= n_sites:
        raise ValueError(f"weight {k} outside 0..{n_sites}")
    out = []
    for sites in combinations(range(1, n_sites + 1), k):
        for letters in product("XYZ", repeat=k):
            x = z = 0
            for site, letter in zip(sites, letters):
                xb, zb = _LETTER_BITS[letter]
                shift = n_sites - site
                x |= xb << shift
                z |= zb << shift
            out.append(PauliString(n_sites, x, z))
    return out


def from_key(n_sites, key):
    return PauliString(n_sites, key >> n_sites, key & ((1 << n_sites) - 1))
