"""Infinite-temperature OTOCs and their exact link to Pauli-weight moments.

OTOCs use unnormalised Pauli matrices (each squares to the identity), so every
correlator lies in ``[-1, 1]``. Weight distributions use the unit-norm basis.
:func:`unitary_scale` is the one conversion between the two.

For ``W = sum_Q f_Q Q`` with ``sum |f_Q|^2 = 1``, averaging the OTOC over all
weight-``n`` strings ``R`` gives ``sum_Q |f_Q|^2 poly_n(s(Q)) / dim(C_n)``. Here
``poly_n(s)`` is the signed count of ``R`` commuting with a weight-``s`` string.
It is a degree-``n`` polynomial in ``s``, so the averages are linear in the
moments ``mu_1..mu_n``. All combinatorics below are exact integers/rationals.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

from . import kernels
from .errors import CapacityError, ContractViolation
from .pauli import dense_matrix, enumerate_weight_class, symplectic_product, weight_class_dim

MAX_BRUTE_SITES = 8
MAX_AMPLITUDE_ORDER = 60


def unitary_scale(n_sites):
    """Factor turning a unit-Hilbert-Schmidt-norm operator into a unitary-normalised one."""
    return float(np.sqrt(1 << n_sites))


@dataclass
class MomentVector:
    moments: np.ndarray
    conditioning: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.moments = np.asarray(self.moments, dtype=object if _is_exact(self.moments) else float)

    @property
    def n_max(self):
        return len(self.moments)

    def __getitem__(self, i):
        """``mv[i]`` is ``mu_i`` (1-based)."""
        if not 1 <= i <= self.n_max:
            raise IndexError(i)
        return self.moments[i - 1]

    def is_consistent(self, tol=1e-9):
        """``mu_1 >= 0`` and ``mu_2 >= mu_1**2`` (when available), within ``tol``."""
        m = [float(v) for v in self.moments]
        ok = m[0] >= -tol
        if len(m) > 1:
            ok = ok and m[1] >= m[0] ** 2 - tol
        return ok


def _is_exact(values):
    return all(isinstance(v, (int, Fraction)) for v in np.ravel(np.asarray(values, dtype=object)))


@dataclass(frozen=True)
class OtocAverage:
    n: int
    value: float


def otoc(w_t, v):
    """``Tr(W^dag V^dag W V) / d`` for unitary-normalised operators."""
    w = np.asarray(w_t, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if w.shape != v.shape or w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"dimension mismatch: {w.shape} vs {v.shape}")
    d = w.shape[0]
    # Tr(A B) = sum(A * B^T), avoiding one matrix product
    val = np.sum((w.conj().T @ v.conj().T) * (w @ v).T) / d
    if abs(val.imag) > 1e-10:
        raise ContractViolation(f"OTOC has imaginary part {val.imag:.3g}")
    return float(val.real)


def averaged_otoc(w_t, n, n_sites):
    """Mean OTOC of ``w_t`` against every weight-``n`` Pauli string (brute force)."""
    if n_sites > MAX_BRUTE_SITES:
        raise CapacityError(f"brute-force OTOC averaging limited to {MAX_BRUTE_SITES} sites")
    if not 1 <= n <= n_sites:
        raise ValueError(f"n must lie in 1..{n_sites}")
    total = 0.0
    count = 0
    for r in enumerate_weight_class(n_sites, n):
        total += otoc(w_t, dense_matrix(r))
        count += 1
    return OtocAverage(n, total / count)


def moments_from_distribution(dist, n_max):
    p = dist.probabilities
    ks = dist.ks.astype(float)
    return MomentVector([float(p @ ks**i) for i in range(1, n_max + 1)])


# --- exact combinatorics -----------------------------------------------------------

def _binom(a, b):
    return comb(a, b) if 0 <= b <= a else 0


def occurrence(n, m, s, n_sites):
    """Number of weight-``n`` strings overlapping a weight-``s`` string on exactly ``m`` sites."""
    return _binom(n_sites - s, n - m) * _binom(s, m)


def case_value(n, m):
    """Signed commutation count summed over letter choices for one overlap pattern."""
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    even = sum(comb(m, 2 * i) * 4**i for i in range(m // 2 + 1))
    return -(3**n) + 2 * 3 ** (n - m) * even


def _poly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _falling_binomial(offset, sign, r):
    """``binom(offset + sign*s, r)`` as a polynomial in ``s`` (coefficients low to high)."""
    poly = [Fraction(1)]
    for j in range(r):
        poly = _poly_mul(poly, [Fraction(offset - j), Fraction(sign)])
    return [c / factorial(r) for c in poly]


@lru_cache(maxsize=None)
def otoc_sum_polynomial(n, n_sites):
    """Coefficients ``c_0..c_n`` (Fractions) of ``sum_{R in C_n} sign(Q, R)`` in ``s = s(Q)``."""
    if not 1 <= n <= n_sites:
        raise ValueError(f"n must lie in 1..{n_sites}")
    total = [Fraction(0)] * (n + 1)
    for m in range(n + 1):
        term = _poly_mul(_falling_binomial(n_sites, -1, n - m), _falling_binomial(0, 1, m))
        v = case_value(n, m)
        for i, c in enumerate(term):
            total[i] += v * c
    return tuple(total)


def evaluate_polynomial(coeffs, s):
    return sum(c * s**i for i, c in enumerate(coeffs))


def direct_commutation_sum(q, n):
    """``sum_{R in C_n} sign(Q, R)`` by enumeration; the reference for the polynomial."""
    return sum(1 - 2 * symplectic_product(q, r) for r in enumerate_weight_class(q.n_sites, n))


def amplitude(n):
    """Exact leading coefficient of ``poly_n``, independent of the system size."""
    if not 1 <= n <= MAX_AMPLITUDE_ORDER:
        raise ValueError(f"n must lie in 1..{MAX_AMPLITUDE_ORDER}")
    return sum(
        Fraction((-1) ** (n - m) * case_value(n, m), factorial(n - m) * factorial(m)) for m in range(n + 1)
    )


# --- linear relation between OTOC averages and moments ---------------------------------

def otoc_moment_coefficients(n, n_sites):
    """Exact ``alpha_n^(0..n)`` with ``M_n = alpha^(0) + sum_i alpha^(i) mu_i``."""
    dim = weight_class_dim(n_sites, n)
    return tuple(c / dim for c in otoc_sum_polynomial(n, n_sites))


def predicted_averaged_otoc(dist, n, n_sites):
    """``M_n`` implied by a weight distribution."""
    coeffs = otoc_moment_coefficients(n, n_sites)
    ks = dist.ks
    poly = np.array([float(evaluate_polynomial(coeffs, int(k))) for k in ks])
    return float(dist.probabilities @ poly)


def predicted_otoc_from_operator(w_t, n, n_sites):
    """``sum_Q |f_Q|^2 poly_n(s(Q)) / dim(C_n)`` from the Pauli expansion of ``w_t``."""
    coeffs = otoc_moment_coefficients(n, n_sites)
    f = kernels.pauli_coefficients(np.asarray(w_t, dtype=complex) / unitary_scale(n_sites))
    weights = kernels.weight_grid(n_sites)
    table = np.array([float(evaluate_polynomial(coeffs, s)) for s in range(n_sites + 1)])
    return float(np.sum(np.abs(f) ** 2 * table[weights]))


def moment_recurrence(n, n_sites):
    """Exact ``mu_n = a * M_n + b + sum_{i<n} c_i mu_i``; returns ``(a, b, (c_1..c_{n-1}))``."""
    alpha = otoc_moment_coefficients(n, n_sites)
    lead = alpha[n]
    if lead == 0:
        raise ZeroDivisionError(f"vanishing leading coefficient at n={n}")
    return 1 / lead, -alpha[0] / lead, tuple(-alpha[i] / lead for i in range(1, n))


def reconstruct_moments(otoc_averages, n_sites):
    """Moments ``mu_1..mu_n`` from ``M_1..M_n`` by exact-coefficient back-substitution.

    Fractions in, Fractions out; floats otherwise. ``conditioning`` records the
    leading coefficients ``|A_n| / dim(C_n)`` and the factor by which an error
    in ``M_n`` is amplified into ``mu_n``.
    """
    ms = list(otoc_averages)
    if not 1 <= len(ms) <= n_sites:
        raise ValueError(f"need between 1 and {n_sites} OTOC averages")
    exact = _is_exact(ms)
    mus = []
    leading, gain = [], []
    for n, m_n in enumerate(ms, start=1):
        a, b, cs = moment_recurrence(n, n_sites)
        if exact:
            mu = a * m_n + b + sum(c * mu_i for c, mu_i in zip(cs, mus))
        else:
            mu = float(a) * m_n + float(b) + sum(float(c) * mu_i for c, mu_i in zip(cs, mus))
        mus.append(mu)
        leading.append(float(abs(1 / a)))
        gain.append(float(abs(a)))
    report = {"leading_coefficient": leading, "error_gain": gain}
    return MomentVector(mus, conditioning=report)


def commutation_sum_table(n_sites):
    """``table[q_key, n]`` of signed commutation counts for every string (small ``n_sites``)."""
    return kernels.commutation_sums(n_sites)
