"""Hot numeric kernels.

The loop kernels (Walsh-Hadamard transform, exhaustive commutation sums)
exist twice: compiled with ``numba.njit`` and as vectorised numpy. The public
names dispatch according to ``opscramble._accel.USE_NUMBA``; both versions stay
importable so the benchmark and the agreement tests can call them side by side.
The direct Pauli decomposition is a single BLAS product and has no loop form.

Bit conventions shared with :mod:`opscramble.pauli`: for ``n`` sites the
computational basis index carries site 1 in its most significant bit, and a
Pauli string is the pair of masks ``(x, z)`` with the same bit layout, its
matrix being ``i**popcount(x & z) * X**x Z**z``.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

# conj(i**k) for k = 0..3
_CONJ_I_POWERS = np.array([1.0, -1.0j, -1.0, 1.0j], dtype=np.complex128)

_BYTE_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def popcount(a):
    """Elementwise popcount of a nonnegative integer array (up to 63 bits)."""
    a = np.asarray(a, dtype=np.int64)
    out = np.zeros(a.shape, dtype=np.int64)
    for shift in range(0, 64, 8):
        out += _BYTE_POPCOUNT[(a >> shift) & 0xFF]
    return out


def weight_grid(n_sites):
    """``w[x, z] = popcount(x | z)``: the Pauli weight of every string."""
    d = 1 << n_sites
    idx = np.arange(d, dtype=np.int64)
    return popcount(idx[:, None] | idx[None, :])


def sylvester_hadamard(n_sites):
    """Unnormalised Hadamard matrix ``H[j, z] = (-1)**popcount(j & z)``."""
    d = 1 << n_sites
    idx = np.arange(d, dtype=np.int64)
    return 1.0 - 2.0 * (popcount(idx[:, None] & idx[None, :]) & 1)


# ---------------------------------------------------------------------------
# Pauli decomposition of a dense operator
# ---------------------------------------------------------------------------

@njit
def _popcount_scalar(v):
    c = 0
    while v:
        v &= v - 1
        c += 1
    return c


def _diagonal_stripes(op):
    """``W[x, j] = op[j ^ x, j]``: the entries each X-mask touches."""
    d = op.shape[0]
    idx = np.arange(d, dtype=np.int64)
    return op[idx[None, :] ^ idx[:, None], idx[None, :]]


def _phase_and_scale(raw, n_sites):
    d = raw.shape[0]
    idx = np.arange(d, dtype=np.int64)
    y = popcount(idx[:, None] & idx[None, :]) & 3
    return raw * _CONJ_I_POWERS[y] / np.sqrt(d)


def pauli_coefficients_direct(op):
    """Every trace as one row of a Hadamard-matrix product: O(d^3), BLAS bound."""
    op = np.asarray(op, dtype=np.complex128)
    n_sites = op.shape[0].bit_length() - 1
    raw = _diagonal_stripes(op) @ sylvester_hadamard(n_sites)
    return _phase_and_scale(raw, n_sites)


@njit
def walsh_hadamard_numba(a):
    """In-place unnormalised Walsh-Hadamard transform along the last axis."""
    rows, d = a.shape
    for r in range(rows):
        h = 1
        while h < d:
            for start in range(0, d, 2 * h):
                for j in range(start, start + h):
                    lo = a[r, j]
                    hi = a[r, j + h]
                    a[r, j] = lo + hi
                    a[r, j + h] = lo - hi
            h *= 2
    return a


def walsh_hadamard_numpy(a):
    """Unnormalised Walsh-Hadamard transform along the last axis (returns a new array)."""
    rows, d = a.shape
    n_sites = d.bit_length() - 1
    # the last reshape axis is the least significant bit, matching the numba loop
    a = a.reshape((rows,) + (2,) * n_sites)
    for axis in range(1, n_sites + 1):
        lo = np.take(a, 0, axis=axis)
        hi = np.take(a, 1, axis=axis)
        a = np.stack((lo + hi, lo - hi), axis=axis)
    return a.reshape(rows, d)


def walsh_hadamard(a):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if USE_NUMBA:
        return walsh_hadamard_numba(a.copy())
    return walsh_hadamard_numpy(a)


def pauli_coefficients_fast(op):
    """Walsh-Hadamard route: O(d^2 log d) instead of O(d^3)."""
    op = np.asarray(op, dtype=np.complex128)
    n_sites = op.shape[0].bit_length() - 1
    return _phase_and_scale(walsh_hadamard(_diagonal_stripes(op)), n_sites)


def pauli_coefficients(op, method="direct"):
    """All normalised-Pauli expansion coefficients ``Tr(Q_{x,z}^dag op)``.

    Returns a ``(d, d)`` complex array indexed by ``[x_mask, z_mask]``.
    ``method="direct"`` evaluates every trace on its own; ``"fast"`` uses the
    Walsh-Hadamard factorisation.
    """
    op = np.ascontiguousarray(op, dtype=np.complex128)
    d = op.shape[0]
    if op.shape != (d, d) or d & (d - 1):
        raise ValueError(f"expected a 2^n x 2^n matrix, got shape {op.shape}")
    if method == "fast":
        return pauli_coefficients_fast(op)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    return pauli_coefficients_direct(op)


# ---------------------------------------------------------------------------
# Exhaustive symplectic sign sums  S[q, n] = sum_{r : weight(r) = n} (-1)^<q, r>
# ---------------------------------------------------------------------------

@njit
def commutation_sums_numba(n_sites):
    d = 1 << n_sites
    total = d * d
    out = np.zeros((total, n_sites + 1), dtype=np.int64)
    for q in range(total):
        xq = q // d
        zq = q % d
        for r in range(total):
            xr = r // d
            zr = r % d
            w = _popcount_scalar(xr | zr)
            if (_popcount_scalar(xq & zr) + _popcount_scalar(zq & xr)) & 1:
                out[q, w] -= 1
            else:
                out[q, w] += 1
    return out


def commutation_sums_numpy(n_sites):
    d = 1 << n_sites
    keys = np.arange(d * d, dtype=np.int64)
    xs, zs = keys // d, keys % d
    r_weight = popcount(xs | zs)
    out = np.zeros((d * d, n_sites + 1), dtype=np.int64)
    chunk = max(1, (1 << 22) // (d * d))
    for start in range(0, d * d, chunk):
        xq = xs[start:start + chunk, None]
        zq = zs[start:start + chunk, None]
        sign = 1 - 2 * ((popcount(xq & zs[None, :]) + popcount(zq & xs[None, :])) & 1)
        for w in range(n_sites + 1):
            out[start:start + chunk, w] = sign[:, r_weight == w].sum(axis=1)
    return out


def commutation_sums(n_sites):
    """For every Pauli key ``q = x*d + z``, sum of commutation signs with each weight class.

    Row ``q``, column ``n`` holds ``sum over weight-n strings r of (-1)**sympl(q, r)``.
    """
    if n_sites > 6:
        raise ValueError("exhaustive enumeration is limited to n_sites <= 6")
    if USE_NUMBA:
        return commutation_sums_numba(n_sites)
    return commutation_sums_numpy(n_sites)
