"""Haar-random predictions for coarse-grained operator distributions.

Under a Haar-random unitary a traceless operator spreads uniformly over the
operator basis, so ``E[P_k] = dim(C_k) / (d**2 - 1)``. Mean and second moment
below are the closed forms; the per-class vector ``pk`` is built
independently from the class dimensions so the two can be cross-checked.
"""
from dataclasses import dataclass, field
from math import comb

import numpy as np


@dataclass(frozen=True)
class HaarPrediction:
    mean: float
    second_moment: float
    ipr: float
    ipr_leading: float
    pk: np.ndarray = field(repr=False)
    dims: tuple = field(repr=False, default=())

    @property
    def variance(self):
        return self.second_moment - self.mean**2


def porter_thomas_correction(d):
    """Second IPR term from treating each ``P_k`` as Porter-Thomas distributed."""
    d2 = d * d
    return (d2 - 2) / ((d2 - 1) * d2)


def spin_half_dims(n_sites):
    return [comb(n_sites, k) * 3**k for k in range(1, n_sites + 1)]


def sum_squared_spin_half_dims(n_sites):
    """``2F1(-N, -N; 1; 9) - 1`` as an exact integer: sum_k binom(N,k)^2 9^k minus the k=0 term."""
    return sum(comb(n_sites, k) ** 2 * 9**k for k in range(n_sites + 1)) - 1


def haar_spin_half(n_sites):
    """Pauli-weight prediction for ``n_sites`` qubits."""
    if not 1 <= n_sites <= 20:
        raise ValueError(f"n_sites must be in 1..20, got {n_sites}")
    d2 = 4**n_sites
    dims = spin_half_dims(n_sites)
    pk = np.array([c / (d2 - 1) for c in dims])
    ratio = d2 / (d2 - 1)
    mean = 0.75 * n_sites * ratio
    second = 3.0 / 16.0 * n_sites * (3 * n_sites + 1) * ratio
    leading = sum_squared_spin_half_dims(n_sites) / (d2 - 1) ** 2
    return HaarPrediction(
        mean=mean,
        second_moment=second,
        ipr=leading + porter_thomas_correction(2**n_sites),
        ipr_leading=leading,
        pk=pk,
        dims=tuple(dims),
    )


def haar_collective(n):
    """Tensor-rank prediction for a collective spin ``J = n/2`` (dimension ``n + 1``)."""
    if not 1 <= n <= 100_000:
        raise ValueError(f"n must be in 1..100000, got {n}")
    d = n + 1
    dims = [2 * k + 1 for k in range(1, n + 1)]
    pk = np.array(dims, dtype=float) / (d * d - 1)
    mean = (4 * n + 5) * (n + 1) / (6 * (n + 2))
    second = (n * (3 * n + 5) + 1) * (n + 1) / (6 * (n + 2))
    leading = (4 * d**3 - d - 3) / (3 * (d * d - 1) ** 2)
    return HaarPrediction(
        mean=mean,
        second_moment=second,
        ipr=leading + porter_thomas_correction(d),
        ipr_leading=leading,
        pk=pk,
        dims=tuple(dims),
    )


def sample_haar_unitary(dim, rng):
    """Haar-distributed ``dim x dim`` unitary (QR of a Ginibre matrix with phase fix).

    ``rng`` is a ``numpy.random.Generator`` or anything ``default_rng`` accepts.
    """
    if dim < 2:
        raise ValueError("dim must be at least 2")
    rng = np.random.default_rng(rng)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))[None, :]
