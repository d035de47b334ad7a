"""Tilted-field Ising chain with open boundaries and exact Heisenberg evolution."""
from dataclasses import dataclass
from math import pi

import numpy as np

from . import operators
from .errors import CapacityError, ContractViolation
from .pauli import MAX_DENSE_SITES, PauliString, dense_matrix

HERMITIAN_TOL = 1e-8


@dataclass(frozen=True)
class IsingConfig:
    n_sites: int
    theta: float
    coupling: float = 1.0
    field: float = 1.0

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError("the chain needs at least two sites")
        if not -1e-12 <= self.theta <= pi / 2 + 1e-12:
            raise ValueError(f"theta must lie in [0, pi/2], got {self.theta}")


def _site_operator(n_sites, site, letter):
    return dense_matrix(PauliString.single(n_sites, site, letter))


def build_ising(cfg):
    """``J sum Z_n Z_{n+1} + B sum (cos(theta) X_n + sin(theta) Z_n)`` with unnormalised Paulis."""
    n = cfg.n_sites
    if n > MAX_DENSE_SITES:
        raise CapacityError(f"dense Hamiltonian limited to {MAX_DENSE_SITES} sites")
    d = 1 << n
    idx = np.arange(d)
    # Z_n eigenvalue on basis state |i> is 1 - 2*bit(site n); site 1 is the top bit.
    spins = 1 - 2 * ((idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1)
    diag = cfg.coupling * np.sum(spins[:, :-1] * spins[:, 1:], axis=1)
    diag = diag + cfg.field * np.sin(cfg.theta) * spins.sum(axis=1)
    h = np.diag(diag.astype(complex))
    cx = cfg.field * np.cos(cfg.theta)
    if cx != 0.0:
        for site in range(n):
            h[idx, idx ^ (1 << site)] += cx
    return h


class Propagator:
    """Eigendecomposition of a Hermitian ``H``, reused for every time."""

    def __init__(self, hamiltonian):
        h = np.asarray(hamiltonian, dtype=complex)
        asym = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
        if asym > HERMITIAN_TOL:
            raise ContractViolation(f"Hamiltonian is not Hermitian (asymmetry {asym:.3g})")
        self.dim = h.shape[0]
        self.energies, self.vectors = np.linalg.eigh(h)

    def unitary(self, t):
        """``exp(-i H t)``."""
        return (self.vectors * np.exp(-1j * self.energies * t)) @ self.vectors.conj().T

    def heisenberg(self, op, times):
        """Yield ``exp(iHt) op exp(-iHt)`` for each ``t``, working in the eigenbasis."""
        v = self.vectors
        op_eig = v.conj().T @ np.asarray(op, dtype=complex) @ v
        for t in times:
            ph = np.exp(1j * self.energies * t)
            # (e^{iEt})_a  O_ab  (e^{-iEt})_b
            yield v @ (ph[:, None] * op_eig * ph.conj()[None, :]) @ v.conj().T


def evolve_heisenberg(hamiltonian, op0, times):
    """List of ``O(t) = e^{iHt} O e^{-iHt}`` on the grid ``times``."""
    op0 = np.asarray(op0, dtype=complex)
    prop = Propagator(hamiltonian)
    if op0.shape != (prop.dim, prop.dim):
        raise ValueError("operator and Hamiltonian dimensions differ")
    return [op0.copy() if t == 0 else ot for t, ot in zip(times, prop.heisenberg(op0, times))]


def initial_pauli(n_sites, site, axis):
    """``sigma_axis`` on ``site`` divided by ``sqrt(d)``: unit Hilbert-Schmidt norm."""
    return dense_matrix(PauliString.single(n_sites, site, axis), normalized=True)


def run_ising_experiment(cfg, site, axis, times, method="direct"):
    """Weight distributions of ``sigma_axis^(site)/sqrt(2)`` evolved under the Ising chain.

    Returns a :class:`~opscramble.operators.TimeSeries` whose rows are ``P_k(t)``.
    """
    if not 1 <= site <= cfg.n_sites:
        raise ValueError(f"site {site} outside 1..{cfg.n_sites}")
    times = np.asarray(times, dtype=float)
    op0 = initial_pauli(cfg.n_sites, site, axis)
    rows = [
        operators.weight_distribution(ot, cfg.n_sites, method=method).probabilities
        for ot in evolve_heisenberg(build_ising(cfg), op0, times)
    ]
    return operators.TimeSeries(times, np.array(rows))


def default_grid(tmax=40.0, steps=401):
    return np.linspace(0.0, tmax, steps)
