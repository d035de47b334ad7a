"""Spectral chaos indicators: adjacent-gap ratios and bulk eigenstate entanglement.

Gap ratios use the bounded form ``r_j = min(s_j, s_{j+1}) / max(s_j, s_{j+1})``
and are averaged over the number of ratios actually formed.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation

R_POISSON = 0.386
R_GOE = 0.535
R_CUE = 0.599
REFERENCE = {"POISSON": R_POISSON, "GOE": R_GOE, "CUE": R_CUE}
UNITARY_TOL = 1e-10
COMMUTATOR_TOL = 1e-10


class DegenerateSpectrumWarning(RuntimeWarning):
    """Zero spacings were found; those ratios were set to 0."""


@dataclass(frozen=True)
class SpectrumStatistics:
    r_bar: float
    r_bar_norm: float
    ensemble: str
    sector_labels: tuple = ()
    sector_sizes: tuple = ()
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "r_bar": self.r_bar,
            "r_bar_norm": self.r_bar_norm,
            "ensemble": self.ensemble,
            "sector_labels": list(self.sector_labels),
            "sector_sizes": list(self.sector_sizes),
            **self.extra,
        }


def _ratios(gaps):
    lo = np.minimum(gaps[:-1], gaps[1:])
    hi = np.maximum(gaps[:-1], gaps[1:])
    degenerate = hi == 0.0
    r = np.divide(lo, hi, out=np.zeros_like(lo), where=~degenerate)
    n_zero = int(np.count_nonzero(lo == 0.0))
    if n_zero:
        warnings.warn(f"{n_zero} ratio(s) involve a zero spacing", DegenerateSpectrumWarning, stacklevel=3)
    return r


def gap_ratio(levels):
    """Mean bounded gap ratio of a sorted spectrum (at least 4 levels)."""
    e = np.asarray(levels, dtype=float)
    if e.ndim != 1 or e.size < 4:
        raise ValueError("need a vector of at least 4 levels")
    gaps = np.diff(e)
    if np.any(gaps < 0):
        raise ValueError("levels must be sorted ascending")
    return float(np.mean(_ratios(gaps)))


def eigenphases(u):
    u = np.asarray(u, dtype=complex)
    dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if dev > UNITARY_TOL:
        raise ContractViolation(f"matrix is not unitary (deviation {dev:.3g})")
    return np.sort(np.angle(np.linalg.eigvals(u)))


def floquet_gap_ratio(u):
    """Mean gap ratio of the eigenphases of a unitary, treated cyclically.

    All ``d`` gaps (including the one across ``-pi/pi``) enter, and the ratios
    run around the circle, so a global phase leaves the result unchanged.
    """
    phi = eigenphases(u)
    if phi.size < 4:
        raise ValueError("need a unitary of dimension at least 4")
    gaps = np.append(np.diff(phi), 2 * np.pi - (phi[-1] - phi[0]))
    return float(np.mean(_ratios(np.append(gaps, gaps[0]))))


def normalize_gap_ratio(r, ensemble="GOE"):
    """``(r - r_POI) / (r_RMT - r_POI)``."""
    ref = REFERENCE[ensemble.upper()]
    return (r - R_POISSON) / (ref - R_POISSON)


# --- entanglement ----------------------------------------------------------------

def entanglement_entropy(states, n_sites, n_left=None):
    """Von Neumann entropy (natural log) of the first ``n_left`` sites.

    ``states`` is a single state vector or an array of column vectors.
    """
    psi = np.asarray(states, dtype=complex)
    single = psi.ndim == 1
    if single:
        psi = psi[:, None]
    n_left = n_sites // 2 if n_left is None else n_left
    da, db = 1 << n_left, 1 << (n_sites - n_left)
    if psi.shape[0] != da * db:
        raise ValueError("state dimension does not match n_sites")
    # column c reshaped to (da, db): site 1 is the top bit, so the first n_left sites lead
    mats = psi.T.reshape(-1, da, db)
    sv = np.linalg.svd(mats, compute_uv=False)
    p = sv**2
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 1e-300, -p * np.log(p), 0.0)
    s = terms.sum(axis=1)
    return float(s[0]) if single else s


def bulk_entanglement_entropy(h, n_sites, bulk_fraction=0.5):
    """Mean half-chain entropy over the central ``bulk_fraction`` of eigenstates."""
    if n_sites % 2:
        raise ValueError("equal bipartition needs an even number of sites")
    if not 0.0 < bulk_fraction <= 1.0:
        raise ValueError("bulk_fraction must lie in (0, 1]")
    h = np.asarray(h, dtype=complex)
    if np.max(np.abs(h - h.conj().T)) > 1e-8:
        raise ContractViolation("Hamiltonian is not Hermitian")
    _, vecs = np.linalg.eigh(h)
    d = h.shape[0]
    count = max(1, int(round(bulk_fraction * d)))
    start = (d - count) // 2
    return float(np.mean(entanglement_entropy(vecs[:, start:start + count], n_sites)))


# --- reflection symmetry ---------------------------------------------------------

def reflection_permutation(n_sites):
    """Index map of the site-reversal ``n -> N + 1 - n`` on computational states."""
    idx = np.arange(1 << n_sites)
    out = np.zeros_like(idx)
    for b in range(n_sites):
        out |= ((idx >> b) & 1) << (n_sites - 1 - b)
    return out


def reflection_isometries(n_sites):
    """Orthonormal columns spanning the even and odd reflection sectors."""
    perm = reflection_permutation(n_sites)
    d = 1 << n_sites
    even, odd = [], []
    for i in range(d):
        j = perm[i]
        if j < i:
            continue
        if j == i:
            even.append({i: 1.0})
        else:
            r = 1 / np.sqrt(2.0)
            even.append({i: r, j: r})
            odd.append({i: r, j: -r})

    def dense(cols):
        m = np.zeros((d, len(cols)))
        for c, entries in enumerate(cols):
            for row, v in entries.items():
                m[row, c] = v
        return m

    return dense(even), dense(odd)


def reflection_desymmetrize(h, n_sites):
    """``(H_even, H_odd)``: ``H`` restricted to the two reflection-parity sectors."""
    h = np.asarray(h, dtype=complex)
    perm = reflection_permutation(n_sites)
    # R H R^T has entries H[perm[a], perm[b]]
    comm = np.max(np.abs(h[np.ix_(perm, perm)] - h))
    if comm > COMMUTATOR_TOL:
        raise ContractViolation(f"H does not commute with reflection (norm {comm:.3g})")
    pe, po = reflection_isometries(n_sites)
    return pe.T @ h @ pe, po.T @ h @ po


def sector_gap_ratio(blocks):
    """Dimension-weighted mean of per-block gap ratios (blocks under 4 levels skipped)."""
    rs, ws = [], []
    for b in blocks:
        if b.shape[0] >= 4:
            rs.append(gap_ratio(np.linalg.eigvalsh(b)))
            ws.append(b.shape[0])
    if not rs:
        raise ValueError("no sector has enough levels")
    return float(np.average(rs, weights=ws))


def hamiltonian_statistics(h, n_sites, desymmetrize="reflection"):
    if desymmetrize == "reflection":
        blocks = reflection_desymmetrize(h, n_sites)
        labels = ("even", "odd")
    elif desymmetrize == "none":
        blocks = (np.asarray(h, dtype=complex),)
        labels = ("all",)
    else:
        raise ValueError(f"unknown desymmetrization {desymmetrize!r}")
    r = sector_gap_ratio(blocks)
    return SpectrumStatistics(r, normalize_gap_ratio(r, "GOE"), "GOE", labels, tuple(b.shape[0] for b in blocks))


def floquet_statistics(u):
    r = floquet_gap_ratio(u)
    return SpectrumStatistics(r, normalize_gap_ratio(r, "CUE"), "CUE", ("all",), (u.shape[0],))


# --- reference ensembles ---------------------------------------------------------

def sample_goe(dim, rng):
    a = np.random.default_rng(rng).standard_normal((dim, dim))
    return (a + a.T) / 2


def poisson_levels(count, rng):
    return np.cumsum(np.random.default_rng(rng).exponential(size=count))
