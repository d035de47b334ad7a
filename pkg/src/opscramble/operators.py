"""Operator expansions, coarse-grained distributions and their long-time statistics.

Dense operators are plain complex ``numpy`` arrays. A distribution is indexed
by the complexity class ``k = 1 .. k_max`` (Pauli weight or tensor rank); the
``k = 0`` class (identity) is excluded because every operator handled here is
traceless.
"""
import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ContractViolation

TRACE_TOL = 1e-10
NORM_TOL = 1e-8
SUM_TOL = 1e-9


@dataclass(frozen=True)
class OperatorDistribution:
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probabilities must be a non-empty vector")
        if p.min() < -1e-12 or p.max() > 1 + 1e-12:
            raise ContractViolation("probabilities outside [0, 1]")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise ContractViolation(f"probabilities sum to {p.sum():.15g}, not 1")
        object.__setattr__(self, "probabilities", p)

    @property
    def k_max(self):
        return self.probabilities.size

    @property
    def ks(self):
        return np.arange(1, self.k_max + 1)

    def __getitem__(self, k):
        """``dist[k]`` is ``P_k`` with 1-based ``k``."""
        if not 1 <= k <= self.k_max:
            raise IndexError(k)
        return self.probabilities[k - 1]


@dataclass(frozen=True)
class DistributionMeasures:
    mean: float
    variance: float
    ipr: float


@dataclass
class TimeSeries:
    """Sampled signal on a strictly increasing grid.

    ``values`` is either a vector (one scalar per time) or a ``(T, k_max)``
    array of distributions, one row per time.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or len(self.times) != len(self.values):
            raise ValueError("times and values must have matching lengths")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def distribution(self, i):
        return OperatorDistribution(self.values[i])

    def measures(self):
        """Mean, variance and IPR along the series, as three scalar series."""
        p = self.values
        ks = np.arange(1, p.shape[1] + 1)
        mean = p @ ks
        variance = p @ ks**2 - mean**2
        ipr = np.sum(p**2, axis=1)
        return {
            "mean": TimeSeries(self.times, mean),
            "variance": TimeSeries(self.times, variance),
            "ipr": TimeSeries(self.times, ipr),
        }


def expansion_coefficient(basis_element, op):
    """``Tr(basis_element^dag op)``."""
    a = np.asarray(basis_element)
    b = np.asarray(op)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def _check_traceless_normalized(op):
    tr = np.trace(op)
    if abs(tr) > TRACE_TOL:
        raise ContractViolation(f"operator is not traceless (trace {tr:.3g})")
    norm = np.vdot(op, op).real
    if abs(norm - 1.0) > NORM_TOL:
        raise ContractViolation(f"operator is not unit-normalised (Tr(O^dag O) = {norm:.12g})")
    return norm


def weight_distribution(op, n_sites, method="direct"):
    """Pauli-weight distribution ``P_k``, k = 1..n_sites, of a traceless unit-norm operator."""
    op = np.asarray(op, dtype=complex)
    d = 1 << n_sites
    if op.shape != (d, d):
        raise ValueError(f"operator shape {op.shape} does not match {n_sites} sites")
    norm = _check_traceless_normalized(op)
    coeffs = kernels.pauli_coefficients(op, method=method)
    by_weight = np.bincount(
        kernels.weight_grid(n_sites).ravel(), weights=np.abs(coeffs.ravel()) ** 2, minlength=n_sites + 1
    )
    return OperatorDistribution(by_weight[1:] / norm)


def measures(dist):
    p = dist.probabilities
    ks = dist.ks
    mean = float(p @ ks)
    return DistributionMeasures(mean, float(p @ ks**2 - mean**2), float(p @ p))


def _window(times, values, t0, tf):
    """Restrict a sampled signal to ``[t0, tf]``, interpolating the endpoints."""
    if not t0 < tf:
        raise ValueError("need t0 < tf")
    lo, hi = max(t0, times[0]), min(tf, times[-1])
    if not lo < hi:
        raise ValueError(f"window [{t0}, {tf}] does not overlap [{times[0]}, {times[-1]}]")
    inside = (times > lo) & (times < hi)
    t = np.concatenate(([lo], times[inside], [hi]))
    v = np.concatenate(([np.interp(lo, times, values)], values[inside], [np.interp(hi, times, values)]))
    return t, v


def _as_arrays(series):
    if isinstance(series, TimeSeries):
        return series.times, series.values
    times, values = series
    return np.asarray(times, dtype=float), np.asarray(values, dtype=float)


def time_average(series, t0, tf):
    """Trapezoid average of a scalar series over ``[t0, tf]``.

    The window is clipped to the sampled domain and the integral divided by
    the clipped length.
    """
    t, v = _window(*_as_arrays(series), t0, tf)
    return float(np.trapezoid(v, t) / (t[-1] - t[0]))


def temporal_fluctuation(series, t0, tf):
    """Root of the time-averaged squared deviation from the time average."""
    times, values = _as_arrays(series)
    avg = time_average((times, values), t0, tf)
    return float(np.sqrt(max(time_average((times, (values - avg) ** 2), t0, tf), 0.0)))


def _fmt(x):
    return f"{x:.12g}"


def write_distribution_csv(path, series):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "k", "p_k"])
        for t, row in zip(series.times, series.values):
            for k, p in enumerate(row, start=1):
                w.writerow([_fmt(t), k, _fmt(p)])


def write_measures_csv(path, series):
    m = series.measures()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "mean", "variance", "ipr"])
        for i, t in enumerate(series.times):
            w.writerow([_fmt(t), _fmt(m["mean"].values[i]), _fmt(m["variance"].values[i]), _fmt(m["ipr"].values[i])])


def read_distribution_csv(path):
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times = np.unique(rows[:, 0])
    k_max = int(rows[:, 1].max())
    return TimeSeries(times, rows[:, 2].reshape(len(times), k_max))
