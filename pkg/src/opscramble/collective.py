"""Collective spin ``J``: spherical tensor operators and the quantum kicked top.

Dicke basis ordering is ``m = J, J-1, ..., -J`` (row/column 0 is ``m = J``).
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, sqrt

import numpy as np

from . import operators
from .errors import CapacityError, ContractViolation

MAX_DIM = 512
DEFAULT_ALPHAS = (1.7, 1.0, 0.8)
DEFAULT_GAMMA_SCALES = (0.85, 0.9, 1.0)


def _twice(value):
    """``2 * value`` as an int; raises unless ``value`` is a half-integer."""
    try:
        tw = 2 * Fraction(value)
    except (TypeError, ValueError):
        raise ValueError(f"{value!r} is not a half-integer") from None
    if tw.denominator != 1:
        raise ValueError(f"{value!r} is not a half-integer")
    return int(tw)


@lru_cache(maxsize=None)
def _fact(n):
    return factorial(n)


def _cg_exact(tj1, tm1, tj2, tm2, tj, tm):
    """Clebsch-Gordan coefficient from twice-valued quantum numbers.

    Returns ``(numerator, denominator, radicand)`` with the coefficient equal to
    ``numerator / denominator * sqrt(radicand)``, ``radicand`` a Fraction.
    """
    if tm1 + tm2 != tm:
        return 0, 1, Fraction(0)
    if not (abs(tj1 - tj2) <= tj <= tj1 + tj2) or (tj1 + tj2 + tj) % 2:
        return 0, 1, Fraction(0)
    for j, m in ((tj1, tm1), (tj2, tm2), (tj, tm)):
        if abs(m) > j or (j + m) % 2:
            return 0, 1, Fraction(0)
    # all the half-sums below are integers once the parity checks pass
    a = (tj1 + tj2 - tj) // 2
    b = (tj1 - tm1) // 2
    c = (tj2 + tm2) // 2
    e = (tj - tj2 + tm1) // 2
    f = (tj - tj1 - tm2) // 2
    radicand = Fraction(
        (tj + 1) * _fact((tj + tj1 - tj2) // 2) * _fact((tj - tj1 + tj2) // 2) * _fact(a)
        * _fact((tj + tm) // 2) * _fact((tj - tm) // 2)
        * _fact((tj1 - tm1) // 2) * _fact((tj1 + tm1) // 2)
        * _fact((tj2 - tm2) // 2) * _fact((tj2 + tm2) // 2),
        _fact((tj1 + tj2 + tj) // 2 + 1),
    )
    kmin = max(0, -e, -f)
    kmax = min(a, b, c)
    if kmin > kmax:
        return 0, 1, Fraction(0)
    # common denominator: every term's factorials divide these
    denom = _fact(kmax) * _fact(a - kmin) * _fact(b - kmin) * _fact(c - kmin) * _fact(e + kmax) * _fact(f + kmax)
    num = 0
    for k in range(kmin, kmax + 1):
        term = denom // (
            _fact(k) * _fact(a - k) * _fact(b - k) * _fact(c - k) * _fact(e + k) * _fact(f + k)
        )
        num += -term if k % 2 else term
    return num, denom, radicand


def clebsch_gordan(j1, m1, j2, m2, j, m):
    """``<j1 m1, j2 m2 | j m>`` in the Condon-Shortley convention."""
    args = [_twice(v) for v in (j1, m1, j2, m2, j, m)]
    num, den, rad = _cg_exact(*args)
    if num == 0:
        return 0.0
    return num / den * sqrt(float(rad))


def clebsch_gordan_squared(j1, m1, j2, m2, j, m):
    """Exact ``(sign, C**2)`` for verification against other rational routes."""
    num, den, rad = _cg_exact(*[_twice(v) for v in (j1, m1, j2, m2, j, m)])
    sign = (num > 0) - (num < 0)
    return sign, Fraction(num * num, den * den) * rad


def spin_matrices(spin):
    """``(Jz, J+, J-, Jx, Jy)`` for spin ``J`` in the ``m = J..-J`` ordering."""
    tj = _twice(spin)
    d = tj + 1
    ms = np.array([(tj - 2 * a) / 2 for a in range(d)])
    jz = np.diag(ms).astype(complex)
    jp = np.zeros((d, d), dtype=complex)
    j = tj / 2
    for a in range(1, d):
        m = ms[a]
        jp[a - 1, a] = sqrt(j * (j + 1) - m * (m + 1))
    jm = jp.conj().T
    return jz, jp, jm, (jp + jm) / 2, (jp - jm) / 2j


class SphericalTensorBasis:
    """All ``T_LM`` for one spin, ``0 <= L <= 2J``, ``|M| <= L``.

    ``tensors[index(L, M)]`` is the ``d x d`` matrix of ``T_LM``; the ordering
    runs over ``L`` ascending and then ``M = -L..L``.
    """

    def __init__(self, spin, tensors):
        self.spin = spin
        self.dim = _twice(spin) + 1
        self.tensors = np.asarray(tensors, dtype=complex)
        if self.tensors.shape != (self.dim**2, self.dim, self.dim):
            raise ValueError("tensor array has the wrong shape")
        self.ranks = np.concatenate([np.full(2 * L + 1, L) for L in range(self.dim)])
        self._rows = self.tensors.reshape(self.dim**2, -1).conj()

    @staticmethod
    def index(L, M):
        return L * L + L + M

    def __getitem__(self, key):
        L, M = key
        if not (0 <= L < self.dim and abs(M) <= L):
            raise KeyError(key)
        return self.tensors[self.index(L, M)]

    def __len__(self):
        return len(self.tensors)

    def coefficients(self, op):
        """``Tr(T_LM^dag op)`` for every tensor, in basis order."""
        return self._rows @ np.asarray(op, dtype=complex).ravel()

    def save(self, path):
        np.savez_compressed(path, spin_twice=_twice(self.spin), tensors=self.tensors)

    @classmethod
    def load(cls, path):
        with np.load(path) as data:
            return cls(Fraction(int(data["spin_twice"]), 2), data["tensors"])


def _basis_from_cg(spin):
    tj = _twice(spin)
    d = tj + 1
    out = np.zeros((d * d, d, d))
    for L in range(d):
        pref = sqrt((2 * L + 1) / d)
        for M in range(-L, L + 1):
            t = out[SphericalTensorBasis.index(L, M)]
            for a in range(d):  # row: m = J - a
                tm = tj - 2 * a
                tmp = tm - 2 * M  # column m' = m - M
                if abs(tmp) > tj:
                    continue
                num, den, rad = _cg_exact(tj, tmp, 2 * L, 2 * M, tj, tm)
                if num:
                    t[a, (tj - tmp) // 2] = pref * num / den * sqrt(float(rad))
    return out.astype(complex)


def _basis_from_lowering(spin):
    # Every T_LM is real here. The commutator recursion cancels large terms,
    # so it runs in extended precision.
    tj = _twice(spin)
    d = tj + 1
    ext = np.longdouble
    jp = np.zeros((d, d), dtype=ext)
    for a in range(1, d):
        # <m+1| J+ |m> with m = J - a, in units of 1/4: (2J - 2m)(2J + 2m + 2)
        tm = tj - 2 * a
        jp[a - 1, a] = np.sqrt(ext((tj - tm) * (tj + tm + 2)) / 4)
    jm = jp.T.copy()
    out = np.zeros((d * d, d, d), dtype=complex)
    power = np.eye(d, dtype=ext)
    for L in range(d):
        top = (-1) ** L * power
        top = top / np.sqrt(np.sum(top * top))
        out[SphericalTensorBasis.index(L, L)] = top.astype(float)
        t = top
        for M in range(L, -L, -1):
            t = (jm @ t - t @ jm) / np.sqrt(ext((L + M) * (L - M + 1)))
            out[SphericalTensorBasis.index(L, M - 1)] = t.astype(float)
        power = power @ jp
    return out


@lru_cache(maxsize=8)
def _cached_basis(tj, method):
    spin = Fraction(tj, 2)
    tensors = _basis_from_cg(spin) if method == "cg" else _basis_from_lowering(spin)
    tensors.setflags(write=False)
    return tensors


def build_tensor_basis(spin, method="cg"):
    """Spherical tensor basis by direct Clebsch-Gordan evaluation or by lowering from ``T_LL``."""
    tj = _twice(spin)
    if tj < 0 or tj + 1 > MAX_DIM:
        raise CapacityError(f"spin {spin} exceeds the {MAX_DIM}-dimensional guard")
    if method not in ("cg", "lowering"):
        raise ValueError(f"unknown method {method!r}")
    return SphericalTensorBasis(Fraction(tj, 2), _cached_basis(tj, method))


def rank_distribution(op, basis):
    """Rank distribution ``P_k``, k = 1..2J, normalised by ``Tr(op^dag op)``."""
    op = np.asarray(op, dtype=complex)
    if op.shape != (basis.dim, basis.dim):
        raise ValueError(f"operator shape {op.shape} does not match spin dimension {basis.dim}")
    tr = np.trace(op)
    if abs(tr) > operators.TRACE_TOL * max(1.0, np.sqrt(np.vdot(op, op).real)):
        raise ContractViolation(f"operator is not traceless (trace {tr:.3g})")
    weights = np.abs(basis.coefficients(op)) ** 2
    by_rank = np.bincount(basis.ranks, weights=weights, minlength=basis.dim)
    return operators.OperatorDistribution(by_rank[1:] / np.vdot(op, op).real)


@dataclass(frozen=True)
class QKTConfig:
    spin: Fraction
    alphas: tuple = DEFAULT_ALPHAS
    gammas: tuple = (0.0, 0.0, 0.0)

    @classmethod
    def standard(cls, n, gamma):
        """``J = n/2`` with the standard twisting/turning parameters scaled by ``gamma``."""
        return cls(Fraction(n, 2), DEFAULT_ALPHAS, tuple(s * gamma for s in DEFAULT_GAMMA_SCALES))

    @property
    def dim(self):
        return _twice(self.spin) + 1


def _expm_hermitian(gen):
    w, v = np.linalg.eigh(gen)
    return (v * np.exp(-1j * w)) @ v.conj().T


def build_qkt_unitary(cfg):
    """``U_z U_y U_x`` with ``U_mu = exp(-i (alpha_mu J_mu + gamma_mu / (2J) J_mu^2))``."""
    jz, _, _, jx, jy = spin_matrices(cfg.spin)
    j = float(cfg.spin)
    factors = []
    for jmu, alpha, gamma in zip((jx, jy, jz), cfg.alphas, cfg.gammas):
        factors.append(_expm_hermitian(alpha * jmu + gamma / (2 * j) * (jmu @ jmu)))
    ux, uy, uz = factors
    return uz @ uy @ ux


def initial_collective(spin, which):
    jz, _, _, jx, jy = spin_matrices(spin)
    op = {"jz": jz, "jy": jy, "jx": jx}[which.lower()]
    return op / np.sqrt(np.vdot(op, op).real)


def run_qkt_experiment(cfg, initial="jz", n_kicks=200, basis=None, method="cg"):
    """Stroboscopic rank distributions ``P_k`` at kicks ``0..n_kicks``."""
    if n_kicks < 1:
        raise ValueError("n_kicks must be at least 1")
    basis = basis or build_tensor_basis(cfg.spin, method=method)
    u = build_qkt_unitary(cfg)
    ud = u.conj().T
    op = initial_collective(cfg.spin, initial)
    rows = [rank_distribution(op, basis).probabilities]
    for _ in range(n_kicks):
        op = ud @ op @ u
        rows.append(rank_distribution(op, basis).probabilities)
    return operators.TimeSeries(np.arange(n_kicks + 1, dtype=float), np.array(rows))
