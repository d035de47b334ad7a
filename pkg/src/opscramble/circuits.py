"""Random Clifford+T circuits and exact Heisenberg propagation of Pauli sums.

Gate sites are 1-based. A layer is an ordered gate list made of up to three
moments: one H or S on every site, CX gates on disjoint random pairs, and an
optional T gate. Gates inside a moment act on disjoint sites.

Propagation is layer by layer: after layer ``t`` the operator is
``L_t^dag ... L_1^dag O L_1 ... L_t``, i.e. each new layer conjugates the
current operator. Within a layer the gates act in list order, so
``L = g_k ... g_1``. ``dense_circuit_experiment`` follows the same convention.
"""
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from . import kernels, operators
from .errors import CapacityError, ContractViolation
from .pauli import PauliString, dense_matrix, from_key

MAX_TERMS = 1 << 22
_INV_SQRT2 = 1.0 / sqrt(2.0)
_SINGLE = {"H": np.array([[1, 1], [1, -1]]) / sqrt(2.0),
           "S": np.diag([1, 1j]),
           "T": np.diag([1, np.exp(1j * np.pi / 4)])}


@dataclass(frozen=True)
class Gate:
    kind: str
    sites: tuple

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
        if self.kind not in ("H", "S", "T", "CX"):
            raise ValueError(f"unknown gate {self.kind!r}")
        want = 2 if self.kind == "CX" else 1
        if len(self.sites) != want or len(set(self.sites)) != want:
            raise ValueError(f"{self.kind} needs {want} distinct site(s), got {self.sites}")


@dataclass(frozen=True)
class CircuitInstance:
    n_sites: int
    layers: tuple
    p_t: float
    seed: int
    strategy: str = "hs-cx"

    @property
    def depth(self):
        return len(self.layers)

    def count(self, kind):
        return sum(g.kind == kind for layer in self.layers for g in layer)

    def to_json(self):
        return json.dumps({
            "n_sites": self.n_sites, "p_t": self.p_t, "seed": self.seed, "strategy": self.strategy,
            "layers": [[[g.kind, *g.sites] for g in layer] for layer in self.layers],
        })

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        layers = tuple(tuple(Gate(g[0], g[1:]) for g in layer) for layer in data["layers"])
        return cls(data["n_sites"], layers, data["p_t"], data["seed"], data.get("strategy", "hs-cx"))


def instance_seed(master, index):
    """Per-instance 64-bit seed derived from ``(master, index)``."""
    return int(np.random.SeedSequence([master, index]).generate_state(1, np.uint64)[0])


def _layer_hs_cx(rng, n_sites, p_t):
    gates = [Gate("H" if rng.random() < 0.5 else "S", (s,)) for s in range(1, n_sites + 1)]
    perm = rng.permutation(n_sites) + 1
    for i in range(n_sites // 2):
        if rng.random() < 0.5:
            gates.append(Gate("CX", (perm[2 * i], perm[2 * i + 1])))
    if rng.random() < p_t:
        gates.append(Gate("T", (int(rng.integers(1, n_sites + 1)),)))
    return tuple(gates)


SAMPLERS = {"hs-cx": _layer_hs_cx}


def sample_circuit(n_sites, depth, p_t, seed, strategy="hs-cx"):
    """Random layered circuit; a deterministic function of ``seed``."""
    if not 0.0 <= p_t <= 1.0:
        raise ValueError(f"p_t must lie in [0, 1], got {p_t}")
    if n_sites < 1 or depth < 0:
        raise ValueError("need n_sites >= 1 and depth >= 0")
    rng = np.random.default_rng(seed)
    layer = SAMPLERS[strategy]
    layers = tuple(layer(rng, n_sites, p_t) for _ in range(depth))
    return CircuitInstance(n_sites, layers, p_t, seed, strategy)


class PauliSum:
    """Real combination of Hermitian Pauli strings, stored as parallel arrays.

    ``keys`` are phase-free string indices ``x * 2**n + z``; each key stands
    for the Hermitian string with that letter content.
    """

    def __init__(self, n_sites, keys, coeffs):
        self.n_sites = n_sites
        self.keys = np.asarray(keys, dtype=np.int64)
        self.coeffs = np.asarray(coeffs, dtype=float)

    @classmethod
    def single(cls, n_sites, site, axis):
        return cls(n_sites, [PauliString.single(n_sites, site, axis).key], [1.0])

    @classmethod
    def from_terms(cls, n_sites, terms):
        """From ``{PauliString or label: coefficient}``; strings must be Hermitian."""
        keys, coeffs = [], []
        for p, c in terms.items():
            p = PauliString.from_label(p) if isinstance(p, str) else p
            if p.phase % 2:
                raise ValueError(f"{p} is not Hermitian")
            keys.append(p.key)
            coeffs.append(-c if p.phase == 2 else c)
        return cls(n_sites, keys, coeffs)._merged()

    def __len__(self):
        return len(self.keys)

    @property
    def terms(self):
        return {from_key(self.n_sites, int(k)): float(c) for k, c in zip(self.keys, self.coeffs)}

    def norm_squared(self):
        return float(self.coeffs @ self.coeffs)

    def weights(self):
        d = 1 << self.n_sites
        return kernels.popcount((self.keys // d) | (self.keys % d))

    def distribution(self):
        """Weight distribution from squared coefficients (normalised by the total)."""
        p = np.bincount(self.weights(), weights=self.coeffs**2, minlength=self.n_sites + 1)
        return operators.OperatorDistribution(p[1:] / p.sum())

    def dense(self):
        d = 1 << self.n_sites
        out = np.zeros((d, d), dtype=complex)
        for k, c in zip(self.keys, self.coeffs):
            out += c * dense_matrix(from_key(self.n_sites, int(k)), normalized=True)
        return out

    def _merged(self):
        uniq, inv = np.unique(self.keys, return_inverse=True)
        coeffs = np.bincount(inv, weights=self.coeffs, minlength=len(uniq))
        keep = coeffs != 0.0
        return PauliSum(self.n_sites, uniq[keep], coeffs[keep])


def _bits(ps, site):
    shift = ps.n_sites - site
    d = 1 << ps.n_sites
    x, z = ps.keys // d, ps.keys % d
    return x, z, shift, (x >> shift) & 1, (z >> shift) & 1


def _rebuild(ps, x, z, coeffs):
    return PauliSum(ps.n_sites, (x << ps.n_sites) | z, coeffs)


def conjugate(ps, gate):
    """Heisenberg image ``U^dag (sum) U`` of a Pauli sum under one gate."""
    for s in gate.sites:
        if not 1 <= s <= ps.n_sites:
            raise ValueError(f"gate site {s} outside 1..{ps.n_sites}")
    if gate.kind == "CX":
        return _conjugate_cx(ps, *gate.sites)
    x, z, shift, xb, zb = _bits(ps, gate.sites[0])
    c = ps.coeffs
    if gate.kind == "H":
        # X <-> Z, Y -> -Y
        x2 = (x & ~(1 << shift)) | (zb << shift)
        z2 = (z & ~(1 << shift)) | (xb << shift)
        return _rebuild(ps, x2, z2, np.where(xb & zb, -c, c))
    if gate.kind == "S":
        # X -> -Y, Y -> X, Z -> Z
        z2 = z ^ (xb << shift)
        return _rebuild(ps, x, z2, np.where(xb & (1 - zb), -c, c))
    # T: X -> (X - Y)/sqrt2, Y -> (X + Y)/sqrt2, Z -> Z
    moving = xb == 1
    if not moving.any():
        return ps
    stay_x, stay_z, stay_c = x[~moving], z[~moving], c[~moving]
    mx, mz, mc = x[moving], z[moving], c[moving]
    flipped_sign = np.where(((mz >> shift) & 1) == 1, 1.0, -1.0)
    new = PauliSum(
        ps.n_sites,
        np.concatenate([(stay_x << ps.n_sites) | stay_z,
                        (mx << ps.n_sites) | mz,
                        (mx << ps.n_sites) | (mz ^ (1 << shift))]),
        np.concatenate([stay_c, mc * _INV_SQRT2, flipped_sign * mc * _INV_SQRT2]),
    )._merged()
    if len(new) > MAX_TERMS:
        raise CapacityError(f"Pauli sum exceeded {MAX_TERMS} terms")
    return new


def _conjugate_cx(ps, control, target):
    d = 1 << ps.n_sites
    x, z = ps.keys // d, ps.keys % d
    sc, st = ps.n_sites - control, ps.n_sites - target
    xc, zc = (x >> sc) & 1, (z >> sc) & 1
    xt, zt = (x >> st) & 1, (z >> st) & 1
    x2 = x ^ (xc << st)
    z2 = z ^ (zt << sc)
    # X^x Z^z maps without sign; only the Hermitian i^(x.z) prefactor shifts
    y_before = xc * zc + xt * zt
    y_after = xc * (zc ^ zt) + (xt ^ xc) * zt
    sign = np.where(((y_before - y_after) % 4) == 2, -1.0, 1.0)
    return _rebuild(ps, x2, z2, sign * ps.coeffs)


def apply_layer(ps, layer):
    """``L^dag (sum) L`` where ``L`` runs the layer's gates in list order."""
    for gate in reversed(layer):
        ps = conjugate(ps, gate)
    return ps


def propagate(instance, site=1, axis="z"):
    """Yield the Pauli sum after 0, 1, ..., depth layers."""
    ps = PauliSum.single(instance.n_sites, site, axis)
    yield ps
    for layer in instance.layers:
        ps = apply_layer(ps, layer)
        yield ps


def run_circuit_experiment(instance, site=1, axis="z"):
    """Per-layer weight distributions, times ``0..depth``."""
    rows = [ps.distribution().probabilities for ps in propagate(instance, site, axis)]
    return operators.TimeSeries(np.arange(instance.depth + 1, dtype=float), np.array(rows))


# --- dense reference pipeline -------------------------------------------------

def gate_matrix(gate, n_sites):
    d = 1 << n_sites
    if gate.kind == "CX":
        c, t = gate.sites
        idx = np.arange(d)
        ctrl = (idx >> (n_sites - c)) & 1
        perm = idx ^ (ctrl << (n_sites - t))
        u = np.zeros((d, d), dtype=complex)
        u[perm, idx] = 1.0
        return u
    s = gate.sites[0]
    return np.kron(np.kron(np.eye(1 << (s - 1)), _SINGLE[gate.kind]), np.eye(1 << (n_sites - s)))


def layer_unitary(layer, n_sites):
    """Unitary of a layer whose gates act in list order."""
    u = np.eye(1 << n_sites, dtype=complex)
    for gate in layer:
        u = gate_matrix(gate, n_sites) @ u
    return u


def dense_circuit_experiment(instance, site=1, axis="z"):
    """Same trajectory as :func:`run_circuit_experiment` with dense matrices."""
    n = instance.n_sites
    op = dense_matrix(PauliString.single(n, site, axis), normalized=True)
    rows = [operators.weight_distribution(op, n).probabilities]
    for layer in instance.layers:
        u = layer_unitary(layer, n)
        op = u.conj().T @ op @ u
        rows.append(operators.weight_distribution(op, n).probabilities)
    return operators.TimeSeries(np.arange(instance.depth + 1, dtype=float), np.array(rows))


# --- ensembles -----------------------------------------------------------------

@dataclass
class EnsembleResult:
    mean: operators.TimeSeries
    per_instance: list = field(repr=False)

    def instance_measures(self):
        return [s.measures() for s in self.per_instance]


def _run_one(args):
    instance, site, axis = args
    return run_circuit_experiment(instance, site, axis)


def worker_count():
    return max(1, int(os.environ.get("OPSCRAMBLE_WORKERS", "1")))


def ensemble_average(instances, site=1, axis="z", workers=None):
    """Arithmetic mean of ``P_k(t)`` over instances sharing size and depth."""
    instances = list(instances)
    if not instances:
        raise ValueError("empty ensemble")
    n, depth = instances[0].n_sites, instances[0].depth
    if any(i.n_sites != n or i.depth != depth for i in instances):
        raise ValueError("instances differ in size or depth")
    workers = workers or worker_count()
    jobs = [(inst, site, axis) for inst in instances]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_one, jobs))
    else:
        runs = [_run_one(j) for j in jobs]
    mean = np.mean([r.values for r in runs], axis=0)
    return EnsembleResult(operators.TimeSeries(runs[0].times, mean), runs)


def sample_ensemble(n_sites, depth, p_t, master_seed, count, strategy="hs-cx"):
    return [sample_circuit(n_sites, depth, p_t, instance_seed(master_seed, i), strategy) for i in range(count)]


def crossing_depth(series, target):
    """First time at which the mean weight reaches ``target``; ``None`` if never."""
    mean = series.measures()["mean"].values
    hit = np.nonzero(mean >= target)[0]
    return float(series.times[hit[0]]) if hit.size else None


def check_unitarity(ps, tol=1e-9):
    if abs(ps.norm_squared() - 1.0) > tol:
        raise ContractViolation(f"Pauli-sum norm drifted to {ps.norm_squared():.15g}")
