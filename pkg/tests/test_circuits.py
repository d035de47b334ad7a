import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opscramble import circuits as C
from opscramble.errors import CapacityError
from opscramble.haar import haar_spin_half
from opscramble.pauli import PauliString

SQ = 1 / np.sqrt(2)


def dense_conjugate(ps, gate):
    u = C.gate_matrix(gate, ps.n_sites)
    return u.conj().T @ ps.dense() @ u


@st.composite
def pauli_sums(draw, max_sites=3):
    n = draw(st.integers(2, max_sites))
    keys = draw(st.lists(st.integers(1, 4**n - 1), min_size=1, max_size=6, unique=True))
    coeffs = np.array(draw(st.lists(st.integers(-8, 8), min_size=len(keys), max_size=len(keys))), dtype=float)
    if not np.any(coeffs):
        coeffs[0] = 1.0
    return C.PauliSum(n, keys, coeffs / np.linalg.norm(coeffs))


@st.composite
def gates(draw, n):
    kind = draw(st.sampled_from(["H", "S", "T", "CX"]))
    if kind == "CX":
        sites = draw(st.lists(st.integers(1, n), min_size=2, max_size=2, unique=True))
    else:
        sites = [draw(st.integers(1, n))]
    return C.Gate(kind, sites)


class TestGate:
    @pytest.mark.parametrize("kind, sites", [("CX", (1,)), ("CX", (2, 2)), ("H", (1, 2)), ("Q", (1,))])
    def test_invalid(self, kind, sites):
        with pytest.raises(ValueError):
            C.Gate(kind, sites)

    @pytest.mark.parametrize("kind", ["H", "S", "T"])
    def test_single_qubit_matrices_unitary(self, kind):
        u = C.gate_matrix(C.Gate(kind, (2,)), 3)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(8), atol=1e-15)


class TestConjugationTables:
    def terms(self, label, gate):
        ps = C.PauliSum.from_terms(len(label), {label: 1.0})
        return {p.letters: c for p, c in C.conjugate(ps, gate).terms.items()}

    def test_h_on_x(self):
        assert self.terms("X", C.Gate("H", (1,))) == {"Z": 1.0}

    def test_h_on_y(self):
        assert self.terms("Y", C.Gate("H", (1,))) == {"Y": -1.0}

    def test_s_table(self):
        assert self.terms("X", C.Gate("S", (1,))) == {"Y": -1.0}
        assert self.terms("Y", C.Gate("S", (1,))) == {"X": 1.0}
        assert self.terms("Z", C.Gate("S", (1,))) == {"Z": 1.0}

    def test_t_on_x_splits(self):
        out = self.terms("X", C.Gate("T", (1,)))
        assert out == pytest.approx({"X": SQ, "Y": -SQ})

    def test_t_on_y_splits(self):
        assert self.terms("Y", C.Gate("T", (1,))) == pytest.approx({"X": SQ, "Y": SQ})

    def test_cx_on_control_x(self):
        assert self.terms("XI", C.Gate("CX", (1, 2))) == {"XX": 1.0}

    def test_cx_on_target_z(self):
        assert self.terms("IZ", C.Gate("CX", (1, 2))) == {"ZZ": 1.0}

    def test_cx_yy_picks_sign(self):
        assert self.terms("YY", C.Gate("CX", (1, 2))) == {"XZ": -1.0}

    def test_site_out_of_range(self):
        with pytest.raises(ValueError):
            C.conjugate(C.PauliSum.single(2, 1, "x"), C.Gate("H", (3,)))

    @given(st.data())
    def test_matches_dense_oracle(self, data):
        ps = data.draw(pauli_sums())
        gate = data.draw(gates(ps.n_sites))
        np.testing.assert_allclose(C.conjugate(ps, gate).dense(), dense_conjugate(ps, gate), atol=1e-13)

    @given(st.data())
    def test_norm_preserved(self, data):
        ps = data.draw(pauli_sums())
        gate = data.draw(gates(ps.n_sites))
        assert C.conjugate(ps, gate).norm_squared() == pytest.approx(ps.norm_squared(), abs=1e-12)

    def test_from_terms_rejects_anti_hermitian(self):
        with pytest.raises(ValueError):
            C.PauliSum.from_terms(1, {PauliString.from_label("iX"): 1.0})


class TestSampler:
    def test_deterministic(self):
        assert C.sample_circuit(5, 20, 0.4, 99) == C.sample_circuit(5, 20, 0.4, 99)
        assert C.sample_circuit(5, 20, 0.4, 99) != C.sample_circuit(5, 20, 0.4, 100)

    def test_no_t_without_probability(self):
        assert C.sample_circuit(6, 50, 0.0, 1).count("T") == 0

    def test_one_t_per_layer(self):
        inst = C.sample_circuit(6, 50, 1.0, 1)
        assert all(sum(g.kind == "T" for g in layer) == 1 for layer in inst.layers)

    @given(st.integers(1, 8), st.integers(0, 10), st.floats(0, 1), st.integers(0, 2**63))
    def test_moment_structure(self, n, depth, p_t, seed):
        inst = C.sample_circuit(n, depth, p_t, seed)
        assert inst.depth == depth
        for layer in inst.layers:
            singles = [g for g in layer if g.kind in "HS"]
            assert sorted(g.sites[0] for g in singles) == list(range(1, n + 1))
            cx_sites = [s for g in layer if g.kind == "CX" for s in g.sites]
            assert len(cx_sites) == len(set(cx_sites))
            kinds = [g.kind for g in layer]
            if "T" in kinds:
                assert kinds[-1] == "T" and kinds.count("T") == 1

    def test_json_round_trip(self):
        inst = C.sample_circuit(4, 6, 0.5, 3)
        assert C.CircuitInstance.from_json(inst.to_json()) == inst

    @pytest.mark.parametrize("p_t", [-0.1, 1.5])
    def test_probability_range(self, p_t):
        with pytest.raises(ValueError):
            C.sample_circuit(3, 3, p_t, 0)

    def test_instance_seeds_distinct(self):
        seeds = {C.instance_seed(7, i) for i in range(100)}
        assert len(seeds) == 100
        assert C.instance_seed(7, 3) == C.instance_seed(7, 3)


class TestPropagation:
    def test_depth_zero(self):
        s = C.run_circuit_experiment(C.sample_circuit(4, 0, 0.5, 0))
        np.testing.assert_array_equal(s.values, [[1, 0, 0, 0]])

    def test_clifford_stays_single_term(self):
        inst = C.sample_circuit(6, 100, 0.0, 5)
        assert {len(ps) for ps in C.propagate(inst)} == {1}
        m = C.run_circuit_experiment(inst).measures()
        assert np.all(m["ipr"].values == 1.0)

    @given(st.integers(2, 5), st.integers(0, 2**32))
    def test_term_growth_bound(self, n, seed):
        inst = C.sample_circuit(n, 12, 0.7, seed)
        t_seen = 0
        for depth, ps in enumerate(C.propagate(inst)):
            if depth:
                t_seen += sum(g.kind == "T" for g in inst.layers[depth - 1])
            assert len(ps) <= 2**t_seen
            assert ps.norm_squared() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 3, 4])
    @pytest.mark.parametrize("p_t", [0.0, 0.5, 1.0])
    def test_dense_pipeline_agrees(self, n, p_t):
        for seed in range(3):
            inst = C.sample_circuit(n, 8, p_t, seed)
            a = C.run_circuit_experiment(inst, 1, "y")
            b = C.dense_circuit_experiment(inst, 1, "y")
            assert np.abs(a.values - b.values).max() < 1e-10

    def test_capacity(self, monkeypatch):
        monkeypatch.setattr(C, "MAX_TERMS", 4)
        inst = C.sample_circuit(6, 40, 1.0, 0)
        with pytest.raises(CapacityError):
            C.run_circuit_experiment(inst)

    def test_unitarity_check(self):
        ps = C.PauliSum(2, [1, 2], [1.0, 1.0])
        with pytest.raises(Exception):
            C.check_unitarity(ps)


class TestEnsemble:
    def test_single_instance(self):
        inst = C.sample_circuit(4, 10, 0.5, 2)
        res = C.ensemble_average([inst])
        np.testing.assert_array_equal(res.mean.values, C.run_circuit_experiment(inst).values)

    def test_duplicates(self):
        inst = C.sample_circuit(4, 10, 0.5, 2)
        res = C.ensemble_average([inst, inst])
        np.testing.assert_allclose(res.mean.values, C.run_circuit_experiment(inst).values, atol=1e-15)
        assert len(res.instance_measures()) == 2

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            C.ensemble_average([C.sample_circuit(4, 10, 0.5, 2), C.sample_circuit(4, 11, 0.5, 2)])
        with pytest.raises(ValueError):
            C.ensemble_average([])

    def test_parallel_matches_serial(self):
        ens = C.sample_ensemble(4, 12, 0.5, 11, 4)
        a = C.ensemble_average(ens, workers=1).mean.values
        b = C.ensemble_average(ens, workers=2).mean.values
        np.testing.assert_array_equal(a, b)

    def test_more_t_gates_delocalize(self):
        ipr = {}
        for p_t in (0.1, 0.9):
            res = C.ensemble_average(C.sample_ensemble(6, 40, p_t, 2024, 40))
            ipr[p_t] = np.mean([m["ipr"].values[20:].mean() for m in res.instance_measures()])
        assert ipr[0.9] < 0.5 < ipr[0.1]
