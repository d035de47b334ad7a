from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opscramble import collective as col
from opscramble.errors import CapacityError, ContractViolation

half_spins = st.integers(1, 12).map(lambda tj: Fraction(tj, 2))


def commutator(a, b):
    return a @ b - b @ a


class TestClebschGordan:
    def test_singlet(self):
        assert col.clebsch_gordan(0.5, 0.5, 0.5, -0.5, 0, 0) == pytest.approx(1 / np.sqrt(2), abs=1e-15)

    def test_selection_rule(self):
        assert col.clebsch_gordan(1, 1, 1, 0, 2, 0) == 0.0

    def test_triangle(self):
        assert col.clebsch_gordan(1, 0, 1, 0, 3, 0) == 0.0

    def test_rejects_non_half_integer(self):
        with pytest.raises(ValueError):
            col.clebsch_gordan(0.3, 0, 1, 0, 1, 0)

    def test_known_negative(self):
        # <1/2 -1/2; 1 1 | 1/2 1/2> = -sqrt(2/3)
        assert col.clebsch_gordan(0.5, -0.5, 1, 1, 0.5, 0.5) == pytest.approx(-np.sqrt(2 / 3), abs=1e-15)

    @given(st.data())
    def test_against_sympy(self, data):
        from sympy import Rational
        from sympy.physics.quantum.cg import CG

        tj1 = data.draw(st.integers(0, 8))
        tj2 = data.draw(st.integers(0, 8))
        tj = data.draw(st.sampled_from(range(abs(tj1 - tj2), tj1 + tj2 + 1, 2)))
        tm1 = data.draw(st.sampled_from(range(-tj1, tj1 + 1, 2)))
        tm2 = data.draw(st.sampled_from(range(-tj2, tj2 + 1, 2)))
        tm = tm1 + tm2
        if abs(tm) > tj:
            return
        args = [Rational(v, 2) for v in (tj1, tm1, tj2, tm2, tj, tm)]
        ref = CG(*args).doit()
        sign, sq = col.clebsch_gordan_squared(*args)
        assert sq == Fraction(str(ref**2))
        assert col.clebsch_gordan(*[Fraction(int(v * 2), 2) for v in args]) == pytest.approx(float(ref), abs=1e-14)


class TestTensorBasis:
    def test_spin_half_rank_one(self):
        b = col.build_tensor_basis(Fraction(1, 2))
        np.testing.assert_allclose(b[1, 0], np.diag([1, -1]) / np.sqrt(2), atol=1e-15)

    @pytest.mark.parametrize("spin", [Fraction(1, 2), 1, Fraction(5, 2), 4])
    def test_rank_one_is_j_plus_with_condon_shortley_sign(self, spin):
        b = col.build_tensor_basis(spin)
        _, jp, _, _, _ = col.spin_matrices(spin)
        ratio = b[1, 1][np.nonzero(jp)] / jp[np.nonzero(jp)]
        np.testing.assert_allclose(ratio, ratio[0], atol=1e-12)
        assert ratio[0].real < 0

    @pytest.mark.parametrize("method", ["cg", "lowering"])
    @pytest.mark.parametrize("spin", [Fraction(1, 2), 2, Fraction(7, 2)])
    def test_orthonormal_and_count(self, spin, method):
        b = col.build_tensor_basis(spin, method)
        assert len(b) == b.dim**2
        flat = b.tensors.reshape(len(b), -1)
        np.testing.assert_allclose(flat.conj() @ flat.T, np.eye(len(b)), atol=1e-10)

    def test_conjugation_symmetry(self):
        b = col.build_tensor_basis(3)
        for L in range(b.dim):
            for M in range(-L, L + 1):
                np.testing.assert_allclose(b[L, M].conj().T, (-1) ** M * b[L, -M], atol=1e-10)

    def test_jz_eigen_relation(self, rng):
        b = col.build_tensor_basis(5)
        jz, *_ = col.spin_matrices(5)
        for _ in range(10):
            L = int(rng.integers(0, 11))
            M = int(rng.integers(-L, L + 1))
            np.testing.assert_allclose(commutator(jz, b[L, M]), M * b[L, M], atol=1e-10)

    @pytest.mark.parametrize("spin", [Fraction(3, 2), 3, 5])
    def test_ladder(self, spin, rng):
        b = col.build_tensor_basis(spin)
        _, jp, jm, _, _ = col.spin_matrices(spin)
        for _ in range(8):
            L = int(rng.integers(1, b.dim))
            M = int(rng.integers(-L, L + 1))
            if M < L:
                np.testing.assert_allclose(
                    commutator(jp, b[L, M]), np.sqrt((L - M) * (L + M + 1)) * b[L, M + 1], atol=1e-10
                )
            if M > -L:
                np.testing.assert_allclose(
                    commutator(jm, b[L, M]), np.sqrt((L + M) * (L - M + 1)) * b[L, M - 1], atol=1e-10
                )

    @given(half_spins.filter(lambda s: s <= 4), st.integers(0, 2**32 - 1))
    def test_completeness(self, spin, seed):
        b = col.build_tensor_basis(spin)
        r = np.random.default_rng(seed)
        a = r.standard_normal((b.dim, b.dim)) + 1j * r.standard_normal((b.dim, b.dim))
        assert np.sum(np.abs(b.coefficients(a)) ** 2) == pytest.approx(np.vdot(a, a).real, rel=1e-9)

    @pytest.mark.parametrize("spin", [Fraction(1, 2), 3, Fraction(15, 2), 10])
    def test_routes_agree(self, spin):
        a = col.build_tensor_basis(spin, "cg").tensors
        b = col.build_tensor_basis(spin, "lowering").tensors
        assert np.abs(a - b).max() < 1e-9

    def test_save_load(self, tmp_path):
        b = col.build_tensor_basis(Fraction(3, 2))
        b.save(tmp_path / "basis.npz")
        c = col.SphericalTensorBasis.load(tmp_path / "basis.npz")
        assert c.spin == b.spin
        np.testing.assert_array_equal(c.tensors, b.tensors)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            col.build_tensor_basis(256)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            col.build_tensor_basis(1, "magic")

    def test_cached_tensors_are_read_only(self):
        b = col.build_tensor_basis(2)
        with pytest.raises(ValueError):
            b.tensors[0, 0, 0] = 5


class TestRankDistribution:
    def test_jz(self):
        b = col.build_tensor_basis(3)
        d = col.rank_distribution(col.initial_collective(3, "jz"), b)
        np.testing.assert_allclose(d.probabilities, np.eye(6)[0], atol=1e-14)

    def test_rank_three(self):
        b = col.build_tensor_basis(Fraction(5, 2))
        op = b[3, 2] + b[3, -2]
        d = col.rank_distribution(op / np.sqrt(np.vdot(op, op).real), b)
        assert d[3] == pytest.approx(1.0, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            col.rank_distribution(np.zeros((3, 3)), col.build_tensor_basis(2))

    def test_rejects_trace(self):
        with pytest.raises(ContractViolation):
            col.rank_distribution(np.eye(5), col.build_tensor_basis(2))


class TestKickedTop:
    def test_zero_parameters_identity(self):
        cfg = col.QKTConfig(Fraction(7, 2), (0, 0, 0), (0, 0, 0))
        np.testing.assert_allclose(col.build_qkt_unitary(cfg), np.eye(8), atol=1e-14)

    @given(half_spins, st.floats(0, 6))
    def test_unitary(self, spin, gamma):
        u = col.build_qkt_unitary(col.QKTConfig(spin, col.DEFAULT_ALPHAS, (0.85 * gamma, 0.9 * gamma, gamma)))
        assert np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() < 1e-12

    @pytest.mark.parametrize("spin", [Fraction(1, 2), 1, Fraction(5, 2), 3])
    def test_pi_rotation_squares_to_sign(self, spin):
        u = col.build_qkt_unitary(col.QKTConfig(spin, (np.pi, 0, 0), (0, 0, 0)))
        sign = (-1) ** int(2 * spin)
        np.testing.assert_allclose(u @ u, sign * np.eye(u.shape[0]), atol=1e-12)

    def test_matches_matrix_exponential(self):
        from scipy.linalg import expm
        cfg = col.QKTConfig.standard(9, 2.0)
        jz, _, _, jx, jy = col.spin_matrices(cfg.spin)
        j = float(cfg.spin)
        u = np.eye(cfg.dim)
        for m, a, g in zip((jx, jy, jz), cfg.alphas, cfg.gammas):
            u = expm(-1j * (a * m + g / (2 * j) * m @ m)) @ u
        np.testing.assert_allclose(col.build_qkt_unitary(cfg), u, atol=1e-12)

    def test_standard_parameters(self):
        cfg = col.QKTConfig.standard(49, 2.0)
        assert cfg.spin == Fraction(49, 2) and cfg.dim == 50
        assert cfg.gammas == pytest.approx((1.7, 1.8, 2.0))

    def test_rotation_preserves_rank(self):
        s = col.run_qkt_experiment(col.QKTConfig.standard(4, 0.0), "jy", 30)
        assert np.abs(s.values - s.values[0]).max() < 1e-12

    def test_starts_rank_one(self):
        s = col.run_qkt_experiment(col.QKTConfig.standard(6, 2.0), "jx", 3)
        assert s.values[0, 0] == pytest.approx(1.0)
        np.testing.assert_allclose(s.values.sum(axis=1), 1.0, atol=1e-12)

    def test_needs_kicks(self):
        with pytest.raises(ValueError):
            col.run_qkt_experiment(col.QKTConfig.standard(4, 1.0), "jz", 0)
