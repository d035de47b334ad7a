from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opscramble import collective, haar, operators
from opscramble.pauli import PauliString, dense_matrix


def rational_moments(dims):
    """Exact (mean, second moment, leading IPR) of the uniform-over-basis distribution."""
    total = sum(dims)
    ks = range(1, len(dims) + 1)
    mean = Fraction(sum(k * c for k, c in zip(ks, dims)), total)
    second = Fraction(sum(k * k * c for k, c in zip(ks, dims)), total)
    ipr = Fraction(sum(c * c for c in dims), total**2)
    return mean, second, ipr


class TestSpinHalf:
    def test_six_sites(self):
        p = haar.haar_spin_half(6)
        assert p.mean == pytest.approx(4.5 * 4096 / 4095, abs=1e-12)
        assert p.variance == pytest.approx(1.1203284627460453, abs=1e-12)
        assert p.ipr_leading == pytest.approx(7837 / 29575, abs=1e-15)

    def test_two_site_ipr_leading(self):
        assert haar.haar_spin_half(2).ipr_leading == pytest.approx(117 / 225, abs=1e-15)

    @pytest.mark.parametrize("n", range(1, 21))
    def test_closed_forms_match_rational_sums(self, n):
        p = haar.haar_spin_half(n)
        mean, second, ipr = rational_moments(haar.spin_half_dims(n))
        assert p.mean == pytest.approx(float(mean), rel=1e-13)
        assert p.second_moment == pytest.approx(float(second), rel=1e-13)
        assert p.ipr_leading == pytest.approx(float(ipr), rel=1e-13)
        assert p.pk.sum() == pytest.approx(1.0, abs=1e-14)

    def test_asymptotics(self):
        p = haar.haar_spin_half(20)
        assert abs(p.mean / 20 - 0.75) / 0.75 < 0.01
        assert abs(p.variance / 20 - 3 / 16) / (3 / 16) < 0.01

    @pytest.mark.parametrize("n", [0, 21])
    def test_range(self, n):
        with pytest.raises(ValueError):
            haar.haar_spin_half(n)

    def test_hypergeometric_sum(self):
        assert haar.sum_squared_spin_half_dims(2) == 36 + 81
        assert haar.sum_squared_spin_half_dims(6) == sum(comb(6, k) ** 2 * 9**k for k in range(1, 7))


class TestCollective:
    def test_forty_nine(self):
        p = haar.haar_collective(49)
        assert p.mean == pytest.approx(201 / 6 * 50 / 51, abs=1e-12)
        assert p.variance == pytest.approx(360200 / 2601, abs=1e-10)
        assert p.ipr_leading == pytest.approx(166649 / 6245001, abs=1e-15)

    @given(st.integers(1, 400))
    def test_closed_forms_match_rational_sums(self, n):
        p = haar.haar_collective(n)
        mean, second, ipr = rational_moments(list(p.dims))
        assert p.mean == pytest.approx(float(mean), rel=1e-13)
        assert p.second_moment == pytest.approx(float(second), rel=1e-13)
        assert p.ipr_leading == pytest.approx(float(ipr), rel=1e-13)
        assert p.pk.sum() == pytest.approx(1.0, abs=1e-14)

    def test_asymptotics(self):
        p = haar.haar_collective(200)
        assert abs(p.mean / 200 - 2 / 3) < 0.01
        assert abs(p.variance / 200**2 - 1 / 18) < 0.01 / 18

    def test_ipr_follows_inverse_n_law(self):
        # leading term ~ 4 / (3N), not 3 / (8N)
        n = 2000
        assert haar.haar_collective(n).ipr_leading * n == pytest.approx(4 / 3, rel=2e-3)


class TestPorterThomas:
    def test_correction_term(self):
        assert haar.porter_thomas_correction(2) == pytest.approx(2 / 12)
        assert haar.porter_thomas_correction(4) == pytest.approx(14 / (15 * 16))
        p = haar.haar_spin_half(3)
        assert p.ipr == pytest.approx(p.ipr_leading + haar.porter_thomas_correction(8))


class TestSampler:
    @pytest.mark.parametrize("dim", [2, 5, 16, 64])
    def test_unitary(self, dim, rng):
        u = haar.sample_haar_unitary(dim, rng)
        assert np.abs(u.conj().T @ u - np.eye(dim)).max() < 1e-12

    def test_seed_reproducible(self):
        np.testing.assert_array_equal(haar.sample_haar_unitary(8, 3), haar.sample_haar_unitary(8, 3))

    def test_first_moment(self, rng):
        x = np.array([abs(haar.sample_haar_unitary(4, rng)[0, 0]) ** 2 for _ in range(10000)])
        assert abs(x.mean() - 0.25) < 3 * x.std() / 100

    def test_rejects_tiny(self):
        with pytest.raises(ValueError):
            haar.sample_haar_unitary(1, 0)


class TestMonteCarlo:
    @pytest.mark.parametrize("n", [3, 4])
    def test_pauli_basis(self, n, rng):
        op = dense_matrix(PauliString.single(n, 1, "z"), normalized=True)
        rows = []
        for _ in range(3000):
            u = haar.sample_haar_unitary(1 << n, rng)
            rows.append(operators.weight_distribution(u.conj().T @ op @ u, n).probabilities)
        rows = np.array(rows)
        sem = rows.std(axis=0) / np.sqrt(len(rows))
        assert np.all(np.abs(rows.mean(axis=0) - haar.haar_spin_half(n).pk) < 3.5 * sem)

    @pytest.mark.parametrize("n", [4, 7, 15])
    def test_collective_basis(self, n, rng):
        basis = collective.build_tensor_basis(Fraction(n, 2))
        op = collective.initial_collective(Fraction(n, 2), "jz")
        rows = []
        for _ in range(3000):
            u = haar.sample_haar_unitary(n + 1, rng)
            rows.append(collective.rank_distribution(u.conj().T @ op @ u, basis).probabilities)
        rows = np.array(rows)
        sem = rows.std(axis=0) / np.sqrt(len(rows))
        assert np.all(np.abs(rows.mean(axis=0) - haar.haar_collective(n).pk) < 3.5 * sem)
