"""Unit tests for evsce.simulator."""

import numpy as np
import pytest

from evsce.distributions import Constant, NoiseModel, StudentRenormalised
from evsce.errors import DomainError, NumericalFailure
from evsce.simulator import (
    EVMConfig,
    EVMSample,
    batch_spectra,
    cross_product_statistic,
    generate_evm,
    gram_eigenvalues,
    gram_spectrum,
    histogram,
    noise_row_concentration,
    shuffle_entries,
    symmetric_eigenvalues,
)


def charpoly_eigenvalues(M: np.ndarray) -> np.ndarray:
    """Eigenvalues as roots of the characteristic polynomial (companion matrix)."""
    return np.sort(np.roots(np.poly(M)).real)


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


class TestGenerateEvm:
    def test_constant_one_is_pure_noise(self):
        sample = generate_evm(EVMConfig(T=5, S=3, volatility=Constant(1.0)))
        assert np.array_equal(sample.X, sample.noise)

    def test_single_entry(self):
        sample = generate_evm(EVMConfig(T=1, S=1, volatility=StudentRenormalised(3)))
        assert sample.X.shape == (1, 1)
        assert sample.X[0, 0] == sample.sigma[0] * sample.noise[0, 0]

    def test_rows_are_scaled_noise(self, small_config):
        sample = generate_evm(small_config)
        assert np.array_equal(sample.X, sample.sigma[:, None] * sample.noise)

    def test_same_seed_is_bitwise_identical(self, small_config):
        assert np.array_equal(generate_evm(small_config).X, generate_evm(small_config).X)

    def test_different_seed_differs(self, small_config):
        other = EVMConfig(T=12, S=8, volatility=StudentRenormalised(3), seed=8)
        assert not np.array_equal(generate_evm(small_config).X, generate_evm(other).X)

    def test_noise_law_is_respected(self):
        sample = generate_evm(EVMConfig(T=4, S=6, volatility=Constant(1.0), noise=NoiseModel.RADEMACHER))
        assert set(np.unique(sample.X)) <= {-1.0, 1.0}

    @pytest.mark.parametrize("T, S", [(0, 3), (3, 0)])
    def test_rejects_empty_dimensions(self, T, S):
        with pytest.raises(DomainError):
            EVMConfig(T=T, S=S, volatility=Constant(1.0))

    def test_y_hat(self):
        assert EVMConfig(T=512, S=256, volatility=Constant(1.0)).y_hat == 2.0


# ---------------------------------------------------------------------------
# Eigenvalues
# ---------------------------------------------------------------------------


class TestSymmetricEigenvalues:
    def test_identity(self):
        assert np.allclose(symmetric_eigenvalues(np.eye(5)), np.ones(5), atol=1e-15)

    def test_diagonal_is_sorted(self):
        assert np.allclose(symmetric_eigenvalues(np.diag([3.0, 1.0, 2.0])), [1.0, 2.0, 3.0], atol=1e-15)

    def test_random_matches_characteristic_polynomial(self):
        rng = np.random.default_rng(1)
        A = rng.standard_normal((8, 8))
        M = A + A.T
        values = symmetric_eigenvalues(M)
        assert np.allclose(values, charpoly_eigenvalues(M), rtol=0, atol=1e-8)
        assert values.sum() == pytest.approx(np.trace(M), rel=1e-10, abs=1e-12)
        assert np.sum(values**2) == pytest.approx(np.sum(M * M), rel=1e-10)

    def test_rejects_asymmetric(self):
        with pytest.raises(DomainError, match="not symmetric"):
            symmetric_eigenvalues(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(DomainError):
            symmetric_eigenvalues(np.ones((2, 3)))

    def test_solver_failure_is_structured(self, mocker):
        mocker.patch("evsce.simulator.scipy.linalg.eigvalsh", side_effect=np.linalg.LinAlgError("no convergence"))
        with pytest.raises(NumericalFailure) as exc_info:
            symmetric_eigenvalues(np.eye(3))
        assert "no convergence" in exc_info.value.detail["reason"]


class TestGramSpectrum:
    def test_zero_matrix(self):
        spectrum = gram_spectrum(EVMSample(X=np.zeros((5, 3)), sigma=None))
        assert np.array_equal(spectrum.eigenvalues, np.zeros(3))
        assert spectrum.dims == (5, 3)
        assert spectrum.normalization == 5.0

    def test_all_ones_is_rank_one(self):
        spectrum = gram_spectrum(EVMSample(X=np.ones((6, 4)), sigma=None))
        assert spectrum.lambda_max == pytest.approx(4.0, rel=1e-12)
        assert np.allclose(spectrum.eigenvalues[:-1], 0.0, atol=1e-12)
        assert np.all(spectrum.eigenvalues >= 0)

    def test_small_instance_matches_characteristic_polynomial(self):
        X = np.random.default_rng(2).standard_normal((6, 4))
        expected = charpoly_eigenvalues(X.T @ X / 6)
        assert np.allclose(gram_eigenvalues(X), expected, rtol=0, atol=1e-8)

    @pytest.mark.parametrize("T, S", [(3, 5), (5, 3), (32, 17), (17, 32)])
    def test_nonzero_spectrum_matches_other_gram(self, T, S):
        X = np.random.default_rng(T * S).standard_normal((T, S))
        values = gram_eigenvalues(X)
        assert values.size == S
        direct = np.linalg.eigvalsh(X.T @ X / T)
        assert np.allclose(values, np.clip(direct, 0, None), rtol=0, atol=1e-8)

    def test_trace_identity(self, small_config):
        sample = generate_evm(small_config)
        spectrum = gram_spectrum(sample)
        assert spectrum.eigenvalues.sum() == pytest.approx(np.sum(sample.X**2) / small_config.T, rel=1e-10)

    def test_tiny_negative_eigenvalue_is_clamped(self, mocker):
        mocker.patch("evsce.simulator.symmetric_eigenvalues", return_value=np.array([-1e-12, 0.5, 2.0]))
        values = gram_eigenvalues(np.ones((4, 3)))
        assert values.tolist() == [0.0, 0.5, 2.0]

    def test_negative_eigenvalue_is_a_failure(self, mocker):
        mocker.patch("evsce.simulator.symmetric_eigenvalues", return_value=np.array([-0.1, 0.5, 2.0]))
        with pytest.raises(NumericalFailure):
            gram_eigenvalues(np.ones((4, 3)))


# ---------------------------------------------------------------------------
# Batches
# ---------------------------------------------------------------------------


class TestBatchSpectra:
    def test_single_replica_equals_single_spectrum(self, small_config):
        batch = batch_spectra(small_config, 1)
        single = gram_spectrum(generate_evm(small_config.for_replica(0)))
        assert np.array_equal(batch.pooled.eigenvalues, single.eigenvalues)
        assert batch.maxima.tolist() == [single.lambda_max]

    def test_pooled_size_and_order(self, small_config):
        batch = batch_spectra(small_config, 4)
        assert batch.pooled.eigenvalues.size == 4 * small_config.S
        assert np.all(np.diff(batch.pooled.eigenvalues) >= 0)
        assert batch.maxima.shape == (4,)

    def test_independent_of_thread_count(self, small_config, monkeypatch):
        monkeypatch.setenv("EVM_THREADS", "1")
        serial = batch_spectra(small_config, 6)
        monkeypatch.setenv("EVM_THREADS", "4")
        threaded = batch_spectra(small_config, 6)
        assert np.array_equal(serial.pooled.eigenvalues, threaded.pooled.eigenvalues)
        assert np.array_equal(serial.maxima, threaded.maxima)

    def test_replicas_differ(self, small_config):
        batch = batch_spectra(small_config, 2)
        assert batch.maxima[0] != batch.maxima[1]

    def test_shuffled_batch_preserves_entries(self, small_config):
        plain = batch_spectra(small_config, 2)
        shuffled = batch_spectra(small_config, 2, shuffle=True)
        assert shuffled.pooled.eigenvalues.sum() == pytest.approx(plain.pooled.eigenvalues.sum(), rel=1e-10)

    def test_rejects_zero_reps(self, small_config):
        with pytest.raises(DomainError):
            batch_spectra(small_config, 0)

    def test_failure_names_replica(self, small_config, single_thread, mocker):
        mocker.patch("evsce.simulator.gram_spectrum", side_effect=NumericalFailure("eigensolver"))
        with pytest.raises(NumericalFailure) as exc_info:
            batch_spectra(small_config, 3)
        assert exc_info.value.detail["replica"] == 0


# ---------------------------------------------------------------------------
# Shuffle
# ---------------------------------------------------------------------------


class TestShuffle:
    def test_one_by_one_unchanged(self):
        sample = EVMSample(X=np.array([[2.5]]), sigma=np.array([1.0]))
        assert shuffle_entries(sample, 1).X.tolist() == [[2.5]]

    def test_preserves_entry_multiset(self, small_config):
        sample = generate_evm(small_config)
        shuffled = shuffle_entries(sample, 3)
        assert shuffled.X.shape == sample.X.shape
        assert np.array_equal(np.sort(shuffled.X.ravel()), np.sort(sample.X.ravel()))
        assert not np.array_equal(shuffled.X, sample.X)

    def test_clears_volatility(self, small_config):
        shuffled = shuffle_entries(generate_evm(small_config), 3)
        assert shuffled.sigma is None
        assert shuffled.noise is None

    def test_deterministic(self, small_config):
        sample = generate_evm(small_config)
        assert np.array_equal(shuffle_entries(sample, 3, 1).X, shuffle_entries(sample, 3, 1).X)


# ---------------------------------------------------------------------------
# Histogram
# ---------------------------------------------------------------------------


class TestHistogram:
    def test_single_value(self):
        hist = histogram([0.5], 1, (0.0, 1.0))
        assert hist.heights.tolist() == [1.0]
        assert hist.total == 1

    def test_uniform_grid(self):
        values = (np.arange(10_000) + 0.5) / 10_000
        hist = histogram(values, 10, (0.0, 1.0))
        assert np.allclose(hist.heights, 1.0, atol=1e-3)

    def test_outside_values_are_counted(self):
        hist = histogram([-1.0, 0.5, 2.0], 1, (0.0, 1.0))
        assert hist.below == 1
        assert hist.above == 1
        assert np.sum(hist.heights * hist.widths) == pytest.approx(1 / 3)

    def test_empty_input(self):
        hist = histogram([], 4, (0.0, 1.0))
        assert hist.total == 0
        assert np.array_equal(hist.heights, np.zeros(4))

    def test_rejects_bad_range(self):
        with pytest.raises(DomainError):
            histogram([1.0], 3, (1.0, 1.0))

    def test_l1_distance(self):
        values = (np.arange(10_000) + 0.5) / 10_000
        hist = histogram(values, 10, (0.0, 1.0))
        assert hist.l1_distance(lambda x: 1.0) == pytest.approx(0.0, abs=1e-9)
        assert hist.l1_distance(lambda x: 0.0) == pytest.approx(1.0, abs=1e-9)

    def test_l1_distance_compares_bin_masses(self):
        # A density with a jump inside a bin: only the bin mass matters.
        values = (np.arange(10_000) + 0.5) / 20_000
        hist = histogram(values, 1, (0.0, 1.0))
        step = lambda x: 2.0 if x < 0.5 else 0.0  # noqa: E731
        assert hist.l1_distance(step, breakpoints=[0.5]) == pytest.approx(0.0, abs=1e-9)

    def test_l1_distance_with_square_root_edge(self):
        # Integrable 1/sqrt blow-up just inside the bin; its mass in [0, 1] is sqrt(1 - edge).
        edge = 0.01
        rho = lambda x: 0.5 / np.sqrt(x - edge) if x > edge else 0.0  # noqa: E731
        values = np.full(10_000, 0.5)
        hist = histogram(values, 1, (0.0, 1.0))
        expected = abs(1.0 - np.sqrt(1.0 - edge))
        assert hist.l1_distance(rho, breakpoints=[edge]) == pytest.approx(expected, abs=1e-7)

    def test_frame_columns(self):
        frame = histogram([0.5], 2, (0.0, 1.0)).to_frame()
        assert list(frame.columns) == ["bin_lo", "bin_hi", "count", "density"]


# ---------------------------------------------------------------------------
# Concentration statistics
# ---------------------------------------------------------------------------


class TestConcentration:
    @pytest.fixture
    def wide_noise(self):
        return generate_evm(EVMConfig(T=100, S=10_000, volatility=Constant(1.0), seed=31))

    def test_row_norms_concentrate(self, wide_noise):
        assert noise_row_concentration(wide_noise) < 0.1

    def test_cross_products_are_small(self, wide_noise):
        assert cross_product_statistic(wide_noise, 0.3) < 0.5

    def test_needs_noise(self):
        with pytest.raises(DomainError):
            noise_row_concentration(EVMSample(X=np.ones((2, 2)), sigma=None))

    def test_single_row_has_no_cross_products(self):
        sample = generate_evm(EVMConfig(T=1, S=10, volatility=Constant(1.0)))
        assert cross_product_statistic(sample, 0.25) == 0.0
