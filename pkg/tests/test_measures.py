import unittest

import numpy as np

from decoherence_studio.quantum.measures import (
    NonProductStateError,
    ProductState,
    bures_distance,
    coherence_singular_values,
    correlation_split,
    fidelity,
    min_pt_eigenvalue,
    nearest_separable_derivative,
    partial_transpose_spectrum,
    product_state_from_matrix,
    q_decoherence,
    q_relaxation,
    q_relaxation_weighted,
    random_product_state,
    relative_entropy,
    vn_entropy,
)
from decoherence_studio.quantum.qspace import DensityMatrixError, LayoutError, SpaceLayout, partial_trace
from decoherence_studio.quantum.states import (
    build_equimixed_classical,
    build_nearest_separable,
    build_pure_mixed,
    pure_mixed_params,
    random_pure_mixed_params,
)


EQUAL = (1 / np.sqrt(2), 1 / np.sqrt(2))


def random_density(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    columns = rank or dim
    factor = rng.standard_normal((dim, columns)) + 1j * rng.standard_normal((dim, columns))
    matrix = factor @ factor.conj().T
    return matrix / np.trace(matrix)


class EntropyTests(unittest.TestCase):
    """熵与相对熵的解析值。"""

    def test_pure_state_has_zero_entropy(self) -> None:
        rho = build_pure_mixed(pure_mixed_params(EQUAL, (1, 1)))

        self.assertAlmostEqual(vn_entropy(rho), 0.0, places=10)

    def test_equimixed_classical_entropy(self) -> None:
        rho_zero = build_equimixed_classical(SpaceLayout(d_s=2, sector_dims=(7, 8)), EQUAL)

        self.assertAlmostEqual(vn_entropy(rho_zero), np.log(2) + (np.log(7) + np.log(8)) / 2, places=12)

    def test_relative_entropy_of_state_with_itself(self) -> None:
        rho = build_equimixed_classical(SpaceLayout(d_s=2, sector_dims=(3, 4)), EQUAL)

        self.assertAlmostEqual(relative_entropy(rho, rho), 0.0, places=12)

    def test_quantum_part_for_equal_degeneracy(self) -> None:
        params = pure_mixed_params(EQUAL, (4, 4))

        value = relative_entropy(build_pure_mixed(params), build_nearest_separable(params))

        self.assertAlmostEqual(value, np.log(2) / 4, places=9)

    def test_quantum_part_for_unequal_degeneracy(self) -> None:
        params = pure_mixed_params(EQUAL, (7, 8))
        expected = np.log(15 / 8) / 14 + np.log(15 / 7) / 16

        value = relative_entropy(build_pure_mixed(params), build_nearest_separable(params))

        self.assertAlmostEqual(value, expected, places=9)

    def test_relative_entropy_is_non_negative(self) -> None:
        rng = np.random.default_rng(21)
        for index in range(100):
            with self.subTest(index=index):
                rho = random_density(rng, 6)
                sigma = random_density(rng, 6)

                self.assertGreaterEqual(relative_entropy(rho, sigma), -1e-10)

    def test_relative_entropy_requires_positive_floor(self) -> None:
        rho = np.eye(2) / 2

        with self.assertRaises(ValueError):
            relative_entropy(rho, rho, floor=0.0)

    def test_invalid_input_is_rejected(self) -> None:
        with self.assertRaises(DensityMatrixError):
            vn_entropy(np.diag([0.7, 0.7]))

    def test_dimension_mismatch_is_rejected(self) -> None:
        with self.assertRaises(LayoutError):
            relative_entropy(np.eye(2) / 2, np.eye(3) / 3)


class CorrelationSplitTests(unittest.TestCase):
    def test_classical_part_is_ln2_for_equal_amplitudes(self) -> None:
        params = pure_mixed_params(EQUAL, (7, 8))

        split = correlation_split(build_pure_mixed(params), params.layout)

        self.assertAlmostEqual(split.classical, np.log(2), places=9)
        self.assertAlmostEqual(split.quantum, np.log(15 / 8) / 14 + np.log(15 / 7) / 16, places=9)

    def test_parts_add_up_to_total(self) -> None:
        params = random_pure_mixed_params(np.random.default_rng(4), (3, 5))

        split = correlation_split(build_pure_mixed(params), params.layout)

        self.assertAlmostEqual(split.total, split.quantum + split.classical, places=9)


class FidelityTests(unittest.TestCase):
    def test_fidelity_with_itself_is_one(self) -> None:
        params = random_pure_mixed_params(np.random.default_rng(9), (2, 3))
        rho = build_pure_mixed(params)

        self.assertAlmostEqual(fidelity(rho, rho), 1.0, places=10)
        self.assertAlmostEqual(bures_distance(rho, rho), 0.0, places=9)

    def test_orthogonal_pure_states(self) -> None:
        left = np.diag([1.0, 0.0])
        right = np.diag([0.0, 1.0])

        self.assertAlmostEqual(fidelity(left, right), 0.0, places=12)
        self.assertAlmostEqual(bures_distance(left, right), 2.0, places=10)

    def test_commuting_states(self) -> None:
        left = np.diag([0.5, 0.5])
        right = np.diag([0.9, 0.1])

        self.assertAlmostEqual(fidelity(left, right), (np.sqrt(0.45) + np.sqrt(0.05)) ** 2, places=12)

    def test_pure_state_fidelity_is_squared_overlap(self) -> None:
        rng = np.random.default_rng(4)
        for index in range(50):
            with self.subTest(index=index):
                left = random_density(rng, 6, rank=1)
                right = random_density(rng, 6, rank=1)
                overlap = float(np.real(np.trace(left @ right)))

                self.assertAlmostEqual(fidelity(left, right), overlap, places=10)

    def test_fidelity_does_not_drop_under_partial_trace(self) -> None:
        rng = np.random.default_rng(8)
        for index in range(50):
            with self.subTest(index=index):
                rho = random_density(rng, 6, rank=1 + index % 6)
                sigma = random_density(rng, 6, rank=1 + (index // 6) % 6)
                reduced = [partial_trace(item, (2, 3), keep=[0]) for item in (rho, sigma)]

                self.assertGreaterEqual(fidelity(*reduced), fidelity(rho, sigma) - 1e-10)

    def test_bures_distances_for_peaked_weights(self) -> None:
        params = pure_mixed_params(EQUAL, (7, 8), "peaked")
        rho = build_pure_mixed(params)
        rho_star = build_nearest_separable(params)
        rho_zero = build_equimixed_classical(params.layout, EQUAL)

        self.assertAlmostEqual(bures_distance(rho, rho_zero), 2 - 2 * np.sqrt(1 / 28 + 1 / 32), places=10)
        self.assertAlmostEqual(
            bures_distance(rho_star, rho_zero),
            2 - 2 * (np.sqrt(1 / 28) + np.sqrt(1 / 32)),
            places=10,
        )
        self.assertAlmostEqual(bures_distance(rho, rho_star), 2 - np.sqrt(2), places=10)

    def test_fidelity_is_symmetric(self) -> None:
        params = random_pure_mixed_params(np.random.default_rng(1), (2, 2))
        rho = build_pure_mixed(params)
        rho_star = build_nearest_separable(params)

        self.assertAlmostEqual(fidelity(rho, rho_star), fidelity(rho_star, rho), places=10)


class IndexTests(unittest.TestCase):
    def setUp(self) -> None:
        self.params = pure_mixed_params(EQUAL, (7, 8))
        self.layout = self.params.layout
        self.rho = build_pure_mixed(self.params)

    def test_q_decoherence_initial_value(self) -> None:
        self.assertAlmostEqual(q_decoherence(self.rho, self.layout), 1 / 224, places=15)

    def test_q_decoherence_vanishes_on_nearest_separable(self) -> None:
        self.assertEqual(q_decoherence(build_nearest_separable(self.params), self.layout), 0.0)

    def test_q_relaxation_initial_value(self) -> None:
        self.assertAlmostEqual(q_relaxation(self.rho, self.layout), 1 / 28 + 1 / 32, places=14)

    def test_weighted_relaxation_vanishes_on_equimixed_state(self) -> None:
        rho_zero = build_equimixed_classical(self.layout, EQUAL)

        self.assertAlmostEqual(q_relaxation_weighted(rho_zero, self.layout, EQUAL), 0.0, places=15)
        self.assertAlmostEqual(q_relaxation_weighted(self.rho, self.layout, EQUAL), 0.0, places=15)

    def test_indices_require_two_level_system(self) -> None:
        params = random_pure_mixed_params(np.random.default_rng(0), (1, 1, 1))

        with self.assertRaises(LayoutError):
            q_decoherence(build_pure_mixed(params), params.layout)

    def test_min_pt_eigenvalue(self) -> None:
        minimum = min_pt_eigenvalue(self.rho, self.layout)

        self.assertAlmostEqual(minimum.min_eigenvalue, -0.5 * np.sqrt(1 / 56), places=12)
        self.assertEqual(minimum.negative_count, 1)

    def test_min_pt_eigenvalue_of_two_by_two_sectors(self) -> None:
        params = pure_mixed_params(EQUAL, (2, 2))

        minimum = min_pt_eigenvalue(build_pure_mixed(params), params.layout)

        self.assertAlmostEqual(minimum.min_eigenvalue, -0.25, places=12)

    def test_partial_transpose_negatives_are_coherence_singular_values(self) -> None:
        layout = SpaceLayout(d_s=2, sector_dims=(3, 4))
        rng = np.random.default_rng(17)
        raw = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        coherence = 0.1 * raw / np.linalg.norm(raw, 2)
        first, second = layout.sa_indices(0, 0), layout.sa_indices(1, 1)
        rho = np.zeros((layout.sa_dim, layout.sa_dim), dtype=complex)
        rho[first, first] = 1 / 6
        rho[second, second] = 1 / 8
        rho[np.ix_(first, second)] = coherence
        rho[np.ix_(second, first)] = coherence.conj().T

        singular_values = coherence_singular_values(rho, layout)
        spectrum = partial_transpose_spectrum(rho, layout)
        minimum = min_pt_eigenvalue(rho, layout)

        self.assertAlmostEqual(singular_values[0], 0.1, places=12)
        np.testing.assert_allclose(spectrum[:3], -singular_values, atol=1e-12)
        self.assertEqual(minimum.negative_count, 3)

    def test_nearest_separable_has_positive_partial_transpose(self) -> None:
        minimum = min_pt_eigenvalue(build_nearest_separable(self.params), self.layout)

        self.assertEqual(minimum.negative_count, 0)


class ProductStateTests(unittest.TestCase):
    def setUp(self) -> None:
        self.rng = np.random.default_rng(21)
        self.layout = SpaceLayout(d_s=2, sector_dims=(2, 3))

    def test_factorization_recovers_density(self) -> None:
        product = random_product_state(self.rng, self.layout)

        recovered = product_state_from_matrix(product.density_matrix(), self.layout)

        np.testing.assert_allclose(recovered.density_matrix(), product.density_matrix(), atol=1e-10)

    def test_entangled_pure_state_is_rejected(self) -> None:
        params = pure_mixed_params(EQUAL, (1, 1))

        with self.assertRaises(NonProductStateError):
            product_state_from_matrix(build_pure_mixed(params), params.layout)

    def test_mixed_state_is_rejected(self) -> None:
        with self.assertRaises(NonProductStateError):
            product_state_from_matrix(np.eye(self.layout.sa_dim) / self.layout.sa_dim, self.layout)

    def test_unnormalized_factor_is_rejected(self) -> None:
        with self.assertRaises(NonProductStateError):
            ProductState(alpha=np.array([1.0, 1.0]), beta=np.array([1.0, 0.0, 0.0, 0.0, 0.0]))


class DerivativeCertificateTests(unittest.TestCase):
    def test_derivative_is_non_negative_along_product_directions(self) -> None:
        rng = np.random.default_rng(12)
        params = pure_mixed_params(EQUAL, (2, 3))

        values = [nearest_separable_derivative(params, random_product_state(rng, params.layout)) for _ in range(10)]

        self.assertGreaterEqual(min(values), -1e-6)

    def test_accepts_product_density_matrix(self) -> None:
        rng = np.random.default_rng(12)
        params = random_pure_mixed_params(rng, (2, 2))
        product = random_product_state(rng, params.layout)

        from_state = nearest_separable_derivative(params, product)
        from_matrix = nearest_separable_derivative(params, product.density_matrix())

        self.assertAlmostEqual(from_state, from_matrix, places=4)

    def test_step_must_be_small_and_positive(self) -> None:
        params = pure_mixed_params(EQUAL, (2, 2))
        product = random_product_state(np.random.default_rng(0), params.layout)

        for step in (0.0, -1e-6, 1e-2):
            with self.subTest(step=step):
                with self.assertRaises(ValueError):
                    nearest_separable_derivative(params, product, h=step)


if __name__ == "__main__":
    unittest.main()
