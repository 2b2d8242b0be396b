import unittest

import numpy as np

from decoherence_studio.quantum.qspace import (
    DensityMatrix,
    DensityMatrixError,
    HermiticityError,
    LayoutError,
    SpaceLayout,
    diagonalize,
    hermitian_fn,
    kron,
    partial_trace,
    partial_transpose,
)


def random_density(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    """构造随机密度矩阵，rank 为空时满秩。"""
    columns = rank or dim
    factor = rng.standard_normal((dim, columns)) + 1j * rng.standard_normal((dim, columns))
    matrix = factor @ factor.conj().T
    return matrix / np.trace(matrix)


class SpaceLayoutTests(unittest.TestCase):
    """覆盖基矢顺序和扇区下标。"""

    def test_default_scale_layout_dimensions(self) -> None:
        layout = SpaceLayout(d_s=2, sector_dims=(7, 8), n_e=60)

        self.assertEqual(layout.n_a, 15)
        self.assertEqual(layout.sa_dim, 30)
        self.assertEqual(layout.total_dim, 1800)
        self.assertEqual(layout.sector_offsets, (0, 7))
        self.assertEqual(layout.sa_indices(0, 0).tolist(), list(range(0, 7)))
        self.assertEqual(layout.sa_indices(1, 1).tolist(), list(range(22, 30)))

    def test_sector_count_must_match_system_dimension(self) -> None:
        with self.assertRaises(LayoutError):
            SpaceLayout(d_s=3, sector_dims=(2, 2))

    def test_with_environment_keeps_sectors(self) -> None:
        layout = SpaceLayout(d_s=2, sector_dims=(2, 3)).with_environment(5)

        self.assertEqual(layout.dims, (2, 5, 5))


class PartialOperationTests(unittest.TestCase):
    def setUp(self) -> None:
        self.rng = np.random.default_rng(3)

    def test_partial_trace_recovers_tensor_factors(self) -> None:
        rho_s = random_density(self.rng, 2)
        rho_a = random_density(self.rng, 3)
        rho_e = random_density(self.rng, 4)
        layout = SpaceLayout(d_s=2, sector_dims=(1, 2), n_e=4)
        joint = kron(rho_s, rho_a, rho_e)

        np.testing.assert_allclose(partial_trace(joint, layout, keep=["system"]), rho_s, atol=1e-12)
        np.testing.assert_allclose(partial_trace(joint, layout, keep=["apparatus"]), rho_a, atol=1e-12)
        np.testing.assert_allclose(partial_trace(joint, layout, keep=["system", "environment"]), kron(rho_s, rho_e), atol=1e-12)
        np.testing.assert_allclose(partial_trace(joint, layout, keep=[0, 1]), kron(rho_s, rho_a), atol=1e-12)

    def test_partial_trace_rejects_mismatched_dimensions(self) -> None:
        with self.assertRaises(LayoutError):
            partial_trace(np.eye(5) / 5, (2, 3), keep=[0])

    def test_partial_transpose_acts_on_system_factor(self) -> None:
        rho_s = random_density(self.rng, 2)
        rho_a = random_density(self.rng, 3)
        layout = SpaceLayout(d_s=2, sector_dims=(1, 2))

        transposed = partial_transpose(kron(rho_s, rho_a), layout)

        np.testing.assert_allclose(transposed, kron(rho_s.T, rho_a), atol=1e-14)

    def test_partial_trace_preserves_trace_on_random_matrices(self) -> None:
        dims = (2, 3, 4)
        for index in range(100):
            matrix = self.rng.standard_normal((24, 24)) + 1j * self.rng.standard_normal((24, 24))
            for keep in ([0], [1], [0, 2], [1, 2]):
                with self.subTest(index=index, keep=keep):
                    reduced = partial_trace(matrix, dims, keep=keep)

                    self.assertAlmostEqual(abs(np.trace(reduced) - np.trace(matrix)), 0.0, delta=1e-11)

    def test_partial_transpose_is_involution_and_keeps_trace(self) -> None:
        layout = SpaceLayout(d_s=2, sector_dims=(3, 4))
        for index in range(20):
            with self.subTest(index=index):
                rho = random_density(self.rng, layout.sa_dim, rank=1 + index % 5)

                transposed = partial_transpose(rho, layout)

                np.testing.assert_allclose(partial_transpose(transposed, layout), rho, atol=0.0)
                self.assertAlmostEqual(abs(np.trace(transposed) - 1.0), 0.0, delta=1e-12)

    def test_kron_mixed_product_identity(self) -> None:
        a, c = (self.rng.standard_normal((2, 2)) + 1j * self.rng.standard_normal((2, 2)) for _ in range(2))
        b, d = (self.rng.standard_normal((3, 3)) + 1j * self.rng.standard_normal((3, 3)) for _ in range(2))

        np.testing.assert_allclose(kron(a, b) @ kron(c, d), kron(a @ c, b @ d), atol=1e-12)

    def test_partial_transpose_requires_reduced_state(self) -> None:
        layout = SpaceLayout(d_s=2, sector_dims=(1, 2), n_e=2)

        with self.assertRaises(LayoutError):
            partial_transpose(np.eye(layout.total_dim) / layout.total_dim, layout)


class HermitianFunctionTests(unittest.TestCase):
    def setUp(self) -> None:
        self.rng = np.random.default_rng(11)

    def test_sqrt_squares_back_to_input(self) -> None:
        rho = random_density(self.rng, 6, rank=3)

        root = hermitian_fn(rho, "sqrt")

        np.testing.assert_allclose(root @ root, rho, atol=1e-12)

    def test_log_and_exp_are_inverse_on_full_rank_state(self) -> None:
        rho = random_density(self.rng, 5)

        np.testing.assert_allclose(hermitian_fn(hermitian_fn(rho, "log"), "exp"), rho, atol=1e-12)

    def test_log_of_scaled_identity(self) -> None:
        np.testing.assert_allclose(hermitian_fn(np.eye(3) / 2, "log"), np.log(0.5) * np.eye(3), atol=1e-14)

    def test_log_requires_positive_floor(self) -> None:
        with self.assertRaises(ValueError):
            hermitian_fn(np.eye(2) / 2, "log", floor=0.0)

    def test_identity_function_returns_input(self) -> None:
        for index in range(10):
            with self.subTest(index=index):
                factor = self.rng.standard_normal((8, 8)) + 1j * self.rng.standard_normal((8, 8))
                matrix = (factor + factor.conj().T) / 2

                np.testing.assert_allclose(hermitian_fn(matrix, "identity"), matrix, atol=1e-12)

    def test_sqrt_of_projector_stays_exact_with_zero_floor(self) -> None:
        vector = self.rng.standard_normal(6) + 1j * self.rng.standard_normal(6)
        vector /= np.linalg.norm(vector)
        projector = np.outer(vector, vector.conj())

        np.testing.assert_allclose(hermitian_fn(projector, "sqrt"), projector, atol=1e-12)
        np.testing.assert_allclose(hermitian_fn(projector, "sqrt", floor=0.0), projector, atol=1e-12)
        # 正下限把零本征值抬成 √floor
        lifted = hermitian_fn(projector, "sqrt", floor=1e-4)
        self.assertAlmostEqual(float(np.real(np.trace(lifted))), 1.0 + 5 * 1e-2, places=10)

    def test_sqrt_rejects_negative_floor(self) -> None:
        with self.assertRaises(ValueError):
            hermitian_fn(np.eye(2) / 2, "sqrt", floor=-1e-3)

    def test_asymmetric_input_is_rejected(self) -> None:
        matrix = np.array([[0.5, 1e-6], [0.0, 0.5]])

        with self.assertRaises(HermiticityError):
            hermitian_fn(matrix, "sqrt")

    def test_tiny_asymmetry_is_symmetrized(self) -> None:
        matrix = np.array([[0.5, 1e-12], [0.0, 0.5]])

        result = hermitian_fn(matrix, "identity")

        np.testing.assert_allclose(result, result.conj().T, atol=0.0)

    def test_diagonalize_sorts_descending(self) -> None:
        spectrum = diagonalize(np.diag([0.1, 0.7, 0.2]))

        np.testing.assert_allclose(spectrum.eigenvalues, [0.7, 0.2, 0.1])
        np.testing.assert_allclose(spectrum.reconstruct(), np.diag([0.1, 0.7, 0.2]), atol=1e-15)


class DensityMatrixTests(unittest.TestCase):
    def test_entries_are_read_only(self) -> None:
        rho = DensityMatrix(np.eye(2) / 2, (2,))

        with self.assertRaises(ValueError):
            rho.entries[0, 0] = 1.0

    def test_validate_rejects_wrong_trace(self) -> None:
        with self.assertRaises(DensityMatrixError):
            DensityMatrix(np.eye(2), (2,)).validate()

    def test_validate_rejects_negative_eigenvalue(self) -> None:
        with self.assertRaises(DensityMatrixError):
            DensityMatrix(np.diag([1.2, -0.2]), (2,)).validate()

    def test_dims_must_match_matrix(self) -> None:
        with self.assertRaises(LayoutError):
            DensityMatrix(np.eye(4) / 4, (2, 3))


if __name__ == "__main__":
    unittest.main()
