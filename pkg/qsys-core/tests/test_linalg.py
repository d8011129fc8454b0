import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.engine.errors import NotAProjection, ShapeMismatch
from src.engine.linalg import (
    Tolerance,
    as_cmat,
    cluster_sorted,
    fix_row_phases,
    is_coisometry,
    is_projection,
    is_unitary,
    kron,
    orthonormal_kernel,
    random_hermitian,
    random_unitary,
    seeded_rng,
    split_projection,
)


TOL = Tolerance(1e-9)


def test_tolerance_bound_and_validation():
    assert Tolerance(1e-9, 1e-6).bound(scale=2.0) == pytest.approx(1e-9 + 2e-6)
    assert Tolerance(1e-9).accepts(5e-10)
    assert not Tolerance(1e-9).accepts(float("nan"))
    with pytest.raises(ValueError):
        Tolerance(0.0)
    with pytest.raises(ValueError):
        Tolerance(1e-9, -1.0)


def test_as_cmat_rejects_bad_input():
    with pytest.raises(ShapeMismatch):
        as_cmat([1.0, 2.0])
    with pytest.raises(ShapeMismatch):
        as_cmat([[np.inf]])


def test_unitary_residuals():
    u = random_unitary(4, seeded_rng(3))
    assert is_unitary(u, TOL).passed
    assert not is_unitary(2 * u, TOL).passed
    assert is_unitary(np.zeros((2, 3)), TOL).value == float("inf")


@given(dim=st.integers(min_value=1, max_value=16), data=st.data())
@settings(max_examples=40, deadline=None)
def test_split_projection_contract(dim: int, data):
    rank = data.draw(st.integers(min_value=0, max_value=dim))
    seed = data.draw(st.integers(min_value=0, max_value=2**16))
    v = random_unitary(dim, seeded_rng(seed))[:, :rank]
    p = v @ v.conj().T
    u = split_projection(p, TOL)
    assert u.shape == (rank, dim)
    assert np.max(np.abs(u @ u.conj().T - np.eye(rank)), initial=0.0) < 1e-9
    assert np.max(np.abs(u.conj().T @ u - p)) < 1e-9


def test_split_projection_is_deterministic():
    p = np.full((3, 3), 1 / 3, dtype=np.complex128)
    first = split_projection(p, TOL)
    assert np.array_equal(first, split_projection(p.copy(), TOL))
    assert first[0, 0].real > 0 and first[0, 0].imag == 0


def test_split_projection_rejects_non_projection():
    with pytest.raises(NotAProjection) as excinfo:
        split_projection(2 * np.eye(2), TOL)
    assert excinfo.value.idempotent_residual == pytest.approx(2.0)
    assert excinfo.value.hermitian_residual == 0.0


def test_is_projection_and_coisometry():
    p = np.diag([1.0, 0.0]).astype(np.complex128)
    assert is_projection(p, TOL).passed
    assert is_coisometry(np.array([[1.0, 0.0]]), TOL).passed


def test_random_hermitian_is_seeded():
    a = random_hermitian(5, seed=11)
    assert np.array_equal(a, random_hermitian(5, seed=11))
    assert np.allclose(a, a.conj().T)
    with pytest.raises(ValueError):
        random_hermitian(0, seed=0)


def test_orthonormal_kernel():
    a = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]], dtype=np.complex128)
    kernel = orthonormal_kernel(a)
    assert kernel.shape == (3, 1)
    assert np.max(np.abs(a @ kernel)) < 1e-12
    assert np.allclose(kernel.conj().T @ kernel, np.eye(1))


def test_fix_row_phases_makes_leading_entries_positive():
    rows = np.array([[1j, 1.0], [0.0, -2.0]])
    fixed = fix_row_phases(rows)
    assert fixed[0, 0] == pytest.approx(1.0)
    assert fixed[1, 1] == pytest.approx(2.0)


def test_cluster_sorted_groups_nearby_values():
    groups = cluster_sorted(np.array([0.0, 1.0, 1e-9, 5.0]), gap=1e-6)
    assert groups == [[0, 2], [1], [3]]


def test_kron_of_unitaries_is_unitary():
    rng = seeded_rng(3)
    a, b = random_unitary(2, rng), random_unitary(3, rng)
    product = kron(a, b)
    assert product.shape == (6, 6)
    assert is_unitary(product, TOL).passed
    assert product[0:3, 0:3] == pytest.approx(a[0, 0] * b)


def test_random_unitary_of_size_one_is_a_phase():
    u = random_unitary(1, seeded_rng(5))
    assert u.shape == (1, 1)
    assert abs(u[0, 0]) == pytest.approx(1.0)
    assert np.array_equal(u, random_unitary(1, seeded_rng(5)))
    with pytest.raises(ValueError):
        random_unitary(0, seeded_rng(5))


def test_split_projection_rejects_spectrum_off_by_more_than_tol():
    n = 16
    # Entries of p^2 - p stay near 3e-10 while the nonzero eigenvalue sits 5e-9 above 1
    p = (1 + 5e-9) * np.full((n, n), 1 / n, dtype=np.complex128)
    with pytest.raises(NotAProjection, match="Spectrum"):
        split_projection(p, TOL)
    u = split_projection((1 + 1e-10) * np.full((n, n), 1 / n, dtype=np.complex128), TOL)
    assert u.shape == (1, n)


def test_orthonormal_kernel_of_rounding_noise_is_everything():
    noise = 1e-16 * seeded_rng(2).standard_normal((6, 3))
    kernel = orthonormal_kernel(noise.astype(np.complex128))
    assert kernel.shape == (3, 3)
    assert np.allclose(kernel.conj().T @ kernel, np.eye(3))


def test_orthonormal_kernel_keeps_small_but_real_equations():
    a = np.array([[1e-3, 0.0], [0.0, 0.0]], dtype=np.complex128)
    kernel = orthonormal_kernel(a)
    assert kernel.shape == (2, 1)
    assert abs(kernel[1, 0]) == pytest.approx(1.0)
