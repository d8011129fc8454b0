"""
Dense complex matrix kernel.

Every 2-cell in the engine is a dictionary of complex128 blocks; this module holds
the handful of matrix operations the rest of the engine is built on.
"""

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy import linalg as sla
from scipy.stats import unitary_group

from ..config import settings
from .errors import NotAProjection, ShapeMismatch


CMat = npt.NDArray[np.complex128]

# Entries below this modulus never decide a phase
PHASE_THRESHOLD = 1e-8


@dataclass(frozen=True)
class Tolerance:
    atol: float = 1e-9
    rtol: float = 0.0

    def __post_init__(self):
        if not self.atol > 0:
            raise ValueError(f"Absolute tolerance must be positive, got {self.atol}")
        if self.rtol < 0:
            raise ValueError(f"Relative tolerance must be non-negative, got {self.rtol}")

    def bound(self, scale: float = 1.0) -> float:
        return self.atol + self.rtol * scale

    def accepts(self, residual: float, scale: float = 1.0) -> bool:
        return bool(np.isfinite(residual)) and residual <= self.bound(scale)


def default_tolerance() -> Tolerance:
    return Tolerance(settings.qsys_tol, settings.qsys_rel_tol)


@dataclass(frozen=True)
class Residual:
    name: str
    value: float
    bound: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value)) and self.value <= self.bound


def as_cmat(data) -> CMat:
    """Coerce nested sequences or arrays into a finite 2-D complex128 matrix."""
    m = np.asarray(data, dtype=np.complex128)
    if m.ndim != 2:
        raise ShapeMismatch(f"Expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ShapeMismatch("Matrix has non-finite entries")
    return m


def adjoint(m: CMat) -> CMat:
    return m.conj().T


def kron(a: CMat, b: CMat) -> CMat:
    return np.kron(a, b)


def residual_norm(m: CMat) -> float:
    """Largest entry modulus; zero for empty matrices."""
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m)))


def _require_matrix(m: CMat) -> CMat:
    m = np.asarray(m)
    if m.ndim != 2:
        raise ShapeMismatch(f"Expected a 2-D matrix, got shape {m.shape}")
    return m


def is_unitary(m: CMat, tol: Tolerance | None = None) -> Residual:
    tol = tol or default_tolerance()
    m = _require_matrix(m)
    if m.shape[0] != m.shape[1]:
        return Residual("unitary", float("inf"), tol.bound())
    eye = np.eye(m.shape[0])
    value = max(residual_norm(adjoint(m) @ m - eye), residual_norm(m @ adjoint(m) - eye))
    return Residual("unitary", value, tol.bound())


def is_coisometry(m: CMat, tol: Tolerance | None = None) -> Residual:
    tol = tol or default_tolerance()
    m = _require_matrix(m)
    return Residual("coisometry", residual_norm(m @ adjoint(m) - np.eye(m.shape[0])), tol.bound())


def is_projection(m: CMat, tol: Tolerance | None = None) -> Residual:
    tol = tol or default_tolerance()
    m = _require_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"A projection must be square, got shape {m.shape}")
    value = max(residual_norm(m - adjoint(m)), residual_norm(m @ m - m))
    return Residual("projection", value, tol.bound())


def seeded_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; the only source of randomness in the engine."""
    return np.random.Generator(np.random.PCG64(seed))


def random_hermitian(dim: int, seed: int) -> CMat:
    """
    Hermitian matrix with standard complex Gaussian entries (GUE up to scale).

    Args:
        dim: Matrix size, at least 1
        seed: PCG64 seed

    Returns:
        (A + A^*) / 2 for A with i.i.d. entries re + i*im, re and im standard normal
    """
    if dim < 1:
        raise ValueError(f"Dimension must be at least 1, got {dim}")
    rng = seeded_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + adjoint(a)) / 2


def random_unitary(dim: int, rng: np.random.Generator) -> CMat:
    """Haar-random unitary; a single random phase when dim is 1."""
    if dim < 1:
        raise ValueError(f"Dimension must be at least 1, got {dim}")
    if dim == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]], dtype=np.complex128)
    return np.asarray(unitary_group.rvs(dim, random_state=rng), dtype=np.complex128).reshape(dim, dim)


def fix_row_phases(rows: CMat) -> CMat:
    """Rotate each row so that its first non-negligible entry is real positive."""
    fixed = np.array(rows, dtype=np.complex128)
    for r in range(fixed.shape[0]):
        nonzero = np.flatnonzero(np.abs(fixed[r]) > PHASE_THRESHOLD)
        if nonzero.size:
            x = fixed[r, nonzero[0]]
            fixed[r] *= np.conj(x) / abs(x)
    return fixed


def pivoted_orthonormal_basis(columns: CMat, rank: int) -> CMat:
    """
    Orthonormal basis of the span of `columns`, built by Gram-Schmidt with pivoting.

    At every step the pivot is the lowest-index column whose residual norm is at
    least half of the largest one, so tiny perturbations of the input never change
    which columns are chosen.

    Returns:
        Matrix whose `rank` columns are the basis vectors
    """
    residual = np.array(columns, dtype=np.complex128)
    basis = np.zeros((residual.shape[0], rank), dtype=np.complex128)
    for k in range(rank):
        norms = np.linalg.norm(residual, axis=0)
        pivot = int(np.flatnonzero(norms >= 0.5 * norms.max())[0])
        v = residual[:, pivot] / norms[pivot]
        basis[:, k] = v
        residual = residual - np.outer(v, v.conj() @ residual)
    return basis


def split_projection(p: CMat, tol: Tolerance | None = None) -> CMat:
    """
    Split an orthogonal projection as p = u^* u with u u^* = 1.

    The rank is read off the eigenvalues of the Hermitian part (>= 1/2 counts as 1),
    the rows of u come from pivoted Gram-Schmidt on the columns of p and each row
    is phase-fixed.

    Args:
        p: Square matrix that is a projection within tolerance
        tol: Tolerance for the projection residuals

    Returns:
        Coisometry with rank(p) rows

    Raises:
        NotAProjection: If p is not Hermitian and idempotent within tolerance
    """
    tol = tol or default_tolerance()
    p = _require_matrix(p)
    if p.shape[0] != p.shape[1]:
        raise ShapeMismatch(f"A projection must be square, got shape {p.shape}")
    n = p.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)

    hermitian = residual_norm(p - adjoint(p))
    idempotent = residual_norm(p @ p - p)
    if not (tol.accepts(hermitian) and tol.accepts(idempotent)):
        raise NotAProjection(hermitian, idempotent)

    h = (p + adjoint(p)) / 2
    eigenvalues = sla.eigvalsh(h)
    spread = np.minimum(np.abs(eigenvalues), np.abs(eigenvalues - 1.0))
    if not tol.accepts(float(spread.max())):
        raise NotAProjection(
            hermitian,
            idempotent,
            f"Spectrum is not in {{0, 1}}: eigenvalue off by {float(spread.max()):.3e}",
        )

    rank = int(np.count_nonzero(eigenvalues >= 0.5))
    if rank == 0:
        return np.zeros((0, n), dtype=np.complex128)
    return fix_row_phases(adjoint(pivoted_orthonormal_basis(h, rank)))


def orthonormal_kernel(a: CMat, rcond: float | None = None, atol: float | None = None) -> CMat:
    """
    Canonical orthonormal basis (as columns) of the kernel of `a`.

    Singular values at or below max(atol, rcond * largest) count as zero, so a
    system whose equations all vanish up to rounding keeps its whole kernel.
    The basis does not depend on how the SVD picks singular vectors: it is
    rebuilt from the kernel projector with pivoted Gram-Schmidt and phase-fixed.
    """
    rcond = settings.null_space_rcond if rcond is None else rcond
    atol = settings.null_space_atol if atol is None else atol
    n = a.shape[1]
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    if a.shape[0] == 0:
        return np.eye(n, dtype=np.complex128)
    _, s, vh = sla.svd(a, full_matrices=True)
    cutoff = max(atol, rcond * float(s.max(initial=0.0)))
    rank = int(np.count_nonzero(s > cutoff))
    kernel = adjoint(vh[rank:])
    if kernel.shape[1] == 0:
        return kernel.astype(np.complex128)
    projector = kernel @ adjoint(kernel)
    return adjoint(fix_row_phases(adjoint(pivoted_orthonormal_basis(projector, kernel.shape[1]))))


def polar_unitary(m: CMat) -> CMat:
    """Unitary factor of the polar decomposition m = w |m|."""
    w, _ = sla.polar(m)
    return w


def cluster_sorted(values: npt.NDArray[np.float64], gap: float) -> list[list[int]]:
    """Group indices of `values` into runs whose consecutive sorted gaps are below `gap`."""
    order = np.argsort(values, kind="stable")
    groups: list[list[int]] = []
    for idx in order:
        if groups and values[idx] - values[groups[-1][-1]] <= gap:
            groups[-1].append(int(idx))
        else:
            groups.append([int(idx)])
    return groups
