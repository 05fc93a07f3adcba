"""Dense complex linear algebra used by the kicked maps.

Everything here is a thin, checked layer over numpy/scipy.  Diagonal
unitaries are kept as 1-D phase vectors and applied by broadcasting.
"""
import numpy as np
import scipy.linalg

UNITARY_TOL = 1e-12
HERMITIAN_TOL = 1e-10
# largest dense dimension we are willing to allocate (rows or cols)
MAX_DIM = 1 << 15


class NumericalError(RuntimeError):
    """An invariant of the numerical substrate was violated."""


def kron(a, b):
    """Kronecker product with a guard against infeasible sizes.

    ``out[i*rB + k, j*cB + l] = a[i, j] * b[k, l]``.
    """
    a = np.atleast_2d(np.asarray(a))
    b = np.atleast_2d(np.asarray(b))
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if rows > MAX_DIM or cols > MAX_DIM:
        raise ValueError(f"kron result {rows}x{cols} exceeds MAX_DIM={MAX_DIM}")
    return np.kron(a, b)


def max_abs(a):
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def is_hermitian(h, tol=HERMITIAN_TOL):
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and max_abs(h - h.conj().T) < tol


def unitarity_error(u):
    u = np.asarray(u)
    return max_abs(u.conj().T @ u - np.eye(u.shape[1]))


def is_unitary(u, tol=UNITARY_TOL):
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and unitarity_error(u) < tol


def hermitian_eig(h):
    """Eigen-decomposition of a Hermitian matrix.

    Returns ascending real eigenvalues and a unitary matrix whose columns
    are the eigenvectors.  Raises ``ValueError`` for non-Hermitian input.
    """
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise ValueError("hermitian_eig: input is not Hermitian")
    # symmetrize away the tolerated asymmetry before handing to LAPACK
    w, v = scipy.linalg.eigh(0.5 * (h + h.conj().T))
    return w, v


def unitary_exp(h, s):
    """Return ``exp(-1j * s * h)`` for Hermitian ``h``."""
    w, v = hermitian_eig(h)
    u = (v * np.exp(-1j * s * w)) @ v.conj().T
    return u


def dft(v, direction="forward", axis=0):
    """Unitary DFT (1/sqrt(N) in both directions) along ``axis``."""
    v = np.asarray(v, dtype=complex)
    if v.shape[axis] < 1:
        raise ValueError("dft: empty axis")
    if direction == "forward":
        return np.fft.fft(v, axis=axis, norm="ortho")
    if direction == "inverse":
        return np.fft.ifft(v, axis=axis, norm="ortho")
    raise ValueError(f"dft: unknown direction {direction!r}")


def phases(angles):
    """Unit-modulus phase vector ``exp(-1j * angles)``."""
    return np.exp(-1j * np.asarray(angles, dtype=float))
