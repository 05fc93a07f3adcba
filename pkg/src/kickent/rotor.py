"""Quantum kicked rotor on the 2*pi x 2*pi torus.

Position grid theta_n = 2 pi n / N.  Momentum amplitudes are stored in
numpy's DFT index order: index i carries the signed integer
n' = i for i < N/2 and n' = i - N otherwise (``np.fft.fftfreq(N) * N``),
with momentum I = hbar * n'.
"""
from dataclasses import dataclass, field

import numpy as np

from .numeric import dft

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class RotorParams:
    N: int
    k: float = 0.0
    theta_grid: np.ndarray = field(init=False, repr=False, compare=False)
    momentum_grid: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("grid size must be positive")
        if self.k < 0:
            raise ValueError("k must be non-negative")
        object.__setattr__(self, "theta_grid", TWO_PI * np.arange(self.N) / self.N)
        object.__setattr__(self, "momentum_grid", self.hbar * self.momentum_index)

    @property
    def hbar(self):
        return TWO_PI / self.N

    @property
    def momentum_index(self):
        """Signed integer n' for each DFT index."""
        return np.rint(np.fft.fftfreq(self.N) * self.N).astype(int)

    @property
    def dim(self):
        return self.N


def rotor_space(hbar, k=0.0):
    """Torus quantization: N = 2 pi / hbar must be an integer."""
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    ratio = TWO_PI / hbar
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9:
        raise ValueError(f"2*pi/hbar = {ratio!r} is not an integer; no torus quantization")
    return RotorParams(n, k)


def rotor_free_phases(p):
    """exp(-i I^2 / (2 hbar)) in DFT index order."""
    return np.exp(-1j * p.momentum_grid**2 / (2 * p.hbar))


def rotor_kick_phases(p):
    """exp(-i k cos(theta) / hbar) on the position grid."""
    return np.exp(-1j * p.k * np.cos(p.theta_grid) / p.hbar)


def _expand(v, ndim):
    return v.reshape(v.shape + (1,) * (ndim - 1))


def rotor_step(p, psi, kick=None, free=None):
    """One Floquet period in the position basis: kick, then free rotation.

    ``psi`` may carry extra trailing axes (batched columns); the map acts
    along axis 0.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[0] != p.N:
        raise ValueError(f"state has length {psi.shape[0]}, rotor grid has {p.N}")
    kick = rotor_kick_phases(p) if kick is None else kick
    free = rotor_free_phases(p) if free is None else free
    x = _expand(kick, psi.ndim) * psi
    x = dft(x, "forward", axis=0)
    x *= _expand(free, psi.ndim)
    return dft(x, "inverse", axis=0)


def rotor_floquet_dense(p):
    """Dense N x N Floquet matrix; for cross-checks on small grids."""
    f = dft(np.eye(p.N), "forward", axis=0)
    return f.conj().T @ (rotor_free_phases(p)[:, None] * f) * rotor_kick_phases(p)[None, :]


def rotor_coupling_phases(p, eps):
    """exp(-i eps cos(theta_a - theta_b) / hbar) on the product grid, flattened."""
    th = p.theta_grid
    return np.exp(-1j * eps * np.cos(th[:, None] - th[None, :]) / p.hbar).ravel()


def rotor_coupling_factors(p):
    """cos(a - b) = cos a cos b + sin a sin b, as diagonal operator pairs."""
    c = np.diag(np.cos(p.theta_grid)).astype(complex)
    s = np.diag(np.sin(p.theta_grid)).astype(complex)
    return [(c, c.copy()), (s, s.copy())]


def default_sigma(p):
    """Width with equal position and momentum spread."""
    return np.sqrt(p.hbar / 2)


def torus_coherent(p, theta0, I0, sigma=None):
    """Wrapped Gaussian centred at (theta0, I0) on the position grid."""
    sigma = default_sigma(p) if sigma is None else sigma
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    n0 = I0 / p.hbar
    if abs(n0 - round(n0)) > 1e-9:
        raise ValueError(f"I0={I0} is not on the momentum grid (spacing {p.hbar})")
    I0 = round(n0) * p.hbar
    # images beyond |x| > 2 sigma sqrt(14 ln 10) contribute < 1e-14
    reach = 2.0 * sigma * np.sqrt(14.0 * np.log(10.0))
    W = max(1, int(np.ceil((reach + np.pi) / TWO_PI)))
    th = p.theta_grid[:, None] + TWO_PI * np.arange(-W, W + 1)[None, :]
    psi = np.sum(np.exp(-((th - theta0) ** 2) / (4 * sigma**2) + 1j * I0 * th / p.hbar), axis=1)
    return psi / np.linalg.norm(psi)
