"""Kicked top: spin-j operators, Floquet factor, coupling, coherent states.

Basis ordering is m = j, j-1, ..., -j throughout.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .numeric import unitary_exp


@dataclass(frozen=True)
class TopParams:
    j: float
    hbar: float = 1.0
    k: float = 0.0

    def __post_init__(self):
        twoj = 2 * self.j
        if self.j <= 0 or abs(twoj - round(twoj)) > 1e-12:
            raise ValueError(f"j must be a positive (half-)integer, got {self.j}")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if self.k < 0:
            raise ValueError("k must be non-negative")

    @property
    def dim(self):
        return int(round(2 * self.j)) + 1

    @property
    def m(self):
        """Magnetic quantum numbers in basis order (j down to -j)."""
        return self.j - np.arange(self.dim)


@dataclass(frozen=True)
class SpinOperators:
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray


def spin_operators(p):
    m = p.m
    # <m+1|J+|m> sits one row above the diagonal in m-descending order
    up = p.hbar * np.sqrt(p.j * (p.j + 1) - m[1:] * (m[1:] + 1))
    jplus = np.diag(up, 1).astype(complex)
    jminus = jplus.conj().T
    jx = 0.5 * (jplus + jminus)
    jy = -0.5j * (jplus - jminus)
    jz = np.diag(p.hbar * m).astype(complex)
    return SpinOperators(jx, jy, jz)


def torsion_phases(p):
    """Diagonal of exp(-i k Jz^2 / (2 j hbar))."""
    return np.exp(-1j * p.k * p.m**2 * p.hbar / (2 * p.j))


def rotation(p):
    """exp(-i pi Jy / (2 hbar)), built through the eigen-decomposition of Jy."""
    return unitary_exp(spin_operators(p).jy, np.pi / (2 * p.hbar))


def top_floquet(p):
    """One kick period: torsion after a pi/2 rotation about y."""
    return torsion_phases(p)[:, None] * rotation(p)


def coherent_amplitudes(j, theta, phi):
    """Spin coherent amplitudes <j m|theta, phi> for arrays of directions.

    Returns an array of shape ``theta.shape + (2j+1,)``.  Evaluated in log
    space so that large j does not overflow the binomial factor.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    twoj = int(round(2 * j))
    n = np.arange(twoj + 1)  # n = j - m
    logbinom = 0.5 * (gammaln(twoj + 1) - gammaln(n + 1) - gammaln(twoj - n + 1))
    s = np.sin(0.5 * theta)[..., None]
    c = np.cos(0.5 * theta)[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ls = np.where(n == 0, 0.0, n * np.log(np.abs(s)))
        lc = np.where(n == twoj, 0.0, (twoj - n) * np.log(np.abs(c)))
    # theta is taken in [0, pi], where both half-angle factors are >= 0
    return np.exp(logbinom + ls + lc + 1j * n * phi[..., None])


def spin_coherent(p, theta, phi):
    """|theta, phi> as a normalized vector in the |j m> basis."""
    if not 0.0 <= theta <= np.pi:
        raise ValueError("theta must lie in [0, pi]")
    psi = coherent_amplitudes(p.j, theta, phi)
    return psi / np.linalg.norm(psi)


def top_coupling(p1, p2, eps):
    """Phases of exp(-i eps Jz1 Jz2 / (j hbar)) on the product basis, flattened."""
    if p1.j != p2.j or p1.hbar != p2.hbar:
        raise ValueError("top coupling needs equal j and hbar on both tops")
    m1, m2 = p1.m, p2.m
    return np.exp(-1j * eps * np.outer(m1, m2) * p1.hbar / p1.j).ravel()


def top_coupling_factors(p):
    """Factors (q1, q2) with eps * q1 (x) q2 / hbar equal to the coupling exponent."""
    q = spin_operators(p).jz / np.sqrt(p.j)
    return [(q, q.copy())]
