"""Bipartite Floquet evolution, partial trace and linear entropy.

The joint state is a d1 x d2 coefficient matrix ``c`` with
|Psi> = sum_ij c[i, j] |i>|j>.  U1 acts from the left, U2 from the right
(as ``c @ U2.T``) and the coupling, diagonal in the product basis, acts
elementwise.
"""
from dataclasses import dataclass, field

import numpy as np

from . import rotor as _rotor
from . import top as _top
from .numeric import NumericalError, is_unitary

NORM_TOL = 1e-12
RHO_TOL = 1e-12
PSD_TOL = 1e-10


class DenseMap:
    """Subsystem one-step operator held as a dense unitary matrix."""

    def __init__(self, u):
        self.u = np.ascontiguousarray(u, dtype=complex)
        if not is_unitary(self.u):
            raise ValueError("one-step operator is not unitary")
        self.dim = self.u.shape[0]

    def apply(self, x):
        return self.u @ x

    def dense(self):
        return self.u


class RotorMap:
    """Split-step kicked-rotor Floquet operator (never materialized)."""

    def __init__(self, params):
        self.params = params
        self.dim = params.N
        self._kick = _rotor.rotor_kick_phases(params)
        self._free = _rotor.rotor_free_phases(params)

    def apply(self, x):
        return _rotor.rotor_step(self.params, x, self._kick, self._free)

    def dense(self):
        return _rotor.rotor_floquet_dense(self.params)


@dataclass
class FloquetSystem:
    kind: str
    map1: object
    map2: object
    coupling: np.ndarray  # d1 x d2 phases
    factors: list
    eps: float
    hbar: float
    meta: dict = field(default_factory=dict)

    @property
    def dims(self):
        return self.map1.dim, self.map2.dim

    def dense(self):
        """exp(-i eps V/hbar) (U1 (x) U2) as one matrix; small dims only."""
        u = np.kron(self.map1.dense(), self.map2.dense())
        return self.coupling.ravel()[:, None] * u


def coupled_tops(j, k1, k2, eps, hbar=1.0):
    p1 = _top.TopParams(j, hbar, k1)
    p2 = _top.TopParams(j, hbar, k2)
    d1, d2 = p1.dim, p2.dim
    return FloquetSystem(
        "top",
        DenseMap(_top.top_floquet(p1)),
        DenseMap(_top.top_floquet(p2)),
        _top.top_coupling(p1, p2, eps).reshape(d1, d2),
        _top.top_coupling_factors(p1),
        eps,
        hbar,
        {"j": j, "k1": k1, "k2": k2, "params": (p1, p2)},
    )


def coupled_rotors(hbar, k1, k2, eps):
    p1 = _rotor.rotor_space(hbar, k1)
    p2 = _rotor.rotor_space(hbar, k2)
    return FloquetSystem(
        "rotor",
        RotorMap(p1),
        RotorMap(p2),
        _rotor.rotor_coupling_phases(p1, eps).reshape(p1.N, p2.N),
        _rotor.rotor_coupling_factors(p1),
        eps,
        p1.hbar,
        {"N": p1.N, "k1": k1, "k2": k2, "params": (p1, p2)},
    )


@dataclass
class BipartiteState:
    coeffs: np.ndarray
    t: int = 0

    @property
    def d1(self):
        return self.coeffs.shape[0]

    @property
    def d2(self):
        return self.coeffs.shape[1]

    def norm_error(self):
        return abs(float(np.vdot(self.coeffs, self.coeffs).real) - 1.0)

    def vector(self):
        return self.coeffs.ravel()


def product_state(psi1, psi2):
    c = np.outer(np.asarray(psi1, dtype=complex), np.asarray(psi2, dtype=complex))
    state = BipartiteState(c)
    if state.norm_error() > NORM_TOL:
        raise ValueError("product_state: factors are not normalized")
    return state


@dataclass
class ReducedDensity:
    rho: np.ndarray

    @property
    def dim(self):
        return self.rho.shape[0]

    def check(self, psd=True):
        """Raise NumericalError if rho is not a density matrix."""
        rho = self.rho
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > RHO_TOL:
            raise NumericalError(f"reduced density not Hermitian (dev {herm:.3g})")
        tr = abs(np.trace(rho).real - 1.0)
        if tr > RHO_TOL:
            raise NumericalError(f"reduced density trace off by {tr:.3g}")
        if psd:
            lo = np.linalg.eigvalsh(rho)[0]
            if lo < -PSD_TOL:
                raise NumericalError(f"reduced density has eigenvalue {lo:.3g}")
        return self


@dataclass
class EntropySeries:
    times: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.times)


def step(system, state):
    """Advance one period: U1 and U2 on their indices, then the coupling."""
    c = state.coeffs
    if c.shape != system.dims:
        raise ValueError(f"state dims {c.shape} do not match system {system.dims}")
    c = system.map1.apply(c)
    c = system.map2.apply(c.T).T
    return BipartiteState(system.coupling * c, state.t + 1)


def reduced_density(state, subsystem=1):
    """Partial trace over the other subsystem."""
    c = state.coeffs
    if subsystem == 2:
        c = c.T
    rho = c @ c.conj().T
    # exact Hermitian symmetry; the matmul leaves ~1e-17 asymmetry
    return ReducedDensity(0.5 * (rho + rho.conj().T))


def purity_of_coeffs(c):
    """Tr rho1^2 straight from the coefficient matrix (the smaller Gram side)."""
    g = c.conj().T @ c if c.shape[1] <= c.shape[0] else c @ c.conj().T
    return float(np.vdot(g, g).real)


def linear_entropy(rd, check=True):
    """1 - Tr rho^2, clamped into [0, 1 - 1/d].

    Deviations beyond 1e-10 outside that range are invariant breaches and
    raise NumericalError instead of being clamped.
    """
    if check:
        rd.check(psd=False)
    s = 1.0 - float(np.vdot(rd.rho, rd.rho).real)
    hi = 1.0 - 1.0 / rd.dim
    if s < -PSD_TOL or s > hi + PSD_TOL:
        raise NumericalError(f"linear entropy {s!r} outside [0, {hi}]")
    return min(max(s, 0.0), hi)


def evolve(system, state, T):
    """Yield states at t = 1..T."""
    for _ in range(T):
        state = step(system, state)
        yield state


def evolve_series(system, state0, T, stride=1, check_norm=True):
    """Linear entropy of subsystem 1 sampled every ``stride`` steps, t = 0..T.

    Returns ``(series, final_state)``.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    if stride < 1:
        raise ValueError("stride must be at least 1")
    d1 = state0.d1
    hi = 1.0 - 1.0 / d1
    times = [0]
    values = [_entropy_fast(state0.coeffs, hi)]
    state = state0
    for state in evolve(system, state0, T):
        if state.t % stride == 0 or state.t == T:
            if check_norm and state.norm_error() > 1e-9:
                raise NumericalError(f"norm drift {state.norm_error():.3g} at t={state.t}")
            times.append(state.t)
            values.append(_entropy_fast(state.coeffs, hi))
    return EntropySeries(np.array(times), np.array(values)), state


def _entropy_fast(c, hi):
    s = 1.0 - purity_of_coeffs(c)
    if s < -PSD_TOL or s > hi + PSD_TOL:
        raise NumericalError(f"linear entropy {s!r} outside [0, {hi}]")
    return min(max(s, 0.0), hi)
