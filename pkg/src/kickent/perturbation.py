"""Second-order perturbative entanglement production.

For the coupling V = sum_a q1_a (x) q2_a the linear entropy after t steps is,
to second order in eps,

    S_PT(t) = (2 eps^2 / hbar^2) sum_{l,m=1}^{t} D(l, m),
    D(l, m) = sum_{a,b} C1_ab(l, m) C2_ab(l, m),

with C_ab(l, m) the covariance of the freely evolved operators
q_a(l) = U^-l q_a U^l in the subsystem's initial state.  Assuming
D(l, m) ~ D0 exp(-gamma |l - m|) gives the production rate
Gamma ~ S0 D0 coth(gamma / 2).
"""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .evolution import DenseMap, EntropySeries
from .numeric import NumericalError


class FitError(RuntimeError):
    """Decay or rate fit could not be performed (e.g. non-chaotic dynamics)."""


@dataclass
class CorrelationTensor:
    C: np.ndarray  # (n_ops, n_ops, T, T); C[a, b, l-1, m-1]
    subsystem: int = 1

    @property
    def n_ops(self):
        return self.C.shape[0]

    @property
    def T(self):
        return self.C.shape[2]

    def symmetry_error(self):
        """max |C[a,b,l,m] - conj(C[b,a,m,l])|."""
        return float(np.max(np.abs(self.C - np.conj(self.C.transpose(1, 0, 3, 2)))))


@dataclass
class DMatrix:
    D: np.ndarray  # (T, T); D[l-1, m-1]
    D0: float = float("nan")
    gamma: float = float("nan")
    fit_window: tuple = (0, 0)
    fit_residual: float = float("nan")
    profile: np.ndarray = field(default=None, repr=False)

    @property
    def T(self):
        return self.D.shape[0]

    def symmetry_error(self):
        return float(np.max(np.abs(self.D - self.D.conj().T)))


@dataclass
class RateResult:
    S0: float
    Gamma: float
    Gamma0: float
    gamma: float
    Gamma_predicted: float
    window: tuple
    r2: float
    slope_stderr: float

    @property
    def ratio(self):
        return self.Gamma / self.Gamma0

    @property
    def ratio_predicted(self):
        return self.Gamma_predicted / self.Gamma0


def _as_map(U):
    if hasattr(U, "apply"):
        return U
    return DenseMap(np.asarray(U))  # rejects non-unitary input


def _op_apply(q, x):
    q = np.asarray(q)
    if q.ndim == 1:
        return q[:, None] * x
    return q @ x


def _compact(q):
    """Diagonal operators are applied as vectors."""
    q = np.asarray(q, dtype=complex)
    d = np.diagonal(q)
    if np.array_equal(q, np.diag(d)):
        return d.copy()
    return q


def heisenberg_correlations(U, q_ops, psi0, T, subsystem=1):
    """Covariances C[a, b, l, m] of Heisenberg operators q_a(l), q_b(m).

    Uses <q_a(l) q_b(m)> = <q_a psi(l)| U^(l-m) |q_b psi(m)> for l >= m with
    psi(m) = U^m psi0: the columns q_b psi(m) are propagated forward
    together, one lag at a time, and the l < m half follows from Hermitian
    symmetry.  Heisenberg matrices are never formed.
    """
    umap = _as_map(U)
    psi0 = np.asarray(psi0, dtype=complex)
    if T < 1:
        raise ValueError("T must be at least 1")
    if abs(np.vdot(psi0, psi0).real - 1.0) > 1e-12:
        raise ValueError("initial state is not normalized")
    ops = [_compact(q) for q in q_ops]
    n = len(ops)
    d = psi0.shape[0]

    states = np.empty((d, T), dtype=complex)
    psi = psi0
    for m in range(T):
        psi = umap.apply(psi)
        states[:, m] = psi
    phi = np.stack([_op_apply(q, states) for q in ops])  # (n, d, T)
    means = np.einsum("dt,adt->at", states.conj(), phi).real

    raw = np.empty((n, n, T, T), dtype=complex)
    bra = phi.conj()
    # cols holds U^s q_b psi(m) for m = 0 .. T-1-s, all b side by side
    cols = phi.transpose(1, 0, 2).reshape(d, n * T)
    width = T
    for s in range(T):
        blk = cols.reshape(d, n, width)
        # raw[a, b, m+s, m] = <phi_a(m+s) | blk_b(m)>
        vals = np.einsum("adm,dbm->abm", bra[:, :, s:], blk)
        idx = np.arange(width)
        raw[:, :, idx + s, idx] = vals
        if s + 1 < T:
            width -= 1
            cols = umap.apply(blk[:, :, :width].reshape(d, n * width))
    upper = np.triu_indices(T, 1)
    raw[:, :, upper[0], upper[1]] = np.conj(raw.transpose(1, 0, 3, 2)[:, :, upper[0], upper[1]])
    C = raw - means[:, None, :, None] * means[None, :, None, :]
    return CorrelationTensor(C, subsystem)


def heisenberg_correlations_dense(U, q_ops, psi0, T):
    """Reference route through explicit Heisenberg matrices (U^l)^dag q U^l."""
    U = np.asarray(U, dtype=complex)
    psi0 = np.asarray(psi0, dtype=complex)
    n = len(q_ops)
    qt = np.empty((n, T) + U.shape, dtype=complex)
    for a, q in enumerate(q_ops):
        cur = np.asarray(q, dtype=complex)
        for l in range(T):
            cur = U.conj().T @ cur @ U
            qt[a, l] = cur
    vecs = qt @ psi0  # q_a(l) psi0, shape (n, T, d)
    mean = np.einsum("i,ali->al", psi0.conj(), vecs)
    two = np.einsum("ali,bmi->ablm", vecs.conj(), vecs)
    return CorrelationTensor(two - mean[:, None, :, None] * mean[None, :, None, :])


def d_matrix(C1, C2):
    """D[l, m] = sum_ab C1[a,b,l,m] C2[a,b,l,m] (no complex conjugation)."""
    if C1.C.shape != C2.C.shape:
        raise ValueError(f"correlation shapes differ: {C1.C.shape} vs {C2.C.shape}")
    return DMatrix(np.einsum("abij,abij->ij", C1.C, C2.C))


def perturbative_prefactor(eps, hbar):
    return 2.0 * eps**2 / hbar**2


def s_pt_series(D, eps, hbar, dim=None):
    """S_PT(t) for t = 0..T (S_PT(0) = 0)."""
    S0 = perturbative_prefactor(eps, hbar)
    Dm = D.D
    re = kernels.cumulative_block_sums(np.ascontiguousarray(Dm.real))
    im = kernels.cumulative_block_sums(np.ascontiguousarray(Dm.imag))
    scale = np.abs(Dm).sum()
    if np.any(np.abs(im) > 1e-9 * np.abs(re) + 1e-13 * scale):
        raise NumericalError("imaginary part of the D double sum is not negligible")
    values = np.concatenate([[0.0], S0 * re])
    return EntropySeries(np.arange(D.T + 1), values)


def decay_profile(D, l0=5):
    """C(s) = mean over l >= l0 of Re D[l, l+s], s = 0, 1, ..."""
    return kernels.diagonal_means(np.ascontiguousarray(D.D.real), max(l0 - 1, 0))


def fit_decay(D, l0=5, noise_floor=1e-3, decay_tol=0.03):
    """Fit D(l, m) ~ D0 exp(-gamma |l - m|) from the lag profile C(s).

    D0 = C(0).  The profile must die out: if the mean |C(s)| over the lags
    between a quarter and a half of the available range exceeds
    ``decay_tol * D0`` the dynamics is treated as non-chaotic and FitError
    is raised.  gamma is the least-squares slope of log(|C(s)| / D0)
    through the origin over the leading run s = 1 .. s_max in which |C(s)|
    keeps decreasing and stays above ``noise_floor * D0``.  When already
    |C(1)| is below the floor only the bound gamma = -log(noise_floor) is
    available and is returned.

    Fills the fit fields of ``D`` and returns ``(D0, gamma, diagnostics)``.
    """
    prof = decay_profile(D, l0)
    n = len(prof)
    if n < 5:
        raise FitError(f"need at least 4 usable lags, have {n - 1}")
    D0 = float(prof[0])
    if not D0 > 0:
        raise FitError(f"lag-0 average is not positive ({D0!r})")
    mag = np.abs(prof) / D0
    tail = float(mag[max(n // 4, 1) : max(n // 2, 2)].mean())
    if tail > decay_tol:
        raise FitError(f"lag profile does not decay (tail level {tail:.3g} of D0)")
    if mag[1] >= 1.0:
        raise FitError("lag profile does not decay at lag 1")

    s_max = 0
    while s_max + 1 < n and mag[s_max + 1] >= noise_floor and mag[s_max + 1] < mag[s_max]:
        s_max += 1
    if s_max == 0:
        gamma, resid = float(-np.log(noise_floor)), 0.0
    else:
        s = np.arange(1, s_max + 1)
        y = np.log(mag[1 : s_max + 1])
        gamma = float(-np.dot(s, y) / np.dot(s, s))
        resid = float(np.sqrt(np.mean((y + gamma * s) ** 2)))
    D.D0, D.gamma = D0, gamma
    D.fit_window, D.fit_residual, D.profile = (1, s_max), resid, prof
    diag = {"s_max": s_max, "residual": resid, "tail": tail, "floor_limited": s_max == 0}
    return D0, gamma, diag


def production_rate(S, gamma, saturation_cap=0.2, dim=None):
    """OLS slope of S(t) over the t-linear window.

    The window starts at ceil(5 / gamma) and ends before S first exceeds
    ``saturation_cap * (1 - 1/dim)`` (or at the end of the series).
    Returns ``(slope, (t_lo, t_hi), r2, slope_stderr)``.
    """
    t = np.asarray(S.times)
    v = np.asarray(S.values)
    t_lo = max(int(np.ceil(5.0 / gamma)), 1) if gamma > 0 else 1
    cap = saturation_cap * (1.0 - 1.0 / dim) if dim else saturation_cap
    over = np.nonzero(v > cap)[0]
    t_hi = int(t[over[0] - 1]) if over.size else int(t[-1])
    sel = (t >= t_lo) & (t <= t_hi)
    if sel.sum() < 3:
        raise FitError(f"empty t-linear window [{t_lo}, {t_hi}]")
    x, y = t[sel].astype(float), v[sel]
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    n = len(x)
    stderr = float(np.sqrt(np.sum(resid**2) / max(n - 2, 1) / np.sum((x - x.mean()) ** 2)))
    return float(slope), (int(x[0]), int(x[-1])), r2, stderr


def coth_prediction(Gamma0, gamma):
    """Gamma0 * coth(gamma / 2)."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return Gamma0 / np.tanh(0.5 * gamma)
