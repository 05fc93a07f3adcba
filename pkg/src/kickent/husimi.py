"""Husimi function of spin density matrices and its minima on the sphere."""
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .top import coherent_amplitudes

LOG_FLOOR = 1e-300
NEG_TOL = 1e-14


def _as_matrix(rho):
    return np.asarray(getattr(rho, "rho", rho), dtype=complex)


class _Evaluator:
    """H(theta, phi) = <theta,phi| rho |theta,phi> via a truncated eigenbasis."""

    def __init__(self, rho, j):
        rho = _as_matrix(rho)
        d = int(round(2 * j)) + 1
        if rho.shape != (d, d):
            raise ValueError(f"rho has shape {rho.shape}, spin j={j} needs {(d, d)}")
        self.j = j
        w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
        keep = w > 1e-16 * max(w[-1], 1e-300)
        # negative eigenvalues beyond rounding would make H negative; keep them
        keep |= w < -NEG_TOL
        self.w = w[keep]
        self.v = v[:, keep]

    def __call__(self, theta, phi):
        theta = np.asarray(theta, dtype=float)
        amps = coherent_amplitudes(self.j, theta, np.broadcast_to(phi, theta.shape))
        proj = np.abs(amps.conj() @ self.v) ** 2
        h = proj @ self.w
        if np.any(h < -NEG_TOL):
            raise ValueError(f"negative Husimi value {h.min():.3g}")
        return np.maximum(h, 0.0)


def husimi_eval(rho, j, theta, phi):
    """<theta, phi| rho |theta, phi> for scalar or array directions."""
    rho = _as_matrix(rho)
    d = int(round(2 * j)) + 1
    if rho.shape != (d, d):
        raise ValueError(f"rho has shape {rho.shape}, spin j={j} needs {(d, d)}")
    c = coherent_amplitudes(j, theta, phi)
    h = np.einsum("...a,ab,...b->...", c.conj(), rho, c)
    if np.any(np.abs(h.imag) > 1e-12):
        raise ValueError("rho is not Hermitian: complex Husimi value")
    h = h.real
    if np.any(h < -NEG_TOL):
        raise ValueError(f"negative Husimi value {np.min(h):.3g}")
    return np.maximum(h, 0.0) if np.ndim(h) else max(float(h), 0.0)


@dataclass
class HusimiGrid:
    j: float
    theta: np.ndarray
    phi: np.ndarray
    H: np.ndarray  # normal-scale values, (n_theta, n_phi)
    north: float
    south: float
    scale: str = "normal"
    rho: np.ndarray = field(default=None, repr=False)

    @property
    def values(self):
        """Grid in the requested scale (log10 for ``scale='log'``)."""
        if self.scale == "log":
            return np.log10(np.maximum(self.H, LOG_FLOOR))
        return self.H

    def pole_values(self):
        if self.scale == "log":
            return tuple(np.log10(max(v, LOG_FLOOR)) for v in (self.north, self.south))
        return self.north, self.south

    def normalization(self):
        """(2j+1)/(4 pi) * integral of H over the sphere (midpoint rule)."""
        dth = np.pi / len(self.theta)
        dph = 2 * np.pi / len(self.phi)
        integral = np.sum(self.H * np.sin(self.theta)[:, None]) * dth * dph
        return (2 * self.j + 1) / (4 * np.pi) * integral


def husimi_grid(rho, j, n_theta=256, n_phi=256, scale="normal"):
    """Sample H on theta_i = (i + 1/2) pi / n_theta, phi_k = 2 pi k / n_phi."""
    if n_theta < 8 or n_phi < 8:
        raise ValueError("grid needs at least 8 points per axis")
    if scale not in ("normal", "log"):
        raise ValueError(f"unknown scale {scale!r}")
    ev = _Evaluator(rho, j)
    theta = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    H = np.empty((n_theta, n_phi))
    for i, th in enumerate(theta):
        H[i] = ev(np.full(n_phi, th), phi)
    north, south = ev(np.array([0.0, np.pi]), np.zeros(2))
    return HusimiGrid(j, theta, phi, H, float(north), float(south), scale, _as_matrix(rho))


@dataclass
class Minimum:
    theta: float
    phi: float
    value: float
    is_zero: bool
    multiplicity: int = 1
    merged: int = 1

    @property
    def degenerate(self):
        return self.multiplicity > 1


@dataclass
class MinimaReport:
    minima: list
    grid_shape: tuple
    refine_levels: int
    final_cell: float
    zero_threshold: float

    @property
    def zeros(self):
        return [m for m in self.minima if m.is_zero]

    @property
    def positive(self):
        return [m for m in self.minima if not m.is_zero]

    @property
    def n_zeros(self):
        """Distinct zero locations."""
        return len(self.zeros)

    @property
    def n_zeros_total(self):
        """Zeros counted with multiplicity."""
        return sum(m.multiplicity for m in self.zeros)

    @property
    def n_positive(self):
        return len(self.positive)

    def to_dict(self):
        return {
            "n_minima": len(self.minima),
            "n_zeros": self.n_zeros,
            "n_zeros_with_multiplicity": self.n_zeros_total,
            "n_positive_minima": self.n_positive,
            "grid_shape": list(self.grid_shape),
            "refine_levels": self.refine_levels,
            "final_cell": self.final_cell,
            "zero_threshold": self.zero_threshold,
            "minima": [
                {
                    "theta": m.theta,
                    "phi": m.phi,
                    "H": m.value,
                    "is_zero": m.is_zero,
                    "multiplicity": m.multiplicity,
                    "degenerate": m.degenerate,
                    "merged": m.merged,
                }
                for m in self.minima
            ],
        }


def _unit(theta, phi):
    return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


def _angles(xyz):
    xyz = xyz / np.linalg.norm(xyz, axis=-1, keepdims=True)
    theta = np.arccos(np.clip(xyz[..., 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(xyz[..., 1], xyz[..., 0]), 2 * np.pi)
    return theta, phi


def _chart(n):
    """Orthonormal tangent vectors at unit vector n."""
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = a - np.dot(a, n) * n
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(n, e1)


def _refine(ev, theta, phi, half, levels, npts, target=0.0, max_extra=6):
    """Resample a shrinking square patch in the tangent plane around a minimum.

    After ``levels`` rounds, refinement continues (at most ``max_extra``
    rounds) while H is above ``target`` and still falls at least tenfold
    per round, which only happens when closing in on a zero.  The returned
    spacing is that of the last of the ``levels`` regular rounds.
    """
    n = _unit(theta, phi)
    u = np.linspace(-half, half, 2 * npts + 1)
    x, y = np.meshgrid(u, u, indexing="ij")
    x, y = x.ravel(), y.ravel()
    best = float(ev(np.array([theta]), np.array([phi]))[0])
    spacing = final = half
    for level in range(levels + max_extra):
        if level >= levels and not (best > target and best < prev / 10):
            break
        prev = best
        e1, e2 = _chart(n)
        scale = half / u[-1]
        pts = n[None] + scale * (x[:, None] * e1[None] + y[:, None] * e2[None])
        th, ph = _angles(pts)
        h = ev(th, ph)
        i = int(np.argmin(h))
        if h[i] <= best:
            best = float(h[i])
            n = pts[i] / np.linalg.norm(pts[i])
        spacing = 2 * half / (2 * npts)
        half = 1.5 * spacing
        if level == levels - 1:
            final = spacing
    th, ph = _angles(n)
    return float(th), float(ph), best, final, n


def _multiplicity(ev, n, r0):
    """Order of the zero at n from the ring-averaged growth H ~ r^(2 mult)."""
    e1, e2 = _chart(n)
    ang = np.linspace(0, 2 * np.pi, 24, endpoint=False)
    ring = np.cos(ang)[:, None] * e1[None] + np.sin(ang)[:, None] * e2[None]

    def mean_on(r):
        th, ph = _angles(n[None] + r * ring)
        return float(np.mean(ev(th, ph)))

    r = r0
    h1 = mean_on(r)
    while h1 < 1e-250 and r < 0.1:
        r *= 4
        h1 = mean_on(r)
    h2 = mean_on(2 * r)
    if h1 <= 0 or h2 <= 0:
        return 1
    return max(1, int(round(np.log(h2 / h1) / (2 * np.log(2.0)))))


def find_minima(grid, zero_threshold=1e-10, refine=True, levels=3, patch_points=30):
    """Strict 8-neighbour minima of a log-scale Husimi grid.

    ``zero_threshold`` is relative to the grid maximum.  With ``refine``
    each minimum is polished by ``levels`` rounds of patch resampling and,
    if it is a zero, its multiplicity is estimated from the local growth
    of H.  Minima that refine onto the same point are merged and flagged.
    """
    if grid.scale != "log":
        raise ValueError("find_minima needs a log-scale grid")
    ev = _Evaluator(grid.rho, grid.j)
    vals = np.ascontiguousarray(grid.values)
    north, south = grid.pole_values()
    rows, cols, nmin, smin = kernels.sphere_minima(vals, north, south)
    cands = [(grid.theta[r], grid.phi[c], grid.H[r, c]) for r, c in zip(rows, cols)]
    if nmin:
        cands.append((0.0, 0.0, grid.north))
    if smin:
        cands.append((np.pi, 0.0, grid.south))

    hmax = float(max(grid.H.max(), grid.north, grid.south))
    thresh = zero_threshold * hmax
    dth = np.pi / len(grid.theta)
    dph = 2 * np.pi / len(grid.phi)
    found = []
    final_cell = dth
    for th, ph, h in cands:
        if refine:
            half = 1.5 * max(dth, np.sin(th) * dph)
            th, ph, h, final_cell, n = _refine(ev, th, ph, half, levels, patch_points, 1e-3 * thresh)
        else:
            n = _unit(th, ph)
        found.append([th, ph, h, n])

    # merge minima whose refined positions coincide within a final cell
    merged = []
    for th, ph, h, n in found:
        for m in merged:
            if np.linalg.norm(m[3] - n) < final_cell:
                m[4] += 1
                if h < m[2]:
                    m[:4] = [th, ph, h, n]
                break
        else:
            merged.append([th, ph, h, n, 1])

    minima = []
    for th, ph, h, n, count in merged:
        zero = h < thresh
        mult = _multiplicity(ev, n, 4 * final_cell) if (zero and refine) else 1
        minima.append(Minimum(th, ph, h, bool(zero), mult, count))
    minima.sort(key=lambda m: (m.theta, m.phi))
    return MinimaReport(minima, grid.H.shape, levels if refine else 0, final_cell, thresh)
