from math import comb

import numpy as np
import pytest

from kickent import husimi, top
from conftest import random_state


def stellar_points(psi, j):
    """Husimi zeros of a pure spin state from the roots of its stellar polynomial.

    <theta,phi|psi> is proportional to sum_m psi_m sqrt(C(2j, j-m)) z^(j-m)
    with z = conj(gamma), gamma = exp(i phi) tan(theta/2), m = j..-j.  A
    degree drop of r puts r zeros at the south pole.
    """
    n = int(2 * j)
    coef = np.array([psi[i] * np.sqrt(comb(n, i)) for i in range(n + 1)])  # power i of z
    poly = coef[::-1]
    lead = np.argmax(np.abs(poly) > 1e-14 * np.abs(poly).max())
    roots = np.roots(poly[lead:])
    gam = np.conj(roots)
    pts = [husimi._unit(2 * np.arctan(abs(g)), np.angle(g)) for g in gam]
    pts += [np.array([0.0, 0.0, -1.0])] * lead
    return np.array(pts)


def _pure(psi):
    return np.outer(psi, psi.conj())


@pytest.mark.parametrize("j,n", [(5, 64), (10, 128), (30, 256)])
def test_random_state_zeros_match_stellar_roots(j, n):
    psi = random_state(np.random.default_rng(7 + j), int(2 * j + 1))
    grid = husimi.husimi_grid(_pure(psi), j, n, n, scale="log")
    rep = husimi.find_minima(grid)
    assert rep.n_zeros_total == 2 * j
    got = np.array([husimi._unit(m.theta, m.phi) for m in rep.zeros])
    want = stellar_points(psi, j)
    for w in want:
        assert np.min(np.linalg.norm(got - w, axis=1)) < 1e-3


def test_north_state_has_degenerate_south_zero():
    j = 5
    p = top.TopParams(j)
    psi = top.spin_coherent(p, 0.0, 0.0)
    th = np.linspace(0.1, 3.0, 7)
    assert np.allclose(husimi.husimi_eval(_pure(psi), j, th, 0.4), np.cos(th / 2) ** (4 * j))
    rep = husimi.find_minima(husimi.husimi_grid(_pure(psi), j, 64, 64, scale="log"))
    assert rep.n_zeros == 1
    z = rep.zeros[0]
    assert z.theta == pytest.approx(np.pi) and z.multiplicity == 2 * j and z.degenerate


def test_coherent_state_peak_location():
    j, th0, ph0 = 20, 0.89, 0.63
    psi = top.spin_coherent(top.TopParams(j), th0, ph0)
    g = husimi.husimi_grid(_pure(psi), j, 128, 128)
    i, k = np.unravel_index(np.argmax(g.H), g.H.shape)
    assert abs(g.theta[i] - th0) <= np.pi / 128
    assert abs(g.phi[k] - ph0) <= 2 * np.pi / 128
    assert g.H.max() <= 1 + 1e-12


def test_normalization(rng):
    j = 10
    A = rng.normal(size=(21, 21)) + 1j * rng.normal(size=(21, 21))
    rho = A @ A.conj().T
    rho /= np.trace(rho)
    assert abs(husimi.husimi_grid(rho, j, 128, 128).normalization() - 1) < 1e-4


def test_eval_matches_grid_and_validates(rng):
    j = 3
    psi = random_state(rng, 7)
    g = husimi.husimi_grid(_pure(psi), j, 16, 16)
    direct = husimi.husimi_eval(_pure(psi), j, np.full(16, g.theta[3]), g.phi)
    assert np.max(np.abs(direct - g.H[3])) < 1e-14
    assert abs(g.north - abs(psi[0]) ** 2) < 1e-14
    assert abs(g.south - abs(psi[-1]) ** 2) < 1e-14
    with pytest.raises(ValueError):
        husimi.husimi_eval(np.eye(3), j, 0.1, 0.1)
    with pytest.raises(ValueError):
        husimi.husimi_eval(np.array([[0, 1], [0, 0]]), 0.5, 0.3, 0.2)
    with pytest.raises(ValueError):
        husimi.find_minima(g)
    with pytest.raises(ValueError):
        husimi.husimi_grid(_pure(psi), j, 4, 16)


def test_mixed_state_minima_positive():
    """A maximally mixed spin has flat H with no zeros."""
    j = 4
    rho = np.eye(9) / 9
    g = husimi.husimi_grid(rho, j, 32, 32, scale="log")
    assert np.allclose(g.H, 1 / 9)
    assert husimi.find_minima(g).n_zeros == 0


def test_report_dict_roundtrip():
    j = 2
    psi = top.spin_coherent(top.TopParams(j), 0.0, 0.0)
    rep = husimi.find_minima(husimi.husimi_grid(_pure(psi), j, 32, 32, scale="log"))
    d = rep.to_dict()
    assert d["n_zeros_with_multiplicity"] == 4
    assert d["minima"][0]["degenerate"] is True
