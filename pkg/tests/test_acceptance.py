"""Acceptance criteria, one pass/fail line each (printed in the terminal summary)."""
import filecmp
import os
import time

import numpy as np
import pytest

from kickent import config, experiments, numeric, rotor, top
from kickent import evolution as ev
from kickent import perturbation as pt
from conftest import ACCEPTANCE_LINES, random_state

RUNNERS = {
    "fig1a": experiments.run_entropy_experiment,
    "fig1b": experiments.run_entropy_experiment,
    "fig2a": experiments.run_rate_sweep,
    "fig2b": experiments.run_rate_sweep,
    "fig345": experiments.run_husimi_analysis,
}


def report(tag, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    """Each preset run twice into separate directories, with wall-clock time."""
    cache = {}

    def get(name, rep=0):
        if (name, rep) not in cache:
            cfg = config.load_preset(name)
            out = tmp_path_factory.mktemp(f"{name}_{rep}")
            t0 = time.perf_counter()
            rec = RUNNERS[name](cfg, str(out))
            cache[name, rep] = (rec, out, time.perf_counter() - t0)
        return cache[name, rep]

    return get


# ---------------------------------------------------------------- 1


def test_c1_perturbative_fidelity():
    j, k, T = 20, 3.0, 60
    p = top.TopParams(j, 1.0, k)
    psi = top.spin_coherent(p, 0.89, 0.63)
    devs, rels = [], []
    for eps in (1e-3, 5e-4):
        sysm = ev.coupled_tops(j, k, k, eps)
        series, _ = ev.evolve_series(sysm, ev.product_state(psi, psi), T)
        C = pt.heisenberg_correlations(sysm.map1, [sysm.factors[0][0]], psi, T)
        spt = pt.s_pt_series(pt.d_matrix(C, C), eps, 1.0)
        sel = (series.values < 0.1) & (series.times >= 1)
        diff = np.abs(series.values - spt.values)
        devs.append(diff[sel].max())
        rels.append(np.max(diff[sel] / series.values[sel]))
    factor = devs[0] / devs[1]
    report("C1a", rels[0] <= 0.02, f"max relative |S_lin - S_PT| at eps=1e-3 = {rels[0]:.4f} (<= 0.02)")
    report("C1b", factor > 5, f"max abs deviation shrinks by {factor:.2f} when eps halves (> 5)")


# ---------------------------------------------------------------- 2


@pytest.mark.parametrize("name,budget", [("fig1a", 120.0), ("fig1b", 60.0)])
def test_c2_t_linear_region(runs, name, budget):
    rec, _, wall = runs(name)
    row = rec.results[0]
    lo, hi = row.get("window", (0, -1))
    ok = row["status"] == "ok" and hi > lo and row["r2"] > 0.99 and wall <= budget
    report(
        f"C2 {name}",
        ok,
        f"window [{lo}, {hi}], R^2 = {row.get('r2', float('nan')):.5f} (> 0.99), {wall:.1f} s (<= {budget:.0f} s)",
    )


# ---------------------------------------------------------------- 3


def _by_k(rows):
    out = {}
    for r in rows:
        out.setdefault(r["k"], []).append(r)
    return out


def test_c3_top_coth_law(runs):
    rec, _, _ = runs("fig2a")
    rows = rec.results
    bad = [r for r in rows if r["status"] != "ok" or abs(r["ratio"] / r["ratio_predicted"] - 1) > 0.25]
    worst = max(
        (abs(r["ratio"] / r["ratio_predicted"] - 1) for r in rows if r["status"] == "ok"), default=float("nan")
    )
    detail = f"{len(rows) - len(bad)}/{len(rows)} points within 25% of coth(gamma/2); worst {worst:.2f}"
    if bad:
        detail += "; failing k: " + ",".join(sorted({f"{r['k']:g}" for r in bad}, key=float))
    report("C3 tops coth", len(rows) == 25 and not bad, detail)


def test_c3_top_trend(runs):
    rec, _, _ = runs("fig2a")
    groups = _by_k([r for r in rec.results if r["status"] == "ok"])
    ks = sorted(groups)
    means = [np.mean([r["ratio"] for r in groups[k]]) for k in ks]
    sems = [np.std([r["ratio"] for r in groups[k]], ddof=1) / np.sqrt(len(groups[k])) for k in ks]
    ok = all(m >= 1 - 2 * s for m, s in zip(means, sems))
    for i in range(len(ks) - 1):
        ok &= means[i + 1] <= means[i] + 2 * np.hypot(sems[i], sems[i + 1])
    detail = ", ".join(f"k={k:g}: {m:.2f}+-{s:.2f}" for k, m, s in zip(ks, means, sems))
    report("C3 tops trend", ok, f"mean Gamma/Gamma0 non-increasing toward 1 within 2 s.e.: {detail}")


def test_c3_rotor_sweep(runs):
    rec, _, _ = runs("fig2b")
    rows = rec.results
    out_band = [r for r in rows if r["status"] != "ok" or not 0.8 <= r["ratio"] <= 3.0]
    off_coth = [r for r in rows if r["status"] == "ok" and abs(r["ratio"] / r["ratio_predicted"] - 1) > 0.35]
    bad = out_band + [r for r in off_coth if r not in out_band]
    detail = (
        f"{len(rows)} points; {len(out_band)} outside ratio [0.8, 3], {len(off_coth)} beyond 35% of coth"
    )
    if bad:
        detail += "; e.g. " + "; ".join(
            f"k={r['k']:g} ic={r['ic']} ratio={r.get('ratio', float('nan')):.2f} "
            f"pred={r.get('ratio_predicted', float('nan')):.2f}"
            for r in bad[:3]
        )
    report("C3 rotors", not bad, detail)


# ---------------------------------------------------------------- 4


def test_c4_husimi_zeros(runs):
    rec, out, wall = runs("fig345")
    single, coupled = (next(r for r in rec.results if r["case"] == c) for c in ("single", "coupled"))
    import json

    minima = json.loads((out / "minima_single.json").read_text())
    cell = minima["final_cell"]
    zs = [m for m in minima["minima"] if m["is_zero"]]
    # paired (degenerate) zeros must sit within one final cell of each other
    pairing_ok = all(m["merged"] == 1 or m["multiplicity"] >= m["merged"] for m in zs)
    report(
        "C4 single",
        single["n_zeros_with_multiplicity"] == 60 and pairing_ok,
        f"{single['n_zeros_with_multiplicity']} zeros ({single['n_zeros']} distinct, final cell {cell:.2g} rad), want 60",
    )
    ok = coupled["n_zeros"] == 0 and 58 <= coupled["n_positive_minima"] <= 62 and wall <= 60
    report(
        "C4 coupled",
        ok,
        f"{coupled['n_zeros']} zeros, {coupled['n_positive_minima']} positive minima (58-62), {wall:.1f} s (<= 60 s)",
    )


# ---------------------------------------------------------------- 5


def _invariants():
    rng = np.random.default_rng(2024)
    out = {}

    U = [
        top.top_floquet(top.TopParams(80, 1.0, 8.0)),
        rotor.rotor_floquet_dense(rotor.RotorParams(128, 9.0)),
        ev.coupled_tops(3, 3.0, 6.0, 0.1).dense(),
    ]
    out["unitarity"] = (max(numeric.unitarity_error(u) for u in U), 1e-12)

    drift = 0.0
    for sysm, psi in (
        (ev.coupled_tops(20, 8.0, 8.0, 1e-3), top.spin_coherent(top.TopParams(20), 0.89, 0.63)),
        (ev.coupled_rotors(2 * np.pi / 128, 9.0, 9.0, 1e-3), rotor.torus_coherent(rotor.RotorParams(128), 1.0, 0.0)),
    ):
        s = ev.product_state(psi, psi)
        for s in ev.evolve(sysm, s, 1000):
            pass
        drift = max(drift, s.norm_error())
        rho1 = ev.reduced_density(s, 1)
        rho1.check()
        out.setdefault("trace", (0.0, 1e-12))
        out["trace"] = (max(out["trace"][0], abs(np.trace(rho1.rho).real - 1)), 1e-12)
        lo = np.linalg.eigvalsh(rho1.rho)[0]
        out["psd (-min eig)"] = (max(out.get("psd (-min eig)", (0.0,))[0], -lo), 1e-10)
        sym = abs(ev.linear_entropy(rho1) - ev.linear_entropy(ev.reduced_density(s, 2)))
        out["schmidt symmetry"] = (max(out.get("schmidt symmetry", (0.0,))[0], sym), 1e-12)
    out["norm drift 1e3 steps"] = (drift, 1e-9)

    c = rng.normal(size=(5, 9)) + 1j * rng.normal(size=(5, 9))
    c /= np.linalg.norm(c)
    st = ev.BipartiteState(c)
    sym = abs(ev.linear_entropy(ev.reduced_density(st, 1)) - ev.linear_entropy(ev.reduced_density(st, 2)))
    out["schmidt symmetry"] = (max(out["schmidt symmetry"][0], sym), 1e-12)

    bell = ev.linear_entropy(ev.reduced_density(ev.BipartiteState(np.eye(2, dtype=complex) / np.sqrt(2))))
    out["bell entropy"] = (abs(bell - 0.5), 1e-12)

    sysm = ev.coupled_tops(3.5, 4.0, 5.0, 0.05)
    p1, p2 = sysm.meta["params"]
    s0 = ev.product_state(top.spin_coherent(p1, 0.89, 0.63), random_state(rng, 8))
    s = s0
    for s in ev.evolve(sysm, s0, 5):
        pass
    dense = np.linalg.matrix_power(sysm.dense(), 5) @ s0.vector()
    psi = top.spin_coherent(p1, 0.89, 0.63)
    Cf = pt.heisenberg_correlations(sysm.map1, [sysm.factors[0][0]], psi, 8)
    Cd = pt.heisenberg_correlations_dense(sysm.map1.dense(), [sysm.factors[0][0]], psi, 8)
    out["dense oracle (d=8)"] = (max(numeric.max_abs(dense - s.vector()), numeric.max_abs(Cf.C - Cd.C)), 1e-12)

    p = top.TopParams(20, 1.0, 8.0)
    psi = top.spin_coherent(p, 0.89, 0.63)
    q = top.top_coupling_factors(p)[0][0]
    C = pt.heisenberg_correlations(ev.DenseMap(top.top_floquet(p)), [q], psi, 60)
    out["correlation hermiticity"] = (C.symmetry_error(), 1e-10)

    cc = 7.0
    Cs = pt.heisenberg_correlations(ev.DenseMap(top.top_floquet(p)), [cc * q], psi, 60)
    a = pt.s_pt_series(pt.d_matrix(C, C), 1e-4, 1.0).values
    b = pt.s_pt_series(pt.d_matrix(Cs, Cs), 1e-4 / cc**2, 1.0).values
    out["D rescaling (relative)"] = (np.max(np.abs(a - b)) / np.max(np.abs(a)), 1e-12)

    l = np.arange(100)
    D = pt.DMatrix(2.0 * np.exp(-0.7 * np.abs(l[:, None] - l[None, :])).astype(complex))
    D0, gamma, _ = pt.fit_decay(D)
    out["synthetic fit (D0=2, gamma=0.7)"] = (max(abs(D0 - 2.0), abs(gamma - 0.7)), 1e-6)
    return out


def test_c5_invariants():
    res = _invariants()
    bad = [k for k, (v, tol) in res.items() if not v <= tol]
    detail = "; ".join(f"{k} {v:.1e}/{tol:.0e}" for k, (v, tol) in res.items())
    report("C5 invariants", not bad, detail)


# ---------------------------------------------------------------- 6


@pytest.mark.parametrize("name", list(RUNNERS))
def test_c6_deterministic(runs, name):
    _, a, _ = runs(name, 0)
    _, b, _ = runs(name, 1)
    csvs = sorted(f for f in os.listdir(a) if f.endswith(".csv"))
    match, mismatch, errors = filecmp.cmpfiles(a, b, csvs, shallow=False)
    ok = bool(csvs) and not mismatch and not errors
    report(f"C6 {name}", ok, f"{len(match)}/{len(csvs)} CSV files byte-equal across two runs")
