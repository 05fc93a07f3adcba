"""The three experiments: entropy series, rate sweep, Husimi analysis."""
import json
import logging
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import evolution as ev
from . import husimi as hu
from . import perturbation as pt
from . import rotor as rot
from . import top as tp
from .config import ConfigError

log = logging.getLogger(__name__)


@dataclass
class RunRecord:
    kind: str
    config: dict
    config_hash: str
    results: list = field(default_factory=list)
    wall_clock: float = 0.0
    version: str = __version__
    warnings: list = field(default_factory=list)
    files: list = field(default_factory=list)

    def to_dict(self):
        return {
            "kind": self.kind,
            "version": self.version,
            "config_hash": self.config_hash,
            "config": self.config,
            "wall_clock_s": self.wall_clock,
            "warnings": self.warnings,
            "files": self.files,
            "results": self.results,
        }


# ---------------------------------------------------------------- building


def build_system(cfg, k):
    if cfg.system == "top":
        return ev.coupled_tops(cfg.j, k, k, cfg.eps, cfg.hbar)
    return ev.coupled_rotors(cfg.hbar, k, k, cfg.eps)


def initial_state(cfg, system, ic):
    """Single-subsystem initial state for one IC tuple."""
    p = system.meta["params"][0]
    if cfg.system == "top":
        return tp.spin_coherent(p, float(ic[0]), float(ic[1]))
    sigma = float(ic[2]) if len(ic) > 2 else None
    return rot.torus_coherent(p, float(ic[0]), float(ic[1]), sigma)


def _coupling_ops(system, side):
    return [pair[side] for pair in system.factors]


def correlations(cfg, system, psi):
    """D matrix for identical subsystems started in the same state."""
    ops1 = _coupling_ops(system, 0)
    C1 = pt.heisenberg_correlations(system.map1, ops1, psi, cfg.T, subsystem=1)
    # k1 = k2 and a shared IC make subsystem 2 a copy of subsystem 1
    C2 = pt.CorrelationTensor(C1.C, subsystem=2)
    return pt.d_matrix(C1, C2)


def _candidate_ics(cfg, rng):
    while True:
        if cfg.system == "top":
            u, v = rng.random(2)
            yield [float(np.arccos(1 - 2 * u)), float(2 * np.pi * v)]
        else:
            N = int(round(2 * np.pi / cfg.hbar))
            th = float(2 * np.pi * rng.random())
            n0 = int(rng.integers(-(N // 2), N - N // 2))
            yield [th, n0 * cfg.hbar]


def resolve_ics(cfg, k):
    """Explicit IC list, or a seeded sample screened by the decay diagnostic.

    Sampled candidates whose correlation profile does not decay (regular
    orbits) are skipped.
    """
    if not cfg.sampled:
        return [list(ic) for ic in cfg.initial_conditions]
    want = int(cfg.initial_conditions["sample"])
    seed = int(cfg.initial_conditions.get("seed", cfg.seed))
    rng = np.random.default_rng([seed, int(round(1000 * k))])
    system = build_system(cfg, k)
    chosen = []
    for tries, ic in enumerate(_candidate_ics(cfg, rng)):
        if tries >= 40 * want:
            raise pt.FitError(f"k={k}: found only {len(chosen)} chaotic ICs in {tries} draws")
        D = correlations(cfg, system, initial_state(cfg, system, ic))
        try:
            pt.fit_decay(D, cfg.fit.l0, cfg.fit.noise_floor, cfg.fit.decay_tol)
        except pt.FitError:
            continue
        chosen.append(ic)
        if len(chosen) == want:
            return chosen


# ---------------------------------------------------------------- analysis


def simulate(cfg, k, ic, exact=True):
    """Exact entropy series (optional) and D matrix for one (k, IC)."""
    system = build_system(cfg, k)
    psi = initial_state(cfg, system, ic)
    series = None
    if exact:
        series, _ = ev.evolve_series(system, ev.product_state(psi, psi), cfg.T, cfg.stride)
    return series, correlations(cfg, system, psi), system.dims[0]


def analyze(cfg, series, D, dim):
    """Decay fit, rates from the exact and perturbative series, coth law."""
    S0 = pt.perturbative_prefactor(cfg.eps, cfg.hbar)
    spt = pt.s_pt_series(D, cfg.eps, cfg.hbar)
    row = {"S0": S0, "status": "ok"}
    try:
        D0, gamma, diag = pt.fit_decay(D, cfg.fit.l0, cfg.fit.noise_floor, cfg.fit.decay_tol)
    except pt.FitError as exc:
        row.update(status="fit_failure", error=str(exc))
        return row, spt
    G0 = S0 * D0
    row.update(D0=D0, gamma=gamma, fit_window=list(D.fit_window), fit_residual=D.fit_residual)
    row.update(Gamma0=G0, Gamma_predicted=pt.coth_prediction(G0, gamma))
    for tag, s in (("pt", spt), ("exact", series)):
        if s is None:
            continue
        try:
            slope, win, r2, se = pt.production_rate(s, gamma, cfg.fit.saturation_cap, dim)
        except pt.FitError as exc:
            row.update(status="rate_failure", error=str(exc))
            continue
        row[f"Gamma_{tag}"] = slope
        row[f"window_{tag}"] = list(win)
        row[f"r2_{tag}"] = r2
        row[f"stderr_{tag}"] = se
    main = "exact" if series is not None else "pt"
    if f"Gamma_{main}" in row:
        row["Gamma"] = row[f"Gamma_{main}"]
        row["r2"] = row[f"r2_{main}"]
        row["window"] = row[f"window_{main}"]
        if G0 > 0:
            row["ratio"] = row["Gamma"] / G0
            row["ratio_predicted"] = row["Gamma_predicted"] / G0
    return row, spt


def linear_window_deviation(series, spt, cap):
    """Max relative |S_exact - S_pt| / S_exact over t >= 1 with S_exact < cap."""
    t = series.times
    ex = series.values
    p = spt.values[t]
    sel = (t >= 1) & (ex < cap) & (ex > 0)
    if not sel.any():
        return float("nan")
    return float(np.max(np.abs(ex[sel] - p[sel]) / ex[sel]))


# ---------------------------------------------------------------- writing


def _fmt(x):
    return format(float(x), ".17g")


def write_series_csv(path, header, columns, digest):
    with open(path, "w") as fh:
        fh.write(f"# kickent {__version__} config_sha={digest}\n")
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(_fmt(v) if not isinstance(v, str) else v for v in row) + "\n")


def write_table_csv(path, header, rows, digest):
    with open(path, "w") as fh:
        fh.write(f"# kickent {__version__} config_sha={digest}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            out = []
            for key in header:
                v = row.get(key, "")
                out.append(v if isinstance(v, str) else _fmt(v))
            fh.write(",".join(out) + "\n")


def write_grid_csv(path, grid, digest):
    grid = np.asarray(grid, dtype=float)
    with open(path, "w") as fh:
        fh.write(f"# shape={grid.shape[0]},{grid.shape[1]} config_sha={digest}\n")
        for row in grid:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_grid_csv(path):
    with open(path) as fh:
        head = fh.readline()
        shape = tuple(int(s) for s in head.split("shape=")[1].split()[0].split(","))
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return data.reshape(shape)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(repr(o))


def _map(cfg, fn, items):
    workers = cfg.threads or os.cpu_count() or 1
    if workers == 1 or len(items) < 2:
        return [fn(*it) for it in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(lambda it: fn(*it), items))


def _record(kind, cfg):
    return RunRecord(kind, cfg.to_dict(), cfg.digest())


# ---------------------------------------------------------------- experiments


def run_entropy_experiment(cfg, out_dir=None):
    out_dir = out_dir or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    rec = _record("entropy", cfg)
    start = time.perf_counter()
    if cfg.eps == 0:
        msg = "eps = 0: no coupling, the perturbative rate fit is degenerate"
        warnings.warn(msg)
        rec.warnings.append(msg)

    items = [(k, ic_id, ic) for k in cfg.k for ic_id, ic in enumerate(resolve_ics(cfg, k))]

    def one(k, ic_id, ic):
        series, D, dim = simulate(cfg, k, ic)
        row, spt = analyze(cfg, series, D, dim)
        cap = cfg.fit.saturation_cap * (1 - 1 / dim)
        row.update(k=k, ic=ic_id, initial_condition=list(ic))
        row["max_rel_dev_linear_window"] = linear_window_deviation(series, spt, cap)
        return row, series, spt

    for row, series, spt in _map(cfg, one, items):
        name = f"entropy_k{row['k']:g}_ic{row['ic']}.csv"
        write_series_csv(
            os.path.join(out_dir, name),
            ["t", "S_exact", "S_pt"],
            [series.times, series.values, spt.values[series.times]],
            rec.config_hash,
        )
        row["file"] = name
        rec.files.append(name)
        rec.results.append(row)
    rec.wall_clock = time.perf_counter() - start
    _write_json(os.path.join(out_dir, "entropy_summary.json"), rec.to_dict())
    return rec


SWEEP_COLUMNS = [
    "k", "ic", "Gamma", "Gamma0", "gamma", "ratio", "ratio_predicted", "r2",
    "Gamma_pt", "status",
]


def run_rate_sweep(cfg, out_dir=None, simulator=None):
    """Gamma / Gamma0 against k, one row per (k, IC).

    ``simulator(cfg, k, ic) -> (series or None, DMatrix, dim)`` replaces
    the dynamics (used for pipeline tests).
    """
    if len(cfg.k) < 2:
        raise ConfigError(["rate sweep needs at least two k values"])
    out_dir = out_dir or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    simulator = simulator or simulate
    rec = _record("rate-sweep", cfg)
    start = time.perf_counter()

    items = []
    for k in cfg.k:
        try:
            ics = resolve_ics(cfg, k) if simulator is simulate else cfg.initial_conditions
        except pt.FitError as exc:
            rec.results.append({"k": k, "ic": -1, "status": "ic_failure", "error": str(exc)})
            continue
        items += [(k, ic_id, ic) for ic_id, ic in enumerate(ics)]

    def one(k, ic_id, ic):
        try:
            series, D, dim = simulator(cfg, k, ic)
            row, _ = analyze(cfg, series, D, dim)
        except (pt.FitError, ArithmeticError) as exc:
            row = {"status": "failure", "error": str(exc)}
        row.update(k=k, ic=ic_id, initial_condition=list(ic))
        return row

    rec.results += _map(cfg, one, items)
    rec.results.sort(key=lambda r: (r["k"], r["ic"]))
    write_table_csv(os.path.join(out_dir, "rate_sweep.csv"), SWEEP_COLUMNS, rec.results, rec.config_hash)
    rec.files.append("rate_sweep.csv")
    rec.wall_clock = time.perf_counter() - start
    _write_json(os.path.join(out_dir, "rate_sweep_summary.json"), rec.to_dict())
    return rec


def husimi_states(cfg, k, ic, t):
    """Reduced density of the single top (eps = 0) and of the coupled tops at t."""
    p = tp.TopParams(cfg.j, cfg.hbar, k)
    psi0 = tp.spin_coherent(p, float(ic[0]), float(ic[1]))
    u = tp.top_floquet(p)
    psi = psi0
    for _ in range(t):
        psi = u @ psi
    single = ev.ReducedDensity(np.outer(psi, psi.conj())).check()
    system = ev.coupled_tops(cfg.j, k, k, cfg.eps, cfg.hbar)
    state = ev.product_state(psi0, psi0)
    for state in ev.evolve(system, state, t):
        pass
    return single, ev.reduced_density(state).check()


def run_husimi_analysis(cfg, out_dir=None):
    if cfg.system != "top":
        raise ConfigError(
            ["husimi analysis is defined on the sphere (kicked tops); rotor Husimi functions are not supported"]
        )
    out_dir = out_dir or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    rec = _record("husimi", cfg)
    start = time.perf_counter()
    h = cfg.husimi
    k = cfg.k[0]
    ic = resolve_ics(cfg, k)[0]
    single, coupled = husimi_states(cfg, k, ic, h.t)
    for tag, rd in (("single", single), ("coupled", coupled)):
        grid = hu.husimi_grid(rd, cfg.j, h.n_theta, h.n_phi, "log")
        report = hu.find_minima(grid, h.zero_threshold, h.refine, h.levels)
        files = {
            f"rho_abs_{tag}.csv": np.abs(rd.rho),
            f"husimi_{tag}.csv": grid.H,
            f"husimi_log_{tag}.csv": grid.values,
        }
        for name, arr in files.items():
            write_grid_csv(os.path.join(out_dir, name), arr, rec.config_hash)
            rec.files.append(name)
        mname = f"minima_{tag}.json"
        summary = report.to_dict()
        summary.update(
            config_hash=rec.config_hash,
            eps=0.0 if tag == "single" else cfg.eps,
            linear_entropy=ev.linear_entropy(rd),
            normalization=grid.normalization(),
        )
        _write_json(os.path.join(out_dir, mname), summary)
        rec.files.append(mname)
        rec.results.append(
            {
                "case": tag,
                "k": k,
                "t": h.t,
                "initial_condition": list(ic),
                "n_zeros": report.n_zeros,
                "n_zeros_with_multiplicity": report.n_zeros_total,
                "n_positive_minima": report.n_positive,
                "linear_entropy": summary["linear_entropy"],
                "min_H": float(grid.H.min()),
            }
        )
    rec.wall_clock = time.perf_counter() - start
    _write_json(os.path.join(out_dir, "husimi_summary.json"), rec.to_dict())
    return rec
