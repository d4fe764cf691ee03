"""Ensemble execution, persistence, and report assembly.

`run` solves members in a bounded worker pool and persists snapshots in
the binary format plus a CSV index and a JSON manifest; reruns are
idempotent by manifest. `report` turns a finished run into the CSV
bundle and a human-readable summary covering the defect trend, the
barycenter Euler residual, S-convergence distances and the deviation
fractions. `validate` runs the built-in oracle checks.
"""

from __future__ import annotations

import json
import math
import time as _time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .defect import (
    convex_pairing_schedule,
    defect_momentum_residual,
    far_field_decay,
    psd_check,
    reynolds_defect,
    trace_energy_sandwich,
)
from .errors import ConfigError, VvlabError
from .grid import rect_cells
from .initial import make_member_state, member_rng
from .snapio import probe_snapshot, read_snapshot, write_index, write_snapshot
from .solver import Trajectory, solve
from .stats import (
    Ensemble,
    build_observable_library,
    cesaro_average,
    energy_budget,
    modulus_of_continuity,
    s_convergence_metric,
    statistical_convergence_fraction,
)
from .testfns import ConvexProfile, TimeWeight
from .thermo import calibrate_coercivity
from .weakform import euler_residual, statistical_equivalence_report

FMT = "%.17g"


def _fmt(x) -> str:
    return FMT % float(x)


def write_csv(path, header_meta: dict, columns: list, rows: list) -> None:
    """CSV with '# key = value' metadata lines before the fixed header row."""
    with open(path, "w", newline="") as fh:
        for k, v in header_meta.items():
            fh.write(f"# {k} = {v}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            out = []
            for cell in row:
                if isinstance(cell, float):
                    out.append(_fmt(cell))
                else:
                    out.append(str(cell))
            fh.write(",".join(out) + "\n")


# ---------------------------------------------------------------------------
# run


def _member_paths(member: int, n_snaps: int) -> list:
    return [f"member_{member:04d}/snap_{k:04d}.vvl" for k in range(n_snaps)]


def _solve_member(cfg: ExperimentConfig, member: int, grid, law, visc, far, epsilon):
    rng = None if cfg.dirac else member_rng(cfg.base_seed, member)
    state = make_member_state(cfg.initial, grid, far, rng, cfg.family_params)
    scfg = cfg.solver_config(epsilon)
    t0 = _time.perf_counter()
    traj = solve(state, scfg, grid, law, visc, far)
    traj.member_id = member
    wall = _time.perf_counter() - t0
    return traj, wall


def run(cfg: ExperimentConfig, out_dir=None, members=None, threads: int = 1):
    """Solve the ensemble; returns (manifest, recomputed member ids)."""
    out = Path(out_dir or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.json"
    manifest = {
        "config_hash": cfg.config_hash(),
        "code_version": __version__,
        "grid": {"nx": cfg.nx, "ny": cfg.ny},
        "members": {},
    }
    if manifest_path.is_file():
        old = json.loads(manifest_path.read_text())
        if old.get("config_hash") != cfg.config_hash():
            raise ConfigError(
                f"{out} holds results for a different config hash; refuse to mix"
            )
        manifest["members"] = old.get("members", {})

    grid = cfg.grid()
    law = cfg.law()
    visc = cfg.viscosity()
    far = cfg.far_field()
    epsilons = cfg.epsilons()
    wanted = list(range(cfg.n_members)) if members is None else list(members)
    for m in wanted:
        if not 0 <= m < cfg.n_members:
            raise ConfigError(f"member {m} outside 0..{cfg.n_members - 1}")

    def complete(m: int) -> bool:
        entry = manifest["members"].get(str(m))
        if entry is None:
            return False
        return all(probe_snapshot(out / rel) for rel in entry["files"])

    todo = [m for m in wanted if not complete(m)]
    recomputed = list(todo)

    results = {}
    if cfg.dirac and todo:
        traj, wall = _solve_member(cfg, todo[0], grid, law, visc, far, epsilons[todo[0]])
        for m in todo:
            results[m] = (traj, wall)
    elif todo:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futs = {
                    m: pool.submit(_solve_member, cfg, m, grid, law, visc, far, epsilons[m])
                    for m in todo
                }
            results = {m: f.result() for m, f in futs.items()}
        else:
            results = {
                m: _solve_member(cfg, m, grid, law, visc, far, epsilons[m]) for m in todo
            }

    for m in todo:
        traj, wall = results[m]
        files = _member_paths(m, len(traj.states))
        (out / f"member_{m:04d}").mkdir(exist_ok=True)
        for rel, st in zip(files, traj.states):
            r, mx, my = st.interior()
            write_snapshot(out / rel, r, mx, my, st.time, traj.epsilon)
        manifest["members"][str(m)] = {
            "member": m,
            "epsilon": traj.epsilon,
            "seed": cfg.base_seed if cfg.dirac else cfg.base_seed ^ m,
            "files": files,
            "wall_time": wall,
            "floor_hits": traj.floor_hits,
            "dissipation_integral": traj.dissipation_integral,
            "dissipation_at_snapshots": list(traj.dissipation_at_snapshots),
            "sup_relative_energy": traj.sup_relative_energy,
            "blown_up": traj.blown_up,
        }

    manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True))
    index_rows = []
    for m in sorted(int(k) for k in manifest["members"]):
        entry = manifest["members"][str(m)]
        times = cfg.snapshot_times
        for t, rel in zip(times, entry["files"]):
            index_rows.append((m, entry["epsilon"], t, rel))
    write_index(out / "index.csv", index_rows)
    return manifest, recomputed


def load_ensemble(cfg: ExperimentConfig, out_dir=None, skip_blown: bool = True) -> Ensemble:
    """Reconstruct the ensemble from a run directory."""
    out = Path(out_dir or cfg.out_dir)
    manifest = json.loads((out / "manifest.json").read_text())
    grid = cfg.grid()
    far = cfg.far_field()
    members = []
    for m in sorted(int(k) for k in manifest["members"]):
        entry = manifest["members"][str(m)]
        if skip_blown and entry.get("blown_up"):
            continue
        times, rhos, mxs, mys = [], [], [], []
        for rel in entry["files"]:
            nx, ny, t, eps, r, mx, my = read_snapshot(out / rel)
            times.append(t)
            rhos.append(r)
            mxs.append(mx)
            mys.append(my)
        traj = Trajectory.from_fields(grid, far, times, rhos, mxs, mys,
                                      epsilon=entry["epsilon"])
        traj.dissipation_integral = entry["dissipation_integral"]
        traj.dissipation_at_snapshots = list(entry.get("dissipation_at_snapshots", []))
        traj.sup_relative_energy = entry["sup_relative_energy"]
        traj.floor_hits = entry.get("floor_hits", 0)
        traj.member_id = m
        members.append(traj)
    if not members:
        raise VvlabError("no usable members in the manifest")
    kind = cfg.epsilon_kind if not cfg.dirac else "constant"
    return Ensemble(members=members, grid=grid, law=cfg.law(), far=far,
                    visc=cfg.viscosity(), schedule_kind=kind)


# ---------------------------------------------------------------------------
# report


def _auto_window(cfg: ExperimentConfig):
    if cfg.window:
        t0, t1, x0, x1, y0, y1 = cfg.window
        return (t0, t1), (x0, x1, y0, y1)
    times = cfg.snapshot_times
    sx = 0.15 * (cfg.x_max - cfg.x_min)
    sy = 0.15 * (cfg.y_max - cfg.y_min)
    return (times[0], times[-1]), (cfg.x_min + sx, cfg.x_max - sx,
                                   cfg.y_min + sy, cfg.y_max - sy)


def _auto_l_schedule(cfg: ExperimentConfig):
    if cfg.l_schedule:
        return list(cfg.l_schedule)
    half = 0.5 * min(cfg.x_max - cfg.x_min, cfg.y_max - cfg.y_min)
    lmax = 0.45 * half
    return [0.5 * lmax, 0.75 * lmax, lmax]


def report(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Assemble the diagnostic bundle; returns {name: path} of artifacts."""
    out = Path(out_dir or cfg.out_dir)
    ens = load_ensemble(cfg, out)
    grid, law, far = ens.grid, ens.law, ens.far
    times = ens.times
    schedule = [n for n in cfg.report_schedule() if n <= ens.n]
    if schedule[-1] != ens.n:
        schedule.append(ens.n)

    cert = calibrate_coercivity(law, far, n_angle=8)
    meta = {
        "grid": f"{cfg.nx}x{cfg.ny} [{cfg.x_min:g},{cfg.x_max:g}]x[{cfg.y_min:g},{cfg.y_max:g}]",
        "obstacle": cfg.obstacle_kind,
        "gas": f"a={cfg.a:g} gamma={cfg.gamma:g}",
        "far_field": f"rho_inf={cfg.rho_inf:g} u_inf=({cfg.u_inf[0]:g},{cfg.u_inf[1]:g})",
        "epsilon_schedule": f"{cfg.epsilon_kind} eps0={cfg.eps0:g} q={cfg.eps_q:g}",
        "energy_budget": f"{cfg.energy_budget:g}",
        "coercivity_constant": f"{cert.c:.17g}",
        "config_hash": cfg.config_hash(),
        "members_used": str(ens.n),
    }

    (t0, t1), (x0, x1, y0, y1) = _auto_window(cfg)
    region = rect_cells(grid, x0, x1, y0, y1)
    t_window = (t0, t1)
    library = build_observable_library(
        grid, far, float(times[0]), float(times[-1]),
        n_scalar=cfg.n_scalar, n_vector=cfg.n_vector,
        n_composite=cfg.n_composite, seed=cfg.observable_seed,
    )
    psi = library.psi
    paths = {}

    # budgets
    budget_rows = []
    for n in schedule:
        b = energy_budget(ens, n)
        budget_rows.append((n, b, int(b <= cfg.energy_budget)))
    paths["budgets"] = out / "budgets.csv"
    write_csv(paths["budgets"], meta, ["N", "budget", "within_bound"], budget_rows)

    # defect trend + psd
    trend_rows = []
    psd_rows = []
    for n in schedule:
        ces = cesaro_average(ens, n)
        dfield = reynolds_defect(ces, law)
        rep = psd_check(dfield, tol=cfg.psd_tol)
        psd_rows.append((n, rep.min_eigenvalue, rep.worst_margin, rep.max_trace,
                         int(rep.passed)))
        fl = grid.fluid_interior
        for ti, t in enumerate(times):
            tr = float(np.sum(dfield.trace[ti][fl])) * grid.cell_area
            mn = float(np.min(dfield.min_eigenvalue()[ti][fl]))
            trend_rows.append((n, t, tr, mn))
    paths["defect_trend"] = out / "defect_trend.csv"
    write_csv(paths["defect_trend"], meta,
              ["N", "time", "trace_integral", "min_eigenvalue"], trend_rows)
    paths["psd"] = out / "psd.csv"
    write_csv(paths["psd"], meta,
              ["N", "min_eigenvalue", "worst_margin", "max_trace", "passed"], psd_rows)

    # sandwich
    sw = trace_energy_sandwich(ens, ens.n)
    paths["sandwich"] = out / "sandwich.csv"
    write_csv(paths["sandwich"], meta,
              ["N", "c1", "c2", "min_slack_upper", "min_slack_lower",
               "min_gap_kinetic", "min_gap_potential"],
              [(ens.n, sw.c1, sw.c2, sw.min_slack_upper, sw.min_slack_lower,
                sw.min_gap_kinetic, sw.min_gap_potential)])

    # S-convergence
    sdist = s_convergence_metric(ens, schedule, library.composites, region,
                                 t_window=t_window)
    rows = [(bi, n, d) for bi, per_n in sorted(sdist.items())
            for n, d in sorted(per_n.items())]
    paths["s_convergence"] = out / "s_convergence.csv"
    write_csv(paths["s_convergence"], meta, ["composite", "N", "l1_distance"], rows)

    # statistical convergence fractions
    i8_rows = []
    for eps_th in cfg.i8_epsilons:
        frac = statistical_convergence_fraction(ens, eps_th, region, t_window=t_window)
        for n in schedule:
            i8_rows.append((eps_th, n, frac[n - 1]))
    paths["i8_fraction"] = out / "i8_fraction.csv"
    write_csv(paths["i8_fraction"], meta, ["epsilon", "N", "fraction"], i8_rows)

    # Euler residual of the barycenter
    euler_rows = []
    n_phi = min(4, len(library.vectors))
    for n in schedule:
        ces = cesaro_average(ens, n)
        fields = (times, ces.rho, ces.mx, ces.my)
        for pi in range(n_phi):
            res = euler_residual(fields, grid, law, library.vectors[pi], psi,
                                 phi_scalar=library.scalars[pi % len(library.scalars)],
                                 far=far)
            euler_rows.append((n, pi, res.momentum, res.continuity))
    paths["euler_residual"] = out / "euler_residual.csv"
    write_csv(paths["euler_residual"], meta,
              ["N", "phi", "momentum_residual", "continuity_residual"], euler_rows)

    # defect-corrected momentum residual
    rep = defect_momentum_residual(ens, None, library.vectors[0], psi)
    paths["defect_residual"] = out / "defect_residual.csv"
    write_csv(paths["defect_residual"], meta,
              ["N", "barycentric_form", "defect_pairing", "member_mean_form",
               "identity_gap", "residual", "viscous_remainder", "viscous_bound"],
              [(ens.n, rep.barycentric_form, rep.defect_pairing, rep.member_mean_form,
                rep.identity_gap, rep.residual, rep.viscous_remainder, rep.viscous_bound)])

    # moduli of continuity
    mod = modulus_of_continuity(ens, ens.n, library.scalars[0], library.vectors[0],
                                cert=cert)
    paths["moduli"] = out / "moduli.csv"
    write_csv(paths["moduli"], meta,
              ["N", "lipschitz_stat", "lipschitz_bound", "holder_half_stat",
               "holder_bound", "budget"],
              [(ens.n, mod.lipschitz_stat, mod.lipschitz_bound,
                mod.holder_half_stat, mod.holder_bound, mod.budget)])

    # far-field decay
    x0c = 0.5 * (cfg.x_min + cfg.x_max), 0.5 * (cfg.y_min + cfg.y_max)
    decay = far_field_decay(ens, x0c, _auto_l_schedule(cfg), cert=cert)
    rows = [(r.L, r.value, r.m1_value, r.m2_value, r.bound1, r.bound2,
             r.annulus_area, int(r.truncated)) for r in decay]
    paths["farfield_decay"] = out / "farfield_decay.csv"
    write_csv(paths["farfield_decay"], meta,
              ["L", "value", "m1_value", "m2_value", "bound1", "bound2",
               "annulus_area", "truncated"], rows)

    # summary assembled from the already-computed rows (single source)
    summary = _summarize(cfg, meta, budget_rows, trend_rows, sdist, euler_rows,
                         i8_rows, paths)
    paths["summary"] = out / "summary.txt"
    (out / "summary.txt").write_text(summary)
    return paths


def _summarize(cfg, meta, budget_rows, trend_rows, sdist, euler_rows, i8_rows,
               paths) -> str:
    lines = ["vanishing-viscosity ensemble report", "=" * 36]
    for k, v in meta.items():
        lines.append(f"{k}: {v}")
    lines.append("")
    flag = all(ok for _, _, ok in budget_rows)
    lines.append(f"energy budget within configured bound: {bool(flag)}")
    for n, b, _ in budget_rows:
        lines.append(f"  N={n:5d}  budget = {b:.17g}")
    lines.append("")

    lines.append("defect magnitude trend (time-summed trace integral per N):")
    per_n = {}
    for n, t, tr, mn in trend_rows:
        per_n.setdefault(n, 0.0)
        per_n[n] += tr
    for n in sorted(per_n):
        lines.append(f"  N={n:5d}  sum_t int trace R = {per_n[n]:.17g}")
    ns = sorted(per_n)
    if len(ns) >= 2:
        direction = "decreasing" if per_n[ns[-1]] <= per_n[ns[0]] else "not decreasing"
        lines.append(f"  trend across N: {direction}")
    lines.append("")

    last_n = max(n for n, *_ in euler_rows) if euler_rows else 0
    worst = max((abs(m) + abs(c) for n, _, m, c in euler_rows if n == last_n),
                default=0.0)
    lines.append(f"barycenter Euler residual (max |mom|+|cont| at N={last_n}): "
                 f"{worst:.17g}")
    lines.append("")

    lines.append("S-convergence distances (per composite, first vs last N):")
    for bi, per in sorted(sdist.items()):
        nlist = sorted(per)
        lines.append(
            f"  b[{bi}]  N={nlist[0]}: {per[nlist[0]]:.17g}   "
            f"N={nlist[-1]}: {per[nlist[-1]]:.17g}"
        )
    lines.append("")

    lines.append("deviation fractions (threshold -> fraction at largest N):")
    by_eps = {}
    for eps_th, n, fr in i8_rows:
        by_eps.setdefault(eps_th, {})[n] = fr
    for eps_th, per in sorted(by_eps.items()):
        nmax = max(per)
        lines.append(f"  eps={eps_th:g}  N={nmax}: fraction = {per[nmax]:.17g}")
    lines.append("")
    lines.append("see CSV artifacts: " + ", ".join(sorted(p.name for p in paths.values())))
    lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# equiv


def equivalence(cfg_a: ExperimentConfig, out_a, cfg_b: ExperimentConfig, out_b,
                out_path) -> list:
    """Two-run comparison via the statistical-equivalence observables."""
    ens_a = load_ensemble(cfg_a, out_a)
    ens_b = load_ensemble(cfg_b, out_b)
    times = ens_a.times
    library = build_observable_library(
        ens_a.grid, ens_a.far, float(times[0]), float(times[-1]),
        n_scalar=min(cfg_a.n_scalar, 8), n_vector=min(cfg_a.n_vector, 4),
        n_composite=0, seed=cfg_a.observable_seed,
    )
    rows = statistical_equivalence_report(
        ens_a, ens_b, library.scalars, library.vectors, library.psi
    )
    csv_rows = [
        (r.klass, r.observable_id, r.pivot_id, r.value_a, r.value_b,
         r.abs_diff, r.rel_diff)
        for r in rows
    ]
    write_csv(out_path, {"config_hash_a": cfg_a.config_hash(),
                         "config_hash_b": cfg_b.config_hash()},
              ["class", "observable_id", "pivot_id", "value_A", "value_B",
               "abs_diff", "rel_diff"], csv_rows)
    return rows


# ---------------------------------------------------------------------------
# validate


def validate_checks(cfg: ExperimentConfig | None = None) -> list:
    """Built-in oracle and property checks; returns [(name, ok, detail)]."""
    from . import validatekit

    return validatekit.run_all(cfg)
