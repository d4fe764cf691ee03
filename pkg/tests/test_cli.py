import json
from pathlib import Path

import numpy as np
import pytest

from vvlab.cli import main
from vvlab.config import load_config
from vvlab.errors import ConfigError
from vvlab.orchestrate import load_ensemble, report, run

BASE_CFG = """
[grid]
nx = 16
ny = 16
x_min = -2.0
x_max = 2.0
y_min = -2.0
y_max = 2.0
obstacle = disc
disc_center = 0.0 0.0
disc_radius = 0.4

[gas]
a = 1.0
gamma = 1.4

[viscosity]
mu = 1.0
lambda = 0.2

[farfield]
rho_inf = 1.0
u_inf = 0.3 0.0

[epsilons]
kind = harmonic
eps0 = 0.08

[ensemble]
n_members = 3
base_seed = 77
initial = gaussian-bump
bump_amplitude = 0.2
bump_width = 0.5
bump_center = 1.0 0.5

[solver]
cfl = 0.4
t_end = 0.02
snapshot_times = 0.0 0.01 0.02

[observables]
n_scalar = 4
n_vector = 3
n_composite = 3
seed = 5

[diagnostics]
energy_budget = 5.0
i8_epsilons = 0.001 1.0

[output]
directory = {out}
"""


def write_cfg(tmp_path, name="exp.cfg", text=None, **fmt):
    p = tmp_path / name
    out = fmt.pop("out", str(tmp_path / "out"))
    p.write_text((text or BASE_CFG).format(out=out, **fmt))
    return p


def test_config_parsing_and_hash(tmp_path):
    p = write_cfg(tmp_path)
    cfg = load_config(p)
    assert cfg.nx == 16 and cfg.obstacle_kind == "disc"
    h = cfg.config_hash()
    # whitespace and comments do not change the hash
    p2 = tmp_path / "exp2.cfg"
    p2.write_text("# a comment\n" + BASE_CFG.format(out=str(tmp_path / "out"))
                  .replace("nx = 16", "nx =  16"))
    assert load_config(p2).config_hash() == h
    # the output directory is not part of the hash (documented)
    p3 = write_cfg(tmp_path, name="exp3.cfg", out=str(tmp_path / "elsewhere"))
    assert load_config(p3).config_hash() == h
    # any semantic change does change it
    p4 = tmp_path / "exp4.cfg"
    p4.write_text(BASE_CFG.format(out=str(tmp_path / "out"))
                  .replace("nx = 16", "nx = 24"))
    assert load_config(p4).config_hash() != h


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
    bad = tmp_path / "bad.cfg"
    bad.write_text(BASE_CFG.format(out="out").replace("disc_radius = 0.4",
                                                      "disc_radius = 3.9"))
    with pytest.raises(ConfigError):
        load_config(bad)
    bad2 = tmp_path / "bad2.cfg"
    bad2.write_text(BASE_CFG.format(out="out").replace("kind = harmonic",
                                                       "kind = nonsense"))
    with pytest.raises(ConfigError):
        load_config(bad2)


def test_run_persists_and_is_idempotent(tmp_path):
    cfg = load_config(write_cfg(tmp_path))
    out = tmp_path / "out"
    manifest, recomputed = run(cfg, out_dir=out)
    assert sorted(recomputed) == [0, 1, 2]
    assert (out / "index.csv").is_file()
    assert len(manifest["members"]) == 3
    for m, entry in manifest["members"].items():
        assert len(entry["files"]) == 3  # three snapshot times
        for rel in entry["files"]:
            assert (out / rel).is_file()
    # rerun: nothing recomputed
    _, recomputed2 = run(cfg, out_dir=out)
    assert recomputed2 == []
    # delete one member's file: only that member is recomputed
    victim = manifest["members"]["1"]["files"][0]
    (out / victim).unlink()
    _, recomputed3 = run(cfg, out_dir=out)
    assert recomputed3 == [1]


def test_run_snapshots_round_trip_bitwise(tmp_path):
    cfg = load_config(write_cfg(tmp_path))
    out = tmp_path / "out"
    run(cfg, out_dir=out)
    ens = load_ensemble(cfg, out)
    # recompute member 0 in-process and compare against the files
    from vvlab.initial import make_member_state, member_rng
    from vvlab.solver import solve

    grid, law, visc, far = cfg.grid(), cfg.law(), cfg.viscosity(), cfg.far_field()
    rng = member_rng(cfg.base_seed, 0)
    st = make_member_state(cfg.initial, grid, far, rng, cfg.family_params)
    traj = solve(st, cfg.solver_config(cfg.epsilons()[0]), grid, law, visc, far)
    for s_disk, s_mem in zip(ens.members[0].states, traj.states):
        assert np.array_equal(s_disk.interior()[0], s_mem.interior()[0])
        assert np.array_equal(s_disk.interior()[1], s_mem.interior()[1])
    assert ens.members[0].dissipation_integral == traj.dissipation_integral


def test_run_refuses_mixed_configs(tmp_path):
    cfg = load_config(write_cfg(tmp_path))
    out = tmp_path / "out"
    run(cfg, out_dir=out)
    other = load_config(write_cfg(tmp_path, name="other.cfg"))
    other.base_seed = 999
    with pytest.raises(ConfigError):
        run(other, out_dir=out)


def test_report_writes_bundle_and_is_deterministic(tmp_path):
    cfg = load_config(write_cfg(tmp_path))
    out = tmp_path / "out"
    run(cfg, out_dir=out)
    paths = report(cfg, out_dir=out)
    expected = {"budgets", "defect_trend", "psd", "sandwich", "s_convergence",
                "i8_fraction", "euler_residual", "defect_residual", "moduli",
                "farfield_decay", "summary"}
    assert expected <= set(paths)
    blobs = {k: Path(p).read_bytes() for k, p in paths.items()}
    report(cfg, out_dir=out)  # rerun over the same data
    for k, p in paths.items():
        assert Path(p).read_bytes() == blobs[k], f"{k} not deterministic"
    # summary quotes the budget values from the CSV verbatim
    budget_lines = [ln for ln in (out / "budgets.csv").read_text().splitlines()
                    if ln and not ln.startswith("#") and not ln.startswith("N,")]
    summary = (out / "summary.txt").read_text()
    for ln in budget_lines:
        n, b, _ = ln.split(",")
        assert f"N={int(n):5d}  budget = {b}" in summary


def test_full_pipeline_byte_identical_in_fresh_dir(tmp_path):
    cfg1 = load_config(write_cfg(tmp_path, name="a.cfg", out=str(tmp_path / "o1")))
    cfg2 = load_config(write_cfg(tmp_path, name="b.cfg", out=str(tmp_path / "o2")))
    run(cfg1, out_dir=tmp_path / "o1")
    run(cfg2, out_dir=tmp_path / "o2")
    p1 = report(cfg1, out_dir=tmp_path / "o1")
    p2 = report(cfg2, out_dir=tmp_path / "o2")
    for k in p1:
        assert Path(p1[k]).read_bytes() == Path(p2[k]).read_bytes()


def test_cli_run_report_validate_equiv(tmp_path, capsys):
    cfg_path = write_cfg(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    assert main(["report", "--config", str(cfg_path), "--out", str(out)]) == 0
    assert (out / "summary.txt").is_file()
    # equiv of a run against itself: all rows zero
    table = tmp_path / "eq.csv"
    assert main(["equiv", "--config", str(cfg_path), "--out", str(out),
                 "--config-b", str(cfg_path), "--out-b", str(out),
                 "--table", str(table)]) == 0
    text = table.read_text().splitlines()
    header = [ln for ln in text if ln.startswith("class")][0]
    assert header == "class,observable_id,pivot_id,value_A,value_B,abs_diff,rel_diff"
    for ln in text:
        if ln.startswith(("SE1", "SE2")):
            assert ln.split(",")[5] == "0"


def test_cli_exit_codes(tmp_path):
    missing = tmp_path / "nope.cfg"
    assert main(["run", "--config", str(missing)]) == 2
    cfg_path = write_cfg(tmp_path)
    out = tmp_path / "out"
    # report before run: missing manifest is an I/O failure
    assert main(["report", "--config", str(cfg_path), "--out", str(out)]) == 4
    assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    # a member flagged as blown up makes run exit 3 (and stay flagged)
    mpath = out / "manifest.json"
    manifest = json.loads(mpath.read_text())
    manifest["members"]["2"]["blown_up"] = True
    mpath.write_text(json.dumps(manifest))
    assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 3


def test_cli_member_range(tmp_path):
    cfg_path = write_cfg(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_path), "--out", str(out),
                 "--members", "0..1"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert sorted(manifest["members"]) == ["0", "1"]
    assert main(["run", "--config", str(cfg_path), "--out", str(out),
                 "--members", "2"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert sorted(manifest["members"]) == ["0", "1", "2"]


def test_dirac_mode_replicates_members(tmp_path):
    text = BASE_CFG.replace("kind = harmonic", "kind = constant") \
                   .replace("initial = gaussian-bump", "initial = constant") \
                   + "\n"
    text = text.replace("[ensemble]", "[ensemble]\ndirac = true")
    cfg = load_config(write_cfg(tmp_path, text=text))
    out = tmp_path / "out"
    run(cfg, out_dir=out)
    ens = load_ensemble(cfg, out)
    a = ens.members[0].field_arrays()[1]
    for m in ens.members[1:]:
        assert np.array_equal(m.field_arrays()[1], a)


def test_threaded_run_matches_serial(tmp_path):
    cfg = load_config(write_cfg(tmp_path, name="t.cfg", out=str(tmp_path / "ot")))
    run(cfg, out_dir=tmp_path / "ot", threads=3)
    cfg2 = load_config(write_cfg(tmp_path, name="s.cfg", out=str(tmp_path / "os")))
    run(cfg2, out_dir=tmp_path / "os", threads=1)
    for m in range(3):
        for k in range(3):
            a = (tmp_path / "ot" / f"member_{m:04d}" / f"snap_{k:04d}.vvl").read_bytes()
            b = (tmp_path / "os" / f"member_{m:04d}" / f"snap_{k:04d}.vvl").read_bytes()
            assert a == b
