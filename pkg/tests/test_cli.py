import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from radimp import cli
from radimp.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main, read_config, UsageError
from radimp.impedance import SweepSpec, sweep
from radimp.quadrature import Tolerance
from radimp.profiles import SampledGrid, model_for, sample_grid, write_grid
from radimp.radiator import RadiatorSpec


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


# --- sweep ------------------------------------------------------------------

def test_sweep_sixty_rows(capsys):
    code, out, _ = run(capsys, "sweep", "--kind", "rect2d", "--aspect", "4", "--ka-min", "0.2",
                       "--ka-max", "12", "--points", "60", "--jobs", "2")
    assert code == EXIT_OK
    table = rows(out)
    assert table[0] == ["ka", "r", "x", "converged", "validity_flag"]
    assert len(table) == 61
    assert all(r[3] == "true" for r in table[1:])


def test_rect_validity_threshold(capsys):
    code, out, _ = run(capsys, "sweep", "--kind", "rect2d", "--ka-min", "4", "--ka-max", "6", "--points", "5", "--jobs", "1")
    assert code == EXIT_OK
    for ka, _, _, _, flag in rows(out)[1:]:
        assert flag == ("reactance-unvalidated" if float(ka) > 5 else "ok")


def test_circ_validity_threshold(capsys):
    code, out, _ = run(capsys, "sweep", "--kind", "circ", "--ka-min", "5", "--ka-max", "6", "--points", "5", "--jobs", "1")
    assert code == EXIT_OK
    flags = {float(r[0]): r[4] for r in rows(out)[1:]}
    assert flags == {5.0: "ok", 5.25: "ok", 5.5: "ok", 5.75: "reactance-unvalidated", 6.0: "reactance-unvalidated"}


def test_csv_round_trip(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, _, _ = run(capsys, "sweep", "--kind", "rect2d", "--aspect", "2", "--ka-min", "0.5", "--ka-max", "3",
                     "--points", "4", "--out", str(out), "--jobs", "1")
    assert code == EXIT_OK
    curve = sweep(RadiatorSpec.rect2d(2.0), SweepSpec(0.5, 3.0, 4))
    parsed = [tuple(map(float, r[:3])) for r in rows(out.read_text())[1:]]
    for (ka, r, x), z in zip(parsed, curve.points):
        assert (ka, r, x) == tuple(float(format(v, ".12g")) for v in (z.ka, z.r, z.x))
        assert abs(r - z.r) <= 5e-12 * z.r and abs(x - z.x) <= 5e-12 * z.x


def test_json_output(capsys):
    code, out, _ = run(capsys, "sweep", "--kind", "circ", "--ka-min", "1", "--ka-max", "2", "--points", "3",
                       "--format", "json", "--jobs", "1")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["kind"] == "circ"
    assert doc["normalization"]
    assert doc["columns"] == ["ka", "r", "x", "converged", "validity_flag"]
    assert [p["ka"] for p in doc["points"]] == [1.0, 1.5, 2.0]
    assert all(p["converged"] is True for p in doc["points"])


def test_byte_identical_repeats(tmp_path):
    args = ["sweep", "--kind", "rect1d", "--aspect", "5", "--ka-min", "0.3", "--ka-max", "4",
            "--points", "5", "--spacing", "log"]
    outs = []
    for i, jobs in enumerate(("1", "3")):
        path = tmp_path / f"o{i}.csv"
        subprocess.run([sys.executable, "-m", "radimp", *args, "--jobs", jobs, "--out", str(path)], check=True)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_non_convergence_exit_code(capsys, monkeypatch):
    # starve the integrator so no point can converge: rows are still written
    monkeypatch.setattr(cli, "Tolerance", lambda rel, abs: Tolerance(rel=rel, abs=0.0, max_subdivisions=2))
    code, out, err = run(capsys, "sweep", "--kind", "rect2d", "--ka-min", "1", "--ka-max", "2", "--points", "2",
                         "--tol-rel", "1e-12", "--jobs", "1")
    assert code == EXIT_FAILED
    assert len(rows(out)) == 3
    assert "did not converge" in err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["sweep"],
        ["sweep", "--kind", "hexagon"],
        ["sweep", "--kind", "rect2d", "--points", "0"],
        ["sweep", "--kind", "rect2d", "--ka-min", "-1"],
        ["sweep", "--kind", "rect2d", "--ka-min", "3", "--ka-max", "2"],
        ["sweep", "--kind", "rect2d", "--aspect", "nan"],
        ["sweep", "--kind", "rect2d", "--bogus"],
        ["oracle-check", "--mesh-n", "4"],
        ["compare-profile"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_one(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == EXIT_USAGE


def test_unwritable_output(capsys, tmp_path):
    code, _, err = run(capsys, "sweep", "--kind", "rect2d", "--points", "1", "--ka-min", "1", "--ka-max", "1",
                       "--out", str(tmp_path / "missing" / "x.csv"))
    assert code == EXIT_USAGE
    assert "cannot write" in err


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "radimp.conf"
    cfg.write_text("# sweep settings\nkind = circ\nka_min = 1\nka-max = 3\npoints = 3   # three\njobs = 1\n")
    code, out, _ = run(capsys, "sweep", "--config", str(cfg))
    assert code == EXIT_OK
    assert [float(r[0]) for r in rows(out)[1:]] == [1.0, 2.0, 3.0]
    code, out, _ = run(capsys, "sweep", "--config", str(cfg), "--points", "2")
    assert [float(r[0]) for r in rows(out)[1:]] == [1.0, 3.0]


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.conf"
    bad.write_text("colour = blue\n")
    with pytest.raises(UsageError):
        read_config(bad)
    bad.write_text("points = many\n")
    with pytest.raises(UsageError):
        read_config(bad)
    bad.write_text("just words\n")
    with pytest.raises(UsageError):
        read_config(bad)
    with pytest.raises(UsageError):
        read_config(tmp_path / "nope.conf")
    assert main(["sweep", "--config", str(tmp_path / "nope.conf")]) == EXIT_USAGE


# --- oracle-check -----------------------------------------------------------

def test_oracle_check_pass(capsys):
    code, out, _ = run(capsys, "oracle-check", "--kind", "rect2d", "--aspect", "1", "--ka", "1", "--mesh-n", "64")
    assert code == EXIT_OK
    assert out.strip().splitlines()[-1] == "PASS"
    assert "spectral" in out and "oracle" in out and "rel diff" in out


def test_oracle_check_fail_exit_two(capsys):
    code, out, _ = run(capsys, "oracle-check", "--ka", "1", "--mesh-n", "8", "--max-rel", "1e-9")
    assert code == EXIT_FAILED
    assert out.strip().endswith("FAIL")


def test_oracle_check_coarse_mesh_rejected(capsys):
    code, _, err = run(capsys, "oracle-check", "--mesh-n", "4")
    assert code == EXIT_USAGE
    assert "too coarse" in err


def test_piston_self_test(capsys):
    code, out, _ = run(capsys, "oracle-check", "--piston", "--ka", "0.2", "--mesh-n", "32")
    assert code == EXIT_OK
    assert "(ka)^2/2 = 0.02" in out


# --- compare-profile ----------------------------------------------------------

def test_compare_profile_exact(capsys, tmp_path):
    path = tmp_path / "model.csv"
    write_grid(path, sample_grid(model_for(RadiatorSpec.rect2d(1.0)), 41, 41, scale=3.2))
    code, out, _ = run(capsys, "compare-profile", "--grid", str(path), "--kind", "rect2d", "--aspect", "1")
    assert code == EXIT_OK
    assert "ARE 0.00%" in out


def test_compare_profile_piston(capsys, tmp_path):
    n = 201
    xs = np.linspace(-1, 1, n)
    path = tmp_path / "piston.csv"
    write_grid(path, SampledGrid(xs, xs, np.ones((n, n))))
    code, out, _ = run(capsys, "compare-profile", "--grid", str(path), "--kind", "rect2d")
    assert code == EXIT_OK
    value = float(out.split("ARE ")[1].split("%")[0])
    assert value == pytest.approx(71.6, abs=1.0)


def test_compare_profile_quarter_mirror(capsys, tmp_path):
    full = sample_grid(model_for(RadiatorSpec.rect2d(2.0)), 21, 41)
    quarter = SampledGrid(full.xs[10:], full.ys[20:], full.values[10:, 20:])
    path = tmp_path / "quarter.csv"
    write_grid(path, quarter)
    code, out, _ = run(capsys, "compare-profile", "--grid", str(path), "--kind", "rect2d", "--aspect", "2", "--mirror")
    assert code == EXIT_OK
    assert "ARE 0.00%" in out


def test_compare_profile_missing_file(capsys, tmp_path):
    path = tmp_path / "absent.csv"
    code, _, err = run(capsys, "compare-profile", "--grid", str(path))
    assert code == EXIT_USAGE
    assert str(path) in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "radimp", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "sweep" in res.stdout
