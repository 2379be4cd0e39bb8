import csv
import json
from pathlib import Path

import numpy as np
import pytest

from conftest import build_fixture_canvas
from qbrush import control as ctl
from qbrush.brushes import CanvasImage, Region, region_to_dict
from qbrush.cli import main
from qbrush.statevec import fidelity

SOURCE = Region.lasso([(4, 4), (26, 6), (24, 40), (6, 38)])
TARGET = Region.lasso([(36, 6), (60, 4), (58, 42), (38, 40)])


@pytest.fixture()
def workdir(tmp_path):
    img = build_fixture_canvas()
    img.save(tmp_path / "in.png")
    (tmp_path / "source.json").write_text(json.dumps(region_to_dict(SOURCE)))
    (tmp_path / "target.json").write_text(json.dumps(region_to_dict(TARGET)))
    (tmp_path / "stroke.json").write_text(
        json.dumps({"points": [[4, 24], [60, 24]], "radius": 3})
    )
    return tmp_path


def steer_args(workdir, out="out.png", t="0.0", extra=()):
    return [
        "steer",
        "--image", str(workdir / "in.png"),
        "--source", str(workdir / "source.json"),
        "--target", str(workdir / "target.json"),
        "--t", t,
        "--seed", "3",
        "--iters", "40",
        "--out", str(workdir / out),
        *extra,
    ]


class TestSteer:
    def test_t_zero_reproduces_paste_region(self, workdir):
        assert main(steer_args(workdir)) == 0
        out = CanvasImage.open(workdir / "out.png")
        original = CanvasImage.open(workdir / "in.png")
        mask = SOURCE.mask(original.width, original.height)
        diff = np.abs(out.pixels.astype(int) - original.pixels.astype(int))
        assert diff[mask].max() <= 1
        assert np.array_equal(out.pixels[~mask], original.pixels[~mask])

    def test_sidecar_contents(self, workdir):
        main(steer_args(workdir))
        sidecar = json.loads((workdir / "out.json").read_text())
        assert 0.0 <= sidecar["final_fidelity"] <= 1.0
        assert len(sidecar["loss_history"]) == 40
        assert sidecar["steering"]["n_steps"] == 25

    def test_seeded_runs_byte_identical(self, workdir):
        main(steer_args(workdir, out="a.png", t="0.8"))
        main(steer_args(workdir, out="b.png", t="0.8"))
        assert (workdir / "a.png").read_bytes() == (workdir / "b.png").read_bytes()
        assert (workdir / "a.json").read_text() == (workdir / "b.json").read_text()

    def test_controls_out_of_range_usage_error(self, workdir):
        with pytest.raises(SystemExit) as err:
            main(steer_args(workdir, extra=["--controls", "5"]))
        assert err.value.code == 2

    def test_negative_t_usage_error(self, workdir):
        with pytest.raises(SystemExit) as err:
            main(steer_args(workdir, t="-0.5"))
        assert err.value.code == 2

    def test_missing_image_runtime_error(self, workdir, capsys):
        args = steer_args(workdir)
        args[2] = str(workdir / "nope.png")
        assert main(args) == 1
        assert "not found" in capsys.readouterr().err


class TestChem:
    def test_applies_and_prints_used_distance(self, workdir, family_dir, capsys):
        rc = main([
            "chem",
            "--image", str(workdir / "in.png"),
            "--stroke", str(workdir / "stroke.json"),
            "--distance", "0.735",
            "--reps", "2",
            "--data-dir", str(family_dir),
            "--out", str(workdir / "chem.png"),
        ])
        assert rc == 0
        out = capsys.readouterr().out
        line = [l for l in out.splitlines() if l.startswith("used distance")][0]
        used = float(line.split(":")[1])
        spacing = (2.5 - 0.725) / 9
        assert abs(used - 0.735) <= spacing / 2 + 1e-12
        assert (workdir / "chem.png").exists()

    def test_reps_out_of_range_usage_error(self, workdir, family_dir):
        with pytest.raises(SystemExit) as err:
            main([
                "chem", "--image", str(workdir / "in.png"),
                "--stroke", str(workdir / "stroke.json"),
                "--distance", "1.0", "--reps", "101",
                "--data-dir", str(family_dir), "--out", str(workdir / "x.png"),
            ])
        assert err.value.code == 2

    def test_distance_out_of_range_usage_error(self, workdir, family_dir):
        with pytest.raises(SystemExit) as err:
            main([
                "chem", "--image", str(workdir / "in.png"),
                "--stroke", str(workdir / "stroke.json"),
                "--distance", "0.7249", "--reps", "0",
                "--data-dir", str(family_dir), "--out", str(workdir / "x.png"),
            ])
        assert err.value.code == 2

    def test_empty_data_dir_actionable_error(self, workdir, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        rc = main([
            "chem", "--image", str(workdir / "in.png"),
            "--stroke", str(workdir / "stroke.json"),
            "--distance", "1.0", "--reps", "0",
            "--data-dir", str(empty), "--out", str(workdir / "x.png"),
        ])
        assert rc == 1
        assert "qbrush precompute" in capsys.readouterr().err


class TestPrecompute:
    def test_small_grid(self, tmp_path, capsys):
        rc = main(["precompute", "--grid", "4", "--data-dir", str(tmp_path)])
        assert rc == 0
        out = capsys.readouterr().out
        assert out.count("M=") == 4
        step = (2.5 - 0.725) / 3
        for k in range(4):
            assert (tmp_path / f"H2_STO-3G_{0.725 + k * step:.6f}.json").exists()
        index = json.loads((tmp_path / "index.json").read_text())
        assert len(index["distances"]) == 4

    def test_rerun_is_idempotent(self, tmp_path, capsys):
        main(["precompute", "--grid", "3", "--data-dir", str(tmp_path)])
        before = {p.name: p.read_bytes() for p in tmp_path.glob("*.json")}
        capsys.readouterr()
        rc = main(["precompute", "--grid", "3", "--data-dir", str(tmp_path)])
        assert rc == 0
        assert "computed 0 families" in capsys.readouterr().out
        after = {p.name: p.read_bytes() for p in tmp_path.glob("*.json")}
        assert before == after


class TestCurves:
    def test_dissociation_csv_and_plot(self, family_dir, tmp_path):
        out = tmp_path / "dissociation.csv"
        rc = main(["curves", "--kind", "dissociation", "--data-dir", str(family_dir),
                   "--out", str(out)])
        assert rc == 0
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["distance", "hf", "vqe", "exact"]
        assert len(rows) - 1 == 10
        for row in rows[1:]:
            d, hf, vqe_e, exact = map(float, row)
            assert exact <= hf
            assert abs(vqe_e - exact) < 1e-6
        assert (tmp_path / "dissociation.png").exists()

    def test_fidelity_curve_starts_at_raw_overlap(self, workdir, tmp_path):
        main(steer_args(workdir, t="1.0"))
        sidecar = workdir / "out.json"
        out = tmp_path / "fid.csv"
        rc = main(["curves", "--kind", "fidelity", "--sidecar", str(sidecar),
                   "--out", str(out)])
        assert rc == 0
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "fidelity"]
        doc = json.loads(sidecar.read_text())
        trained = ctl.trained_from_dict(doc["steering"])
        raw = fidelity(trained.problem.source, trained.problem.target)
        assert float(rows[1][0]) == 0.0
        assert float(rows[1][1]) == pytest.approx(raw, abs=1e-12)
        assert (tmp_path / "fid.png").exists()

    def test_controls_csv_shape(self, workdir, tmp_path):
        main(steer_args(workdir, t="1.0"))
        out = tmp_path / "controls.csv"
        rc = main(["curves", "--kind", "controls", "--sidecar", str(workdir / "out.json"),
                   "--out", str(out)])
        assert rc == 0
        with open(out) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "u_1", "u_2"]
        assert len(rows) - 1 == 25  # one row per timestep
        assert (tmp_path / "controls.png").exists()

    def test_missing_inputs_fail(self, tmp_path, capsys):
        rc = main(["curves", "--kind", "fidelity", "--out", str(tmp_path / "x.csv")])
        assert rc == 1
        assert "--sidecar" in capsys.readouterr().err
