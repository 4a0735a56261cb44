import json
import math

import pytest

from mcqmclab.cli import main


def _write(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _bounds_cfg(tmp_path, out="bounds.csv"):
    return {
        "experiment": "bounds",
        "dimension": 1,
        "n": 16,
        "lambda0": 0.0,
        "nu-norm": 1.0,
        "output": str(tmp_path / out),
    }


class TestValidate:
    def test_ok(self, tmp_path, capsys):
        cfg = _write(tmp_path, "c.json", _bounds_cfg(tmp_path))
        assert main(["validate", cfg]) == 0
        assert capsys.readouterr().out.strip() == "ok"

    def test_unknown_key(self, tmp_path, capsys):
        bad = _bounds_cfg(tmp_path)
        bad["typo-key"] = 1
        cfg = _write(tmp_path, "c.json", bad)
        assert main(["validate", cfg]) == 2
        assert "typo-key" in capsys.readouterr().err

    def test_unknown_experiment(self, tmp_path):
        cfg = _write(tmp_path, "c.json", {"experiment": "frobnicate", "output": "x"})
        assert main(["validate", cfg]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["validate", str(tmp_path / "absent.json")]) == 2

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{not json")
        assert main(["validate", str(path)]) == 2

    def test_bad_density_name(self, tmp_path):
        cfg = {
            "experiment": "discrepancy",
            "density": {"name": "cauchy"},
            "output": str(tmp_path / "o.csv"),
        }
        assert main(["validate", _write(tmp_path, "c.json", cfg)]) == 2

    def test_lazy_direct_requires_a(self, tmp_path):
        cfg = {
            "experiment": "discrepancy",
            "kernel": "lazy-direct",
            "output": str(tmp_path / "o.csv"),
        }
        assert main(["validate", _write(tmp_path, "c.json", cfg)]) == 2


class TestRunBounds:
    def test_golden_row(self, tmp_path):
        cfg_path = _write(tmp_path, "c.json", _bounds_cfg(tmp_path))
        assert main(["run", cfg_path]) == 0
        lines = (tmp_path / "bounds.csv").read_text().splitlines()
        assert lines[0] == "d,n,lambda0,nu_norm,corollary_bound,beck_bound"
        corollary = float(lines[1].split(",")[4])
        assert corollary == pytest.approx(1.9747, abs=1e-4)

    def test_manifest_written(self, tmp_path):
        cfg_path = _write(tmp_path, "c.json", _bounds_cfg(tmp_path))
        main(["run", cfg_path])
        manifest = json.loads((tmp_path / "bounds.csv.manifest.json").read_text())
        assert manifest["config"]["experiment"] == "bounds"
        assert "wall_time_s" in manifest and "version" in manifest

    def test_byte_identical_rerun(self, tmp_path):
        cfg_path = _write(tmp_path, "c.json", _bounds_cfg(tmp_path))
        main(["run", cfg_path])
        first = (tmp_path / "bounds.csv").read_bytes()
        main(["run", cfg_path])
        assert (tmp_path / "bounds.csv").read_bytes() == first

    def test_bad_key_writes_nothing(self, tmp_path):
        bad = _bounds_cfg(tmp_path)
        bad["bogus"] = True
        cfg_path = _write(tmp_path, "c.json", bad)
        assert main(["run", cfg_path]) == 2
        assert not (tmp_path / "bounds.csv").exists()


class TestRunExperiments:
    def test_discrepancy_deterministic(self, tmp_path):
        cfg = {
            "experiment": "discrepancy",
            "dimension": 1,
            "density": {"name": "uniform", "alpha": 0.0},
            "kernel": "direct",
            "n": 64,
            "seed": 3,
            "output": str(tmp_path / "d.csv"),
        }
        cfg_path = _write(tmp_path, "c.json", cfg)
        assert main(["run", cfg_path]) == 0
        first = (tmp_path / "d.csv").read_bytes()
        assert main(["run", cfg_path]) == 0
        assert (tmp_path / "d.csv").read_bytes() == first

    def test_discrepancy_infeasible_dimension(self, tmp_path):
        cfg = {
            "experiment": "discrepancy",
            "dimension": 4,
            "density": {"name": "uniform", "alpha": 0.0},
            "gamma": 0.4,
            "n": 8,
            "output": str(tmp_path / "d.csv"),
        }
        assert main(["run", _write(tmp_path, "c.json", cfg)]) == 3
        assert not (tmp_path / "d.csv").exists()

    def test_pullback_lazy_direct(self, tmp_path):
        cfg = {
            "experiment": "pullback",
            "dimension": 1,
            "density": {"name": "uniform"},
            "kernel": "lazy-direct",
            "a": 0.5,
            "n": 32,
            "seed": 1,
            "delta": 0.05,
            "output": str(tmp_path / "p.csv"),
        }
        assert main(["run", _write(tmp_path, "c.json", cfg)]) == 0
        header, row = (tmp_path / "p.csv").read_text().splitlines()
        vals = dict(zip(header.split(","), row.split(",")))
        assert float(vals["mc_stderr"]) == 0.0
        assert 0.0 <= float(vals["disc_lower"]) <= float(vals["disc_upper"]) <= 1.0

    def test_search_gamma_star_resolution(self, tmp_path):
        cfg = {
            "experiment": "search",
            "dimension": 1,
            "density": {"name": "exp-linear", "alpha": 1.0},
            "kernel": "metropolis-ballwalk",
            "gamma": "gamma-star",
            "n": 32,
            "k": 2,
            "seed": 1,
            "output": str(tmp_path / "s.csv"),
        }
        assert main(["run", _write(tmp_path, "c.json", cfg)]) == 0
        manifest = json.loads((tmp_path / "s.csv.manifest.json").read_text())
        assert manifest["gamma"] == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-12)

    def test_rate_study_columns(self, tmp_path):
        cfg = {
            "experiment": "rate-study",
            "dimension": 1,
            "density": {"name": "uniform"},
            "kernel": "direct",
            "ns": [16, 64],
            "k": 2,
            "seed": 2,
            "output": str(tmp_path / "r.csv"),
        }
        assert main(["run", _write(tmp_path, "c.json", cfg)]) == 0
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert lines[0] == "n,seed,disc_lower,disc_upper,theory_bound,beck_bound,runtime_ms"
        assert len(lines) == 3

    def test_invert_experiment(self, tmp_path):
        cfg = {
            "experiment": "invert",
            "density": {"name": "uniform"},
            "gamma": 2.0,
            "n": 16,
            "output": str(tmp_path / "i.csv"),
        }
        assert main(["run", _write(tmp_path, "c.json", cfg)]) == 0
        header, row = (tmp_path / "i.csv").read_text().splitlines()
        vals = dict(zip(header.split(","), row.split(",")))
        assert float(vals["disc_lower"]) == pytest.approx(1.0 / 32.0, abs=1e-12)
        assert float(vals["max_deviation"]) <= 1e-9

    def test_invert_requires_gamma_two(self, tmp_path):
        cfg = {
            "experiment": "invert",
            "density": {"name": "uniform"},
            "gamma": 1.0,
            "n": 8,
            "output": str(tmp_path / "i.csv"),
        }
        assert main(["run", _write(tmp_path, "c.json", cfg)]) == 2


class TestBoundsSubcommand:
    def test_prints_golden(self, capsys):
        assert main(["bounds", "--d", "1", "--n", "16"]) == 0
        out = capsys.readouterr().out
        assert "corollary_bound 1.9747" in out

    def test_alpha_adds_gap_lines(self, capsys):
        main(["bounds", "--d", "1", "--n", "16", "--alpha", "1.0"])
        out = capsys.readouterr().out
        assert "gamma_star" in out and "spectral_gap" in out
