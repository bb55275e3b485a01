import json
import os
import subprocess
import sys
import time

import jsonschema
import numpy as np
import pytest

from pseudosurf import cli
from pseudosurf import laxpair as lp
from pseudosurf import surface as sf
from pseudosurf.timescale import GridDomain, TimeScale1D

SMALL = {
    "timescale1": {"kind": "uniform", "t0": -1.0, "step": 0.1, "n": 20},
    "timescale2": {"kind": "interval", "a": -1.0, "b": 1.0, "n": 15},
    "lambda": 1.0,
    "seed": "vacuum",
    "darboux": [{"kappa": 1.0, "phases": [0.0, 0.4]}],
    "outputs": {"report": "r.json", "obj": "s.obj", "fields": "f.json"},
}


def write_config(tmp_path, **changes):
    cfg = dict(SMALL, **changes)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def run(*argv):
    return cli.main(["--quiet", *argv])


class TestRun:
    def test_success_writes_outputs(self, tmp_path):
        assert run("run", "--config", write_config(tmp_path)) == cli.EXIT_OK
        report = json.loads((tmp_path / "r.json").read_text())
        jsonschema.validate(report, cli.load_schema("report"))
        assert report["pass"] and report["error"] is None
        v, _ = sf.read_obj(tmp_path / "s.obj")
        assert v.shape == (20 * 15, 3)
        field = lp.CoefficientField.from_json(json.loads((tmp_path / "f.json").read_text()))
        assert field.domain.shape == (20, 15)

    def test_report_contents(self, tmp_path):
        run("run", "--config", write_config(tmp_path))
        report = json.loads((tmp_path / "r.json").read_text())
        assert report["shape"] == [20, 15] and len(report["surfaces"]) == 2
        assert report["surfaces"][1]["K_max_rel_err"] <= 1e-8
        assert all(c["pass"] for c in report["checks"])

    def test_deterministic_across_thread_counts(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        a.mkdir(), b.mkdir()
        run("--threads", "1", "run", "--config", write_config(a))
        run("--threads", "4", "run", "--config", write_config(b))
        for name in ("r.json", "s.obj", "f.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_two_step_chain(self, tmp_path):
        steps = [{"kappa": 1.0, "phases": [0.0, 0.4]}, {"kappa": 2.0, "phases": [0.3, 1.1]}]
        assert run("run", "--config", write_config(tmp_path, darboux=steps)) == cli.EXIT_OK

    def test_export(self, tmp_path):
        assert run("export", "--config", write_config(tmp_path)) == cli.EXIT_OK
        assert (tmp_path / "s.obj").exists() and not (tmp_path / "r.json").exists()


class TestVerify:
    def test_good_field(self, tmp_path):
        dom = GridDomain(TimeScale1D.uniform(-1, 0.1, 20), TimeScale1D.interval(-1, 1, 15))
        (tmp_path / "seed.json").write_text(json.dumps(lp.vacuum(dom).to_json()))
        cfg = write_config(tmp_path)
        assert run("verify", "--config", cfg, "--field", str(tmp_path / "seed.json")) == cli.EXIT_OK
        assert (tmp_path / "r.json").exists() and not (tmp_path / "s.obj").exists()

    def test_corrupted_field_fails_checks(self, tmp_path):
        cfg = write_config(tmp_path)
        run("run", "--config", cfg)
        data = json.loads((tmp_path / "f.json").read_text())
        key = next(k for k in ("h", "c") if k in data)
        arr = np.array(data[key])
        arr[5, 5] += 1e-3
        data[key] = arr.tolist()
        (tmp_path / "bad.json").write_text(json.dumps(data))
        assert run("verify", "--config", cfg, "--field", str(tmp_path / "bad.json")) == cli.EXIT_NUMERIC
        report = json.loads((tmp_path / "r.json").read_text())
        assert not report["pass"]

    def test_field_on_other_grid(self, tmp_path):
        dom = GridDomain(TimeScale1D.uniform(0, 0.1, 20), TimeScale1D.interval(-1, 1, 15))
        (tmp_path / "seed.json").write_text(json.dumps(lp.vacuum(dom).to_json()))
        assert run("verify", "--config", write_config(tmp_path),
                   "--field", str(tmp_path / "seed.json")) == cli.EXIT_CONFIG


class TestErrors:
    @pytest.mark.parametrize("changes, field", [
        ({"lambda": 0.0}, "lambda"),
        ({"lambda": "one"}, "lambda"),
        ({"timescale1": {"kind": "uniform", "t0": 0, "step": -1, "n": 4}}, "timescale1"),
        ({"darboux": [{"kappa": 0.0}]}, "kappa"),
        ({"darboux": [{"kappa": 1.0}, {"kappa": -1.0}]}, "kappa"),
        ({"tolerances": {"exact": -1}}, "exact"),
        ({"colour": "red"}, "colour"),
    ])
    def test_config_errors_name_field(self, tmp_path, capsys, changes, field):
        assert cli.main(["run", "--config", write_config(tmp_path, **changes)]) == cli.EXIT_CONFIG
        assert field in capsys.readouterr().err

    def test_malformed_json(self, tmp_path):
        (tmp_path / "cfg.json").write_text("{not json")
        assert run("run", "--config", str(tmp_path / "cfg.json")) == cli.EXIT_CONFIG

    def test_missing_config(self, tmp_path):
        assert run("run", "--config", str(tmp_path / "nope.json")) == cli.EXIT_IO

    def test_unwritable_output(self, tmp_path):
        cfg = write_config(tmp_path, outputs={"obj": "missing_dir/s.obj"})
        assert run("run", "--config", cfg) == cli.EXIT_IO

    @pytest.mark.parametrize("where", ["before", "after"])
    def test_bad_threads(self, tmp_path, where):
        cfg = write_config(tmp_path)
        argv = ["--threads", "0", "run", "--config", cfg] if where == "before" else \
            ["run", "--config", cfg, "--threads", "0"]
        assert run(*argv) == cli.EXIT_CONFIG

    def test_singular_grid_is_numeric_failure(self, tmp_path):
        cfg = write_config(tmp_path, timescale2={"kind": "uniform", "t0": 0, "step": 1.0, "n": 5})
        assert run("run", "--config", cfg) == cli.EXIT_NUMERIC
        report = json.loads((tmp_path / "r.json").read_text())
        assert report["error"] and not report["pass"]


class TestBuildTs:
    def test_shorthand(self, capsys):
        assert cli.main(["build-ts", "cantor(2, 0, 1)"]) == cli.EXIT_OK
        pts = json.loads(capsys.readouterr().out)
        assert len(pts) == 8 and pts[1] == pytest.approx(1 / 9)

    def test_json_union(self, capsys):
        spec = json.dumps({"kind": "union", "parts": [[0, 1], [0.5, 1]]})
        assert cli.main(["build-ts", spec]) == cli.EXIT_OK
        assert json.loads(capsys.readouterr().out) == [0, 0.5, 1]

    @pytest.mark.parametrize("spec", ["spiral(1)", "uniform(0, -1, 3)", "{bad"])
    def test_invalid(self, spec):
        assert cli.main(["build-ts", spec]) == cli.EXIT_CONFIG


class TestSchemas:
    def test_config_schema_accepts_demo(self):
        jsonschema.validate(cli.DEMO_CONFIG, cli.load_schema("config"))

    def test_report_schema_rejects_missing_keys(self):
        with pytest.raises(jsonschema.ValidationError):
            cli.dump_report({"version": "x"})


def test_selfcheck():
    assert run("selfcheck", "--cases", "2000") == cli.EXIT_OK


def test_demo_under_ten_seconds(tmp_path):
    t0 = time.perf_counter()
    assert run("demo", "--out-dir", str(tmp_path)) == cli.EXIT_OK
    assert time.perf_counter() - t0 < 10
    v, _ = sf.read_obj(tmp_path / "surface.obj")
    assert v.shape == (64 * 60, 3)


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "pseudosurf.cli", "build-ts", "uniform(0, 0.5, 3)"],
                         capture_output=True, text=True, cwd=tmp_path, env=dict(os.environ))
    assert out.returncode == 0
    assert json.loads(out.stdout) == [0, 0.5, 1]
