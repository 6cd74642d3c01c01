import json
import os

import jsonschema
import pytest

from pwsfold import cli

SYSTEMS_DIR = os.path.join(os.path.dirname(cli.__file__), "systems")
SCHEMA_PATH = os.path.join(os.path.dirname(cli.__file__), "schemas",
                           "classify_report.schema.json")


def bundled(name):
    return os.path.join(SYSTEMS_DIR, name)


def write_json(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(argv):
    return cli.main(argv)


class TestClassify:
    def test_invisible_db(self, tmp_path, capsys):
        assert run(["classify", bundled("invisible_db.json")]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["flavour"] == "invisible"
        assert report["determinacy_breaking"] is True
        assert len(report["folded_points"]) == 1
        assert report["folded_points"][0]["folded_class"] == "folded_node"

    def test_mixed_without_points(self, tmp_path, capsys):
        path = write_json(tmp_path, "m.json", {
            "normal_form": {"a1": 1, "a2": -1, "b1": 1, "b2": 0, "alpha": 0.2}})
        assert run(["classify", path]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["flavour"] == "mixed"
        assert report["folded_points"] == []

    def test_missing_field_exit_2(self, tmp_path, capsys):
        path = write_json(tmp_path, "bad.json", {
            "normal_form": {"a1": 1, "a2": 1, "b2": -1, "alpha": 0.2}})
        assert run(["classify", path]) == 2
        assert "normal_form.b1" in capsys.readouterr().err

    def test_expression_file_rejected(self, tmp_path, capsys):
        path = write_json(tmp_path, "e.json", {
            "fplus": ["-x2", "1", "-2"], "fminus": ["x3", "-1", "1"]})
        assert run(["classify", path]) == 2
        assert "normal_form" in capsys.readouterr().err

    def test_schema_validation(self, capsys):
        schema = json.load(open(SCHEMA_PATH))
        for name in ("invisible_db.json", "visible_db.json", "mixed_db.json"):
            assert run(["classify", bundled(name)]) == 0
            report = json.loads(capsys.readouterr().out)
            jsonschema.validate(report, schema)

    def test_mixed_db_pairing(self, capsys):
        assert run(["classify", bundled("mixed_db.json")]) == 0
        report = json.loads(capsys.readouterr().out)
        classes = sorted(p["folded_class"] for p in report["folded_points"])
        assert classes == ["folded_node", "folded_saddle"]


class TestFoldedAndFit:
    def test_folded_list(self, capsys):
        assert run(["folded", bundled("mixed_db.json")]) == 0
        report = json.loads(capsys.readouterr().out)
        assert isinstance(report, list) and len(report) == 2

    def test_fit_agreement(self, capsys):
        assert run(["fit", bundled("invisible_db.json")]) == 0
        rows = json.loads(capsys.readouterr().out)
        assert len(rows) == 1
        for key in ("p", "q", "r"):
            assert rows[0]["relative_difference"][key] < 1e-3


class TestManifold:
    def test_lcurve_degenerate_alpha_zero(self, tmp_path):
        path = write_json(tmp_path, "nf0.json", {
            "normal_form": {"a1": 1, "a2": 1, "b1": -2, "b2": -1, "alpha": 0}})
        out = tmp_path / "m.csv"
        lcurve = tmp_path / "l.csv"
        assert run(["manifold", path, "--x2=-1:1:5", "--x3=-1:1:5",
                    "--out", str(out), "--lcurve-out", str(lcurve)]) == 0
        rows = lcurve.read_text().strip().split("\n")[1:]
        for row in rows:
            _, x2, x3, _ = row.split(",")
            assert float(x2) == 0.0 and float(x3) == 0.0

    def test_lcurve_perturbed_row(self, tmp_path):
        out = tmp_path / "m.csv"
        lcurve = tmp_path / "l.csv"
        assert run(["manifold", bundled("invisible_db.json"),
                    "--x2", "0:1:3", "--x3", "0:1:3",
                    "--out", str(out), "--lcurve-out", str(lcurve),
                    "--lcurve-samples", "3"]) == 0
        rows = lcurve.read_text().strip().split("\n")[1:]
        lam0 = rows[1].split(",")
        assert float(lam0[0]) == 0.0
        assert float(lam0[1]) == pytest.approx(0.2)
        assert float(lam0[2]) == pytest.approx(-0.2)

    def test_empty_grid_exit_2(self, tmp_path, capsys):
        assert run(["manifold", bundled("invisible_db.json"),
                    "--x2", "0:1:0", "--x3", "0:1:3"]) == 2
        assert "COUNT" in capsys.readouterr().err

    def test_manifold_csv_content(self, tmp_path):
        out = tmp_path / "m.csv"
        assert run(["manifold", bundled("invisible_db.json"),
                    "--x2", "1:1:1", "--x3", "1:1:1", "--out", str(out)]) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "lambda,x2,x3,stability"
        assert len(lines) == 2 and lines[1].endswith("attracting")


class TestSimulate:
    def test_regularized_example_file(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        code = run(["simulate", bundled("example_i.json"),
                    "--mode", "regularized", "--eps", "1e-3",
                    "--sigmoid", "tanh", "--t-end", "5",
                    "--x0", "0.1,-0.5,0.5", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "t,x1,x2,x3,lambda,mode"
        assert len(lines) > 100
        summary = capsys.readouterr().out
        assert "events=" in summary and "non_unique=" in summary

    def test_pws_section6_sliding_lambda_zero(self, tmp_path):
        out = tmp_path / "t.csv"
        # attracting orientation so the trajectory reaches the surface
        path = bundled("section6_nonlinear.json")
        assert run(["simulate", path, "--mode", "pws", "--t-end", "2",
                    "--x0", "0.5,0,0", "--out", str(out)]) == 0
        rows = [l.split(",") for l in out.read_text().strip().split("\n")[1:]]
        sliding = [r for r in rows if r[5] == "sliding"]
        assert sliding
        assert all(abs(float(r[4])) < 1e-9 for r in sliding if r[4])

    def test_eps_zero_exit_2(self, tmp_path, capsys):
        assert run(["simulate", bundled("example_i.json"),
                    "--mode", "regularized", "--eps", "0",
                    "--t-end", "1"]) == 2

    def test_eps_required_in_regularized_mode(self, tmp_path, capsys):
        assert run(["simulate", bundled("example_i.json"),
                    "--mode", "regularized", "--t-end", "1"]) == 2

    def test_deterministic_output(self, tmp_path):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        argv = ["simulate", bundled("section6_linear.json"), "--mode", "pws",
                "--t-end", "2", "--x0", "0.5,0,0"]
        assert run(argv + ["--out", str(out1)]) == 0
        assert run(argv + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_batch_x0_with_threads(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PWSFOLD_THREADS", "2")
        out = tmp_path / "batch.csv"
        assert run(["simulate", bundled("section6_linear.json"), "--mode", "pws",
                    "--t-end", "1", "--x0", "0.5,0,0", "--x0", "0.25,0,0",
                    "--out", str(out)]) == 0
        assert (tmp_path / "batch.0.csv").exists()
        assert (tmp_path / "batch.1.csv").exists()

    def test_batch_requires_out(self, capsys):
        assert run(["simulate", bundled("section6_linear.json"),
                    "--mode", "pws", "--t-end", "1",
                    "--x0", "0.5,0,0", "--x0", "0.25,0,0"]) == 2

    def test_numerical_failure_exit_3(self, tmp_path, capsys):
        # field singular on the path: 1/x1 blows up approaching the surface
        path = write_json(tmp_path, "sing.json", {
            "fplus": ["-1/x1", "0", "0"], "fminus": ["1", "0", "0"]})
        code = run(["simulate", path, "--mode", "pws", "--t-end", "2",
                    "--x0", "1,0,0", "--out", str(tmp_path / "s.csv")])
        assert code == 3


class TestShow:
    def test_canonical_round_trip(self, capsys):
        from pwsfold import expr
        assert run(["show", bundled("example_i.json")]) == 0
        out = capsys.readouterr().out.strip().split("\n")
        assert len(out) == 9
        for line in out:
            name, text = line.split(" = ", 1)
            back = expr.parse_expression(text)
            assert expr.to_text(back) == text

    def test_normal_form_header(self, capsys):
        assert run(["show", bundled("invisible_db.json")]) == 0
        out = capsys.readouterr().out
        assert out.startswith("normal_form: a1=1 a2=1")
        assert "fplus[0] = (-x2)" in out


class TestExamples:
    def test_alias_matches_simulate(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        flags = ["--mode", "regularized", "--eps", "1e-3", "--t-end", "2",
                 "--x0", "0.1,-0.5,0.5"]
        assert run(["examples", "i", *flags, "--out", str(a)]) == 0
        assert run(["simulate", bundled("example_i.json"), *flags,
                    "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_example_exit_2(self, capsys):
        assert run(["examples", "iv", "--eps", "1e-3", "--t-end", "1"]) == 2
        assert "unknown example" in capsys.readouterr().err

    def test_bounded_summary(self, tmp_path, capsys):
        out = tmp_path / "e.csv"
        assert run(["examples", "ii", "--t-end", "20", "--eps", "1e-3",
                    "--out", str(out)]) == 0
        assert "events=" in capsys.readouterr().out
