import json
import math
from pathlib import Path

import numpy as np
import pytest

from catmod.cli import main
from helpers import clustered_vectors, write_lexicon_rows, write_vec


def write_graph_fixture(tmp_path, X, labels, name="fx"):
    words = [f"w{i}" for i in range(len(labels))]
    write_vec(tmp_path / f"{name}.vec", words, X)
    write_lexicon_rows(tmp_path / f"{name}.tsv",
                       [(w, f"a{c % 2}", f"b{c}", f"c{c}") for w, c in zip(words, labels)])
    return str(tmp_path / f"{name}.vec"), str(tmp_path / f"{name}.tsv")


@pytest.fixture
def blobs(tmp_path):
    X, labels = clustered_vectors(3, 6, 6, 0.05, np.random.default_rng(0))
    return write_graph_fixture(tmp_path, X, labels)


def error_line(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    return err[0]


class TestModularity:
    def test_perfect_partition_prints_one(self, blobs, tmp_path, capsys):
        vec, lex = blobs
        out = tmp_path / "r.json"
        assert main(["modularity", "--vectors", vec, "--lexicon", lex, "--k", "2", "--out", str(out)]) == 0
        assert capsys.readouterr().out.strip() == "1.000000"
        doc = json.loads(out.read_text())
        assert {"level", "k", "mode", "Q", "Q_max", "Q_norm", "categories", "a", "e", "Q_c"} <= set(doc)
        assert doc["level"] == 3 and doc["mode"] == "multigraph-sum"

    def test_missing_vector_file(self, blobs, tmp_path, capsys):
        _, lex = blobs
        missing = str(tmp_path / "nowhere.vec")
        assert main(["modularity", "--vectors", missing, "--lexicon", lex]) == 1
        line = error_line(capsys)
        assert line.startswith("error:load-vectors:") and missing in line

    def test_missing_word_fails_by_default(self, blobs, tmp_path, capsys):
        vec, lex = blobs
        with open(lex, "a", encoding="utf-8") as fh:
            fh.write("ghost\ta0\tb0\tc0\n")
        assert main(["modularity", "--vectors", vec, "--lexicon", lex]) == 1
        assert error_line(capsys).startswith("error:resolve:")
        out = tmp_path / "r.json"
        assert main(["modularity", "--vectors", vec, "--lexicon", lex, "--policy", "skip-missing",
                     "--out", str(out)]) == 0
        assert json.loads(out.read_text())["missing"] == ["ghost"]

    def test_bad_k(self, blobs, capsys):
        vec, lex = blobs
        assert main(["modularity", "--vectors", vec, "--lexicon", lex, "--k", "99"]) == 1
        assert error_line(capsys).startswith("error:graph:")

    def test_usage_error(self, capsys):
        assert main(["modularity", "--k", "2"]) == 1
        assert error_line(capsys).startswith("error:args:")

    def test_idempotent(self, blobs, tmp_path):
        vec, lex = blobs
        outs = []
        for name in ("a.json", "b.json"):
            main(["modularity", "--vectors", vec, "--lexicon", lex, "--out", str(tmp_path / name),
                  "--edges", str(tmp_path / (name + ".edges"))])
            outs.append((tmp_path / name).read_bytes())
        assert outs[0] == outs[1]
        assert (tmp_path / "a.json.edges").read_bytes() == (tmp_path / "b.json.edges").read_bytes()


class TestCommunities:
    def test_two_blobs(self, tmp_path):
        X, labels = clustered_vectors(2, 8, 5, 0.05, np.random.default_rng(1))
        vec, lex = write_graph_fixture(tmp_path, X, labels)
        out = tmp_path / "c.json"
        assert main(["communities", "--vectors", vec, "--lexicon", lex, "--k", "2", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        comms = doc["partition"]["communities"]
        assert len(comms) == 2
        assert sorted(map(sorted, comms)) == [list(range(8)), list(range(8, 16))]
        assert doc["report"]["level"] == "custom"

    def test_k1_chain(self, tmp_path):
        angles = np.linspace(0, 1.2, 8)
        X = np.column_stack([np.cos(angles), np.sin(angles)])
        vec, lex = write_graph_fixture(tmp_path, X, np.arange(8) // 4)
        out = tmp_path / "c.json"
        assert main(["communities", "--vectors", vec, "--lexicon", lex, "--k", "1", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["k"] == 1

    def test_identical_vectors_degenerate(self, tmp_path, capsys):
        vec, lex = write_graph_fixture(tmp_path, np.ones((6, 3)), np.arange(6) % 2)
        assert main(["communities", "--vectors", vec, "--lexicon", lex]) == 1
        line = error_line(capsys)
        assert line.startswith("error:modularity:") and "degenerate" in line.lower()


class TestTask:
    def test_wordsim_exact_linear(self, tmp_path):
        rng = np.random.default_rng(2)
        words = [f"v{i}" for i in range(80)]
        X = rng.normal(size=(80, 4))
        write_vec(tmp_path / "v.vec", words, X)
        rows = []
        for i in range(0, 80, 2):
            u, v = X[i], X[i + 1]
            euc = math.sqrt(float((u - v) @ (u - v)))
            cos = float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))
            rows.append(f"{words[i]}\t{words[i + 1]}\t{repr(0.3 + 0.2 * euc + 0.5 * cos + 0.5)}")
        (tmp_path / "p.tsv").write_text("\n".join(rows) + "\n")
        out = tmp_path / "t.json"
        assert main(["task", "wordsim", "--vectors", str(tmp_path / "v.vec"), "--data", str(tmp_path / "p.tsv"),
                     "--trials", "5", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["metric"] == "mean-MSE" and doc["value"] <= 1e-10 and doc["trials"] == 5

    def test_missing_required(self, capsys):
        assert main(["task", "bli", "--src-vectors", "x"]) == 1
        line = error_line(capsys)
        assert line.startswith("error:args:") and "--dictionary" in line

    def test_task_error_stage(self, tmp_path, capsys):
        write_vec(tmp_path / "v.vec", ["a", "b"], np.eye(2))
        (tmp_path / "p.tsv").write_text("a\tb\t9\n")
        assert main(["task", "wordsim", "--vectors", str(tmp_path / "v.vec"), "--data", str(tmp_path / "p.tsv")]) == 1
        assert error_line(capsys).startswith("error:task:")


def write_manifest(tmp_path, n_runs, wordsim=True):
    runs = []
    for i in range(n_runs):
        rng = np.random.default_rng(i)
        X, labels = clustered_vectors(3, 6, 6, 0.1 + 0.15 * i, rng)
        vec, lex = write_graph_fixture(tmp_path, X, labels, name=f"r{i}")
        run = {"model": ("ft", "m", "s")[i % 3], "language": f"l{i}", "vectors": vec, "lexicon": lex}
        if wordsim:
            words = [f"w{j}" for j in range(18)]
            lines = [f"{words[j]}\t{words[(j * 5 + 1) % 18]}\t{4.0 if labels[j] == labels[(j * 5 + 1) % 18] else 1.0}"
                     for j in range(18) if (j * 5 + 1) % 18 != j]
            (tmp_path / f"p{i}.tsv").write_text("\n".join(lines) + "\n")
            run["tasks"] = {"wordsim": f"p{i}.tsv"}
        runs.append(run)
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"trials": 3, "runs": runs}))
    return path


class TestSweep:
    def test_two_runs_24_reports(self, tmp_path, capsys):
        m = write_manifest(tmp_path, 2)
        args = ["sweep", "--manifest", str(m), "--out", str(tmp_path / "out"), "--cache-dir", str(tmp_path / "cache")]
        assert main(args) == 0
        assert len(list((tmp_path / "cache" / "reports").glob("*.json"))) == 24
        assert len(list((tmp_path / "out" / "reports").glob("*.json"))) == 24
        assert capsys.readouterr().out.startswith("24 reports (0 cached)")
        assert main(args) == 0
        assert capsys.readouterr().out.startswith("24 reports (24 cached)")

    def test_cache_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CATMOD_CACHE_DIR", str(tmp_path / "envcache"))
        m = write_manifest(tmp_path, 1, wordsim=False)
        assert main(["sweep", "--manifest", str(m), "--out", str(tmp_path / "out"), "--no-tasks"]) == 0
        assert len(list((tmp_path / "envcache" / "reports").glob("*.json"))) == 12

    def test_partial_failure_and_strict(self, tmp_path, capsys):
        m = write_manifest(tmp_path, 2, wordsim=False)
        doc = json.loads(m.read_text())
        doc["runs"][1]["vectors"] = str(tmp_path / "missing.vec")
        m.write_text(json.dumps(doc))
        base = ["sweep", "--manifest", str(m), "--out", str(tmp_path / "out"), "--cache-dir", str(tmp_path / "c")]
        assert main(base) == 0
        assert "failed l1-m" in capsys.readouterr().err
        assert "l1-m" in json.loads((tmp_path / "out" / "failures.json").read_text())
        assert main(base + ["--strict"]) == 1
        assert capsys.readouterr().err.strip().splitlines()[-1].startswith("error:sweep:")

    def test_bad_manifest(self, tmp_path, capsys):
        (tmp_path / "m.json").write_text("{not json")
        assert main(["sweep", "--manifest", str(tmp_path / "m.json"), "--out", str(tmp_path / "o")]) == 1
        assert error_line(capsys).startswith("error:sweep:")


def write_monotone_outputs(tmp_path, n):
    rng = np.random.default_rng(3)
    q = rng.uniform(0.2, 0.9, size=n)
    (tmp_path / "reports").mkdir()
    (tmp_path / "tasks").mkdir()
    for i in range(n):
        run, model = f"r{i}", ("ft", "m", "s")[i % 3]
        report = {"level": 3, "k": 2, "mode": "multigraph-sum", "Q": q[i] / 2, "Q_max": 0.5, "Q_norm": q[i],
                  "categories": ["x", "y"], "a": [0.5, 0.5], "e": [0.3, 0.3], "Q_c": [q[i] / 2, q[i] / 2]}
        (tmp_path / "reports" / f"{run}.json").write_text(json.dumps(
            {"run": run, "model": model, "language": run, "row": 3, "report": report}))
        results = {"sentiment-accuracy": {"value": 0.5 + q[i] ** 3}, "wordsim-mse": {"value": 3 - q[i]}}
        (tmp_path / "tasks" / f"{run}.json").write_text(json.dumps(
            {"run": run, "model": model, "language": run, "results": results}))


class TestCorrelate:
    def test_monotone_all_one(self, tmp_path, capsys):
        write_monotone_outputs(tmp_path, 12)
        assert main(["correlate", "--reports", str(tmp_path / "reports"), "--tasks", str(tmp_path / "tasks"),
                     "--subset", "all"]) == 0
        cells = json.loads(capsys.readouterr().out)["cells"]
        assert len(cells) == 8 and all(c["rho"] == 1.0 for c in cells)

    def test_out_prefix_writes_json_and_csv(self, tmp_path):
        write_monotone_outputs(tmp_path, 6)
        prefix = tmp_path / "tables" / "corr"
        assert main(["correlate", "--reports", str(tmp_path / "reports"), "--tasks", str(tmp_path / "tasks"),
                     "--out", str(prefix)]) == 0
        assert (tmp_path / "tables" / "corr.csv").read_text().splitlines()[0] == "row,metric,subset,rho,n"
        assert json.loads((tmp_path / "tables" / "corr.json").read_text())["cells"]

    def test_rank_categories(self, tmp_path, capsys):
        write_monotone_outputs(tmp_path, 6)
        assert main(["rank-categories", "--reports", str(tmp_path / "reports"), "--tasks", str(tmp_path / "tasks"),
                     "--metric", "sentiment-accuracy"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert [r["rho"] for r in doc["ranking"]] == [1.0, 1.0]


def test_module_entry_point():
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, "-m", "catmod", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("catmod ")


FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


class TestShippedFixtures:
    def test_modularity(self, capsys):
        assert main(["modularity", "--vectors", str(FIXTURES / "aa.vec"), "--lexicon", str(FIXTURES / "lexicon.tsv"),
                     "--lexicon-mode", "binder-strict"]) == 0
        assert capsys.readouterr().out.strip() == "1.000000"

    def test_sentiment_reg_flag(self, tmp_path):
        outs = {}
        for reg in ("1.0", "0.05"):
            out = tmp_path / f"s{reg}.json"
            assert main(["task", "sentiment", "--vectors", str(FIXTURES / "ee.vec"),
                         "--data", str(FIXTURES / "sentiment.tsv"), "--trials", "3", "--svm-reg", reg,
                         "--out", str(out)]) == 0
            outs[reg] = json.loads(out.read_text())
        assert outs["1.0"] != outs["0.05"]

    def test_sweep_and_correlate(self, tmp_path, capsys):
        assert main(["sweep", "--manifest", str(FIXTURES / "manifest.json"), "--out", str(tmp_path / "out"),
                     "--cache-dir", str(tmp_path / "cache")]) == 0
        assert capsys.readouterr().out.startswith("60 reports")
        assert main(["correlate", "--reports", str(tmp_path / "out" / "reports"),
                     "--tasks", str(tmp_path / "out" / "tasks"), "--format", "csv"]) == 0
        rows = capsys.readouterr().out.splitlines()
        assert len(rows) == 1 + 12 * 3
