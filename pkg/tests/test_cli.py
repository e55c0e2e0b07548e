import json
import os
import signal
import subprocess
import sys
import time
import urllib.request

import pytest
from click.testing import CliRunner

from huci.cli import main


FLAT_RECORDS = [
    {"id": "aph:1", "title": "Storia di Venezia", "authors": ["Rossi, M."],
     "year": 1992, "language": "it"},
    {"id": "aph:2", "title": "Annales", "year": 1950},
    {"id": "aph:3", "title": "Greek History", "year": 1893, "language": "en"},
]

PAPER_PARAMS = {
    "total_articles_per_year": 45_000_000,
    "ah_fraction": 0.10,
    "years": 25,
    "corpus_bytes": 230_000_000_000,
    "corpus_articles": 4_500_000,
    "corpus_triples": 2_000_000_000,
    "corpus_resources": 7_500_000,
}


@pytest.fixture
def runner():
    return CliRunner()


class TestHelpAndUsage:
    @pytest.mark.parametrize("args", [
        ["--help"], ["node", "--help"], ["ingest", "--help"],
        ["federate", "--help"], ["query", "--help"], ["estimate", "--help"],
        ["export", "--help"], ["report", "--help"],
    ])
    def test_help_exits_zero(self, runner, args):
        result = runner.invoke(main, args)
        assert result.exit_code == 0
        assert "Usage" in result.output

    def test_unknown_flag_exits_two(self, runner):
        result = runner.invoke(main, ["estimate", "--bogus"])
        assert result.exit_code == 2


class TestEstimate:
    def test_paper_figures(self, runner, tmp_path):
        params = tmp_path / "params.json"
        params.write_text(json.dumps(PAPER_PARAMS))
        result = runner.invoke(main, ["estimate", "--params", str(params)])
        assert result.exit_code == 0
        out = json.loads(result.output)
        assert out["total_triples"] == pytest.approx(3.000e10, rel=0.01)
        assert out["annual_articles"] == 4_500_000


class TestIngest:
    def test_flat_json(self, runner, tmp_path):
        src = tmp_path / "flat.json"
        src.write_text(json.dumps(FLAT_RECORDS))
        result = runner.invoke(main, [
            "ingest", "--data", str(tmp_path / "node"),
            "--provider-id", "aph", "--license", "cc0", str(src)])
        assert result.exit_code == 0, result.output
        assert json.loads(result.output)["created"] == 3

    def test_unknown_format_exits_one(self, runner, tmp_path):
        src = tmp_path / "bad.bin"
        src.write_text("<xml/>")
        result = runner.invoke(main, [
            "ingest", "--data", str(tmp_path / "node"),
            "--provider-id", "aph", str(src)])
        assert result.exit_code == 1
        assert "unknown-format" in result.output

    def test_sidecar_header(self, runner, tmp_path):
        src = tmp_path / "flat.json"
        src.write_text(json.dumps(FLAT_RECORDS))
        (tmp_path / "dataset.json").write_text(json.dumps(
            {"provider_id": "aph", "license": "cc0"}))
        result = runner.invoke(main, [
            "ingest", "--data", str(tmp_path / "node"), str(src)])
        assert result.exit_code == 0
        node_meta = json.loads(
            (tmp_path / "node" / "node.json").read_text())
        assert node_meta["license"] == "cc0"


def _wait_for(url, timeout=10.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        try:
            with urllib.request.urlopen(url, timeout=1) as resp:
                return json.loads(resp.read())
        except Exception:
            time.sleep(0.1)
    raise TimeoutError(url)


@pytest.fixture
def served_node(tmp_path):
    runner = CliRunner()
    src = tmp_path / "flat.json"
    src.write_text(json.dumps(FLAT_RECORDS))
    data = tmp_path / "node"
    result = runner.invoke(main, [
        "ingest", "--data", str(data), "--provider-id", "aph",
        "--license", "cc0", str(src)])
    assert result.exit_code == 0, result.output
    proc = subprocess.Popen(
        [sys.executable, "-m", "huci.cli", "node", "serve",
         "--data", str(data), "--port", "0", "--node-id", "aph"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    line = proc.stdout.readline().strip()
    assert line.startswith("listening="), line
    port = int(line.split("=")[1])
    _wait_for(f"http://127.0.0.1:{port}/meta")
    yield port
    proc.send_signal(signal.SIGINT)
    try:
        proc.wait(timeout=5)
    except subprocess.TimeoutExpired:
        proc.kill()


class TestEndToEnd:
    def test_serve_harvest_query_export(self, runner, tmp_path, served_node):
        config = tmp_path / "federation.json"
        config.write_text(json.dumps({
            "nodes": [{"node_id": "aph",
                       "base_url": f"http://127.0.0.1:{served_node}"}],
            "require_open_license": True,
        }))
        fed_dir = tmp_path / "fed"
        result = runner.invoke(main, [
            "federate", "harvest", "--config", str(config),
            "--data", str(fed_dir)])
        assert result.exit_code == 0, result.output
        report = json.loads(result.output)
        assert report["harvests"][0]["resources"] == 3
        assert report["status"]["nodes"][0]["cursor"] == 3

        result = runner.invoke(main, [
            "query", "forward", "aph:2", "--data", str(fed_dir)])
        assert result.exit_code == 0, result.output

        result = runner.invoke(main, [
            "query", "backward", "ghost:1", "--data", str(fed_dir)])
        assert result.exit_code == 1

        out1 = tmp_path / "a.nt"
        out2 = tmp_path / "b.nt"
        for out in (out1, out2):
            result = runner.invoke(main, [
                "export", "--data", str(fed_dir), "--format", "nt",
                "--out", str(out)])
            assert result.exit_code == 0, result.output
        assert out1.read_bytes() == out2.read_bytes()

    def test_dead_node_flagged_but_exit_zero_with_survivor(
            self, runner, tmp_path, served_node):
        config = tmp_path / "federation.json"
        config.write_text(json.dumps({
            "nodes": [
                {"node_id": "aph",
                 "base_url": f"http://127.0.0.1:{served_node}"},
                {"node_id": "dead", "base_url": "http://127.0.0.1:9"},
            ],
        }))
        result = runner.invoke(main, [
            "federate", "harvest", "--config", str(config),
            "--data", str(tmp_path / "fed")])
        assert result.exit_code == 0, result.output
        report = json.loads(result.output)
        by_id = {h["node_id"]: h for h in report["harvests"]}
        assert "error" in by_id["dead"]
        assert by_id["aph"]["resources"] == 3

    def test_all_dead_exit_one(self, runner, tmp_path):
        config = tmp_path / "federation.json"
        config.write_text(json.dumps({
            "nodes": [{"node_id": "dead", "base_url": "http://127.0.0.1:9"}],
        }))
        result = runner.invoke(main, [
            "federate", "harvest", "--config", str(config),
            "--data", str(tmp_path / "fed")])
        assert result.exit_code == 1


class TestReport:
    def test_coverage(self, runner, tmp_path, served_node):
        config = tmp_path / "federation.json"
        config.write_text(json.dumps({
            "nodes": [{"node_id": "aph",
                       "base_url": f"http://127.0.0.1:{served_node}"}],
        }))
        fed_dir = tmp_path / "fed"
        assert runner.invoke(main, [
            "federate", "harvest", "--config", str(config),
            "--data", str(fed_dir)]).exit_code == 0
        ref = tmp_path / "ref.json"
        ref.write_text(json.dumps({"en": 0.30, "it": 0.25, "fr": 0.20,
                                   "de": 0.20, "other": 0.05}))
        result = runner.invoke(main, [
            "report", "coverage", "--data", str(fed_dir),
            "--reference", str(ref)])
        assert result.exit_code == 0, result.output
        doc = json.loads(result.output)
        assert doc["language_shares"]["it"] == pytest.approx(1 / 3)
