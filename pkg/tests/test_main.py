import json

import pytest

from main import EXIT_CONFIG_ERROR, EXIT_DENIED, EXIT_OK, main

TRIANGLE = """N 0
N 1
N 2
E 0 1 5 0.8
E 1 2 5 0.8
E 0 2 5 0.8
"""

SMOKE = {
    "topology": {"mode": "waxman", "node_count": 12, "capacity": 5, "rng_seed": 3},
    "thresholds": [0.7, 0.8],
    "capacities": [5],
    "pair_counts": [2],
    "demand_per_pair": 3,
    "trials": 2,
    "rng_seed": 1,
    "algorithms": ["q_path", "alg3_path", "baseline"],
    "record_runtime": False,
}


@pytest.fixture
def tri_path(tmp_path):
    path = tmp_path / "tri.txt"
    path.write_text(TRIANGLE)
    return str(path)


class TestRouteSingle:
    def test_direct_edge(self, tri_path, capsys):
        code = main(["route-single", "--topology", tri_path, "--src", "0", "--dst", "2", "--threshold", "0.75"])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        solution = json.loads(lines[0])
        assert solution["path"] == [0, 2]
        assert solution["rounds_per_edge"] == {"0-2": 0}
        assert solution["served"] == 1
        assert list(solution) == [
            "source", "destination", "path", "rounds_per_edge", "fidelity", "threshold",
            "width", "served", "expected_throughput", "cost",
        ]

    def test_purified_edge(self, tri_path, capsys):
        code = main(["route-single", "--topology", tri_path, "--src", "0", "--dst", "1",
                     "--threshold", "0.9", "--algo", "q-leap"])
        assert code == EXIT_OK
        solution = json.loads(capsys.readouterr().out.splitlines()[0])
        assert solution["rounds_per_edge"] == {"0-1": 1}
        assert solution["fidelity"] == pytest.approx(0.941176, abs=1e-6)

    def test_denied(self, tmp_path, capsys):
        path = tmp_path / "weak.txt"
        path.write_text("N 0\nN 1\nE 0 1 1 0.6\n")
        code = main(["route-single", "--topology", str(path), "--src", "0", "--dst", "1", "--threshold", "0.9"])
        assert code == EXIT_DENIED
        assert capsys.readouterr().out == ""

    def test_unknown_node(self, tri_path):
        code = main(["route-single", "--topology", tri_path, "--src", "0", "--dst", "7", "--threshold", "0.8"])
        assert code == EXIT_CONFIG_ERROR

    def test_bad_threshold(self, tri_path):
        code = main(["route-single", "--topology", tri_path, "--src", "0", "--dst", "1", "--threshold", "1.2"])
        assert code == EXIT_CONFIG_ERROR

    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as info:
            main(["route-single", "--frobnicate"])
        assert info.value.code == 2


class TestRouteMulti:
    def test_explicit_pairs(self, tri_path, capsys):
        code = main(["route-multi", "--topology", tri_path, "--pair", "0:1", "--pair", "1:2",
                     "--demand", "2", "--threshold", "0.75"])
        assert code == EXIT_OK
        assert "2/2 requests served" in capsys.readouterr().out

    def test_baseline(self, tri_path, capsys):
        code = main(["route-multi", "--topology", tri_path, "--pair", "0:2", "--demand", "1",
                     "--threshold", "0.75", "--algo", "baseline"])
        assert code == EXIT_OK

    def test_malformed_pair(self, tri_path):
        with pytest.raises(SystemExit):
            main(["route-multi", "--topology", tri_path, "--pair", "0-1"])


class TestSweepCommand:
    def test_deterministic_csv(self, tmp_path):
        config = tmp_path / "smoke.json"
        config.write_text(json.dumps(SMOKE))
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["sweep", "--config", str(config), "--out", str(first)]) == EXIT_OK
        assert main(["sweep", "--config", str(config), "--out", str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()
        assert len(first.read_text().splitlines()) == 1 + 2 * 3

    def test_report(self, tmp_path):
        config = tmp_path / "smoke.json"
        config.write_text(json.dumps(dict(SMOKE, thresholds=[0.7])))
        report = tmp_path / "report.md"
        assert main(["sweep", "--config", str(config), "--out", str(tmp_path / "s.csv"),
                     "--report", str(report)]) == EXIT_OK
        assert "Sweep Results" in report.read_text()

    def test_bad_config(self, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({"thresholds": [1.5]}))
        assert main(["sweep", "--config", str(config), "--out", str(tmp_path / "x.csv")]) == EXIT_CONFIG_ERROR

    def test_missing_config(self, tmp_path):
        assert main(["sweep", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG_ERROR


def test_gen_topology_round_trip(tmp_path, capsys):
    out = tmp_path / "wax.txt"
    assert main(["gen-topology", "--out", str(out), "--nodes", "12", "--seed", "4"]) == EXIT_OK
    code = main(["route-single", "--topology", str(out), "--src", "0", "--dst", "5", "--threshold", "0.6",
                 "--algo", "q-path"])
    assert code in (EXIT_OK, EXIT_DENIED)


def test_bench(tmp_path):
    out = tmp_path / "runtime.csv"
    assert main(["bench", "--nodes", "2", "--samples", "1", "--out", str(out)]) == EXIT_OK
    assert out.read_text().startswith("nodes,algorithm,runtime_ms_mean,samples")


def test_bench_markdown_report(tmp_path):
    report = tmp_path / "runtime.md"
    assert main(["bench", "--nodes", "2", "--samples", "1", "--out", str(tmp_path / "runtime.csv"),
                 "--report", str(report)]) == EXIT_OK
    text = report.read_text()
    assert "Runtime Benchmark" in text
    assert "| 2 | q_leap |" in text
