import csv
import json

import pytest

from followgraph.cli import main
from followgraph.manifest import verify

from pipeline import full_pipeline, simulate, working_directory


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory, scenarios_dir_module):
    out = tmp_path_factory.mktemp("sim")
    assert simulate(scenarios_dir_module / "pipeline.json", out) == 0
    return out


@pytest.fixture(scope="module")
def scenarios_dir_module():
    from conftest import SCENARIOS
    return SCENARIOS


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory, sim_dir):
    out = tmp_path_factory.mktemp("run")
    assert full_pipeline(sim_dir, out) == [0] * 11
    return out


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _graph(sim_dir, out):
    return ["--edges", str(sim_dir / "edges.csv"), "--roster", str(sim_dir / "roster.csv"),
            "--output-dir", str(out)]


class TestOutputs:
    def test_every_manifest_verifies(self, run_dir):
        manifests = sorted(run_dir.glob("*_manifest.json"))
        assert len(manifests) == 11
        with working_directory(run_dir):
            for m in manifests:
                assert verify(m.name) == [], m.name

    def test_manifest_has_no_timestamps(self, run_dir):
        obj = json.loads((run_dir / "shares_manifest.json").read_text())
        assert set(obj) == {"command", "tool_version", "seed", "config", "inputs", "outputs"}
        assert obj["outputs"][0]["path"] == "shares.csv"

    def test_shares_top_k_row(self, run_dir):
        rows = _rows(run_dir / "shares.csv")
        assert rows[-1]["candidate_id"] == "__top_k__"
        assert sum(float(r["weighted_share"]) for r in rows[:-1]) == pytest.approx(1, abs=1e-5)

    def test_coverage_table(self, run_dir):
        rows = _rows(run_dir / "coverage.csv")
        assert [r["channel"] for r in rows] == ["FirstName", "ProfileImage", "SelfDescription", "Total"]
        total = sum(float(r["net_contribution_fraction"]) for r in rows[:3])
        assert float(rows[3]["net_contribution_fraction"]) == pytest.approx(total, abs=2e-6)

    def test_regression_table_columns(self, run_dir):
        header = (run_dir / "regression.csv").read_text().splitlines()[0].split(",")
        assert header[:8] == ["user_id", "n_candidates", "partisan", "tweets", "social_capital",
                              "journalist", "female", "start_year"]
        assert header[-2:] == ["celeb_LadyGaga", "celeb_LebronJames"]

    def test_fit_json(self, run_dir):
        fit = json.loads((run_dir / "fit_nb_sim.json").read_text())
        assert fit["converged"] is True
        assert fit["gradient_norm"] < 1e-6
        assert fit["alpha"]["estimate"] > 0
        assert {c["block"] for c in json.loads((run_dir / "fit_mnl_sim.json").read_text())
                ["coefficients"]} == {"Democrat", "Republican"}

    def test_effects_precision(self, run_dir):
        rows = _rows(run_dir / "effects_celebrity.csv")
        assert [r["class"] for r in rows] == ["Democrat", "Independent", "Republican"]
        assert len(rows[0]["delta"].split(".")[1]) == 15
        assert sum(float(r["p_at_1"]) for r in rows) == pytest.approx(1, abs=1e-14)

    def test_engagement_no_followers_status(self, tmp_path):
        (tmp_path / "roster.csv").write_text("candidate_id,display_name,party\nA,A,D\nB,B,R\n")
        (tmp_path / "edges.csv").write_text("user_id,candidate_id\nu1,A\nu2,A\n")
        assert main(["summarize", "--edges", str(tmp_path / "edges.csv"), "--roster",
                     str(tmp_path / "roster.csv"), "--output-dir", str(tmp_path)]) == 0
        rows = _rows(tmp_path / "engagement.csv")
        assert rows[1]["status"] == "no_followers"


class TestExitCodes:
    def test_missing_roster_file(self, sim_dir, tmp_path, capsys):
        code = main(["shares", "--edges", str(sim_dir / "edges.csv"), "--roster",
                     str(tmp_path / "nope.csv"), "--output-dir", str(tmp_path)])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_unknown_top_k(self, sim_dir, tmp_path):
        assert main(["shares", *_graph(sim_dir, tmp_path), "--top-k", "Nobody"]) == 2

    def test_bad_min_support(self, sim_dir, tmp_path):
        assert main(["patterns", *_graph(sim_dir, tmp_path), "--min-support", "0"]) == 2

    def test_bad_thread_setting(self, sim_dir, tmp_path, monkeypatch):
        monkeypatch.setenv("FOLLOWGRAPH_THREADS", "zero")
        assert main(["summarize", *_graph(sim_dir, tmp_path)]) == 2
        monkeypatch.setenv("FOLLOWGRAPH_THREADS", "4")
        assert main(["summarize", *_graph(sim_dir, tmp_path)]) == 0

    def test_rank_deficient_fit(self, tmp_path):
        data = tmp_path / "d.csv"
        data.write_text("y,a,b\n" + "".join(f"{i % 3},{i},{2 * i}\n" for i in range(30)))
        assert main(["fit", "--model", "nb", "--data", str(data), "--outcome", "y",
                     "--output-dir", str(tmp_path)]) == 3

    def test_missing_class_fit(self, tmp_path):
        data = tmp_path / "d.csv"
        data.write_text("partisan,x\n" + "".join(f"{'Democrat' if i % 2 else 'Republican'},{i}\n"
                                                 for i in range(30)))
        assert main(["fit", "--model", "mnl", "--data", str(data), "--outcome", "partisan",
                     "--output-dir", str(tmp_path)]) == 3

    def test_effects_needs_mnl(self, run_dir, sim_dir, tmp_path):
        assert main(["effects", "--fit", str(run_dir / "fit_logit_sim.json"), "--data",
                     str(sim_dir / "logit_data.csv"), "--column", "x1",
                     "--output-dir", str(tmp_path)]) == 2

    def test_usage_error_from_argparse(self):
        with pytest.raises(SystemExit) as info:
            main(["fit", "--model", "probit"])
        assert info.value.code == 2

    def test_label_requires_both_graph_files(self, sim_dir, tmp_path):
        assert main(["label", "--profiles", str(sim_dir / "profiles.jsonl"), "--names",
                     str(sim_dir / "names.csv"), "--edges", str(sim_dir / "edges.csv"),
                     "--output-dir", str(tmp_path)]) == 2

    def test_where_filter(self, run_dir, tmp_path):
        code = main(["fit", "--model", "nb", "--data", str(run_dir / "regression.csv"),
                     "--outcome", "n_candidates", "--where", "female=1", "--covariates",
                     "tweets,social_capital,journalist", "--output-dir", str(tmp_path)])
        assert code == 0
        fit = json.loads((tmp_path / "fit_nb.json").read_text())
        n_female = sum(r["female"] == "1" for r in _rows(run_dir / "regression.csv"))
        assert fit["observations"] == n_female
