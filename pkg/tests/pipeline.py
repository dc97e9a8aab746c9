"""The full command sequence, driven through ``followgraph.cli.main``."""

import os
from contextlib import contextmanager
from pathlib import Path

from followgraph.cli import main


@contextmanager
def working_directory(path):
    old = os.getcwd()
    os.chdir(path)
    try:
        yield
    finally:
        os.chdir(old)


def run(*argv) -> int:
    return main([str(a) for a in argv])


def simulate(scenario, out_dir, seed=None) -> int:
    args = ["simulate", "--scenario", scenario, "--output-dir", out_dir]
    if seed is not None:
        args += ["--seed", seed]
    return run(*args)


def full_pipeline(data_dir, run_dir) -> list[int]:
    """Every analysis command over one simulated data set.

    Runs inside ``run_dir`` with relative paths so manifests do not depend
    on where the run lives.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    data = Path(os.path.relpath(data_dir, run_dir))
    graph = ["--edges", data / "edges.csv", "--roster", data / "roster.csv", "--output-dir", "."]
    with working_directory(run_dir):
        codes = [
            run("summarize", *graph),
            run("shares", *graph, "--top-k", "Trump,Clinton,Sanders"),
            run("patterns", *graph),
            run("correlations", *graph),
            run("label", "--profiles", data / "profiles.jsonl", "--names", data / "names.csv",
                "--image-stub", data / "image_stub.csv", "--celebrities", "LadyGaga,LebronJames",
                *graph),
            run("fit", "--model", "nb", "--data", "regression.csv", "--outcome", "n_candidates",
                "--year-column", "start_year", "--tag", "nb_followers", "--output-dir", "."),
            run("fit", "--model", "mnl", "--data", "regression.csv", "--outcome", "partisan",
                "--year-column", "start_year", "--tag", "mnl_followers", "--output-dir", "."),
            run("fit", "--model", "nb", "--data", data / "nb_data.csv", "--outcome", "y",
                "--tag", "nb_sim", "--output-dir", "."),
            run("fit", "--model", "mnl", "--data", data / "mnl_data.csv", "--outcome", "partisan",
                "--tag", "mnl_sim", "--output-dir", "."),
            run("fit", "--model", "logit", "--data", data / "logit_data.csv", "--outcome", "y",
                "--tag", "logit_sim", "--output-dir", "."),
            run("effects", "--fit", "fit_mnl_sim.json", "--data", data / "mnl_data.csv",
                "--column", "celebrity", "--output-dir", "."),
        ]
    return codes


def snapshot(directory) -> dict[str, bytes]:
    directory = Path(directory)
    return {str(p.relative_to(directory)): p.read_bytes()
            for p in sorted(directory.rglob("*")) if p.is_file()}
