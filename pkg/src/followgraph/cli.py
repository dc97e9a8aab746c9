"""followgraph command line interface.

Exit codes: 0 success, 2 input or usage error, 3 numerical or model failure.
Every command writes its outputs plus a ``<command>_manifest.json`` into
``--output-dir``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import regression_rows, write_regression_table
from .errors import EmptyMatrixError, InputError, ModelError
from .glm.design import DesignSpec, default_spec, filter_table, read_table
from .glm.multinomial import SeparationWarning, logit_fit, marginal_effect, mnl_fit
from .glm.negbin import nb_fit
from .glm.optimize import OptimizerConfig
from .glm.results import ModelFit, render_table
from .labeling import (
    CHANNEL_PRIORITY,
    JOURNALIST_KEYWORDS,
    TableImagePredictor,
    channel_coverage,
    classify_gender,
    detect_journalist,
    load_name_list,
    probe_channels,
    read_profiles,
)
from .manifest import RunManifest
from .patterns import exclusive_pattern_shares, frequent_itemsets, pairwise_phi
from .roster import (
    ENGAGEMENT_LABELS,
    PartisanClass,
    engagement_distribution,
    follow_count_histogram,
    follower_counts,
    load_roster,
    partisan_counts,
    read_edges,
)
from .shares import weighted_shares
from .synthetic import Scenario, simulate_population

log = logging.getLogger("followgraph")

EXIT_OK, EXIT_INPUT, EXIT_MODEL = 0, 2, 3


class UsageError(InputError):
    pass


def _f6(x) -> str:
    return f"{float(x):.6f}"


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _outdir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_matrix(args):
    roster = load_roster(args.roster)
    matrix = read_edges(args.edges, roster)
    return matrix


def _csv_list(text):
    return [t.strip() for t in text.split(",") if t.strip()] if text else []


# -- commands ------------------------------------------------------------


def cmd_summarize(args) -> int:
    matrix = _load_matrix(args)
    if matrix.n_users == 0:
        raise EmptyMatrixError()
    out = _outdir(args)
    roster = matrix.roster
    counts = follower_counts(matrix)
    files = [_write_csv(out / "follower_counts.csv",
                        ["candidate_id", "display_name", "party", "followers"],
                        ([c.candidate_id, c.display_name, c.party.value, int(n)]
                         for c, n in zip(roster, counts)))]
    eng = engagement_distribution(matrix)
    rows = []
    for k, c in enumerate(roster):
        fr = eng.fractions(k)
        if fr is None:
            rows.append([c.candidate_id, 0, *[""] * len(ENGAGEMENT_LABELS), "no_followers"])
        else:
            rows.append([c.candidate_id, int(eng.counts[k].sum()), *map(_f6, fr), "ok"])
    files.append(_write_csv(out / "engagement.csv",
                            ["candidate_id", "followers",
                             *[f"bucket_{b}" for b in ENGAGEMENT_LABELS], "status"], rows))
    hist = follow_count_histogram(matrix)
    files.append(_write_csv(out / "follow_count_histogram.csv",
                            ["candidates_followed", "users", "fraction"],
                            ([i + 1, int(h), _f6(h / matrix.n_users)] for i, h in enumerate(hist))))
    pc = partisan_counts(matrix)
    files.append(_write_csv(out / "partisan_classes.csv", ["class", "users", "fraction"],
                            ([cls.value, pc[cls], _f6(pc[cls] / matrix.n_users)]
                             for cls in PartisanClass)))
    files.append(_write_csv(out / "user_index.csv", ["index", "user_id"],
                            enumerate(matrix.user_ids)))
    _manifest(args, "summarize", {"edges": args.edges, "roster": args.roster}, {}, files, out)
    return EXIT_OK


def cmd_shares(args) -> int:
    matrix = _load_matrix(args)
    top_k = _csv_list(args.top_k)
    for cid in top_k:
        matrix.roster.index_of(cid)
    report = weighted_shares(matrix, top_k)
    out = _outdir(args)
    rows = [[cid, _f6(r), _f6(w)] for cid, r, w in
            zip(report.candidate_ids, report.raw_share, report.weighted_share)]
    if top_k:
        rows.append(["__top_k__", _f6(report.top_k_raw), _f6(report.top_k_weighted)])
    files = [_write_csv(out / "shares.csv", ["candidate_id", "raw_share", "weighted_share"], rows)]
    _manifest(args, "shares", {"edges": args.edges, "roster": args.roster},
              {"top_k": top_k}, files, out)
    return EXIT_OK


def cmd_patterns(args) -> int:
    if not 0 < args.min_support <= 1:
        raise UsageError("--min-support must lie in (0, 1]")
    if args.max_size < 1 or args.top_n < 1:
        raise UsageError("--max-size and --top-n must be >= 1")
    matrix = _load_matrix(args)
    out = _outdir(args)
    items = frequent_itemsets(matrix, args.min_support, args.max_size)
    files = [_write_csv(out / "itemsets.csv", ["rank", "itemset", "support"],
                        ([r.rank, r.label, _f6(r.support)] for r in items))]
    exact = exclusive_pattern_shares(matrix, args.top_n)
    files.append(_write_csv(out / "exclusive_patterns.csv", ["rank", "itemset", "support"],
                            ([r.rank, r.label, _f6(r.support)] for r in exact)))
    _manifest(args, "patterns", {"edges": args.edges, "roster": args.roster},
              {"min_support": args.min_support, "max_size": args.max_size, "top_n": args.top_n},
              files, out)
    return EXIT_OK


def cmd_correlations(args) -> int:
    matrix = _load_matrix(args)
    if matrix.n_users < 2:
        raise InputError("correlations need at least two followers")
    phi = pairwise_phi(matrix)
    out = _outdir(args)
    ids = phi.candidate_ids
    rows = []
    for i, cid in enumerate(ids):
        rows.append([cid] + [("" if phi.get(i, j) is None else _f6(phi.get(i, j)))
                             for j in range(len(ids))])
    files = [_write_csv(out / "correlations.csv", ["candidate_id", *ids], rows)]
    _manifest(args, "correlations", {"edges": args.edges, "roster": args.roster}, {}, files, out)
    return EXIT_OK


def cmd_label(args) -> int:
    if not Path(args.names).exists():
        raise InputError(f"name list not found: {args.names}")
    names = load_name_list(args.names)
    profiles = read_profiles(args.profiles)
    predictor = None
    inputs = {"profiles": args.profiles, "names": args.names}
    if args.image_stub:
        predictor = TableImagePredictor.from_csv(args.image_stub, args.min_confidence)
        inputs["image_stub"] = args.image_stub
    keywords = _csv_list(args.journalist_keywords) or sorted(JOURNALIST_KEYWORDS)
    labels = {p.user_id: classify_gender(p, names, predictor) for p in profiles}
    gross = [probe_channels(p, names, predictor) for p in profiles]
    cov = channel_coverage([labels[p.user_id] for p in profiles], gross)
    out = _outdir(args)
    rows = []
    for p in profiles:
        lab = labels[p.user_id]
        rows.append([p.user_id, "" if lab is None else lab.gender.value,
                     "" if lab is None else lab.channel.value,
                     int(detect_journalist(p.description, keywords))])
    files = [_write_csv(out / "labels.csv", ["user_id", "gender", "channel", "journalist"], rows)]
    cov_rows = [[ch.value, cov.identified[ch], _f6(cov.net_fraction(ch))] for ch in CHANNEL_PRIORITY]
    cov_rows.append(["Total", cov.labeled, _f6(cov.total_fraction)])
    files.append(_write_csv(out / "coverage.csv",
                            ["channel", "identified", "net_contribution_fraction"], cov_rows))
    celebrities = _csv_list(args.celebrities)
    if args.edges or args.roster:
        if not (args.edges and args.roster):
            raise UsageError("--edges and --roster must be given together")
        matrix = _load_matrix(args)
        header, reg = regression_rows(matrix, profiles, labels, celebrities, keywords)
        path = out / "regression.csv"
        write_regression_table(path, header, reg)
        files.append(path)
        inputs.update(edges=args.edges, roster=args.roster)
    _manifest(args, "label", inputs,
              {"journalist_keywords": keywords, "min_confidence": args.min_confidence,
               "celebrities": celebrities}, files, out)
    return EXIT_OK


_NON_COVARIATES = {"user_id", "n_candidates", "partisan"}


def _design_spec(args, table) -> DesignSpec:
    if args.covariates:
        covs = _csv_list(args.covariates)
    else:
        covs = [c for c in table if c != args.outcome and c not in _NON_COVARIATES
                and c != args.year_column and not c.startswith("follows_")]
    scale = None
    if args.scale is not None:
        scale = {}
        for item in _csv_list(args.scale):
            key, _, val = item.partition("=")
            try:
                scale[key] = float(val)
            except ValueError:
                raise UsageError(f"bad --scale entry {item!r}") from None
    return default_spec(covs, args.year_column, scale)


def _apply_where(table, where):
    for cond in where or []:
        col, sep, val = cond.partition("=")
        if not sep:
            raise UsageError(f"--where expects COLUMN=VALUE, got {cond!r}")
        table = filter_table(table, col, val)
    return table


def cmd_fit(args) -> int:
    table = _apply_where(read_table(args.data), args.where)
    if args.outcome not in table:
        raise InputError(f"outcome column {args.outcome!r} not in data")
    spec = _design_spec(args, table).with_levels(table)
    X = spec.build(table)
    config = OptimizerConfig(max_iter=args.max_iter)
    raw = table[args.outcome]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SeparationWarning)
        if args.model == "nb":
            try:
                y = np.array([float(v) for v in raw])
            except ValueError:
                raise InputError("nb outcome must be numeric counts") from None
            fit = nb_fit(y, X, config)
            title = "Negative binomial regression"
        elif args.model == "mnl":
            try:
                classes = [PartisanClass.parse(v) for v in raw]
            except ValueError as exc:
                raise InputError(str(exc)) from None
            fit = mnl_fit(classes, X, config)
            title = "Multinomial logit (base: Independent)"
        else:
            try:
                y = np.array([float(v) for v in raw])
            except ValueError:
                raise InputError("logit outcome must be 0/1") from None
            fit = logit_fit(y, X, config)
            title = "Logistic regression"
    for w in caught:
        log.warning("%s", w.message)
    if not fit.converged:
        log.warning("optimizer did not converge: %s", fit.message)
    fit.design = spec
    out = _outdir(args)
    tag = args.tag or args.model
    json_path = out / f"fit_{tag}.json"
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(fit.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    txt_path = out / f"fit_{tag}.txt"
    txt_path.write_text(render_table(fit, title), encoding="utf-8")
    _manifest(args, f"fit_{tag}", {"data": args.data},
              {"model": args.model, "outcome": args.outcome, "design": spec.to_json(),
               "where": args.where or [], "max_iter": args.max_iter},
              [json_path, txt_path], out)
    return EXIT_OK


def cmd_effects(args) -> int:
    with open(args.fit, encoding="utf-8") as fh:
        fit = ModelFit.from_json(json.load(fh))
    if fit.model != "mnl":
        raise InputError("effects require a multinomial fit")
    if fit.design is None:
        raise InputError("fit file lacks a design specification")
    table = _apply_where(read_table(args.data), args.where)
    X = fit.design.build(table)
    p0, p1, delta = marginal_effect(fit, X, args.column)
    out = _outdir(args)
    rows = [[cls.value, f"{a:.15f}", f"{b:.15f}", f"{d:.15f}"]
            for cls, a, b, d in zip(PartisanClass, p0, p1, delta)]
    path = _write_csv(out / f"effects_{args.column}.csv",
                      ["class", "p_at_0", "p_at_1", "delta"], rows)
    _manifest(args, f"effects_{args.column}", {"fit": args.fit, "data": args.data},
              {"column": args.column, "where": args.where or []}, [path], out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    scenario = Scenario.load(args.scenario)
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    out = _outdir(args)
    files = simulate_population(scenario, out)
    _manifest(args, "simulate", {"scenario": args.scenario}, {}, list(files.values()), out,
              seed=scenario.seed)
    return EXIT_OK


def _manifest(args, name, inputs, config, files, out, seed=None):
    RunManifest(command=name, inputs=inputs, config=config, seed=seed,
                outputs=files).write(out / f"{name}_manifest.json")


# -- parser --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="followgraph",
        description="Follower-matrix statistics, weighted shares, follow patterns, "
                    "gender labeling and likelihood models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, graph=True):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        p.add_argument("--output-dir", default=".", help="directory for outputs (default: .)")
        if graph:
            p.add_argument("--edges", required=True, help="edge CSV (user_id,candidate_id)")
            p.add_argument("--roster", required=True,
                           help="roster CSV (candidate_id,display_name,party)")
        return p

    add("summarize", cmd_summarize,
        "follower counts, engagement buckets, follow-count histogram, partisan classes")
    p = add("shares", cmd_shares, "raw and reciprocal-weighted candidate shares")
    p.add_argument("--top-k", help="comma-separated candidate ids to aggregate")
    p = add("patterns", cmd_patterns, "frequent itemsets and exact follow-set frequencies")
    p.add_argument("--min-support", type=float, default=0.005)
    p.add_argument("--max-size", type=int, default=3)
    p.add_argument("--top-n", type=int, default=15)
    add("correlations", cmd_correlations, "pairwise Pearson correlation of follow indicators")

    p = add("label", cmd_label, "gender and journalist labeling with channel coverage",
            graph=False)
    p.add_argument("--profiles", required=True, help="profiles JSON-lines file")
    p.add_argument("--names", required=True, help="name list CSV (name,gender)")
    p.add_argument("--image-stub", help="image predictor table CSV (image_ref,gender,confidence)")
    p.add_argument("--min-confidence", type=float, default=0.0)
    p.add_argument("--journalist-keywords", help="comma-separated occupation keywords")
    p.add_argument("--edges", help="edge CSV; with --roster also writes regression.csv")
    p.add_argument("--roster", help="roster CSV")
    p.add_argument("--celebrities", help="comma-separated celebrity names to flag")

    p = add("fit", cmd_fit, "fit a negative binomial, multinomial or binary logit model",
            graph=False)
    p.add_argument("--model", required=True, choices=["nb", "mnl", "logit"])
    p.add_argument("--data", required=True, help="data CSV with outcome and covariates")
    p.add_argument("--outcome", required=True, help="outcome column")
    p.add_argument("--covariates", help="comma-separated covariate columns")
    p.add_argument("--year-column", help="column expanded into year fixed effects")
    p.add_argument("--scale", help="comma-separated COLUMN=DIVISOR (default tweets and "
                                   "social_capital divided by 1e6)")
    p.add_argument("--where", action="append", help="row filter COLUMN=VALUE (repeatable)")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tag", help="output file tag (default: model name)")

    p = add("effects", cmd_effects, "predicted-probability change for a binary covariate",
            graph=False)
    p.add_argument("--fit", required=True, help="multinomial fit JSON")
    p.add_argument("--data", required=True, help="data CSV the covariate means come from")
    p.add_argument("--column", required=True, help="binary covariate to flip 0 -> 1")
    p.add_argument("--where", action="append", help="row filter COLUMN=VALUE (repeatable)")

    p = add("simulate", cmd_simulate, "generate synthetic data from a scenario", graph=False)
    p.add_argument("--scenario", required=True, help="scenario JSON")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    return parser


def _check_threads():
    raw = os.environ.get("FOLLOWGRAPH_THREADS")
    if raw is None:
        return
    try:
        if int(raw) < 1:
            raise ValueError
    except ValueError:
        raise UsageError(f"FOLLOWGRAPH_THREADS must be a positive integer, got {raw!r}") from None


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        _check_threads()
        return args.func(args)
    except (InputError, ValueError) as exc:
        print(f"followgraph {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ModelError as exc:
        print(f"followgraph {args.command}: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except OSError as exc:
        print(f"followgraph {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
