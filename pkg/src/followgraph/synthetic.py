"""Deterministic synthetic populations and model data with known ground truth.

A scenario is a JSON document; the same scenario and seed always produce
bit-identical data. Each section draws from its own Philox stream, so
adding or removing a section leaves the others unchanged.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .glm.design import DesignMatrix
from .labeling import (
    FEMALE_KEYWORDS,
    JOURNALIST_KEYWORDS,
    MALE_KEYWORDS,
    Channel,
    Gender,
    NameList,
    UserProfile,
    default_name_list,
    first_name_token,
)
from .roster import (
    Candidate,
    CandidateRoster,
    FollowMatrix,
    PartisanClass,
    Party,
    partisan_classes,
)
from .rng import Stream

_STREAMS = {"population": 1, "profiles": 2, "nb": 3, "mnl": 4, "logit": 5}

HANDLES = ("Patriot", "Voter", "Sunshine", "Anon", "Gamer", "Newsfan", "Traveler", "Dreamer")
SURNAMES = ("Smith", "Johnson", "Lee", "Garcia", "Brown", "Rodriguez", "Miller", "Davis")
NEUTRAL_DESCRIPTIONS = ("Sports fan", "Coffee lover", "Tweets are my own", "Living my best life",
                        "Music and movies", "Dog person", "Always learning", "")
_GENDERED_DESCRIPTIONS = {
    Gender.FEMALE: ("Proud mom of three", "Wife and mother", "Just a mama", "Loving wife"),
    Gender.MALE: ("Husband and father", "Proud papa", "Father of two", "Husband first"),
}


def allocate(fractions, n: int) -> list[int]:
    """Split n into integer counts by largest remainder; exact when f*n is integral."""
    raw = [f * n for f in fractions]
    base = []
    for r in raw:
        near = round(r)
        base.append(int(near) if abs(r - near) < 1e-9 else math.floor(r))
    remainder = n - sum(base)
    if remainder < 0:
        raise InputError("fractions exceed 1")
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:remainder]:
        base[i] += 1
    return base


# -- scenario --------------------------------------------------------------


@dataclass(frozen=True)
class Covariate:
    name: str
    dist: str = "normal"
    params: dict = field(default_factory=dict)

    def draw(self, stream: Stream, n: int) -> np.ndarray:
        p = self.params
        if self.dist == "normal":
            return p.get("mean", 0.0) + p.get("sd", 1.0) * stream.normal(n)
        if self.dist == "bernoulli":
            return stream.bernoulli(p.get("p", 0.5), n).astype(np.float64)
        if self.dist == "uniform":
            lo, hi = p.get("low", 0.0), p.get("high", 1.0)
            return lo + (hi - lo) * stream.uniform(n)
        raise InputError(f"unknown covariate distribution {self.dist!r}")

    @classmethod
    def from_json(cls, obj) -> "Covariate":
        obj = dict(obj)
        return cls(obj.pop("name"), obj.pop("dist", "normal"), obj)

    def to_json(self) -> dict:
        return {"name": self.name, "dist": self.dist, **self.params}


def _covariates(spec, n_slopes):
    covs = [Covariate.from_json(c) for c in spec.get("covariates", [])]
    if not covs:
        covs = [Covariate(f"x{i + 1}") for i in range(n_slopes)]
    if len(covs) != n_slopes:
        raise InputError(f"{n_slopes} slope coefficients but {len(covs)} covariates")
    return covs


@dataclass(frozen=True)
class Scenario:
    seed: int
    population: dict | None = None
    profiles: dict | None = None
    nb: dict | None = None
    mnl: dict | None = None
    logit: dict | None = None

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InputError("seed must be a 64-bit unsigned integer")
        pop = self.population
        if pop is not None:
            if int(pop.get("n_users", 0)) < 1:
                raise InputError("population size must be >= 1")
            mix = pop.get("partisan_mix", {})
            if mix and abs(sum(mix.values()) - 1.0) > 1e-12:
                raise InputError("partisan_mix fractions must sum to 1")
            if sum(p["fraction"] for p in pop.get("patterns", [])) > 1 + 1e-12:
                raise InputError("planted pattern fractions exceed 1")
        prof = self.profiles
        if prof is not None and sum(prof.get("channel_mix", {}).values()) > 1 + 1e-12:
            raise InputError("channel_mix fractions exceed 1")
        if self.nb is not None and float(self.nb.get("alpha", 0)) <= 0:
            raise InputError("negative binomial alpha must be positive")
        for name in ("nb", "mnl", "logit"):
            sec = getattr(self, name)
            if sec is not None and int(sec.get("n", 0)) < 1:
                raise InputError(f"{name}: n must be >= 1")

    @classmethod
    def from_json(cls, obj) -> "Scenario":
        unknown = set(obj) - {"seed", "population", "profiles", "nb", "mnl", "logit"}
        if unknown:
            raise InputError(f"unknown scenario sections: {sorted(unknown)}")
        return cls(int(obj.get("seed", 0)), obj.get("population"), obj.get("profiles"),
                   obj.get("nb"), obj.get("mnl"), obj.get("logit"))

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path, encoding="utf-8") as fh:
            try:
                return cls.from_json(json.load(fh))
            except json.JSONDecodeError as exc:
                raise InputError(f"{path}: invalid scenario JSON: {exc}") from None

    def to_json(self) -> dict:
        out = {"seed": self.seed}
        for name in ("population", "profiles", "nb", "mnl", "logit"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        return out

    def with_seed(self, seed: int) -> "Scenario":
        return Scenario(seed, self.population, self.profiles, self.nb, self.mnl, self.logit)

    def stream(self, section: str) -> Stream:
        return Stream(self.seed, _STREAMS[section])


# -- regression data -----------------------------------------------------


def simulate_nb(scenario: Scenario) -> tuple[np.ndarray, DesignMatrix]:
    """Counts from a gamma-Poisson mixture: v ~ Gamma(1/alpha, alpha), y ~ Poisson(v*mu)."""
    spec = scenario.nb
    if spec is None:
        raise InputError("scenario has no nb section")
    s = scenario.stream("nb")
    n = int(spec["n"])
    beta = np.asarray(spec["beta"], dtype=np.float64)
    alpha = float(spec["alpha"])
    covs = _covariates(spec, beta.size - 1)
    Z = np.column_stack([c.draw(s, n) for c in covs]) if covs else np.empty((n, 0))
    X = DesignMatrix.from_array(Z, [c.name for c in covs])
    mu = np.exp(X.values @ beta)
    v = s.gamma(1.0 / alpha, alpha, n=n)
    y = s.poisson(v * mu)
    return y, X


def simulate_mnl(scenario: Scenario) -> tuple[list[PartisanClass], DesignMatrix]:
    spec = scenario.mnl
    if spec is None:
        raise InputError("scenario has no mnl section")
    s = scenario.stream("mnl")
    n = int(spec["n"])
    b1 = np.asarray(spec["beta_democrat"], dtype=np.float64)
    b3 = np.asarray(spec["beta_republican"], dtype=np.float64)
    if b1.shape != b3.shape:
        raise InputError("beta_democrat and beta_republican differ in length")
    covs = _covariates(spec, b1.size - 1)
    Z = np.column_stack([c.draw(s, n) for c in covs]) if covs else np.empty((n, 0))
    X = DesignMatrix.from_array(Z, [c.name for c in covs])
    U = np.column_stack([X.values @ b1, np.zeros(n), X.values @ b3])
    U -= U.max(axis=1, keepdims=True)
    P = np.exp(U)
    P /= P.sum(axis=1, keepdims=True)
    u = s.uniform(n)
    idx = np.minimum((u[:, None] >= np.cumsum(P, axis=1)[:, :2]).sum(axis=1), 2)
    order = (PartisanClass.DEMOCRAT, PartisanClass.INDEPENDENT, PartisanClass.REPUBLICAN)
    return [order[i] for i in idx], X


def simulate_logit(scenario: Scenario) -> tuple[np.ndarray, DesignMatrix]:
    spec = scenario.logit
    if spec is None:
        raise InputError("scenario has no logit section")
    s = scenario.stream("logit")
    n = int(spec["n"])
    beta = np.asarray(spec["beta"], dtype=np.float64)
    covs = _covariates(spec, beta.size - 1)
    Z = np.column_stack([c.draw(s, n) for c in covs]) if covs else np.empty((n, 0))
    X = DesignMatrix.from_array(Z, [c.name for c in covs])
    p = 1.0 / (1.0 + np.exp(-(X.values @ beta)))
    y = (s.uniform(n) < p).astype(np.int64)
    return y, X


# -- follower population -------------------------------------------------


@dataclass
class Population:
    matrix: FollowMatrix
    truth: dict


def _roster_from(spec) -> tuple[CandidateRoster, np.ndarray, np.ndarray]:
    cands, pop, spread = [], [], []
    for c in spec["roster"]:
        cands.append(Candidate(c["candidate_id"], c.get("display_name", c["candidate_id"]),
                               Party.parse(c["party"])))
        pop.append(float(c.get("popularity", 1.0)))
        spread.append(float(c.get("spread", 0.5)))
    return CandidateRoster(tuple(cands)), np.array(pop), np.array(spread)


def _poisson_from_uniform(u, mean):
    k, p = 0, math.exp(-mean)
    cdf = p
    while u > cdf and p > 0:
        k += 1
        p *= mean / k
        cdf += p
    return k


def _weighted_pick(u, weights, allowed):
    w = np.where(allowed, weights, 0.0)
    total = w.sum()
    if total <= 0:
        return None
    cdf = np.cumsum(w) / total
    return int(min(np.searchsorted(cdf, u, side="right"), len(w) - 1))


def _draw_follow_set(s, cls, dem, popularity, spread):
    K = len(dem)
    u = s.uniform(K + 3)
    if cls is PartisanClass.DEMOCRAT:
        allowed = dem.copy()
    elif cls is PartisanClass.REPUBLICAN:
        allowed = ~dem
    else:
        allowed = np.ones(K, dtype=bool)
    anchor = _weighted_pick(u[0], popularity, allowed)
    if anchor is None:
        raise InputError(f"no candidates available for class {cls.value}")
    chosen = {anchor}
    extras = min(_poisson_from_uniform(u[1], spread[anchor]), int(allowed.sum()) - 1)
    for j in range(extras):
        free = allowed.copy()
        free[list(chosen)] = False
        pick = _weighted_pick(u[2 + j], popularity, free)
        if pick is None:
            break
        chosen.add(pick)
    if cls is PartisanClass.INDEPENDENT:
        has_dem = any(dem[c] for c in chosen)
        has_rep = any(not dem[c] for c in chosen)
        if not (has_dem and has_rep):
            other = ~dem if has_dem else dem.copy()
            other[list(chosen)] = False
            pick = _weighted_pick(u[K + 2], popularity, other)
            if pick is None:
                raise InputError("independent followers need candidates from both parties")
            chosen.add(pick)
    return tuple(sorted(chosen))


def simulate_matrix(scenario: Scenario) -> Population:
    spec = scenario.population
    if spec is None:
        raise InputError("scenario has no population section")
    s = scenario.stream("population")
    roster, popularity, spread = _roster_from(spec)
    n = int(spec["n_users"])
    dem = roster.party_mask(Party.DEMOCRAT)

    planted = []
    for p in spec.get("patterns", []):
        cols = tuple(sorted(roster.index_of(c) for c in p["candidates"]))
        if not cols:
            raise InputError("planted pattern must name at least one candidate")
        planted.append(cols)
    if len(set(planted)) != len(planted):
        raise InputError("planted patterns must be distinct")
    planted_counts = []
    if planted:
        fracs = [p["fraction"] for p in spec["patterns"]]
        # The trailing slot absorbs the background share.
        planted_counts = allocate(fracs + [max(0.0, 1.0 - sum(fracs))], n)[:-1]
    rows: list[tuple[int, ...]] = []
    for cols, count in zip(planted, planted_counts):
        rows.extend([cols] * count)

    n_background = n - len(rows)
    mix = spec.get("partisan_mix") or {"Democrat": 0.5, "Republican": 0.5, "Independent": 0.0}
    classes = [PartisanClass.parse(k) for k in mix]
    class_counts = allocate(list(mix.values()), n_background)
    planted_set = set(planted)
    for cls, count in zip(classes, class_counts):
        for _ in range(count):
            for _attempt in range(1000):
                row = _draw_follow_set(s, cls, dem, popularity, spread)
                if row not in planted_set:
                    break
            else:
                raise InputError(f"cannot draw a {cls.value} follow set outside the planted patterns")
            rows.append(row)

    perm = s.permutation(n)
    rows = [rows[i] for i in perm]
    width = len(str(n))
    user_ids = [f"u{i + 1:0{width}d}" for i in range(n)]
    matrix = FollowMatrix.from_rows(roster, rows, user_ids)
    ids = roster.ids
    observed = Counter(partisan_classes(matrix))
    truth = {
        "n_users": n,
        "planted_patterns": [{"candidates": sorted(ids[c] for c in cols), "count": count,
                              "fraction": count / n}
                             for cols, count in zip(planted, planted_counts)],
        "partisan_counts": {cls.value: observed.get(cls, 0) for cls in PartisanClass},
        "background_class_counts": {cls.value: c for cls, c in zip(classes, class_counts)},
    }
    return Population(matrix, truth)


# -- profiles --------------------------------------------------------------


@dataclass
class ProfileSet:
    profiles: list[UserProfile]
    names: NameList
    image_table: dict[str, tuple[Gender, float]]
    truth: dict


def simulate_profiles(scenario: Scenario, user_ids: list[str] | None = None) -> ProfileSet:
    spec = scenario.profiles
    if spec is None:
        raise InputError("scenario has no profiles section")
    s = scenario.stream("profiles")
    if "names" in spec:
        names = NameList([(n, g) for n, g in spec["names"]])
    else:
        names = default_name_list()
    for h in HANDLES:
        if h.casefold() in names:
            raise InputError(f"handle {h!r} collides with the name list")
    if user_ids is None:
        n = int(spec.get("n_users", 0))
        if n < 1:
            raise InputError("profiles need n_users or a population")
        width = len(str(n))
        user_ids = [f"u{i + 1:0{width}d}" for i in range(n)]
    n = len(user_ids)
    by_gender = {g: sorted(k for k in names if names[k] is g) for g in Gender}
    if not by_gender[Gender.FEMALE] or not by_gender[Gender.MALE]:
        raise InputError("name list needs names of both genders")

    mix = spec.get("channel_mix", {})
    channels = [Channel(c) for c in mix]
    fracs = list(mix.values())
    counts = allocate(fracs + [1.0 - sum(fracs)], n)
    segment = []
    for ch, c in zip(channels, counts):
        segment.extend([ch] * c)
    segment.extend([None] * counts[-1])
    segment = [segment[i] for i in s.permutation(n)]

    female = s.bernoulli(spec.get("female_fraction", 0.5), n)
    journalist = s.bernoulli(spec.get("journalist_fraction", 0.0), n)
    img_overlap = s.bernoulli(spec.get("image_overlap", 0.0), n)
    desc_overlap = s.bernoulli(spec.get("description_overlap", 0.0), n)
    u = s.uniform(6 * n).reshape(n, 6)
    tw = spec.get("tweets", {})
    fo = spec.get("followers", {})
    tweets = np.floor(np.exp(tw.get("log_mean", 6.0) + tw.get("log_sd", 1.5) * s.normal(n)))
    followers = np.floor(np.exp(fo.get("log_mean", 5.0) + fo.get("log_sd", 1.5) * s.normal(n)))
    y0, y1 = spec.get("start_years", [2006, 2016])
    years = s.integers(int(y0), int(y1) + 1, n)
    celebs = spec.get("celebrities", {})
    celeb_draws = {c: s.bernoulli(p, n) for c, p in celebs.items()}
    journalist_words = sorted(JOURNALIST_KEYWORDS)

    profiles, image_table = [], {}
    net = Counter()
    for i, uid in enumerate(user_ids):
        g = Gender.FEMALE if female[i] else Gender.MALE
        ch = segment[i]
        pick = lambda seq, v: seq[min(int(v * len(seq)), len(seq) - 1)]  # noqa: E731
        surname = pick(SURNAMES, u[i, 1])
        handle = f"{pick(HANDLES, u[i, 0])}_{1000 + int(u[i, 2] * 9000)}"
        name_hit = ch is Channel.FIRST_NAME
        display = f"{pick(by_gender[g], u[i, 0]).capitalize()} {surname}" if name_hit else handle
        image_ref = None
        if ch is Channel.PROFILE_IMAGE or (name_hit and img_overlap[i]):
            image_ref = f"img_{uid}"
            image_table[image_ref] = (g, 0.9)
        elif ch is not None and u[i, 3] < 0.5:
            image_ref = f"noface_{uid}"  # present but unrecognised by the predictor
        gendered = ch is Channel.SELF_DESCRIPTION or (ch is not None and desc_overlap[i])
        description = (pick(_GENDERED_DESCRIPTIONS[g], u[i, 4]) if gendered
                       else pick(NEUTRAL_DESCRIPTIONS, u[i, 4]))
        if journalist[i]:
            word = pick(journalist_words, u[i, 5])
            description = f"{description}. Political {word}" if description else f"Political {word}"
        if first_name_token(display) in names and not name_hit:
            raise InputError(f"generated handle {display!r} matches the name list")
        profiles.append(UserProfile(
            user_id=uid, display_name=display, description=description,
            profile_image_ref=image_ref, tweets_posted=int(tweets[i]),
            followers_count=int(followers[i]), start_year=int(years[i]),
            celebrities=tuple(c for c in celebs if celeb_draws[c][i]),
        ))
        if ch is not None:
            net[ch] += 1
    assert not (set(FEMALE_KEYWORDS | MALE_KEYWORDS) & {w.casefold() for d in NEUTRAL_DESCRIPTIONS
                                                       for w in d.split()})
    truth = {
        "n_users": n,
        "net_counts": {ch.value: net.get(ch, 0) for ch in Channel},
        "labeled": sum(net.values()),
        "female": int(female.sum()),
        "journalists": int(journalist.sum()),
    }
    return ProfileSet(profiles, names, image_table, truth)


# -- file emission -------------------------------------------------------


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x) -> str:
    return repr(float(x))


def write_design_data(path, outcome_name, outcome, X: DesignMatrix) -> None:
    cols = [i for i, c in enumerate(X.columns) if c != "const"]
    rows = ([str(o)] + [_fmt(X.values[r, i]) for i in cols] for r, o in enumerate(outcome))
    _write_csv(path, [outcome_name] + [X.columns[i] for i in cols], rows)


def simulate_population(scenario: Scenario, output_dir) -> dict[str, Path]:
    """Write every section of a scenario as data files; returns role -> path."""
    from .labeling import write_profiles
    from .roster import write_edges, write_roster

    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, Path] = {}
    truth: dict = {"seed": scenario.seed}
    user_ids = None
    if scenario.population is not None:
        pop = simulate_matrix(scenario)
        files["roster"] = out / "roster.csv"
        files["edges"] = out / "edges.csv"
        write_roster(pop.matrix.roster, files["roster"])
        write_edges(pop.matrix, files["edges"])
        truth["population"] = pop.truth
        user_ids = pop.matrix.user_ids
    if scenario.profiles is not None:
        prof = simulate_profiles(scenario, user_ids)
        files["profiles"] = out / "profiles.jsonl"
        files["names"] = out / "names.csv"
        files["image_stub"] = out / "image_stub.csv"
        write_profiles(prof.profiles, files["profiles"])
        _write_csv(files["names"], ["name", "gender"],
                   ([n, prof.names[n].value] for n in sorted(prof.names)))
        _write_csv(files["image_stub"], ["image_ref", "gender", "confidence"],
                   ([ref, g.value, _fmt(c)] for ref, (g, c) in sorted(prof.image_table.items())))
        truth["profiles"] = prof.truth
    if scenario.nb is not None:
        y, X = simulate_nb(scenario)
        files["nb_data"] = out / "nb_data.csv"
        write_design_data(files["nb_data"], "y", y, X)
        truth["nb"] = {"beta": list(scenario.nb["beta"]), "alpha": scenario.nb["alpha"]}
    if scenario.mnl is not None:
        classes, X = simulate_mnl(scenario)
        files["mnl_data"] = out / "mnl_data.csv"
        write_design_data(files["mnl_data"], "partisan", [c.value for c in classes], X)
        truth["mnl"] = {"beta_democrat": list(scenario.mnl["beta_democrat"]),
                        "beta_republican": list(scenario.mnl["beta_republican"])}
    if scenario.logit is not None:
        y, X = simulate_logit(scenario)
        files["logit_data"] = out / "logit_data.csv"
        write_design_data(files["logit_data"], "y", y, X)
        truth["logit"] = {"beta": list(scenario.logit["beta"])}
    files["truth"] = out / "truth.json"
    with open(files["truth"], "w", encoding="utf-8", newline="\n") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return files
