"""Gender labeling from first names, profile images and self-descriptions.

Channels are tried in strict priority order and the first one that fires
wins: first name, then profile image, then description keywords.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import re
from collections.abc import Iterable, Mapping
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Protocol

from .errors import ParseError

log = logging.getLogger(__name__)

MALE_KEYWORDS = frozenset({"papa", "father", "husband"})
FEMALE_KEYWORDS = frozenset({"mama", "mom", "mother", "wife"})
JOURNALIST_KEYWORDS = frozenset(
    {"journalist", "reporter", "correspondent", "editor", "anchor", "columnist"})

_WORD = re.compile(r"[^\W\d_]+", re.UNICODE)


class Gender(str, enum.Enum):
    FEMALE = "F"
    MALE = "M"

    @classmethod
    def parse(cls, text: str) -> "Gender":
        key = text.strip().upper()
        if key in ("F", "FEMALE"):
            return cls.FEMALE
        if key in ("M", "MALE"):
            return cls.MALE
        raise ValueError(f"unknown gender {text!r}")


class Channel(str, enum.Enum):
    FIRST_NAME = "FirstName"
    PROFILE_IMAGE = "ProfileImage"
    SELF_DESCRIPTION = "SelfDescription"


CHANNEL_PRIORITY = (Channel.FIRST_NAME, Channel.PROFILE_IMAGE, Channel.SELF_DESCRIPTION)


@dataclass(frozen=True)
class GenderLabel:
    gender: Gender
    channel: Channel


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    display_name: str = ""
    description: str = ""
    profile_image_ref: str | None = None
    tweets_posted: int = 0
    followers_count: int = 0
    start_year: int = 2006
    celebrities: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.tweets_posted < 0 or self.followers_count < 0:
            raise ValueError(f"user {self.user_id}: counts must be non-negative")
        if self.start_year < 2006:
            raise ValueError(f"user {self.user_id}: start_year {self.start_year} predates Twitter")

    def to_json(self) -> dict:
        out = asdict(self)
        out["celebrities"] = list(self.celebrities)
        if self.profile_image_ref is None:
            del out["profile_image_ref"]
        if not self.celebrities:
            del out["celebrities"]
        return out


def read_profiles(path) -> list[UserProfile]:
    path = Path(path)
    profiles = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                profiles.append(UserProfile(
                    user_id=str(obj["user_id"]),
                    display_name=obj.get("display_name", "") or "",
                    description=obj.get("description", "") or "",
                    profile_image_ref=obj.get("profile_image_ref"),
                    tweets_posted=int(obj.get("tweets_posted", 0)),
                    followers_count=int(obj.get("followers_count", 0)),
                    start_year=int(obj.get("start_year", 2006)),
                    celebrities=tuple(obj.get("celebrities", ())),
                ))
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(f"bad profile record: {exc}", path=path, line=line_no) from None
    return profiles


def write_profiles(profiles: Iterable[UserProfile], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in profiles:
            fh.write(json.dumps(p.to_json(), sort_keys=True) + "\n")


class NameList(Mapping):
    """Case-insensitive first name -> gender lookup."""

    def __init__(self, entries: Mapping[str, Gender] | Iterable[tuple[str, Gender | str]]):
        items = entries.items() if isinstance(entries, Mapping) else entries
        self._map: dict[str, Gender] = {}
        for name, gender in items:
            key = name.strip().casefold()
            g = gender if isinstance(gender, Gender) else Gender.parse(gender)
            if key in self._map and self._map[key] is not g:
                raise ValueError(f"name {name!r} listed as both genders")
            self._map[key] = g

    def __getitem__(self, name: str) -> Gender:
        return self._map[name.casefold()]

    def __iter__(self):
        return iter(self._map)

    def __len__(self):
        return len(self._map)

    def __contains__(self, name):
        return isinstance(name, str) and name.casefold() in self._map


def load_name_list(path) -> NameList:
    path = Path(path)
    entries = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["name", "gender"]:
            raise ParseError("expected header name,gender", path=path, line=1)
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise ParseError("expected 2 fields", path=path, line=reader.line_num)
            try:
                entries.append((row[0], Gender.parse(row[1])))
            except ValueError as exc:
                raise ParseError(str(exc), path=path, line=reader.line_num) from None
    try:
        return NameList(entries)
    except ValueError as exc:
        raise ParseError(str(exc), path=path) from None


def default_name_list() -> NameList:
    """The 40-name sample list bundled with the package."""
    return load_name_list(Path(__file__).parent / "data" / "names_sample.csv")


class ImagePredictor(Protocol):
    def predict(self, image_ref: str) -> tuple[Gender, float] | None: ...


class TableImagePredictor:
    """Deterministic image predictor backed by a lookup table.

    Stands in for a trained image classifier: unknown references yield no
    prediction, as does a confidence below ``min_confidence``.
    """

    def __init__(self, table: Mapping[str, tuple[Gender, float]], min_confidence: float = 0.0):
        self.table = dict(table)
        self.min_confidence = min_confidence

    @classmethod
    def from_csv(cls, path, min_confidence: float = 0.0) -> "TableImagePredictor":
        path = Path(path)
        table = {}
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"image_ref", "gender"} <= set(reader.fieldnames):
                raise ParseError("expected columns image_ref,gender[,confidence]", path=path, line=1)
            for row in reader:
                try:
                    conf = float(row.get("confidence") or 1.0)
                    table[row["image_ref"]] = (Gender.parse(row["gender"]), conf)
                except ValueError as exc:
                    raise ParseError(str(exc), path=path, line=reader.line_num) from None
        return cls(table, min_confidence)

    def predict(self, image_ref):
        hit = self.table.get(image_ref)
        if hit is None or hit[1] < self.min_confidence:
            return None
        return hit


def _words(text: str) -> list[str]:
    return [w.casefold() for w in _WORD.findall(text or "")]


def first_name_token(display_name: str) -> str:
    tokens = (display_name or "").split()
    if not tokens:
        return ""
    token = tokens[0]
    start, end = 0, len(token)
    while start < end and not token[start].isalpha():
        start += 1
    while end > start and not token[end - 1].isalpha():
        end -= 1
    return token[start:end].casefold()


def label_by_name(display_name: str, name_list: NameList) -> Gender | None:
    token = first_name_token(display_name)
    if not token or token not in name_list:
        return None
    return name_list[token]


def label_by_description(description: str) -> Gender | None:
    words = set(_words(description))
    male = bool(words & MALE_KEYWORDS)
    female = bool(words & FEMALE_KEYWORDS)
    if male and not female:
        return Gender.MALE
    if female and not male:
        return Gender.FEMALE
    return None


def label_by_image(profile: UserProfile, predictor: ImagePredictor | None) -> Gender | None:
    if predictor is None or not profile.profile_image_ref:
        return None
    try:
        hit = predictor.predict(profile.profile_image_ref)
    except Exception:
        log.warning("image predictor failed for user %s; treating as no prediction",
                    profile.user_id, exc_info=True)
        return None
    return None if hit is None else hit[0]


def classify_gender(profile: UserProfile, name_list: NameList,
                    image_predictor: ImagePredictor | None = None) -> GenderLabel | None:
    gender = label_by_name(profile.display_name, name_list)
    if gender is not None:
        return GenderLabel(gender, Channel.FIRST_NAME)
    gender = label_by_image(profile, image_predictor)
    if gender is not None:
        return GenderLabel(gender, Channel.PROFILE_IMAGE)
    gender = label_by_description(profile.description)
    if gender is not None:
        return GenderLabel(gender, Channel.SELF_DESCRIPTION)
    return None


def probe_channels(profile: UserProfile, name_list: NameList,
                   image_predictor: ImagePredictor | None = None) -> dict[Channel, Gender | None]:
    """Evaluate every channel regardless of priority (gross identification)."""
    return {
        Channel.FIRST_NAME: label_by_name(profile.display_name, name_list),
        Channel.PROFILE_IMAGE: label_by_image(profile, image_predictor),
        Channel.SELF_DESCRIPTION: label_by_description(profile.description),
    }


def detect_journalist(description: str, keywords: Iterable[str] = JOURNALIST_KEYWORDS) -> bool:
    keys = {k.casefold() for k in keywords}
    return any(w in keys for w in _words(description))


@dataclass(frozen=True)
class CoverageReport:
    n_users: int
    net: dict[Channel, int]
    identified: dict[Channel, int]

    @property
    def labeled(self) -> int:
        return sum(self.net.values())

    def net_fraction(self, channel: Channel) -> float:
        return self.net[channel] / self.n_users if self.n_users else 0.0

    @property
    def total_fraction(self) -> float:
        return self.labeled / self.n_users if self.n_users else 0.0


def channel_coverage(labels: Iterable[GenderLabel | None],
                     gross: Iterable[Mapping[Channel, Gender | None]] | None = None) -> CoverageReport:
    """Tally the net contribution of each channel.

    ``gross`` optionally supplies per-user results of every channel (see
    :func:`probe_channels`); without it the identified counts equal the net
    counts.
    """
    labels = list(labels)
    net = {ch: 0 for ch in CHANNEL_PRIORITY}
    for lab in labels:
        if lab is not None:
            net[lab.channel] += 1
    if gross is None:
        identified = dict(net)
    else:
        identified = {ch: 0 for ch in CHANNEL_PRIORITY}
        for probe in gross:
            for ch, g in probe.items():
                if g is not None:
                    identified[ch] += 1
    return CoverageReport(len(labels), net, identified)
