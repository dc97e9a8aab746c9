"""Join follow behaviour with labeled profiles into a regression table."""

from __future__ import annotations

import csv
from collections.abc import Iterable, Mapping, Sequence

from .labeling import (
    JOURNALIST_KEYWORDS,
    Gender,
    GenderLabel,
    UserProfile,
    detect_journalist,
)
from .roster import FollowMatrix, partisan_classes

BASE_COLUMNS = ("user_id", "n_candidates", "partisan", "tweets", "social_capital",
                "journalist", "female", "start_year")


def regression_rows(matrix: FollowMatrix, profiles: Iterable[UserProfile],
                    labels: Mapping[str, GenderLabel | None],
                    celebrities: Sequence[str] = (),
                    journalist_keywords: Iterable[str] = JOURNALIST_KEYWORDS):
    """One row per profiled follower with a gender label (listwise deletion).

    Yields ``(header, rows)``; candidate follow flags appear as
    ``follows_<candidate_id>`` and celebrity flags as ``celeb_<name>``.
    """
    index = matrix.user_index()
    classes = partisan_classes(matrix)
    sizes = matrix.row_sizes()
    ids = matrix.roster.ids
    header = list(BASE_COLUMNS) + [f"follows_{c}" for c in ids] + [f"celeb_{c}" for c in celebrities]
    keywords = tuple(journalist_keywords)
    rows = []
    for p in profiles:
        i = index.get(p.user_id)
        label = labels.get(p.user_id)
        if i is None or label is None:
            continue
        follows = set(matrix.row(i))
        rows.append([
            p.user_id, int(sizes[i]), classes[i].value, p.tweets_posted, p.followers_count,
            int(detect_journalist(p.description, keywords)), int(label.gender is Gender.FEMALE),
            p.start_year,
            *[int(k in follows) for k in range(len(ids))],
            *[int(c in p.celebrities) for c in celebrities],
        ])
    return header, rows


def write_regression_table(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
