"""Blind pairwise headline comparison: task export and vote aggregation."""

from __future__ import annotations

import csv
import json
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from headline_bench.corpus import Article

MODEL, HUMAN, DRAW = "MODEL", "HUMAN", "DRAW"
CHOICES = (MODEL, HUMAN, DRAW)
RULES = ("plurality", "threshold")


class VoteError(ValueError):
    pass


@dataclass(frozen=True)
class VoteRecord:
    item_id: str
    annotator_id: str
    choice: str

    def __post_init__(self):
        if self.choice not in CHOICES:
            raise VoteError(f"invalid choice {self.choice!r} for item {self.item_id}")


@dataclass
class EvalSummary:
    n_items: int
    model_win_rate: float
    draw_rate: float
    human_win_rate: float
    model_supermajority_rate: float
    human_supermajority_rate: float
    pooled_vote_rates: dict[str, float] = field(default_factory=dict)
    outcomes: dict[str, str] = field(default_factory=dict)
    excluded: dict[str, int] = field(default_factory=dict)
    rule: str = "plurality"

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False, indent=1)


def export_tasks(articles: Sequence[Article], model_headlines: Sequence[str], seed: int,
                 task_path: str | Path, key_path: str | Path) -> None:
    """Write the blinded task TSV and the private key mapping left position to origin."""
    if len(articles) != len(model_headlines):
        raise VoteError(f"alignment mismatch: {len(articles)} articles vs {len(model_headlines)} headlines")
    rng = np.random.default_rng(seed)
    model_left = rng.random(len(articles)) < 0.5
    with Path(task_path).open("w", encoding="utf-8", newline="") as tf, \
            Path(key_path).open("w", encoding="utf-8", newline="") as kf:
        tasks = csv.writer(tf, delimiter="\t", lineterminator="\n")
        keys = csv.writer(kf, delimiter="\t", lineterminator="\n")
        tasks.writerow(["item_id", "article_text", "headline_left", "headline_right"])
        keys.writerow(["item_id", "left_origin"])
        for art, gen, left_is_model in zip(articles, model_headlines, model_left):
            left, right = (gen, art.title) if left_is_model else (art.title, gen)
            tasks.writerow([art.id, art.text, left, right])
            keys.writerow([art.id, MODEL if left_is_model else HUMAN])


def read_key(path: str | Path) -> dict[str, str]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return {row["item_id"]: row["left_origin"] for row in csv.DictReader(fh, delimiter="\t")}


def read_tasks(path: str | Path) -> list[dict[str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh, delimiter="\t"))


def unblind(tasks: Iterable[dict[str, str]], key: dict[str, str]) -> dict[str, dict[str, str]]:
    """Map item id to ``{"MODEL": headline, "HUMAN": headline}`` using the key file."""
    out = {}
    for row in tasks:
        left_origin = key[row["item_id"]]
        right_origin = HUMAN if left_origin == MODEL else MODEL
        out[row["item_id"]] = {left_origin: row["headline_left"], right_origin: row["headline_right"]}
    return out


def read_votes(path: str | Path) -> list[VoteRecord]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        missing = {"item_id", "annotator_id", "choice"} - set(reader.fieldnames or ())
        if missing:
            raise VoteError(f"{path}: missing columns {sorted(missing)}")
        return [VoteRecord(r["item_id"], r["annotator_id"], r["choice"].strip().upper()) for r in reader]


def item_outcome(counts: Counter, rule: str = "plurality", supermajority: int = 5) -> str:
    if rule == "threshold":
        for side in (MODEL, HUMAN):
            if counts[side] >= supermajority:
                return side
        return DRAW
    top = max(counts[c] for c in CHOICES)
    leaders = [c for c in CHOICES if counts[c] == top]
    return leaders[0] if len(leaders) == 1 else DRAW


def aggregate(votes: Iterable[VoteRecord], quorum: int = 9, supermajority: int = 5,
              rule: str = "plurality") -> EvalSummary:
    """Per-item outcomes and rates over items that received exactly ``quorum`` votes.

    Under ``plurality`` a tie for the most votes counts as a draw; the
    ``threshold`` rule awards an item to a side with at least
    ``supermajority`` votes and calls everything else a draw.
    """
    if rule not in RULES:
        raise VoteError(f"unknown rule {rule!r}")
    by_item: dict[str, Counter] = defaultdict(Counter)
    seen: set[tuple[str, str]] = set()
    dups = []
    for v in votes:
        key = (v.item_id, v.annotator_id)
        if key in seen:
            dups.append(key)
        seen.add(key)
        by_item[v.item_id][v.choice] += 1
    if dups:
        raise VoteError(f"duplicate (item, annotator) votes: {dups[:10]}")

    excluded = {item: sum(c.values()) for item, c in by_item.items() if sum(c.values()) != quorum}
    included = {item: c for item, c in by_item.items() if item not in excluded}
    outcomes = {item: item_outcome(c, rule, supermajority) for item, c in sorted(included.items())}
    n = len(outcomes)
    tally = Counter(outcomes.values())
    pooled = Counter()
    for c in included.values():
        pooled.update(c)
    n_votes = sum(pooled.values())

    def rate(k: int) -> float:
        return k / n if n else 0.0

    return EvalSummary(
        n_items=n,
        model_win_rate=rate(tally[MODEL]),
        draw_rate=rate(tally[DRAW]),
        human_win_rate=rate(tally[HUMAN]),
        model_supermajority_rate=rate(sum(c[MODEL] >= supermajority for c in included.values())),
        human_supermajority_rate=rate(sum(c[HUMAN] >= supermajority for c in included.values())),
        pooled_vote_rates={k: (pooled[k] / n_votes if n_votes else 0.0) for k in CHOICES},
        outcomes=outcomes,
        excluded=excluded,
        rule=rule,
    )
