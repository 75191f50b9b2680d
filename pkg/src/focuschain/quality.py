"""Human quality-assessment protocol: three-criterion judgments, majority
validity, and Fleiss' kappa over the correct/incorrect reduction.

Kappa follows the classic nominal-agreement formulation: with n raters, N
items, and per-item category counts n_ij,

    P_i  = (sum_j n_ij^2 - n) / (n (n - 1))        per-item agreement
    Pbar = mean_i P_i                              observed agreement
    Pe   = sum_j (sum_i n_ij / (N n))^2            chance agreement
    kappa = (Pbar - Pe) / (1 - Pe)

with the documented convention that a degenerate Pe = 1 (all ratings in one
category, which forces Pbar = 1) yields kappa = 1.0.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .core import canonical_json
from .errors import ValidationError
from .question import SynthesisRecord
from .rng import Rng


@dataclass(frozen=True)
class Judgment:
    record_id: str
    annotator_id: str
    final_answer_ok: bool
    sub_answers_ok: bool
    focus_ok: bool
    submitted_at: float

    def to_json(self) -> dict:
        return {
            "record_id": self.record_id,
            "annotator_id": self.annotator_id,
            "final_answer_ok": self.final_answer_ok,
            "sub_answers_ok": self.sub_answers_ok,
            "focus_ok": self.focus_ok,
            "submitted_at": self.submitted_at,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Judgment":
        return cls(
            record_id=data["record_id"],
            annotator_id=data["annotator_id"],
            final_answer_ok=bool(data["final_answer_ok"]),
            sub_answers_ok=bool(data["sub_answers_ok"]),
            focus_ok=bool(data["focus_ok"]),
            submitted_at=float(data.get("submitted_at", 0.0)),
        )


@dataclass
class AgreementReport:
    n_items: int
    n_raters: int
    validity_rate: float | None
    kappa: float | None
    correct_count_histogram: dict[int, int] = field(default_factory=dict)
    incomplete: int = 0

    def to_json(self) -> dict:
        return {
            "n_items": self.n_items,
            "n_raters": self.n_raters,
            "validity_rate": self.validity_rate,
            "kappa": self.kappa,
            "correct_count_histogram": {str(k): v for k, v in sorted(self.correct_count_histogram.items())},
            "incomplete": self.incomplete,
        }


def annotator_correct(judgment: Judgment) -> bool:
    """An instance counts as correct only when all three criteria hold."""
    return judgment.final_answer_ok and judgment.sub_answers_ok and judgment.focus_ok


def item_valid(correct_count: int, n_raters: int) -> bool:
    """Majority rule: valid when more than half the raters judged it correct."""
    if n_raters < 2:
        raise ValidationError("majority validity needs at least 2 raters")
    if not 0 <= correct_count <= n_raters:
        raise ValidationError(f"correct_count {correct_count} outside 0..{n_raters}")
    return correct_count >= n_raters // 2 + 1


def validity_rate(correct_count_histogram: dict[int, int], n_raters: int) -> float:
    """Fraction of items whose correct-count clears the majority threshold."""
    total = sum(correct_count_histogram.values())
    if total <= 0:
        raise ValidationError("validity_rate() needs at least one item")
    valid = sum(
        count for correct, count in correct_count_histogram.items() if item_valid(correct, n_raters)
    )
    return valid / total


def fleiss_kappa(per_item_category_counts: list[list[int]], n_raters: int) -> float:
    """Chance-corrected multi-rater agreement over nominal categories."""
    rows = per_item_category_counts
    if not rows:
        raise ValidationError("fleiss_kappa() needs at least one item")
    n_categories = len(rows[0])
    if n_categories < 2:
        raise ValidationError("fleiss_kappa() needs at least two categories")
    if n_raters < 2:
        raise ValidationError("fleiss_kappa() needs at least two raters")
    for i, row in enumerate(rows):
        if len(row) != n_categories:
            raise ValidationError(f"item {i} has {len(row)} categories, expected {n_categories}")
        if any(c < 0 for c in row):
            raise ValidationError(f"item {i} has a negative rating count")
        if sum(row) != n_raters:
            raise ValidationError(f"item {i} counts sum to {sum(row)}, expected {n_raters}")

    n_items = len(rows)
    p_observed = sum(
        (sum(c * c for c in row) - n_raters) / (n_raters * (n_raters - 1)) for row in rows
    ) / n_items
    totals = [sum(row[j] for row in rows) for j in range(n_categories)]
    proportions = [t / (n_items * n_raters) for t in totals]
    p_expected = sum(p * p for p in proportions)
    if p_expected == 1.0:
        # Every rating in one category: observed agreement is perfect too.
        return 1.0
    return (p_observed - p_expected) / (1.0 - p_expected)


def stratified_sample(records: list[SynthesisRecord], n: int, seed: int) -> list[SynthesisRecord]:
    """Sample n records stratified by path length, quotas by largest remainder."""
    if n < 0 or n > len(records):
        raise ValidationError(f"cannot sample {n} of {len(records)} records")
    if n == 0:
        return []

    strata: dict[int, list[SynthesisRecord]] = {}
    for record in sorted(records, key=lambda r: r.id):
        strata.setdefault(record.meta.path_length, []).append(record)

    total = len(records)
    quotas: dict[int, int] = {}
    remainders: list[tuple[float, int]] = []
    for key in sorted(strata):
        exact = n * len(strata[key]) / total
        quotas[key] = int(exact)
        remainders.append((exact - int(exact), key))
    shortfall = n - sum(quotas.values())
    # Largest fractional remainder first; stratum key breaks ties deterministically.
    remainders.sort(key=lambda rk: (-rk[0], rk[1]))
    for _, key in remainders[:shortfall]:
        quotas[key] += 1

    rng = Rng(seed)
    chosen: list[SynthesisRecord] = []
    for key in sorted(strata):
        members = strata[key]
        indices = list(range(len(members)))
        rng.shuffle(indices)
        chosen.extend(members[i] for i in sorted(indices[: quotas[key]]))
    return sorted(chosen, key=lambda r: r.id)


def effective_judgments(judgments: list[Judgment]) -> dict[tuple[str, str], Judgment]:
    """Latest judgment per (record, annotator); timestamp wins, then log order."""
    effective: dict[tuple[str, str], Judgment] = {}
    for judgment in judgments:
        key = (judgment.record_id, judgment.annotator_id)
        held = effective.get(key)
        if held is None or judgment.submitted_at >= held.submitted_at:
            effective[key] = judgment
    return effective


def agreement_report(
    judgments: list[Judgment], review_ids: list[str], n_raters: int
) -> AgreementReport:
    """Validity and kappa over review items judged by all raters."""
    effective = effective_judgments(judgments)
    by_record: dict[str, list[Judgment]] = {}
    for (record_id, _), judgment in effective.items():
        by_record.setdefault(record_id, []).append(judgment)

    histogram: dict[int, int] = {}
    rows: list[list[int]] = []
    incomplete = 0
    for record_id in review_ids:
        held = by_record.get(record_id, [])
        if len(held) < n_raters:
            incomplete += 1
            continue
        if len(held) > n_raters:
            # More annotators than the protocol expects: keep a deterministic
            # subset so per-item counts still sum to n_raters.
            held = sorted(held, key=lambda j: j.annotator_id)[:n_raters]
        correct = sum(1 for j in held if annotator_correct(j))
        histogram[correct] = histogram.get(correct, 0) + 1
        rows.append([correct, n_raters - correct])

    if not rows:
        raise ValidationError("no review item has judgments from every rater")
    return AgreementReport(
        n_items=len(rows),
        n_raters=n_raters,
        validity_rate=validity_rate(histogram, n_raters),
        kappa=fleiss_kappa(rows, n_raters),
        correct_count_histogram=histogram,
        incomplete=incomplete,
    )


class JudgmentStore:
    """Append-only JSONL log of judgments with a serialized writer."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._judgments: list[Judgment] = []
        if self.path.is_file():
            with self.path.open("r", encoding="utf-8") as handle:
                for line in handle:
                    if line.strip():
                        self._judgments.append(Judgment.from_json(json.loads(line)))

    def append(self, judgment: Judgment) -> None:
        with self._lock:
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(canonical_json(judgment.to_json()) + "\n")
            self._judgments.append(judgment)

    def submit(
        self, record_id: str, annotator_id: str, final_answer_ok: bool, sub_answers_ok: bool, focus_ok: bool
    ) -> Judgment:
        judgment = Judgment(
            record_id=record_id,
            annotator_id=annotator_id,
            final_answer_ok=final_answer_ok,
            sub_answers_ok=sub_answers_ok,
            focus_ok=focus_ok,
            submitted_at=time.time(),
        )
        self.append(judgment)
        return judgment

    def all(self) -> list[Judgment]:
        with self._lock:
            return list(self._judgments)
