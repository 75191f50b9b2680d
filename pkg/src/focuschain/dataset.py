"""Dataset persistence and tooling: JSONL shards of synthesis records,
validation on read, corpus statistics, seeded subset sampling, and export to
a conversation-style training format."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .core import QuarantineEntry, canonical_json
from .errors import ValidationError
from .question import SynthesisRecord, validate_record
from .rng import Rng


@dataclass
class CorpusStats:
    record_count: int = 0
    image_count_histogram: dict[int, int] = field(default_factory=dict)
    path_length_histogram: dict[int, int] = field(default_factory=dict)
    type_counts: dict[str, int] = field(default_factory=dict)
    share_2_to_5: float = 0.0

    def to_json(self) -> dict:
        return {
            "record_count": self.record_count,
            "image_count_histogram": {str(k): v for k, v in sorted(self.image_count_histogram.items())},
            "path_length_histogram": {str(k): v for k, v in sorted(self.path_length_histogram.items())},
            "type_counts": dict(sorted(self.type_counts.items())),
            "share_2_to_5": self.share_2_to_5,
        }


@dataclass(frozen=True)
class LineError:
    line: int
    error: str


def write_records(records: list[SynthesisRecord], path: str | Path) -> int:
    """Write one canonical-JSON record per line; atomic replace on success."""
    for record in records:
        validate_record(record)
    target = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=target.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            for record in records:
                handle.write(canonical_json(record.to_json()) + "\n")
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return len(records)


def read_records(path: str | Path) -> tuple[list[SynthesisRecord], list[LineError]]:
    """Read a shard line by line; invalid lines are reported, not fatal."""
    source = Path(path)
    if not source.is_file():
        raise FileNotFoundError(f"dataset file {source} does not exist")
    records: list[SynthesisRecord] = []
    errors: list[LineError] = []
    with source.open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = SynthesisRecord.from_json(json.loads(line))
                validate_record(record)
                records.append(record)
            except Exception as exc:
                errors.append(LineError(line=line_no, error=str(exc)))
    return records, errors


def stats(records: list[SynthesisRecord]) -> CorpusStats:
    result = CorpusStats(record_count=len(records))
    for record in records:
        k = len(record.images)
        result.image_count_histogram[k] = result.image_count_histogram.get(k, 0) + 1
        pl = record.meta.path_length
        result.path_length_histogram[pl] = result.path_length_histogram.get(pl, 0) + 1
        result.type_counts[record.question_type] = result.type_counts.get(record.question_type, 0) + 1
    if records:
        in_band = sum(result.image_count_histogram.get(k, 0) for k in (2, 3, 4, 5))
        result.share_2_to_5 = in_band / len(records)
    return result


def sample_subset(records: list[SynthesisRecord], n: int, seed: int) -> list[SynthesisRecord]:
    """Uniform sample without replacement, output sorted by record id.

    Records are ordered by id before drawing, so the result depends only on
    the corpus content and the seed, not on shard line order.
    """
    if n < 0 or n > len(records):
        raise ValidationError(f"cannot sample {n} of {len(records)} records")
    ordered = sorted(records, key=lambda r: r.id)
    indices = list(range(len(ordered)))
    Rng(seed).shuffle(indices)
    chosen = sorted(indices[:n])
    return [ordered[i] for i in chosen]


def export_conversations(records: list[SynthesisRecord]) -> list[dict]:
    """Render records as single-turn chat documents with <image> placeholders."""
    documents = []
    for record in records:
        validate_record(record)
        user_lines = ["<image>"] * len(record.images)
        user_lines.append(record.question)
        if record.question_type == "single_choice" and record.choices:
            for pos, choice in enumerate(record.choices):
                user_lines.append(f"{chr(ord('A') + pos)}. {choice}")
        blocks = []
        for pos, step in enumerate(record.steps, start=1):
            focus_text = ", ".join(str(i) for i in step.focus)
            blocks.append(
                f"Sub-question {pos}: {step.sub_question}\nFocus: images {focus_text}\nAnswer: {step.answer}"
            )
        blocks.append(f"Final answer: {record.final_answer}")
        documents.append(
            {
                "id": record.id,
                "images": [ref.path for ref in record.images],
                "messages": [
                    {"role": "user", "content": "\n".join(user_lines)},
                    {"role": "assistant", "content": "\n\n".join(blocks)},
                ],
            }
        )
    return documents


def write_jsonl(rows: list[dict], path: str | Path) -> int:
    """Plain JSONL writer for auxiliary artifacts (pairs, quarantine, exports)."""
    target = Path(path)
    with target.open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(canonical_json(row) + "\n")
    return len(rows)


def append_quarantine(entries: list[QuarantineEntry], path: str | Path) -> None:
    if not entries:
        return
    with Path(path).open("a", encoding="utf-8") as handle:
        for entry in entries:
            handle.write(canonical_json(entry.to_json()) + "\n")
