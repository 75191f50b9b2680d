"""Stage 4 — composite question generation over a sampled reasoning path.

One model call per path receives every profile and relation annotation along
the path and returns up to three question candidates, each decomposed into
sub-question steps with explicit image focus sets. Candidates violating the
record schema are dropped with reasons; survivors become SynthesisRecords.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import prompts
from .backend import Backend, ModelRequest, TextPart, extract_json
from .core import ImageRef, RelationType, RelevanceGraph, canonical_json, content_id
from .errors import AllCandidatesInvalidError, ParseError, ValidationError
from .pathgen import ReasoningPath, validate_path

QUESTION_TYPES = ("open_ended", "single_choice")

MAX_CANDIDATES = 3


@dataclass(frozen=True)
class ChainStep:
    sub_question: str
    focus: tuple[int, ...]
    answer: str

    def to_json(self) -> dict:
        return {"sub_question": self.sub_question, "focus": list(self.focus), "answer": self.answer}

    @classmethod
    def from_json(cls, data: dict) -> "ChainStep":
        return cls(
            sub_question=data["sub_question"],
            focus=tuple(data["focus"]),
            answer=data["answer"],
        )


@dataclass(frozen=True)
class RecordMeta:
    source: str = "synthesis"
    path_length: int = 0
    seed: int | None = None

    def to_json(self) -> dict:
        return {"source": self.source, "path_length": self.path_length, "seed": self.seed}

    @classmethod
    def from_json(cls, data: dict) -> "RecordMeta":
        return cls(
            source=data.get("source", "synthesis"),
            path_length=data.get("path_length", 0),
            seed=data.get("seed"),
        )


@dataclass(frozen=True)
class SynthesisRecord:
    id: str
    images: tuple[ImageRef, ...]
    question: str
    question_type: str
    choices: tuple[str, ...] | None
    steps: tuple[ChainStep, ...]
    final_answer: str
    relations_used: tuple[tuple[tuple[int, int], RelationType], ...]
    meta: RecordMeta

    def body_json(self) -> dict:
        """Everything except the id; the id is the hash of this content."""
        return {
            "images": [ref.to_json() for ref in self.images],
            "question": self.question,
            "question_type": self.question_type,
            "choices": list(self.choices) if self.choices is not None else None,
            "steps": [s.to_json() for s in self.steps],
            "final_answer": self.final_answer,
            "relations_used": [
                {"pair": list(pair), "type": rel.value} for pair, rel in self.relations_used
            ],
            "meta": self.meta.to_json(),
        }

    def to_json(self) -> dict:
        data = self.body_json()
        data["id"] = self.id
        return data

    @classmethod
    def from_json(cls, data: dict) -> "SynthesisRecord":
        choices = data.get("choices")
        return cls(
            id=data["id"],
            images=tuple(ImageRef.from_json(ref) for ref in data["images"]),
            question=data["question"],
            question_type=data["question_type"],
            choices=tuple(choices) if choices is not None else None,
            steps=tuple(ChainStep.from_json(s) for s in data["steps"]),
            final_answer=data["final_answer"],
            relations_used=tuple(
                ((r["pair"][0], r["pair"][1]), RelationType(r["type"]))
                for r in data.get("relations_used", [])
            ),
            meta=RecordMeta.from_json(data.get("meta") or {}),
        )


def record_id(body: dict) -> str:
    return content_id(canonical_json(body).encode("utf-8"))


def finalize_record(**fields) -> SynthesisRecord:
    """Build a record whose id is the content hash of its canonical body."""
    record = SynthesisRecord(id="", **fields)
    record = SynthesisRecord(id=record_id(record.body_json()), **fields)
    validate_record(record)
    return record


def validate_record(record: SynthesisRecord) -> None:
    k = len(record.images)
    if k < 1:
        raise ValidationError("record needs at least one image")
    if not record.question.strip():
        raise ValidationError("record question must be non-empty")
    if record.question_type not in QUESTION_TYPES:
        raise ValidationError(f"unknown question_type {record.question_type!r}")
    if record.question_type == "single_choice":
        if not record.choices:
            raise ValidationError("single_choice record requires choices")
        if record.final_answer not in record.choices:
            raise ValidationError("single_choice final_answer must be one of the choices")
    elif record.choices is not None:
        raise ValidationError("open_ended record must not carry choices")
    if not record.steps:
        raise ValidationError("record needs at least one step")
    if not record.final_answer.strip():
        raise ValidationError("record final_answer must be non-empty")

    seen_focus: set[int] = set()
    for step in record.steps:
        if len(step.focus) not in (1, 2):
            raise ValidationError("each step must focus on one or two images")
        if not step.sub_question.strip():
            raise ValidationError("step sub_question must be non-empty")
        if not step.answer.strip():
            raise ValidationError("step answer must be non-empty")
        for idx in step.focus:
            if not isinstance(idx, int) or isinstance(idx, bool) or not 0 <= idx < k:
                raise ValidationError(f"focus index {idx!r} outside 0..{k - 1}")
            if idx in seen_focus:
                raise ValidationError(f"image {idx} focused more than once across steps")
            seen_focus.add(idx)

    for (i, j), _ in record.relations_used:
        if not (0 <= i < j < k):
            raise ValidationError(f"relations_used pair ({i}, {j}) invalid for {k} images")

    if not re.fullmatch(r"[0-9a-f]{64}", record.id):
        raise ValidationError("record id must be a 64-hex content hash")
    if record.id != record_id(record.body_json()):
        raise ValidationError("record id does not match its content hash")


def render_generation_prompt(path: ReasoningPath, graph: RelevanceGraph) -> ModelRequest:
    """Text-only request embedding the path's profiles and relation annotations."""
    validate_path(path, graph)
    blocks = []
    for local, node_idx in enumerate(path.node_indices):
        profile = graph.nodes[node_idx]
        names = ", ".join(obj.name for obj in profile.objects) or "none listed"
        blocks.append(
            f"Profile of image {local}:\n"
            f"  View: {profile.overall_view}\n"
            f"  Objects: {names}\n"
            f"  Description: {profile.narrative}"
        )
    for t, edge_idx in enumerate(path.edge_indices):
        edge = graph.edges[edge_idx]
        rel_lines = "\n".join(f"  {rel.value}: {desc}" for rel, desc in edge.relations)
        blocks.append(f"Relation between image {t} and image {t + 1}:\n{rel_lines}")
    text = (
        prompts.QUESTION_GENERATION_PROMPT
        + "\n\nImage information:\n\n"
        + "\n\n".join(blocks)
        + "\n\n"
        + prompts.GENERATION_JSON_INSTRUCTION
    )
    return ModelRequest(role_tag="question", parts=(TextPart(text),))


@dataclass(frozen=True)
class CandidateQuestion:
    question: str
    question_type: str
    choices: tuple[str, ...] | None
    steps: tuple[ChainStep, ...]
    final_answer: str


def _normalize_type(raw, has_choices: bool) -> str | None:
    if raw is None:
        return "single_choice" if has_choices else "open_ended"
    if not isinstance(raw, str):
        return None
    norm = raw.strip().lower().replace("-", "_").replace(" ", "_")
    if norm in ("single_choice", "multiple_choice", "choice"):
        return "single_choice"
    if norm in ("open_ended", "open", "free_form", "qa"):
        return "open_ended"
    return None


def _coerce_candidate(raw, k: int) -> CandidateQuestion:
    """Validate one raw candidate dict; raises ValidationError with the reason."""
    if not isinstance(raw, dict):
        raise ValidationError("candidate is not an object")
    question = raw.get("question")
    if not isinstance(question, str) or not question.strip():
        raise ValidationError("missing question text")

    raw_choices = raw.get("choices")
    has_choices = isinstance(raw_choices, list) and len(raw_choices) > 0
    qtype = _normalize_type(raw.get("type"), has_choices)
    if qtype is None:
        raise ValidationError(f"unknown question type {raw.get('type')!r}")

    final_answer = raw.get("final_answer")
    if not isinstance(final_answer, str) or not final_answer.strip():
        raise ValidationError("missing final_answer")

    choices: tuple[str, ...] | None = None
    if qtype == "single_choice":
        if not has_choices:
            raise ValidationError("single_choice candidate without choices")
        choices = tuple(str(c) for c in raw_choices)
        if final_answer not in choices:
            raise ValidationError("final_answer not among choices")

    raw_steps = raw.get("steps")
    if not isinstance(raw_steps, list) or not raw_steps:
        raise ValidationError("missing steps")
    steps = []
    seen_focus: set[int] = set()
    for raw_step in raw_steps:
        if not isinstance(raw_step, dict):
            raise ValidationError("step is not an object")
        sub_q = raw_step.get("sub_question")
        answer = raw_step.get("answer")
        if not isinstance(sub_q, str) or not sub_q.strip():
            raise ValidationError("step missing sub_question")
        if not isinstance(answer, str) or not answer.strip():
            raise ValidationError("step missing answer")
        focus_raw = raw_step.get("focus")
        if isinstance(focus_raw, int) and not isinstance(focus_raw, bool):
            focus_raw = [focus_raw]
        if not isinstance(focus_raw, list):
            raise ValidationError("step missing focus list")
        if not 1 <= len(focus_raw) <= 2:
            raise ValidationError("focus must name one or two images")
        focus = []
        for idx in focus_raw:
            if type(idx) is not int or not 0 <= idx < k:
                raise ValidationError(f"focus index {idx!r} outside 0..{k - 1}")
            if idx in seen_focus:
                raise ValidationError("duplicate focus: an image is focused twice")
            seen_focus.add(idx)
            focus.append(idx)
        steps.append(ChainStep(sub_question=sub_q.strip(), focus=tuple(focus), answer=answer.strip()))

    return CandidateQuestion(
        question=question.strip(),
        question_type=qtype,
        choices=choices,
        steps=tuple(steps),
        final_answer=final_answer.strip(),
    )


def parse_generation(text: str, k: int) -> tuple[list[CandidateQuestion], list[str]]:
    """Parse up to three validated candidates from a completion.

    Returns (candidates, drop_reasons); raises AllCandidatesInvalidError when
    nothing survives.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    try:
        data = extract_json(text)
    except ParseError as exc:
        raise ParseError(f"unparseable generation completion: {exc}") from exc
    if isinstance(data, dict):
        raw_list = data.get("questions")
        if not isinstance(raw_list, list):
            raw_list = next((v for v in data.values() if isinstance(v, list)), None)
        if raw_list is None:
            raise ParseError("generation completion contains no question list")
    elif isinstance(data, list):
        raw_list = data
    else:
        raise ParseError("generation completion is not an object or list")

    drop_reasons: list[str] = []
    if len(raw_list) > MAX_CANDIDATES:
        drop_reasons.append(f"{len(raw_list) - MAX_CANDIDATES} extra candidates ignored")
        raw_list = raw_list[:MAX_CANDIDATES]

    candidates: list[CandidateQuestion] = []
    for pos, raw in enumerate(raw_list):
        try:
            candidates.append(_coerce_candidate(raw, k))
        except ValidationError as exc:
            drop_reasons.append(f"candidate {pos}: {exc}")
    if not candidates:
        raise AllCandidatesInvalidError(drop_reasons)
    return candidates, drop_reasons


def synthesize_records(
    path: ReasoningPath,
    graph: RelevanceGraph,
    backend: Backend,
    source: str = "synthesis",
    seed: int | None = None,
) -> tuple[list["SynthesisRecord"], list[str]]:
    """Generate, parse, and package records for one reasoning path."""
    validate_path(path, graph)
    request = render_generation_prompt(path, graph)
    response = backend.complete(request)
    candidates, drop_reasons = parse_generation(response.text, len(path.node_indices))

    relations_used = []
    for t, edge_idx in enumerate(path.edge_indices):
        for rel_type, _ in graph.edges[edge_idx].relations:
            relations_used.append(((t, t + 1), rel_type))

    images = tuple(graph.nodes[idx].image for idx in path.node_indices)
    meta = RecordMeta(source=source, path_length=len(path.node_indices), seed=seed)

    records = [
        finalize_record(
            images=images,
            question=c.question,
            question_type=c.question_type,
            choices=c.choices,
            steps=c.steps,
            final_answer=c.final_answer,
            relations_used=tuple(relations_used),
            meta=meta,
        )
        for c in candidates
    ]
    return records, drop_reasons


# "image 2", "Image B", "the third picture" — explicit slot references the
# generation rules forbid. Plain plural "images" must not match.
_EXPLICIT_IMAGE_RE = re.compile(
    r"(?i:\bimage\s*\d+\b)"
    r"|\b[Ii]mage\s+[A-Z]\b"
    r"|(?i:\b(first|second|third|fourth|fifth|sixth|seventh|eighth|last)\s+(image|picture|photo)\b)"
)


def lint_question(text: str) -> list[str]:
    """Soft style checks on a composite question; warnings, never filters."""
    warnings = []
    if text.strip().lower().startswith("how"):
        warnings.append("question begins with 'How'")
    if len(re.findall(r"[.?!]", text)) > 1:
        warnings.append("question has more than one terminal punctuation mark")
    if _EXPLICIT_IMAGE_RE.search(text):
        warnings.append("question references images explicitly")
    return warnings
