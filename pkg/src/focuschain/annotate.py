"""Stage 3 — typed relation annotation for candidate pairs, producing the
relevance graph.

Each candidate pair is shown to the model as two attached images; the
completion is parsed into temporal/spatial/semantic relations. Pairs the
model finds unrelated are dropped (counted, not kept as typeless edges).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import prompts
from .backend import Backend, ImagePart, ModelRequest, ModelResponse, TextPart, extract_json
from .core import (
    ImageProfile,
    ImageRef,
    Provenance,
    QuarantineEntry,
    RelationType,
    RelevanceGraph,
    canonical_pair,
    make_edge,
    resolve_image,
    validate_graph,
)
from .errors import ParseError, PipelineError, ValidationError


@dataclass
class AnnotationResult:
    graph: RelevanceGraph
    dropped_unrelated: int = 0
    quarantined: list[QuarantineEntry] = field(default_factory=list)


def render_annotation_prompt(
    pair: tuple[ImageRef, ImageRef], store_root: str | Path | None = None
) -> ModelRequest:
    """Two-image request asking for the three relation annotations."""
    first, second = pair
    if first.id == second.id:
        raise ValidationError("degenerate pair: identical image on both sides")
    if store_root is not None:
        resolve_image(first, store_root)
        resolve_image(second, store_root)
    text = prompts.RELEVANCE_ANNOTATION_PROMPT + "\n\n" + prompts.ANNOTATION_JSON_INSTRUCTION
    return ModelRequest(
        role_tag="annotate", parts=(TextPart(text), ImagePart(first), ImagePart(second))
    )


def _affirmed(value) -> tuple[bool, str]:
    """Interpret one relation-key value as (present, description)."""
    if isinstance(value, dict):
        description = value.get("description")
        description = description.strip() if isinstance(description, str) else ""
        present = value.get("present")
        if isinstance(present, bool):
            return present, description
        return bool(description), description
    if isinstance(value, bool):
        return value, ""
    if isinstance(value, str):
        return bool(value.strip()), value.strip()
    return False, ""


def parse_relations(text: str) -> set[tuple[RelationType, str]]:
    """Parse a completion into the set of affirmed typed relations."""
    try:
        data = extract_json(text)
    except ParseError as exc:
        raise ParseError(f"unparseable relation completion: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("relation completion is not a JSON object")
    relations: set[tuple[RelationType, str]] = set()
    for rel_type in RelationType:
        present, description = _affirmed(data.get(rel_type.value))
        if present:
            relations.add((rel_type, description))
    return relations


def annotate_edges(
    profiles: list[ImageProfile],
    pairs: list[tuple[int, int]],
    backend: Backend,
    store_root: str | Path | None = None,
    provenance: Provenance | None = None,
) -> AnnotationResult:
    """Annotate candidate pairs and assemble the validated relevance graph."""
    unique_pairs = sorted({canonical_pair(i, j) for i, j in pairs})
    for i, j in unique_pairs:
        if j >= len(profiles):
            raise ValidationError(f"pair ({i}, {j}) references a node outside 0..{len(profiles) - 1}")

    requests = [
        render_annotation_prompt((profiles[i].image, profiles[j].image), store_root)
        for i, j in unique_pairs
    ]
    responses = backend.run_batch(requests) if requests else []

    edges = []
    dropped_unrelated = 0
    quarantined: list[QuarantineEntry] = []
    for (i, j), response in zip(unique_pairs, responses):
        pair_id = f"{i}-{j}"
        if not isinstance(response, ModelResponse):
            quarantined.append(
                QuarantineEntry(item_id=pair_id, stage="annotate", raw="", error=str(response))
            )
            continue
        try:
            relations = parse_relations(response.text)
        except ParseError as exc:
            quarantined.append(
                QuarantineEntry(item_id=pair_id, stage="annotate", raw=response.text, error=str(exc))
            )
            continue
        if not relations:
            dropped_unrelated += 1
            continue
        edges.append(make_edge(i, j, sorted(relations, key=lambda td: td[0].value)))

    if unique_pairs and len(quarantined) == len(unique_pairs):
        raise PipelineError("all annotation pairs failed")

    graph = RelevanceGraph(
        nodes=tuple(profiles),
        edges=tuple(edges),
        provenance=provenance if provenance is not None else Provenance(),
    )
    validate_graph(graph)
    return AnnotationResult(graph=graph, dropped_unrelated=dropped_unrelated, quarantined=quarantined)
