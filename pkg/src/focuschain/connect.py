"""Stage 2 — candidate pair proposal over profile nodes.

Profiles are partitioned into seeded random groups (pairing cost grows
quadratically with group size, so groups stay small) and the model proposes
related pairs inside each group. Local pair indices are remapped to global
node indices; cross-group pairs are never proposed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import prompts
from .backend import Backend, ModelRequest, ModelResponse, TextPart, extract_json
from .core import ImageProfile, QuarantineEntry, canonical_pair
from .errors import ParseError, PipelineError, ValidationError
from .rng import Rng

DEFAULT_GROUP_SIZE = 8

_SUMMARY_CLIP = 600


@dataclass
class ConnectionResult:
    pairs: list[tuple[int, int]] = field(default_factory=list)
    group_of_pair: dict[tuple[int, int], int] = field(default_factory=dict)
    groups: list[list[int]] = field(default_factory=list)
    dropped: int = 0
    quarantined: list[QuarantineEntry] = field(default_factory=list)


def batch_groups(node_count: int, group_size: int, seed: int) -> list[list[int]]:
    """Partition shuffled node indices into groups of at most group_size."""
    if group_size < 2:
        raise ValidationError("group_size must be >= 2")
    if node_count < 0:
        raise ValidationError("node_count must be >= 0")
    indices = list(range(node_count))
    Rng(seed).shuffle(indices)
    return [indices[i : i + group_size] for i in range(0, node_count, group_size)]


def _clip(text: str, limit: int = _SUMMARY_CLIP) -> str:
    text = " ".join(text.split())
    return text if len(text) <= limit else text[: limit - 1] + "…"


def profile_summary(index: int, profile: ImageProfile) -> str:
    names = ", ".join(obj.name for obj in profile.objects)
    lines = [f"Image {index}:", f"  View: {_clip(profile.overall_view)}"]
    if names:
        lines.append(f"  Objects: {_clip(names)}")
    if profile.interactions:
        lines.append(f"  Interactions: {_clip(profile.interactions)}")
    lines.append(f"  Description: {_clip(profile.narrative)}")
    return "\n".join(lines)


def render_connection_prompt(profiles: list[ImageProfile]) -> ModelRequest:
    """Text-only request proposing pairs among the given (locally numbered) profiles."""
    if len(profiles) < 2:
        raise ValidationError("pair connection needs at least 2 profiles")
    blocks = "\n\n".join(profile_summary(i, p) for i, p in enumerate(profiles))
    text = (
        prompts.PAIR_CONNECTION_PROMPT
        + "\n\nImage descriptions:\n\n"
        + blocks
        + "\n\n"
        + prompts.CONNECTION_JSON_INSTRUCTION
    )
    return ModelRequest(role_tag="connect", parts=(TextPart(text),))


def parse_pairs(text: str, group_size: int) -> tuple[set[tuple[int, int]], int]:
    """Extract a canonical pair set from a completion.

    Items that are not two distinct in-range integers, or that duplicate an
    earlier pair after canonicalization, are dropped; the second return value
    counts the drops.
    """
    if group_size < 2:
        raise ValidationError("group_size must be >= 2")
    try:
        data = extract_json(text)
    except ParseError as exc:
        raise ParseError(f"unparseable pair completion: {exc}") from exc
    if isinstance(data, dict):
        # Tolerate {"pairs": [...]} wrappers.
        lists = [v for v in data.values() if isinstance(v, list)]
        if not lists:
            raise ParseError("pair completion contains no JSON list")
        data = lists[0]
    if not isinstance(data, list):
        raise ParseError("pair completion is not a JSON list")

    pairs: set[tuple[int, int]] = set()
    dropped = 0
    for item in data:
        if (
            isinstance(item, (list, tuple))
            and len(item) == 2
            and all(type(x) is int for x in item)
            and item[0] != item[1]
            and 0 <= min(item)
            and max(item) < group_size
        ):
            pair = canonical_pair(item[0], item[1])
            if pair in pairs:
                dropped += 1
            else:
                pairs.add(pair)
        else:
            dropped += 1
    return pairs, dropped


def connect(
    profiles: list[ImageProfile],
    backend: Backend,
    group_size: int = DEFAULT_GROUP_SIZE,
    seed: int = 0,
) -> ConnectionResult:
    """Propose candidate pairs for all profiles, grouped to bound prompt size."""
    if len(profiles) < 2:
        raise PipelineError("connect() requires at least 2 profiles")

    result = ConnectionResult(groups=batch_groups(len(profiles), group_size, seed))
    askable = [(gid, group) for gid, group in enumerate(result.groups) if len(group) >= 2]

    requests = [render_connection_prompt([profiles[i] for i in group]) for _, group in askable]
    responses = backend.run_batch(requests) if requests else []

    failed = 0
    for (gid, group), response in zip(askable, responses):
        if not isinstance(response, ModelResponse):
            failed += 1
            result.quarantined.append(
                QuarantineEntry(item_id=f"group-{gid}", stage="connect", raw="", error=str(response))
            )
            continue
        try:
            local_pairs, dropped = parse_pairs(response.text, len(group))
        except ParseError as exc:
            failed += 1
            result.quarantined.append(
                QuarantineEntry(item_id=f"group-{gid}", stage="connect", raw=response.text, error=str(exc))
            )
            continue
        result.dropped += dropped
        for li, lj in local_pairs:
            pair = canonical_pair(group[li], group[lj])
            if pair not in result.group_of_pair:
                result.group_of_pair[pair] = gid

    if askable and failed == len(askable):
        raise PipelineError("all connection groups failed")
    result.pairs = sorted(result.group_of_pair)
    return result
