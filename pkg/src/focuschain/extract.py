"""Stage 1 — per-image profile extraction.

Renders the description prompt for each image, fans the requests out through
the backend, and parses completions into ImageProfile nodes. Items whose
completion cannot be parsed are quarantined instead of failing the batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import prompts
from .backend import Backend, ImagePart, ModelRequest, ModelResponse, TextPart, extract_json
from .core import (
    ATTRIBUTE_VOCABULARY,
    ImageProfile,
    ImageRef,
    ObjectEntry,
    QuarantineEntry,
    resolve_image,
    validate_profile,
)
from .errors import ParseError, PipelineError

# JSON keys the parser looks for; "text" maps to the text_content field.
_SECTION_KEYS = ("overall_view", "background", "objects", "interactions", "text", "atmosphere", "narrative")


@dataclass(frozen=True)
class ProfileParseReport:
    profile: ImageProfile
    warnings: tuple[str, ...]
    raw: str


@dataclass
class ExtractionResult:
    profiles: list[ImageProfile] = field(default_factory=list)
    quarantined: list[QuarantineEntry] = field(default_factory=list)


def render_extraction_prompt(image: ImageRef, store_root: str | Path | None = None) -> ModelRequest:
    """Build the single-image description request for the extract stage."""
    if store_root is not None:
        resolve_image(image, store_root)
    text = prompts.FEATURE_EXTRACTION_PROMPT + "\n\n" + prompts.EXTRACTION_JSON_INSTRUCTION
    return ModelRequest(role_tag="extract", parts=(TextPart(text), ImagePart(image)))


def _coerce_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value.strip()
    return str(value)


def _coerce_object(entry) -> ObjectEntry | None:
    """Best-effort mapping of one model-emitted object onto the attribute vocabulary."""
    if isinstance(entry, str):
        return ObjectEntry(name=entry.strip()) if entry.strip() else None
    if not isinstance(entry, dict):
        return None
    name = _coerce_text(entry.get("name"))
    if not name:
        return None
    raw_attrs = entry.get("attributes")
    if not isinstance(raw_attrs, dict):
        # Tolerate flat layouts where attributes sit beside the name.
        raw_attrs = {k: v for k, v in entry.items() if k != "name"}
    attrs: dict[str, str] = {}
    overflow: list[str] = []
    for key, value in raw_attrs.items():
        text = _coerce_text(value)
        if not text:
            continue
        key_norm = str(key).strip().lower()
        if key_norm in ATTRIBUTE_VOCABULARY and key_norm != "other":
            attrs[key_norm] = text
        else:
            overflow.append(f"{key_norm}: {text}")
    if overflow:
        attrs["other"] = "; ".join(overflow)
    return ObjectEntry(name=name, attributes=tuple(sorted(attrs.items())))


def parse_profile(text: str, image: ImageRef | None = None) -> ProfileParseReport:
    """Parse one completion into a profile, collecting warnings for gaps.

    overall_view is mandatory; a missing narrative falls back to the overall
    view so the profile stays usable as a graph node, with a warning recorded.
    """
    try:
        data = extract_json(text)
    except ParseError as exc:
        raise ParseError(f"unparseable profile completion: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("profile completion is not a JSON object")

    warnings = [f"missing section: {key}" for key in _SECTION_KEYS if key not in data]

    overall_view = _coerce_text(data.get("overall_view"))
    if not overall_view:
        raise ParseError("profile completion lacks overall_view")

    narrative = _coerce_text(data.get("narrative"))
    if not narrative:
        narrative = overall_view
        if "missing section: narrative" not in warnings:
            warnings.append("empty narrative; defaulted from overall_view")

    objects = []
    raw_objects = data.get("objects")
    if isinstance(raw_objects, list):
        for entry in raw_objects:
            coerced = _coerce_object(entry)
            if coerced is not None:
                objects.append(coerced)

    profile = ImageProfile(
        image=image if image is not None else ImageRef(id="", path=""),
        overall_view=overall_view,
        background=_coerce_text(data.get("background")),
        objects=tuple(objects),
        interactions=_coerce_text(data.get("interactions")),
        text_content=_coerce_text(data.get("text")),
        atmosphere=_coerce_text(data.get("atmosphere")),
        narrative=narrative,
    )
    return ProfileParseReport(profile=profile, warnings=tuple(warnings), raw=text)


def extract_profiles(
    images: list[ImageRef], backend: Backend, store_root: str | Path | None = None
) -> ExtractionResult:
    """Extract one profile per image, quarantining per-item failures."""
    if not images:
        raise PipelineError("extract_profiles() requires a non-empty image list")

    result = ExtractionResult()
    requests = []
    callable_images = []
    for image in images:
        try:
            requests.append(render_extraction_prompt(image, store_root))
            callable_images.append(image)
        except PipelineError as exc:
            result.quarantined.append(
                QuarantineEntry(item_id=image.id, stage="extract", raw="", error=str(exc))
            )
    responses = backend.run_batch(requests) if requests else []

    for image, response in zip(callable_images, responses):
        if not isinstance(response, ModelResponse):
            result.quarantined.append(
                QuarantineEntry(item_id=image.id, stage="extract", raw="", error=str(response))
            )
            continue
        try:
            report = parse_profile(response.text, image=image)
            validate_profile(report.profile)
            result.profiles.append(report.profile)
        except PipelineError as exc:
            result.quarantined.append(
                QuarantineEntry(item_id=image.id, stage="extract", raw=response.text, error=str(exc))
            )
    if not result.profiles:
        raise PipelineError(f"all {len(images)} extraction items failed")
    return result
