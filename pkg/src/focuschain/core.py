"""Shared domain types: image references, profiles, relation edges, and the
relevance graph, plus canonical JSON encoding and content hashing.

All types are frozen dataclasses; construction never mutates shared state, so
instances are safe to pass across threads. JSON encoding is canonical:
lowercase snake_case keys, lexicographic key order, UTF-8, compact separators.
"""

from __future__ import annotations

import enum
import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MissingImageError, ValidationError

# Attribute keys accepted on ObjectEntry: the eight named in the extraction
# prompt plus a free-text overflow bucket.
ATTRIBUTE_VOCABULARY = frozenset(
    {"quantity", "color", "size", "shape", "material", "texture", "location", "state", "other"}
)


def canonical_json(value) -> str:
    """Serialize to the package-wide canonical JSON form."""
    return json.dumps(value, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def content_id(data: bytes) -> str:
    """SHA-256 hex digest of a byte sequence; stable identity for content."""
    if not data:
        raise ValidationError("content_id() requires a non-empty byte sequence")
    return hashlib.sha256(data).hexdigest()


def canonical_pair(i: int, j: int) -> tuple[int, int]:
    """Order a pair of node indices as (lo, hi)."""
    if i < 0 or j < 0:
        raise ValidationError(f"pair indices must be non-negative, got ({i}, {j})")
    if i == j:
        raise ValidationError(f"degenerate pair ({i}, {j})")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class ImageRef:
    """Content-addressed pointer to one image inside the store."""

    id: str
    path: str
    width: int | None = None
    height: int | None = None

    def to_json(self) -> dict:
        return {"id": self.id, "path": self.path, "width": self.width, "height": self.height}

    @classmethod
    def from_json(cls, data: dict) -> "ImageRef":
        return cls(
            id=data["id"],
            path=data["path"],
            width=data.get("width"),
            height=data.get("height"),
        )


@dataclass(frozen=True)
class ObjectEntry:
    """One named object in a profile with its attribute map."""

    name: str
    attributes: tuple[tuple[str, str], ...] = ()

    def to_json(self) -> dict:
        return {"name": self.name, "attributes": dict(self.attributes)}

    @classmethod
    def from_json(cls, data: dict) -> "ObjectEntry":
        attrs = data.get("attributes") or {}
        return cls(name=data["name"], attributes=tuple(sorted(attrs.items())))


@dataclass(frozen=True)
class ImageProfile:
    """Structured textual profile of one image; a node in the relevance graph."""

    image: ImageRef
    overall_view: str
    background: str = ""
    objects: tuple[ObjectEntry, ...] = ()
    interactions: str = ""
    text_content: str = ""
    atmosphere: str = ""
    narrative: str = ""

    def to_json(self) -> dict:
        return {
            "image": self.image.to_json(),
            "overall_view": self.overall_view,
            "background": self.background,
            "objects": [o.to_json() for o in self.objects],
            "interactions": self.interactions,
            "text_content": self.text_content,
            "atmosphere": self.atmosphere,
            "narrative": self.narrative,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ImageProfile":
        return cls(
            image=ImageRef.from_json(data["image"]),
            overall_view=data["overall_view"],
            background=data.get("background", ""),
            objects=tuple(ObjectEntry.from_json(o) for o in data.get("objects", [])),
            interactions=data.get("interactions", ""),
            text_content=data.get("text_content", ""),
            atmosphere=data.get("atmosphere", ""),
            narrative=data.get("narrative", ""),
        )


class RelationType(enum.Enum):
    TEMPORAL = "temporal"
    SPATIAL = "spatial"
    SEMANTIC = "semantic"


@dataclass(frozen=True)
class RelationEdge:
    """A connected image pair with its typed relation annotations.

    `pair` is canonical (i < j); `relations` holds at most one entry per
    relation type, sorted by type value for stable serialization.
    """

    pair: tuple[int, int]
    relations: tuple[tuple[RelationType, str], ...]

    def types(self) -> set[RelationType]:
        return {t for t, _ in self.relations}

    def to_json(self) -> dict:
        return {
            "pair": list(self.pair),
            "relations": [{"type": t.value, "description": d} for t, d in self.relations],
        }

    @classmethod
    def from_json(cls, data: dict) -> "RelationEdge":
        rels = tuple(
            sorted(
                ((RelationType(r["type"]), r.get("description", "")) for r in data["relations"]),
                key=lambda td: td[0].value,
            )
        )
        pair = data["pair"]
        return cls(pair=(pair[0], pair[1]), relations=rels)


def make_edge(i: int, j: int, relations) -> RelationEdge:
    """Build a validated RelationEdge from any index order and relation iterable."""
    pair = canonical_pair(i, j)
    by_type: dict[RelationType, str] = {}
    for rel_type, description in relations:
        if not isinstance(rel_type, RelationType):
            rel_type = RelationType(rel_type)
        if rel_type in by_type:
            raise ValidationError(f"relation type {rel_type.value} appears twice on edge {pair}")
        by_type[rel_type] = description
    if not by_type:
        raise ValidationError(f"edge {pair} has an empty relation set")
    ordered = tuple(sorted(by_type.items(), key=lambda td: td[0].value))
    return RelationEdge(pair=pair, relations=ordered)


@dataclass(frozen=True)
class Provenance:
    """Generation metadata attached to a graph."""

    models: tuple[tuple[str, str], ...] = ()
    seed: int | None = None
    created_at: str | None = None

    def to_json(self) -> dict:
        return {"models": dict(self.models), "seed": self.seed, "created_at": self.created_at}

    @classmethod
    def from_json(cls, data: dict) -> "Provenance":
        return cls(
            models=tuple(sorted((data.get("models") or {}).items())),
            seed=data.get("seed"),
            created_at=data.get("created_at"),
        )


@dataclass(frozen=True)
class RelevanceGraph:
    """Image profiles as nodes and typed pair relations as edges."""

    nodes: tuple[ImageProfile, ...]
    edges: tuple[RelationEdge, ...]
    provenance: Provenance = field(default_factory=Provenance)

    def to_json(self) -> dict:
        return {
            "nodes": [n.to_json() for n in self.nodes],
            "edges": [e.to_json() for e in self.edges],
            "provenance": self.provenance.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "RelevanceGraph":
        return cls(
            nodes=tuple(ImageProfile.from_json(n) for n in data["nodes"]),
            edges=tuple(RelationEdge.from_json(e) for e in data["edges"]),
            provenance=Provenance.from_json(data.get("provenance") or {}),
        )


@dataclass(frozen=True)
class QuarantineEntry:
    """One pipeline item whose model output failed parsing or validation."""

    item_id: str
    stage: str
    raw: str
    error: str

    def to_json(self) -> dict:
        return {"item_id": self.item_id, "stage": self.stage, "raw": self.raw, "error": self.error}


def validate_profile(profile: ImageProfile) -> None:
    if not profile.overall_view.strip():
        raise ValidationError("profile overall_view must be non-empty")
    if not profile.narrative.strip():
        raise ValidationError("profile narrative must be non-empty")
    if not profile.objects and not profile.narrative.strip():
        raise ValidationError("profile objects may be empty only when narrative is non-empty")
    for obj in profile.objects:
        if not obj.name.strip():
            raise ValidationError("object entry name must be non-empty")
        for key, _ in obj.attributes:
            if key not in ATTRIBUTE_VOCABULARY:
                raise ValidationError(f"unknown object attribute key {key!r}")


def validate_graph(graph: RelevanceGraph) -> None:
    node_count = len(graph.nodes)
    for profile in graph.nodes:
        validate_profile(profile)
    seen: set[tuple[int, int]] = set()
    for edge in graph.edges:
        i, j = edge.pair
        if not (0 <= i < j < node_count):
            raise ValidationError(
                f"edge {edge.pair} references indices outside 0..{node_count - 1} or is not canonical"
            )
        if edge.pair in seen:
            raise ValidationError(f"duplicate edge pair {edge.pair}")
        seen.add(edge.pair)
        if not edge.relations:
            raise ValidationError(f"edge {edge.pair} has an empty relation set")
        types = [t for t, _ in edge.relations]
        if len(types) != len(set(types)):
            raise ValidationError(f"edge {edge.pair} repeats a relation type")


def write_graph(graph: RelevanceGraph, path: str | Path) -> None:
    validate_graph(graph)
    Path(path).write_text(canonical_json(graph.to_json()) + "\n", encoding="utf-8")


def read_graph(path: str | Path) -> RelevanceGraph:
    graph = RelevanceGraph.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
    validate_graph(graph)
    return graph


# --- image store helpers ---------------------------------------------------

_IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".gif", ".webp", ".bmp"}


def sniff_mime(data: bytes) -> str:
    if data.startswith(b"\x89PNG\r\n\x1a\n"):
        return "image/png"
    if data.startswith(b"\xff\xd8"):
        return "image/jpeg"
    if data.startswith((b"GIF87a", b"GIF89a")):
        return "image/gif"
    if data.startswith(b"RIFF") and data[8:12] == b"WEBP":
        return "image/webp"
    if data.startswith(b"BM"):
        return "image/bmp"
    return "application/octet-stream"


def _png_size(data: bytes) -> tuple[int, int] | None:
    # IHDR is always the first chunk: width/height at bytes 16..24.
    if len(data) >= 24 and data.startswith(b"\x89PNG\r\n\x1a\n"):
        width, height = struct.unpack(">II", data[16:24])
        return width, height
    return None


def resolve_image(ref: ImageRef, root: str | Path) -> Path:
    """Resolve a ref inside the store root, rejecting traversal and missing files."""
    root_path = Path(root).resolve()
    candidate = (root_path / ref.path).resolve()
    if not candidate.is_relative_to(root_path):
        raise MissingImageError(f"image path {ref.path!r} escapes the store root")
    if not candidate.is_file():
        raise MissingImageError(f"image {ref.path!r} not found under {root_path}")
    return candidate


def load_image_bytes(ref: ImageRef, root: str | Path) -> bytes:
    return resolve_image(ref, root).read_bytes()


def image_ref_for_file(path: str | Path, root: str | Path) -> ImageRef:
    """Hash a file into a content-addressed ImageRef relative to the store root."""
    file_path = Path(path).resolve()
    root_path = Path(root).resolve()
    data = file_path.read_bytes()
    size = _png_size(data)
    return ImageRef(
        id=content_id(data),
        path=file_path.relative_to(root_path).as_posix(),
        width=size[0] if size else None,
        height=size[1] if size else None,
    )


def scan_image_dir(root: str | Path) -> list[ImageRef]:
    """Collect refs for every image file under root, sorted by relative path."""
    root_path = Path(root).resolve()
    if not root_path.is_dir():
        raise MissingImageError(f"image directory {root} does not exist")
    refs = []
    for file_path in sorted(root_path.rglob("*")):
        if file_path.is_file() and file_path.suffix.lower() in _IMAGE_EXTENSIONS:
            refs.append(image_ref_for_file(file_path, root_path))
    return refs
