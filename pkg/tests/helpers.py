"""Shared test fixtures: tiny real PNG files, graph builders, random record
generation, and independent reference oracles.

The oracles here are deliberately written from first principles (exact
fraction arithmetic for the agreement statistic, a literal filter for pair
lists) so they share no code path with the implementations they check.
"""

from __future__ import annotations

import random
import struct
import zlib
from fractions import Fraction
from pathlib import Path

from focuschain.core import (
    ImageProfile,
    ImageRef,
    ObjectEntry,
    Provenance,
    RelationType,
    RelevanceGraph,
    content_id,
    make_edge,
)
from focuschain.question import ChainStep, RecordMeta, finalize_record


# --- tiny real images -------------------------------------------------------

def png_bytes(rgb: tuple[int, int, int], size: tuple[int, int] = (4, 4)) -> bytes:
    """Minimal valid RGB PNG with a solid color."""
    width, height = size

    def chunk(tag: bytes, payload: bytes) -> bytes:
        return (
            struct.pack(">I", len(payload))
            + tag
            + payload
            + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF)
        )

    ihdr = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    row = b"\x00" + bytes(rgb) * width
    idat = zlib.compress(row * height)
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", ihdr)
        + chunk(b"IDAT", idat)
        + chunk(b"IEND", b"")
    )


def write_image_store(root: Path, count: int = 6) -> list[Path]:
    """Write `count` distinct PNGs under root; returns the file paths."""
    root.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        path = root / f"img_{i}.png"
        path.write_bytes(png_bytes((40 * i % 256, 90 + i, 200 - 25 * i % 256)))
        paths.append(path)
    return paths


# --- domain object builders -------------------------------------------------

def make_ref(tag: str = "a", path: str | None = None) -> ImageRef:
    data = f"image-{tag}".encode()
    return ImageRef(id=content_id(data), path=path or f"{tag}.png", width=4, height=4)


def make_profile(tag: str = "a", objects: tuple[str, ...] = ("tree",)) -> ImageProfile:
    return ImageProfile(
        image=make_ref(tag),
        overall_view=f"a scene {tag}",
        background=f"background {tag}",
        objects=tuple(ObjectEntry(name=name, attributes=(("color", "green"),)) for name in objects),
        interactions=f"objects sit near each other in {tag}",
        text_content="",
        atmosphere="calm",
        narrative=f"a longer story about scene {tag}",
    )


def make_graph(n_nodes: int, pairs: list[tuple[int, int]], relation=RelationType.SEMANTIC) -> RelevanceGraph:
    nodes = tuple(make_profile(f"n{i}") for i in range(n_nodes))
    edges = tuple(make_edge(i, j, [(relation, f"link {i}-{j}")]) for i, j in pairs)
    return RelevanceGraph(nodes=nodes, edges=edges, provenance=Provenance())


# --- random records ---------------------------------------------------------

def make_random_record(rng: random.Random, k: int | None = None):
    """A schema-valid record with randomized content."""
    k = k if k is not None else rng.randint(1, 8)
    images = tuple(
        ImageRef(
            id=content_id(rng.randbytes(8)),
            path=f"imgs/r{rng.randrange(10**9)}_{i}.png",
            width=rng.choice([None, 4, 640]),
            height=rng.choice([None, 4, 480]),
        )
        for i in range(k)
    )
    indices = list(range(k))
    rng.shuffle(indices)
    steps = []
    while indices and len(steps) < 4:
        take = min(rng.choice([1, 1, 2]), len(indices))
        focus = tuple(sorted(indices[:take]))
        indices = indices[take:]
        steps.append(
            ChainStep(
                sub_question=f"what is in slot {focus[0]}? ({rng.randrange(1000)})",
                focus=focus,
                answer=f"answer {rng.randrange(1000)}",
            )
        )
    question_type = rng.choice(["open_ended", "single_choice"])
    final = f"final {rng.randrange(1000)}"
    choices = None
    if question_type == "single_choice":
        choices = tuple([final] + [f"alt {rng.randrange(1000)}" for _ in range(3)])
    relations = []
    for t in range(k - 1):
        if rng.random() < 0.7:
            relations.append(((t, t + 1), rng.choice(list(RelationType))))
    return finalize_record(
        images=images,
        question=f"Which element recurs across the set ({rng.randrange(10**6)})?",
        question_type=question_type,
        choices=choices,
        steps=tuple(steps),
        final_answer=final,
        relations_used=tuple(relations),
        meta=RecordMeta(source="generator", path_length=k, seed=rng.randrange(2**31)),
    )


# --- independent oracles ----------------------------------------------------

def reference_fleiss_kappa(rows: list[list[int]], n_raters: int) -> float:
    """Agreement statistic recomputed with exact rational arithmetic."""
    n_items = len(rows)
    n_cats = len(rows[0])
    p_obs = Fraction(0)
    for row in rows:
        assert sum(row) == n_raters
        p_obs += Fraction(sum(c * c for c in row) - n_raters, n_raters * (n_raters - 1))
    p_obs = p_obs / n_items
    p_exp = Fraction(0)
    for j in range(n_cats):
        column = Fraction(sum(row[j] for row in rows), n_items * n_raters)
        p_exp += column * column
    if p_exp == 1:
        return 1.0
    return float((p_obs - p_exp) / (1 - p_exp))


def reference_pair_filter(items: list, group_size: int) -> set[tuple[int, int]]:
    """Literal filter over an already-parsed pair list: keep two distinct
    in-range plain ints, canonicalized, first occurrence only."""
    kept: set[tuple[int, int]] = set()
    for item in items:
        if not isinstance(item, list) or len(item) != 2:
            continue
        a, b = item
        if type(a) is not int or type(b) is not int:
            continue
        if a == b or a < 0 or b < 0 or a >= group_size or b >= group_size:
            continue
        kept.add((min(a, b), max(a, b)))
    return kept
