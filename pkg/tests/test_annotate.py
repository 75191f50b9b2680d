from __future__ import annotations

import json

import pytest

from focuschain.annotate import annotate_edges, parse_relations, render_annotation_prompt
from focuschain.backend import BackendConfig, ScriptedBackend
from focuschain.core import RelationType
from focuschain.errors import ParseError, PipelineError, ValidationError

from helpers import make_profile, make_ref

FULL_RESPONSE = json.dumps(
    {
        "temporal": {"present": True, "description": "before and after cooking"},
        "spatial": {"present": False},
        "semantic": {"present": True, "description": "same recipe theme"},
    }
)


def scripted(playlists, **kwargs) -> ScriptedBackend:
    return ScriptedBackend(BackendConfig(kind="scripted", playlists=playlists, **kwargs))


class TestRenderAnnotationPrompt:
    def test_two_image_attachments(self):
        request = render_annotation_prompt((make_ref("a"), make_ref("b")))
        assert request.role_tag == "annotate"
        assert len(request.images()) == 2

    def test_contains_three_relationship_headings(self):
        text = render_annotation_prompt((make_ref("a"), make_ref("b"))).text()
        assert "Temporal Relationship" in text
        assert "Spatial Relationship" in text
        assert "Semantic Relationship" in text

    def test_identical_image_rejected(self):
        ref = make_ref("same")
        with pytest.raises(ValidationError, match="degenerate"):
            render_annotation_prompt((ref, ref))


class TestParseRelations:
    def test_present_and_affirmed_mapping(self):
        relations = parse_relations(FULL_RESPONSE)
        assert {t for t, _ in relations} == {RelationType.TEMPORAL, RelationType.SEMANTIC}
        descriptions = dict(relations)
        assert descriptions[RelationType.TEMPORAL] == "before and after cooking"
        assert descriptions[RelationType.SEMANTIC] == "same recipe theme"

    def test_all_three_present(self):
        text = json.dumps(
            {
                "temporal": {"present": True, "description": "t"},
                "spatial": {"present": True, "description": "s"},
                "semantic": {"present": True, "description": "m"},
            }
        )
        assert len(parse_relations(text)) == 3

    def test_absent_keys_yield_empty_set(self):
        assert parse_relations('{"spatial": {"present": false}}') == set()

    def test_nonempty_description_affirms_without_flag(self):
        relations = parse_relations('{"temporal": {"description": "sequence"}}')
        assert relations == {(RelationType.TEMPORAL, "sequence")}

    def test_plain_string_value_affirms(self):
        relations = parse_relations('{"semantic": "both show festivals"}')
        assert relations == {(RelationType.SEMANTIC, "both show festivals")}

    def test_present_false_wins_over_description(self):
        text = '{"spatial": {"present": false, "description": "ignored"}}'
        assert parse_relations(text) == set()

    def test_unparseable(self):
        with pytest.raises(ParseError):
            parse_relations("none of this is json")


class TestAnnotateEdges:
    def test_empty_relation_pairs_dropped(self):
        profiles = [make_profile(f"p{i}") for i in range(3)]
        backend = scripted(
            {"annotate": [FULL_RESPONSE, '{"temporal": {"present": false}}']}
        )
        result = annotate_edges(profiles, [(0, 1), (1, 2)], backend)
        assert len(result.graph.edges) == 1
        assert result.graph.edges[0].pair == (0, 1)
        assert result.dropped_unrelated == 1

    def test_counters_balance(self):
        profiles = [make_profile(f"p{i}") for i in range(4)]
        backend = scripted({"annotate": [FULL_RESPONSE, "garbage", "{}"]})
        result = annotate_edges(profiles, [(0, 1), (1, 2), (2, 3)], backend)
        assert (
            len(result.graph.edges) + result.dropped_unrelated + len(result.quarantined) == 3
        )

    def test_duplicate_pair_single_edge(self):
        profiles = [make_profile(f"p{i}") for i in range(2)]
        backend = scripted({"annotate": [FULL_RESPONSE]})
        result = annotate_edges(profiles, [(0, 1), (1, 0)], backend)
        assert len(result.graph.edges) == 1

    def test_out_of_range_pair_fails_before_any_call(self):
        profiles = [make_profile(f"p{i}") for i in range(2)]
        backend = scripted({"annotate": []})
        with pytest.raises(ValidationError, match="outside"):
            annotate_edges(profiles, [(0, 7)], backend)
        assert backend.calls == []

    def test_every_edge_has_nonempty_relations(self):
        profiles = [make_profile(f"p{i}") for i in range(3)]
        backend = scripted({"annotate": [FULL_RESPONSE, FULL_RESPONSE]})
        result = annotate_edges(profiles, [(0, 2), (1, 2)], backend)
        assert all(edge.relations for edge in result.graph.edges)

    def test_all_pairs_failed(self):
        profiles = [make_profile(f"p{i}") for i in range(2)]
        backend = scripted({"annotate": ["junk"]})
        with pytest.raises(PipelineError, match="all annotation pairs"):
            annotate_edges(profiles, [(0, 1)], backend)
