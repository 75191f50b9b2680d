from __future__ import annotations

import json
import random

import pytest

from focuschain.backend import BackendConfig, ScriptedBackend
from focuschain.connect import batch_groups, connect, parse_pairs, render_connection_prompt
from focuschain.errors import ParseError, PipelineError, ValidationError

from helpers import make_profile, reference_pair_filter


def scripted(playlists, **kwargs) -> ScriptedBackend:
    return ScriptedBackend(BackendConfig(kind="scripted", playlists=playlists, **kwargs))


class TestBatchGroups:
    def test_partition_sizes(self):
        groups = batch_groups(10, 4, seed=1)
        assert sorted(len(g) for g in groups) == [2, 4, 4]

    def test_small_collection_single_group(self):
        groups = batch_groups(3, 8, seed=1)
        assert len(groups) == 1 and len(groups[0]) == 3

    def test_every_node_exactly_once(self):
        groups = batch_groups(23, 5, seed=9)
        flat = [i for g in groups for i in g]
        assert sorted(flat) == list(range(23))

    def test_deterministic_per_seed(self):
        assert batch_groups(17, 4, seed=42) == batch_groups(17, 4, seed=42)
        assert batch_groups(17, 4, seed=42) != batch_groups(17, 4, seed=43)

    def test_group_size_must_be_at_least_two(self):
        with pytest.raises(ValidationError):
            batch_groups(5, 1, seed=0)


class TestRenderConnectionPrompt:
    def test_numbered_profiles_no_images(self):
        request = render_connection_prompt([make_profile(f"p{i}") for i in range(3)])
        assert request.role_tag == "connect"
        assert request.images() == []
        text = request.text()
        for i in range(3):
            assert f"Image {i}:" in text

    def test_single_profile_rejected(self):
        with pytest.raises(ValidationError):
            render_connection_prompt([make_profile("only")])

    def test_contains_both_criteria(self):
        text = render_connection_prompt([make_profile("a"), make_profile("b")]).text()
        assert "object-oriented" in text
        assert "co-occurring objects" in text
        assert "shared or related events" in text


class TestParsePairs:
    def test_spec_example_with_drops(self):
        pairs, dropped = parse_pairs("[[0,2],[2,0],[1,1],[0,9]]", 3)
        assert pairs == {(0, 2)}
        assert dropped == 3

    def test_empty_list(self):
        pairs, dropped = parse_pairs("[]", 4)
        assert pairs == set()
        assert dropped == 0

    def test_no_list_is_an_error(self):
        with pytest.raises(ParseError):
            parse_pairs("no list", 4)

    def test_pairs_wrapper_object(self):
        pairs, _ = parse_pairs('{"pairs": [[0, 1]]}', 2)
        assert pairs == {(0, 1)}

    def test_rejects_booleans_floats_strings(self):
        pairs, dropped = parse_pairs('[[true, 1], [0.0, 1], ["0", 1], [0, 1]]', 2)
        assert pairs == {(0, 1)}
        assert dropped == 3

    def test_matches_reference_filter_on_1000_random_lists(self):
        rng = random.Random(99)
        atoms = [-3, -1, 0, 1, 2, 3, 4, 5, 9, True, False, 0.5, 2.0, "1", None, "x"]
        for _ in range(1000):
            group_size = rng.randint(2, 6)
            items = []
            for _ in range(rng.randrange(8)):
                shape = rng.randrange(5)
                if shape == 0:
                    items.append([rng.randint(-2, group_size + 1), rng.randint(-2, group_size + 1)])
                elif shape == 1:
                    items.append([rng.choice(atoms), rng.choice(atoms)])
                elif shape == 2:
                    items.append([rng.randrange(group_size), rng.randrange(group_size)])
                elif shape == 3:
                    items.append(rng.choice([[], [1], [0, 1, 2], "pair", 3, None, {"i": 0}]))
                else:
                    a = rng.randrange(group_size)
                    b = (a + 1 + rng.randrange(group_size - 1)) % group_size
                    items.append([a, b])
            expected = reference_pair_filter(items, group_size)
            got, dropped = parse_pairs(json.dumps(items), group_size)
            assert got == expected
            assert dropped == len(items) - len(expected)

    def test_fuzzed_strings_never_violate_containment(self):
        rng = random.Random(4242)
        alphabet = '[]{}(),:"0123456789 -truefalsenul\n'
        checked = 0
        for _ in range(10_000):
            text = "".join(rng.choice(alphabet) for _ in range(rng.randrange(1, 40)))
            group_size = rng.randint(2, 5)
            try:
                pairs, _ = parse_pairs(text, group_size)
            except ParseError:
                continue
            checked += 1
            for i, j in pairs:
                assert 0 <= i < j < group_size
        assert checked > 50  # sanity: the fuzz actually exercises the success path


class TestConnect:
    def test_single_group_scripted(self):
        profiles = [make_profile(f"p{i}") for i in range(4)]
        backend = scripted({"connect": ["[[0,1],[2,3]]"]})
        result = connect(profiles, backend, group_size=8, seed=0)
        groups = result.groups
        local = {(0, 1), (2, 3)}
        expected = {tuple(sorted((groups[0][a], groups[0][b]))) for a, b in local}
        assert set(result.pairs) == expected

    def test_local_to_global_remap(self):
        # Force a known group by picking a seed whose shuffle we read back.
        profiles = [make_profile(f"p{i}") for i in range(10)]
        backend = scripted({"connect": ["[[0,2]]", "[]", "[]"]})
        result = connect(profiles, backend, group_size=4, seed=5)
        group0 = result.groups[0]
        assert result.pairs == [tuple(sorted((group0[0], group0[2])))]

    def test_no_cross_group_pairs(self):
        profiles = [make_profile(f"p{i}") for i in range(12)]
        playlist = ["[[0,1],[1,2],[0,3]]"] * 3
        backend = scripted({"connect": playlist})
        result = connect(profiles, backend, group_size=4, seed=3)
        membership = {}
        for gid, group in enumerate(result.groups):
            for node in group:
                membership[node] = gid
        for i, j in result.pairs:
            assert membership[i] == membership[j]

    def test_malformed_group_does_not_kill_others(self):
        profiles = [make_profile(f"p{i}") for i in range(8)]
        backend = scripted({"connect": ["utter garbage", "[[0,1]]"]})
        result = connect(profiles, backend, group_size=4, seed=1)
        assert len(result.pairs) == 1
        assert len(result.quarantined) == 1

    def test_all_groups_failed(self):
        profiles = [make_profile(f"p{i}") for i in range(4)]
        backend = scripted({"connect": ["junk", "junk"]})
        with pytest.raises(PipelineError, match="all connection groups"):
            connect(profiles, backend, group_size=2, seed=1)

    def test_requires_two_profiles(self):
        with pytest.raises(PipelineError):
            connect([make_profile("only")], scripted({}))

    def test_deterministic_given_seed_and_script(self):
        profiles = [make_profile(f"p{i}") for i in range(9)]
        playlist = ["[[0,1],[1,2]]", "[[0,3]]", "[]"]
        run1 = connect(profiles, scripted({"connect": list(playlist)}), group_size=4, seed=11)
        run2 = connect(profiles, scripted({"connect": list(playlist)}), group_size=4, seed=11)
        assert run1.pairs == run2.pairs
