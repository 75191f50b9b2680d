from __future__ import annotations

import json
import random
from pathlib import Path

import pytest
from click.testing import CliRunner

from focuschain.cli import main
from focuschain.dataset import write_records

from helpers import make_random_record, write_image_store

PROFILE_TEMPLATE = {
    "overall_view": "scene {i}",
    "background": "background {i}",
    "objects": [{"name": "marker {i}", "attributes": {"color": "blue"}}],
    "interactions": "marker {i} leans on the wall",
    "text": "",
    "atmosphere": "calm",
    "narrative": "a long story about scene {i}",
}

GENERATION_RESPONSE = {
    "questions": [
        {
            "question": "Which object persists across the sequence?",
            "type": "open_ended",
            "steps": [
                {"sub_question": "what starts the sequence?", "focus": [0], "answer": "a marker"},
                {"sub_question": "what links the rest?", "focus": [1, 2], "answer": "the same marker"},
            ],
            "final_answer": "the marker persists",
        },
        {
            "question": "Which scene shows the marker closest to the wall?",
            "type": "single_choice",
            "choices": ["the first", "the second", "the third"],
            "steps": [
                {"sub_question": "where is the marker at the start?", "focus": [0], "answer": "near the wall"},
                {"sub_question": "where later?", "focus": [2], "answer": "far from the wall"},
            ],
            "final_answer": "the first",
        },
        {
            "question": "Does the marker change color?",
            "type": "open_ended",
            "steps": [
                {"sub_question": "what color initially?", "focus": [1], "answer": "blue"},
                {"sub_question": "what color finally?", "focus": [2], "answer": "blue"},
            ],
            "final_answer": "no, it stays blue",
        },
    ]
}


def pipeline_playlists() -> dict:
    profiles = []
    for i in range(6):
        body = {k: (v.format(i=i) if isinstance(v, str) else v) for k, v in PROFILE_TEMPLATE.items()}
        body["objects"] = [{"name": f"marker {i}", "attributes": {"color": "blue"}}]
        profiles.append(json.dumps(body))
    relation = json.dumps(
        {
            "temporal": {"present": True, "description": "one follows the other"},
            "spatial": {"present": False},
            "semantic": {"present": True, "description": "same marker"},
        }
    )
    return {
        "extract": profiles,
        "connect": ["[[0,1],[1,2],[2,3],[3,4],[4,5]]"],
        "annotate": [relation] * 5,
        "question": [json.dumps(GENERATION_RESPONSE)],
    }


def write_backend_config(directory: Path, playlists: dict) -> Path:
    config = directory / "backend.json"
    config.write_text(
        json.dumps({"kind": "scripted", "model": "scripted-test", "playlists": playlists}),
        encoding="utf-8",
    )
    return config


def run_pipeline(runner: CliRunner, workdir: Path, seed: int = 7) -> Path:
    images = workdir / "images"
    write_image_store(images, count=6)
    config = write_backend_config(workdir, pipeline_playlists())
    profiles = workdir / "profiles.jsonl"
    pairs = workdir / "pairs.jsonl"
    graph = workdir / "graph.json"
    shard = workdir / "shard.visc.jsonl"

    steps = [
        ["extract", "--images", str(images), "--out", str(profiles), "--backend", str(config)],
        [
            "connect", "--profiles", str(profiles), "--out", str(pairs),
            "--group-size", "8", "--seed", str(seed), "--backend", str(config),
        ],
        [
            "annotate", "--pairs", str(pairs), "--profiles", str(profiles),
            "--images", str(images), "--out", str(graph), "--backend", str(config),
        ],
        [
            "synthesize", "--graph", str(graph), "--count", "1", "--seed", str(seed),
            "--lengths", "0,0,1", "--out", str(shard), "--backend", str(config),
        ],
    ]
    for args in steps:
        result = runner.invoke(main, args, catch_exceptions=False)
        assert result.exit_code == 0, f"{args[0]} failed: {result.output}"
    return shard


@pytest.fixture
def runner():
    return CliRunner()


class TestPipeline:
    def test_full_pipeline_emits_valid_records(self, runner, tmp_path):
        shard = run_pipeline(runner, tmp_path)
        result = runner.invoke(main, ["validate", "--in", str(shard), "--json"])
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload["records"] >= 3
        assert payload["errors"] == []

    def test_two_runs_byte_identical(self, runner, tmp_path):
        shard_a = run_pipeline(runner, tmp_path / "run_a")
        shard_b = run_pipeline(runner, tmp_path / "run_b")
        assert shard_a.read_bytes() == shard_b.read_bytes()

    def test_stats_on_fixture(self, runner, tmp_path):
        records = [make_random_record(random.Random(3), k=2) for _ in range(4)]
        shard = tmp_path / "fixture.jsonl"
        write_records(records, shard)
        result = runner.invoke(main, ["stats", "--in", str(shard)])
        assert result.exit_code == 0
        payload = json.loads(result.output)
        assert payload["record_count"] == 4

    def test_sample_roundtrip(self, runner, tmp_path):
        rng = random.Random(4)
        shard = tmp_path / "in.jsonl"
        out = tmp_path / "out.jsonl"
        write_records([make_random_record(rng) for _ in range(10)], shard)
        result = runner.invoke(
            main, ["sample", "--in", str(shard), "--n", "4", "--seed", "2", "--out", str(out), "--json"]
        )
        assert result.exit_code == 0
        assert json.loads(result.output)["records"] == 4

    def test_export_documents(self, runner, tmp_path):
        rng = random.Random(5)
        shard = tmp_path / "in.jsonl"
        out = tmp_path / "conv.jsonl"
        write_records([make_random_record(rng, k=3) for _ in range(2)], shard)
        result = runner.invoke(main, ["export", "--in", str(shard), "--out", str(out), "--json"])
        assert result.exit_code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 2
        doc = json.loads(lines[0])
        assert doc["messages"][0]["content"].count("<image>") == 3


class TestChainCommand:
    def test_chain_prints_trace(self, runner, tmp_path):
        images = write_image_store(tmp_path / "imgs", count=2)
        playlists = {
            "chain_plan": [json.dumps({"sub_question": "what is shown?", "focus": [0]})],
            "chain_answer": ["a color block"],
            "chain_stop": [json.dumps({"stop": True, "final_answer": "a block"})],
        }
        config = write_backend_config(tmp_path, playlists)
        result = runner.invoke(
            main,
            [
                "chain", "--question", "What do the images show?",
                "--images", ",".join(str(p) for p in images),
                "--backend", str(config),
            ],
        )
        assert result.exit_code == 0, result.output
        trace = json.loads(result.output)
        assert trace["final_answer"] == "a block"
        assert trace["steps"][0]["focus"] == [0]


class TestErrorSurface:
    def test_unknown_flag_exits_2(self, runner):
        result = runner.invoke(main, ["stats", "--nonsense"])
        assert result.exit_code == 2

    def test_stage_error_exits_1_with_json_stderr(self, runner, tmp_path):
        images = tmp_path / "images"
        write_image_store(images, count=1)
        config = write_backend_config(tmp_path, {"extract": []})  # empty playlist
        result = runner.invoke(
            main,
            ["extract", "--images", str(images), "--out", str(tmp_path / "p.jsonl"), "--backend", str(config)],
        )
        assert result.exit_code == 1
        error = json.loads(result.stderr)
        assert "error" in error and "message" in error

    def test_missing_backend_config(self, runner, tmp_path):
        images = tmp_path / "images"
        write_image_store(images, count=1)
        result = runner.invoke(
            main, ["extract", "--images", str(images), "--out", str(tmp_path / "p.jsonl")]
        )
        assert result.exit_code == 1


class TestReviewReport:
    def test_report_without_judgments(self, runner, tmp_path):
        rng = random.Random(6)
        shard = tmp_path / "data.jsonl"
        write_records([make_random_record(rng) for _ in range(5)], shard)
        store = tmp_path / "judgments.jsonl"
        store.write_text("")
        result = runner.invoke(
            main,
            ["review", "report", "--dataset", str(shard), "--store", str(store)],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(result.output)
        assert payload["n_items"] == 0
        assert payload["incomplete"] == 5
