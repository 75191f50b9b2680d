"""Command-line entry point: one subcommand per pipeline stage, the chain
executor, dataset tooling, and the review service.

Backend settings come from a JSON config file (see README); flags override
individual fields and the API key is only ever read from an environment
variable. Stage failures exit 1 with a JSON error on stderr; usage errors
exit 2 (click's default).
"""

from __future__ import annotations

import dataclasses
import functools
import json
import sys
from pathlib import Path

import click

from . import chain as chain_mod
from . import connect as connect_mod
from . import dataset, extract, quality, service
from . import question as question_mod
from .annotate import annotate_edges
from .backend import Backend, BackendConfig, make_backend
from .core import (
    ImageProfile,
    Provenance,
    QuarantineEntry,
    canonical_json,
    image_ref_for_file,
    read_graph,
    scan_image_dir,
    write_graph,
)
from .errors import NoPathFoundError, ParseError, PipelineError
from .pathgen import LengthDistribution, sample_length, sample_path
from .rng import Rng

_PATH_RETRIES = 8


def _fail(exc: Exception) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(payload), err=True)
    sys.exit(1)


def stage_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (PipelineError, FileNotFoundError, NotADirectoryError, json.JSONDecodeError) as exc:
            _fail(exc)

    return wrapper


def load_backend(
    config_path: str | None,
    image_root: str | None = None,
    model: str | None = None,
    endpoint: str | None = None,
) -> Backend:
    if config_path is None:
        raise PipelineError("a backend config is required; pass --backend CONFIG.json")
    config_file = Path(config_path)
    data = json.loads(config_file.read_text(encoding="utf-8"))
    config = BackendConfig.from_json(data)
    updates: dict = {}
    if config.playlist_file and not Path(config.playlist_file).is_absolute():
        updates["playlist_file"] = str(config_file.parent / config.playlist_file)
    if image_root is not None and config.image_root is None:
        updates["image_root"] = image_root
    if model is not None:
        updates["model"] = model
    if endpoint is not None:
        updates["endpoint"] = endpoint
    if updates:
        config = dataclasses.replace(config, **updates)
    return make_backend(config)


def _read_profiles(path: str) -> list[ImageProfile]:
    profiles = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                profiles.append(ImageProfile.from_json(json.loads(line)))
    return profiles


def _emit(payload: dict, as_json: bool, summary: str) -> None:
    if as_json:
        click.echo(json.dumps(payload))
    else:
        click.echo(summary)


@click.group()
def main():
    """Synthesize multi-image reasoning data, run focused chains, review quality."""


@main.command("extract")
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--backend", "backend_path", type=click.Path(exists=True))
@click.option("--model", default=None)
@click.option("--endpoint", default=None)
@click.option("--quarantine", "quarantine_path", default=None, type=click.Path())
@click.option("--json", "as_json", is_flag=True, default=False)
@stage_errors
def extract_cmd(images_dir, out_path, backend_path, model, endpoint, quarantine_path, as_json):
    """Stage 1: build one profile per image in a directory."""
    backend = load_backend(backend_path, image_root=images_dir, model=model, endpoint=endpoint)
    refs = scan_image_dir(images_dir)
    if not refs:
        raise PipelineError(f"no image files found under {images_dir}")
    result = extract.extract_profiles(refs, backend, store_root=images_dir)
    dataset.write_jsonl([p.to_json() for p in result.profiles], out_path)
    dataset.append_quarantine(result.quarantined, quarantine_path or (out_path + ".quarantine"))
    _emit(
        {"profiles": len(result.profiles), "quarantined": len(result.quarantined), "out": out_path},
        as_json,
        f"extracted {len(result.profiles)} profiles ({len(result.quarantined)} quarantined) -> {out_path}",
    )


@main.command("connect")
@click.option("--profiles", "profiles_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--group-size", default=connect_mod.DEFAULT_GROUP_SIZE, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--backend", "backend_path", type=click.Path(exists=True))
@click.option("--model", default=None)
@click.option("--endpoint", default=None)
@click.option("--json", "as_json", is_flag=True, default=False)
@stage_errors
def connect_cmd(profiles_path, out_path, group_size, seed, backend_path, model, endpoint, as_json):
    """Stage 2: propose candidate related pairs among profiles."""
    backend = load_backend(backend_path, model=model, endpoint=endpoint)
    profiles = _read_profiles(profiles_path)
    result = connect_mod.connect(profiles, backend, group_size=group_size, seed=seed)
    rows = [
        {"i": i, "j": j, "group_id": result.group_of_pair[(i, j)]} for i, j in result.pairs
    ]
    dataset.write_jsonl(rows, out_path)
    _emit(
        {"pairs": len(rows), "dropped": result.dropped, "out": out_path},
        as_json,
        f"proposed {len(rows)} pairs ({result.dropped} dropped) -> {out_path}",
    )


@main.command("annotate")
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--profiles", "profiles_path", required=True, type=click.Path(exists=True))
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--backend", "backend_path", type=click.Path(exists=True))
@click.option("--model", default=None)
@click.option("--endpoint", default=None)
@click.option("--seed", default=None, type=int, help="Recorded in graph provenance only.")
@click.option("--json", "as_json", is_flag=True, default=False)
@stage_errors
def annotate_cmd(pairs_path, profiles_path, images_dir, out_path, backend_path, model, endpoint, seed, as_json):
    """Stage 3: annotate candidate pairs into a typed relevance graph."""
    backend = load_backend(backend_path, image_root=images_dir, model=model, endpoint=endpoint)
    profiles = _read_profiles(profiles_path)
    pairs = []
    with open(pairs_path, "r", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                row = json.loads(line)
                pairs.append((row["i"], row["j"]))
    provenance = Provenance(
        models=(("annotate", backend.config.model_for("annotate")),) if backend.config.model else (),
        seed=seed,
    )
    result = annotate_edges(profiles, pairs, backend, store_root=images_dir, provenance=provenance)
    write_graph(result.graph, out_path)
    _emit(
        {
            "nodes": len(result.graph.nodes),
            "edges": len(result.graph.edges),
            "dropped_unrelated": result.dropped_unrelated,
            "failed": len(result.quarantined),
            "out": out_path,
        },
        as_json,
        f"graph with {len(result.graph.nodes)} nodes / {len(result.graph.edges)} edges -> {out_path}",
    )


def _parse_lengths(spec_text: str | None) -> LengthDistribution:
    if not spec_text:
        return LengthDistribution()
    weights = tuple(float(w) for w in spec_text.split(","))
    return LengthDistribution(lengths=tuple(range(1, len(weights) + 1)), weights=weights)


@main.command("synthesize")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--count", default=10, show_default=True, help="Number of reasoning paths to sample.")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--lengths", "lengths_spec", default=None, help="Comma-separated weights for path lengths 1..N.")
@click.option("--backend", "backend_path", type=click.Path(exists=True))
@click.option("--model", default=None)
@click.option("--endpoint", default=None)
@click.option("--quarantine", "quarantine_path", default=None, type=click.Path())
@click.option("--json", "as_json", is_flag=True, default=False)
@stage_errors
def synthesize_cmd(
    graph_path, count, seed, out_path, lengths_spec, backend_path, model, endpoint, quarantine_path, as_json
):
    """Stage 4: sample paths and generate question records."""
    backend = load_backend(backend_path, model=model, endpoint=endpoint)
    graph = read_graph(graph_path)
    distribution = _parse_lengths(lengths_spec)
    rng = Rng(seed)
    source = Path(graph_path).name

    records = []
    quarantined: list[QuarantineEntry] = []
    skipped_paths = 0
    for path_no in range(count):
        path = None
        for _ in range(_PATH_RETRIES):
            k = sample_length(distribution, rng)
            try:
                path = sample_path(graph, k, rng)
                break
            except NoPathFoundError:
                continue
        if path is None:
            skipped_paths += 1
            continue
        try:
            new_records, drop_reasons = question_mod.synthesize_records(
                path, graph, backend, source=source, seed=seed
            )
        except ParseError as exc:
            quarantined.append(
                QuarantineEntry(item_id=f"path-{path_no}", stage="question", raw="", error=str(exc))
            )
            continue
        records.extend(new_records)
        quarantined.extend(
            QuarantineEntry(item_id=f"path-{path_no}", stage="question", raw="", error=reason)
            for reason in drop_reasons
        )
    dataset.write_records(records, out_path)
    dataset.append_quarantine(quarantined, quarantine_path or (out_path + ".quarantine"))
    _emit(
        {
            "records": len(records),
            "paths_skipped": skipped_paths,
            "drops": len(quarantined),
            "out": out_path,
        },
        as_json,
        f"synthesized {len(records)} records ({skipped_paths} paths skipped) -> {out_path}",
    )


@main.command("chain")
@click.option("--question", "question_text", required=True)
@click.option("--images", "images_spec", required=True, help="Comma-separated image file paths.")
@click.option("--max-steps", default=chain_mod.DEFAULT_MAX_STEPS, show_default=True)
@click.option("--no-stop-forcing", is_flag=True, default=False)
@click.option("--backend", "backend_path", type=click.Path(exists=True))
@click.option("--model", default=None)
@click.option("--endpoint", default=None)
@click.option("--out", "out_path", default=None, type=click.Path(), help="Append the trace to this JSONL file.")
@stage_errors
def chain_cmd(question_text, images_spec, max_steps, no_stop_forcing, backend_path, model, endpoint, out_path):
    """Run the focused reasoning chain on a question and print the trace."""
    paths = [Path(p.strip()) for p in images_spec.split(",") if p.strip()]
    if not paths:
        raise PipelineError("--images must list at least one file")
    for p in paths:
        if not p.is_file():
            raise PipelineError(f"image file {p} does not exist")
    try:
        root = Path(_common_image_root(paths))
    except ValueError as exc:
        raise PipelineError(str(exc)) from exc
    refs = [image_ref_for_file(p, root) for p in paths]
    backend = load_backend(backend_path, image_root=str(root), model=model, endpoint=endpoint)
    config = chain_mod.ChainConfig(max_steps=max_steps, stop_forcing=not no_stop_forcing)
    trace = chain_mod.run_chain(question_text, refs, backend, config)
    if out_path:
        with open(out_path, "a", encoding="utf-8") as handle:
            handle.write(canonical_json(trace.to_json()) + "\n")
    click.echo(json.dumps(trace.to_json(), indent=2, ensure_ascii=False))


def _common_image_root(paths: list[Path]) -> str:
    import os

    return os.path.commonpath([str(p.resolve().parent) for p in paths])


@main.command("validate")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True, default=False)
@stage_errors
def validate_cmd(in_path, as_json):
    """Check every line of a shard against the record schema."""
    records, errors = dataset.read_records(in_path)
    payload = {
        "records": len(records),
        "errors": [{"line": e.line, "error": e.error} for e in errors],
    }
    _emit(payload, as_json, f"{len(records)} valid records, {len(errors)} invalid lines")
    if errors:
        sys.exit(1)


@main.command("stats")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", default=None, type=click.Path())
@stage_errors
def stats_cmd(in_path, out_path):
    """Corpus statistics as JSON (stdout or --out file)."""
    records, _ = dataset.read_records(in_path)
    payload = dataset.stats(records).to_json()
    text = json.dumps(payload, indent=2)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
    else:
        click.echo(text)


@main.command("sample")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--n", "n", required=True, type=int)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--json", "as_json", is_flag=True, default=False)
@stage_errors
def sample_cmd(in_path, n, seed, out_path, as_json):
    """Uniform random subset of a shard, without replacement."""
    records, _ = dataset.read_records(in_path)
    subset = dataset.sample_subset(records, n, seed)
    dataset.write_records(subset, out_path)
    _emit({"records": len(subset), "out": out_path}, as_json, f"sampled {len(subset)} records -> {out_path}")


@main.command("export")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--json", "as_json", is_flag=True, default=False)
@stage_errors
def export_cmd(in_path, out_path, as_json):
    """Export a shard to the conversation training format."""
    records, _ = dataset.read_records(in_path)
    documents = dataset.export_conversations(records)
    dataset.write_jsonl(documents, out_path)
    _emit({"documents": len(documents), "out": out_path}, as_json, f"exported {len(documents)} documents -> {out_path}")


@main.group("review")
def review_group():
    """Human review service and reporting."""


def _load_review_set(dataset_path: str, sample: int | None, seed: int):
    records, errors = dataset.read_records(dataset_path)
    if errors:
        raise PipelineError(f"dataset has {len(errors)} invalid lines; run validate first")
    if not records:
        raise PipelineError("dataset is empty")
    n = len(records) if sample is None else sample
    return quality.stratified_sample(records, n, seed)


@review_group.command("serve")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--sample", default=None, type=int, help="Review set size (default: whole dataset).")
@click.option("--seed", default=0, show_default=True)
@click.option("--port", default=8799, show_default=True)
@click.option("--store", "store_path", default="judgments.jsonl", show_default=True, type=click.Path())
@click.option("--images", "images_dir", default=None, type=click.Path(exists=True, file_okay=False))
@click.option("--static", "static_dir", default=None, type=click.Path(exists=True, file_okay=False))
@click.option("--raters", default=3, show_default=True)
@stage_errors
def review_serve_cmd(dataset_path, sample, seed, port, store_path, images_dir, static_dir, raters):
    """Serve review items, accept judgments, expose the agreement report."""
    review_set = _load_review_set(dataset_path, sample, seed)
    state = service.ReviewState(
        review_set=review_set,
        store=quality.JudgmentStore(store_path),
        image_root=images_dir,
        n_raters=raters,
        static_dir=static_dir,
    )
    server = service.build_server(state, port=port)
    click.echo(f"review service on http://127.0.0.1:{server.server_address[1]} ({len(review_set)} items)", err=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()


@review_group.command("report")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--sample", default=None, type=int)
@click.option("--seed", default=0, show_default=True)
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--raters", default=3, show_default=True)
@stage_errors
def review_report_cmd(dataset_path, sample, seed, store_path, raters):
    """Agreement report computed directly from the judgment log."""
    review_set = _load_review_set(dataset_path, sample, seed)
    store = quality.JudgmentStore(store_path)
    review_ids = [record.id for record in review_set]
    try:
        report = quality.agreement_report(store.all(), review_ids, raters).to_json()
    except PipelineError:
        report = {
            "n_items": 0,
            "n_raters": raters,
            "validity_rate": None,
            "kappa": None,
            "correct_count_histogram": {},
            "incomplete": len(review_ids),
        }
    click.echo(json.dumps(report, indent=2))


if __name__ == "__main__":
    main()
