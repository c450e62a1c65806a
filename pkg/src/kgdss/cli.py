"""Command line: ingestion, review, direct evaluation, asks, and serving.

Exit codes: 0 success, 1 engine error, 2 usage error.
"""
from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .config import Config, load_config
from .construction import ReviewFile, apply_review, chunk_document, extract
from .errors import KgdssError
from .fol import parse_query
from .llm import Transcript
from .orchestrator import GroundedAnswer, ask, eval_trace
from .retrieval import build_index
from .store import TripleStore, load, save


def engine_errors(f):
    """Engine failures exit 1 with a one-line message; usage errors stay 2."""
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except KgdssError as exc:
            stage = f" [{exc.stage}]" if exc.stage else ""
            click.echo(f"error{stage}: {exc}", err=True)
            sys.exit(1)
    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Config file (JSON); env vars KGDSS_* override.")
@click.pass_context
def cli(ctx, config_path):
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path


def _config(ctx) -> Config:
    try:
        return load_config(ctx.obj.get("config_path"))
    except KgdssError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


def _open_kb(config: Config, path: str | None = None) -> TripleStore:
    kb_path = path or config.kb_path
    if not kb_path:
        raise KgdssError("no KB path: pass a path or set kb_path in the config")
    return load(kb_path, config.schema_path)


def _print_stats(store: TripleStore) -> None:
    click.echo(f"triples:   {len(store)}")
    click.echo(f"entities:  {len(store.entity_set())}")
    click.echo(f"relations: {len(store.relation_set())}")
    click.echo(f"sources:   {len(store.source_set())}")


@cli.group()
def kb():
    """Knowledge-base file operations."""


@kb.command("load")
@click.argument("src", type=click.Path(exists=True, dir_okay=False))
@click.option("--schema", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
@engine_errors
def kb_load(ctx, src, schema):
    """Validate SRC and install it as the configured KB."""
    config = _config(ctx)
    store = load(src, schema)
    if config.kb_path and str(Path(config.kb_path)) != str(Path(src)):
        save(store, config.kb_path, config.schema_path)
        click.echo(f"installed {src} -> {config.kb_path}")
    _print_stats(store)


@kb.command("save")
@click.argument("dest", type=click.Path(dir_okay=False))
@click.pass_context
@engine_errors
def kb_save(ctx, dest):
    """Write the configured KB to DEST."""
    config = _config(ctx)
    store = _open_kb(config)
    save(store, dest)
    click.echo(f"saved {len(store)} triples to {dest}")


@kb.command("stats")
@click.argument("path", required=False, type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@engine_errors
def kb_stats(ctx, path):
    """Triple/entity/relation/source counts."""
    _print_stats(_open_kb(_config(ctx), path))


@cli.command()
@click.option("--source", "source_doc", required=True, help="Source document id.")
@click.option("--text", default=None, help="Inline document text.")
@click.option("--file", "file_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Document file to ingest.")
@click.option("--chunk-size", default=600, show_default=True)
@click.option("--review-out", type=click.Path(dir_okay=False), default=None,
              help="Write the unverdicted review sheet here.")
@click.pass_context
@engine_errors
def ingest(ctx, source_doc, text, file_path, chunk_size, review_out):
    """Extract triples from a document via the LLM; nothing enters the KB
    until the review sheet is applied."""
    if (text is None) == (file_path is None):
        raise click.UsageError("pass exactly one of --text or --file")
    config = _config(ctx)
    document = text if text is not None else Path(file_path).read_text(encoding="utf-8")
    backend = config.make_backend()
    templates = config.make_templates()
    transcript = Transcript(path=config.transcript_path)
    batches = [extract(chunk, source_doc, backend, templates, transcript)
               for chunk in chunk_document(document, chunk_size)]
    parsed = sum(len(b.parsed) for b in batches)
    rejects = sum(len(b.rejects) for b in batches)
    click.echo(f"chunks: {len(batches)}  parsed: {parsed}  rejects: {rejects}")
    for batch in batches:
        for chunk, reason in batch.rejects:
            click.echo(f"  reject ({reason}): {chunk[:60]}", err=True)
    if review_out:
        ReviewFile.from_batches(batches).save(review_out)
        click.echo(f"review sheet: {review_out}")


@cli.group()
def review():
    """Human review workflow."""


@review.command("apply")
@click.argument("review_path", type=click.Path(exists=True, dir_okay=False))
@click.pass_context
@engine_errors
def review_apply(ctx, review_path):
    """Apply a fully-verdicted review sheet to the configured KB."""
    config = _config(ctx)
    store = _open_kb(config)
    sheet = ReviewFile.load(review_path)
    added, edited, rejected = apply_review(store, sheet)
    for t in store.triples():
        for warning in store.schema.warnings_for(t):
            click.echo(f"warning: {warning}", err=True)
    if config.kb_path:
        save(store, config.kb_path, config.schema_path)
    click.echo(f"added: {added}  edited: {edited}  rejected: {rejected}")


@cli.command("eval")
@click.argument("query")
@click.option("--universe", multiple=True, help="Restrict results to these entities.")
@click.option("--trace", "show_trace", is_flag=True, help="Print the step table.")
@click.pass_context
@engine_errors
def eval_cmd(ctx, query, universe, show_trace):
    """Evaluate a logical query against the KB (no LLM calls)."""
    config = _config(ctx)
    store = _open_kb(config)
    q = parse_query(query)
    entities, trace = eval_trace(store, q, config.make_templates(),
                                 list(universe) if universe else None)
    for label in sorted(entities):
        click.echo(label)
    if show_trace:
        _print_steps(trace)


@cli.command("ask")
@click.argument("question")
@click.option("--mode", type=click.Choice(["native", "llm-chain"]), default=None)
@click.option("-k", "top_k_opt", type=int, default=None, help="Retrieval top-k.")
@click.option("--depth", type=int, default=None, help="Neighborhood expansion depth.")
@click.option("--trace", "show_trace", is_flag=True, help="Print the step table.")
@click.option("--json", "as_json", is_flag=True, help="Emit the full response object.")
@click.pass_context
@engine_errors
def ask_cmd(ctx, question, mode, top_k_opt, depth, show_trace, as_json):
    """Run the full pipeline: retrieve, decompose, reason, answer with citations."""
    config = _config(ctx)
    store = _open_kb(config)
    embedder = config.make_embedder()
    index = build_index(store, embedder)
    opts = config.ask_options()
    if mode:
        opts.mode = mode
    if top_k_opt:
        opts.k = top_k_opt
    if depth is not None:
        opts.expand_depth = depth
    answer = ask(store, index, embedder, config.make_backend(),
                 config.make_templates(), question, opts,
                 Transcript(path=config.transcript_path))
    if as_json:
        click.echo(json.dumps(answer.to_dict(), ensure_ascii=False, indent=2))
        return
    _print_answer(answer, show_trace)


def _print_answer(answer: GroundedAnswer, show_trace: bool) -> None:
    click.echo(answer.text)
    if answer.citations:
        click.echo("\ncitations:")
        for c in answer.citations:
            clause = f" — {c.clause}" if c.clause else ""
            click.echo(f"  [{c.triple_id}] {c.source_doc or '?'}{clause}")
    if show_trace:
        trace = answer.trace
        click.echo(f"\nmode: {trace.mode}" + ("  (unstructured fallback)"
                                              if trace.fallback else ""))
        if trace.logical_query:
            click.echo(f"logical query: {trace.logical_query}")
        _print_steps(trace)
        click.echo(f"final entities: {', '.join(sorted(trace.final_entities)) or '-'}")


def _print_steps(trace) -> None:
    for i, step in enumerate(trace.steps, start=1):
        result = ", ".join(sorted(step.result)) if step.result is not None else "-"
        click.echo(f"  step {i} [{step.op_kind}] -> {result}")
        if step.discarded:
            click.echo(f"    discarded: {', '.join(step.discarded)}")


@cli.command()
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.pass_context
@engine_errors
def serve(ctx, host, port):
    """Serve the HTTP API."""
    import uvicorn

    from .api import EngineState, create_app

    config = _config(ctx)
    state = EngineState.from_config(config)
    listen_host, _, listen_port = config.listen.partition(":")
    uvicorn.run(create_app(state),
                host=host or listen_host or "127.0.0.1",
                port=port or int(listen_port or 8011),
                log_level="warning")


def main():
    cli(obj={})


if __name__ == "__main__":
    main()
