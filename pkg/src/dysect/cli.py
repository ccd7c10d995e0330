"""Command-line entry points: run the extraction loop, score runs, serve the KB."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from dysect.confidence import ConfidenceConfig
from dysect.evaluation import MatcherConfig, ingest_docred, load_relation_labels, report_table, score
from dysect.extractor import Document, ExtractionSchema, ExtractionResult
from dysect.gateway import HttpGateway, MockGateway, RecordingGateway, ReplayGateway
from dysect.kb.store import KnowledgeBase
from dysect.orchestrator import LoopConfig, RunReport, run_outer

logger = logging.getLogger(__name__)

DEFAULT_CONCEPT_TYPES = ["PER", "ORG", "LOC", "TIME", "NUM", "MISC"]


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool):
    """DySECT: self-evolving extraction and curation toolkit."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )


def _load_corpus(path: Path) -> list[Document]:
    docs: list[Document] = []
    if path.is_dir():
        for f in sorted(path.glob("*.txt")):
            docs.append(Document(doc_id=f.stem, text=f.read_text(encoding="utf-8")))
    elif path.suffix == ".jsonl":
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                rec = json.loads(line)
                docs.append(Document(doc_id=rec["doc_id"], text=rec["text"]))
    else:
        # DocRED-format JSON: use reconstructed document text
        for g in ingest_docred(path):
            docs.append(Document(doc_id=g.doc_id, text=g.text))
    return docs


def _load_schema(schema_path: Path | None) -> ExtractionSchema:
    if schema_path is not None:
        cfg = json.loads(schema_path.read_text(encoding="utf-8"))
        return ExtractionSchema(
            allowed_concept_types=set(cfg["concept_types"]),
            allowed_relations=set(cfg["relations"]),
        )
    return ExtractionSchema(
        allowed_concept_types=set(DEFAULT_CONCEPT_TYPES),
        allowed_relations=set(load_relation_labels().values()),
    )


@main.command()
@click.option("--corpus", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--mode", type=click.Choice(["none", "positive", "negative"]), default="none")
@click.option("--inner", type=int, default=3, help="Inner iterations per batch.")
@click.option("--batch", type=int, default=8, help="Documents per outer iteration.")
@click.option("--seed", type=int, default=0)
@click.option("--model", default="mock")
@click.option("--lam", type=float, default=0.75, help="Noisy-or shrinkage factor.")
@click.option("--schema", "schema_path", type=click.Path(exists=True, path_type=Path))
@click.option("--snapshot-in", type=click.Path(exists=True, path_type=Path))
@click.option("--snapshot-out", type=click.Path(path_type=Path))
@click.option("--replay", type=click.Path(exists=True, path_type=Path),
              help="Serve completions from a recorded capture file.")
@click.option("--record", type=click.Path(path_type=Path),
              help="Capture gateway traffic to this file.")
@click.option("--provider-url", help="OpenAI-style endpoint base URL.")
@click.option("--report-out", type=click.Path(path_type=Path))
def loop(corpus, mode, inner, batch, seed, model, lam, schema_path, snapshot_in,
         snapshot_out, replay, record, provider_url, report_out):
    """Run the outer/inner extraction loop over a corpus."""
    docs = _load_corpus(corpus)
    if snapshot_in:
        kb = KnowledgeBase.restore(snapshot_in)
        kb.config.lam = lam
    else:
        kb = KnowledgeBase(config=ConfidenceConfig(lam=lam))

    if replay:
        gateway = ReplayGateway(replay)
    elif provider_url:
        gateway = HttpGateway(provider_url)
    else:
        click.echo("no provider configured; using an empty mock gateway", err=True)
        gateway = MockGateway()
    if record:
        gateway = RecordingGateway(gateway, record)

    cfg = LoopConfig(
        inner_iterations=inner,
        batch_size=batch,
        feedback_mode=mode,
        extraction_model=model,
        seed=seed,
    )
    report = run_outer(docs, kb, cfg, gateway, _load_schema(schema_path))

    if snapshot_out:
        snapshot_out.mkdir(parents=True, exist_ok=True)
        manifest = kb.snapshot(snapshot_out / "kb.jsonl")
        click.echo(f"snapshot: {manifest['path']} ({manifest['triples']} triples)")
    if report_out:
        report_out.write_text(report.to_json(), encoding="utf-8")
        click.echo(f"report: {report_out}")
    click.echo(
        f"done: {report.final_triples} triples, {report.final_concepts} concepts, "
        f"hash {report.snapshot_hash[:12]}"
    )


@main.command("eval")
@click.option("--gold", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--pred", type=click.Path(exists=True, path_type=Path), required=True,
              help="RunReport JSON produced by `loop --report-out`.")
@click.option("--matcher", type=click.Choice(["strict", "relaxed"]), default="strict")
@click.option("--out", "out_base", type=click.Path(path_type=Path),
              help="Write table to <out>.txt and <out>.json.")
def eval_cmd(gold, pred, matcher, out_base):
    """Score a run report against DocRED-format gold annotations."""
    gold_docs = ingest_docred(gold)
    run = RunReport.from_dict(json.loads(pred.read_text(encoding="utf-8")))
    predictions = [ExtractionResult.from_dict(r.to_dict()) for r in run.extraction_results]
    report = score(
        predictions,
        gold_docs,
        MatcherConfig(mode=matcher),
        model=run.model,
        mode=run.feedback_mode,
    )
    text, payload = report_table([report])
    click.echo(text)
    if out_base:
        Path(str(out_base) + ".txt").write_text(text + "\n", encoding="utf-8")
        Path(str(out_base) + ".json").write_text(payload, encoding="utf-8")


@main.command()
@click.option("--snapshot", type=click.Path(exists=True, path_type=Path),
              help="KB snapshot to serve; omit for an empty KB.")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--token-file", type=click.Path(exists=True, path_type=Path),
              help='JSON: {"<token>": {"actor": ..., "role": "viewer"|"curator"}}')
def serve(snapshot, host, port, token_file):
    """Serve the KB inspection/curation API."""
    import uvicorn

    from dysect.service import AuthConfig, create_app

    kb = KnowledgeBase.restore(snapshot) if snapshot else KnowledgeBase()
    auth = AuthConfig.open()
    if token_file:
        raw = json.loads(Path(token_file).read_text(encoding="utf-8"))
        auth = AuthConfig(tokens={t: (v["actor"], v["role"]) for t, v in raw.items()})
    uvicorn.run(create_app(kb, auth), host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
