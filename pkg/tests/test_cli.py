import json

from click.testing import CliRunner

from dysect.cli import main
from dysect.extractor.parsing import ExtractionResult
from dysect.kb.store import KnowledgeBase
from dysect.kb.types import UNKNOWN_TYPE
from dysect.orchestrator import RunReport

from test_eval import DOCRED_SAMPLE


def write_corpus(tmp_path):
    path = tmp_path / "corpus.jsonl"
    lines = [json.dumps({"doc_id": f"d{i}", "text": f"document {i}"}) for i in range(3)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_loop_runs_offline_and_writes_outputs(tmp_path):
    corpus = write_corpus(tmp_path)
    snap_dir = tmp_path / "out"
    report_path = tmp_path / "report.json"
    result = CliRunner().invoke(main, [
        "loop", "--corpus", str(corpus), "--batch", "2", "--inner", "1",
        "--snapshot-out", str(snap_dir), "--report-out", str(report_path),
    ])
    assert result.exit_code == 0, result.output
    assert "done:" in result.output
    restored = KnowledgeBase.restore(snap_dir / "kb.jsonl")
    report = RunReport.from_dict(json.loads(report_path.read_text()))
    assert report.snapshot_hash == restored.snapshot_hash()
    assert len(report.extraction_results) == 3
    assert len(report.iteration_records) == 2  # 2 batches x 1 inner pass


def test_loop_accepts_snapshot_in(tmp_path):
    corpus = write_corpus(tmp_path)
    kb = KnowledgeBase()
    snap = tmp_path / "seed.jsonl"
    kb.snapshot(snap)
    result = CliRunner().invoke(main, [
        "loop", "--corpus", str(corpus), "--snapshot-in", str(snap),
    ])
    assert result.exit_code == 0, result.output


def test_eval_command_scores_report(tmp_path):
    gold_path = tmp_path / "gold.json"
    gold_path.write_text(json.dumps(DOCRED_SAMPLE), encoding="utf-8")
    report = RunReport(
        feedback_mode="none",
        model="mock",
        extraction_results=[ExtractionResult(
            doc_id="The Razors Edge",
            raw_text="",
            triples=[("Moneytalks", UNKNOWN_TYPE, "producer",
                      "Bruce Fairbairn", UNKNOWN_TYPE)],
        )],
    )
    pred_path = tmp_path / "report.json"
    pred_path.write_text(report.to_json(), encoding="utf-8")
    out_base = tmp_path / "scores"
    result = CliRunner().invoke(main, [
        "eval", "--gold", str(gold_path), "--pred", str(pred_path),
        "--out", str(out_base),
    ])
    assert result.exit_code == 0, result.output
    assert "25.00" in result.output
    payload = json.loads((tmp_path / "scores.json").read_text())
    assert payload[0]["recall"] == 25.0
    assert "Recall" in (tmp_path / "scores.txt").read_text()
