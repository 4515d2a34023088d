"""CLI surface: exit codes, error records, config handling, end-to-end run."""

import json

import pytest
from click.testing import CliRunner

from stylecurator.cli import PipelineConfig, main
from stylecurator.curriculum import read_stage
from stylecurator.errors import ConfigError
from stylecurator.records import dumps_manifest, read_manifest, write_manifest

from conftest import quick_triplet
from pipeline_fixture import build_inputs, run_pipeline


@pytest.fixture
def runner():
    return CliRunner()


def test_validate_good_manifest_exits_zero(tmp_path, runner):
    path = tmp_path / "good.ndjson"
    write_manifest(path, [quick_triplet(i) for i in range(3)])
    result = runner.invoke(main, ["validate", "--manifest", str(path)])
    assert result.exit_code == 0


def test_validate_violations_exit_one_with_records(tmp_path, runner):
    t = quick_triplet(0)
    path = tmp_path / "dup.ndjson"
    path.write_text(dumps_manifest([t, t]), encoding="utf-8")
    result = runner.invoke(main, ["--json", "validate", "--manifest", str(path)])
    assert result.exit_code == 1
    payload = json.loads(result.output.splitlines()[0])
    assert payload["ok"] is False


def test_unreadable_manifest_prints_error_record(tmp_path, runner):
    result = runner.invoke(main, ["validate", "--manifest", str(tmp_path / "missing.ndjson")])
    assert result.exit_code == 1
    record = json.loads(result.output.strip().splitlines()[-1])
    assert record["error"] == "ManifestError"
    assert "cannot read" in record["message"]


def test_unknown_flag_is_usage_error(runner):
    result = runner.invoke(main, ["validate", "--nope"])
    assert result.exit_code == 2


def test_compose_without_labels_fails_with_stage2_error(tmp_path, runner):
    collected = tmp_path / "collected.ndjson"
    write_manifest(collected, [quick_triplet(i) for i in range(6)])
    result = runner.invoke(
        main,
        [
            "curriculum", "compose",
            "--collected", str(collected),
            "--r-high", "0.8",
            "--out-dir", str(tmp_path / "stages"),
        ],
    )
    assert result.exit_code == 1
    record = json.loads(result.output.strip().splitlines()[-1])
    assert record["error"] == "CurriculumError"
    assert "stage-2 requires curated labels" in record["message"]


def test_plan_prints_structured_lines(runner):
    result = runner.invoke(main, ["plan", "--content-w", "1024", "--content-h", "768"])
    assert result.exit_code == 0
    line = json.loads(result.output.strip())
    assert line == {"inference": {"output_w": 1024, "output_h": 768, "style_side": 768}}

    result = runner.invoke(
        main,
        ["plan", "--train-w", "2048", "--train-h", "1536", "--template", "style", "--arg", "Van-Gogh"],
    )
    lines = [json.loads(l) for l in result.output.strip().splitlines()]
    assert lines[0] == {"training": {"width": 1360, "height": 1024}}
    assert lines[1] == {"prompt": "Transfer Figure 1 into Van-Gogh style."}


def test_plan_without_work_is_usage_error(runner):
    result = runner.invoke(main, ["plan"])
    assert result.exit_code == 2


def test_score_pair_inline_vectors(runner):
    result = runner.invoke(
        main,
        [
            "score", "pair",
            "--style-emb", "[3, 4]",
            "--result-emb", "[4, 3]",
            "--text-emb", "[1, 0]",
            "--result-clip-emb", "[1, 0]",
        ],
    )
    assert result.exit_code == 0
    row = json.loads(result.output.strip())
    assert row["csd_score"] == pytest.approx(0.96)
    assert row["clip_score"] == pytest.approx(1.0)
    assert row["cpc_at"] == pytest.approx(1.0)
    assert "aesthetic" not in row


def test_score_pair_from_file(tmp_path, runner):
    vec = tmp_path / "v.json"
    vec.write_text("[1, 0, 0]", encoding="utf-8")
    result = runner.invoke(
        main,
        ["score", "pair", "--style-emb", f"@{vec}", "--result-emb", "[0, 1, 0]"],
    )
    assert json.loads(result.output.strip())["csd_score"] == 0.0


def test_config_file_defaults_and_unknown_keys(tmp_path, runner):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"metric": {"clip_scale": 2.5}}), encoding="utf-8")
    result = runner.invoke(
        main,
        [
            "--config", str(cfg),
            "score", "pair",
            "--style-emb", "[1, 0]",
            "--result-emb", "[1, 0]",
            "--text-emb", "[1, 0]",
            "--result-clip-emb", "[1, 0]",
        ],
    )
    assert json.loads(result.output.strip())["clip_score"] == pytest.approx(2.5)

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"metrics": {}}), encoding="utf-8")
    result = runner.invoke(main, ["--config", str(bad), "plan", "--content-w", "1", "--content-h", "1"])
    assert result.exit_code == 1
    record = json.loads(result.output.strip().splitlines()[-1])
    assert record["error"] == "ConfigError"


def test_config_rejects_unknown_section_keys(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"stage": {"r_high": 0.9, "bogus": 1}}), encoding="utf-8")
    with pytest.raises(ConfigError, match="bogus"):
        PipelineConfig.load(cfg)


def test_full_mini_pipeline(tmp_path):
    artifacts = run_pipeline(tmp_path / "run")
    collected = read_manifest(artifacts["collected"])
    assert len(collected) == 60  # 5 clusters x 4 images -> 5 * (4*3)
    synthetic = read_manifest(artifacts["synthetic"])
    assert len(synthetic) == 20
    d1 = read_stage(artifacts["d1"])
    d2 = read_stage(artifacts["d2"])
    d3 = read_stage(artifacts["d3"])
    assert len(d1.entries) == 60
    assert len(d2.entries) == 25  # 20 high + floor(20*0.25)=5 low
    assert len(d3.entries) == 27  # + floor(0.1*25/0.9)=2 synthetic
    assert set(d2.entries) <= set(d1.entries)
    table = json.loads(artifacts["table"].read_text())
    assert len(table["rows"]) == 20
    assert artifacts["report_md"].exists()


def test_ingest_summary_json(tmp_path, runner):
    inputs = build_inputs(tmp_path)
    out_catalog = tmp_path / "catalog.ndjson"
    result = runner.invoke(
        main,
        [
            "--json", "ingest",
            "--root", str(inputs["root"]),
            "--clusters", str(inputs["index"]),
            "--captions", str(inputs["captions"]),
            "--embeddings", str(inputs["embeddings"]),
            "--out-catalog", str(out_catalog),
        ],
        catch_exceptions=False,
    )
    assert result.exit_code == 0
    summary = json.loads(result.output.strip())
    assert summary["images"] == 45  # 20 targets + 20 contents + 5 styles
    assert summary["clusters"] == 5
    assert summary["embeddings"] == 20 + 40 + 5  # csd targets+styles, clip_image, clip_text
