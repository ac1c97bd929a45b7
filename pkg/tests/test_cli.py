"""CLI: full pipeline, oracle, comparisons, flag docs, exit codes."""

from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from collage_forge.cli import main
from conftest import FIXTURE_SEED, PARK_STORY, build_fixture_collection


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def cli_pipeline(tmp_path_factory, runner):
    """prepare -> curate -> layout once; shared by the read-only tests."""
    base = tmp_path_factory.mktemp("cli")
    photos = build_fixture_collection(base / "photos")
    lib_dir, session_dir = base / "lib", base / "session"
    result = runner.invoke(main, ["prepare", "--collection", str(photos),
                                  "--out", str(lib_dir), "--backend", "mock",
                                  "--seed", str(FIXTURE_SEED)])
    assert result.exit_code == 0, result.output
    result = runner.invoke(main, ["curate", "--library", str(lib_dir),
                                  "--story", PARK_STORY, "--seed", str(FIXTURE_SEED),
                                  "--out", str(session_dir)])
    assert result.exit_code == 0, result.output
    result = runner.invoke(main, ["layout", "--session", str(session_dir)])
    assert result.exit_code == 0, result.output
    return base, photos, lib_dir, session_dir


class TestPipeline:
    def test_artifacts_exist(self, cli_pipeline):
        _, _, lib_dir, session_dir = cli_pipeline
        for path in (lib_dir / "library.json", lib_dir / "run_report.json",
                     session_dir / "session.json", session_dir / "presentation.json",
                     session_dir / "scene.json"):
            assert path.is_file(), path

    def test_export_bundle(self, cli_pipeline, runner, tmp_path):
        _, _, _, session_dir = cli_pipeline
        result = runner.invoke(main, ["export", "--session", str(session_dir),
                                      "--out", str(tmp_path / "bundle")])
        assert result.exit_code == 0, result.output
        assert (tmp_path / "bundle" / "preview.png").is_file()
        check = runner.invoke(main, ["import-check", "--bundle", str(tmp_path / "bundle")])
        assert check.exit_code == 0, check.output

    def test_oracle_zero_diffs(self, cli_pipeline, runner):
        _, _, _, session_dir = cli_pipeline
        result = runner.invoke(main, ["oracle", "--session", str(session_dir)])
        assert result.exit_code == 0, result.output
        assert "0 diffs" in result.output

    def test_rerun_matches_committed_artifacts(self, cli_pipeline, runner, tmp_path):
        base, photos, lib_dir, session_dir = cli_pipeline
        lib2, session2 = tmp_path / "lib2", tmp_path / "ses2"
        assert runner.invoke(main, ["prepare", "--collection", str(photos),
                                    "--out", str(lib2), "--backend", "mock",
                                    "--seed", str(FIXTURE_SEED)]).exit_code == 0
        assert runner.invoke(main, ["curate", "--library", str(lib2),
                                    "--story", PARK_STORY, "--seed", str(FIXTURE_SEED),
                                    "--out", str(session2)]).exit_code == 0
        assert runner.invoke(main, ["layout", "--session", str(session2)]).exit_code == 0
        for name, first_dir, second_dir in (
                ("library.json", lib_dir, lib2),
                ("session.json", session_dir, session2),
                ("presentation.json", session_dir, session2),
                ("scene.json", session_dir, session2)):
            assert (first_dir / name).read_bytes() == (second_dir / name).read_bytes(), name

    def test_story_from_file_and_stdin(self, cli_pipeline, runner, tmp_path):
        _, _, lib_dir, _ = cli_pipeline
        story_file = tmp_path / "story.txt"
        story_file.write_text(PARK_STORY + "\n")
        by_file = runner.invoke(main, ["curate", "--library", str(lib_dir),
                                       "--story", f"@{story_file}",
                                       "--seed", str(FIXTURE_SEED),
                                       "--out", str(tmp_path / "s1")])
        assert by_file.exit_code == 0, by_file.output
        by_stdin = runner.invoke(main, ["curate", "--library", str(lib_dir),
                                        "--story", "-", "--seed", str(FIXTURE_SEED),
                                        "--out", str(tmp_path / "s2")],
                                 input=PARK_STORY)
        assert by_stdin.exit_code == 0, by_stdin.output
        assert (tmp_path / "s1" / "session.json").read_bytes() == \
            (tmp_path / "s2" / "session.json").read_bytes()


class TestWeightsAndModes:
    def test_weights_echoed_and_heights_shift(self, cli_pipeline, runner, tmp_path):
        _, _, lib_dir, session_dir = cli_pipeline
        weighted_dir = tmp_path / "weighted"
        result = runner.invoke(main, ["curate", "--library", str(lib_dir),
                                      "--story", PARK_STORY,
                                      "--weights", "0.5,0.5,0.5",
                                      "--seed", str(FIXTURE_SEED),
                                      "--out", str(weighted_dir)])
        assert result.exit_code == 0, result.output
        session = json.loads((weighted_dir / "session.json").read_text())
        assert session["scoring"]["w_div"] == 0.5
        assert runner.invoke(main, ["layout", "--session", str(weighted_dir)]).exit_code == 0
        default_doc = json.loads((session_dir / "presentation.json").read_text())
        heavier_doc = json.loads((weighted_dir / "presentation.json").read_text())
        default_scores = default_doc["hierarchy"]["scores"]
        heavier_scores = heavier_doc["hierarchy"]["scores"]
        # larger weights scale every combined score up, heights follow monotonically
        for eid, record in default_scores.items():
            if record["s_total"] > 0:
                assert heavier_scores[eid]["s_total"] > record["s_total"]
                assert heavier_scores[eid]["height"] > record["height"]

    def test_keyword_mode_selects_central_only(self, cli_pipeline, runner, tmp_path):
        _, _, lib_dir, _ = cli_pipeline
        result = runner.invoke(main, ["--json", "curate", "--library", str(lib_dir),
                                      "--story", PARK_STORY, "--mode", "keyword-only",
                                      "--seed", str(FIXTURE_SEED),
                                      "--out", str(tmp_path / "kw")])
        assert result.exit_code == 0, result.output
        doc = json.loads(result.output)
        assert set(doc["central"]) == {"boy", "dog", "park"}
        assert doc["related"] == []

    def test_uniform_layout_heights(self, cli_pipeline, runner, tmp_path):
        _, _, _, session_dir = cli_pipeline
        out = tmp_path / "uniform.json"
        result = runner.invoke(main, ["layout", "--session", str(session_dir),
                                      "--present", "uniform", "--out", str(out)])
        assert result.exit_code == 0, result.output
        doc = json.loads(out.read_text())
        heights = {t["h"] for t in doc["layout"]["tiles"]}
        assert heights == {100.0}

    def test_compare_reports_all_variants(self, cli_pipeline, runner, tmp_path):
        _, _, lib_dir, _ = cli_pipeline
        out = tmp_path / "compare.json"
        result = runner.invoke(main, ["compare", "--library", str(lib_dir),
                                      "--story", PARK_STORY,
                                      "--seed", str(FIXTURE_SEED),
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        report = json.loads(out.read_text())
        variants = report["variants"]
        assert set(variants) == {"full-sized", "keyword-sized", "full-uniform"}
        assert variants["keyword-sized"]["related"] == 0
        assert variants["full-sized"]["related"] > 0
        assert variants["full-uniform"]["distinct_tile_heights"] == 1
        assert variants["full-sized"]["distinct_tile_heights"] > 1


class TestDiagnostics:
    SUBCOMMAND_FLAGS = {
        "prepare": ["--collection", "--out", "--backend", "--seed", "--confidence",
                    "--workers"],
        "curate": ["--library", "--story", "--mode", "--weights", "--backend",
                   "--seed", "--out"],
        "layout": ["--session", "--present", "--canvas-width", "--out", "--scene-out"],
        "export": ["--session", "--scene", "--out"],
        "oracle": ["--session", "--tolerance"],
        "compare": ["--library", "--story", "--backend", "--seed", "--out"],
        "import-check": ["--bundle"],
        "serve": ["--data", "--host", "--port"],
    }

    def test_help_documents_every_flag(self, runner):
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        for command, flags in self.SUBCOMMAND_FLAGS.items():
            assert command in result.output
            sub = runner.invoke(main, [command, "--help"])
            assert sub.exit_code == 0, command
            for flag in flags:
                assert flag in sub.output, f"{command} missing {flag}"

    def test_usage_error_exit_2(self, runner):
        result = runner.invoke(main, ["prepare"])  # missing required flags
        assert result.exit_code == 2

    def test_domain_error_exit_1(self, runner, tmp_path):
        (tmp_path / "empty").mkdir()
        result = runner.invoke(main, ["prepare", "--collection", str(tmp_path / "empty"),
                                      "--out", str(tmp_path / "lib")])
        assert result.exit_code == 1
        assert "error" in result.output.lower()

    def test_json_diagnostics(self, runner, tmp_path):
        (tmp_path / "empty").mkdir()
        result = runner.invoke(main, ["--json", "prepare",
                                      "--collection", str(tmp_path / "empty"),
                                      "--out", str(tmp_path / "lib")])
        assert result.exit_code == 1
        doc = json.loads(result.output)
        assert doc["error"] == "PrepareError"


class TestBackendEnvDefault:
    def test_backend_url_env_respected(self, runner, tmp_path, monkeypatch):
        from conftest import build_fixture_collection

        photos = build_fixture_collection(tmp_path / "photos")
        monkeypatch.setenv("COLLAGE_BACKEND_URL", "http://127.0.0.1:1")
        monkeypatch.setenv("COLLAGE_BACKEND_TIMEOUT_S", "0.2")
        result = runner.invoke(main, ["prepare", "--collection", str(photos),
                                      "--out", str(tmp_path / "lib")])
        # env pointed at a dead remote: the run fails with a transport
        # diagnostic naming that URL, proving the env default was consulted
        assert result.exit_code == 1
        assert "127.0.0.1:1" in result.output

    def test_explicit_flag_overrides_env(self, runner, tmp_path, monkeypatch):
        from conftest import build_fixture_collection

        photos = build_fixture_collection(tmp_path / "photos")
        monkeypatch.setenv("COLLAGE_BACKEND_URL", "http://127.0.0.1:1")
        result = runner.invoke(main, ["prepare", "--collection", str(photos),
                                      "--out", str(tmp_path / "lib"),
                                      "--backend", "mock", "--seed", "7"])
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_path / "lib" / "run_report.json").read_text())
        assert report["failed_images"] == 0
