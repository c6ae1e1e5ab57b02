# tests/test_main.py
"""Tests für den Haupteinstiegspunkt und die Kommandozeile.

TESTBASIS (ISTQB):
- Anforderung: Unterbefehle run/sweep/synth/stats/report, Exitcodes
  0 (Erfolg), 1 (harter Fehler), 130 (Abbruch)
- Modul: pimstack.main
- Funktionen: main(), build_arg_parser(), cmd_*()

TESTVERFAHREN:
- Äquivalenzklassen: gültige Aufrufe, fehlende Dateien, unbekannte Werte
- Szenariotest: synth → stats → run → sweep → report über tmp_path
- Fehlerbehandlung: KeyboardInterrupt, ValueError
"""
import json

import pytest

import pimstack.main as cli
from pimstack.harness.report import CELLS_CSV, SUMMARY_FILE


@pytest.fixture
def synth_file(tmp_path):
    """Kleiner traceB-Trace auf der Platte (12 Requests)."""
    path = tmp_path / "trace.jsonl"
    assert cli.main(["synth", "--preset", "traceB", "--requests", "12", "--seed", "3", "--out", str(path)]) == 0
    return path


# ===============================================================================
# TESTGRUPPE 1: Parser
# ===============================================================================

@pytest.mark.unit
class TestArgParser:
    """Tests für build_arg_parser()."""

    def test_subcommands_bind_handlers(self):
        """GIVEN: Parser, WHEN: jeder Unterbefehl, THEN: passender Handler."""
        p = cli.build_arg_parser()
        assert p.parse_args(["run"]).func is cli.cmd_run
        assert p.parse_args(["sweep", "--kind", "ablation"]).func is cli.cmd_sweep
        assert p.parse_args(["synth", "--out", "x.jsonl"]).func is cli.cmd_synth
        assert p.parse_args(["stats", "t.jsonl"]).func is cli.cmd_stats
        assert p.parse_args(["report", "out"]).func is cli.cmd_report

    def test_sweep_lists(self):
        args = cli.build_arg_parser().parse_args(["sweep", "--modes", "TokenStack", "AttAcc", "--qps", "1", "2"])
        assert args.modes == ["TokenStack", "AttAcc"]
        assert args.qps_list == [1.0, 2.0]
        assert args.kind == "modes"

    def test_synth_requires_out(self):
        with pytest.raises(SystemExit):
            cli.build_arg_parser().parse_args(["synth"])

    def test_unknown_sweep_kind_rejected(self):
        with pytest.raises(SystemExit):
            cli.build_arg_parser().parse_args(["sweep", "--kind", "everything"])

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--version"])
        assert exc.value.code == 0
        assert cli.__version__ in capsys.readouterr().out


# ===============================================================================
# TESTGRUPPE 2: Exitcodes
# ===============================================================================

@pytest.mark.unit
class TestExitCodes:
    """Tests für die Fehlerabbildung in main()."""

    def test_missing_config_returns_one(self, tmp_path):
        assert cli.main(["run", "--config", str(tmp_path / "missing.ini")]) == 1

    def test_unknown_model_returns_one(self, synth_file, tmp_path):
        assert cli.main(["run", "--model", "GPT-9000", "--trace", str(synth_file), "--out", str(tmp_path)]) == 1

    def test_missing_report_dir_returns_one(self, tmp_path):
        assert cli.main(["report", str(tmp_path / "nothing")]) == 1

    def test_keyboard_interrupt_returns_130(self, monkeypatch, tmp_path):
        def _abort(args):
            raise KeyboardInterrupt

        monkeypatch.setattr(cli, "cmd_synth", _abort)
        assert cli.main(["synth", "--out", str(tmp_path / "t.jsonl")]) == 130


# ===============================================================================
# TESTGRUPPE 3: Szenario über tmp_path
# ===============================================================================

@pytest.mark.integration
class TestWorkflow:
    """synth → stats → run → sweep → report."""

    def test_stats_writes_json(self, synth_file, tmp_path):
        out = tmp_path / "stats.json"
        assert cli.main(["stats", str(synth_file), "--out", str(out)]) == 0
        data = json.loads(out.read_text(encoding="utf-8"))
        assert data["requests"] == 12
        assert data["mean_prompt"] > 0

    def test_run_writes_metrics(self, synth_file, tmp_path):
        out = tmp_path / "run"
        rc = cli.main(["run", "--model", "Qwen3-4B", "--trace", str(synth_file), "--mode", "TokenStack",
                       "--qps", "2", "--out", str(out), "--events"])
        assert rc == 0
        metrics = json.loads((out / "metrics.json").read_text(encoding="utf-8"))
        assert metrics["feasible"] is True
        assert metrics["mode"] == "TokenStack"
        assert (out / "events.jsonl").is_file()

    def test_infeasible_run_still_succeeds(self, synth_file, tmp_path):
        """Erwartung: OOM ist ein Ergebnis, kein Fehler → Exitcode 0."""
        out = tmp_path / "oom"
        assert cli.main(["run", "--model", "GPT-175B", "--trace", str(synth_file), "--mode", "Uniform",
                         "--qps", "1", "--out", str(out)]) == 0
        assert json.loads((out / "metrics.json").read_text(encoding="utf-8"))["feasible"] is False

    def test_sweep_then_report(self, synth_file, tmp_path):
        out = tmp_path / "sweep"
        rc = cli.main(["sweep", "--model", "Qwen3-4B", "--trace", str(synth_file),
                       "--modes", "TokenStack", "AttAcc", "--qps", "1", "2", "--out", str(out)])
        assert rc == 0
        assert (out / SUMMARY_FILE).is_file()

        again = tmp_path / "again"
        assert cli.main(["report", str(out), "--out", str(again)]) == 0
        assert (again / CELLS_CSV).read_bytes() == (out / CELLS_CSV).read_bytes()
