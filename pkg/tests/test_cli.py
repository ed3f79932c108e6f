import pytest

from crids.cli import main
from crids.pipeline import EXIT_INFEASIBLE, EXIT_IO, EXIT_NO_SITES, EXIT_OK


@pytest.fixture(scope="module")
def assessed(synthetic_study, tmp_path_factory):
    out = tmp_path_factory.mktemp("assess")
    code = main(["assess", "--config", str(synthetic_study["config"]),
                 "--layers-dir", str(synthetic_study["layers"]), "--out", str(out)])
    assert code == EXIT_OK
    return out


def test_assess_writes_report_and_manifest(assessed):
    assert (assessed / "assessment.csv").exists()
    assert (assessed / "manifest.json").exists()
    assert len((assessed / "assessment.csv").read_text().splitlines()) == 1001


def test_summarize_prints_shares_and_figures(assessed, tmp_path, capsys):
    assert main(["summarize", str(assessed / "assessment.csv"), "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "below-0.1 = 80 (8.0%)" in out
    assert "below-0.5 = 320 (32.0%)" in out
    assert (tmp_path / "summary.csv").exists()
    assert (tmp_path / "index_histogram.png").stat().st_size > 0
    assert (tmp_path / "threshold_maps.png").stat().st_size > 0


def test_summarize_custom_thresholds(assessed, capsys):
    main(["summarize", str(assessed / "assessment.csv"), "--thresholds", "0.25", "--no-figures"])
    assert "below-0.25" in capsys.readouterr().out


def test_plan_budget_from_report(synthetic_study, assessed, tmp_path, capsys):
    code = main(["plan", "--config", str(synthetic_study["config"]), "--assessment",
                 str(assessed / "assessment.csv"), "--mode", "budget", "--budget", "0", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert "Optimal" in capsys.readouterr().out
    assert (tmp_path / "plan.csv").exists() and (tmp_path / "plan_manifest.json").exists()


def test_plan_threshold_infeasible_exit(synthetic_study, assessed, capsys):
    code = main(["plan", "--config", str(synthetic_study["config"]), "--assessment",
                 str(assessed / "assessment.csv"), "--mode", "threshold", "--threshold", "1.0"])
    assert code == EXIT_INFEASIBLE
    assert "infeasible sites:" in capsys.readouterr().out


def test_scenario_override_changes_report(synthetic_study, assessed, tmp_path):
    code = main(["assess", "--config", str(synthetic_study["config"]), "--layers-dir",
                 str(synthetic_study["layers"]), "--out", str(tmp_path), "--scenario-override", "slr=1.837"])
    assert code == EXIT_OK
    assert (tmp_path / "assessment.csv").read_bytes() != (assessed / "assessment.csv").read_bytes()


def test_missing_config_is_io_error(tmp_path, capsys):
    assert main(["assess", "--config", str(tmp_path / "nope.yaml")]) == EXIT_IO
    assert "error:" in capsys.readouterr().err


def test_bad_override_is_config_error(tmp_path):
    sites = tmp_path / "s.csv"
    sites.write_text("id,x,y\n")
    assert main(["assess", "--sites", str(sites), "--scenario-override", "tide=3"]) == EXIT_IO


def test_zero_sites(tmp_path):
    sites = tmp_path / "s.csv"
    sites.write_text("id,x,y\n")
    assert main(["assess", "--sites", str(sites), "--out", str(tmp_path)]) == EXIT_NO_SITES


def test_synth_subcommand(tmp_path):
    out = tmp_path / "study"
    assert main(["synth", "--out", str(out), "--sites-count", "50", "--features", "300", "--seed", "4"]) == EXIT_OK
    assert (out / "sites.csv").exists() and (out / "layers").is_dir()
