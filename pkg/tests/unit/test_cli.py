"""Unit tests for the command-line interface."""

import json

import pytest

from sweepcert import cli
from sweepcert.config import Settings
from sweepcert.constants import EXIT_CONFIG_ERROR, EXIT_FAILED, EXIT_INCONCLUSIVE, EXIT_OK
from sweepcert.errors import QuadratureError
from sweepcert.models import ExperimentConfig, MemberMass, SweepingReport
from sweepcert.storage import StorageError


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Keep process settings out of the tests."""
    for name in ("SWEEPCERT_OUTPUT_DIR", "SWEEPCERT_WORKERS", "SWEEPCERT_BLOCK_SIZE"):
        monkeypatch.delenv(name, raising=False)


class TestParser:
    """Test argument parsing."""

    def test_commands(self):
        """The three commands parse with a config path."""
        for command in ("validate", "certify", "simulate"):
            args = cli.build_parser().parse_args([command, "--config", "x.json"])
            assert args.command == command
            assert args.output_dir is None
            assert not args.quiet

    def test_config_required(self):
        """--config is mandatory; argparse exits with 2."""
        with pytest.raises(SystemExit) as exc_info:
            cli.build_parser().parse_args(["validate"])
        assert exc_info.value.code == 2

    def test_unknown_command(self):
        """Unknown commands are usage errors."""
        with pytest.raises(SystemExit):
            cli.build_parser().parse_args(["plot", "--config", "x.json"])


class TestOutputDirectory:
    """Test output directory precedence."""

    def test_flag_beats_environment(self, monkeypatch):
        monkeypatch.setenv("SWEEPCERT_OUTPUT_DIR", "/env/dir")
        config = ExperimentConfig.model_validate({"model": {"kind": "cell", "alpha": 1, "sigma": 0.5}})
        assert cli.resolve_output_dir(config, "/flag/dir", Settings()) == "/flag/dir"

    def test_environment_beats_config(self, monkeypatch):
        monkeypatch.setenv("SWEEPCERT_OUTPUT_DIR", "/env/dir")
        config = ExperimentConfig.model_validate({"model": {"kind": "cell", "alpha": 1, "sigma": 0.5}})
        assert cli.resolve_output_dir(config, None, Settings()) == "/env/dir"

    def test_config_default(self):
        config = ExperimentConfig.model_validate({"model": {"kind": "cell", "alpha": 1, "sigma": 0.5}})
        assert cli.resolve_output_dir(config, None, Settings()) == "results"


class TestCsv:
    """Test CSV projections."""

    def test_sweeping_columns(self):
        """Columns are member_id, member_param, checkpoint, mass, std_error."""
        report = SweepingReport(
            model_kind="qnd",
            family_kind="sphere_min_coordinate",
            n_trajectories=4,
            checkpoints=[0],
            masses=[MemberMass(member_id=0, member_param=0.1, checkpoint=0, mass=0.75, std_error=0.25)],
            trends=[],
        )
        lines = cli.sweeping_csv(report).splitlines()
        assert lines[0] == "member_id,member_param,checkpoint,mass,std_error"
        assert lines[1] == "0,0.1,0,0.75,0.25"


class TestValidate:
    """Test the validate command."""

    def test_complete_ensemble_passes(self, write_config, qnd_document, capsys):
        """Diagonal example passes every check."""
        code = cli.cmd_validate(str(write_config(qnd_document)))
        output = capsys.readouterr().out
        assert code == EXIT_OK
        assert "completeness_residual" in output
        assert "duality_residual" in output
        assert "diagonal_entries" in output
        assert "FAIL" not in output

    def test_incomplete_ensemble_fails(self, write_config, qnd_document, capsys):
        """0.36 + 0.49 - 1 = -0.15 is reported and fails."""
        qnd_document["model"]["diagonal"] = [[0.6, 0.8], [0.7, 0.6]]
        code = cli.cmd_validate(str(write_config(qnd_document)))
        output = capsys.readouterr().out
        assert code == EXIT_FAILED
        assert "-0.15" in output

    def test_repeated_diagonal_entries_fail(self, write_config, qnd_document, capsys):
        """A complete table with repeated row entries fails validate as certify rejects it."""
        qnd_document["model"]["diagonal"] = [[0.6, 0.6], [0.8, 0.8]]
        path = str(write_config(qnd_document))
        code = cli.cmd_validate(path)
        rows = {line.split()[0]: line for line in capsys.readouterr().out.splitlines() if line}
        assert code == EXIT_FAILED
        assert "FAIL" in rows["diagonal_entries"]
        assert "PASS" in rows["completeness_residual"]
        assert cli.cmd_certify(path) == EXIT_CONFIG_ERROR

    def test_cell_model_passes(self, write_config, cell_document, capsys):
        """Cell battery passes for a sweeping model."""
        code = cli.cmd_validate(str(write_config(cell_document)))
        output = capsys.readouterr().out
        assert code == EXIT_OK
        assert "kernel_normalization" in output
        assert "certificate_slope_at_zero" in output

    def test_missing_model(self, write_config):
        """Schema errors exit with 2."""
        assert cli.cmd_validate(str(write_config({"seed": 1}))) == EXIT_CONFIG_ERROR

    def test_missing_file(self, tmp_path):
        """Unreadable configs exit with 2."""
        assert cli.cmd_validate(str(tmp_path / "missing.json")) == EXIT_CONFIG_ERROR


class TestCertify:
    """Test the certify command."""

    def test_no_beta_is_inconclusive(self, write_config, cell_document, tmp_path):
        """alpha=2, sigma=0.5 reports the positive slope at zero."""
        cell_document["model"]["alpha"] = 2.0
        code = cli.cmd_certify(str(write_config(cell_document)))
        assert code == EXIT_INCONCLUSIVE
        report = json.loads((tmp_path / "results" / "certificate.json").read_text())
        assert report["verdict"] == "inconclusive"
        assert report["n_points"] == 0
        assert report["parameters"]["f_prime_0"] == pytest.approx(2.0 * 0.6931471805599453 - 1.0)
        assert any("f'(0)" in d for d in report["diagnostics"])
        assert len(report["config_digest"]) == 64

    def test_incomplete_ensemble_is_config_error(self, write_config, qnd_document):
        """certify refuses an incomplete ensemble."""
        qnd_document["model"]["diagonal"] = [[0.6, 0.8], [0.7, 0.6]]
        assert cli.cmd_certify(str(write_config(qnd_document))) == EXIT_CONFIG_ERROR

    def test_numeric_failure_is_inconclusive(self, write_config, qnd_document, mocker):
        """Errors raised during certification map to 3."""
        mocker.patch.object(cli, "certify_qnd", side_effect=QuadratureError("no", 0.0, 1.0))
        assert cli.cmd_certify(str(write_config(qnd_document))) == EXIT_INCONCLUSIVE

    def test_storage_failure(self, write_config, cell_document, mocker):
        """Unwritable reports map to 2."""
        cell_document["model"]["alpha"] = 2.0
        mocker.patch.object(cli, "write_reports", side_effect=StorageError("disk full"))
        assert cli.cmd_certify(str(write_config(cell_document))) == EXIT_CONFIG_ERROR

    def test_output_dir_override(self, write_config, cell_document, tmp_path):
        """--output-dir wins over the config."""
        cell_document["model"]["alpha"] = 2.0
        target = tmp_path / "override"
        cli.cmd_certify(str(write_config(cell_document)), str(target))
        assert (target / "certificate.json").exists()
        assert (target / "certificate_margins.csv").exists()


class TestMain:
    """Test the entry point."""

    def test_dispatch(self, mocker):
        """main forwards the config path and override."""
        command = mocker.patch.object(cli, "cmd_simulate", return_value=EXIT_OK)
        assert cli.main(["simulate", "--config", "c.json", "--output-dir", "out", "--quiet"]) == EXIT_OK
        command.assert_called_once()
        assert command.call_args.args == ("c.json", "out")
        assert isinstance(command.call_args.kwargs["settings"], Settings)

    def test_settings_read_once_per_run(self, config_dir, mocker):
        """main reads the environment once and hands the settings to the command."""
        settings_class = mocker.patch.object(cli, "Settings", wraps=Settings)
        assert cli.main(["validate", "--config", str(config_dir / "cell_auto.json"), "--quiet"]) == EXIT_OK
        assert settings_class.call_count == 1

    def test_injected_settings_are_used(self, write_config, cell_document, tmp_path, monkeypatch):
        """Settings passed in win over the environment."""
        monkeypatch.setenv("SWEEPCERT_OUTPUT_DIR", str(tmp_path / "env"))
        cell_document["model"]["alpha"] = 2.0
        settings = Settings(output_dir=str(tmp_path / "injected"))
        assert cli.cmd_certify(str(write_config(cell_document)), settings=settings) == EXIT_INCONCLUSIVE
        assert (tmp_path / "injected" / "certificate.json").exists()
        assert not (tmp_path / "env").exists()

    def test_unexpected_error(self, mocker):
        """Unexpected exceptions exit with 1."""
        mocker.patch.object(cli, "cmd_validate", side_effect=RuntimeError("boom"))
        assert cli.main(["validate", "--config", "c.json"]) == EXIT_FAILED

    def test_missing_config(self, tmp_path):
        """A missing config exits with 2."""
        assert cli.main(["certify", "--config", str(tmp_path / "nope.json"), "--quiet"]) == EXIT_CONFIG_ERROR
