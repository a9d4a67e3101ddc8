import json

import pytest

from vowelprobe import cli
from vowelprobe.errors import ConfigError


@pytest.fixture(scope="module")
def cli_run(tmp_path_factory, capsys_factory=None):
    base = tmp_path_factory.mktemp("cli")
    corpus_dir = base / "corpus"
    run_dir = base / "run"
    assert cli.main(["synth", "--out", str(corpus_dir), "--files", "10", "--seed", "3"]) == 0
    assert cli.main(["prepare", "--corpus", str(corpus_dir), "--out", str(run_dir)]) == 0
    assert cli.main([
        "features", "--manifest", str(run_dir / "manifest.csv"),
        "--random-weights", "11", "--pooling", "mean", "--out", str(run_dir),
    ]) == 0
    return base, corpus_dir, run_dir


def test_full_cli_pipeline(cli_run, capsys):
    base, corpus_dir, run_dir = cli_run
    assert cli.main([
        "train", "--features", str(run_dir / "features"), "--set", "mfcc",
        "--folds", "3", "--seed", "4", "--c-values", "1.0", "--out", str(run_dir),
    ]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["results"]["mfcc"]["cells_evaluated"] == 12

    assert cli.main([
        "mi", "--features", str(run_dir / "features"), "--k", "5",
        "--pairs", "10", "--seed", "1", "--out", str(run_dir),
    ]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["per_layer"]) == 7

    assert cli.main(["report", "--run", str(run_dir), "--out", str(run_dir)]) == 0
    assert (run_dir / "report" / "accuracy.csv").exists()


def test_missing_required_flag_is_config_error(capsys):
    assert cli.main(["prepare", "--out", "/tmp/x"]) == 2
    assert "corpus_dir" in capsys.readouterr().err


def test_data_error_exit_code(tmp_path, capsys):
    code = cli.main(["prepare", "--corpus", str(tmp_path / "missing"), "--out", str(tmp_path)])
    assert code == 3


def test_config_error_exit_code(cli_run, tmp_path, capsys):
    _, _, run_dir = cli_run
    code = cli.main([
        "train", "--features", str(run_dir / "features"), "--set", "layer99", "--out", str(tmp_path),
    ])
    assert code == 2


def test_config_file_supplies_defaults(cli_run, tmp_path, capsys):
    _, corpus_dir, _ = cli_run
    conf = tmp_path / "probe.conf"
    conf.write_text(
        "# corpus options\n"
        f"corpus_dir = {corpus_dir}\n"
        f"out_dir = {tmp_path / 'out_a'}\n"
        "min_duration = 1500\n"
    )
    assert cli.main(["prepare", "--config", str(conf)]) == 0
    assert (tmp_path / "out_a" / "manifest.csv").exists()


def test_flags_override_config_file(cli_run, tmp_path, capsys):
    _, corpus_dir, _ = cli_run
    conf = tmp_path / "probe.conf"
    conf.write_text(f"corpus_dir = {corpus_dir}\nout_dir = {tmp_path / 'ignored'}\n")
    assert cli.main(["prepare", "--config", str(conf), "--out", str(tmp_path / "out_b")]) == 0
    assert (tmp_path / "out_b" / "manifest.csv").exists()
    assert not (tmp_path / "ignored").exists()


def test_run_subcommand_full_pipeline(cli_run, tmp_path, capsys):
    _, corpus_dir, _ = cli_run
    out_dir = tmp_path / "full"
    code = cli.main([
        "run", "--corpus", str(corpus_dir), "--out", str(out_dir),
        "--random-weights", "3", "--c-values", "0.5", "--folds", "3",
        "--mi-pairs", "8", "--mi-max-samples", "100",
    ])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["results"]) == 9
    assert (out_dir / "report" / "summary.json").exists()


def test_parse_config_file_coercion(tmp_path):
    conf = tmp_path / "c.conf"
    conf.write_text("a = 3\nb = 0.5\nc = true\nd = hello\n")
    got = cli.parse_config_file(str(conf))
    assert got == {"a": 3, "b": 0.5, "c": True, "d": "hello"}


def test_parse_config_missing_file():
    with pytest.raises(ConfigError):
        cli.parse_config_file("/nonexistent.conf")
