import csv
import json

import pytest

from rescuectx.cli import main


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["run", "--scenario", "2", "--seed", "5", "--duration", "900", "--out", str(out)]) == 0
    return out


def test_run_writes_artifacts(run_dir, capsys):
    assert (run_dir / "journal.jsonl").exists()
    assert (run_dir / "traces.tsv").exists()
    lines = (run_dir / "journal.jsonl").read_text().splitlines()
    assert lines and all(json.loads(x)["kind"] for x in lines)


def test_written_traces_are_accepted(run_dir):
    assert main(["lang", "check", str(run_dir / "traces.tsv")]) == 0


def test_run_is_byte_identical(run_dir, tmp_path):
    assert main(["run", "--scenario", "2", "--seed", "5", "--duration", "900", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "journal.jsonl").read_bytes() == (run_dir / "journal.jsonl").read_bytes()


@pytest.mark.parametrize("argv", [
    ["run", "--scenario", "9"],
    ["run"],
    ["run", "--scenario", "1", "--duration", "-5"],
    ["run", "--scenario", "1", "--alerts", "Missing", "--duration", "60"],
    ["bogus"],
    ["lang"],
])
def test_usage_errors_exit_2(argv, tmp_path, capsys):
    assert main(argv + (["--out", str(tmp_path)] if argv[:1] == ["run"] and len(argv) > 3 else [])) == 2


def test_missing_area_file_exits_2(tmp_path):
    assert main(["run", "--scenario", "1", "--duration", "60", "--area", str(tmp_path / "none.toml"),
                 "--out", str(tmp_path)]) == 2


def test_lang_check_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.txt"
    good.write_text("N;E6mE3;E2;\n")
    bad = tmp_path / "bad.txt"
    bad.write_text("N;E2E3;\n")
    junk = tmp_path / "junk.txt"
    junk.write_text("hello\n")
    assert main(["lang", "check", str(good)]) == 0
    assert main(["lang", "check", str(bad)]) == 1
    assert main(["lang", "check", str(junk)]) == 1
    assert main(["lang", "check", str(tmp_path / "absent.txt")]) == 2


def test_dump_dfa(tmp_path, capsys):
    assert main(["lang", "dump-dfa"]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0] == "states 5"
    out = tmp_path / "dfa.txt"
    assert main(["lang", "dump-dfa", "--out", str(out)]) == 0
    assert out.read_text() == text


def test_preliminary_outputs(tmp_path, capsys):
    assert main(["preliminary", "--seed", "3", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "preliminary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 48
    with open(tmp_path / "categories.csv") as fh:
        cats = list(csv.DictReader(fh))
    assert len(cats) >= 2
    assert sum(int(c["readings"]) for c in cats) >= sum(int(r["tourists"]) for r in rows)
    assert all(0 <= int(c["threats"]) <= int(c["readings"]) for c in cats)


def test_preliminary_without_tourists(tmp_path, capsys):
    assert main(["preliminary", "--tourists", "0", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "preliminary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert all(r["tourists"] == "0" for r in rows)
    assert main(["preliminary", "--tourists", "-1", "--out", str(tmp_path)]) == 2
