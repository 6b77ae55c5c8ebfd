import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from satshift.archive import (ArchiveError, RunArchive, overwrite_symbols, pack_symbols, read_stream,
                              unpack_symbols)
from satshift.cli import EXIT_BUDGET, EXIT_FAIL, EXIT_INPUT, EXIT_PASS, main


def write(path, data):
    path.write_text(json.dumps(data))
    return str(path)


@pytest.fixture()
def bernoulli_defs(tmp_path):
    assert main(["define", "bernoulli", "--out-dir", str(tmp_path / "defs")]) == EXIT_PASS
    man = tmp_path / "defs" / "manifest.json"
    data = json.loads(man.read_text())
    data["bands"] = 2
    man.write_text(json.dumps(data))
    return man


# --- validate ---------------------------------------------------------------

def test_validate_golden_family(tmp_path, capsys):
    f = write(tmp_path / "fam.json", {"levels": [{"alphabet_size": 2, "transitions": [[1, 1], [1, 0]]}]})
    assert main(["validate", f]) == EXIT_PASS
    assert "OK (family)" in capsys.readouterr().out


def test_validate_names_nesting_violation(tmp_path, capsys):
    f = write(tmp_path / "fam.json", {"levels": [
        {"alphabet_size": 2, "transitions": [[1, 1], [1, 1]]},
        {"alphabet_size": 2, "transitions": [[1, 1], [1, 0]]}]})
    assert main(["validate", f]) == EXIT_INPUT
    assert "nesting violation: level 2 forbids word '11'" in capsys.readouterr().out


def test_validate_reports_row_index(tmp_path, capsys):
    f = write(tmp_path / "mu.json", {"type": "markov", "P": [["1/2", "1/2"], ["1/3", "1/3"]]})
    assert main(["validate", f]) == EXIT_INPUT
    assert "row 1" in capsys.readouterr().out


def test_validate_reports_parse_position(tmp_path, capsys):
    p = tmp_path / "broken.json"
    p.write_text('{"levels": [\n  {"alphabet_size": 2,,}\n]}')
    assert main(["validate", str(p)]) == EXIT_INPUT
    assert "line 2" in capsys.readouterr().out


def test_validate_presets(tmp_path):
    for name in ("bernoulli", "golden-full", "irregular", "period2"):
        d = tmp_path / name
        main(["define", name, "--out-dir", str(d)])
        files = sorted(str(p) for p in d.glob("*.json"))
        assert main(["validate", *files]) == EXIT_PASS


# --- construct / resume -----------------------------------------------------

def test_invalid_u_is_a_density_error(tmp_path, capsys):
    write(tmp_path / "fam.json", {"levels": [{"alphabet_size": 2, "transitions": [[1, 1], [1, 0]]}]})
    write(tmp_path / "t.json", {"vertices": [{"type": "parry", "level": 1}]})
    man = write(tmp_path / "m.json", {"family": "fam.json", "target": "t.json", "u": "11", "bands": 2})
    assert main(["construct", man, "--out-dir", str(tmp_path / "run")]) == EXIT_INPUT
    assert "density" in capsys.readouterr().err


def test_unknown_manifest_key(tmp_path):
    man = write(tmp_path / "m.json", {"family": "fam.json", "colour": 1})
    assert main(["construct", man]) == EXIT_INPUT


def test_max_length_exit_code(tmp_path, bernoulli_defs):
    data = json.loads(bernoulli_defs.read_text())
    data.update(max_length=1000, horizon=None)
    bernoulli_defs.write_text(json.dumps(data))
    assert main(["construct", str(bernoulli_defs), "--out-dir", str(tmp_path / "run")]) == EXIT_BUDGET


def test_construct_audit_round_trip(tmp_path, bernoulli_defs, capsys):
    out = tmp_path / "run"
    assert main(["construct", str(bernoulli_defs), "--out-dir", str(out)]) == EXIT_PASS
    ar = RunArchive(out)
    assert ar.status()["state"] == "complete"
    for name in ("manifest.json", "schedule.json", "stream.bin", "index.bin", "status.json"):
        assert (out / name).exists()
    idx = ar.read_index()
    assert np.all(np.diff(idx["M"].astype(np.int64)) > 0)
    capsys.readouterr()
    assert main(["audit", str(out)]) == EXIT_PASS
    text = capsys.readouterr().out
    assert "tracking: PASS" in text and "certificate: PASS" in text and "margin=" in text
    assert (out / "audits" / "tracking.csv").exists()


def test_interrupted_run_resumes_identically(tmp_path, bernoulli_defs):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["construct", str(bernoulli_defs), "--out-dir", str(a)]) == EXIT_PASS
    assert main(["construct", str(bernoulli_defs), "--out-dir", str(b), "--stop-band", "1"]) == EXIT_PASS
    assert RunArchive(b).status()["state"] == "resumable"
    assert main(["resume", str(b)]) == EXIT_PASS
    assert (a / "stream.bin").read_bytes() == (b / "stream.bin").read_bytes()


def test_audit_csv_identical_across_runs(tmp_path, bernoulli_defs):
    dirs = [tmp_path / "x", tmp_path / "y"]
    for d in dirs:
        assert main(["construct", str(bernoulli_defs), "--out-dir", str(d)]) == EXIT_PASS
        assert main(["audit", str(d), "--which", "tracking"]) == EXIT_PASS
    assert (dirs[0] / "stream.bin").read_bytes() == (dirs[1] / "stream.bin").read_bytes()
    assert (dirs[0] / "audits" / "tracking.csv").read_text() == (dirs[1] / "audits" / "tracking.csv").read_text()


def test_fault_injected_archive_fails(tmp_path, bernoulli_defs, capsys):
    out = tmp_path / "run"
    main(["construct", str(bernoulli_defs), "--out-dir", str(out)])
    sched = json.loads((out / "schedule.json").read_text())
    idx = RunArchive(out).read_index()
    start = int(idx["M"][4])
    overwrite_symbols(out / "stream.bin", start, np.zeros(sched["bands"][0]["n"], dtype=np.uint8))
    capsys.readouterr()
    assert main(["audit", str(out), "--which", "tracking"]) == EXIT_FAIL
    assert "first failing checkpoint j=5" in capsys.readouterr().out


def test_tampered_schedule_detected(tmp_path, bernoulli_defs):
    out = tmp_path / "run"
    main(["construct", str(bernoulli_defs), "--out-dir", str(out)])
    sched = json.loads((out / "schedule.json").read_text())
    sched["bands"][0]["N"] += 1
    (out / "schedule.json").write_text(json.dumps(sched))
    assert main(["audit", str(out)]) == EXIT_INPUT


def test_missing_archive(tmp_path):
    assert main(["audit", str(tmp_path / "nothing")]) == EXIT_INPUT


# --- entropy / info ---------------------------------------------------------

def test_entropy_of_golden(tmp_path, capsys):
    f = write(tmp_path / "g.json", {"alphabet_size": 2, "transitions": [[1, 1], [1, 0]]})
    assert main(["entropy", f, "--format", "json"]) == EXIT_PASS
    row = json.loads(capsys.readouterr().out)["levels"][0]
    assert row["word_count_estimate"] == pytest.approx(0.4861, abs=1e-4)
    assert row["parry_entropy"] == pytest.approx(0.481212, abs=1e-6)
    assert row["gap"] > 0


def test_entropy_of_bernoulli(tmp_path, capsys):
    f = write(tmp_path / "b.json", {"type": "bernoulli", "probs": ["1/2", "1/2"]})
    assert main(["entropy", f, "--format", "json"]) == EXIT_PASS
    assert json.loads(capsys.readouterr().out)["closed_form"] == pytest.approx(0.6931, abs=1e-4)


def test_info_on_archive(tmp_path, bernoulli_defs, capsys):
    out = tmp_path / "run"
    main(["construct", str(bernoulli_defs), "--out-dir", str(out)])
    capsys.readouterr()
    assert main(["info", str(out), "--format", "json"]) == EXIT_PASS
    info = json.loads(capsys.readouterr().out)
    assert info["state"] == "complete" and len(info["band_table"]) == 4


def test_console_script_installed():
    exe = shutil.which("satshift")
    cmd = [exe] if exe else [sys.executable, "-m", "satshift.cli"]
    res = subprocess.run(cmd + ["--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "construct" in res.stdout


# --- packed streams ---------------------------------------------------------

@pytest.mark.parametrize("a", [2, 3, 4, 5, 16, 200])
def test_pack_round_trip(a):
    rng = np.random.default_rng(a)
    for n in (0, 1, 7, 1001):
        sym = rng.integers(0, a, n).astype(np.uint8)
        back, size = unpack_symbols(pack_symbols(sym, a))
        assert size == a and np.array_equal(back, sym)


def test_truncated_stream_rejected(tmp_path):
    data = pack_symbols(np.ones(100, dtype=np.uint8), 2)
    p = tmp_path / "s.bin"
    p.write_bytes(data[:-5])
    with pytest.raises(ArchiveError):
        read_stream(p)
