import os
import pathlib
import subprocess

import pytest

BIN = os.environ.get("SFLAB_BIN")
pytestmark = pytest.mark.skipif(BIN is None, reason="SFLAB_BIN not set")


def run(*args, **kw):
    return subprocess.run([BIN, *args], capture_output=True, text=True, **kw)


def test_version_flag():
    out = run("--version")
    assert out.returncode == 0


def test_encode_decode_roundtrip(tmp_path: pathlib.Path):
    dist = tmp_path / "hamming.txt"
    dist.write_text("2 2\n0 1\n1 0\n")
    seq = tmp_path / "x.txt"
    x = [0, 1, 1, 0, 0, 1, 0, 1, 1, 0, 0, 0, 1, 1, 0, 1]
    seq.write_text(" ".join(map(str, x)) + "\n")
    blob = tmp_path / "block.sfc"

    enc = run("encode", "--dist-file", str(dist), "--in", str(seq), "--out", str(blob),
              "--D", "0.25", "--seed", "5", "--n", "16")
    assert enc.returncode == 0, enc.stderr
    assert blob.read_bytes()[:4] == b"SFC1"

    rec = tmp_path / "xhat.txt"
    dec = run("decode", "--in", str(blob), "--out", str(rec))
    assert dec.returncode == 0, dec.stderr
    xhat = [int(t) for t in rec.read_text().split()]
    distortion = sum(1 for a, b in zip(x, xhat) if a != b)
    assert distortion <= 16 * 0.25


def test_study_run_and_exit_codes(tmp_path: pathlib.Path):
    cfg = tmp_path / "lemma1.cfg"
    cfg.write_text("n_list = 8\ntrials = 2\nseed = 3\nmc_samples = 20000\n")
    out = run("lemma1_ratio", "--config", str(cfg), "--out", str(tmp_path))
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "lemma1_ratio.csv").exists()
    assert (tmp_path / "lemma1_ratio.json").exists()
    header = (tmp_path / "lemma1_ratio.csv").read_text().splitlines()[0]
    assert "log_ps_exact" in header and "log_ps_saddle" in header

    # Bad config key: exit code 2.
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense = 1\n")
    assert run("lemma1_ratio", "--config", str(bad)).returncode == 2
    # Missing config file: exit code 2.
    assert run("lemma1_ratio", "--config", str(tmp_path / "missing.cfg")).returncode == 2


def test_rerun_is_byte_identical(tmp_path: pathlib.Path):
    cfg = tmp_path / "redundancy.cfg"
    cfg.write_text("n_list = 16\ntrials = 4\nseed = 9\n")
    a_dir = tmp_path / "a"
    b_dir = tmp_path / "b"
    assert run("redundancy_sweep", "--config", str(cfg), "--out", str(a_dir)).returncode == 0
    assert run("redundancy_sweep", "--config", str(cfg), "--out", str(b_dir)).returncode == 0
    assert (a_dir / "redundancy_sweep.csv").read_bytes() == \
        (b_dir / "redundancy_sweep.csv").read_bytes()
