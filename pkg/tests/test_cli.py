from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest

from oddnormal.cli import fmt_cell, main
from oddnormal.config import RunConfig
from oddnormal.schedule import make_schedule


def write_cfg(tmp_path: Path, **kw) -> Path:
    cfg = RunConfig(out=str(tmp_path / "out"), **kw)
    p = tmp_path / "cfg.json"
    p.write_text(cfg.canonical_json())
    return p


def read_csv(path: Path) -> list[dict]:
    with open(path) as fh:
        return list(csv.DictReader(fh))


def snapshot(d: Path) -> dict[str, bytes]:
    return {str(p.relative_to(d)): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()
            and not p.name.endswith(".lock")}


def test_fmt_cell():
    assert fmt_cell(0.1) == "0.1"
    assert fmt_cell(2**100) == str(2**100)
    assert fmt_cell(None) == "" and fmt_cell(True) == "true"


def test_usage_errors(tmp_path):
    assert main([]) == 2
    assert main(["nope"]) == 2
    assert main(["sample", "--tol", "-1", "--out", str(tmp_path)]) == 2
    assert main(["sample", "--config", str(tmp_path / "missing.json")]) == 2


def test_sample_deterministic_and_zero_stream(tmp_path):
    sched = make_schedule("explicit", K=[0, 8, 64], eps=[1, 1])
    cfg = write_cfg(tmp_path, schedule=sched.to_dict(), samples=2000, seed=5)
    assert main(["sample", "--config", str(cfg)]) == 0
    first = snapshot(tmp_path / "out")
    rows = read_csv(tmp_path / "out" / "sample" / "streams.csv")
    assert rows and all(set(r["digits"]) == {"0"} for r in rows)
    assert main(["sample", "--config", str(cfg)]) == 0
    assert snapshot(tmp_path / "out") == first


def test_sample_cylinders_within_4sigma(tmp_path):
    cfg = write_cfg(tmp_path, samples=100_000, cylinder_bits=[2])
    assert main(["sample", "--config", str(cfg)]) == 0
    rows = read_csv(tmp_path / "out" / "sample" / "cylinders_2bit.csv")
    assert len(rows) == 4 and all(r["within_4sigma"] == "true" for r in rows)
    assert (tmp_path / "out" / "sample" / "cylinders_2bit.png").exists()


def test_fourier_cache_and_rows(tmp_path, caplog):
    sched = make_schedule("explicit", K=[0, 4, 16, 64, 256], eps="harmonic")
    cfg = write_cfg(tmp_path, schedule=sched.to_dict(), lyons_count=20)
    assert main(["fourier", "--config", str(cfg), "-v"]) == 0
    out = tmp_path / "out" / "fourier"
    first = (out / "fourier.csv").read_bytes()
    rows = read_csv(out / "fourier.csv")
    assert rows[0]["eta"] == "0" and float(rows[0]["abs"]) == 1 and float(rows[0]["err"]) == 0
    assert len(rows) == 41 and all(r["within_bound"] == "true" for r in rows)
    cold = [m for m in caplog.messages if "evaluations" in m][-1]
    caplog.clear()
    assert main(["fourier", "--config", str(cfg), "-v"]) == 0
    warm = [m for m in caplog.messages if "evaluations" in m][-1]
    assert (out / "fourier.csv").read_bytes() == first
    assert "41 evaluations" in cold and " 0 evaluations" in warm


def test_fourier_json_embeds_hash(tmp_path):
    cfg_path = write_cfg(tmp_path, etas=["0", "5", "-5"], format="json")
    assert main(["fourier", "--config", str(cfg_path)]) == 0
    doc = json.loads((tmp_path / "out" / "fourier" / "fourier.json").read_text())
    cfg = RunConfig.load(cfg_path)
    assert doc["config_hash"] == cfg.hash() and "PCG64" in doc["rng"]
    run = json.loads((tmp_path / "out" / "fourier" / "run.json").read_text())
    assert run["config_hash"] == cfg.hash()


def test_weyl_zero_trace(tmp_path):
    cfg = write_cfg(tmp_path, weyl_x="0", weyl_N=32)
    assert main(["weyl", "--config", str(cfg)]) == 0
    rows = read_csv(tmp_path / "out" / "weyl" / "weyl.csv")
    assert len(rows) == 32 and all(float(r["re"]) == 1 and float(r["im"]) == 0 for r in rows)


def test_certify_passes(tmp_path):
    assert main(["certify-nonnormal", "--out", str(tmp_path), "--seed", "42"]) == 0
    cert = json.loads((tmp_path / "certify-nonnormal" / "certificate.json").read_text())
    assert cert["passed"] and cert["seed"] == "42"


def test_certify_hypothesis_violation_exit1(tmp_path):
    cfg = write_cfg(tmp_path, forced_zero_blocks=[])
    assert main(["certify-nonnormal", "--config", str(cfg)]) == 1


def test_verify_lemmas(tmp_path, capsys):
    assert main(["verify-lemmas", "--out", str(tmp_path)]) == 0
    cfg = write_cfg(tmp_path, k_max=4)
    assert main(["verify-lemmas", "--config", str(cfg)]) == 0
    assert "low coverage" in capsys.readouterr().out
    bad = write_cfg(tmp_path, alpha="2/5")
    assert main(["verify-lemmas", "--config", str(bad)]) == 2


def test_admissibility_exit_codes(tmp_path):
    assert main(["admissibility", "--out", str(tmp_path / "a")]) == 1
    sched = make_schedule("explicit", K=[0, 4, 16, 64, 256, 1024, 4096],
                          eps=["1", "1", "1", "1/1000000000", "1/1000000000", "1"])
    cfg = write_cfg(tmp_path, schedule=sched.to_dict(), R_values=["3000"])
    assert main(["admissibility", "--config", str(cfg)]) == 0


def test_del_small(tmp_path):
    cfg = write_cfg(tmp_path, N_max=64, threads=2)
    main(["del", "--config", str(cfg)])
    rows = read_csv(tmp_path / "out" / "del" / "del.csv")
    assert [r["N"] for r in rows] == ["2", "4", "8", "16", "32", "64"]
    assert all(r["identity_holds"] == "true" for r in rows)
    assert (tmp_path / "out" / "del" / "del.png").exists()


@pytest.mark.parametrize("cmd", ["weyl", "certify-nonnormal", "verify-lemmas", "admissibility"])
def test_byte_identical_reruns(tmp_path, cmd):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main([cmd, "--out", str(a), "--seed", "9"]) == main([cmd, "--out", str(b), "--seed", "9"])
    assert snapshot(a) == snapshot(b)
