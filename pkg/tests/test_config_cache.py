from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from oddnormal.cache import FourierCache
from oddnormal.config import ConfigError, RunConfig
from oddnormal.measure import mu_hat
from oddnormal.schedule import make_schedule


@given(st.integers(0, 2**64 - 1), st.floats(1e-15, 1e-3), st.integers(1, 16), st.sampled_from(["csv", "json"]))
def test_config_roundtrip(seed, tol, threads, fmt):
    cfg = RunConfig(seed=seed, tol=tol, threads=threads, format=fmt)
    back = RunConfig.from_dict(json.loads(cfg.canonical_json()))
    assert back == cfg and back.hash() == cfg.hash()


@pytest.mark.parametrize("bad", [
    {"tol": 0}, {"tol": -1e-9}, {"threads": 0}, {"N_max": 0}, {"seed": -1}, {"seed": 2**64},
    {"format": "xml"}, {"kappa": 1.5}, {"alpha": "x"}, {"nonsense": 1},
    {"schedule": {"kind": "explicit", "K": ["0", "4", "4"], "eps": ["1", "1"]}},
])
def test_config_rejects(bad):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)


def test_config_load_errors(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        RunConfig.load(p)
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "missing.json")


def test_hash_changes_with_seed():
    assert RunConfig(seed=1).hash() != RunConfig(seed=2).hash()


@pytest.fixture
def sched():
    return make_schedule("explicit", K=[0, 4, 16, 64, 256], eps="harmonic")


def test_cache_roundtrip_and_counts(tmp_path, sched):
    path = tmp_path / "c.jsonl"
    c = FourierCache(path)
    ev = c.evaluator(sched, 1e-9)
    vals = [ev(e) for e in (5, 17, -17, 12345)]
    assert c.evaluations == 3 and c.hits == 1
    c.flush()
    c2 = FourierCache(path)
    ev2 = c2.evaluator(sched, 1e-9)
    again = [ev2(e) for e in (5, 17, -17, 12345)]
    assert c2.evaluations == 0
    assert [(v.re, v.im, v.err) for v in vals] == [(v.re, v.im, v.err) for v in again]


def test_cache_mp_values_survive(tmp_path, sched):
    path = tmp_path / "c.jsonl"
    c = FourierCache(path)
    fv = c.evaluator(sched, 1e-25)(3**30)
    c.flush()
    back = FourierCache(path).get(sched.id, 3**30, 1e-25)
    assert abs(complex(back.value) - complex(fv.value)) < 1e-25


def test_cache_quarantines_malformed(tmp_path, sched):
    path = tmp_path / "c.jsonl"
    c = FourierCache(path)
    c.evaluator(sched, 1e-9)(7)
    c.flush()
    good = path.read_text()
    path.write_text(good + '{"eta": "oops"\n' + json.dumps({"sched_id": sched.id, "eta": "9", "tol": 1e-9,
                                                           "re": 0.5, "im": 0.0, "err": -1.0,
                                                           "blocks_used": 1}) + "\n")
    c2 = FourierCache(path)
    assert c2.quarantined == 2 and len(c2) == 1
    assert path.read_text() == good
    assert len((tmp_path / "c.jsonl.quarantine").read_text().splitlines()) == 2
    assert c2.get(sched.id, 9, 1e-9) is None


def test_cache_matches_direct(tmp_path, sched):
    c = FourierCache(tmp_path / "c.jsonl")
    fv = c.evaluator(sched, 1e-9)(999)
    ref = mu_hat(sched, 999, 1e-9)
    assert (fv.re, fv.im) == (ref.re, ref.im)
