"""On-disk cache of mu-hat values as line-delimited JSON.

One record per line: {sched_id, eta, tol, re, im, err, blocks_used}; eta is a
decimal string, float parts are JSON numbers and mpmath parts decimal strings.
Malformed lines are moved to ``<path>.quarantine`` and never used. Appends and
rewrites happen under an exclusive file lock.
"""

from __future__ import annotations

import json
import logging
import threading
from pathlib import Path

import mpmath
from filelock import FileLock

from .measure.fourier import FourierValue, mu_hat

log = logging.getLogger(__name__)


def _encode_part(x):
    if isinstance(x, float):
        return x
    return mpmath.nstr(x, int(x.context.prec * 0.302) + 5, strip_zeros=False)


def _decode_part(x):
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return float(x)
    if isinstance(x, str):
        digits = sum(ch.isdigit() for ch in x)
        with mpmath.workdps(max(15, digits + 5)):
            return +mpmath.mpf(x)
    raise ValueError("bad numeric field")


def encode(sched_id: str, tol: float, fv: FourierValue) -> str:
    rec = {"sched_id": sched_id, "eta": str(fv.eta), "tol": tol, "re": _encode_part(fv.re),
           "im": _encode_part(fv.im), "err": fv.err, "blocks_used": fv.blocks_used}
    return json.dumps(rec, sort_keys=True)


def decode(line: str) -> tuple[tuple[str, int, float], FourierValue]:
    rec = json.loads(line)
    if not isinstance(rec, dict):
        raise ValueError("record is not an object")
    sid, eta_s, tol = rec["sched_id"], rec["eta"], rec["tol"]
    if not isinstance(sid, str) or not isinstance(eta_s, str):
        raise ValueError("bad key fields")
    eta = int(eta_s)
    tol = float(tol)
    err = float(rec["err"])
    blocks = rec["blocks_used"]
    if not isinstance(blocks, int) or err < 0 or not tol > 0:
        raise ValueError("bad value fields")
    fv = FourierValue(eta, _decode_part(rec["re"]), _decode_part(rec["im"]), err, blocks)
    return (sid, eta, tol), fv


class FourierCache:
    def __init__(self, path: str | Path | None):
        self.path = Path(path) if path else None
        self._data: dict[tuple[str, int, float], FourierValue] = {}
        self._pending: dict[tuple[str, int, float], FourierValue] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.evaluations = 0
        self.quarantined = 0
        if self.path is not None:
            self._load()

    def _load(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if not self.path.exists():
            return
        with FileLock(str(self.path) + ".lock"):
            good, bad = [], []
            for line in self.path.read_text().splitlines():
                if not line.strip():
                    continue
                try:
                    key, fv = decode(line)
                except (ValueError, KeyError, TypeError, json.JSONDecodeError):
                    bad.append(line)
                    continue
                self._data[key] = fv
                good.append(line)
            if bad:
                self.quarantined = len(bad)
                log.warning("quarantined %d malformed cache lines", len(bad))
                with open(str(self.path) + ".quarantine", "a") as fh:
                    fh.writelines(b + "\n" for b in bad)
                self.path.write_text("".join(g + "\n" for g in good))

    def __len__(self):
        return len(self._data)

    def get(self, sched_id: str, eta: int, tol: float) -> FourierValue | None:
        if eta < 0:
            fv = self._data.get((sched_id, -eta, tol))
            if fv is None:
                return None
            return FourierValue(eta, fv.re, -fv.im, fv.err, fv.blocks_used)
        return self._data.get((sched_id, eta, tol))

    def evaluator(self, sched, tol: float):
        """eta -> FourierValue, consulting the cache and recording new values."""

        def ev(eta: int) -> FourierValue:
            key = (sched.id, abs(eta), tol)
            hit = self.get(sched.id, eta, tol)
            if hit is not None:
                self.hits += 1
                return hit
            fv = mu_hat(sched, eta, tol)
            base = fv if eta >= 0 else mu_hat(sched, -eta, tol)
            with self._lock:
                self.evaluations += 1
                self._data[key] = base
                self._pending[key] = base
            return fv

        return ev

    def flush(self):
        """Append new records, sorted for reproducible files."""
        if self.path is None or not self._pending:
            self._pending.clear()
            return
        lines = [encode(k[0], k[2], fv) for k, fv in sorted(self._pending.items(),
                                                              key=lambda kv: (kv[0][0], kv[0][2], kv[0][1]))]
        with FileLock(str(self.path) + ".lock"):
            with open(self.path, "a") as fh:
                fh.writelines(line + "\n" for line in lines)
        self._pending.clear()
