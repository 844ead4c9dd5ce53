"""Canonical small-scale experiment shared by the acceptance tests.

The run is deterministic for a fixed configuration, so its outputs are
kept under .cache/ at the repository root and reused across pytest
invocations. Warm the cache ahead of time with

    python3 tests/smallrun.py

which is worthwhile: twenty replications with four chains each take on
the order of two hours on a single core.
"""

import os
import time
from pathlib import Path

from mrpsim.harness.config import ExperimentConfig
from mrpsim.harness.runner import run_experiment

CACHE = Path(__file__).resolve().parents[1] / ".cache" / "small_run_seed17"

CONFIG = dict(
    master_seed=17,
    scale=0.05,
    m_reps=20,
    chains=4,
    warmup=1000,
    draws_per_chain=250,
    school_cates=True,
    workers=1,
)

_FILES = ("estimates.csv", "truth.csv", "metrics.csv", "school_cates.csv",
          "diagnostics.txt", "prior_predictive.csv", "sample.csv")
_MARKER = ".complete"
_LOCK = ".running"
_STALE_S = 4 * 3600


def _fingerprint():
    return repr(sorted(CONFIG.items()))


def _done():
    marker = CACHE / _MARKER
    return (marker.exists() and marker.read_text() == _fingerprint()
            and all((CACHE / f).exists() for f in _FILES))


def _wait_for_other_runner(lock):
    while not _done():
        if not lock.exists() or time.time() - lock.stat().st_mtime > _STALE_S:
            return _done()
        time.sleep(30)
    return True


def ensure() -> Path:
    """Run the experiment unless its outputs are already cached."""
    if _done():
        return CACHE
    CACHE.mkdir(parents=True, exist_ok=True)
    lock = CACHE / _LOCK
    if lock.exists() and time.time() - lock.stat().st_mtime < _STALE_S:
        if _wait_for_other_runner(lock):
            return CACHE
        raise RuntimeError("a concurrent small run left no outputs behind")
    lock.write_text(str(os.getpid()))
    try:
        cfg = ExperimentConfig(out_dir=str(CACHE), **CONFIG)
        run_experiment(cfg, out_dir=str(CACHE))
        _write_prior_predictive()
        (CACHE / _MARKER).write_text(_fingerprint())
    finally:
        lock.unlink(missing_ok=True)
    return CACHE


def _write_prior_predictive():
    # the plotting pipeline also wants one concrete sample plus prior
    # replicate draws, neither of which the replication loop persists
    from mrpsim.harness.cli import main

    base = ["--seed", str(CONFIG["master_seed"]),
            "--scale", str(CONFIG["scale"]), "--out-dir", str(CACHE)]
    main(["generate", *base])
    main(["sample", *base])
    main(["fit", *base, "--prior-predictive", "20"])


if __name__ == "__main__":
    t0 = time.monotonic()
    out = ensure()
    print(f"small run ready in {out} ({time.monotonic() - t0:.0f}s)")
