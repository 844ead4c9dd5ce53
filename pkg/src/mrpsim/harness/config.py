"""Experiment configuration and the subpopulation expression grammar.

A subpopulation is written as `&`-joined `field=value` clauses over the
cell covariates (`sa`, `mc`, `re`, `g`, `me`, `school`, `stratum`), or
the literal `ate` for all cells. The same predicate is applied to
poststratification cells and to sample rows.

Defaults are the desk-scale preset (scale 0.05, 20 replications, 1000
posterior draws); the full-size study uses scale 1.0 and 100
replications.
"""

import os
from dataclasses import dataclass, fields, replace

import numpy as np

from ..coefficients import MC_LABELS, RE_LABELS, SA_LABELS
from ..design import DEFAULT_SCHOOLS_PER_STRATUM

__all__ = [
    "DEFAULT_SUBPOPS",
    "ExperimentConfig",
    "load_config",
    "parse_subpop",
]

_LABELED = {"sa": SA_LABELS, "mc": MC_LABELS, "re": RE_LABELS}
_G_ALIASES = {"m": 0, "male": 0, "f": 1, "female": 1}
_ME_ALIASES = {"false": 0, "true": 1}

DEFAULT_SUBPOPS = (
    "ate",
    "sa=High&mc=Low",
    "sa=Low&re=Black",
    "sa=High&mc=Low&re=Asian",
    "sa=High&mc=Low&re=Black",
    "sa=High&mc=Low&re=Hispanic",
    "sa=High&mc=Low&re=White",
    "sa=High&mc=Low&re=Other",
)


def _parse_clause(clause):
    """(field, code, canonical text) for one `field=value` clause."""
    if "=" not in clause:
        raise ValueError(f"bad subpopulation clause {clause!r}")
    name, _, value = clause.partition("=")
    name = name.strip().lower()
    value = value.strip()
    if name in _LABELED:
        labels = _LABELED[name]
        lowered = [x.lower() for x in labels]
        if value.lower() not in lowered:
            raise ValueError(
                f"{name} must be one of {labels}, got {value!r}")
        code = lowered.index(value.lower())
        return name, code, f"{name.upper()}={labels[code]}"
    if name == "g":
        code = _G_ALIASES.get(value.lower())
        if code is None:
            if value not in ("0", "1"):
                raise ValueError(f"g must be M/F or 0/1, got {value!r}")
            code = int(value)
        return name, code, f"G={'FM'[1 - code]}"
    if name == "me":
        code = _ME_ALIASES.get(value.lower())
        if code is None:
            if value not in ("0", "1"):
                raise ValueError(f"me must be True/False, got {value!r}")
            code = int(value)
        return name, code, f"ME={bool(code)}"
    if name in ("school", "stratum"):
        return name, int(value), f"{name}={int(value)}"
    raise ValueError(f"unknown subpopulation field {name!r}")


def parse_subpop(expr):
    """(canonical label, predicate over covariate views)."""
    expr = expr.strip()
    if expr.lower() == "ate":
        return "ATE", lambda c: np.ones(np.shape(c.school), dtype=bool)
    clauses = [_parse_clause(c) for c in expr.split("&")]
    label = "&".join(text for _, _, text in clauses)

    def predicate(c, _clauses=tuple(clauses)):
        mask = np.ones(np.shape(c.school), dtype=bool)
        for name, code, _ in _clauses:
            mask &= np.asarray(getattr(c, name)) == code
        return mask

    return label, predicate


@dataclass(frozen=True)
class ExperimentConfig:
    master_seed: int = 0
    scale: float = 0.05
    m_reps: int = 20
    chains: int = 4
    warmup: int = 1000
    draws_per_chain: int = 250
    schools_per_stratum: tuple = DEFAULT_SCHOOLS_PER_STRATUM
    school_keep_prob: float = 0.5
    subpops: tuple = DEFAULT_SUBPOPS
    estimators: tuple = ("OLS", "SVY", "MRP-I", "MRP-MI")
    school_cates: bool = False
    quad: int = 64
    workers: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        if self.m_reps < 1:
            raise ValueError("need at least one replication")
        if not self.subpops:
            raise ValueError("subpopulation list must be nonempty")
        for expr in self.subpops:
            parse_subpop(expr)

    @property
    def n_workers(self):
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    @property
    def draws_total(self):
        return self.chains * self.draws_per_chain


_INT_FIELDS = {"master_seed", "m_reps", "chains", "warmup",
               "draws_per_chain", "quad", "workers"}
_FLOAT_FIELDS = {"scale", "school_keep_prob"}
_LIST_FIELDS = {"schools_per_stratum": ",", "subpops": ";", "estimators": ","}


def _coerce(name, raw):
    if name in _INT_FIELDS:
        return int(raw)
    if name in _FLOAT_FIELDS:
        return float(raw)
    if name == "school_cates":
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if name in _LIST_FIELDS:
        sep = _LIST_FIELDS[name]
        items = tuple(x.strip() for x in raw.split(sep) if x.strip())
        if name == "schools_per_stratum":
            return tuple(int(x) for x in items)
        return items
    return raw.strip()


def load_config(path, **overrides):
    """Read `key = value` lines (# comments) into an ExperimentConfig."""
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in known:
                raise ValueError(f"{path}:{lineno}: unknown field {key!r}")
            values[key] = _coerce(key, raw)
    cfg = ExperimentConfig(**values)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **overrides) if overrides else cfg
