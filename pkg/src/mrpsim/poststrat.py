"""Poststratification cells and weighted aggregation.

The matrix holds one row per realized (ME, G, RE, School, MC, SA)
combination with its exact population count. Cells are stored in
lexicographic (SA, MC, School, RE, G, ME) order; because school ids
increase with stratum and the stratum sequence is itself (SA, MC)
sorted, sorting on (School, RE, G, ME) realizes that order.
"""

from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from .coefficients import STRATUM_MC, STRATUM_SA
from .dgp import FinitePopulation

__all__ = [
    "PoststratMatrix",
    "SubpopIndex",
    "build_poststrat_matrix",
    "in_sample_bias",
    "poststratify_draws",
    "poststratify_point",
    "sample_cell_counts",
    "subpop_index",
]

# per-school covariate capacity: RE x G x ME
_RE_CARD, _G_CARD, _ME_CARD = 5, 2, 2
_CELLS_PER_SCHOOL = _RE_CARD * _G_CARD * _ME_CARD


def _cell_key(school, re, g, me):
    return (
        school.astype(np.int64) * _CELLS_PER_SCHOOL
        + re.astype(np.int64) * (_G_CARD * _ME_CARD)
        + g.astype(np.int64) * _ME_CARD
        + me.astype(np.int64)
    )


@dataclass(frozen=True)
class PoststratMatrix:
    school: np.ndarray  # int32, per cell
    stratum: np.ndarray  # int8
    re: np.ndarray  # int8
    g: np.ndarray  # int8
    me: np.ndarray  # int8
    n_c: np.ndarray  # int64 population counts
    _key_to_pos: dict

    @property
    def j(self):
        return self.school.shape[0]

    @property
    def n_p(self):
        return int(self.n_c.sum())

    @property
    def sa(self):
        return STRATUM_SA[self.stratum]

    @property
    def mc(self):
        return STRATUM_MC[self.stratum]

    def cell_views(self):
        """Covariate arrays handed to subpopulation predicates."""
        return SimpleNamespace(
            school=self.school, stratum=self.stratum, re=self.re, g=self.g,
            me=self.me, sa=self.sa, mc=self.mc,
        )

    def positions_for(self, school, re, g, me):
        """Cell position of each (school, re, g, me) row; -1 when the
        combination has no population cell."""
        keys = _cell_key(
            np.asarray(school), np.asarray(re), np.asarray(g), np.asarray(me)
        )
        return np.array([self._key_to_pos.get(k, -1) for k in keys], dtype=np.int64)


@dataclass(frozen=True)
class SubpopIndex:
    positions: np.ndarray  # int64 cell positions
    label: str
    population_share: float


def build_poststrat_matrix(pop: FinitePopulation) -> PoststratMatrix:
    keys = _cell_key(pop.school, pop.re, pop.g, pop.me)
    uniq, counts = np.unique(keys, return_counts=True)
    school = (uniq // _CELLS_PER_SCHOOL).astype(np.int32)
    rem = uniq % _CELLS_PER_SCHOOL
    re = (rem // (_G_CARD * _ME_CARD)).astype(np.int8)
    g = ((rem // _ME_CARD) % _G_CARD).astype(np.int8)
    me = (rem % _ME_CARD).astype(np.int8)
    return PoststratMatrix(
        school=school,
        stratum=pop.layout.stratum[school].astype(np.int8),
        re=re,
        g=g,
        me=me,
        n_c=counts.astype(np.int64),
        _key_to_pos={int(k): i for i, k in enumerate(uniq)},
    )


def subpop_index(matrix: PoststratMatrix, predicate, label="subpop") -> SubpopIndex:
    mask = np.asarray(predicate(matrix.cell_views()), dtype=bool)
    positions = np.flatnonzero(mask)
    if positions.size == 0:
        raise ValueError(f"subpopulation {label!r} matches no cells")
    share = float(matrix.n_c[positions].sum()) / matrix.n_p
    return SubpopIndex(positions=positions, label=label, population_share=share)


def _check_values(values, idx, matrix):
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] != matrix.j:
        raise ValueError(f"expected {matrix.j} cell values, got {values.shape[0]}")
    sel = values[idx.positions]
    bad = np.flatnonzero(~np.isfinite(sel))
    if bad.size:
        c = int(idx.positions[bad[0]])
        raise ValueError(
            f"missing value for cell {c} "
            f"(school={matrix.school[c]}, re={matrix.re[c]}, "
            f"g={matrix.g[c]}, me={matrix.me[c]})"
        )
    return sel


def poststratify_point(values, idx: SubpopIndex, matrix: PoststratMatrix):
    """N_c-weighted mean of per-cell values over the subpopulation."""
    sel = _check_values(values, idx, matrix)
    w = matrix.n_c[idx.positions].astype(np.float64)
    return float(sel @ w / w.sum())


def poststratify_draws(yrep1, yrep0, idx: SubpopIndex, matrix: PoststratMatrix):
    """Draw-by-draw weighted contrast.

    yrep1/yrep0 have one row per cell of idx (in idx order) and one
    column per draw; returns the length-S vector of weighted mean
    differences.
    """
    yrep1 = np.asarray(yrep1, dtype=np.float64)
    yrep0 = np.asarray(yrep0, dtype=np.float64)
    if yrep1.shape != yrep0.shape:
        raise ValueError("draw matrices must have matching shapes")
    if yrep1.shape[0] != idx.positions.size:
        raise ValueError(
            f"expected {idx.positions.size} cell rows, got {yrep1.shape[0]}"
        )
    w = matrix.n_c[idx.positions].astype(np.float64)
    w = w / w.sum()
    return w @ (yrep1 - yrep0)


def sample_cell_counts(matrix: PoststratMatrix, sample):
    """Observed-sample row count per population cell."""
    pos = matrix.positions_for(sample.school, sample.re, sample.g, sample.me)
    if np.any(pos < 0):
        raise ValueError("sample contains a combination absent from the population")
    return np.bincount(pos, minlength=matrix.j).astype(np.int64)


def in_sample_bias(tau_cells, n_c_sample, idx: SubpopIndex, matrix: PoststratMatrix):
    """Weighted-truth gap of a raw sample mean: sum over the subpopulation
    of tau_c (n_c/sum n - N_c/sum N)."""
    tau = _check_values(tau_cells, idx, matrix)
    n_samp = np.asarray(n_c_sample, dtype=np.float64)[idx.positions]
    if n_samp.sum() <= 0:
        raise ValueError("subpopulation has no sampled individuals")
    if np.any(n_samp < 0):
        raise ValueError("negative sample count")
    n_pop = matrix.n_c[idx.positions].astype(np.float64)
    return float(tau @ (n_samp / n_samp.sum() - n_pop / n_pop.sum()))
