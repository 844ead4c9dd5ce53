"""Survey design: how the observed sample D is drawn from the population.

Three stages, composed by `draw_sample`: sample a fixed number of
schools per stratum without replacement, thin the selected schools by
independent coin flips, then let each student in a retained school
respond with probability logistic(Prev-GPA). The response stage is the
only covariate-dependent one, and it depends on V alone.
"""

from dataclasses import dataclass, replace

import numpy as np

from .coefficients import N_STRATA, STRATUM_MC, STRATUM_SA
from .dgp import FinitePopulation

__all__ = [
    "DesignConfig",
    "ObservedSample",
    "draw_sample",
    "stratified_cluster_sample",
    "student_response",
    "subsample_schools",
]

DEFAULT_SCHOOLS_PER_STRATUM = (28, 34, 32, 19, 27)


@dataclass(frozen=True)
class DesignConfig:
    schools_per_stratum: tuple = DEFAULT_SCHOOLS_PER_STRATUM
    school_keep_prob: float = 0.5
    response_model: str = "logistic_of_prevgpa"

    def __post_init__(self):
        if len(self.schools_per_stratum) != N_STRATA:
            raise ValueError("need one school count per stratum")
        if not 0 < self.school_keep_prob <= 1:
            raise ValueError("school_keep_prob must be in (0, 1]")
        if self.response_model != "logistic_of_prevgpa":
            raise ValueError(f"unknown response model {self.response_model!r}")


@dataclass(frozen=True)
class ObservedSample:
    """Columnar observed rows plus the provenance of the draw."""

    y: np.ndarray  # observed outcome = Y(Z)
    v: np.ndarray
    z: np.ndarray  # int8
    school: np.ndarray  # int32
    stratum: np.ndarray  # int8
    g: np.ndarray  # int8
    re: np.ndarray  # int8
    me: np.ndarray  # int8
    pop_index: np.ndarray  # int64, row of the source individual
    schools_selected: np.ndarray  # stage-1 school ids
    schools_retained: np.ndarray  # stage-2 school ids
    n_eligible: int  # students enrolled in retained schools

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def sa(self):
        return STRATUM_SA[self.stratum]

    @property
    def mc(self):
        return STRATUM_MC[self.stratum]

    @property
    def response_rate(self):
        return self.n / self.n_eligible if self.n_eligible else float("nan")


def stratified_cluster_sample(pop: FinitePopulation, cfg: DesignConfig, rng):
    """Without-replacement school sample, cfg.schools_per_stratum[s] from
    each stratum; returns sorted school ids."""
    layout = pop.layout
    chosen = []
    for s in range(N_STRATA):
        pool = np.flatnonzero(layout.stratum == s)
        want = int(cfg.schools_per_stratum[s])
        if want > pool.size:
            raise ValueError(
                f"stratum {s + 1} has {pool.size} schools, cannot sample {want}"
            )
        chosen.append(rng.choice(pool, size=want, replace=False))
    return np.sort(np.concatenate(chosen))


def subsample_schools(schools, keep_prob, rng):
    """Independent per-school retention; empty input stays empty."""
    if not 0 < keep_prob <= 1:
        raise ValueError("keep_prob must be in (0, 1]")
    schools = np.asarray(schools)
    if schools.size == 0:
        return schools
    keep = rng.uniform(size=schools.size) < keep_prob
    return schools[keep]


def student_response(pop: FinitePopulation, schools, rng) -> ObservedSample:
    """Each enrolled student responds with probability logistic(V);
    responders' observed outcome is the potential outcome of their arm."""
    schools = np.asarray(schools)
    if schools.size == 0:
        raise ValueError("no schools retained")
    if np.any(pop.z < 0):
        raise ValueError("population has unassigned treatment")
    in_school = np.zeros(pop.layout.n_schools, dtype=bool)
    in_school[schools] = True
    eligible = np.flatnonzero(in_school[pop.school])

    p = 1.0 / (1.0 + np.exp(-pop.v[eligible]))
    responded = eligible[rng.uniform(size=eligible.size) < p]

    z = pop.z[responded]
    y = np.where(z == 1, pop.y1[responded], pop.y0[responded])
    return ObservedSample(
        y=y,
        v=pop.v[responded],
        z=z,
        school=pop.school[responded],
        stratum=pop.stratum[responded],
        g=pop.g[responded],
        re=pop.re[responded],
        me=pop.me[responded],
        pop_index=responded.astype(np.int64),
        schools_selected=schools,
        schools_retained=schools,
        n_eligible=int(eligible.size),
    )


def draw_sample(pop: FinitePopulation, cfg: DesignConfig, rng) -> ObservedSample:
    selected = stratified_cluster_sample(pop, cfg, rng)
    retained = subsample_schools(selected, cfg.school_keep_prob, rng)
    # a zero-school thinning is redrawn rather than erroring: the survey
    # conditions on having some schools
    while retained.size == 0:
        retained = subsample_schools(selected, cfg.school_keep_prob, rng)
    sample = student_response(pop, retained, rng)
    return replace(sample, schools_selected=selected)
