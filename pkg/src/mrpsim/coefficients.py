"""Data-generating-process coefficients and the stratum layout constants.

Level encodings used throughout the package:
  SA (school achievement): 0=Low, 1=Medium, 2=High
  MC (minority composition): 0=Both, 1=Low, 2=High
  RE (race/ethnicity): 0=Asian, 1=Black, 2=Hispanic, 3=White, 4=Other
  G (gender): 0=Male, 1=Female; ME (maternal education): 0=False, 1=True
  Strata 0..4 map to (MC, SA) = (Both,Low), (Low,Medium), (High,Medium),
  (Low,High), (High,High) with school counts 2806, 3040, 2570, 2239, 566.
"""

from dataclasses import dataclass, field

import numpy as np

N_STRATA = 5
STRATUM_MC = np.array([0, 1, 2, 1, 2], dtype=np.int32)
STRATUM_SA = np.array([0, 1, 1, 2, 2], dtype=np.int32)
STRATUM_SCHOOLS = np.array([2806, 3040, 2570, 2239, 566], dtype=np.int64)

RE_LABELS = ("Asian", "Black", "Hispanic", "White", "Other")
SA_LABELS = ("Low", "Medium", "High")
MC_LABELS = ("Both", "Low", "High")


def _default_p_re():
    return np.array(
        [
            [0.026, 0.127, 0.280, 0.367, 0.200],
            [0.053, 0.102, 0.234, 0.445, 0.166],
            [0.023, 0.122, 0.254, 0.415, 0.186],
            [0.066, 0.086, 0.195, 0.514, 0.139],
            [0.036, 0.106, 0.215, 0.484, 0.159],
        ]
    )


@dataclass(frozen=True)
class Coefficients:
    """All DGP constants; defaults reproduce the full study population."""

    mu_X: np.ndarray = field(default_factory=lambda: np.array([2.1, 2.8, 3.5]))
    sigma_X: np.ndarray = field(default_factory=lambda: np.array([0.8, 1.0, 0.6]))
    p_RE: np.ndarray = field(default_factory=_default_p_re)
    # rows: low-MC, high-MC; columns: SA level low..high
    p_ME: np.ndarray = field(
        default_factory=lambda: np.array(
            [[0.238, 0.309, 0.386], [0.198, 0.269, 0.346]]
        )
    )
    p_G: float = 0.49
    tau_SA: np.ndarray = field(default_factory=lambda: np.array([0.1, 0.07, 0.01]))
    # indexed by MC level (Both, Low, High); the Both entry is 0
    tau_MC: np.ndarray = field(default_factory=lambda: np.array([0.0, -0.01, 0.01]))
    tau_G: np.ndarray = field(default_factory=lambda: np.array([0.01, 0.01]))
    tau_RE: np.ndarray = field(
        default_factory=lambda: np.array([0.02, 0.1, 0.07, 0.1, 0.02])
    )
    # indexed by ME value (False, True)
    tau_ME: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.01]))
    school_noise_sd: float = 0.04
    outcome_sd: float = 0.6
    gpa_lo: float = 0.0
    gpa_hi: float = 4.33
    school_size_mean: float = 200.0

    def __post_init__(self):
        if not np.allclose(self.p_RE.sum(axis=1), 1.0, atol=1e-12):
            raise ValueError("each p_RE row must sum to 1")
        for name in ("p_RE", "p_ME"):
            p = getattr(self, name)
            if np.any(p < 0) or np.any(p > 1):
                raise ValueError(f"{name} entries must lie in [0, 1]")
        if not 0 <= self.p_G <= 1:
            raise ValueError("p_G must lie in [0, 1]")
        for name in ("sigma_X", "school_noise_sd", "outcome_sd"):
            if np.any(np.asarray(getattr(self, name)) <= 0):
                raise ValueError(f"{name} must be > 0")
        if not self.gpa_lo < self.gpa_hi:
            raise ValueError("need gpa_lo < gpa_hi")

    def p_me_for_stratum(self, s):
        """P(ME=1) for stratum s; the pooled-MC stratum averages the
        low/high vectors at its achievement level."""
        sa = STRATUM_SA[s]
        mc = STRATUM_MC[s]
        if mc == 0:
            return 0.5 * (self.p_ME[0, sa] + self.p_ME[1, sa])
        return self.p_ME[mc - 1, sa]
