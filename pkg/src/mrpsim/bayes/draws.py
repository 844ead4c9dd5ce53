"""Posterior draw container: chain-stacked parameter arrays plus
convergence diagnostics, immutable after construction."""

from dataclasses import dataclass, field

import numpy as np

from .diagnostics import diagnostics as _compute_diagnostics

__all__ = ["PosteriorDraws"]

_RHAT_WARN = 1.05


@dataclass(frozen=True)
class PosteriorDraws:
    spec: object  # ModelSpec
    levels: dict  # factor -> sorted original level values
    fixed_names: tuple
    n_chains: int
    draws_per_chain: int
    beta: np.ndarray  # (S, k)
    sigma: np.ndarray  # (S,) residual sd
    alpha: dict  # factor -> (S, L)
    sigma_f: dict  # factor -> (S,)
    gamma: dict  # factor -> (S, L); empty when no treatment terms
    sigma_gamma: dict
    rho: dict
    diag: dict = field(repr=False)
    convergence_warning: bool = False

    @property
    def s(self):
        return self.beta.shape[0]

    def beta_named(self, name):
        return self.beta[:, self.fixed_names.index(name)]

    def chain_view(self, flat):
        """(S, ...) -> (chains, draws, ...) view."""
        return flat.reshape(self.n_chains, self.draws_per_chain, *flat.shape[1:])

    def named_series(self):
        """Yield (name, (S,) values) for every scalar parameter."""
        for i, name in enumerate(self.fixed_names):
            yield name, self.beta[:, i]
        yield "sigma", self.sigma
        for f in self.alpha:
            yield f"sigma_{f}", self.sigma_f[f]
            for j in range(self.alpha[f].shape[1]):
                yield f"alpha_{f}[{self.levels[f][j]}]", self.alpha[f][:, j]
            if f in self.gamma:
                yield f"sigma_gamma_{f}", self.sigma_gamma[f]
                yield f"rho_{f}", self.rho[f]
                for j in range(self.gamma[f].shape[1]):
                    yield f"gamma_{f}[{self.levels[f][j]}]", self.gamma[f][:, j]

    @classmethod
    def from_chain_stores(cls, spec, data, stores):
        n_chains = len(stores)
        draws = stores[0]["sigma"].shape[0]

        def stack(key):
            return np.concatenate([st[key] for st in stores], axis=0)

        alpha = {}
        sigma_f = {}
        gamma = {}
        sigma_gamma = {}
        rho = {}
        chainwise = {}
        for f in data.codes:
            alpha[f] = stack(f"alpha_{f}")
            sigma_f[f] = stack(f"sigma_{f}")
            chainwise[f"sigma_{f}"] = sigma_f[f].reshape(n_chains, draws)
            for j in range(alpha[f].shape[1]):
                chainwise[f"alpha_{f}[{j}]"] = alpha[f][:, j].reshape(n_chains, draws)
            if spec.has_treatment:
                gamma[f] = stack(f"gamma_{f}")
                sigma_gamma[f] = stack(f"sigma_gamma_{f}")
                rho[f] = stack(f"rho_{f}")
                chainwise[f"sigma_gamma_{f}"] = sigma_gamma[f].reshape(n_chains, draws)
                chainwise[f"rho_{f}"] = rho[f].reshape(n_chains, draws)
                for j in range(gamma[f].shape[1]):
                    chainwise[f"gamma_{f}[{j}]"] = gamma[f][:, j].reshape(n_chains, draws)
        beta = stack("beta")
        sigma = stack("sigma")
        for i, name in enumerate(data.fixed_names):
            chainwise[name] = beta[:, i].reshape(n_chains, draws)
        chainwise["sigma"] = sigma.reshape(n_chains, draws)

        diag = _compute_diagnostics(chainwise) if n_chains >= 2 else {}
        warn = any(
            np.isfinite(v["rhat"]) and v["rhat"] > _RHAT_WARN for v in diag.values()
        )
        return cls(
            spec=spec,
            levels={f: np.asarray(data.levels[f]) for f in data.levels},
            fixed_names=tuple(data.fixed_names),
            n_chains=n_chains,
            draws_per_chain=draws,
            beta=beta,
            sigma=sigma,
            alpha=alpha,
            sigma_f=sigma_f,
            gamma=gamma,
            sigma_gamma=sigma_gamma,
            rho=rho,
            diag=diag,
            convergence_warning=bool(warn),
        )
