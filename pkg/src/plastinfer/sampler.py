"""Random-walk Metropolis samplers and chain post-processing.

Two drivers share the accept/reject core: ``run_mh`` proposes with a fixed
isotropic Gaussian step, ``run_adaptive_mh`` periodically reshapes the
proposal from the chain's own history so correlated posteriors mix without
hand-tuning. Post-processing lives here too: moment summaries, credible
regions (Gaussian ellipsoid and highest-density subset), effective sample
size, convergence traces, response envelopes and CSV persistence.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.stats import chi2

from .errors import ConfigurationError, NumericalError
from .models import ModelKind, ParameterVector, stress
from .posterior import LogPosterior

__all__ = [
    "SamplerConfig",
    "Chain",
    "ChainSummary",
    "CredibleRegion",
    "ConvergenceTrace",
    "run_mh",
    "run_adaptive_mh",
    "summarize",
    "credible_region",
    "convergence_trace",
    "effective_sample_size",
    "response_band",
    "save_chain",
    "load_chain",
]


@dataclass(frozen=True, eq=False)
class SamplerConfig:
    """Run settings shared by both samplers.

    ``step_scale`` defaults to 2.38 divided by the square root of the
    dimension, the classical random-walk scaling. ``adapt_every`` and
    ``history_cap`` only matter for the adaptive driver: the proposal is
    rebuilt every ``adapt_every`` steps from the most recent
    ``history_cap`` states (all of them when the cap is None).
    """

    n_samples: int
    burn_in: int = 0
    step_scale: float | None = None
    initial: np.ndarray | None = None
    adapt_every: int = 1000
    history_cap: int | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ConfigurationError(f"n_samples must be >= 1, got {self.n_samples!r}")
        if not 0 <= self.burn_in < self.n_samples:
            raise ConfigurationError(
                f"burn_in must satisfy 0 <= burn_in < n_samples, got {self.burn_in!r}"
            )
        if self.step_scale is not None and not (
            np.isfinite(self.step_scale) and self.step_scale > 0.0
        ):
            raise ConfigurationError(f"step_scale must be > 0, got {self.step_scale!r}")
        if self.adapt_every < 1:
            raise ConfigurationError(f"adapt_every must be >= 1, got {self.adapt_every!r}")
        if self.history_cap is not None and self.history_cap < 2:
            raise ConfigurationError(f"history_cap must be >= 2, got {self.history_cap!r}")
        if self.initial is not None:
            initial = np.asarray(self.initial, dtype=float).reshape(-1)
            if not np.all(np.isfinite(initial)):
                raise ConfigurationError("initial state must be finite")
            object.__setattr__(self, "initial", initial)


@dataclass(frozen=True, eq=False)
class Chain:
    """States generated by a sampler run, in order, burn-in included.

    ``samples[i]`` is the state after step ``i + 1``; the starting state is
    not stored. ``log_densities`` holds the target value at each stored
    state, so the maximum-density state can be read off without
    re-evaluating anything.
    """

    samples: np.ndarray
    log_densities: np.ndarray
    n_accepted: int
    config: SamplerConfig

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def dimension(self) -> int:
        return self.samples.shape[1]

    @property
    def acceptance_rate(self) -> float:
        return self.n_accepted / self.samples.shape[0]

    def retained(self, burn_in: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Samples and log-densities with the burn-in prefix dropped.

        ``burn_in`` overrides the configured value; it must leave at least
        one sample.
        """
        b = self.config.burn_in if burn_in is None else burn_in
        if not 0 <= b < self.samples.shape[0]:
            raise ConfigurationError(
                f"burn_in must satisfy 0 <= burn_in < {self.samples.shape[0]}, got {b!r}"
            )
        return self.samples[b:], self.log_densities[b:]


def _start_state(target: LogPosterior, config: SamplerConfig) -> tuple[np.ndarray, float]:
    if config.initial is not None:
        x0 = config.initial
        if x0.size != target.dimension:
            raise ConfigurationError(
                f"initial state has {x0.size} components, target needs {target.dimension}"
            )
    else:
        x0 = np.array(target.prior.mean, dtype=float)
    lp0 = target(x0)
    if not np.isfinite(lp0):
        raise ConfigurationError(
            f"starting state {x0!r} has zero posterior density; pass an "
            "initial point inside the support"
        )
    return x0, lp0


def _default_scale(config: SamplerConfig, dim: int) -> float:
    if config.step_scale is not None:
        return config.step_scale
    return 2.38 / math.sqrt(dim)


def run_mh(target: LogPosterior, config: SamplerConfig) -> Chain:
    """Metropolis sampling with a fixed isotropic Gaussian proposal.

    Acceptance uses ``u`` drawn from (0, 1] so the comparison
    ``log ratio >= log u`` is always well-defined; a proposal outside the
    support has log-density ``-inf`` and can never be accepted.
    """
    x, lp = _start_state(target, config)
    dim = x.size
    scale = _default_scale(config, dim)
    rng = np.random.default_rng(config.seed)

    samples = np.empty((config.n_samples, dim))
    log_densities = np.empty(config.n_samples)
    n_accepted = 0
    for i in range(config.n_samples):
        proposal = x + scale * rng.standard_normal(dim)
        lp_prop = target(proposal)
        u = 1.0 - rng.random()
        if lp_prop - lp >= math.log(u):
            x, lp = proposal, lp_prop
            n_accepted += 1
        samples[i] = x
        log_densities[i] = lp
    return Chain(samples=samples, log_densities=log_densities, n_accepted=n_accepted, config=config)


def run_adaptive_mh(target: LogPosterior, config: SamplerConfig) -> Chain:
    """Metropolis sampling with a history-shaped proposal.

    The first adaptation period runs with the fixed isotropic proposal.
    From then on, every ``adapt_every`` steps the recorded states (starting
    state included, truncated to the trailing ``history_cap`` rows) are
    centered into a deviation matrix K; proposals for the next period are
    ``x + (scale / sqrt(m - 1)) * z K`` with ``z`` standard normal of
    length m, which gives the proposal the empirical covariance of the
    history times the squared step scale. A degenerate history, every
    state identical, falls back to the fixed proposal for that period.
    """
    x, lp = _start_state(target, config)
    dim = x.size
    scale = _default_scale(config, dim)
    rng = np.random.default_rng(config.seed)

    samples = np.empty((config.n_samples, dim))
    log_densities = np.empty(config.n_samples)
    n_accepted = 0
    x0 = x.copy()
    deviations: np.ndarray | None = None
    deviation_scale = 0.0
    for i in range(config.n_samples):
        if i > 0 and i % config.adapt_every == 0:
            history = np.vstack([x0[None, :], samples[:i]])
            if config.history_cap is not None:
                history = history[-config.history_cap :]
            centered = history - history.mean(axis=0)
            if np.all(centered == 0.0):
                deviations = None
            else:
                deviations = centered
                deviation_scale = scale / math.sqrt(history.shape[0] - 1)
        if deviations is None:
            proposal = x + scale * rng.standard_normal(dim)
        else:
            z = rng.standard_normal(deviations.shape[0])
            proposal = x + deviation_scale * (z @ deviations)
        lp_prop = target(proposal)
        u = 1.0 - rng.random()
        if lp_prop - lp >= math.log(u):
            x, lp = proposal, lp_prop
            n_accepted += 1
        samples[i] = x
        log_densities[i] = lp
    return Chain(samples=samples, log_densities=log_densities, n_accepted=n_accepted, config=config)


@dataclass(frozen=True, eq=False)
class CredibleRegion:
    """Two views of a credible set at one level.

    The ellipsoid view fits a Gaussian to the samples and takes the
    chi-squared contour holding ``level`` of that Gaussian's mass; it is
    unavailable when the sample covariance is singular. The
    highest-density view keeps the ``level`` fraction of samples with the
    largest recorded log-density, no shape assumption involved.
    """

    level: float
    center: np.ndarray
    covariance: np.ndarray
    radius_sq: float
    ellipsoid_available: bool
    hpd_threshold: float
    hpd_mask: np.ndarray

    def mahalanobis_sq(self, points: np.ndarray) -> np.ndarray:
        """Squared ellipsoid distance of points, shape (m, dim) or (dim,)."""
        if not self.ellipsoid_available:
            raise NumericalError("ellipsoid view unavailable: sample covariance is singular")
        pts = np.atleast_2d(np.asarray(points, dtype=float)) - self.center
        sol = np.linalg.solve(self.covariance, pts.T)
        return np.einsum("ij,ji->i", pts, sol)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Ellipsoid membership of points; see ``mahalanobis_sq``."""
        return self.mahalanobis_sq(points) <= self.radius_sq


def credible_region(
    samples: np.ndarray, log_densities: np.ndarray, level: float = 0.95
) -> CredibleRegion:
    """Build both credible views from retained samples at ``level``."""
    if not 0.0 < level <= 1.0:
        raise ConfigurationError(f"level must be in (0, 1], got {level!r}")
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    log_densities = np.asarray(log_densities, dtype=float).reshape(-1)
    if samples.shape[0] != log_densities.size:
        raise ConfigurationError("samples and log-densities must have matching lengths")
    center = samples.mean(axis=0)
    deviation = samples - center
    covariance = deviation.T @ deviation / samples.shape[0]
    covariance = 0.5 * (covariance + covariance.T)
    try:
        np.linalg.cholesky(covariance)
        available = True
    except np.linalg.LinAlgError:
        available = False
    radius_sq = float(chi2.ppf(level, samples.shape[1]))
    threshold = float(np.quantile(log_densities, 1.0 - level))
    mask = log_densities >= threshold
    return CredibleRegion(
        level=level,
        center=center,
        covariance=covariance,
        radius_sq=radius_sq,
        ellipsoid_available=available,
        hpd_threshold=threshold,
        hpd_mask=mask,
    )


@dataclass(frozen=True, eq=False)
class ChainSummary:
    """Moment and mode estimates from the retained part of a chain."""

    mean: np.ndarray
    covariance: np.ndarray
    map_estimate: np.ndarray
    map_log_density: float
    credible: CredibleRegion
    n_retained: int
    acceptance_rate: float

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))


def summarize(chain: Chain, level: float = 0.95, burn_in: int | None = None) -> ChainSummary:
    """Mean, covariance, maximum-density state and credible region.

    The covariance divides by the retained count, not count minus one;
    with chains of thousands of states the difference is far below the
    Monte Carlo error, and the convention matches the estimator the
    credible ellipsoid is built from. ``burn_in`` overrides the chain's
    configured value.
    """
    samples, log_densities = chain.retained(burn_in)
    region = credible_region(samples, log_densities, level)
    best = int(np.argmax(log_densities))
    return ChainSummary(
        mean=region.center,
        covariance=region.covariance,
        map_estimate=samples[best].copy(),
        map_log_density=float(log_densities[best]),
        credible=region,
        n_retained=samples.shape[0],
        acceptance_rate=chain.acceptance_rate,
    )


@dataclass(frozen=True, eq=False)
class ConvergenceTrace:
    """Running first and second moments plus a flatness score.

    ``drift`` is the spread of the running mean over the second half of
    the chain relative to its final magnitude, one value per component;
    ``score`` is the largest of them. Small scores mean the running mean
    stopped moving.
    """

    running_mean: np.ndarray
    running_std: np.ndarray
    drift: np.ndarray
    score: float


def convergence_trace(samples: np.ndarray) -> ConvergenceTrace:
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    counts = np.arange(1, samples.shape[0] + 1, dtype=float)[:, None]
    running_mean = np.cumsum(samples, axis=0) / counts
    running_sq = np.cumsum(samples * samples, axis=0) / counts
    running_std = np.sqrt(np.maximum(running_sq - running_mean**2, 0.0))
    tail = running_mean[samples.shape[0] // 2 :]
    spread = tail.max(axis=0) - tail.min(axis=0)
    denom = np.maximum(np.abs(tail[-1]), np.finfo(float).tiny)
    drift = spread / denom
    return ConvergenceTrace(
        running_mean=running_mean,
        running_std=running_std,
        drift=drift,
        score=float(drift.max()),
    )


def effective_sample_size(values: np.ndarray) -> float:
    """Autocorrelation-adjusted sample count of a scalar chain.

    Uses the initial positive sequence estimator: autocorrelations are
    summed in adjacent pairs and the sum truncated at the first
    nonpositive pair, which is conservative for reversible chains. A
    constant chain has no information; its size is returned unchanged.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    n = values.size
    if n < 4:
        return float(n)
    centered = values - values.mean()
    nfft = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centered, nfft)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), nfft)[:n] / n
    if acov[0] <= 0.0:
        return float(n)
    rho = acov / acov[0]
    n_pairs = (n - 1) // 2
    pair_sums = rho[1 : 2 * n_pairs : 2] + rho[2 : 2 * n_pairs + 1 : 2]
    total = 0.0
    for value in pair_sums:
        if value <= 0.0:
            break
        total += value
    tau = max(1.0 + 2.0 * total, np.finfo(float).tiny)
    return float(min(n / tau, n))


def response_band(
    kind: ModelKind, samples: np.ndarray, strain_grid: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise envelope of response curves over parameter samples.

    Returns the minimum and maximum theoretical stress at each grid strain
    across all sampled parameter vectors.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    strain_grid = np.asarray(strain_grid, dtype=float)
    lower = np.full(strain_grid.shape, np.inf)
    upper = np.full(strain_grid.shape, -np.inf)
    for row in samples:
        curve = stress(strain_grid, ParameterVector.from_array(kind, row), kind)
        np.minimum(lower, curve, out=lower)
        np.maximum(upper, curve, out=upper)
    return lower, upper


def save_chain(chain: Chain, path: str | Path, parameter_names: list[str] | None = None) -> None:
    """Write a chain as CSV plus a JSON sidecar with the run settings.

    The CSV holds one row per state, parameter columns first and the
    log-density last; the sidecar (same stem, .json) records the sampler
    configuration, seed and acceptance count so the run can be identified
    and reloaded later.
    """
    path = Path(path)
    if parameter_names is None:
        parameter_names = [f"x{i}" for i in range(chain.dimension)]
    if len(parameter_names) != chain.dimension:
        raise ConfigurationError(
            f"expected {chain.dimension} parameter names, got {len(parameter_names)}"
        )
    header = ",".join([*parameter_names, "log_density"])
    table = np.column_stack([chain.samples, chain.log_densities])
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=header, comments="")
    sidecar = {
        "parameter_names": parameter_names,
        "n_samples": chain.config.n_samples,
        "burn_in": chain.config.burn_in,
        "step_scale": chain.config.step_scale,
        "initial": None if chain.config.initial is None else chain.config.initial.tolist(),
        "adapt_every": chain.config.adapt_every,
        "history_cap": chain.config.history_cap,
        "seed": chain.config.seed,
        "n_accepted": chain.n_accepted,
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def load_chain(path: str | Path) -> tuple[Chain, list[str]]:
    """Read back a chain written by ``save_chain``.

    Returns the chain and the parameter names from the sidecar.
    """
    path = Path(path)
    sidecar_path = path.with_suffix(".json")
    if not sidecar_path.exists():
        raise ConfigurationError(f"missing chain sidecar {sidecar_path}")
    sidecar = json.loads(sidecar_path.read_text())
    names = list(sidecar["parameter_names"])
    table = np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))
    config = SamplerConfig(
        n_samples=int(sidecar["n_samples"]),
        burn_in=int(sidecar["burn_in"]),
        step_scale=sidecar["step_scale"],
        initial=sidecar["initial"],
        adapt_every=int(sidecar["adapt_every"]),
        history_cap=sidecar["history_cap"],
        seed=sidecar["seed"],
    )
    if table.shape[0] != config.n_samples:
        config = replace(config, n_samples=table.shape[0], burn_in=0)
    return (
        Chain(
            samples=table[:, :-1],
            log_densities=table[:, -1],
            n_accepted=int(sidecar["n_accepted"]),
            config=config,
        ),
        names,
    )
