"""Posterior construction: analytic linear-elastic case and the general target.

The linear elastic model with a Gaussian prior on the modulus and Gaussian
stress noise is conjugate, so the posterior over the nonnegative reals is a
truncated Gaussian with closed-form location and scale. Everything else is
sampled; ``LogPosterior`` packages prior, model and data into the
unnormalized log-density the samplers target.
"""

from __future__ import annotations

import warnings
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .data import MeasurementSet
from .errors import ConfigurationError
from .likelihood import QuadratureSpec, log_likelihood
from .models import ModelKind, ParameterVector
from .priors import TruncatedNormalPrior

__all__ = ["AnalyticLEPosterior", "analytic_le_posterior", "LogPosterior"]


@dataclass(frozen=True)
class AnalyticLEPosterior:
    """Location and scale of the conjugate linear-elastic posterior.

    Both refer to the underlying untruncated Gaussian; the actual
    posterior is its restriction to ``E >= 0``. When the location sits
    many scales above zero (the usual case for stiff materials) the
    truncation is immaterial.

    Attributes:
        mean: posterior location in the stress unit per unit strain.
        std: posterior scale, same unit.
    """

    mean: float
    std: float


def analytic_le_posterior(
    prior_mean: float,
    prior_std: float,
    strains: np.ndarray,
    stresses: np.ndarray,
    stress_std: float,
) -> AnalyticLEPosterior:
    """Closed-form posterior for the linear elastic modulus.

    Derived by completing the square in the product of the Gaussian prior
    and the Gaussian likelihood of ``k`` stress measurements at known
    strains; with no data the prior is returned unchanged.

    Args:
        prior_mean: prior location of the modulus.
        prior_std: prior scale, > 0.
        strains: measurement strains, shape (k,), k >= 0.
        stresses: measured stresses, shape (k,).
        stress_std: stress noise standard deviation, > 0.

    Returns:
        AnalyticLEPosterior with the updated location and scale.
    """
    if not np.isfinite(prior_mean):
        raise ConfigurationError("prior mean must be finite")
    if not np.isfinite(prior_std) or prior_std <= 0.0:
        raise ConfigurationError(f"prior std must be > 0, got {prior_std!r}")
    if not np.isfinite(stress_std) or stress_std <= 0.0:
        raise ConfigurationError(f"stress std must be > 0, got {stress_std!r}")
    strains = np.atleast_1d(np.asarray(strains, dtype=float))
    stresses = np.atleast_1d(np.asarray(stresses, dtype=float))
    if strains.shape != stresses.shape:
        raise ConfigurationError("strains and stresses must have matching shapes")
    if not (np.all(np.isfinite(strains)) and np.all(np.isfinite(stresses))):
        raise ConfigurationError("measurements must be finite")

    s2 = stress_std * stress_std
    p2 = prior_std * prior_std
    denom = s2 + p2 * float(np.sum(strains * strains))
    mean = (s2 * prior_mean + p2 * float(np.sum(strains * stresses))) / denom
    std = float(np.sqrt(s2 * p2 / denom))
    if mean <= 8.0 * std:
        warnings.warn(
            "analytic posterior location is within 8 scales of zero; the "
            "nonnegativity truncation is no longer negligible and the "
            "returned mean/std describe the untruncated Gaussian only",
            stacklevel=2,
        )
    return AnalyticLEPosterior(mean=mean, std=std)


class LogPosterior:
    """Unnormalized log-posterior over nonnegative material parameters.

    Callable on a parameter array of the model's dimension. Off the
    nonnegative orthant the value is ``-inf`` and the likelihood is never
    touched, so the samplers can propose freely.

    ``data`` may be one measurement set, a sequence of sets (independent
    specimens pooled into one identification: their log-likelihoods add),
    or ``None`` for the bare truncated prior; the last is the cheapest way
    to exercise a sampler against a distribution with known moments.
    """

    def __init__(
        self,
        kind: ModelKind,
        prior: TruncatedNormalPrior,
        data: MeasurementSet | Sequence[MeasurementSet] | None = None,
        quadrature: QuadratureSpec | None = None,
    ) -> None:
        if prior.dimension != kind.dimension:
            raise ConfigurationError(
                f"prior dimension {prior.dimension} does not match "
                f"{kind.value} dimension {kind.dimension}"
            )
        if data is None:
            sets: tuple[MeasurementSet, ...] = ()
        elif isinstance(data, MeasurementSet):
            sets = (data,)
        else:
            sets = tuple(data)
            if not sets:
                raise ConfigurationError("an empty sequence of measurement sets is ambiguous; pass None for a prior-only target")
        needs_quadrature = kind is ModelKind.NONLINEAR_HARDENING and any(
            s.noise.double for s in sets
        )
        if quadrature is not None and not needs_quadrature:
            raise ConfigurationError(
                "quadrature settings only apply to the nonlinear hardening "
                "model with stress-and-strain data"
            )
        if needs_quadrature and quadrature is None:
            quadrature = QuadratureSpec()
        self.kind = kind
        self.prior = prior
        self.data = sets
        self.quadrature = quadrature

    @property
    def dimension(self) -> int:
        return self.kind.dimension

    def __call__(self, values: np.ndarray) -> float:
        values = np.asarray(values, dtype=float)
        lp = self.prior.log_density(values)
        if lp == -np.inf:
            return -np.inf
        if not self.data:
            return lp
        x = ParameterVector.from_array(self.kind, values)
        for mset in self.data:
            quadrature = self.quadrature if mset.noise.double else None
            lp += log_likelihood(x, self.kind, mset, quadrature)
        return lp
