"""Log-likelihoods for every model and noise-regime combination.

Stress-only regime: Gaussian residuals between measured and theoretical
stresses. For the implicit nonlinear-hardening model the density carries a
change-of-variables factor on the plastic branch (the implicit response
maps stress intervals nonuniformly), so the Gaussian term is divided by
``1 + (H*n/E) * (strain - s/E)**(n-1)`` there.

Stress-and-strain regime: the true strain is unobserved, so each point's
density marginalizes it over ``[0, a]`` (``a`` being the tester's strain
limit):

    p(stress_m, strain_m | x) =
        integral  N(stress_m; response(e), S_sigma^2) N(e; strain_m, S_eps^2) de.

For the three explicit models the response is affine on each branch and
the integral has a closed form: the Gaussian marginal of the measured
stress times the mass a truncated Gaussian in the true strain assigns to
the branch interval. These closed forms were re-derived from the
marginalization integral and are checked against adaptive quadrature in
the test suite. For the implicit model the plastic branch is integrated
numerically with composite Simpson panels.

Everything is computed and composed in log space; with ten or more
measurements the raw products underflow double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, logsumexp, ndtr

from .data import MeasurementSet
from .errors import ConfigurationError, DomainError, NumericalError
from .models import ModelKind, ParameterVector, stress, stress_lenh, yield_strain

__all__ = [
    "QuadratureSpec",
    "log_likelihood",
    "log_likelihood_single",
    "log_likelihood_double_le",
    "log_likelihood_double_lepp",
    "log_likelihood_double_lelh",
    "log_likelihood_double_lenh",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite-Simpson settings for the implicit-model marginalization.

    Attributes:
        panels: number of Simpson subintervals per point (even, >= 2).
        width: half-width of the integration window in multiples of the
            strain-noise standard deviation. Gaussian mass beyond 8 sigma
            is below 1e-15, far under every tolerance used here.
    """

    panels: int = 512
    width: float = 8.0

    def __post_init__(self) -> None:
        if self.panels < 2 or self.panels % 2 != 0:
            raise ConfigurationError(f"panels must be an even integer >= 2, got {self.panels!r}")
        if not np.isfinite(self.width) or self.width < 4.0:
            raise ConfigurationError(f"width must be >= 4, got {self.width!r}")


def _require_single(data: MeasurementSet) -> float:
    if data.noise.double:
        raise ConfigurationError(
            "stress-and-strain data passed to a stress-only likelihood; "
            "reinterpret the set explicitly if that is intended"
        )
    if data.noise.stress_std <= 0.0:
        raise ConfigurationError("stress-only likelihood requires stress_std > 0")
    return data.noise.stress_std


def _require_double(data: MeasurementSet) -> tuple[float, float, float]:
    if not data.noise.double:
        raise ConfigurationError(
            "stress-only data passed to a stress-and-strain likelihood; "
            "reinterpret the set explicitly if that is intended"
        )
    if data.noise.stress_std <= 0.0 or data.noise.strain_std <= 0.0:
        raise ConfigurationError("stress-and-strain likelihood requires positive noise stds")
    return data.noise.stress_std, data.noise.strain_std, data.noise.strain_limit


def log_likelihood_single(x: ParameterVector, kind: ModelKind, data: MeasurementSet) -> float:
    """Stress-only log-likelihood of a measurement set, any model."""
    s = _require_single(data)
    theoretical = np.atleast_1d(stress(data.strains, x, kind))
    resid = data.stresses - theoretical
    value = float(np.sum(-0.5 * (resid / s) ** 2)) - len(data) * (0.5 * _LOG_2PI + math.log(s))

    if kind is ModelKind.NONLINEAR_HARDENING:
        plastic = data.strains > yield_strain(x)
        if np.any(plastic):
            t = data.strains[plastic] - theoretical[plastic] / x.E
            with np.errstate(divide="ignore", over="ignore"):
                jac = 1.0 + (x.H * x.n / x.E) * np.power(t, x.n - 1.0)
            value -= float(np.sum(np.log(jac)))
    return value


def _log_gauss_mass(lo_z: np.ndarray, hi_z: np.ndarray) -> np.ndarray:
    """log of the standard-normal mass between z-scores, robust in the tails."""
    lo_z, hi_z = np.broadcast_arrays(np.asarray(lo_z, float), np.asarray(hi_z, float))
    out = np.full(lo_z.shape, -np.inf)
    valid = hi_z > lo_z
    # Work in the tail with better conditioning; the straddling case is
    # well-scaled and safe to evaluate directly.
    upper = valid & (lo_z >= 0.0)
    lower = valid & (hi_z <= 0.0)
    middle = valid & ~upper & ~lower
    if np.any(lower):
        a, b = lo_z[lower], hi_z[lower]
        diff = np.minimum(log_ndtr(a) - log_ndtr(b), 0.0)
        out[lower] = log_ndtr(b) + np.log1p(-np.exp(diff))
    if np.any(upper):
        a, b = -hi_z[upper], -lo_z[upper]
        diff = np.minimum(log_ndtr(a) - log_ndtr(b), 0.0)
        out[upper] = log_ndtr(b) + np.log1p(-np.exp(diff))
    if np.any(middle):
        a, b = lo_z[middle], hi_z[middle]
        out[middle] = np.log1p(-(ndtr(a) + ndtr(-b)))
    return out


def _log_affine_branch(sm, em, s_sig, s_eps, intercept, slope, lo, hi) -> np.ndarray:
    """Per-point log of the marginalization integral over one affine branch.

    Evaluates log of
        integral_lo^hi N(sm; intercept + slope*e, s_sig^2) N(e; em, s_eps^2) de
    as marginal-times-mass: completing the square in the true strain e
    leaves the Gaussian marginal of sm (variance slope^2 s_eps^2 + s_sig^2)
    times the mass of the conditional Gaussian in e on [lo, hi].
    """
    sm = np.asarray(sm, float)
    em = np.asarray(em, float)
    variance = slope * slope * s_eps * s_eps + s_sig * s_sig
    resid = sm - intercept - slope * em
    log_marginal = -0.5 * resid * resid / variance - 0.5 * (_LOG_2PI + np.log(variance))
    center = em + slope * s_eps * s_eps * resid / variance
    sd = s_sig * s_eps / np.sqrt(variance)
    return log_marginal + _log_gauss_mass((lo - center) / sd, (hi - center) / sd)


def log_likelihood_double_le(x: ParameterVector, data: MeasurementSet) -> float:
    """Stress-and-strain log-likelihood for the linear elastic model."""
    s_sig, s_eps, a = _require_double(data)
    terms = _log_affine_branch(data.stresses, data.strains, s_sig, s_eps, 0.0, x.E, 0.0, a)
    return float(np.sum(terms))


def log_likelihood_double_lepp(x: ParameterVector, data: MeasurementSet) -> float:
    """Stress-and-strain log-likelihood for the perfectly plastic model."""
    s_sig, s_eps, a = _require_double(data)
    if x.sigma_y0 is None:
        raise DomainError("LE-PP requires sigma_y0")
    if x.E == 0.0:
        raise DomainError("LE-PP stress-and-strain likelihood requires E > 0")
    ey = x.sigma_y0 / x.E
    elastic = _log_affine_branch(
        data.stresses, data.strains, s_sig, s_eps, 0.0, x.E, 0.0, min(ey, a)
    )
    plastic = _log_affine_branch(data.stresses, data.strains, s_sig, s_eps, x.sigma_y0, 0.0, ey, a)
    return float(np.sum(np.logaddexp(elastic, plastic)))


def log_likelihood_double_lelh(x: ParameterVector, data: MeasurementSet) -> float:
    """Stress-and-strain log-likelihood for the linear hardening model."""
    s_sig, s_eps, a = _require_double(data)
    if x.sigma_y0 is None or x.H is None:
        raise DomainError("LE-LH requires sigma_y0 and H")
    if x.H + x.E == 0.0:
        raise DomainError("LE-LH undefined for H + E = 0")
    if x.E == 0.0:
        # The elastic line is flat at zero stress and yield is never
        # reached; the whole strain range is one zero-slope branch.
        terms = _log_affine_branch(data.stresses, data.strains, s_sig, s_eps, 0.0, 0.0, 0.0, a)
        return float(np.sum(terms))
    ey = x.sigma_y0 / x.E
    slope = x.H * x.E / (x.H + x.E)
    elastic = _log_affine_branch(
        data.stresses, data.strains, s_sig, s_eps, 0.0, x.E, 0.0, min(ey, a)
    )
    plastic = _log_affine_branch(
        data.stresses, data.strains, s_sig, s_eps, x.sigma_y0 - slope * ey, slope, ey, a
    )
    return float(np.sum(np.logaddexp(elastic, plastic)))


# Smooth clustering map for Simpson panels when the integration window
# starts exactly at the yield strain: the plastic response behaves like a
# fractional power of the distance to yield there, which wrecks Simpson's
# fourth-order convergence on a uniform mesh. The map 6u^5 - 5u^6 has four
# vanishing derivatives at u = 0, restoring full order, while its interior
# stretch stays below 2.5 so the rest of the window is not starved.
def _cluster_map(u: np.ndarray) -> np.ndarray:
    return u**5 * (6.0 - 5.0 * u)


def _simpson_nodes(panels: int, clustered: bool) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1] for ``panels`` Simpson subintervals."""
    bounds = np.linspace(0.0, 1.0, panels // 2 + 1)
    if clustered:
        bounds = _cluster_map(bounds)
    mids = 0.5 * (bounds[:-1] + bounds[1:])
    nodes = np.empty(panels + 1)
    nodes[0::2] = bounds
    nodes[1::2] = mids
    seg = np.diff(bounds)
    weights = np.zeros(panels + 1)
    weights[0:-1:2] += seg / 6.0
    weights[2::2] += seg / 6.0
    weights[1::2] = 4.0 * seg / 6.0
    return nodes, weights


def log_likelihood_double_lenh(
    x: ParameterVector, data: MeasurementSet, quadrature: QuadratureSpec | None = None
) -> float:
    """Stress-and-strain log-likelihood for the nonlinear hardening model.

    The elastic branch has the usual closed form; the plastic branch is
    integrated per point with composite Simpson over a window of
    ``width`` strain-noise standard deviations around the measured strain,
    clipped to the plastic range and the tester limit. Each node requires
    one implicit stress solve; the solves for all points and nodes are
    batched into a single vectorized call.
    """
    quadrature = quadrature or QuadratureSpec()
    s_sig, s_eps, a = _require_double(data)
    if x.sigma_y0 is None or x.H is None or x.n is None:
        raise DomainError("LE-NH requires sigma_y0, H and n")
    if x.E <= 0.0:
        raise DomainError("LE-NH requires E > 0")
    ey = x.sigma_y0 / x.E

    elastic = _log_affine_branch(
        data.stresses, data.strains, s_sig, s_eps, 0.0, x.E, 0.0, min(ey, a)
    )

    lo = np.maximum(ey, data.strains - quadrature.width * s_eps)
    hi = np.minimum(a, data.strains + quadrature.width * s_eps)
    active = hi > lo
    plastic = np.full(len(data), -np.inf)
    if np.any(active):
        # The clustered mesh is only needed when a window starts exactly at
        # the yield corner; with n = 1 or H = 0 the integrand is smooth.
        corner = active & (lo == ey) & (x.H > 0.0) & (x.n != 1.0)
        plain = active & ~corner
        nodes = np.zeros((len(data), quadrature.panels + 1))
        weights = np.zeros_like(nodes)
        for mask, clustered in ((plain, False), (corner, True)):
            if not np.any(mask):
                continue
            unit_nodes, unit_weights = _simpson_nodes(quadrature.panels, clustered)
            span = (hi[mask] - lo[mask])[:, None]
            nodes[mask] = lo[mask][:, None] + span * unit_nodes
            weights[mask] = span * unit_weights

        response = stress_lenh(nodes[active].ravel(), x).reshape(-1, quadrature.panels + 1)
        log_f = (
            -0.5 * ((data.strains[active][:, None] - nodes[active]) / s_eps) ** 2
            - 0.5 * ((data.stresses[active][:, None] - response) / s_sig) ** 2
            - _LOG_2PI
            - math.log(s_sig)
            - math.log(s_eps)
        )
        with np.errstate(divide="ignore"):
            plastic[active] = logsumexp(log_f + np.log(weights[active]), axis=1)

    per_point = np.logaddexp(elastic, plastic)
    if not np.all(np.isfinite(per_point) | (per_point == -np.inf)):
        i = int(np.argmax(~(np.isfinite(per_point) | (per_point == -np.inf))))
        raise NumericalError(
            "non-finite quadrature for measurement "
            f"(strain={data.strains[i]!r}, stress={data.stresses[i]!r}) at x={x.to_array()!r}"
        )
    return float(np.sum(per_point))


def log_likelihood(
    x: ParameterVector,
    kind: ModelKind,
    data: MeasurementSet,
    quadrature: QuadratureSpec | None = None,
) -> float:
    """Log-likelihood of ``data`` under ``kind`` with parameters ``x``.

    Dispatches on the data's noise regime. ``quadrature`` is only
    meaningful for the nonlinear hardening model in the stress-and-strain
    regime; passing it anywhere else is a configuration error.
    """
    needs_quadrature = kind is ModelKind.NONLINEAR_HARDENING and data.noise.double
    if quadrature is not None and not needs_quadrature:
        raise ConfigurationError(
            "quadrature settings only apply to the nonlinear hardening model "
            "with stress-and-strain noise"
        )
    if not data.noise.double:
        return log_likelihood_single(x, kind, data)
    if kind is ModelKind.LINEAR_ELASTIC:
        return log_likelihood_double_le(x, data)
    if kind is ModelKind.PERFECT_PLASTICITY:
        return log_likelihood_double_lepp(x, data)
    if kind is ModelKind.LINEAR_HARDENING:
        return log_likelihood_double_lelh(x, data)
    return log_likelihood_double_lenh(x, data, quadrature)
