"""Noise specifications, synthetic measurement generation, and file I/O.

Measurements are (strain, stress) pairs with stress in GPa. Two noise
regimes exist: stress-only (additive Gaussian noise on the stress) and
stress-and-strain (independent additive Gaussian noise on both channels).

Randomness is driven by :func:`numpy.random.default_rng`. Stream splitting:
the seed spawns two child streams, child 0 for stress noise and child 1 for
strain noise. The stress-only generator uses child 0 as well, so a
stress-and-strain set degenerates to the matching stress-only set when the
strain noise vanishes under the same seed.

Files are a CSV with header ``strain,stress`` (17 significant digits, which
round-trips float64 exactly) plus a JSON sidecar next to it (same stem,
``.json`` suffix) holding the noise specification and provenance.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError
from .models import ModelKind, ParameterVector, stress

__all__ = [
    "NoiseSpec",
    "MeasurementSet",
    "SpecimenPopulation",
    "generate_single_noise",
    "generate_double_noise",
    "draw_specimens",
    "read_measurements",
    "write_measurements",
]


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model attached to a measurement set.

    Attributes:
        stress_std: standard deviation of the stress noise in GPa.
        strain_std: standard deviation of the strain noise; ``None`` marks
            the stress-only regime.
        strain_limit: upper bound of the admissible true strain (the
            physical limit of the tensile tester); ``inf`` by default.

    Zero standard deviations are tolerated here so that exact, noise-free
    sets can be generated for testing; likelihood evaluation rejects them.
    """

    stress_std: float
    strain_std: float | None = None
    strain_limit: float = math.inf

    def __post_init__(self) -> None:
        if not np.isfinite(self.stress_std) or self.stress_std < 0.0:
            raise ConfigurationError(f"stress_std must be finite and >= 0, got {self.stress_std!r}")
        if self.strain_std is not None and (
            not np.isfinite(self.strain_std) or self.strain_std < 0.0
        ):
            raise ConfigurationError(f"strain_std must be finite and >= 0, got {self.strain_std!r}")
        if math.isnan(self.strain_limit) or self.strain_limit <= 0.0:
            raise ConfigurationError(f"strain_limit must be > 0, got {self.strain_limit!r}")

    @property
    def double(self) -> bool:
        """True in the stress-and-strain regime."""
        return self.strain_std is not None


@dataclass(frozen=True)
class MeasurementSet:
    """Ordered (strain, stress) measurements plus their noise model.

    ``strains`` must be strictly increasing and hold at least one entry.
    In the stress-and-strain regime the strains are measured values and may
    be negative; only theoretical strains are confined to the tension
    domain.
    """

    strains: np.ndarray
    stresses: np.ndarray
    noise: NoiseSpec
    provenance: str = ""

    def __post_init__(self) -> None:
        strains = np.asarray(self.strains, dtype=float).reshape(-1)
        stresses = np.asarray(self.stresses, dtype=float).reshape(-1)
        if strains.size != stresses.size:
            raise ConfigurationError(
                f"strain/stress length mismatch: {strains.size} vs {stresses.size}"
            )
        if strains.size < 1:
            raise ConfigurationError("k >= 1 required: a measurement set cannot be empty")
        if not (np.all(np.isfinite(strains)) and np.all(np.isfinite(stresses))):
            raise ConfigurationError("measurements must be finite")
        if strains.size > 1 and not np.all(np.diff(strains) > 0.0):
            raise ConfigurationError("strains must be strictly increasing")
        object.__setattr__(self, "strains", strains)
        object.__setattr__(self, "stresses", stresses)

    def __len__(self) -> int:
        return self.strains.size

    def with_noise(self, noise: NoiseSpec) -> "MeasurementSet":
        """Same points, reinterpreted under a different noise model."""
        return replace(self, noise=noise)


@dataclass(frozen=True)
class SpecimenPopulation:
    """Normal population of specimen parameters for heterogeneity studies."""

    kind: ModelKind
    mean: np.ndarray
    covariance: np.ndarray
    count: int

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.covariance, dtype=float)
        if mean.size != self.kind.dimension:
            raise ConfigurationError(
                f"population mean has {mean.size} entries, {self.kind.value} needs "
                f"{self.kind.dimension}"
            )
        if cov.shape != (mean.size, mean.size):
            raise ConfigurationError(f"population covariance must be {mean.size}x{mean.size}")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(cov).max()))):
            raise ConfigurationError("population covariance must be symmetric")
        eigvals = np.linalg.eigvalsh(cov)
        if eigvals.min() < -1e-10 * max(1.0, eigvals.max()):
            raise ConfigurationError("population covariance must be positive semi-definite")
        if self.count < 1:
            raise ConfigurationError("population count must be >= 1")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)


def _noise_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """The documented stream split: child 0 for stress, child 1 for strain."""
    stress_rng, strain_rng = np.random.default_rng(seed).spawn(2)
    return stress_rng, strain_rng


def _check_strain_grid(strains) -> np.ndarray:
    grid = np.asarray(strains, dtype=float).reshape(-1)
    if grid.size < 1:
        raise ConfigurationError("k >= 1 required: empty strain grid")
    if np.any(grid < 0.0) or not np.all(np.isfinite(grid)):
        raise ConfigurationError("strain grid must be finite and >= 0")
    if grid.size > 1 and not np.all(np.diff(grid) > 0.0):
        raise ConfigurationError("strain grid must be strictly increasing")
    return grid


def generate_single_noise(
    x: ParameterVector,
    kind: ModelKind,
    strains,
    stress_std: float,
    seed: int,
) -> MeasurementSet:
    """Measurements with Gaussian noise on the stress only.

    The strains are exact and pass through unchanged; measured stresses are
    the theoretical response plus i.i.d. Normal(0, stress_std**2) draws.
    Deterministic for a fixed seed.
    """
    grid = _check_strain_grid(strains)
    noise = NoiseSpec(stress_std=stress_std)
    stress_rng, _ = _noise_streams(seed)
    measured = stress(grid, x, kind) + noise.stress_std * stress_rng.standard_normal(grid.size)
    provenance = f"synthetic model={kind.value} x={x.to_array().tolist()} seed={seed}"
    return MeasurementSet(strains=grid, stresses=measured, noise=noise, provenance=provenance)


def generate_double_noise(
    x: ParameterVector,
    kind: ModelKind,
    strains,
    stress_std: float,
    strain_std: float,
    seed: int,
    strain_limit: float = math.inf,
) -> MeasurementSet:
    """Measurements with independent Gaussian noise on stress and strain.

    The stress noise is applied at the true strain (the generative reading:
    the specimen deforms to the true strain, both channels are then read
    off with their own instrument errors). Pairs are sorted by measured
    strain so the stored set is strictly increasing; sorting keeps each
    (strain, stress) pair together and the likelihood treats points as
    exchangeable, so no information is moved.
    """
    grid = _check_strain_grid(strains)
    noise = NoiseSpec(stress_std=stress_std, strain_std=strain_std, strain_limit=strain_limit)
    if np.any(grid > noise.strain_limit):
        raise ConfigurationError("strain grid exceeds the tester's strain limit")
    stress_rng, strain_rng = _noise_streams(seed)
    measured_stress = stress(grid, x, kind) + noise.stress_std * stress_rng.standard_normal(
        grid.size
    )
    measured_strain = grid + noise.strain_std * strain_rng.standard_normal(grid.size)
    order = np.argsort(measured_strain, kind="stable")
    provenance = f"synthetic model={kind.value} x={x.to_array().tolist()} seed={seed}"
    return MeasurementSet(
        strains=measured_strain[order],
        stresses=measured_stress[order],
        noise=noise,
        provenance=provenance,
    )


def draw_specimens(pop: SpecimenPopulation, seed) -> list[ParameterVector]:
    """Draw specimen parameter vectors, rejecting negative components.

    Draws are i.i.d. multivariate normal; rows with any negative component
    are discarded and redrawn. A rejection rate above 99.9% aborts with a
    configuration error: such a population is incompatible with the
    nonnegativity support.
    """
    rng = np.random.default_rng(seed)
    accepted: list[np.ndarray] = []
    proposed = 0
    batch = max(pop.count, 16)
    while len(accepted) < pop.count:
        rows = rng.multivariate_normal(pop.mean, pop.covariance, size=batch)
        proposed += batch
        for row in rows:
            if np.all(row >= 0.0):
                accepted.append(row)
                if len(accepted) == pop.count:
                    break
        if proposed >= 1000 * pop.count and len(accepted) < 0.001 * proposed:
            raise ConfigurationError(
                f"specimen rejection rate above 99.9% ({len(accepted)}/{proposed} accepted); "
                "population mass is almost entirely outside the nonnegative support"
            )
    return [ParameterVector.from_array(pop.kind, row) for row in accepted[: pop.count]]


def write_measurements(mset: MeasurementSet, path) -> None:
    """Write the CSV file and its JSON sidecar."""
    path = Path(path)
    lines = ["strain,stress"]
    for eps, sig in zip(mset.strains, mset.stresses):
        lines.append(f"{eps:.17g},{sig:.17g}")
    path.write_text("\n".join(lines) + "\n")

    sidecar = {
        "noise": {
            "regime": "stress-strain" if mset.noise.double else "stress-only",
            "stress_std": mset.noise.stress_std,
            "strain_std": mset.noise.strain_std,
            # JSON has no infinity; null encodes an unbounded tester.
            "strain_limit": None if math.isinf(mset.noise.strain_limit) else mset.noise.strain_limit,
        },
        "provenance": mset.provenance,
    }
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def _parse_sidecar(path) -> tuple[NoiseSpec, str]:
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"missing sidecar {path}") from None
    except json.JSONDecodeError as err:
        raise ConfigurationError(f"malformed sidecar {path}: {err}") from None
    try:
        block = raw["noise"]
        regime = block["regime"]
        limit = block.get("strain_limit")
        noise = NoiseSpec(
            stress_std=float(block["stress_std"]),
            strain_std=float(block["strain_std"]) if regime == "stress-strain" else None,
            strain_limit=math.inf if limit is None else float(limit),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigurationError(f"invalid sidecar {path}: {err}") from None
    return noise, str(raw.get("provenance", ""))


def read_measurements(path) -> MeasurementSet:
    """Read a measurement CSV plus sidecar written by :func:`write_measurements`.

    Raises:
        ConfigurationError: on malformed rows or ordering problems; the
            message names the offending line number.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigurationError(f"no such measurement file: {path}") from None
    lines = text.splitlines()
    if not lines:
        raise ConfigurationError(f"{path}: empty file")
    if lines[0].strip() != "strain,stress":
        raise ConfigurationError(f"{path}:1: expected header 'strain,stress', got {lines[0]!r}")

    strains: list[float] = []
    stresses: list[float] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ConfigurationError(f"{path}:{lineno}: expected two comma-separated values")
        try:
            eps, sig = float(parts[0]), float(parts[1])
        except ValueError:
            raise ConfigurationError(f"{path}:{lineno}: non-numeric value in {line!r}") from None
        if strains and eps <= strains[-1]:
            raise ConfigurationError(f"{path}:{lineno}: strains must be strictly increasing")
        strains.append(eps)
        stresses.append(sig)
    if not strains:
        raise ConfigurationError(f"{path}: k >= 1 required, found no data rows")

    noise, provenance = _parse_sidecar(path.with_suffix(".json"))
    return MeasurementSet(
        strains=np.array(strains), stresses=np.array(stresses), noise=noise, provenance=provenance
    )
