"""Coherent-light run of the multiport: singles rates per detector, N-fold
coincidences as the product of singles, and Poisson-noisy synthetic counts.

The bright two-mode input (1, e^{i phi})/sqrt(2) enters modes 1, 2.  With
the canonical multiports each detector sees a unit-visibility fringe
1 + cos(phi + 2 pi k/N + offset), and the product of all N singles fringes
oscillates N times per cycle: phase super-resolution without any
entangled state in the apparatus.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, TextIO, Tuple

import numpy as np

from .multiport import ModeUnitary

CSV_VERSION = "noonlab-csv v1"
DATASET_SCHEMA = "fringe-dataset"


class SaturationWarning(UserWarning):
    """Mean photons per coincidence window exceeds 1: counting electronics
    would saturate at these rates."""


class CsvFormatError(ValueError):
    """A CSV file failed schema or version validation."""


def classical_input(dim: int, phi: float) -> np.ndarray:
    """The two-bright-mode field (1, e^{i phi}, 0, ..., 0)/sqrt(2)."""
    field_vec = np.zeros(dim, dtype=complex)
    field_vec[0] = 1.0
    field_vec[1] = np.exp(1j * phi)
    return field_vec / math.sqrt(2.0)


def singles_probabilities(U: ModeUnitary, phi: float) -> np.ndarray:
    """Detection probabilities |(U e(phi))_k|^2 at each of the N outputs.

    These sum to 1 for any unitary (no loss is modeled).
    """
    if U.dim < 2:
        raise ValueError("need at least two modes for the two-mode input")
    out = U.matrix @ classical_input(U.dim, phi)
    return np.abs(out) ** 2


def coincidence_probability(U: ModeUnitary, phi: float) -> float:
    """Product of the N singles probabilities at phase phi.

    For coherent light the N-fold coincidence rate is exactly this product;
    for the canonical multiports it traces A (1 + cos(N phi + Delta)).
    """
    return float(np.prod(singles_probabilities(U, phi)))


def singles_scan(U: ModeUnitary, phis: Sequence[float]) -> np.ndarray:
    """singles_probabilities stacked over a phase grid, shape (points, N)."""
    return np.array([singles_probabilities(U, p) for p in np.asarray(phis, float)])


# ---------------------------------------------------------------------------
# Synthetic photon counting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanConfig:
    """Counting configuration for a synthetic run.

    ``mean_photons`` is the per-detector mean photon number per coincidence
    window, averaged over the phase cycle; detector k then sees a per-window
    mean of ``mean_photons * N * P_k(phi)``.  The total over all detectors
    is ``mean_photons * N`` per window, which must stay at or below 1 to
    avoid saturating the coincidence electronics (a warning is emitted
    above that).
    """
    phis: Tuple[float, ...]
    mean_photons: float = 0.05
    windows: int = 200_000
    seed: int = 0

    def __post_init__(self):
        if len(self.phis) == 0:
            raise ValueError("phase grid is empty")
        if self.mean_photons <= 0.0:
            raise ValueError("mean photon number must be positive")
        if self.windows < 1:
            raise ValueError("need at least one counting window")


@dataclass(frozen=True)
class FringeDataset:
    """Phase-indexed count records with Poisson uncertainties.

    ``singles`` has shape (points, N) and ``coincidences`` shape (points,);
    both hold integer counts and the 1 sigma uncertainties are exactly the
    square roots of the counts.
    """
    phis: np.ndarray
    singles: np.ndarray
    coincidences: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phis", np.asarray(self.phis, dtype=float))
        object.__setattr__(self, "singles", np.asarray(self.singles, dtype=np.int64))
        object.__setattr__(self, "coincidences",
                           np.asarray(self.coincidences, dtype=np.int64))
        if self.singles.shape[0] != self.phis.shape[0]:
            raise ValueError("singles rows must match the phase grid")
        if self.coincidences.shape != self.phis.shape:
            raise ValueError("coincidence column must match the phase grid")
        if (self.singles < 0).any() or (self.coincidences < 0).any():
            raise ValueError("counts must be non-negative")

    @property
    def detectors(self) -> int:
        return self.singles.shape[1]

    @property
    def singles_sigma(self) -> np.ndarray:
        return np.sqrt(self.singles.astype(float))

    @property
    def coincidence_sigma(self) -> np.ndarray:
        return np.sqrt(self.coincidences.astype(float))


def _point_rng(seed: int, index: int) -> np.random.Generator:
    # Philox is counter-based: keying on (seed, point index) gives every grid
    # point its own stream, independent of evaluation order.
    return np.random.Generator(np.random.Philox(key=[seed, index]))


def simulate_counts(U: ModeUnitary, cfg: ScanConfig) -> FringeDataset:
    """Draw Poisson counts for every grid point of a classical scan.

    Per point, detector k gets Poisson(W * m_k) singles counts with
    m_k = mean_photons * N * P_k(phi), and the N-fold coincidence count is
    Poisson(W * prod_k m_k), the independent-detection product rule for
    coherent light.  Deterministic under a fixed seed.
    """
    n = U.dim
    if cfg.mean_photons * n > 1.0:
        warnings.warn(
            f"mean photons per coincidence window is {cfg.mean_photons * n:.3g} "
            "(> 1): coincidence electronics would saturate",
            SaturationWarning,
            stacklevel=2,
        )
    phis = np.asarray(cfg.phis, dtype=float)
    singles = np.zeros((len(phis), n), dtype=np.int64)
    coinc = np.zeros(len(phis), dtype=np.int64)
    for i, phi in enumerate(phis):
        means = cfg.mean_photons * n * singles_probabilities(U, phi)
        rng = _point_rng(cfg.seed, i)
        singles[i] = rng.poisson(cfg.windows * means)
        coinc[i] = rng.poisson(cfg.windows * float(np.prod(means)))
    return FringeDataset(phis=phis, singles=singles, coincidences=coinc)


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------

def write_dataset_csv(dataset: FringeDataset, stream: TextIO) -> None:
    """Write the versioned fringe-dataset CSV.

    Layout: a version comment line, a header row, then one row per phase
    with columns phi_rad, s1..sN, coinc, sigma_s1..sigma_sN, sigma_coinc.
    """
    n = dataset.detectors
    stream.write(f"# {CSV_VERSION} {DATASET_SCHEMA}\n")
    header = (["phi_rad"] + [f"s{k + 1}" for k in range(n)] + ["coinc"]
              + [f"sigma_s{k + 1}" for k in range(n)] + ["sigma_coinc"])
    stream.write(",".join(header) + "\n")
    s_sigma = dataset.singles_sigma
    c_sigma = dataset.coincidence_sigma
    for i, phi in enumerate(dataset.phis):
        cells = [repr(float(phi))]
        cells += [str(int(v)) for v in dataset.singles[i]]
        cells += [str(int(dataset.coincidences[i]))]
        cells += [repr(float(v)) for v in s_sigma[i]]
        cells += [repr(float(c_sigma[i]))]
        stream.write(",".join(cells) + "\n")


def read_dataset_csv(stream: TextIO) -> FringeDataset:
    """Parse a fringe-dataset CSV, rejecting unknown versions or schemas."""
    first = stream.readline()
    if not first.startswith("#"):
        raise CsvFormatError("missing version comment line")
    tag = first[1:].strip()
    expected = f"{CSV_VERSION} {DATASET_SCHEMA}"
    if tag != expected:
        raise CsvFormatError(f"unsupported CSV version/schema {tag!r}")
    header = stream.readline().strip().split(",")
    if not header or header[0] != "phi_rad":
        raise CsvFormatError("malformed header row")
    try:
        n = header.index("coinc") - 1
    except ValueError:
        raise CsvFormatError("header is missing the coinc column") from None
    if n < 1 or len(header) != 2 * n + 3:
        raise CsvFormatError("header column count is inconsistent")
    phis: List[float] = []
    singles: List[List[int]] = []
    coinc: List[int] = []
    for line in stream:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise CsvFormatError(f"row has {len(cells)} cells, expected {len(header)}")
        phis.append(float(cells[0]))
        singles.append([int(float(c)) for c in cells[1:1 + n]])
        coinc.append(int(float(cells[1 + n])))
    if not phis:
        raise CsvFormatError("dataset has no data rows")
    return FringeDataset(phis=np.array(phis),
                         singles=np.array(singles, dtype=np.int64),
                         coincidences=np.array(coinc, dtype=np.int64))
