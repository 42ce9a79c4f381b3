"""N-mode interferometer unitaries: 2x2 element composition, the symmetric
(discrete-Fourier) multiport, the asymmetric column-constrained multiport,
deterministic unitary completion, and the waveplate phase-preparation stage.

Conventions
-----------
* A unitary maps input mode amplitudes to output mode amplitudes,
  ``out = U @ in``, so column j holds the output distribution of input j.
* Beamsplitters use the symmetric i-phase convention
  ``[[sqrt(r), i sqrt(1-r)], [i sqrt(1-r), sqrt(r)]]``; any unitary
  convention gives the same intensities, which is all that is observed.
* All angles are radians.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

UNITARITY_TOL = 1e-10        # entrywise tolerance on U^dag U - I
COMPLETION_RANK_TOL = 1e-8   # residual norm below which a candidate is dependent


class NotUnitaryError(ValueError):
    """A constructed matrix failed the unitarity check."""


class ModeUnitary:
    """An N x N unitary acting on optical mode amplitudes.

    The matrix is validated entrywise against U^dag U = I on construction
    and frozen afterwards; a failing matrix raises NotUnitaryError.
    """

    def __init__(self, matrix):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        residual = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
        if residual > UNITARITY_TOL:
            raise NotUnitaryError(
                f"unitarity residual {residual:.3e} exceeds {UNITARITY_TOL:.1e}"
            )
        m.setflags(write=False)
        self._matrix = m

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def dagger(self) -> "ModeUnitary":
        return ModeUnitary(self._matrix.conj().T)

    def unitarity_residual(self) -> float:
        m = self._matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(self.dim))))

    def __matmul__(self, other: "ModeUnitary") -> "ModeUnitary":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return ModeUnitary(self._matrix @ other.matrix)

    def __repr__(self) -> str:
        return f"ModeUnitary(dim={self.dim})"


# ---------------------------------------------------------------------------
# 2x2 optical elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Beamsplitter:
    """Beamsplitter of reflectivity r acting on the mode pair (i, j)."""
    reflectivity: float
    modes: Tuple[int, int]

    def __post_init__(self):
        if not 0.0 <= self.reflectivity <= 1.0:
            raise ValueError(f"reflectivity {self.reflectivity} outside [0, 1]")
        _check_mode_pair(self.modes)

    def block(self) -> np.ndarray:
        r = self.reflectivity
        t = math.sqrt(1.0 - r)
        s = math.sqrt(r)
        return np.array([[s, 1j * t], [1j * t, s]])


@dataclass(frozen=True)
class PhaseShifter:
    """Phase e^{i theta} on a single mode."""
    phase: float
    mode: int

    def __post_init__(self):
        if self.mode < 0:
            raise ValueError("mode index must be non-negative")


@dataclass(frozen=True)
class ModeSwap:
    """Exchange of two modes."""
    modes: Tuple[int, int]

    def __post_init__(self):
        _check_mode_pair(self.modes)


OpticalElement = Union[Beamsplitter, PhaseShifter, ModeSwap]


def _check_mode_pair(modes: Tuple[int, int]):
    i, j = modes
    if i == j:
        raise ValueError("mode pair must be two distinct modes")
    if i < 0 or j < 0:
        raise ValueError("mode indices must be non-negative")


def element_matrix(element: OpticalElement, dim: int) -> np.ndarray:
    """Embed a 2x2 element (or single-mode phase) into a dim x dim unitary."""
    m = np.eye(dim, dtype=complex)
    if isinstance(element, Beamsplitter):
        i, j = element.modes
        _check_dim(max(i, j), dim)
        block = element.block()
        m[i, i], m[i, j] = block[0, 0], block[0, 1]
        m[j, i], m[j, j] = block[1, 0], block[1, 1]
    elif isinstance(element, PhaseShifter):
        _check_dim(element.mode, dim)
        m[element.mode, element.mode] = cmath.exp(1j * element.phase)
    elif isinstance(element, ModeSwap):
        i, j = element.modes
        _check_dim(max(i, j), dim)
        m[i, i] = m[j, j] = 0.0
        m[i, j] = m[j, i] = 1.0
    else:
        raise TypeError(f"unknown optical element {element!r}")
    return m


def _check_dim(index: int, dim: int):
    if index >= dim:
        raise ValueError(f"mode index {index} out of range for dim {dim}")


def compose(elements: Sequence[OpticalElement], dim: int) -> ModeUnitary:
    """Product of element unitaries in application order.

    The first list entry acts first, so the matrix is
    ``E_k ... E_2 E_1`` for elements ``[E_1, ..., E_k]``.
    """
    m = np.eye(dim, dtype=complex)
    for element in elements:
        m = element_matrix(element, dim) @ m
    return ModeUnitary(m)


# ---------------------------------------------------------------------------
# Canonical multiports
# ---------------------------------------------------------------------------

def symmetric_multiport(dim: int) -> ModeUnitary:
    """The discrete-Fourier multiport U_jk = exp(2 pi i jk / N) / sqrt(N).

    Every |entry|^2 equals 1/N, so each input spreads into an equal
    superposition of all outputs.
    """
    if dim < 2:
        raise ValueError("symmetric multiport needs at least two modes")
    j, k = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    return ModeUnitary(np.exp(2j * np.pi * j * k / dim) / math.sqrt(dim))


def asymmetric_multiport(dim: int, offset: float = 0.0) -> ModeUnitary:
    """Column-constrained multiport for even N.

    The first two columns are fixed to
    ``c1_k = 1/sqrt(N)`` and ``c2_k = exp(i (2 pi k / N + offset))/sqrt(N)``
    and the rest are completed deterministically.  Feeding the classical
    two-mode input (1, e^{i phi})/sqrt(2) then yields output intensities
    (1 + cos(phi + 2 pi k / N + offset))/N: one singles fringe per detector,
    stepped by 2 pi / N.
    """
    if dim < 2:
        raise ValueError("asymmetric multiport needs at least two modes")
    if dim % 2 != 0:
        raise ValueError("asymmetric multiport is defined for even mode counts")
    k = np.arange(dim)
    c1 = np.ones(dim, dtype=complex) / math.sqrt(dim)
    c2 = np.exp(1j * (2.0 * np.pi * k / dim + offset)) / math.sqrt(dim)
    return complete_unitary([c1, c2], dim)


def complete_unitary(partial_columns: Sequence[np.ndarray], dim: int) -> ModeUnitary:
    """Extend mutually orthonormal columns to a full unitary.

    Completion is deterministic: canonical basis vectors are tried in index
    order and orthogonalized (twice, for stability) against the columns
    accepted so far; candidates whose residual norm falls below
    COMPLETION_RANK_TOL are skipped.  Re-running on the same input gives a
    bit-identical matrix.
    """
    cols = [np.asarray(c, dtype=complex).reshape(-1) for c in partial_columns]
    if len(cols) > dim:
        raise ValueError("more columns than the target dimension")
    for c in cols:
        if c.shape != (dim,):
            raise ValueError("column length does not match dim")
    q = np.zeros((dim, len(cols)), dtype=complex)
    for idx, c in enumerate(cols):
        q[:, idx] = c
    gram = q.conj().T @ q
    if np.max(np.abs(gram - np.eye(len(cols)))) > UNITARITY_TOL:
        raise ValueError("given columns are not orthonormal")

    basis = list(cols)
    for i in range(dim):
        if len(basis) == dim:
            break
        v = np.zeros(dim, dtype=complex)
        v[i] = 1.0
        for _ in range(2):  # classical Gram-Schmidt, twice
            for b in basis:
                v = v - np.vdot(b, v) * b
        norm = np.linalg.norm(v)
        if norm > COMPLETION_RANK_TOL:
            basis.append(v / norm)
    if len(basis) != dim:
        raise NotUnitaryError("completion failed to reach full rank")
    return ModeUnitary(np.column_stack(basis))


def phase_shifter_unitary(dim: int, phase: float, mode: int = 1) -> ModeUnitary:
    """diag(1, ..., e^{i phase}, ..., 1) with the phase on `mode`."""
    _check_dim(mode, dim)
    d = np.ones(dim, dtype=complex)
    d[mode] = cmath.exp(1j * phase)
    return ModeUnitary(np.diag(d))


# ---------------------------------------------------------------------------
# Polarization preparation (HWP then QWP at 45 degrees)
# ---------------------------------------------------------------------------

def jones_half_wave_plate(angle: float) -> np.ndarray:
    """Jones matrix of a half-wave plate with fast axis at `angle`."""
    c, s = math.cos(2.0 * angle), math.sin(2.0 * angle)
    return np.array([[c, s], [s, -c]], dtype=complex)


def jones_quarter_wave_plate(angle: float) -> np.ndarray:
    """Jones matrix of a quarter-wave plate with fast axis at `angle`."""
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    retard = np.diag([1.0, 1j])
    return rot @ retard @ rot.T


# Fixed reference phase on the second polarization mode, chosen so that a
# half-wave plate at 0 prepares zero relative phase.  Physically this is the
# choice of phase reference plane; the raw Jones product carries a constant
# -pi/2 offset.
_REFERENCE_PHASE = np.diag([1.0, 1j])


def polarization_input(hwp_angle: float) -> np.ndarray:
    """Two-mode field prepared by a HWP at `hwp_angle` then a QWP at 45 deg.

    Returns an equal-amplitude vector proportional to (1, e^{i phi})/sqrt(2)
    with relative phase phi = 4 * hwp_angle: rotating the HWP by phi/4 moves
    the relative phase by phi while leaving both amplitudes at 1/sqrt(2).
    """
    field = np.array([1.0, 0.0], dtype=complex)
    field = jones_half_wave_plate(hwp_angle) @ field
    field = jones_quarter_wave_plate(math.pi / 4.0) @ field
    return _REFERENCE_PHASE @ field


# ---------------------------------------------------------------------------
# Structured-text (JSON) multiport descriptions
# ---------------------------------------------------------------------------

def multiport_from_spec(spec: dict) -> ModeUnitary:
    """Build a multiport from a parsed JSON description.

    Schema (documented in the README):
      - ``dim``: mode count, required
      - ``kind``: "symmetric" | "asymmetric" | "elements"
      - ``offset_deg``: singles-fringe phase offset (asymmetric only)
      - ``elements``: list of {"type": "beamsplitter", "modes": [i, j],
        "reflectivity": r} | {"type": "phase", "mode": i, "phase_deg": d} |
        {"type": "swap", "modes": [i, j]} (elements kind only)
    """
    try:
        dim = int(spec["dim"])
        kind = spec["kind"]
    except KeyError as exc:
        raise ValueError(f"multiport spec is missing {exc.args[0]!r}") from exc
    if kind == "symmetric":
        return symmetric_multiport(dim)
    if kind == "asymmetric":
        offset = math.radians(float(spec.get("offset_deg", 0.0)))
        return asymmetric_multiport(dim, offset)
    if kind == "elements":
        elements = [_element_from_spec(e) for e in spec.get("elements", [])]
        return compose(elements, dim)
    raise ValueError(f"unknown multiport kind {kind!r}")


def _element_from_spec(entry: dict) -> OpticalElement:
    kind = entry.get("type")
    if kind == "beamsplitter":
        return Beamsplitter(float(entry["reflectivity"]),
                            (int(entry["modes"][0]), int(entry["modes"][1])))
    if kind == "phase":
        return PhaseShifter(math.radians(float(entry["phase_deg"])),
                            int(entry["mode"]))
    if kind == "swap":
        return ModeSwap((int(entry["modes"][0]), int(entry["modes"][1])))
    raise ValueError(f"unknown element type {kind!r}")


def load_multiport(path: str) -> ModeUnitary:
    """Load a multiport description from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        spec = json.load(fh)
    return multiport_from_spec(spec)
