"""Occupation-number (Fock) basis bookkeeping for n photons in m modes.

Basis states are occupation lists |n_1 ... n_m> with a fixed total photon
number; superpositions live in one (modes, photons) sector and are stored
sparsely, since post-selected states touch only a handful of basis states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Tuple

SECTOR_CAP = 10**6     # refuse to enumerate sectors larger than this
NORM_TOL = 1e-12       # absolute tolerance on state norms


class SectorSizeError(ValueError):
    """The requested (modes, photons) sector exceeds the enumeration cap."""


class SectorMismatchError(ValueError):
    """Two states from different (modes, photons) sectors were combined."""


def sector_dimension(modes: int, photons: int) -> int:
    """Number of occupation states of `photons` photons in `modes` modes,
    i.e. the stars-and-bars count C(photons + modes - 1, modes - 1)."""
    if modes < 1:
        raise ValueError("need at least one mode")
    if photons < 0:
        raise ValueError("photon number must be non-negative")
    return math.comb(photons + modes - 1, modes - 1)


@dataclass(frozen=True)
class FockState:
    """A single occupation-number basis ket |n_1 ... n_m>."""

    occupations: Tuple[int, ...]

    def __post_init__(self):
        occ = tuple(int(n) for n in self.occupations)
        if len(occ) < 1:
            raise ValueError("a Fock state needs at least one mode")
        if any(n < 0 for n in occ):
            raise ValueError(f"negative occupation in {occ}")
        object.__setattr__(self, "occupations", occ)

    @property
    def modes(self) -> int:
        return len(self.occupations)

    @property
    def photons(self) -> int:
        return sum(self.occupations)

    def __iter__(self) -> Iterator[int]:
        return iter(self.occupations)

    def __getitem__(self, i: int) -> int:
        return self.occupations[i]

    def __str__(self) -> str:
        return "|" + ",".join(str(n) for n in self.occupations) + ">"


def enumerate_sector(modes: int, photons: int) -> List[FockState]:
    """All occupation states of the (modes, photons) sector.

    The order is lexicographic descending on the occupation tuples, so the
    first state piles every photon into mode 1 and the last into mode m.
    Raises SectorSizeError when the sector would exceed SECTOR_CAP states.
    """
    size = sector_dimension(modes, photons)
    if size > SECTOR_CAP:
        raise SectorSizeError(
            f"sector ({modes}, {photons}) has {size} states, cap is {SECTOR_CAP}"
        )

    states: List[FockState] = []

    def fill(prefix: Tuple[int, ...], remaining: int, slots: int):
        if slots == 1:
            states.append(FockState(prefix + (remaining,)))
            return
        for n in range(remaining, -1, -1):
            fill(prefix + (n,), remaining - n, slots - 1)

    fill((), photons, modes)
    return states


class FockVector:
    """A complex superposition over one (modes, photons) sector.

    Amplitudes are stored as a sparse map from FockState to complex.  The
    vector is immutable after construction; norms up to 1 + NORM_TOL are
    accepted so that renormalized post-selected states round-trip cleanly.
    """

    def __init__(self, modes: int, photons: int,
                 amplitudes: Mapping[FockState, complex]):
        if modes < 1:
            raise ValueError("need at least one mode")
        if photons < 0:
            raise ValueError("photon number must be non-negative")
        amps: Dict[FockState, complex] = {}
        for state, amp in amplitudes.items():
            if not isinstance(state, FockState):
                state = FockState(tuple(state))
            if state.modes != modes or state.photons != photons:
                raise SectorMismatchError(
                    f"state {state} does not lie in sector ({modes}, {photons})"
                )
            value = complex(amp)
            if value != 0:
                amps[state] = value
        self._modes = modes
        self._photons = photons
        self._amps = amps

    @property
    def sector(self) -> Tuple[int, int]:
        return (self._modes, self._photons)

    @property
    def modes(self) -> int:
        return self._modes

    @property
    def photons(self) -> int:
        return self._photons

    def amplitude(self, state: FockState) -> complex:
        return self._amps.get(state, 0j)

    def items(self):
        return self._amps.items()

    def __len__(self) -> int:
        return len(self._amps)

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self._amps.values()))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol

    def normalized(self) -> "FockVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return FockVector(self._modes, self._photons,
                          {s: a / n for s, a in self._amps.items()})

    def __repr__(self) -> str:
        terms = ", ".join(f"{s}: {a:.4g}" for s, a in sorted(
            self._amps.items(), key=lambda kv: kv[0].occupations, reverse=True))
        return f"FockVector({self._modes}, {self._photons}, {{{terms}}})"


def inner_product(a: FockVector, b: FockVector) -> complex:
    """<a|b>, conjugate-linear in the first argument.

    Both vectors must live in the same (modes, photons) sector.
    """
    if a.sector != b.sector:
        raise SectorMismatchError(f"sectors differ: {a.sector} vs {b.sector}")
    # iterate over the smaller support
    small, big, conj_first = (a, b, True) if len(a) <= len(b) else (b, a, False)
    total = 0j
    for state, amp in small.items():
        other = big.amplitude(state)
        total += amp.conjugate() * other if conj_first else other.conjugate() * amp
    return total


def fidelity(a: FockVector, b: FockVector) -> float:
    """|<a|b>|^2 for two same-sector vectors."""
    return abs(inner_product(a, b)) ** 2


def basis_vector(state: FockState) -> FockVector:
    """The sector vector with unit amplitude on one basis state."""
    return FockVector(state.modes, state.photons, {state: 1.0})


def noon_state(n_photons: int) -> FockVector:
    """The two-mode state (|N,0> + |0,N>)/sqrt(2)."""
    if n_photons < 1:
        raise ValueError("NOON state needs at least one photon")
    amp = 1.0 / math.sqrt(2.0)
    return FockVector(2, n_photons, {
        FockState((n_photons, 0)): amp,
        FockState((0, n_photons)): amp,
    })
