"""Phase super-sensitivity accounting.

Super-resolution (N fringe oscillations per cycle) is visible in the data;
super-sensitivity (phase uncertainty below the classical 1/sqrt(N_tot)
limit) additionally requires resource bookkeeping.  This module evaluates
the error-propagation phase uncertainty, the classical limit, the
efficiency-visibility criterion eta V^2 N > 1 and its general form, and the
closed-form efficiency/visibility expressions used for comparisons between
schemes.  Factorial formulas are evaluated as exact big-integer rationals
and converted to float only at the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

DEFAULT_DELTA_A = 0.5    # worst-case uncertainty of a 0/1-bounded observable


# ---------------------------------------------------------------------------
# Error propagation and the classical limit
# ---------------------------------------------------------------------------

def phase_uncertainty(delta_a: float, slope: float) -> float:
    """Delta phi = Delta A / |d<A>/d phi|.

    A zero slope means the observable carries no phase information there;
    the explicit infinity marker ``math.inf`` is returned (0/0 resolves to
    0: a dispersionless observable is noiseless at any slope).
    """
    if delta_a < 0.0:
        raise ValueError("observable uncertainty must be non-negative")
    if delta_a == 0.0:
        return 0.0
    if slope == 0.0:
        return math.inf
    return delta_a / abs(slope)


def fringe_slope(n_photons: int, visibility: float, phi: float) -> float:
    """Slope of the normalized fringe (1 - V cos(N phi))/2:
    d<A>/d phi = (1/2) N V sin(N phi)."""
    return 0.5 * n_photons * visibility * math.sin(n_photons * phi)


def classical_limit(n_total: float) -> float:
    """Delta phi_class = 1/sqrt(N_tot) for N_tot consumed resources."""
    if n_total <= 0.0:
        raise ValueError("resource count must be positive")
    return 1.0 / math.sqrt(n_total)


# ---------------------------------------------------------------------------
# Super-sensitivity criterion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SensitivityInput:
    """Operating point for the super-sensitivity check.

    ``efficiency`` counts every consumed resource: N/efficiency photons are
    used per N-photon trial.  ``phi`` defaults to the point of minimum phase
    uncertainty, sin^2(N phi) = 1.
    """
    n_photons: int
    visibility: float
    efficiency: float = 1.0
    delta_a: float = DEFAULT_DELTA_A
    phi: Optional[float] = None

    def __post_init__(self):
        if self.n_photons < 1:
            raise ValueError("photon number must be at least 1")
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError("visibility must lie in [0, 1]")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in (0, 1]")
        if self.delta_a < 0.0:
            raise ValueError("observable uncertainty must be non-negative")

    def operating_phi(self) -> float:
        if self.phi is not None:
            return self.phi
        return math.pi / (2.0 * self.n_photons)   # sin(N phi) = 1


@dataclass(frozen=True)
class Verdict:
    """Outcome of the criterion together with its margin: the ratio of the
    achieved eta V^2 to the required bound (super-sensitive iff > 1)."""
    super_sensitive: bool
    margin: float


def beats_classical(inp: SensitivityInput) -> Verdict:
    """Evaluate eta V^2 > 4 (Delta A)^2 / (N sin^2(N phi)).

    At the worst-case Delta A = 1/2 and the optimal operating point this
    reduces to eta V^2 N > 1.  An operating point with sin(N phi) = 0 is
    undefined (no phase information) and raises ValueError.
    """
    phi = inp.operating_phi()
    sin_term = math.sin(inp.n_photons * phi) ** 2
    if sin_term < 1e-30:
        raise ValueError("sin(N phi) = 0: undefined operating point")
    lhs = inp.efficiency * inp.visibility ** 2
    rhs = 4.0 * inp.delta_a ** 2 / (inp.n_photons * sin_term)
    if rhs == 0.0:
        return Verdict(super_sensitive=True, margin=math.inf)
    margin = lhs / rhs
    return Verdict(super_sensitive=margin > 1.0, margin=margin)


def required_efficiency_exact(n_photons: int, visibility: float) -> Fraction:
    """Exact 1/(V^2 N): the overall efficiency above which a fringe of
    visibility V with N photons becomes super-sensitive."""
    if n_photons < 1:
        raise ValueError("photon number must be at least 1")
    if visibility <= 0.0:
        raise ValueError("visibility must be positive")
    v = Fraction(visibility)
    return 1 / (v * v * n_photons)


def required_efficiency(n_photons: int, visibility: float) -> float:
    """1/(V^2 N) as a float; values above 1 mean the criterion is
    unreachable at that visibility."""
    return float(required_efficiency_exact(n_photons, visibility))


def threshold_visibility(n_photons: int, efficiency: float = 1.0) -> float:
    """Visibility above which eta V^2 N > 1, i.e. 1/sqrt(eta N)."""
    if n_photons < 1:
        raise ValueError("photon number must be at least 1")
    if not 0.0 < efficiency <= 1.0:
        raise ValueError("efficiency must lie in (0, 1]")
    return 1.0 / math.sqrt(efficiency * n_photons)


# ---------------------------------------------------------------------------
# Closed-form scheme comparisons
# ---------------------------------------------------------------------------

def preparation_efficiency_exact(n_photons: int) -> Fraction:
    """2 N! / N^N, the best heralding efficiency of nondeterministic
    linear-optics NOON preparation."""
    if n_photons < 2:
        raise ValueError("preparation efficiency is defined for N >= 2")
    return Fraction(2 * math.factorial(n_photons), n_photons ** n_photons)


def preparation_efficiency(n_photons: int) -> float:
    return float(preparation_efficiency_exact(n_photons))


def nondeterministic_supersensitivity_possible(n_photons: int) -> bool:
    """Whether 2 N!/N^(N-1) > 1, i.e. whether the ideal nondeterministic
    scheme can beat the classical limit at all.  Exact integer arithmetic;
    true only for N = 2 and 3."""
    if n_photons < 2:
        raise ValueError("defined for N >= 2")
    return 2 * math.factorial(n_photons) > n_photons ** (n_photons - 1)


def supersensitivity_margin_exact(n_photons: int) -> Fraction:
    """The exact ratio 2 N!/N^(N-1) behind the yes/no answer above."""
    if n_photons < 2:
        raise ValueError("defined for N >= 2")
    return Fraction(2 * math.factorial(n_photons), n_photons ** (n_photons - 1))


def multi_exposure_visibility_exact(n_photons: int) -> Fraction:
    """2 (N!)^2 / (2N)!: visibility of summing N exposures of a
    nonlinear-detection fringe."""
    if n_photons < 1:
        raise ValueError("photon number must be at least 1")
    f = math.factorial(n_photons)
    return Fraction(2 * f * f, math.factorial(2 * n_photons))


def multi_exposure_visibility(n_photons: int) -> float:
    return float(multi_exposure_visibility_exact(n_photons))


def equivalent_wavelength(wavelength: float, n_photons: int) -> float:
    """lambda / N: the wavelength a standard interferometer would need to
    match the fringe spacing of an N-fold super-resolving measurement."""
    if wavelength <= 0.0:
        raise ValueError("wavelength must be positive")
    if n_photons < 1:
        raise ValueError("photon number must be at least 1")
    return wavelength / n_photons


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SensitivityReport:
    """Everything the sensitivity command prints, in one record."""
    n_photons: int
    visibility: float
    efficiency: float
    delta_a: float
    phi: float
    phase_uncertainty: float
    classical_uncertainty: float
    super_sensitive: bool
    margin: float
    threshold_visibility: float
    required_efficiency: float
    efficiency_attainable: bool

    def lines(self):
        yield f"n_photons = {self.n_photons}"
        yield f"visibility = {self.visibility:.6g}"
        yield f"efficiency = {self.efficiency:.6g}"
        yield f"delta_a = {self.delta_a:.6g}"
        yield f"phi_rad = {self.phi:.6g}"
        yield f"phase_uncertainty = {self.phase_uncertainty:.6g}"
        yield f"classical_uncertainty = {self.classical_uncertainty:.6g}"
        yield f"super_sensitive = {'yes' if self.super_sensitive else 'no'}"
        yield f"margin = {self.margin:.6g}"
        yield f"threshold_visibility = {self.threshold_visibility:.6g}"
        required = self.required_efficiency
        if self.efficiency_attainable:
            yield f"required_efficiency = {required:.6g}"
        else:
            yield (f"required_efficiency = {required:.6g} "
                   "(> 1: unattainable at this visibility)")


def sensitivity_report(inp: SensitivityInput) -> SensitivityReport:
    """Evaluate the full super-sensitivity accounting at one operating point."""
    phi = inp.operating_phi()
    slope = fringe_slope(inp.n_photons, inp.visibility, phi)
    uncertainty = phase_uncertainty(inp.delta_a, slope)
    classical = classical_limit(inp.n_photons / inp.efficiency)
    verdict = beats_classical(inp)
    required = required_efficiency(inp.n_photons, inp.visibility) \
        if inp.visibility > 0.0 else math.inf
    return SensitivityReport(
        n_photons=inp.n_photons,
        visibility=inp.visibility,
        efficiency=inp.efficiency,
        delta_a=inp.delta_a,
        phi=phi,
        phase_uncertainty=uncertainty,
        classical_uncertainty=classical,
        super_sensitive=verdict.super_sensitive,
        margin=verdict.margin,
        threshold_visibility=threshold_visibility(inp.n_photons, inp.efficiency),
        required_efficiency=required,
        efficiency_attainable=required <= 1.0,
    )
