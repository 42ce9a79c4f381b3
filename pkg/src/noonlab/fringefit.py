"""Weighted nonlinear least-squares fitting of singles and coincidence
fringes: single sinusoids c (1 + v sin(f phi + delta)) and products of N
unit-frequency sinusoids whose product oscillates N times per cycle.

The optimizer is a damped Gauss-Newton (Levenberg-style) iteration with the
analytic Jacobian of the product model.  Visibility is parametrized as
v = sin(u)^2 internally, which keeps it in [0, 1] smoothly; uncertainties
are transformed back at the end.  Damping is multiplied by 10 on a rejected
step and divided by 10 on an accepted one, so chi^2 never increases across
accepted steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

TWO_PI = 2.0 * math.pi

CHI2_RTOL = 1e-10       # stop on relative chi^2 change below this
STEP_TOL = 1e-12        # or on step norm below this
MAX_ITERATIONS = 200
BOUND_MARGIN = 1e-6     # visibility within this of 0 or 1 is flagged
_INIT_V_LO, _INIT_V_HI = 0.02, 0.998   # keep initial u away from flat spots


class DegenerateDataError(ValueError):
    """The data carry no fringe to fit (constant values)."""


class FitConvergenceError(RuntimeError):
    """The optimizer hit the iteration cap; carries the partial result."""

    def __init__(self, message: str, result):
        super().__init__(message)
        self.result = result


def poisson_sigma(counts) -> np.ndarray:
    """sqrt(count) uncertainties with the standard floor of 1 for empty bins."""
    return np.maximum(np.sqrt(np.asarray(counts, dtype=float)), 1.0)


def wrap_phase(delta) -> np.ndarray:
    """Map phases into [0, 2 pi)."""
    return np.mod(delta, TWO_PI)


def circular_difference(a: float, b: float) -> float:
    """(a - b) wrapped into [0, 2 pi)."""
    return float(np.mod(a - b, TWO_PI))


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

def sinusoid_model(phi, offset: float, visibility: float, phase: float,
                   frequency: float = 1.0) -> np.ndarray:
    """c (1 + v sin(f phi + delta))."""
    phi = np.asarray(phi, dtype=float)
    return offset * (1.0 + visibility * np.sin(frequency * phi + phase))


def product_model(phi, offsets, visibilities, phases,
                  scale: float = 1.0) -> np.ndarray:
    """g * prod_i c_i (1 + v_i sin(phi + delta_i))."""
    phi = np.asarray(phi, dtype=float)
    out = np.full_like(phi, scale, dtype=float)
    for c, v, d in zip(offsets, visibilities, phases):
        out *= c * (1.0 + v * np.sin(phi + d))
    return out


# ---------------------------------------------------------------------------
# Damped Gauss-Newton engine
# ---------------------------------------------------------------------------

@dataclass
class _Outcome:
    x: np.ndarray
    covariance: np.ndarray
    chi2: float
    reduced_chi2: float
    converged: bool
    iterations: int


def _damped_least_squares(residual_jacobian: Callable, x0: np.ndarray,
                          dof: int, max_iterations: int) -> _Outcome:
    x = np.asarray(x0, dtype=float).copy()
    r, jac = residual_jacobian(x)
    chi2 = float(r @ r)
    lam = 1e-3
    iterations = 0
    converged = False
    while iterations < max_iterations:
        iterations += 1
        normal = jac.T @ jac
        gradient = jac.T @ r
        damped = normal + lam * np.diag(np.maximum(np.diag(normal), 1e-30))
        try:
            step = np.linalg.solve(damped, -gradient)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        trial = x + step
        r_new, jac_new = residual_jacobian(trial)
        chi2_new = float(r_new @ r_new)
        if chi2_new <= chi2:
            relative_drop = (chi2 - chi2_new) / max(chi2, np.finfo(float).tiny)
            x, r, jac, chi2 = trial, r_new, jac_new, chi2_new
            lam = max(lam / 10.0, 1e-14)
            # a tiny but nonzero drop only counts once damping is low (the
            # step was near-Gauss-Newton, not a forced crawl); an exactly
            # zero drop is the float floor and ends the fit regardless
            if relative_drop == 0.0 \
                    or (relative_drop < CHI2_RTOL and lam <= 1e-3) \
                    or np.linalg.norm(step) < STEP_TOL:
                converged = True
                break
        else:
            lam *= 10.0
            # a rejected sub-tolerance step, or damping pushed past any
            # useful scale, means the optimum is resolved to float limits
            # (typical when a visibility sits exactly at its bound)
            if np.linalg.norm(step) < STEP_TOL or lam > 1e12:
                converged = True
                break
    covariance = np.linalg.pinv(jac.T @ jac)
    reduced = chi2 / dof if dof > 0 else float("nan")
    return _Outcome(x=x, covariance=covariance, chi2=chi2, reduced_chi2=reduced,
                    converged=converged, iterations=iterations)


def _u_from_visibility(v: float) -> float:
    return math.asin(math.sqrt(min(max(v, 0.0), 1.0)))


def _visibility_from_u(u: float) -> float:
    return math.sin(u) ** 2


# ---------------------------------------------------------------------------
# Single sinusoid
# ---------------------------------------------------------------------------

@dataclass
class SinusoidFit:
    """Fitted c (1 + v sin(f phi + delta)) with 1 sigma uncertainties from
    the quadratic approximation at the optimum."""
    offset: float
    visibility: float
    phase: float
    frequency: float
    offset_sigma: float
    visibility_sigma: float
    phase_sigma: float
    reduced_chi2: float
    converged: bool
    iterations: int

    @property
    def amplitude(self) -> float:
        return self.offset * self.visibility

    def model(self, phi) -> np.ndarray:
        return sinusoid_model(phi, self.offset, self.visibility,
                              self.phase, self.frequency)


def _fourier_start(phi: np.ndarray, y: np.ndarray,
                   frequency: float) -> Tuple[float, float, float]:
    c0 = float(np.mean(y))
    a = 2.0 * float(np.mean(y * np.sin(frequency * phi)))
    b = 2.0 * float(np.mean(y * np.cos(frequency * phi)))
    amplitude = math.hypot(a, b)
    if c0 <= 0.0:
        c0 = max(float(np.max(y)), 1e-12)
    v0 = min(max(amplitude / c0, _INIT_V_LO), _INIT_V_HI)
    delta0 = math.atan2(b, a) % TWO_PI
    return c0, v0, delta0


def fit_single_sinusoid(phi, values, sigma=None, frequency: float = 1.0,
                        fit_frequency: bool = False,
                        init: Optional[Tuple[float, float, float]] = None,
                        max_iterations: int = MAX_ITERATIONS) -> SinusoidFit:
    """Weighted fit of one sinusoidal fringe.

    `sigma` defaults to Poisson errors with the 1-count floor.  The fringe
    frequency is fixed unless ``fit_frequency`` is set.  Raises
    DegenerateDataError on constant data and FitConvergenceError (carrying
    the partial result) if the iteration cap is reached.
    """
    phi = np.asarray(phi, dtype=float)
    y = np.asarray(values, dtype=float)
    if phi.shape != y.shape or phi.ndim != 1:
        raise ValueError("phi and values must be 1-d arrays of equal length")
    if len(phi) < 4:
        raise ValueError("need at least 4 points")
    if np.ptp(y) == 0.0:
        raise DegenerateDataError("constant data: no fringe to fit")
    weights = 1.0 / (poisson_sigma(y) if sigma is None else np.asarray(sigma, float))

    if init is None:
        c0, v0, d0 = _fourier_start(phi, y, frequency)
    else:
        c0, v0, d0 = init
        v0 = min(max(v0, _INIT_V_LO), _INIT_V_HI)
    x0 = [c0, _u_from_visibility(v0), d0]
    if fit_frequency:
        x0.append(frequency)

    def residual_jacobian(x):
        c, u, delta = x[0], x[1], x[2]
        f = x[3] if fit_frequency else frequency
        v = math.sin(u) ** 2
        arg = f * phi + delta
        s = np.sin(arg)
        model = c * (1.0 + v * s)
        r = (model - y) * weights
        jac = np.empty((len(phi), len(x)))
        jac[:, 0] = (1.0 + v * s) * weights
        jac[:, 1] = c * s * math.sin(2.0 * u) * weights
        jac[:, 2] = c * v * np.cos(arg) * weights
        if fit_frequency:
            jac[:, 3] = c * v * np.cos(arg) * phi * weights
        return r, jac

    dof = len(phi) - len(x0)
    outcome = _damped_least_squares(residual_jacobian, np.array(x0), dof,
                                    max_iterations)
    result = _sinusoid_result(outcome, frequency, fit_frequency)
    if not outcome.converged:
        raise FitConvergenceError(
            f"sinusoid fit did not converge in {max_iterations} iterations", result)
    return result


def _sinusoid_result(outcome: _Outcome, frequency: float,
                     fit_frequency: bool) -> SinusoidFit:
    c, u, delta = outcome.x[0], outcome.x[1], outcome.x[2]
    f = outcome.x[3] if fit_frequency else frequency
    sig = np.sqrt(np.maximum(np.diag(outcome.covariance), 0.0))
    return SinusoidFit(
        offset=float(c),
        visibility=_visibility_from_u(u),
        phase=float(wrap_phase(delta)),
        frequency=float(f),
        offset_sigma=float(sig[0]),
        visibility_sigma=float(abs(math.sin(2.0 * u)) * sig[1]),
        phase_sigma=float(sig[2]),
        reduced_chi2=outcome.reduced_chi2,
        converged=outcome.converged,
        iterations=outcome.iterations,
    )


# ---------------------------------------------------------------------------
# Product of N sinusoidal fringes
# ---------------------------------------------------------------------------

@dataclass
class ProductFit:
    """Fitted product of N fringes c_i (1 + v_i sin(phi + delta_i)).

    The overall scale is shared among the offsets (only their product is
    constrained by coincidence data); visibilities and phases are the
    physically meaningful outputs.  ``at_bound`` flags visibilities that
    ended within BOUND_MARGIN of 0 or 1.
    """
    offsets: np.ndarray
    visibilities: np.ndarray
    phases: np.ndarray
    offset_sigmas: np.ndarray
    visibility_sigmas: np.ndarray
    phase_sigmas: np.ndarray
    reduced_chi2: float
    converged: bool
    iterations: int

    @property
    def n_fringes(self) -> int:
        return len(self.offsets)

    @property
    def at_bound(self) -> np.ndarray:
        v = self.visibilities
        return (v < BOUND_MARGIN) | (v > 1.0 - BOUND_MARGIN)

    def phase_spacings(self) -> np.ndarray:
        """Adjacent differences delta_{i+1} - delta_i, wrapped to [0, 2 pi)."""
        d = self.phases
        return np.array([circular_difference(d[i + 1], d[i])
                         for i in range(len(d) - 1)])

    def fringe_model(self, index: int, phi) -> np.ndarray:
        return sinusoid_model(phi, self.offsets[index],
                              self.visibilities[index], self.phases[index])

    def model(self, phi) -> np.ndarray:
        return product_model(phi, self.offsets, self.visibilities, self.phases)


def fit_product_fringes(phi, values, n_fringes: int, sigma=None,
                        init: Optional[Sequence[Tuple[float, float, float]]] = None,
                        max_iterations: int = MAX_ITERATIONS) -> ProductFit:
    """Fit a product of `n_fringes` unit-frequency sinusoids to coincidence
    counts.

    `init` takes per-fringe (offset, visibility, phase) triples, normally
    the singles fits; without it a frequency-N prefit plus a coarse phase
    grid seeds the iteration.  Requires at least 3 N + 1 points.
    """
    phi = np.asarray(phi, dtype=float)
    y = np.asarray(values, dtype=float)
    if phi.shape != y.shape or phi.ndim != 1:
        raise ValueError("phi and values must be 1-d arrays of equal length")
    if n_fringes < 1:
        raise ValueError("need at least one fringe")
    if len(phi) < 3 * n_fringes + 1:
        raise ValueError(f"need at least {3 * n_fringes + 1} points for "
                         f"{n_fringes} fringes")
    if np.ptp(y) == 0.0:
        raise DegenerateDataError("constant data: no fringe to fit")
    weights = 1.0 / (poisson_sigma(y) if sigma is None else np.asarray(sigma, float))

    triples = list(init) if init is not None else _product_start(phi, y, n_fringes)
    if len(triples) != n_fringes:
        raise ValueError(f"init has {len(triples)} fringes, expected {n_fringes}")
    triples = _rescale_offsets(phi, y, triples)

    x0 = np.empty(3 * n_fringes)
    for i, (c, v, d) in enumerate(triples):
        x0[3 * i] = max(c, 1e-12)
        x0[3 * i + 1] = _u_from_visibility(min(max(v, _INIT_V_LO), _INIT_V_HI))
        x0[3 * i + 2] = d

    def residual_jacobian(x):
        c = x[0::3]
        u = x[1::3]
        delta = x[2::3]
        v = np.sin(u) ** 2
        s = np.sin(phi[:, None] + delta[None, :])
        factors = c[None, :] * (1.0 + v[None, :] * s)      # (points, fringes)
        # prefix/suffix products leave out one factor without dividing,
        # which keeps fringe minima (factor 0 at v = 1) safe
        n = n_fringes
        prefix = np.ones((len(phi), n + 1))
        suffix = np.ones((len(phi), n + 1))
        for i in range(n):
            prefix[:, i + 1] = prefix[:, i] * factors[:, i]
            suffix[:, n - 1 - i] = suffix[:, n - i] * factors[:, n - 1 - i]
        model = prefix[:, n]
        others = prefix[:, :n] * suffix[:, 1:]              # product excluding i
        r = (model - y) * weights
        jac = np.empty((len(phi), 3 * n))
        cos_term = np.cos(phi[:, None] + delta[None, :])
        jac[:, 0::3] = (1.0 + v[None, :] * s) * others * weights[:, None]
        jac[:, 1::3] = (c * np.sin(2.0 * u))[None, :] * s * others * weights[:, None]
        jac[:, 2::3] = (c * v)[None, :] * cos_term * others * weights[:, None]
        return r, jac

    dof = len(phi) - 3 * n_fringes
    outcome = _damped_least_squares(residual_jacobian, x0, dof, max_iterations)
    result = _product_result(outcome, n_fringes)
    if not outcome.converged:
        raise FitConvergenceError(
            f"product fit did not converge in {max_iterations} iterations", result)
    return result


def _product_result(outcome: _Outcome, n: int) -> ProductFit:
    x = outcome.x
    sig = np.sqrt(np.maximum(np.diag(outcome.covariance), 0.0))
    u = x[1::3]
    return ProductFit(
        offsets=x[0::3].copy(),
        visibilities=np.sin(u) ** 2,
        phases=wrap_phase(x[2::3]),
        offset_sigmas=sig[0::3].copy(),
        visibility_sigmas=np.abs(np.sin(2.0 * u)) * sig[1::3],
        phase_sigmas=sig[2::3].copy(),
        reduced_chi2=outcome.reduced_chi2,
        converged=outcome.converged,
        iterations=outcome.iterations,
    )


def _rescale_offsets(phi, y, triples):
    """Scale all offsets by a common factor so the model mean matches the
    data mean; coincidence data only constrain the product of the offsets.
    Kept only when it actually lowers the unweighted misfit, so an init
    taken from a previous optimum is left alone."""
    offsets = [t[0] for t in triples]
    visibilities = [t[1] for t in triples]
    phases = [t[2] for t in triples]
    model = product_model(phi, offsets, visibilities, phases)
    mean = float(np.mean(model))
    if mean <= 0.0:
        return triples
    factor = (float(np.mean(y)) / mean) ** (1.0 / len(triples))
    rescaled = product_model(phi, [c * factor for c in offsets],
                             visibilities, phases)
    if np.sum((rescaled - y) ** 2) >= np.sum((model - y) ** 2):
        return triples
    return [(c * factor, v, d) for c, v, d in triples]


def _product_start(phi, y, n: int) -> List[Tuple[float, float, float]]:
    """Heuristic start: a frequency-N sinusoid prefit fixes the overall
    phase and scale; individual fringes are spaced 2 pi / N apart and the
    base phase is chosen by a coarse grid search."""
    c0, v_big, _ = _fourier_start(phi, y, float(n))
    v0 = min(max((v_big * 2.0 ** (n - 1)) ** (1.0 / n), 0.3), 0.95)
    best = None
    for base in np.linspace(0.0, TWO_PI / n, 24, endpoint=False):
        phases = [base + TWO_PI * i / n for i in range(n)]
        trial = [(1.0, v0, d) for d in phases]
        trial = _rescale_offsets(phi, y, trial)
        model = product_model(phi, [t[0] for t in trial],
                              [t[1] for t in trial], [t[2] for t in trial])
        chi2 = float(np.sum((model - y) ** 2))
        if best is None or chi2 < best[0]:
            best = (chi2, trial)
    return best[1]


# ---------------------------------------------------------------------------
# Singles overlay extraction
# ---------------------------------------------------------------------------

def extract_singles_overlay(fit: ProductFit, phi, singles,
                            sigma=None) -> Tuple[np.ndarray, np.ndarray]:
    """Scale each fitted fringe onto its singles column.

    Every fringe from the coincidence product fit is multiplied by the one
    least-squares amplitude factor that matches it to the corresponding
    singles data; visibility and phase are left untouched.  Returns the
    (detectors, points) curve array and the scale factors.
    """
    phi = np.asarray(phi, dtype=float)
    singles = np.asarray(singles, dtype=float)
    if singles.ndim != 2 or singles.shape[0] != len(phi):
        raise ValueError("singles must be a (points, detectors) array")
    if singles.shape[1] != fit.n_fringes:
        raise ValueError(f"fit has {fit.n_fringes} fringes but data has "
                         f"{singles.shape[1]} detectors")
    if sigma is None:
        sigma = poisson_sigma(singles)
    weights = 1.0 / np.asarray(sigma, dtype=float) ** 2
    curves = np.empty((fit.n_fringes, len(phi)))
    scales = np.empty(fit.n_fringes)
    for i in range(fit.n_fringes):
        base = fit.fringe_model(i, phi)
        w = weights[:, i]
        denom = float(np.sum(w * base * base))
        scales[i] = float(np.sum(w * singles[:, i] * base)) / denom if denom > 0 else 0.0
        curves[i] = scales[i] * base
    return curves, scales
