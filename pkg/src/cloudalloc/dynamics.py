"""Stability, Lyapunov, and bifurcation analysis of the two-user map.

Everything here works on the 3-vector X = (v_c, x1, x2).  The linear
algebra is intentionally small (3x3); numpy is used for eigenvalues and
the QR re-orthonormalization inside the Lyapunov loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .model import (
    DIVERGENCE_BOUND,
    DivergenceError,
    ModelParams,
    SystemState,
    step_two_user_raw,
)


class SingularParametersError(ValueError):
    """A formula degenerates for the given scale parameters."""


class RouthVerdict(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


class ModulusVerdict(Enum):
    INSIDE = "inside-unit-circle"
    ON = "on"
    OUTSIDE = "outside"


class AttractorClass(Enum):
    FIXED_PERIODIC = "fixed/periodic"
    QUASIPERIODIC = "quasiperiodic"
    CHAOTIC = "chaotic"


def map_vector(params: ModelParams, point) -> np.ndarray:
    """One application of the two-user map to a bare 3-vector (no bound check)."""
    v, x1, x2 = (float(c) for c in point)
    return np.array(
        step_two_user_raw(params.alpha, params.xi1, params.xi2, v, x1, x2)
    )


def map_residual(params: ModelParams, point) -> np.ndarray:
    """F(X) - X; identically zero exactly at a fixed point."""
    return map_vector(params, point) - np.asarray(point, dtype=float)


def jacobian_at(params: ModelParams, point) -> np.ndarray:
    """Jacobian of the two-user map at X = (v, x1, x2):

        [[ alpha,    xi1,    -xi2  ],
         [-xi1*x1,  -xi1*v,  -xi2  ],
         [ xi2*x2,   xi1,     xi2*v]]
    """
    v, x1, x2 = (float(c) for c in point)
    a, k1, k2 = params.alpha, params.xi1, params.xi2
    return np.array(
        [
            [a, k1, -k2],
            [-k1 * x1, -k1 * v, -k2],
            [k2 * x2, k1, k2 * v],
        ]
    )


@dataclass(frozen=True)
class FixedPointResult:
    point: tuple[float, float, float]
    residual: float            # max-norm of F(X) - X at `point`
    converged: bool
    iterations: int


def _fd_jacobian(params: ModelParams, point: np.ndarray, h: float = 1e-7) -> np.ndarray:
    cols = []
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        cols.append((map_vector(params, point + e) - map_vector(params, point - e)) / (2 * h))
    return np.column_stack(cols)


def find_fixed_points(
    params: ModelParams,
    seeds,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> list[FixedPointResult]:
    """Damped Newton search for roots of F(X) - X from each seed.

    Non-converged seeds are returned with converged=False (their best
    point and residual attached), never dropped.  The Newton matrix uses
    a central finite-difference Jacobian so the search is independent of
    the analytic jacobian_at.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("at least one seed is required")

    results = []
    for seed in seeds:
        x = np.asarray(seed, dtype=float).copy()
        g = map_residual(params, x)
        converged = False
        iterations = 0
        for iterations in range(1, max_iter + 1):
            norm = float(np.max(np.abs(g)))
            if norm < tol:
                converged = True
                break
            jac = _fd_jacobian(params, x) - np.eye(3)
            try:
                delta = np.linalg.solve(jac, -g)
            except np.linalg.LinAlgError:
                break
            # backtracking damping: halve the step until the residual drops
            lam = 1.0
            improved = False
            while lam > 2 ** -30:
                cand = x + lam * delta
                g_cand = map_residual(params, cand)
                if np.max(np.abs(g_cand)) < norm:
                    x, g = cand, g_cand
                    improved = True
                    break
                lam *= 0.5
            if not improved:
                break
        else:
            iterations = max_iter
        norm = float(np.max(np.abs(g)))
        if norm < tol:
            converged = True
        results.append(
            FixedPointResult(
                point=tuple(float(c) for c in x),
                residual=norm,
                converged=converged,
                iterations=iterations,
            )
        )
    return results


def characteristic_coeffs(alpha: float, xi1: float, xi2: float) -> tuple[float, float, float]:
    """Cubic coefficients (P, Q, R) of the linearization about the
    transformed second equilibrium:

        P = -(alpha - xi1 + xi2),  Q = 1.5*alpha*(xi2 - xi1),  R = 2*alpha*xi1*xi2
    """
    return (
        -(alpha - xi1 + xi2),
        1.5 * alpha * (xi2 - xi1),
        2.0 * alpha * xi1 * xi2,
    )


def routh_classify(P: float, Q: float, R: float) -> RouthVerdict:
    """Mechanical Routh test on lambda^3 + P lambda^2 + Q lambda + R.

    stable   iff P, Q, R > 0 and P*Q > R
    marginal iff P, Q, R > 0 and P*Q == R
    unstable otherwise
    """
    if P > 0.0 and Q > 0.0 and R > 0.0:
        if P * Q > R:
            return RouthVerdict.STABLE
        if P * Q == R:
            return RouthVerdict.MARGINAL
    return RouthVerdict.UNSTABLE


def stability_window(alpha: float, xi1: float, xi2: float) -> bool:
    """The separately quoted linear-stability window 0 < alpha < xi2 - xi1 <= 1.

    Exposed on its own because it does not follow from routh_classify:
    P > 0 and Q > 0 are mutually exclusive for alpha > 0, so the Routh
    test never returns STABLE (see tests).
    """
    return 0.0 < alpha < (xi2 - xi1) <= 1.0


def hopf_alpha(xi1: float, xi2: float) -> float:
    """alpha solving P*Q = R (pure-imaginary root pair of the cubic):

        alpha = (3*(xi1 - xi2)**2 + 4*xi1*xi2) / (3*(xi1 - xi2))
    """
    if xi1 == xi2:
        raise SingularParametersError("hopf_alpha is undefined for xi1 == xi2")
    return (3.0 * (xi1 - xi2) ** 2 + 4.0 * xi1 * xi2) / (3.0 * (xi1 - xi2))


@dataclass(frozen=True)
class StabilityReport:
    """Eigen-analysis of one candidate point, with the parameter-level
    (P, Q, R) verdicts carried alongside.  `residual` is reported
    verbatim, never thresholded: a large value means the point is not a
    fixed point and the eigen-data describes the map there regardless."""

    fixed_point: tuple[float, float, float]
    residual: float
    jacobian: np.ndarray
    char_coeffs: tuple[float, float, float]
    routh_verdict: RouthVerdict
    modulus_verdict: ModulusVerdict
    eigenvalues: tuple[complex, complex, complex]


def stability_report(params: ModelParams, point, modulus_tol: float = 1e-9) -> StabilityReport:
    jac = jacobian_at(params, point)
    eig = np.linalg.eigvals(jac)
    top = float(np.max(np.abs(eig)))
    if top < 1.0 - modulus_tol:
        modulus = ModulusVerdict.INSIDE
    elif top > 1.0 + modulus_tol:
        modulus = ModulusVerdict.OUTSIDE
    else:
        modulus = ModulusVerdict.ON
    P, Q, R = characteristic_coeffs(params.alpha, params.xi1, params.xi2)
    return StabilityReport(
        fixed_point=tuple(float(c) for c in point),
        residual=float(np.max(np.abs(map_residual(params, point)))),
        jacobian=jac,
        char_coeffs=(P, Q, R),
        routh_verdict=routh_classify(P, Q, R),
        modulus_verdict=modulus,
        eigenvalues=tuple(complex(z) for z in eig),
    )


@dataclass(frozen=True)
class LyapunovSpectrum:
    """Benettin-style exponent estimates in nats per iteration.

    `history` holds the running estimate every 100 iterations (each entry
    sorted descending); its final entry equals `exponents`."""

    exponents: tuple[float, float, float]
    iterations: int
    history: tuple[tuple[float, float, float], ...]

    @property
    def largest(self) -> float:
        return self.exponents[0]


def lyapunov_spectrum(
    params: ModelParams, s0: SystemState, iterations: int = 100_000
) -> LyapunovSpectrum:
    """Full Lyapunov spectrum along the orbit of s0.

    Propagates an orthonormal tangent frame with the stage Jacobian and
    re-orthonormalizes by QR each step; the per-direction log stretch
    factors, averaged over the run, estimate the exponents.  This is the
    numerically stable equivalent of eigen-analyzing the accumulated
    tangent product, which overflows after a few dozen stages.
    """
    if iterations < 1000:
        raise ValueError(f"iterations must be >= 1000, got {iterations}")
    a, k1, k2 = params.alpha, params.xi1, params.xi2
    v, x1, x2 = s0.v_c, s0.x[0], s0.x[1]

    frame = np.eye(3)
    sums = np.zeros(3)
    history = []
    with np.errstate(divide="ignore"):
        for k in range(iterations):
            jac = np.array(
                [
                    [a, k1, -k2],
                    [-k1 * x1, -k1 * v, -k2],
                    [k2 * x2, k1, k2 * v],
                ]
            )
            frame, r = np.linalg.qr(jac @ frame)
            sums += np.log(np.abs(np.diag(r)))

            v, x1, x2 = step_two_user_raw(a, k1, k2, v, x1, x2)
            for c in (v, x1, x2):
                if not math.isfinite(c) or abs(c) > DIVERGENCE_BOUND:
                    raise DivergenceError(s0.l + k + 1, c)

            done = k + 1
            if done % 100 == 0 and done < iterations:
                est = np.sort(sums / done)[::-1]
                history.append(tuple(float(e) for e in est))

    final = np.sort(sums / iterations)[::-1]
    exponents = tuple(float(e) for e in final)
    history.append(exponents)
    return LyapunovSpectrum(
        exponents=exponents, iterations=iterations, history=tuple(history)
    )


def classify_attractor(
    spectrum: LyapunovSpectrum, zero_band: float = 0.01
) -> AttractorClass:
    """Sign-based attractor class from the largest exponent.

    zero_band sets how close to zero still counts as 'zero'; there is no
    canonical threshold, 0.01 nats/iteration is the working default.
    """
    if zero_band <= 0.0:
        raise ValueError(f"zero_band must be > 0, got {zero_band}")
    top = spectrum.largest
    if top > zero_band:
        return AttractorClass.CHAOTIC
    if abs(top) <= zero_band:
        return AttractorClass.QUASIPERIODIC
    return AttractorClass.FIXED_PERIODIC


SWEEPABLE = ("alpha", "xi1", "xi2")


@dataclass(frozen=True)
class GridPointResult:
    value: float
    v_samples: tuple[float, ...]
    lambda_max: float          # nan when divergent
    divergent: bool


@dataclass(frozen=True)
class BifurcationScan:
    swept_parameter: str
    grid: tuple[float, ...]
    base_params: ModelParams
    points: tuple[GridPointResult, ...]


def _with_swept(base: ModelParams, name: str, value: float) -> ModelParams:
    if name == "alpha":
        return replace(base, alpha=value)
    if name == "xi1":
        return replace(base, xi=(value, base.xi2))
    if name == "xi2":
        return replace(base, xi=(base.xi1, value))
    raise ValueError(f"unknown sweep parameter {name!r}; expected one of {SWEEPABLE}")


def bifurcation_scan(
    base_params: ModelParams,
    param: str,
    lo: float,
    hi: float,
    points: int,
    s0: SystemState,
    transient: int = 1000,
    samples: int = 100,
    lyap_iterations: int = 4000,
) -> BifurcationScan:
    """Sweep one parameter over a uniform grid; per grid point, record
    `samples` post-transient capacity values and the largest Lyapunov
    exponent.  Divergent grid points are marked, not fatal.  Each grid
    point restarts from the same s0, so results are independent of
    evaluation order.
    """
    if points < 1:
        raise ValueError(f"points must be >= 1, got {points}")
    if not lo < hi:
        raise ValueError(f"sweep range must have lo < hi, got [{lo}, {hi}]")
    grid = [lo] if points == 1 else list(np.linspace(lo, hi, points))

    results = []
    for value in grid:
        p = _with_swept(base_params, param, value)
        a, k1, k2 = p.alpha, p.xi1, p.xi2
        v, x1, x2 = s0.v_c, s0.x[0], s0.x[1]
        try:
            for k in range(transient):
                v, x1, x2 = step_two_user_raw(a, k1, k2, v, x1, x2)
                for c in (v, x1, x2):
                    if not math.isfinite(c) or abs(c) > DIVERGENCE_BOUND:
                        raise DivergenceError(s0.l + k + 1, c)
            v_samples = []
            for k in range(samples):
                v, x1, x2 = step_two_user_raw(a, k1, k2, v, x1, x2)
                for c in (v, x1, x2):
                    if not math.isfinite(c) or abs(c) > DIVERGENCE_BOUND:
                        raise DivergenceError(s0.l + transient + k + 1, c)
                v_samples.append(v)
            spec = lyapunov_spectrum(
                p, SystemState(l=0, v_c=v, x=(x1, x2)), iterations=lyap_iterations
            )
            results.append(
                GridPointResult(
                    value=float(value),
                    v_samples=tuple(v_samples),
                    lambda_max=spec.largest,
                    divergent=False,
                )
            )
        except DivergenceError:
            results.append(
                GridPointResult(
                    value=float(value),
                    v_samples=(),
                    lambda_max=math.nan,
                    divergent=True,
                )
            )
    return BifurcationScan(
        swept_parameter=param,
        grid=tuple(float(g) for g in grid),
        base_params=base_params,
        points=tuple(results),
    )
