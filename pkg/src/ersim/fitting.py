"""Damped Gauss-Newton (Levenberg-Marquardt) peak and decay fitting.

Three model families with analytic Jacobians: Lorentzian peak, Gaussian peak
and exponential decay.  Width and lifetime parameters are kept positive by
optimizing their logarithm; reported values and uncertainties are in natural
units.  Initial guesses come from data heuristics (extremum location,
half-maximum crossings, edge-point baseline).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .physics import _require
from .records import DecayHistogram, Spectrum

_LN2x4 = 4.0 * math.log(2.0)


def lorentzian_peak(x, params):
    """baseline + amplitude * (fwhm/2)^2 / ((x-center)^2 + (fwhm/2)^2)."""
    center, fwhm, amplitude, baseline = params
    half2 = (0.5 * fwhm) ** 2
    return baseline + amplitude * half2 / ((x - center) ** 2 + half2)


def lorentzian_peak_jacobian(x, params):
    center, fwhm, amplitude, baseline = params
    half = 0.5 * fwhm
    dx = x - center
    denom = dx**2 + half**2
    shape = half**2 / denom
    j_center = amplitude * half**2 * 2.0 * dx / denom**2
    j_fwhm = amplitude * half * dx**2 / denom**2
    j_amp = shape
    j_base = np.ones_like(x)
    return np.column_stack([j_center, j_fwhm, j_amp, j_base])


def gaussian_peak(x, params):
    """baseline + amplitude * exp(-4 ln2 (x-center)^2 / fwhm^2)."""
    center, fwhm, amplitude, baseline = params
    return baseline + amplitude * np.exp(-_LN2x4 * (x - center) ** 2 / fwhm**2)


def gaussian_peak_jacobian(x, params):
    center, fwhm, amplitude, baseline = params
    dx = x - center
    shape = np.exp(-_LN2x4 * dx**2 / fwhm**2)
    j_center = amplitude * shape * 2.0 * _LN2x4 * dx / fwhm**2
    j_fwhm = amplitude * shape * 2.0 * _LN2x4 * dx**2 / fwhm**3
    j_amp = shape
    j_base = np.ones_like(x)
    return np.column_stack([j_center, j_fwhm, j_amp, j_base])


def exponential_decay(t, params):
    """baseline + amplitude * exp(-t / t1)."""
    amplitude, t1, baseline = params
    return baseline + amplitude * np.exp(-t / t1)


def exponential_decay_jacobian(t, params):
    amplitude, t1, baseline = params
    shape = np.exp(-t / t1)
    j_amp = shape
    j_t1 = amplitude * shape * t / t1**2
    j_base = np.ones_like(t)
    return np.column_stack([j_amp, j_t1, j_base])


#: name -> (model, jacobian, parameter names, log-parameterized mask)
MODELS = {
    "lorentzian": (
        lorentzian_peak,
        lorentzian_peak_jacobian,
        ("center", "fwhm", "amplitude", "baseline"),
        (False, True, False, False),
    ),
    "gaussian": (
        gaussian_peak,
        gaussian_peak_jacobian,
        ("center", "fwhm", "amplitude", "baseline"),
        (False, True, False, False),
    ),
    "exponential": (
        exponential_decay,
        exponential_decay_jacobian,
        ("amplitude", "t1", "baseline"),
        (False, True, False),
    ),
}


@dataclass(frozen=True)
class FitParameter:
    name: str
    value: float
    sigma: float


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters with 1-sigma uncertainties and convergence info.

    Unconverged or degenerate fits carry the last iterate (or the fallback)
    with NaN uncertainties, never fabricated ones.
    """

    parameters: tuple
    rss: float
    iterations: int
    converged: bool
    status: str = "ok"
    covariance: np.ndarray | None = None

    def names(self) -> tuple:
        return tuple(p.name for p in self.parameters)

    def value(self, name: str) -> float:
        for p in self.parameters:
            if p.name == name:
                return p.value
        raise KeyError(name)

    def sigma(self, name: str) -> float:
        for p in self.parameters:
            if p.name == name:
                return p.sigma
        raise KeyError(name)


def peak_initial_guess(x, y):
    """(center, fwhm, amplitude, baseline) heuristics for a single peak or dip."""
    n = len(x)
    k = max(1, n // 10)
    baseline = float(np.median(np.concatenate([y[:k], y[-k:]])))
    dev = y - baseline
    i_ext = int(np.argmax(np.abs(dev)))
    amplitude = float(dev[i_ext])
    center = float(x[i_ext])
    span = float(x[-1] - x[0])
    fwhm = span / 4.0
    if amplitude != 0.0:
        above = np.nonzero(np.abs(dev) >= 0.5 * abs(amplitude))[0]
        if len(above) >= 2 and x[above[-1]] > x[above[0]]:
            fwhm = float(x[above[-1]] - x[above[0]])
    step = span / max(n - 1, 1)
    return center, max(fwhm, step), amplitude, baseline


def decay_initial_guess(t, y):
    """(amplitude, t1, baseline) heuristics for an exponential decay."""
    n = len(t)
    k = max(1, n // 10)
    baseline = float(np.median(y[-k:]))
    amplitude = float(y[0] - baseline)
    span = float(t[-1] - t[0]) if n > 1 else float(t[0]) or 1.0
    t1 = span / 5.0
    if amplitude > 0:
        dt = span / max(n - 1, 1)
        integral = float(np.sum(np.clip(y - baseline, 0.0, None)) * dt)
        if integral > 0:
            t1 = integral / amplitude
    t1 = min(max(t1, span / (10.0 * n)), 100.0 * span)
    return amplitude, t1, baseline


def _to_internal(params, log_mask):
    return np.array(
        [math.log(p) if m else p for p, m in zip(params, log_mask)], dtype=float
    )


def _to_natural(u, log_mask):
    return np.array([math.exp(v) if m else v for v, m in zip(u, log_mask)], dtype=float)


def levenberg_marquardt(
    model,
    jacobian,
    x,
    y,
    p0,
    weights=None,
    log_mask=None,
    max_iterations=200,
    xtol=1e-12,
    ftol=1e-12,
):
    """Minimize sum w (model(x, p) - y)^2 and return (p, cov, rss, iters, converged).

    ``log_mask`` selects parameters optimized as logarithms (kept positive).
    The damped normal equations are solved with diagonal equilibration so that
    parameters of wildly different magnitudes (Hz-scale centers, unit-scale
    amplitudes) coexist.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m = len(p0)
    if log_mask is None:
        log_mask = (False,) * m
    sw = np.ones_like(y) if weights is None else np.sqrt(np.asarray(weights, dtype=float))

    def residual_and_jac(u):
        p = _to_natural(u, log_mask)
        r = sw * (model(x, p) - y)
        J = jacobian(x, p) * sw[:, None]
        for j, is_log in enumerate(log_mask):
            if is_log:
                J[:, j] = J[:, j] * p[j]
        return r, J

    u = _to_internal(p0, log_mask)
    r, J = residual_and_jac(u)
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        A = J.T @ J
        g = J.T @ r
        d = np.sqrt(np.diag(A))
        d[d <= 0] = 1.0
        A_hat = A / np.outer(d, d)
        g_hat = g / d
        try:
            step_hat = np.linalg.solve(A_hat + lam * np.eye(m), -g_hat)
        except np.linalg.LinAlgError:
            return _to_natural(u, log_mask), None, cost, iterations, False
        step = step_hat / d
        u_try = u + step
        r_try, J_try = residual_and_jac(u_try)
        cost_try = float(r_try @ r_try)
        if np.isfinite(cost_try) and cost_try <= cost:
            small_step = np.all(np.abs(step) <= xtol * (np.abs(u) + xtol))
            small_decrease = (cost - cost_try) <= ftol * max(cost, 1e-300)
            u, r, J, cost = u_try, r_try, J_try, cost_try
            lam = max(lam * 0.3, 1e-14)
            if small_step or small_decrease:
                converged = True
                break
        else:
            lam *= 8.0
            if lam > 1e14:
                break

    p = _to_natural(u, log_mask)
    cov = None
    if converged:
        n_dof = len(y) - m
        try:
            A = J.T @ J
            d = np.sqrt(np.diag(A))
            d[d <= 0] = 1.0
            inv_hat = np.linalg.inv(A / np.outer(d, d))
            cov_u = inv_hat / np.outer(d, d)
            scale = cost / n_dof if n_dof > 0 else 0.0
            cov_u = cov_u * scale
            s = np.array([p[j] if is_log else 1.0 for j, is_log in enumerate(log_mask)])
            cov = cov_u * np.outer(s, s)
        except np.linalg.LinAlgError:
            cov = None
    return p, cov, cost, iterations, converged


def _build_result(names, p, cov, rss, iterations, converged, status):
    if cov is not None and converged:
        sigmas = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    else:
        sigmas = np.full(len(p), np.nan)
    params = tuple(FitParameter(n, float(v), float(s)) for n, v, s in zip(names, p, sigmas))
    return FitResult(params, float(rss), iterations, converged, status, cov)


def _degenerate_result(names, values, rss):
    params = tuple(FitParameter(n, float(v), float("nan")) for n, v in zip(names, values))
    return FitResult(params, float(rss), 0, False, "degenerate", None)


def _fit_peak(kind: str, spectrum: Spectrum) -> FitResult:
    _require(len(spectrum) >= 5, "peak fits need at least 5 points")
    model, jac, names, log_mask = MODELS[kind]
    x = spectrum.frequencies
    y = spectrum.counts
    center, fwhm, amplitude, baseline = peak_initial_guess(x, y)
    if amplitude == 0.0:
        return _degenerate_result(names, (center, fwhm, 0.0, baseline), np.sum((y - baseline) ** 2))
    p, cov, rss, iters, ok = levenberg_marquardt(
        model, jac, x, y, (center, fwhm, amplitude, baseline), log_mask=log_mask
    )
    status = "ok" if ok else "max_iterations"
    return _build_result(names, p, cov, rss, iters, ok, status)


def fit_gaussian(spectrum: Spectrum) -> FitResult:
    """Least-squares Gaussian peak fit: {center, fwhm, amplitude, baseline}."""
    return _fit_peak("gaussian", spectrum)


def fit_lorentzian(spectrum: Spectrum) -> FitResult:
    """Least-squares Lorentzian fit, plus the derived quality factor center/fwhm."""
    result = _fit_peak("lorentzian", spectrum)
    try:
        center = result.value("center")
        fwhm = result.value("fwhm")
    except KeyError:  # pragma: no cover - parameters always present
        return result
    q = center / fwhm if fwhm else float("nan")
    sigma_q = float("nan")
    if result.converged and result.covariance is not None and fwhm:
        grad = np.zeros(len(result.parameters))
        grad[0] = 1.0 / fwhm
        grad[1] = -center / fwhm**2
        var = float(grad @ result.covariance @ grad)
        sigma_q = math.sqrt(max(var, 0.0))
    params = result.parameters + (FitParameter("q_factor", float(q), sigma_q),)
    return FitResult(
        params, result.rss, result.iterations, result.converged, result.status, result.covariance
    )


def fit_exponential(histogram: DecayHistogram) -> FitResult:
    """Poisson-weighted fit of amplitude * exp(-t/t1) + baseline to a decay histogram."""
    nonempty = int(np.count_nonzero(histogram.counts))
    _require(nonempty >= 4, "exponential fits need at least 4 nonempty bins")
    model, jac, names, log_mask = MODELS["exponential"]
    t = histogram.centers
    y = histogram.counts
    weights = 1.0 / np.maximum(y, 1.0)
    amplitude, t1, baseline = decay_initial_guess(t, y)
    if np.max(np.abs(y - np.median(y))) == 0.0:
        return _degenerate_result(names, (0.0, t1, float(np.mean(y))), 0.0)
    if amplitude <= 0:
        amplitude = max(float(np.max(y) - baseline), 1.0)
    p, cov, rss, iters, ok = levenberg_marquardt(
        model, jac, t, y, (amplitude, t1, baseline), weights=weights, log_mask=log_mask
    )
    status = "ok" if ok else "max_iterations"
    return _build_result(names, p, cov, rss, iters, ok, status)
