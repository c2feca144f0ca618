"""Nonlinear least-squares recovery of fringe parameters from a g2 slice.

The model is

    g2(x) = baseline + V0 * sinc^2(pi (x - xc) / e) * cos^2(pi (x - xc) / p)

fitted by damped Gauss-Newton (Levenberg) iteration with an analytic
Jacobian, inverse-variance weights from the slice standard errors, and
log-reparametrized positive parameters (V0, p, e) to exclude sign-flip
degeneracies. Seeding uses a periodogram; note cos^2 oscillates at twice
the model cosine's frequency, so the detected peak frequency f* maps to
period p = 1/f* directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ExperimentLayout
from .errors import NumericValidityError, RankDeficiencyError
from .stats import G2Slice

__all__ = ["FringeModelParams", "FringeFitResult", "fringe_model", "seed_fit", "fit"]

MAX_ITERATIONS = 200
STEP_TOLERANCE = 1e-8
_PARAM_NAMES = ("baseline", "visibility", "period", "envelope_zero", "center")


@dataclass(frozen=True)
class FringeModelParams:
    """Fringe-law parameters; the model is >= baseline everywhere."""

    baseline: float
    visibility: float
    period: float
    envelope_zero: float
    center: float = 0.0

    def __post_init__(self):
        if not (self.period > 0):
            raise ValueError(f"period must be > 0, got {self.period}")
        if not (self.envelope_zero > self.period / 2):
            raise ValueError(
                f"envelope_zero ({self.envelope_zero}) must exceed period/2 "
                f"({self.period / 2}) for a resolvable pattern"
            )
        if self.visibility < 0:
            raise ValueError("visibility must be >= 0")


def _sinc_pair(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """sinc(u) = sin(u)/u and its derivative, with series branches at 0."""
    small = np.abs(u) < 1e-4
    safe = np.where(small, 1.0, u)
    s = np.where(small, 1.0 - u**2 / 6.0 + u**4 / 120.0, np.sin(safe) / safe)
    ds = np.where(small, -u / 3.0 + u**3 / 30.0, (np.cos(safe) - s) / safe)
    return s, ds


def fringe_model(x: np.ndarray, params: FringeModelParams) -> np.ndarray:
    u = np.pi * (x - params.center) / params.envelope_zero
    v = np.pi * (x - params.center) / params.period
    s, _ = _sinc_pair(u)
    return params.baseline + params.visibility * s**2 * np.cos(v) ** 2


def _model_and_jacobian(x: np.ndarray, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Model values and Jacobian in theta = (B, lnV, lnp, lne, xc) space."""
    base, lnv, lnp, lne, xc = theta
    vis, p, e = np.exp(lnv), np.exp(lnp), np.exp(lne)
    u = np.pi * (x - xc) / e
    v = np.pi * (x - xc) / p
    s, ds = _sinc_pair(u)
    c = np.cos(v)
    sin2v = np.sin(2 * v)
    shape = s**2 * c**2
    m = base + vis * shape
    jac = np.empty((x.size, 5))
    jac[:, 0] = 1.0
    jac[:, 1] = vis * shape
    jac[:, 2] = vis * s**2 * v * sin2v        # d/d ln p
    jac[:, 3] = -2.0 * vis * c**2 * s * ds * u  # d/d ln e
    jac[:, 4] = vis * (-2 * np.pi / e * s * ds * c**2 + (np.pi / p) * s**2 * sin2v)
    return m, jac


def _defined_data(slice_: G2Slice) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ok = slice_.defined & np.isfinite(slice_.values)
    return slice_.positions[ok], slice_.values[ok], slice_.stderr[ok]


def seed_fit(slice_: G2Slice) -> tuple[FringeModelParams, bool]:
    """Initial parameters from robust statistics and a periodogram.

    Returns (params, confident); ``confident`` is False when no
    periodogram peak stands above the noise floor or the data span fewer
    than four detected periods.
    """
    x, y, _ = _defined_data(slice_)
    if x.size < 8:
        raise NumericValidityError("seed_fit needs at least 8 defined samples")
    dx = float(np.median(np.diff(x)))
    baseline = float(np.median(y))
    resid = y - baseline

    power = np.abs(np.fft.rfft(resid)) ** 2
    freqs = np.fft.rfftfreq(resid.size, d=dx)
    smooth = np.convolve(power, np.ones(5) / 5.0, mode="same")
    # Skip the DC/envelope lobe: walk out until the smoothed spectrum
    # falls to a few percent of its low-frequency maximum, then descend
    # to the basin floor. The fringe peak (at 1/period) lies beyond.
    confident = True
    ref = float(smooth[1:4].max()) if smooth.size > 4 else float(smooth.max())
    start = 1
    while start < smooth.size - 2 and smooth[start] >= 0.02 * ref:
        start += 1
    while start < smooth.size - 2 and smooth[start + 1] < smooth[start]:
        start += 1
    if start >= smooth.size - 2:
        confident = False
        start = 1
    peak = start + int(np.argmax(smooth[start:]))
    noise_floor = float(np.median(smooth[start:]))
    if smooth[peak] < 4.0 * noise_floor or freqs[peak] == 0:
        confident = False
    span = x[-1] - x[0]
    if freqs[peak] > 0:
        period = 1.0 / freqs[peak]
    else:
        period = span / 8.0
    if span < 4 * period:
        confident = False

    # smooth the residual over ~period/6 before locating the peak
    win = max(3, int(round(period / 6.0 / dx)) | 1)
    ys = np.convolve(resid, np.ones(win) / win, mode="same")
    imax = int(np.argmax(ys))
    center = float(x[imax])
    visibility = max(float(resid.max()), 1e-9)

    # envelope extent: where the fringe-peak envelope first stays below 5%
    env_win = max(3, int(round(1.2 * period / dx)) | 1)
    pad = env_win // 2
    padded = np.pad(ys, pad, mode="edge")
    env = np.array([padded[i : i + env_win].max() for i in range(ys.size)])
    low = env < 0.05 * max(env.max(), 1e-300)
    right = np.where(low & (x > center))[0]
    left = np.where(low & (x < center))[0]
    extents = []
    if right.size:
        extents.append(x[right[0]] - center)
    if left.size:
        extents.append(center - x[left[-1]])
    envelope_zero = float(np.mean(extents)) if extents else span / 2
    envelope_zero = max(envelope_zero, 0.51 * period)
    return (
        FringeModelParams(baseline, visibility, period, envelope_zero, center),
        confident,
    )


@dataclass(frozen=True)
class FringeFitResult:
    """Converged parameters with covariance and fit diagnostics."""

    params: FringeModelParams
    covariance: np.ndarray
    residual_rms: float
    converged: bool
    iterations: int
    n_points: int

    def parameter_stderr(self) -> dict[str, float]:
        d = np.sqrt(np.maximum(np.diag(self.covariance), 0.0))
        return dict(zip(_PARAM_NAMES, d.tolist()))

    def slit_estimates(self, layout: ExperimentLayout) -> tuple[float, float]:
        """(d_hat, b_hat) = (lambda L / period, lambda L / envelope_zero)."""
        lam_l = layout.wavelength * layout.aperture_to_detector(1)
        return lam_l / self.params.period, lam_l / self.params.envelope_zero

    def slit_estimate_stderr(self, layout: ExperimentLayout) -> tuple[float, float]:
        d_hat, b_hat = self.slit_estimates(layout)
        err = self.parameter_stderr()
        return (
            d_hat * err["period"] / self.params.period,
            b_hat * err["envelope_zero"] / self.params.envelope_zero,
        )


def fit(slice_: G2Slice, seed: FringeModelParams) -> FringeFitResult:
    """Weighted least squares minimizing sum[(g2_i - model(x_i))^2 / sigma_i^2].

    Damped Gauss-Newton with the analytic Jacobian; converged when the
    largest relative step drops below 1e-8, capped at 200 iterations
    (non-convergence is reported, not raised). Singular normal equations
    raise RankDeficiencyError naming the degenerate parameter.
    """
    x, y, err = _defined_data(slice_)
    if x.size < 20:
        raise NumericValidityError(f"fit needs at least 20 data points, got {x.size}")
    usable = np.isfinite(err) & (err > 0)
    if not np.any(usable):
        weights = np.ones_like(y)  # noise-free input: unweighted
        unweighted = True
    else:
        x, y, err = x[usable], y[usable], err[usable]
        if x.size < 20:
            raise NumericValidityError("fewer than 20 points with usable standard errors")
        weights = 1.0 / err**2
        unweighted = False
    sw = np.sqrt(weights)

    theta = np.array(
        [
            seed.baseline,
            np.log(max(seed.visibility, 1e-12)),
            np.log(seed.period),
            np.log(seed.envelope_zero),
            seed.center,
        ]
    )
    scale_floor = np.array([0.1, 0.1, 0.1, 0.1, max(seed.period, 1e-12)])

    def chisq(th):
        m, _ = _model_and_jacobian(x, th)
        return float(np.sum(weights * (y - m) ** 2))

    lam = 1e-3
    cost = chisq(theta)
    converged = False
    iterations = 0
    for iterations in range(1, MAX_ITERATIONS + 1):
        m, jac = _model_and_jacobian(x, theta)
        jw = jac * sw[:, None]
        rw = (y - m) * sw
        hess = jw.T @ jw
        grad = jw.T @ rw
        diag = np.diag(hess).copy()
        if (
            np.any(diag <= 1e-20 * diag.max())
            or not np.all(np.isfinite(hess))
            or diag.max() <= 0
        ):
            bad = int(np.argmin(diag))
            raise RankDeficiencyError(
                f"normal equations singular: no sensitivity to {_PARAM_NAMES[bad]!r}",
                parameter=_PARAM_NAMES[bad],
            )
        accepted = False
        for _ in range(50):
            try:
                step = np.linalg.solve(hess + lam * np.diag(diag), grad)
            except np.linalg.LinAlgError:
                bad = int(np.argmin(diag))
                raise RankDeficiencyError(
                    f"normal equations singular: no sensitivity to {_PARAM_NAMES[bad]!r}",
                    parameter=_PARAM_NAMES[bad],
                ) from None
            trial = theta + step
            trial_cost = chisq(trial)
            if np.isfinite(trial_cost) and trial_cost <= cost:
                accepted = True
                break
            lam *= 10.0
            if lam > 1e12:
                break
        if not accepted:
            break
        rel_step = np.max(np.abs(step) / np.maximum(np.abs(theta), scale_floor))
        theta = trial
        cost = trial_cost
        lam = max(lam / 10.0, 1e-14)
        if rel_step < STEP_TOLERANCE:
            converged = True
            break

    base, lnv, lnp, lne, xc = theta
    params = FringeModelParams(base, float(np.exp(lnv)), float(np.exp(lnp)), float(np.exp(lne)), xc)

    m, jac = _model_and_jacobian(x, theta)
    jw = jac * sw[:, None]
    hess = jw.T @ jw
    try:
        cov_log = np.linalg.inv(hess)
    except np.linalg.LinAlgError:
        cov_log = np.full((5, 5), np.nan)
    if unweighted and x.size > 5:
        cov_log = cov_log * float(np.sum((y - m) ** 2) / (x.size - 5))
    transform = np.diag([1.0, params.visibility, params.period, params.envelope_zero, 1.0])
    cov = transform @ cov_log @ transform
    cov = (cov + cov.T) / 2.0
    residual_rms = float(np.sqrt(np.mean((y - m) ** 2)))
    return FringeFitResult(
        params=params,
        covariance=cov,
        residual_rms=residual_rms,
        converged=converged,
        iterations=iterations,
        n_points=int(x.size),
    )
