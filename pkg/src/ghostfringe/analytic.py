"""Closed-form theory and quadrature oracles for the intensity correlation.

The broadband closed forms (delta-correlated source, symmetric arms) give
the mean intensities, the detector-plane mutual coherence, and the
normalized correlation

    g2(x1, x2) = 1 + V0 * sinc^2[(b k / 2L) dx] * cos^2[(d k / 2L) dx]

with dx = x1 - x2 and V0 = (2b)^2 / (int A1^2 * int A2^2). The quadrature
variants evaluate the underlying propagation integrals directly by
midpoint Riemann sums and serve as the independent ground truth for both
the closed forms and the Monte Carlo engine; they accept per-arm
distances and a finite source correlation length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ApertureProfile, DoubleSlitSpec, ExperimentLayout, require_same_grid
from .errors import (
    ArmSymmetryError,
    BroadbandLimitError,
    SamplingBoundError,
    UndefinedCorrelationError,
)

__all__ = [
    "SourceSpec",
    "CoherenceValue",
    "FringeMetrics",
    "sinc",
    "double_slit_transform",
    "mean_intensity",
    "mutual_coherence",
    "g2_model",
    "g2_model_curve",
    "fringe_metrics",
    "mutual_coherence_quadrature",
    "mean_intensity_quadrature",
    "quadrature_spacing_bound",
]

# Default illumination: correlation length well below the slit width but
# resolvable on the default engine grid, and an envelope wide enough that
# the aperture region sees effectively uniform, uncorrelated illumination
# (a narrow spot vignettes the outer slit edges and skews the fringe).
DEFAULT_CORRELATION_LENGTH = 15e-6
DEFAULT_ENVELOPE_WIDTH = 30e-3


@dataclass(frozen=True)
class SourceSpec:
    """Pseudothermal source model.

    ``strength`` is W0, the weight of the source correlation;
    ``correlation_length`` the 1-sigma width of the Gaussian first-order
    correlation (0 selects the ideal broadband delta limit);
    ``envelope_width`` the 1/e^2 full width of the illuminated spot's
    intensity profile at the source plane.
    """

    strength: float = 1.0
    correlation_length: float = DEFAULT_CORRELATION_LENGTH
    envelope_width: float = DEFAULT_ENVELOPE_WIDTH

    def __post_init__(self):
        if not (self.strength > 0):
            raise ValueError("strength W0 must be > 0")
        if self.correlation_length < 0:
            raise ValueError("correlation_length must be >= 0")
        if not (self.envelope_width > 0):
            raise ValueError("envelope_width must be > 0")

    @property
    def broadband(self) -> bool:
        return self.correlation_length == 0.0

    def as_broadband(self) -> "SourceSpec":
        return SourceSpec(self.strength, 0.0, self.envelope_width)

    def envelope_amplitude(self, x: np.ndarray) -> np.ndarray:
        """Amplitude envelope G(x); intensity G^2 falls to 1/e^2 at
        |x| = envelope_width / 2."""
        half = self.envelope_width / 2
        return np.exp(-(x**2) / half**2)

    def correlation_kernel(self, u: np.ndarray) -> np.ndarray:
        """W~(u) = sqrt(2 pi) W0 N(u; correlation_length), the Gaussian
        extension of the broadband limit; integrates to sqrt(2 pi) W0."""
        s = self.correlation_length
        if s == 0:
            raise BroadbandLimitError("the delta-limit kernel has no sampled form")
        dens = np.exp(-(u**2) / (2 * s**2)) / (np.sqrt(2 * np.pi) * s)
        return np.sqrt(2 * np.pi) * self.strength * dens


@dataclass(frozen=True)
class CoherenceValue:
    """Detector-plane mutual coherence <E1*(x1) E2(x2)> at one point pair."""

    value: complex
    at: tuple[float, float]

    @property
    def modulus(self) -> float:
        return abs(self.value)


@dataclass(frozen=True)
class FringeMetrics:
    """Geometry of the correlation fringe for the canonical aperture pair."""

    period: float
    envelope_first_zero: float
    visibility_factor: float


def sinc(u):
    """Unnormalized sinc, sin(u)/u with sinc(0) = 1.

    A series branch below |u| = 1e-4 avoids the 0/0 singularity.
    """
    u = np.asarray(u, dtype=np.float64)
    small = np.abs(u) < 1e-4
    safe = np.where(small, 1.0, u)
    out = np.where(small, 1.0 - u**2 / 6.0 + u**4 / 120.0, np.sin(safe) / safe)
    return out if out.ndim else float(out)


def double_slit_transform(q: float, slit: DoubleSlitSpec) -> float:
    """Fourier transform of the double-slit profile,
    D~(q) = (2b / sqrt(2 pi)) sinc(q b / 2) cos(q d / 2)."""
    b, d = slit.slit_width, slit.center_separation
    return (2 * b / np.sqrt(2 * np.pi)) * sinc(q * b / 2) * np.cos(q * d / 2)


def _require_broadband(source: SourceSpec, op: str, alt: str) -> None:
    if not source.broadband:
        raise BroadbandLimitError(
            f"{op} is the broadband closed form (correlation_length must be 0, "
            f"got {source.correlation_length:.3e} m); use {alt} instead"
        )


def _require_symmetric(layout: ExperimentLayout, op: str, alt: str) -> None:
    if not layout.symmetric:
        raise ArmSymmetryError(
            f"{op} requires symmetric arms; use {alt} for per-arm distances"
        )


def mean_intensity(
    layout: ExperimentLayout, arm: int, aperture: ApertureProfile, source: SourceSpec
) -> float:
    """Broadband mean intensity, (W0 k / 2 pi L) * int A^2.

    Position independent: an incoherent source produces a flat singles
    profile, the featureless background of the correlation measurement.
    """
    _require_broadband(source, "mean_intensity", "mean_intensity_quadrature")
    pref = source.strength * layout.wavenumber / (2 * np.pi * layout.aperture_to_detector(arm))
    return pref * aperture.squared_integral()


def mutual_coherence(
    x1: float, x2: float, layout: ExperimentLayout, slit: DoubleSlitSpec, source: SourceSpec
) -> CoherenceValue:
    """Broadband symmetric-arm closed form of <E1*(x1) E2(x2)>.

    (W0 k / sqrt(2 pi) L) exp[i k (x2^2 - x1^2) / 2L] D~[(k/L)(x1 - x2)];
    the modulus depends on x1 - x2 only.
    """
    _require_broadband(source, "mutual_coherence", "mutual_coherence_quadrature")
    _require_symmetric(layout, "mutual_coherence", "mutual_coherence_quadrature")
    k = layout.wavenumber
    L = layout.aperture_to_detector(1)
    pref = source.strength * k / (np.sqrt(2 * np.pi) * L)
    phase = np.exp(1j * k * (x2**2 - x1**2) / (2 * L))
    val = pref * phase * double_slit_transform(k * (x1 - x2) / L, slit)
    return CoherenceValue(complex(val), (x1, x2))


def g2_model(
    x1: float,
    x2: float,
    layout: ExperimentLayout,
    apertures: tuple[ApertureProfile, ApertureProfile],
    slit: DoubleSlitSpec,
    source: SourceSpec,
) -> float:
    """Normalized correlation 1 + |<E1* E2>|^2 / (<I1> <I2>), >= 1."""
    i1 = mean_intensity(layout, 1, apertures[0], source)
    i2 = mean_intensity(layout, 2, apertures[1], source)
    if i1 <= 0 or i2 <= 0:
        raise UndefinedCorrelationError(
            "g2 undefined: zero mean intensity in arm " + ("1" if i1 <= 0 else "2")
        )
    coh = mutual_coherence(x1, x2, layout, slit, source)
    return 1.0 + coh.modulus**2 / (i1 * i2)


def g2_model_curve(
    positions: np.ndarray,
    probe_position: float,
    layout: ExperimentLayout,
    apertures: tuple[ApertureProfile, ApertureProfile],
    slit: DoubleSlitSpec,
    source: SourceSpec,
) -> np.ndarray:
    """Vectorized g2_model along a scan; depends on x - probe only."""
    i1 = mean_intensity(layout, 1, apertures[0], source)
    i2 = mean_intensity(layout, 2, apertures[1], source)
    if i1 <= 0 or i2 <= 0:
        raise UndefinedCorrelationError(
            "g2 undefined: zero mean intensity in arm " + ("1" if i1 <= 0 else "2")
        )
    _require_symmetric(layout, "g2_model_curve", "mutual_coherence_quadrature")
    k = layout.wavenumber
    L = layout.aperture_to_detector(1)
    pref = source.strength * k / (np.sqrt(2 * np.pi) * L)
    dt = double_slit_transform(k * (probe_position - np.asarray(positions)) / L, slit)
    return 1.0 + (pref * dt) ** 2 / (i1 * i2)


def fringe_metrics(layout: ExperimentLayout, slit: DoubleSlitSpec) -> FringeMetrics:
    """Fringe period lambda L / d, envelope first zero lambda L / b, and
    the canonical-pair visibility V0 = 2b / (d + b).

    V0 assumes the default decomposition (outer support w = d + b); for a
    wider support it is (2b)^2 / ((d + b)(w - (d - b))), available through
    g2_model with the actual aperture pair.
    """
    _require_symmetric(layout, "fringe_metrics", "per-arm evaluation via g2_model")
    L = layout.aperture_to_detector(1)
    lam = layout.wavelength
    b, d = slit.slit_width, slit.center_separation
    return FringeMetrics(
        period=lam * L / d,
        envelope_first_zero=lam * L / b,
        visibility_factor=2 * b / (d + b),
    )


def quadrature_spacing_bound(layout: ExperimentLayout, window: float) -> float:
    """Maximum admissible grid spacing for the Riemann quadratures:
    lambda * min(L0, L) / (2 * window), which keeps the composite Fresnel
    kernel sampled below Nyquist across the window."""
    zmin = min(
        layout.source_to_aperture(1),
        layout.source_to_aperture(2),
        layout.aperture_to_detector(1),
        layout.aperture_to_detector(2),
    )
    return layout.wavelength * zmin / (2 * window)


def _check_quadrature_grid(layout: ExperimentLayout, aperture: ApertureProfile) -> None:
    bound = quadrature_spacing_bound(layout, aperture.grid.window)
    if aperture.grid.spacing > bound:
        raise SamplingBoundError(
            f"grid spacing {aperture.grid.spacing:.3e} m violates the Fresnel "
            f"sampling bound {bound:.3e} m for this window and layout",
            bound=bound,
        )


def _arm_response(
    x_det: float,
    layout: ExperimentLayout,
    arm: int,
    aperture: ApertureProfile,
    chunk: int = 2048,
) -> np.ndarray:
    """h_arm(x_det, x0) on the aperture grid: direct Riemann quadrature of
    the two-segment Fresnel kernel over the aperture support with
    prefactor k / (2 pi i sqrt(L0 L))."""
    grid = aperture.grid
    k = layout.wavenumber
    l0 = layout.source_to_aperture(arm)
    ll = layout.aperture_to_detector(arm)
    x = grid.coordinates
    sup = aperture.transmission > 0
    if not np.any(sup):
        return np.zeros(grid.samples, dtype=np.complex128)
    xs = x[sup]
    ts = aperture.transmission[sup]
    pref = k / (2j * np.pi * np.sqrt(l0 * ll)) * grid.spacing
    det_factor = ts * np.exp(1j * k * (xs - x_det) ** 2 / (2 * ll))
    out = np.empty(grid.samples, dtype=np.complex128)
    for start in range(0, grid.samples, chunk):
        x0 = x[start : start + chunk]
        m = np.exp(1j * k * (xs[None, :] - x0[:, None]) ** 2 / (2 * l0))
        out[start : start + chunk] = m @ det_factor
    return pref * out


def _banded_correlation_sum(
    g1: np.ndarray, g2: np.ndarray, source: SourceSpec, spacing: float
) -> complex:
    """(1/sqrt(2 pi)) * sum g1(x0') g2(x0) W~(x0' - x0) dx0' dx0 with the
    Gaussian kernel truncated at five sigma."""
    n = g1.size
    lc = source.correlation_length
    nband = int(np.ceil(5 * lc / spacing))
    total = 0.0 + 0.0j
    for off in range(-nband, nband + 1):
        w = source.correlation_kernel(np.array(off * spacing))
        if off >= 0:
            total += w * np.sum(g1[: n - off] * g2[off:])
        else:
            total += w * np.sum(g1[-off:] * g2[: n + off])
    return total * spacing**2 / np.sqrt(2 * np.pi)


def mutual_coherence_quadrature(
    x1: float,
    x2: float,
    layout: ExperimentLayout,
    apertures: tuple[ApertureProfile, ApertureProfile],
    source: SourceSpec,
) -> CoherenceValue:
    """<E1*(x1) E2(x2)> by direct quadrature of the propagation integrals.

    Handles per-arm distances and finite correlation length; the source
    envelope multiplies the correlation. For a broadband source the
    double source integral collapses to W0 * sum h1* h2 G^2 dx0.
    """
    require_same_grid(apertures[0].grid, apertures[1].grid, "apertures")
    _check_quadrature_grid(layout, apertures[0])
    grid = apertures[0].grid
    env = source.envelope_amplitude(grid.coordinates)
    h1 = _arm_response(x1, layout, 1, apertures[0])
    h2 = _arm_response(x2, layout, 2, apertures[1])
    g1 = np.conj(h1) * env
    g2 = h2 * env
    if source.broadband:
        val = source.strength * np.sum(g1 * g2) * grid.spacing
    else:
        val = _banded_correlation_sum(g1, g2, source, grid.spacing)
    return CoherenceValue(complex(val), (x1, x2))


def mean_intensity_quadrature(
    x: float,
    layout: ExperimentLayout,
    arm: int,
    aperture: ApertureProfile,
    source: SourceSpec,
) -> float:
    """<I_arm(x)> by the same quadrature with both field factors in one arm."""
    _check_quadrature_grid(layout, aperture)
    grid = aperture.grid
    env = source.envelope_amplitude(grid.coordinates)
    h = _arm_response(x, layout, arm, aperture)
    g1 = np.conj(h) * env
    g2 = h * env
    if source.broadband:
        val = source.strength * np.sum(g1 * g2) * grid.spacing
    else:
        val = _banded_correlation_sum(g1, g2, source, grid.spacing)
    return float(np.real(val))
