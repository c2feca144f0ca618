"""Domain types for the one-dimensional transverse optics model.

Grids, complex fields, the bench layout, and the aperture pair whose
pointwise product forms the double slit. All types are immutable after
construction and safe to share across workers.

Sampling convention: pixel centers. An open interval of an aperture,
expressed in |x|, includes a sample iff ``left < |x_i| <= right`` (strict
at the left edge, inclusive at the right). This makes edge rounding
deterministic and keeps every profile exactly even in x.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GridMismatchError, GridResolutionError

__all__ = [
    "SpatialGrid",
    "ComplexField",
    "ExperimentLayout",
    "DoubleSlitSpec",
    "ApertureShape",
    "ApertureProfile",
    "sample_double_slit",
    "canonical_aperture_pair",
]


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform 1D transverse sampling, centered on x = 0.

    ``window`` is the full extent in meters, ``samples`` the number of
    pixels N. Sample i sits at ``(i - N//2) * spacing``; for even N the
    origin lies exactly on a sample.
    """

    window: float
    samples: int

    def __post_init__(self):
        if not (self.window > 0 and np.isfinite(self.window)):
            raise ValueError(f"window must be positive and finite, got {self.window}")
        if self.samples < 16:
            raise ValueError(f"samples must be >= 16, got {self.samples}")

    @property
    def spacing(self) -> float:
        return self.window / self.samples

    @cached_property
    def coordinates(self) -> np.ndarray:
        x = (np.arange(self.samples) - self.samples // 2) * self.spacing
        x.setflags(write=False)
        return x

    def index_of(self, position: float) -> int:
        """Nearest sample index to ``position``."""
        i = int(round(position / self.spacing)) + self.samples // 2
        if not 0 <= i < self.samples:
            raise ValueError(f"position {position} m outside the grid window")
        return i


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex amplitudes sampled on a grid."""

    grid: SpatialGrid
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.complex128)
        if amp.shape != (self.grid.samples,):
            raise ValueError(
                f"amplitude count {amp.shape} does not match grid samples {self.grid.samples}"
            )
        if not np.all(np.isfinite(amp.view(np.float64))):
            raise ValueError("field amplitudes must be finite")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def power(self) -> float:
        """Total power, sum |E|^2 * spacing."""
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.spacing)

    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class ExperimentLayout:
    """Bench geometry: wavelength and per-arm propagation distances.

    Defaults reproduce the tabletop setup: a 660 nm source 3.4 cm before
    the beamsplitter, apertures 4.7 cm and detectors 85.3 cm behind it.
    """

    wavelength: float = 660e-9
    source_to_bs: float = 0.034
    bs_to_aperture: tuple[float, float] = (0.047, 0.047)
    bs_to_detector: tuple[float, float] = (0.853, 0.853)

    def __post_init__(self):
        dists = (self.wavelength, self.source_to_bs, *self.bs_to_aperture, *self.bs_to_detector)
        if any(not (v > 0 and np.isfinite(v)) for v in dists):
            raise ValueError("all distances and the wavelength must be strictly positive")
        for arm in (1, 2):
            if self.bs_to_detector[arm - 1] <= self.bs_to_aperture[arm - 1]:
                raise ValueError(
                    f"arm {arm}: detector ({self.bs_to_detector[arm - 1]} m) must lie "
                    f"beyond the aperture ({self.bs_to_aperture[arm - 1]} m)"
                )

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength

    def source_to_aperture(self, arm: int) -> float:
        """L0 for the given arm (1 or 2), measured from the source plane."""
        return self.source_to_bs + self.bs_to_aperture[_arm_index(arm)]

    def aperture_to_detector(self, arm: int) -> float:
        """L for the given arm (1 or 2)."""
        return self.bs_to_detector[_arm_index(arm)] - self.bs_to_aperture[_arm_index(arm)]

    @property
    def symmetric(self) -> bool:
        return (
            self.bs_to_aperture[0] == self.bs_to_aperture[1]
            and self.bs_to_detector[0] == self.bs_to_detector[1]
        )


def _arm_index(arm: int) -> int:
    if arm not in (1, 2):
        raise ValueError(f"arm must be 1 or 2, got {arm}")
    return arm - 1


@dataclass(frozen=True)
class DoubleSlitSpec:
    """Slit width b and center separation d of the product double slit."""

    slit_width: float = 250e-6
    center_separation: float = 670e-6

    def __post_init__(self):
        b, d = self.slit_width, self.center_separation
        if not (0 < b < d):
            raise ValueError(f"need 0 < slit_width < center_separation, got b={b}, d={d}")

    @property
    def inner_edge(self) -> float:
        """Half-gap (d - b) / 2: the slits are disjoint iff this is > 0."""
        return (self.center_separation - self.slit_width) / 2

    @property
    def outer_edge(self) -> float:
        return (self.center_separation + self.slit_width) / 2


@dataclass(frozen=True)
class ApertureShape:
    """Analytic descriptor of a transmission profile.

    kind is one of "slit" (open for |x| <= width/2), "strip" (outer
    support of ``width`` with a central stop of ``inner``), "double_slit",
    "open", or "custom".
    """

    kind: str
    width: float | None = None
    inner: float | None = None

    _KINDS = ("slit", "strip", "double_slit", "open", "custom")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown aperture kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class ApertureProfile:
    """Sampled transmission in [0, 1] plus its analytic descriptor."""

    grid: SpatialGrid
    transmission: np.ndarray
    shape: ApertureShape = field(default_factory=lambda: ApertureShape("custom"))

    def __post_init__(self):
        t = np.asarray(self.transmission, dtype=np.float64)
        if t.shape != (self.grid.samples,):
            raise ValueError("transmission length must equal grid samples")
        if np.any(t < 0) or np.any(t > 1) or not np.all(np.isfinite(t)):
            raise ValueError("transmission values must lie in [0, 1]")
        t.setflags(write=False)
        object.__setattr__(self, "transmission", t)

    @property
    def open_length(self) -> float:
        """Integrated transmission, sum t_i * spacing."""
        return float(np.sum(self.transmission) * self.grid.spacing)

    def squared_integral(self) -> float:
        """sum t_i^2 * spacing, the integral of A^2 entering mean intensities."""
        return float(np.sum(self.transmission**2) * self.grid.spacing)


def _open_interval_mask(x: np.ndarray, left: float, right: float) -> np.ndarray:
    # left-strict / right-inclusive membership on |x|
    ax = np.abs(x)
    return (left < ax) & (ax <= right)


def sample_double_slit(slit: DoubleSlitSpec, grid: SpatialGrid) -> ApertureProfile:
    """Sample the product double slit D(x) on pixel centers.

    Transmission is 1 for (d-b)/2 < |x| <= (d+b)/2, 0 elsewhere (edge
    ties broken per the module convention). Requires at least four
    samples per slit.
    """
    if grid.spacing >= slit.slit_width / 4:
        raise GridResolutionError(
            f"grid spacing {grid.spacing:.3e} m too coarse for slit width "
            f"{slit.slit_width:.3e} m; need spacing < b/4 = {slit.slit_width / 4:.3e} m"
        )
    t = _open_interval_mask(grid.coordinates, slit.inner_edge, slit.outer_edge)
    return ApertureProfile(grid, t.astype(np.float64), ApertureShape("double_slit"))


def canonical_aperture_pair(
    slit: DoubleSlitSpec, outer_support: float, grid: SpatialGrid
) -> tuple[ApertureProfile, ApertureProfile]:
    """Slit-plus-wire decomposition whose product is exactly D(x).

    Arm 1 gets a single slit; arm 2 an outer support of ``outer_support``
    with a central blocking strip of width d - b. Neither profile is a
    double slit on its own. The arm-1 slit is clamped to d + b so the
    pointwise product equals ``sample_double_slit`` output for any
    admissible support width.
    """
    b, d = slit.slit_width, slit.center_separation
    if outer_support < d + b:
        raise ValueError(
            f"outer support {outer_support:.3e} m cannot form the full double slit; "
            f"need at least d + b = {d + b:.3e} m"
        )
    if grid.spacing >= (d - b) / 4:
        raise GridResolutionError(
            f"grid spacing {grid.spacing:.3e} m too coarse for the blocking strip; "
            f"need spacing < (d - b)/4 = {(d - b) / 4:.3e} m"
        )
    x = grid.coordinates
    w1 = min(outer_support, d + b)
    t1 = _open_interval_mask(x, 0.0, w1 / 2) | (x == 0.0)
    t2 = _open_interval_mask(x, slit.inner_edge, outer_support / 2)
    a1 = ApertureProfile(grid, t1.astype(np.float64), ApertureShape("slit", width=w1))
    a2 = ApertureProfile(
        grid, t2.astype(np.float64), ApertureShape("strip", width=outer_support, inner=d - b)
    )
    return a1, a2


def open_aperture(grid: SpatialGrid) -> ApertureProfile:
    """Fully transmitting profile."""
    return ApertureProfile(grid, np.ones(grid.samples), ApertureShape("open"))


def blocked_aperture(grid: SpatialGrid) -> ApertureProfile:
    """Fully blocking profile."""
    return ApertureProfile(grid, np.zeros(grid.samples), ApertureShape("custom"))


def require_same_grid(a: SpatialGrid, b: SpatialGrid, what: str = "operands") -> None:
    if a != b:
        raise GridMismatchError(f"{what} live on different grids: {a} vs {b}")
