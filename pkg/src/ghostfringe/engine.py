"""Monte Carlo synthesis and propagation of pseudothermal speckle frames.

Each frame draws an independent random field at the source plane (the
rotating diffuser is modeled as statistically independent realizations),
splits it into two identical copies (ideal lossless beamsplitter; g2 is
insensitive to common scaling), masks each copy with its arm's aperture
between two Fresnel propagation segments, and records the detector-plane
intensities.

Propagation uses the sampled Fresnel kernel applied as a linear
convolution on a twice-zero-padded domain (absorbing window edges, no
wraparound). Kernel samples at transverse offsets beyond
lambda * z / (2 * spacing) oscillate above the grid Nyquist rate and carry
no representable signal; they are rolled off smoothly instead of being
allowed to alias.

Per-frame random streams are derived by the SeedSequence keyed hash of
(master_seed, frame_index), so the ensemble is bit-reproducible for any
execution order or worker count.
"""

from __future__ import annotations

import threading
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytic import SourceSpec
from .core import ApertureProfile, ComplexField, ExperimentLayout, SpatialGrid, require_same_grid
from .errors import SamplingBoundError
from .stats import CorrelationAccumulator, merge

__all__ = [
    "Scenario",
    "FrameRecord",
    "derive_frame_rng",
    "sample_source_field",
    "fresnel_propagate",
    "apply_mask",
    "simulate_frame",
    "run_ensemble",
]

# Frames are accumulated in fixed-size chunks merged in index order; the
# reduction tree is therefore independent of the worker count, which is
# what makes multi-worker runs bit-identical to sequential ones.
CHUNK_FRAMES = 32

# Raised-cosine roll-off applied to the outermost fraction of the valid
# kernel band.
_TAPER_START = 0.9


def derive_frame_rng(master_seed: int, frame_index: int) -> np.random.Generator:
    """Deterministic per-frame stream: SeedSequence(master_seed) spawned
    at key (frame_index,). Independent of any global generator state."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(frame_index,))
    return np.random.default_rng(seq)


def _wrapped_offsets(samples: int, spacing: float) -> np.ndarray:
    """Signed convolution offsets of the 2N circular domain, in meters."""
    m = 2 * samples
    idx = np.arange(m)
    idx[idx > m // 2] -= m
    return idx * spacing


def _fresnel_kernel_fft(
    grid: SpatialGrid, distance: float, wavelength: float, band_limit: bool
) -> np.ndarray:
    k = 2 * np.pi / wavelength
    u = _wrapped_offsets(grid.samples, grid.spacing)
    kernel = (
        np.sqrt(k / (2j * np.pi * distance))
        * np.exp(1j * k * distance)
        * np.exp(1j * k * u**2 / (2 * distance))
    )
    if band_limit:
        u_valid = wavelength * distance / (2 * grid.spacing)
        off = np.abs(u)
        if u_valid < off.max():
            t0 = _TAPER_START * u_valid
            ramp = np.clip((off - t0) / (u_valid - t0), 0.0, 1.0)
            kernel = kernel * np.where(off > u_valid, 0.0, 0.5 * (1 + np.cos(np.pi * ramp)))
    return np.fft.fft(kernel)


def _convolve_padded(amplitudes: np.ndarray, kernel_fft: np.ndarray, spacing: float) -> np.ndarray:
    n = amplitudes.size
    padded = np.zeros(2 * n, dtype=np.complex128)
    padded[:n] = amplitudes
    return (np.fft.ifft(np.fft.fft(padded) * kernel_fft) * spacing)[:n]


def fresnel_propagate(
    field: ComplexField, distance: float, wavelength: float, band_limit: bool = True
) -> ComplexField:
    """Propagate a field by ``distance`` with the paraxial Fresnel kernel.

    Computes sqrt(k / 2 pi i z) e^{ikz} * sum E(x') e^{ik(x-x')^2 / 2z} dx'
    as a zero-padded convolution, identical to the direct Riemann sum.
    With ``band_limit`` (default) kernel offsets beyond the grid's valid
    band are suppressed; with ``band_limit=False`` the grid must satisfy
    spacing <= lambda z / (2 window) or the call is rejected.
    """
    if not (distance > 0):
        raise ValueError(f"propagation distance must be > 0, got {distance}")
    grid = field.grid
    if not band_limit:
        bound = wavelength * distance / (2 * grid.window)
        if grid.spacing > bound:
            raise SamplingBoundError(
                f"grid spacing {grid.spacing:.3e} m exceeds the Fresnel sampling "
                f"bound {bound:.3e} m for z = {distance} m over a {grid.window} m window",
                bound=bound,
            )
    kfft = _fresnel_kernel_fft(grid, distance, wavelength, band_limit)
    return ComplexField(grid, _convolve_padded(field.amplitudes, kfft, grid.spacing))


def _source_kernel_fft(source: SourceSpec, grid: SpatialGrid) -> np.ndarray | None:
    """FFT of the correlation-shaping kernel, or None in the delta limit.

    The kernel H is Gaussian with 1/e half-width equal to the correlation
    length and amplitude chosen so the synthesized field's two-point
    correlation reproduces W~ exactly:
    sigma_H = lc / sqrt(2), H(0)^2 = sqrt(2) W0 dx / (sqrt(pi) lc^2).
    """
    lc = source.correlation_length
    if lc == 0:
        return None
    u = _wrapped_offsets(grid.samples, grid.spacing)
    sigma = lc / np.sqrt(2)
    h0 = np.sqrt(np.sqrt(2) * source.strength * grid.spacing / (np.sqrt(np.pi) * lc**2))
    return np.fft.fft(h0 * np.exp(-(u**2) / (2 * sigma**2)))


def sample_source_field(
    source: SourceSpec,
    grid: SpatialGrid,
    rng: np.random.Generator,
    _kernel_fft: np.ndarray | None = None,
    _envelope: np.ndarray | None = None,
) -> ComplexField:
    """Draw one circular complex Gaussian source realization.

    In the delta limit each sample is independent with variance
    sqrt(2 pi) W0 / spacing, the discrete counterpart of the broadband
    correlation. For a finite correlation length, white noise is shaped
    by the Gaussian kernel so the two-point correlation equals W~. The
    amplitude envelope is applied last.
    """
    n = grid.samples
    if source.correlation_length > 0:
        if _kernel_fft is None:
            _kernel_fft = _source_kernel_fft(source, grid)
        white = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
        padded = np.zeros(2 * n, dtype=np.complex128)
        padded[:n] = white
        field = np.fft.ifft(np.fft.fft(padded) * _kernel_fft)[:n]
    else:
        sigma = np.sqrt(np.sqrt(2 * np.pi) * source.strength / grid.spacing)
        field = sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    env = source.envelope_amplitude(grid.coordinates) if _envelope is None else _envelope
    return ComplexField(grid, field * env)


def apply_mask(field: ComplexField, aperture: ApertureProfile) -> ComplexField:
    """Pointwise transmission: E * A. Field and aperture must share a grid."""
    require_same_grid(field.grid, aperture.grid, "field and aperture")
    return ComplexField(field.grid, field.amplitudes * aperture.transmission)


@dataclass(frozen=True, eq=False)
class FrameRecord:
    """Detector-plane result of one frame: intensities per arm and,
    when diagnostics are enabled, the complex fields."""

    intensity1: np.ndarray
    intensity2: np.ndarray
    field1: np.ndarray | None = None
    field2: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class Scenario:
    """Immutable description of one ensemble run."""

    layout: ExperimentLayout
    apertures: tuple[ApertureProfile, ApertureProfile]
    source: SourceSpec
    grid: SpatialGrid
    frames: int = 5000
    master_seed: int = 12345
    fixed_probe: tuple[int, float] = (1, 0.0)
    retain_fields: bool = False

    def __post_init__(self):
        require_same_grid(self.apertures[0].grid, self.grid, "aperture 1 and scenario")
        require_same_grid(self.apertures[1].grid, self.grid, "aperture 2 and scenario")
        if self.frames < 1:
            raise ValueError("frames must be >= 1")
        lc = self.source.correlation_length
        if lc > 0 and lc < 2 * self.grid.spacing:
            raise SamplingBoundError(
                f"correlation length {lc:.3e} m is not resolvable: need "
                f"lc >= 2 * spacing = {2 * self.grid.spacing:.3e} m",
                bound=2 * self.grid.spacing,
            )
        arm, pos = self.fixed_probe
        if arm not in (1, 2):
            raise ValueError(f"probe arm must be 1 or 2, got {arm}")
        self.grid.index_of(pos)  # raises if outside the window

    @property
    def probe_index(self) -> int:
        return self.grid.index_of(self.fixed_probe[1])


class _Prepared:
    """Per-scenario precomputed kernels shared by all frames."""

    def __init__(self, scenario: Scenario):
        lay, grid = scenario.layout, scenario.grid
        lam = lay.wavelength
        self.kernel_l0 = {
            z: _fresnel_kernel_fft(grid, z, lam, band_limit=True)
            for z in {lay.source_to_aperture(1), lay.source_to_aperture(2)}
        }
        self.kernel_l = {
            z: _fresnel_kernel_fft(grid, z, lam, band_limit=True)
            for z in {lay.aperture_to_detector(1), lay.aperture_to_detector(2)}
        }
        self.source_kernel = _source_kernel_fft(scenario.source, grid)
        self.envelope = scenario.source.envelope_amplitude(grid.coordinates)
        self.shared_first_leg = lay.source_to_aperture(1) == lay.source_to_aperture(2)


_PREPARED_LOCK = threading.Lock()
_PREPARED_CACHE: dict[int, tuple[Scenario, _Prepared]] = {}


def _prepared_for(scenario: Scenario) -> _Prepared:
    key = id(scenario)
    with _PREPARED_LOCK:
        hit = _PREPARED_CACHE.get(key)
        if hit is not None and hit[0] is scenario:
            return hit[1]
    prep = _Prepared(scenario)
    with _PREPARED_LOCK:
        if len(_PREPARED_CACHE) > 8:
            _PREPARED_CACHE.clear()
        _PREPARED_CACHE[key] = (scenario, prep)
    return prep


def simulate_frame(scenario: Scenario, frame_index: int) -> FrameRecord:
    """Propagate one independent source realization through both arms.

    Both arms receive the same realization; each is masked by its own
    aperture between the two Fresnel segments. Pure function of
    (scenario, frame_index).
    """
    prep = _prepared_for(scenario)
    grid, lay = scenario.grid, scenario.layout
    dx = grid.spacing
    rng = derive_frame_rng(scenario.master_seed, frame_index)
    src = sample_source_field(
        scenario.source, grid, rng, _kernel_fft=prep.source_kernel, _envelope=prep.envelope
    )

    def arm_field(arm: int, at_aperture: np.ndarray) -> np.ndarray:
        masked = at_aperture * scenario.apertures[arm - 1].transmission
        return _convolve_padded(masked, prep.kernel_l[lay.aperture_to_detector(arm)], dx)

    amp0 = _convolve_padded(src.amplitudes, prep.kernel_l0[lay.source_to_aperture(1)], dx)
    e1 = arm_field(1, amp0)
    if prep.shared_first_leg:
        e2 = arm_field(2, amp0)
    else:
        amp0b = _convolve_padded(src.amplitudes, prep.kernel_l0[lay.source_to_aperture(2)], dx)
        e2 = arm_field(2, amp0b)

    i1 = np.abs(e1) ** 2
    i2 = np.abs(e2) ** 2
    if scenario.retain_fields:
        return FrameRecord(i1, i2, e1, e2)
    return FrameRecord(i1, i2)


def _new_accumulator(scenario: Scenario) -> CorrelationAccumulator:
    return CorrelationAccumulator.empty(
        scenario.grid,
        probe_index=scenario.probe_index,
        retain_fields=scenario.retain_fields,
    )


def _simulate_chunk(scenario: Scenario, start: int, stop: int) -> CorrelationAccumulator:
    acc = _new_accumulator(scenario)
    for i in range(start, stop):
        acc.update(simulate_frame(scenario, i))
    return acc


def run_ensemble(scenario: Scenario, workers: int = 1) -> CorrelationAccumulator:
    """Fold all frames into a correlation accumulator.

    Frames are processed in fixed 32-frame chunks whose partial
    accumulators are merged in chunk order, so the result is bit-identical
    for a given master seed regardless of ``workers``.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    chunks = [
        (start, min(start + CHUNK_FRAMES, scenario.frames))
        for start in range(0, scenario.frames, CHUNK_FRAMES)
    ]
    if workers == 1 or len(chunks) == 1:
        parts = [_simulate_chunk(scenario, a, b) for a, b in chunks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_worker, [(scenario, a, b) for a, b in chunks]))
    acc = _new_accumulator(scenario)
    for part in parts:
        acc = merge(acc, part)
    return acc


def _chunk_worker(args: tuple[Scenario, int, int]) -> CorrelationAccumulator:
    return _simulate_chunk(*args)
