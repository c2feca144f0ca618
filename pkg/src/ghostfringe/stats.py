"""Streaming, mergeable estimation of g2 slices and their errors.

A CorrelationAccumulator folds detector frames into running sums: per
pixel means of both arms, cross products against a fixed probe pixel in
both scan orientations, the mixed moments needed for delta-method
standard errors, and (optionally) complex field products for the Siegert
diagnostic. Accumulators are single-writer; parallel ensembles combine
partial accumulators through ``merge`` only.

The g2 estimator is the plug-in ratio of sample means,

    g2(x) = mean[I_scan(x) I_probe] / (mean[I_scan(x)] mean[I_probe]),

with its standard error propagated from the variances and covariances of
numerator and denominator. Pixels whose mean intensity falls below a
floor of 1e-9 times the arm average are flagged undefined rather than
dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import SpatialGrid
from .errors import GridMismatchError, NumericValidityError

__all__ = ["CorrelationAccumulator", "G2Slice", "SiegertReport", "merge", "g2_slice", "siegert_check"]

UNDEFINED_FLOOR = 1e-9


@dataclass(eq=False)
class CorrelationAccumulator:
    """Running moments of an ensemble, mergeable across workers."""

    grid: SpatialGrid
    probe_index: int
    retain_fields: bool
    frame_count: int = 0
    # per-pixel intensity sums, both arms
    sum1: np.ndarray = field(repr=False, default=None)
    sumsq1: np.ndarray = field(repr=False, default=None)
    sum2: np.ndarray = field(repr=False, default=None)
    sumsq2: np.ndarray = field(repr=False, default=None)
    # scan arm 2 against probe on arm 1: X = I2(x), Y = I1(probe)
    cross_s2: np.ndarray = field(repr=False, default=None)
    crosssq_s2: np.ndarray = field(repr=False, default=None)
    x2y_s2: np.ndarray = field(repr=False, default=None)
    xy2_s2: np.ndarray = field(repr=False, default=None)
    # scan arm 1 against probe on arm 2
    cross_s1: np.ndarray = field(repr=False, default=None)
    crosssq_s1: np.ndarray = field(repr=False, default=None)
    x2y_s1: np.ndarray = field(repr=False, default=None)
    xy2_s1: np.ndarray = field(repr=False, default=None)
    # complex sums conj(E_probe) E_scan, present when retain_fields
    csum_s2: np.ndarray | None = field(repr=False, default=None)
    csum_s1: np.ndarray | None = field(repr=False, default=None)

    _REAL_ARRAYS = (
        "sum1", "sumsq1", "sum2", "sumsq2",
        "cross_s2", "crosssq_s2", "x2y_s2", "xy2_s2",
        "cross_s1", "crosssq_s1", "x2y_s1", "xy2_s1",
    )

    @classmethod
    def empty(
        cls, grid: SpatialGrid, probe_index: int, retain_fields: bool = False
    ) -> "CorrelationAccumulator":
        n = grid.samples
        if not 0 <= probe_index < n:
            raise ValueError(f"probe index {probe_index} outside grid of {n} samples")
        acc = cls(grid=grid, probe_index=probe_index, retain_fields=retain_fields)
        for name in cls._REAL_ARRAYS:
            setattr(acc, name, np.zeros(n))
        if retain_fields:
            acc.csum_s2 = np.zeros(n, dtype=np.complex128)
            acc.csum_s1 = np.zeros(n, dtype=np.complex128)
        return acc

    @property
    def probe_position(self) -> float:
        return float(self.grid.coordinates[self.probe_index])

    def update(self, frame) -> "CorrelationAccumulator":
        """Fold one frame record in; returns self."""
        i1 = np.asarray(frame.intensity1, dtype=np.float64)
        i2 = np.asarray(frame.intensity2, dtype=np.float64)
        if i1.shape != (self.grid.samples,) or i2.shape != (self.grid.samples,):
            raise GridMismatchError("frame intensity length does not match accumulator grid")
        p = self.probe_index
        self.sum1 += i1
        self.sumsq1 += i1 * i1
        self.sum2 += i2
        self.sumsq2 += i2 * i2
        y1 = i1[p]
        prod = i2 * y1
        self.cross_s2 += prod
        self.crosssq_s2 += prod * prod
        self.x2y_s2 += i2 * prod
        self.xy2_s2 += y1 * prod
        y2 = i2[p]
        prod = i1 * y2
        self.cross_s1 += prod
        self.crosssq_s1 += prod * prod
        self.x2y_s1 += i1 * prod
        self.xy2_s1 += y2 * prod
        if self.retain_fields:
            if frame.field1 is None or frame.field2 is None:
                raise NumericValidityError("accumulator retains fields but frame has none")
            self.csum_s2 += np.conj(frame.field1[p]) * frame.field2
            self.csum_s1 += np.conj(frame.field2[p]) * frame.field1
        self.frame_count += 1
        return self

    def _config_matches(self, other: "CorrelationAccumulator") -> bool:
        return (
            self.grid == other.grid
            and self.probe_index == other.probe_index
            and self.retain_fields == other.retain_fields
        )


def merge(a: CorrelationAccumulator, b: CorrelationAccumulator) -> CorrelationAccumulator:
    """Componentwise sum of two accumulators with identical configuration."""
    if not a._config_matches(b):
        raise GridMismatchError("cannot merge accumulators with different grid/probe/diagnostics")
    out = CorrelationAccumulator.empty(a.grid, a.probe_index, a.retain_fields)
    for name in CorrelationAccumulator._REAL_ARRAYS:
        setattr(out, name, getattr(a, name) + getattr(b, name))
    if a.retain_fields:
        out.csum_s2 = a.csum_s2 + b.csum_s2
        out.csum_s1 = a.csum_s1 + b.csum_s1
    out.frame_count = a.frame_count + b.frame_count
    return out


@dataclass(frozen=True, eq=False)
class G2Slice:
    """Normalized correlation along one scan arm at a fixed probe."""

    positions: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    defined: np.ndarray
    probe: tuple[int, float]
    scan_arm: int
    frame_count: int


def _orientation(acc: CorrelationAccumulator, scan_arm: int):
    if scan_arm == 2:
        return (acc.sum2, acc.sumsq2, acc.sum1, acc.sumsq1,
                acc.cross_s2, acc.crosssq_s2, acc.x2y_s2, acc.xy2_s2, acc.csum_s2, 1)
    if scan_arm == 1:
        return (acc.sum1, acc.sumsq1, acc.sum2, acc.sumsq2,
                acc.cross_s1, acc.crosssq_s1, acc.x2y_s1, acc.xy2_s1, acc.csum_s1, 2)
    raise ValueError(f"scan_arm must be 1 or 2, got {scan_arm}")


def g2_slice(acc: CorrelationAccumulator, scan_arm: int) -> G2Slice:
    """Extract g2 along ``scan_arm`` with delta-method standard errors.

    With fewer than two frames, or a dark probe pixel, every value is
    flagged undefined (NaN) rather than raising.
    """
    (ssum, ssumsq, osum, osumsq, cross, crosssq, x2y, xy2, _, probe_arm) = _orientation(
        acc, scan_arm
    )
    n = acc.frame_count
    npix = acc.grid.samples
    positions = np.array(acc.grid.coordinates)
    probe = (probe_arm, acc.probe_position)
    if n < 2:
        nanarr = np.full(npix, np.nan)
        return G2Slice(positions, nanarr, nanarr.copy(), np.zeros(npix, bool), probe, scan_arm, n)

    mx = ssum / n
    my = osum[acc.probe_index] / n
    floor_scan = UNDEFINED_FLOOR * max(mx.mean(), 0.0)
    floor_probe = UNDEFINED_FLOOR * max(osum.mean() / n, 0.0)
    defined = (mx > floor_scan) & (my > floor_probe)

    with np.errstate(divide="ignore", invalid="ignore"):
        a = cross / n
        g2 = a / (mx * my)
        var_a = (crosssq / n - a**2) / n
        var_b = (ssumsq / n - mx**2) / n
        var_c = (osumsq[acc.probe_index] / n - my**2) / n
        cov_ab = (x2y / n - a * mx) / n
        cov_ac = (xy2 / n - a * my) / n
        cov_bc = (a - mx * my) / n
        rel_var = (
            var_a / a**2
            + var_b / mx**2
            + var_c / my**2
            - 2 * cov_ab / (a * mx)
            - 2 * cov_ac / (a * my)
            + 2 * cov_bc / (mx * my)
        )
        stderr = np.abs(g2) * np.sqrt(np.maximum(rel_var, 0.0))
    g2 = np.where(defined, g2, np.nan)
    stderr = np.where(defined, stderr, np.nan)
    return G2Slice(positions, g2, stderr, defined, probe, scan_arm, n)


@dataclass(frozen=True, eq=False)
class SiegertReport:
    """Per-pixel comparison of (g2 - 1) against the normalized modulus
    squared of the field coherence estimated from the same frames."""

    positions: np.ndarray
    g2_minus_one: np.ndarray
    coherence_sq: np.ndarray
    combined_stderr: np.ndarray
    within: np.ndarray
    defined: np.ndarray
    scan_arm: int
    frame_count: int

    def agreement_fraction(self, mask: np.ndarray | None = None) -> float:
        sel = self.defined if mask is None else (self.defined & mask)
        if not np.any(sel):
            return float("nan")
        return float(np.mean(self.within[sel]))


def siegert_check(
    acc: CorrelationAccumulator, scan_arm: int = 2, sigmas: float = 5.0
) -> SiegertReport:
    """Empirical Siegert decomposition test.

    For circular Gaussian fields <I1 I2> = <I1><I2> + |<E1* E2>|^2, so
    (g2 - 1) must equal |normalized coherence|^2 within statistics. The
    coherence is estimated from the retained complex fields of the same
    ensemble; agreement is flagged within ``sigmas`` combined standard
    errors.
    """
    if not acc.retain_fields:
        raise NumericValidityError(
            "siegert_check requires complex field diagnostics (retain_fields=True)"
        )
    (ssum, _, osum, _, cross, _, _, _, csum, _) = _orientation(acc, scan_arm)
    n = acc.frame_count
    if n < 2:
        raise NumericValidityError("siegert_check needs at least 2 frames")
    sl = g2_slice(acc, scan_arm)
    mx = ssum / n
    my = osum[acc.probe_index] / n
    gamma = csum / n
    with np.errstate(divide="ignore", invalid="ignore"):
        # Var(Re) + Var(Im) of the complex mean; E|Z|^2 is the intensity
        # cross sum since |conj(E_p) E_x|^2 = I_p I_x.
        var_z = np.maximum((cross / n - np.abs(gamma) ** 2) / n, 0.0)
        sigma_numsq = np.sqrt(2.0 * np.abs(gamma) ** 2 * var_z + var_z**2)
        coh = np.abs(gamma) ** 2 / (mx * my)
        sigma_coh = sigma_numsq / (mx * my)
    combined = np.sqrt(sl.stderr**2 + sigma_coh**2)
    g2m1 = sl.values - 1.0
    with np.errstate(invalid="ignore"):
        within = np.abs(g2m1 - coh) <= sigmas * combined
    coh = np.where(sl.defined, coh, np.nan)
    return SiegertReport(
        positions=sl.positions,
        g2_minus_one=g2m1,
        coherence_sq=coh,
        combined_stderr=combined,
        within=within & sl.defined,
        defined=sl.defined,
        scan_arm=scan_arm,
        frame_count=n,
    )
