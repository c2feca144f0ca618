"""Flat key=value run configuration.

Keys carry explicit SI units in their names (meters unless stated).
Unknown keys are rejected; mandatory keys must be present; everything
else falls back to the documented default. Lines starting with '#' and
blank lines are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .analytic import SourceSpec
from .core import (
    ApertureProfile,
    ApertureShape,
    DoubleSlitSpec,
    ExperimentLayout,
    SpatialGrid,
    canonical_aperture_pair,
)
from .engine import Scenario
from .errors import ConfigError, InputDataError

__all__ = ["RunConfig", "parse_config_text", "load_config", "DEFAULT_CONFIG_TEXT"]


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


_REQUIRED = object()

# key -> (python type, default or _REQUIRED)
_KEY_TABLE: dict[str, tuple[type, object]] = {
    "wavelength_m": (float, _REQUIRED),
    "source_to_bs_m": (float, _REQUIRED),
    "bs_to_aperture1_m": (float, _REQUIRED),
    "bs_to_aperture2_m": (float, _REQUIRED),
    "bs_to_detector1_m": (float, _REQUIRED),
    "bs_to_detector2_m": (float, _REQUIRED),
    "slit_width_m": (float, _REQUIRED),
    "slit_separation_m": (float, _REQUIRED),
    "grid_window_m": (float, _REQUIRED),
    "grid_samples": (int, _REQUIRED),
    "frames": (int, _REQUIRED),
    "master_seed": (int, _REQUIRED),
    "aperture_model": (str, "canonical"),
    "outer_support_m": (float, 920e-6),
    "aperture1_file": (str, ""),
    "aperture2_file": (str, ""),
    "source_strength": (float, 1.0),
    "source_correlation_length_m": (float, 15e-6),
    "source_envelope_width_m": (float, 30e-3),
    "probe_arm": (int, 1),
    "probe_position_m": (float, 0.0),
    "workers": (int, 1),
    "retain_fields": (bool, False),
    "output_dir": (str, "."),
    "emit_csv": (bool, True),
    "emit_svg": (bool, True),
    "emit_json": (bool, True),
}


@dataclass
class RunConfig:
    wavelength_m: float
    source_to_bs_m: float
    bs_to_aperture1_m: float
    bs_to_aperture2_m: float
    bs_to_detector1_m: float
    bs_to_detector2_m: float
    slit_width_m: float
    slit_separation_m: float
    grid_window_m: float
    grid_samples: int
    frames: int
    master_seed: int
    aperture_model: str = "canonical"
    outer_support_m: float = 920e-6
    aperture1_file: str = ""
    aperture2_file: str = ""
    source_strength: float = 1.0
    source_correlation_length_m: float = 15e-6
    source_envelope_width_m: float = 30e-3
    probe_arm: int = 1
    probe_position_m: float = 0.0
    workers: int = 1
    retain_fields: bool = False
    output_dir: str = "."
    emit_csv: bool = True
    emit_svg: bool = True
    emit_json: bool = True

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    # -- builders ---------------------------------------------------------

    def layout(self) -> ExperimentLayout:
        try:
            return ExperimentLayout(
                wavelength=self.wavelength_m,
                source_to_bs=self.source_to_bs_m,
                bs_to_aperture=(self.bs_to_aperture1_m, self.bs_to_aperture2_m),
                bs_to_detector=(self.bs_to_detector1_m, self.bs_to_detector2_m),
            )
        except ValueError as exc:
            raise ConfigError(f"invalid layout: {exc}") from exc

    def slit(self) -> DoubleSlitSpec:
        try:
            return DoubleSlitSpec(self.slit_width_m, self.slit_separation_m)
        except ValueError as exc:
            raise ConfigError(f"invalid slit spec: {exc}") from exc

    def grid(self) -> SpatialGrid:
        try:
            return SpatialGrid(self.grid_window_m, self.grid_samples)
        except ValueError as exc:
            raise ConfigError(f"invalid grid: {exc}") from exc

    def source(self) -> SourceSpec:
        try:
            return SourceSpec(
                strength=self.source_strength,
                correlation_length=self.source_correlation_length_m,
                envelope_width=self.source_envelope_width_m,
            )
        except ValueError as exc:
            raise ConfigError(f"invalid source spec: {exc}") from exc

    def apertures(self) -> tuple[ApertureProfile, ApertureProfile]:
        if self.aperture_model == "canonical":
            return canonical_aperture_pair(self.slit(), self.outer_support_m, self.grid())
        if self.aperture_model == "files":
            if not self.aperture1_file or not self.aperture2_file:
                raise ConfigError(
                    "aperture_model=files requires aperture1_file and aperture2_file"
                )
            return (
                load_aperture_csv(Path(self.aperture1_file), self.grid()),
                load_aperture_csv(Path(self.aperture2_file), self.grid()),
            )
        raise ConfigError(
            f"aperture_model must be 'canonical' or 'files', got {self.aperture_model!r}"
        )

    def scenario(self) -> Scenario:
        if self.probe_arm not in (1, 2):
            raise ConfigError(f"probe_arm must be 1 or 2, got {self.probe_arm}")
        if self.frames < 1:
            raise ConfigError("frames must be >= 1")
        return Scenario(
            layout=self.layout(),
            apertures=self.apertures(),
            source=self.source(),
            grid=self.grid(),
            frames=self.frames,
            master_seed=self.master_seed,
            fixed_probe=(self.probe_arm, self.probe_position_m),
            retain_fields=self.retain_fields,
        )


def parse_config_text(text: str, origin: str = "<config>") -> RunConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _KEY_TABLE:
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{origin}:{lineno}: duplicate key {key!r}")
        raw[key] = value

    values: dict[str, object] = {}
    missing = []
    for key, (typ, default) in _KEY_TABLE.items():
        if key in raw:
            try:
                values[key] = _parse_bool(raw[key]) if typ is bool else typ(raw[key])
            except ValueError as exc:
                raise ConfigError(f"{origin}: key {key!r}: {exc}") from exc
        elif default is _REQUIRED:
            missing.append(key)
        else:
            values[key] = default
    if missing:
        raise ConfigError(f"{origin}: missing mandatory key(s): {', '.join(missing)}")
    return RunConfig(**values)  # type: ignore[arg-type]


def load_config(path: Path | str) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, origin=str(path))


def load_aperture_csv(path: Path, grid: SpatialGrid) -> ApertureProfile:
    """Explicit transmission samples: CSV with header ``x_m,transmission``
    whose coordinates must match the run grid."""
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise InputDataError(f"cannot read aperture file {path}: {exc}") from exc
    if not lines or lines[0].strip() != "x_m,transmission":
        raise InputDataError(f"{path}: expected header 'x_m,transmission'")
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != grid.samples:
        raise InputDataError(
            f"{path}: {len(body)} rows but the grid has {grid.samples} samples"
        )
    xs = np.empty(grid.samples)
    ts = np.empty(grid.samples)
    for i, ln in enumerate(body):
        parts = ln.split(",")
        if len(parts) != 2:
            raise InputDataError(f"{path}: line {i + 2}: expected 2 columns")
        try:
            xs[i], ts[i] = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise InputDataError(f"{path}: line {i + 2}: {exc}") from exc
    if not np.allclose(xs, grid.coordinates, atol=grid.spacing * 1e-6):
        raise InputDataError(f"{path}: sample coordinates do not match the run grid")
    return ApertureProfile(grid, ts, ApertureShape("custom"))


DEFAULT_CONFIG_TEXT = """\
# Bench defaults: 660 nm pseudothermal source, apertures 4.7 cm and
# detectors 85.3 cm behind the beamsplitter, slit-plus-wire aperture pair
# whose product is a 250 um double slit with 670 um center separation.
wavelength_m = 660e-9
source_to_bs_m = 0.034
bs_to_aperture1_m = 0.047
bs_to_aperture2_m = 0.047
bs_to_detector1_m = 0.853
bs_to_detector2_m = 0.853
slit_width_m = 250e-6
slit_separation_m = 670e-6
aperture_model = canonical
outer_support_m = 920e-6
source_strength = 1.0
source_correlation_length_m = 15e-6
source_envelope_width_m = 30e-3
grid_window_m = 50e-3
grid_samples = 8192
frames = 5000
master_seed = 12345
probe_arm = 1
probe_position_m = 0.0
workers = 1
retain_fields = false
output_dir = .
emit_csv = true
emit_svg = true
emit_json = true
"""
