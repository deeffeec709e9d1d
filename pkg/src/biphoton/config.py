"""Scenario files: flat ``key = value`` text with dotted section prefixes.

Grammar (one entry per line)::

    # comment            (also allowed after a value, preceded by whitespace)
    crystal.kind = type2
    crystal.length = 0.4 mm
    arm.1.k2 = 3.2e-28 s2/cm

Numbers take an optional unit after whitespace; without a unit the value is
read as SI.  Unknown keys, duplicate keys and malformed lines are errors.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .detection import DetectorSpec, McaConfig
from .fitting import FreeParameter
from .grids import FrequencyGrid, TimeGrid, make_grid, make_time_grid
from .propagation import DispersionBudget, auto_grids, check_sampling
from .spectral import CrystalKind, CrystalSpec, FilterShape, FilterSpec

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "parse_config", "parse_quantity",
           "OUTPUT_KINDS"]

OUTPUT_KINDS = ("spectrum", "g1", "g2", "g2_farfield", "smeared", "histogram")

_UNITS = {
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12, "fs": 1e-15},
    "length": {"m": 1.0, "km": 1e3, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "inverse_velocity": {"s/m": 1.0, "ps/m": 1e-12, "ps/cm": 1e-10, "ps/mm": 1e-9,
                         "fs/mm": 1e-12, "fs/um": 1e-9},
    "gvd": {"s2/m": 1.0, "s2/cm": 1e2, "s2/mm": 1e3, "ps2/km": 1e-27, "ps2/m": 1e-24,
            "fs2/mm": 1e-27, "fs2/cm": 1e-28},
    "budget": {"s2": 1.0, "ps2": 1e-24, "fs2": 1e-30},
    "angular_frequency": {"rad/s": 1.0, "1/s": 1.0},
    "count": {},
}

_LINE = re.compile(r"^\s*([A-Za-z0-9_.]+)\s*=\s*(.*?)\s*$")
_ARM_KEY = re.compile(r"^arm\.([1-9][0-9]*)\.(k2|z)$")

_QUANTITY_KEYS = {
    "crystal.length": "length",
    "crystal.D": "inverse_velocity",
    "crystal.D2": "gvd",
    "filter.fwhm": "length",
    "filter.center": "length",
    "filter.offset": "angular_frequency",
    "detector.resolution": "time",
    "detector.jitter_start": "time",
    "detector.jitter_stop": "time",
    "mca.bin_width": "time",
    "mca.t_center": "time",
    "mca.background_per_bin": "count",
    "grid.omega_max": "angular_frequency",
    "grid.tau_max": "time",
}
_INT_KEYS = {"mca.n_bins", "mca.n_pairs", "mca.seed", "grid.n_omega", "grid.n_tau"}
_TEXT_KEYS = {"scenario.name", "scenario.description", "crystal.kind", "filter.shape",
              "grid.mode", "outputs", "fit.free"}


class ConfigError(ValueError):
    def __init__(self, message: str, source: str = "<config>", line: int | None = None,
                 key: str | None = None):
        where = source if line is None else f"{source}:{line}"
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.key = key


def parse_quantity(text: str, dimension: str) -> float:
    """``'1.5 ps/cm'`` -> 1.5e-10 for dimension ``'inverse_velocity'``."""
    parts = text.split()
    if not parts or len(parts) > 2:
        raise ValueError(f"expected '<number> [unit]', got {text!r}")
    try:
        number = float(parts[0])
    except ValueError:
        raise ValueError(f"not a number: {parts[0]!r}") from None
    if not math.isfinite(number):
        raise ValueError(f"non-finite value {parts[0]!r}")
    if len(parts) == 1:
        return number
    unit = parts[1].replace("^", "").replace("²", "2").replace("µ", "u")
    table = _UNITS[dimension]
    if unit not in table:
        known = ", ".join(table) or "none"
        raise ValueError(f"unknown unit {parts[1]!r} for {dimension} (known: {known})")
    return number * table[unit]


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    name: str
    crystal: CrystalSpec
    budget: DispersionBudget
    filter: FilterSpec | None
    detector: DetectorSpec
    mca: McaConfig
    grid_mode: str
    grids: tuple
    outputs: tuple
    free_parameter: FreeParameter = FreeParameter.TOTAL_B
    description: str = ""
    source: str = "<config>"
    entries: dict = field(default_factory=dict)

    @property
    def arm_lengths(self) -> tuple:
        return tuple(z for _, z in self.budget.arms)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        mca = McaConfig(self.mca.bin_width, self.mca.n_bins, self.mca.t_center,
                        self.mca.n_pairs, self.mca.background_per_bin, seed)
        return ScenarioConfig(self.name, self.crystal, self.budget, self.filter, self.detector,
                              mca, self.grid_mode, self.grids, self.outputs,
                              self.free_parameter, self.description, self.source, self.entries)


def _tokenize(text: str, source: str):
    entries, lines = {}, {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        body = re.split(r"\s#", raw, maxsplit=1)[0]
        m = _LINE.match(body)
        if not m:
            raise ConfigError("expected 'key = value'", source, line_no)
        key, value = m.groups()
        if not value:
            raise ConfigError("missing value", source, line_no, key)
        if key in entries:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", source,
                              line_no, key)
        entries[key] = value
        lines[key] = line_no
    return entries, lines


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    entries, lines = _tokenize(text, source)

    def fail(key, message):
        raise ConfigError(message, source, lines.get(key), key)

    values = {}
    arms: dict[int, dict[str, float]] = {}
    for key, raw in entries.items():
        arm = _ARM_KEY.match(key)
        try:
            if arm:
                dim = "gvd" if arm.group(2) == "k2" else "length"
                arms.setdefault(int(arm.group(1)), {})[arm.group(2)] = parse_quantity(raw, dim)
            elif key in _QUANTITY_KEYS:
                values[key] = parse_quantity(raw, _QUANTITY_KEYS[key])
            elif key in _INT_KEYS:
                number = float(raw)
                if not math.isfinite(number) or number != int(number):
                    raise ValueError(f"expected an integer, got {raw!r}")
                values[key] = int(number)
            elif key in _TEXT_KEYS:
                values[key] = raw
            else:
                fail(key, "unknown key")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            fail(key, str(exc))

    def need(key):
        if key not in values:
            raise ConfigError("required key is missing", source, None, key)
        return values[key]

    # crystal
    kind_text = need("crystal.kind").lower()
    kinds = {"type2": CrystalKind.TYPE_II, "type1": CrystalKind.TYPE_I_DEGENERATE}
    if kind_text not in kinds:
        fail("crystal.kind", f"expected type2 or type1, got {kind_text!r}")
    try:
        crystal = CrystalSpec(kinds[kind_text], need("crystal.length"),
                              D=values.get("crystal.D"), D2=values.get("crystal.D2"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        fail("crystal.kind", str(exc))

    # dispersion arms
    arm_list = []
    for index in sorted(arms):
        arm = arms[index]
        for part in ("k2", "z"):
            if part not in arm:
                raise ConfigError("arm needs both k2 and z", source, None, f"arm.{index}.{part}")
        arm_list.append((arm["k2"], arm["z"]))
    try:
        budget = DispersionBudget(tuple(arm_list))
    except ValueError as exc:
        raise ConfigError(str(exc), source, None, "arm") from None

    # filter
    filt = None
    if any(k.startswith("filter.") for k in values):
        shape_text = values.get("filter.shape", "gaussian").lower()
        shapes = {s.value: s for s in FilterShape}
        if shape_text not in shapes:
            fail("filter.shape", f"expected gaussian or rectangular, got {shape_text!r}")
        try:
            filt = FilterSpec(shapes[shape_text], need("filter.fwhm"), need("filter.center"),
                              values.get("filter.offset", 0.0))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            fail("filter.fwhm", str(exc))

    # detectors
    if "detector.resolution" in values:
        if "detector.jitter_start" in values or "detector.jitter_stop" in values:
            fail("detector.resolution", "give either resolution or per-detector jitters")
        if values["detector.resolution"] < 0:
            fail("detector.resolution", "must be non-negative")
        detector = DetectorSpec.from_combined(values["detector.resolution"])
    else:
        try:
            detector = DetectorSpec(values.get("detector.jitter_start", 0.0),
                                    values.get("detector.jitter_stop", 0.0))
        except ValueError as exc:
            fail("detector.jitter_start", str(exc))

    # MCA
    bin_width = values.get("mca.bin_width", 50e-12)
    n_bins = values.get("mca.n_bins", 1024)
    try:
        mca = McaConfig(bin_width, n_bins, values.get("mca.t_center", 0.5 * n_bins * bin_width),
                        values.get("mca.n_pairs", 100_000),
                        values.get("mca.background_per_bin", 0.0), values.get("mca.seed", 0))
    except ValueError as exc:
        fail("mca.bin_width", str(exc))

    # outputs
    outputs = tuple(o.strip() for o in values.get("outputs", "g2,smeared,histogram").split(",")
                    if o.strip())
    for out in outputs:
        if out not in OUTPUT_KINDS:
            fail("outputs", f"unknown output {out!r} (known: {', '.join(OUTPUT_KINDS)})")
    if "g2_farfield" in outputs and budget.total_B == 0:
        fail("outputs", "g2_farfield needs a non-zero dispersion budget")

    free_text = values.get("fit.free", "total_B")
    frees = {f.value: f for f in FreeParameter}
    if free_text not in frees:
        fail("fit.free", f"expected total_B or D2, got {free_text!r}")

    # grids
    mode = values.get("grid.mode", "auto").lower()
    manual_keys = ("grid.omega_max", "grid.n_omega", "grid.tau_max", "grid.n_tau")
    if mode == "auto":
        for key in manual_keys:
            if key in values:
                fail(key, "only allowed with grid.mode = manual")
        grids = auto_grids(crystal, budget.total_B, filt, detector.combined_fwhm)
    elif mode == "manual":
        try:
            fgrid = make_grid(need("grid.omega_max"), need("grid.n_omega"))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            fail("grid.n_omega", str(exc))
        try:
            tgrid = make_time_grid(need("grid.tau_max"), need("grid.n_tau"))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            fail("grid.n_tau", str(exc))
        try:
            check_sampling(budget.total_B, fgrid)
        except ValueError as exc:
            fail("grid.n_omega", str(exc))
        jitter = detector.combined_fwhm
        if jitter > 0 and tgrid.spacing > jitter / 10:
            fail("grid.n_tau", f"delay step must be <= {jitter / 10:.3g} s for the "
                               "detector response")
        grids = (fgrid, tgrid)
    else:
        fail("grid.mode", f"expected auto or manual, got {mode!r}")

    return ScenarioConfig(
        name=values.get("scenario.name", Path(source).stem),
        crystal=crystal,
        budget=budget,
        filter=filt,
        detector=detector,
        mca=mca,
        grid_mode=mode,
        grids=grids,
        outputs=outputs,
        free_parameter=frees[free_text],
        description=values.get("scenario.description", ""),
        source=source,
        entries=dict(entries),
    )


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read file: {exc.strerror}", str(path)) from None
    return parse_config(text, str(path))
