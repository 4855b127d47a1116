"""
Configuration for wavguard.

Settings live in a sectioned TOML file (config/default.toml); a JSON file
with the same sections is accepted too. Precedence is built-in defaults,
then the file, then command-line flags.
"""

import json
import logging
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Optional, Union

try:
    import tomllib
except ImportError:
    import tomli as tomllib

from .constraint import RhoSchedule
from .envelope import EnvelopeParams
from .lpc import LpcConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path("config") / "default.toml"


class ConfigError(ValueError):
    """Raised for unknown keys or values that violate a module constraint."""


@dataclass(frozen=True)
class Config:
    # [signal]
    sample_rate_hz: int = 22050
    seg_len: int = 4000
    # [envelope]
    peak_window: int = 200
    lpf_cutoff_hz: float = 300.0
    use_hilbert: bool = True
    context_pad: int = 400
    # [lpc]
    lpc_order: int = 16
    lpc_frame_len: int = 512
    lpc_frame_shift: int = 128
    lpc_window: str = "hamming"
    variance_floor: float = 1e-8
    white_noise_correction: float = 0.01
    bandwidth_expansion: float = 0.94
    # [constraint]
    rho_schedule: tuple[float, ...] = (0.01, 0.1, 1.0)
    mask_floor: float = 1e-12
    sigma_floor: float = 1e-4
    # [generator]
    receptive_field: int = 64
    conditioning_dim: int = 8
    hidden_dim: int = 32
    perturb_db: float = -30.0
    # [detector]
    threshold: float = 0.1
    grid_points: int = 200
    # [run]
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "rho_schedule", tuple(float(v) for v in self.rho_schedule))
        self.validate()

    def validate(self):
        """Re-check every owning module's constraints."""
        try:
            if self.sample_rate_hz <= 0:
                raise ValueError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
            if self.seg_len <= 0:
                raise ValueError(f"seg_len must be > 0, got {self.seg_len}")
            self.envelope_params().check_rate(self.sample_rate_hz)
            self.lpc_config()
            self.schedule()
            if not 0 < self.mask_floor < 1.0 / 256:
                raise ValueError(f"mask_floor must lie in (0, 1/256), got {self.mask_floor}")
            if self.sigma_floor <= 0:
                raise ValueError(f"sigma_floor must be > 0, got {self.sigma_floor}")
            if self.receptive_field < self.lpc_order:
                raise ValueError(
                    f"receptive_field {self.receptive_field} must be >= lpc order {self.lpc_order}"
                )
            if self.conditioning_dim < 1 or self.hidden_dim < 1:
                raise ValueError("conditioning_dim and hidden_dim must be >= 1")
            if self.grid_points < 2:
                raise ValueError(f"grid_points must be >= 2, got {self.grid_points}")
            if self.jobs < 1:
                raise ValueError(f"jobs must be >= 1, got {self.jobs}")
            if self.seed < 0:
                raise ValueError(f"seed must be >= 0, got {self.seed}")
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def envelope_params(self) -> EnvelopeParams:
        return EnvelopeParams(
            peak_window=self.peak_window,
            lpf_cutoff_hz=self.lpf_cutoff_hz,
            use_hilbert=self.use_hilbert,
            context_pad=self.context_pad,
        )

    def lpc_config(self) -> LpcConfig:
        return LpcConfig(
            order=self.lpc_order,
            frame_len=self.lpc_frame_len,
            frame_shift=self.lpc_frame_shift,
            window=self.lpc_window,
            variance_floor=self.variance_floor,
            white_noise_correction=self.white_noise_correction,
            bandwidth_expansion=self.bandwidth_expansion,
        )

    def schedule(self) -> RhoSchedule:
        return RhoSchedule(self.rho_schedule)

    def with_overrides(self, **overrides: Any) -> "Config":
        """Copy with the non-None overrides applied (flags win over the file)."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(changes) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"Unknown config field(s): {', '.join(sorted(unknown))}")
        try:
            return replace(self, **changes)
        except TypeError as e:
            raise ConfigError(str(e)) from e

    def to_sections(self) -> dict[str, dict[str, Any]]:
        values = asdict(self)
        sections: dict[str, dict[str, Any]] = {}
        for section, keys in SECTIONS.items():
            sections[section] = {}
            for key, name in keys.items():
                value = values[name]
                if isinstance(value, tuple):
                    value = list(value)
                elif isinstance(value, float) and value in (float("inf"), float("-inf")):
                    value = str(value)
                sections[section][key] = value
        return sections


# file section -> {file key: Config field}
SECTIONS: dict[str, dict[str, str]] = {
    "signal": {"sample_rate_hz": "sample_rate_hz", "seg_len": "seg_len"},
    "envelope": {
        "peak_window": "peak_window",
        "lpf_cutoff_hz": "lpf_cutoff_hz",
        "use_hilbert": "use_hilbert",
        "context_pad": "context_pad",
    },
    "lpc": {
        "order": "lpc_order",
        "frame_len": "lpc_frame_len",
        "frame_shift": "lpc_frame_shift",
        "window": "lpc_window",
        "variance_floor": "variance_floor",
        "white_noise_correction": "white_noise_correction",
        "bandwidth_expansion": "bandwidth_expansion",
    },
    "constraint": {"rho_schedule": "rho_schedule", "mask_floor": "mask_floor", "sigma_floor": "sigma_floor"},
    "generator": {
        "receptive_field": "receptive_field",
        "conditioning_dim": "conditioning_dim",
        "hidden_dim": "hidden_dim",
        "perturb_db": "perturb_db",
    },
    "detector": {"threshold": "threshold", "grid_points": "grid_points"},
    "run": {"seed": "seed", "jobs": "jobs"},
}


def _coerce(name: str, value: Any) -> Any:
    default = getattr(Config, name, None)
    try:
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise TypeError(f"expected true/false, got {value!r}")
            return value
        if isinstance(default, int):
            if isinstance(value, bool) or int(value) != value:
                raise TypeError(f"expected an integer, got {value!r}")
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, tuple):
            return tuple(float(v) for v in value)
        return str(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid value for {name}: {e}") from e


def config_from_sections(data: dict[str, Any], base: Optional[Config] = None) -> Config:
    """Merge sectioned settings over `base` (or the defaults)."""
    changes: dict[str, Any] = {}
    for section, values in data.items():
        if section not in SECTIONS:
            raise ConfigError(f"Unknown config section [{section}]")
        if not isinstance(values, dict):
            raise ConfigError(f"Config section [{section}] must be a table")
        for key, value in values.items():
            if key not in SECTIONS[section]:
                raise ConfigError(f"Unknown key {key!r} in section [{section}]")
            name = SECTIONS[section][key]
            changes[name] = _coerce(name, value)
    return replace(base or Config(), **changes)


def load_config(path: Optional[Union[str, Path]] = None) -> Config:
    """
    Load a config file; a missing file yields the defaults.

    Unknown sections or keys and constraint violations raise ConfigError.
    """
    if path is None:
        return Config()
    path = Path(path)
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(path.read_text())
        else:
            with open(path, "rb") as f:
                data = tomllib.load(f)
    except FileNotFoundError:
        logger.warning(f"Config file {path} not found, using defaults")
        return Config()
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"{path}: {e}") from e

    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a table of sections")
    config = config_from_sections(data)
    logger.debug(f"Loaded config from {path}")
    return config


def write_config(config: Config, path: Union[str, Path]) -> Path:
    """Write `config` as a sectioned JSON file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(config.to_sections(), indent=2) + "\n")
    return path
