"""
Shared data models for the Yang-Mills workbench.

Enums for orderings, gauge algebras and subcommands, the run configuration
record, and the exception hierarchy used across the numerical modules.
"""
from dataclasses import dataclass, field, asdict
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple


class OrderingTag(str, Enum):
    """Operator orderings a polynomial symbol can be quantized in."""
    NORMAL = "normal"
    WEYL = "weyl"
    ANTINORMAL = "antinormal"


class AlgebraName(str, Enum):
    """Gauge algebras the pipeline knows how to build."""
    SU2 = "su2"
    SU3 = "su3"
    ABELIAN = "abelian"


class EnergyForm(str, Enum):
    """Which form of the energy-mass functional to assemble."""
    NOETHER = "noether"
    REDUCED = "reduced"


class InitialData(str, Enum):
    """Initial Cauchy data families for the evolve subcommand."""
    PLANE_WAVE = "plane_wave"
    RANDOM = "random"


class Subcommand(str, Enum):
    """Batch experiments exposed on the command line."""
    SPECTRUM = "spectrum"
    SCALING = "scaling"
    CONVERGE = "converge"
    ELLIPTICITY = "ellipticity"
    EVOLVE = "evolve"
    SYMBOLS = "symbols"

    def required_keys(self) -> List[str]:
        """
        Config keys that must be given explicitly for this subcommand.

        Returns:
            List of key names, in the order they are reported when missing
        """
        return list(REQUIRED_KEYS[self])


REQUIRED_KEYS: Dict[Subcommand, Tuple[str, ...]] = {
    Subcommand.SPECTRUM: ("algebra", "L", "kmax", "D", "k_eigs"),
    Subcommand.SCALING: ("algebra", "kmax", "D", "k_eigs", "L_list"),
    Subcommand.CONVERGE: ("algebra", "L", "kmax", "k_eigs", "D_list"),
    Subcommand.ELLIPTICITY: ("algebra", "L", "kmax", "D"),
    Subcommand.EVOLVE: ("algebra", "L", "N", "dt", "t_end"),
    Subcommand.SYMBOLS: (),
}


class YmgapError(Exception):
    """Base class for every error raised by the workbench."""


class ConfigError(YmgapError, ValueError):
    """Invalid or incomplete run configuration (usage error)."""


class TruncationError(YmgapError, ValueError):
    """A degree truncation is too coarse for the requested accuracy."""


class SolverError(YmgapError, RuntimeError):
    """
    Eigensolver failed to converge.

    Attributes:
        residual: Largest residual norm achieved before giving up
    """

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class NonFiniteStateError(YmgapError, FloatingPointError):
    """Time integration produced NaN or Inf values."""


@dataclass
class RunConfig:
    """
    Fully resolved configuration of one batch run.

    Values come from defaults, then a config file, then command-line
    overrides. Lists are stored parsed.
    """
    subcommand: Subcommand
    algebra: AlgebraName = AlgebraName.SU2
    L: float = 1.0
    kmax: int = 0
    D: int = 4
    k_eigs: int = 6
    form: EnergyForm = EnergyForm.NOETHER
    N: int = 16
    dt: float = 1e-3
    t_end: float = 1.0
    seed: int = 0
    amplitude: float = 0.1
    initial: InitialData = InitialData.PLANE_WAVE
    record_every: int = 10
    L_list: List[float] = field(default_factory=list)
    D_list: List[int] = field(default_factory=list)
    subsets: List[List[int]] = field(default_factory=list)
    modes: Optional[List[int]] = None
    dense_threshold: int = 1500
    out: Path = Path("runs")
    run_id: Optional[str] = None

    def __post_init__(self):
        """Validate value ranges after construction."""
        if self.L <= 0:
            raise ConfigError(f"L must be positive, got {self.L}")
        if self.kmax < 0:
            raise ConfigError(f"kmax must be nonnegative, got {self.kmax}")
        if self.D < 0:
            raise ConfigError(f"D must be nonnegative, got {self.D}")
        if self.k_eigs < 1:
            raise ConfigError(f"k_eigs must be at least 1, got {self.k_eigs}")
        if self.N < 4:
            raise ConfigError(f"N must be at least 4, got {self.N}")
        if self.dt <= 0 or self.t_end <= 0:
            raise ConfigError(f"dt and t_end must be positive, got dt={self.dt}, t_end={self.t_end}")
        if self.record_every < 1:
            raise ConfigError(f"record_every must be at least 1, got {self.record_every}")
        if any(value <= 0 for value in self.L_list):
            raise ConfigError(f"L_list entries must be positive, got {self.L_list}")
        if any(value < 0 for value in self.D_list):
            raise ConfigError(f"D_list entries must be nonnegative, got {self.D_list}")

    def to_flat_dict(self) -> Dict[str, object]:
        """
        Render the config as JSON-friendly scalars and lists.

        Returns:
            Dictionary keyed by config key, enums replaced by their values
        """
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, Enum):
                data[key] = value.value
            elif isinstance(value, Path):
                data[key] = str(value)
        return data
