"""
Monte Carlo experiment configuration

Experiments are described in TOML files. Keys may be written as tables
(`[graph]` then `m = 50`) or dotted (`graph.m = 50`); both flatten to
the same dotted names listed in KNOWN_KEYS.
"""
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from ..config import Config
from ..utils.errors import ConfigError
from .results import EdgePolicy, NodePolicy, parse_policy

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

GENERATORS = ('watts-strogatz', 'erdos-renyi')
MODELS = ('relative', 'masked')
SWEEP_VARS = ('inv_sigma2', 'm', 'd')

KNOWN_KEYS = (
    'graph.source', 'graph.m', 'graph.degree', 'graph.p', 'graph.rewire',
    'graph.weight_low', 'graph.weight_high',
    'model',
    'noise.sigma2', 'noise.csv', 'noise.generators',
    'policies',
    'sweep.var', 'sweep.grid',
    'trials', 'seed',
    'band.r', 'band.d', 'band.d_fraction',
    'signal.csv',
)


def _flatten(table: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat = {}
    for key, value in table.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def _number(flat: Dict[str, Any], key: str, kind, default=None):
    if key not in flat:
        return default
    value = flat[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", key=key)
    if kind is int and float(value) != int(value):
        raise ConfigError(f"expected an integer, got {value!r}", key=key)
    return kind(value)


def _string(flat: Dict[str, Any], key: str, default=None) -> Optional[str]:
    if key not in flat:
        return default
    value = flat[key]
    if not isinstance(value, str) or not value.strip():
        raise ConfigError(f"expected a non-empty string, got {value!r}", key=key)
    return value.strip()


def _list(flat: Dict[str, Any], key: str) -> Tuple:
    if key not in flat:
        return ()
    value = flat[key]
    if isinstance(value, (str, int, float)):
        value = [value]
    if not isinstance(value, list):
        raise ConfigError(f"expected a list, got {value!r}", key=key)
    return tuple(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo experiment: graph, model, noise, policies and sweep

    Node indices (noise.generators) are converted to 0-based here;
    relative paths resolve against base_dir.
    """

    model: str
    policies: Tuple[str, ...]
    sweep_var: str
    grid: Tuple[float, ...]
    trials: int
    seed: int
    graph_source: str = 'watts-strogatz'
    graph_m: Optional[int] = None
    graph_degree: int = 4
    graph_p: float = 0.1
    graph_rewire: float = Config.DEFAULT_REWIRE_PROB
    weight_low: Optional[float] = None
    weight_high: Optional[float] = None
    sigma2: float = 1.0
    noise_csv: Optional[str] = None
    generators: Tuple[int, ...] = ()
    band_r: Optional[int] = None
    band_d: Optional[int] = None
    d_fraction: Optional[float] = None
    signal_csv: Optional[str] = None
    base_dir: Path = field(default=Path('.'), compare=False)

    # ------------------------------------------------------------ parsing

    @classmethod
    def from_dict(cls, table: Dict[str, Any], base_dir: Optional[Path] = None) -> 'ExperimentConfig':
        """
        Build from a parsed TOML document

        Raises:
            ConfigError: unknown key, wrong type or inconsistent settings
        """
        flat = _flatten(table)
        for key in flat:
            if key not in KNOWN_KEYS:
                raise ConfigError("unknown configuration key", key=key)
        for key in ('model', 'policies', 'sweep.var', 'sweep.grid', 'trials', 'seed'):
            if key not in flat:
                raise ConfigError("required key is missing", key=key)

        grid = []
        for value in _list(flat, 'sweep.grid'):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"grid values must be numbers, got {value!r}", key='sweep.grid')
            grid.append(float(value))

        policies = []
        for name in _list(flat, 'policies'):
            if not isinstance(name, str):
                raise ConfigError(f"policy names must be strings, got {name!r}", key='policies')
            policies.append(parse_policy(name).value)

        generators = []
        for node in _list(flat, 'noise.generators'):
            if isinstance(node, bool) or not isinstance(node, int) or node < 1:
                raise ConfigError(f"generator buses are 1-based integers, got {node!r}", key='noise.generators')
            generators.append(node - 1)

        cfg = cls(
            model=_string(flat, 'model').lower(),
            policies=tuple(policies),
            sweep_var=_string(flat, 'sweep.var').lower(),
            grid=tuple(grid),
            trials=_number(flat, 'trials', int),
            seed=_number(flat, 'seed', int),
            graph_source=_string(flat, 'graph.source', 'watts-strogatz'),
            graph_m=_number(flat, 'graph.m', int),
            graph_degree=_number(flat, 'graph.degree', int, 4),
            graph_p=_number(flat, 'graph.p', float, 0.1),
            graph_rewire=_number(flat, 'graph.rewire', float, Config.DEFAULT_REWIRE_PROB),
            weight_low=_number(flat, 'graph.weight_low', float),
            weight_high=_number(flat, 'graph.weight_high', float),
            sigma2=_number(flat, 'noise.sigma2', float, 1.0),
            noise_csv=_string(flat, 'noise.csv'),
            generators=tuple(sorted(set(generators))),
            band_r=_number(flat, 'band.r', int),
            band_d=_number(flat, 'band.d', int),
            d_fraction=_number(flat, 'band.d_fraction', float),
            signal_csv=_string(flat, 'signal.csv'),
            base_dir=base_dir or Path('.'),
        )
        is_valid, error = cfg.validate()
        if not is_valid:
            key, _, message = error.partition(': ')
            raise ConfigError(message, key=key)
        return cfg

    @classmethod
    def from_toml(cls, path) -> 'ExperimentConfig':
        """Load and validate a TOML experiment file"""
        path = Path(path)
        try:
            with open(path, 'rb') as f:
                table = tomllib.load(f)
        except FileNotFoundError as e:
            raise ConfigError(f"config file not found: {path}") from e
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from e
        return cls.from_dict(table, base_dir=path.parent)

    # --------------------------------------------------------- validation

    def validate(self) -> Tuple[bool, Optional[str]]:
        """
        Check cross-key consistency

        Returns:
            Tuple of (is_valid, error_message); messages start with the key
        """
        if self.model not in MODELS:
            return False, f"model: must be one of {', '.join(MODELS)}"
        if self.sweep_var not in SWEEP_VARS:
            return False, f"sweep.var: must be one of {', '.join(SWEEP_VARS)}"
        if not self.grid:
            return False, "sweep.grid: grid must not be empty"
        if self.trials < 1:
            return False, "trials: at least one trial is required"
        if not self.policies:
            return False, "policies: at least one policy is required"

        edge_names = {p.value for p in EdgePolicy}
        node_names = {p.value for p in NodePolicy}
        wanted = edge_names if self.model == 'relative' else node_names
        for name in self.policies:
            if name not in wanted:
                return False, f"policies: '{name}' does not apply to the {self.model} model"

        if self.is_generated:
            if self.sweep_var != 'm' and (self.graph_m is None or self.graph_m < 2):
                return False, "graph.m: generated graphs need at least 2 vertices"
            if self.graph_source.lower() == 'watts-strogatz':
                if self.graph_degree < 2 or self.graph_degree % 2:
                    return False, "graph.degree: mean degree must be even and at least 2"
                if not 0.0 <= self.graph_rewire <= 1.0:
                    return False, "graph.rewire: rewiring probability must lie in [0, 1]"
            elif not 0.0 < self.graph_p <= 1.0:
                return False, "graph.p: edge probability must lie in (0, 1]"
        elif self.sweep_var == 'm':
            return False, "sweep.var: network-size sweeps need a generated graph"
        elif self.weight_low is not None:
            return False, "graph.weight_low: weights of a CSV graph come from the file"

        if (self.weight_low is None) != (self.weight_high is None):
            return False, "graph.weight_low: set both weight bounds or neither"
        if self.weight_low is not None and not 0.0 < self.weight_low <= self.weight_high:
            return False, "graph.weight_low: need 0 < weight_low <= weight_high"

        if self.sweep_var == 'inv_sigma2':
            if any(v <= 0 for v in self.grid):
                return False, "sweep.grid: inverse noise variances must be positive"
        elif self.sweep_var == 'm':
            if any(v < 2 or v != int(v) for v in self.grid):
                return False, "sweep.grid: network sizes must be integers of at least 2"
        elif any(v < 1 or v != int(v) for v in self.grid):
            return False, "sweep.grid: sensor budgets must be positive integers"

        if self.model == 'relative':
            if self.sigma2 < 0:
                return False, "noise.sigma2: variance must be nonnegative"
            for key, value in (('noise.csv', self.noise_csv), ('band.r', self.band_r),
                               ('band.d', self.band_d), ('band.d_fraction', self.d_fraction),
                               ('signal.csv', self.signal_csv)):
                if value is not None:
                    return False, f"{key}: only used by the masked model"
            if self.generators:
                return False, "noise.generators: only used by the masked model"
            if self.sweep_var == 'd':
                return False, "sweep.var: budget sweeps need the masked model"
            return True, None

        if self.sigma2 <= 0:
            return False, "noise.sigma2: variance must be positive for the masked model"
        if self.noise_csv is not None and self.generators:
            return False, "noise.generators: cannot be combined with noise.csv"
        if self.band_r is None or self.band_r < 1:
            return False, "band.r: a positive band size is required"
        if self.sweep_var != 'd':
            if self.band_d is None and self.d_fraction is None:
                return False, "band.d: set band.d or band.d_fraction"
            if self.band_d is not None and self.d_fraction is not None:
                return False, "band.d_fraction: cannot be combined with band.d"
            if self.d_fraction is not None and not 0.0 < self.d_fraction <= 1.0:
                return False, "band.d_fraction: fraction must lie in (0, 1]"
        if self.sweep_var == 'm' and (self.noise_csv is not None or self.signal_csv is not None):
            return False, "sweep.var: per-node files cannot follow a network-size sweep"
        return True, None

    # ---------------------------------------------------------- accessors

    @property
    def is_generated(self) -> bool:
        return self.graph_source.lower() in GENERATORS

    def resolve(self, relative: str) -> Path:
        path = Path(relative)
        return path if path.is_absolute() else self.base_dir / path

    def budget_for(self, M: int) -> int:
        """Sensor budget D for a network of M nodes outside a budget sweep"""
        if self.band_d is not None:
            return self.band_d
        return max(1, int(round(self.d_fraction * M)))

    def to_dict(self):
        return {
            'model': self.model,
            'policies': list(self.policies),
            'sweep': {'var': self.sweep_var, 'grid': list(self.grid)},
            'trials': self.trials,
            'seed': self.seed,
            'graph': {
                'source': self.graph_source,
                'm': self.graph_m,
                'degree': self.graph_degree,
                'p': self.graph_p,
                'rewire': self.graph_rewire,
                'weight_low': self.weight_low,
                'weight_high': self.weight_high,
            },
            'noise': {
                'sigma2': self.sigma2,
                'csv': self.noise_csv,
                'generators': [n + 1 for n in self.generators],
            },
            'band': {'r': self.band_r, 'd': self.band_d, 'd_fraction': self.d_fraction},
            'signal': {'csv': self.signal_csv},
        }
