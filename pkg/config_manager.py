"""
Configuration Manager for the witness toolkit
Manages run defaults from .env, a local JSON config file and the environment
"""

import os
import sys
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Dict, Any
from dotenv import load_dotenv

from errors import ConfigError
from matrix_core import DEFAULT_TOLERANCES, Tolerances


DEFAULTS: Dict[str, Any] = {
    'tol': None,
    'seed': 0,
    'restarts': 200,
    'iters': 500,
    'samples': 1000,
    'log_level': 'WARNING',
}

ENV_KEYS = {
    'tol': 'WITNESSLAB_TOL',
    'seed': 'WITNESSLAB_SEED',
    'restarts': 'WITNESSLAB_RESTARTS',
    'iters': 'WITNESSLAB_ITERS',
    'samples': 'WITNESSLAB_SAMPLES',
    'log_level': 'WITNESSLAB_LOG_LEVEL',
}

CASTS = {
    'tol': float,
    'seed': int,
    'restarts': int,
    'iters': int,
    'samples': int,
    'log_level': lambda v: str(v).upper(),
}


class ConfigManager:
    """Manages run defaults from .env, witnesslab.json and environment variables"""

    CONFIG_FILE = "witnesslab.json"

    def __init__(self, config_path: Optional[str] = None):
        load_dotenv()
        self.config_path = Path(config_path or os.getenv('WITNESSLAB_CONFIG') or self.CONFIG_FILE)
        self.config = {}
        self.load_config()

    def load_config(self) -> Dict[str, Any]:
        """
        Load configuration from witnesslab.json, then apply environment overrides
        Priority: environment > config file > defaults

        Returns:
            Dict with configuration values
        """
        self.config = dict(DEFAULTS)

        if self.config_path.exists():
            try:
                with open(self.config_path, 'r') as f:
                    stored = json.load(f)
                if not isinstance(stored, dict):
                    raise ValueError("top level must be an object")
                self.config.update({k: v for k, v in stored.items() if k in DEFAULTS})
            except (json.JSONDecodeError, IOError, ValueError) as e:
                print(f"Warning: Could not load {self.config_path}: {e}", file=sys.stderr)

        for key, env_name in ENV_KEYS.items():
            value = os.getenv(env_name)
            if value:
                self.config[key] = value

        for key, cast in CASTS.items():
            value = self.config.get(key)
            if value is None:
                continue
            try:
                self.config[key] = cast(value)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"Invalid value for {key}: {value!r}") from e

        return self.config

    def save_config(self, config: Dict[str, Any]) -> bool:
        """
        Save configuration to the JSON config file

        Args:
            config: Dictionary with configuration values

        Returns:
            True if successful, False otherwise
        """
        try:
            self.config = config
            with open(self.config_path, 'w') as f:
                json.dump(config, f, indent=4)
            return True
        except IOError as e:
            print(f"Error saving config: {e}", file=sys.stderr)
            return False

    def get(self, key: str, default: Any = None) -> Any:
        """Get a configuration value"""
        return self.config.get(key, default)

    def set(self, key: str, value: Any) -> None:
        """Set a configuration value"""
        self.config[key] = value


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings of one CLI invocation"""
    command: str
    tol: Optional[float] = None
    seed: int = 0
    restarts: int = 200
    iters: int = 500
    samples: int = 1000
    log_level: str = 'WARNING'
    options: Optional[Dict[str, Any]] = None

    def __post_init__(self):
        if self.tol is not None and not self.tol > 0:
            raise ConfigError(f"Tolerance override must be positive, got {self.tol}")
        for name in ('restarts', 'iters', 'samples'):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")

    @property
    def tolerances(self) -> Tolerances:
        return DEFAULT_TOLERANCES.scaled(self.tol)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['options'] = dict(self.options or {})
        return data

    @classmethod
    def resolve(cls, command: str, manager: ConfigManager,
                overrides: Optional[Dict[str, Any]] = None,
                options: Optional[Dict[str, Any]] = None) -> "RunConfig":
        """
        Layer CLI overrides (None means not given) over ConfigManager values

        Args:
            command: Subcommand name
            manager: Loaded configuration
            overrides: Values from the command line
            options: Command-specific flags recorded for reproducibility

        Returns:
            RunConfig instance
        """
        values = {key: manager.get(key, DEFAULTS[key]) for key in DEFAULTS}
        for key, value in (overrides or {}).items():
            if value is not None:
                values[key] = value
        return cls(command=command, options=options, **values)
