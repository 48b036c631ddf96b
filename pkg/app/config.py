import copy
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import yaml

from agents import TrainConfig
from behavior_cloning import BehaviorParams
from economy import EconConfig
from errors import ConfigError
from utils import build_dataclass, sha256_bytes

logger = logging.getLogger('smfg-lab.config')

DEFAULT_CONFIG_PATH = 'config/settings.yml'
PROFILES_KEY = 'profiles'
MANIFEST_KEY = 'manifest'


@dataclass(frozen=True)
class EvaluationConfig:
    episodes: int = 10
    seed: int = 10_000
    br_budget: int = 20
    exploitability_interval: int = 0
    exploitability_seeds: int = 2
    exploitability: bool = False

    @classmethod
    def from_dict(cls, values):
        config = build_dataclass(cls, values, 'evaluation')
        if config.episodes < 1:
            raise ConfigError(f"evaluation.episodes must be >= 1, got {config.episodes}")
        if config.br_budget < 0 or config.exploitability_interval < 0 or config.exploitability_seeds < 1:
            raise ConfigError('evaluation br_budget/exploitability_interval must be >= 0 and '
                              'exploitability_seeds >= 1')
        return config


def deep_merge(base: dict, overlay: dict) -> dict:
    """Recursively merge overlay onto a copy of base; overlay wins."""
    merged = copy.deepcopy(base)
    for key, value in (overlay or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def apply_overrides(values: dict, overrides) -> dict:
    """Set dotted keys ('economy.n_households') on a copy; None values are skipped."""
    result = copy.deepcopy(values)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        keys = dotted.split('.')
        node = result
        for key in keys[:-1]:
            child = node.get(key)
            if child is None:
                child = node[key] = {}
            elif not isinstance(child, dict):
                raise ConfigError(f"Cannot override '{dotted}': '{key}' is not a section")
            node = child
        node[keys[-1]] = value
    return result


class Config:
    """Configuration loader for SMFG lab settings.

    Resolution order is file < profile overlay < overrides. A manifest written
    by write_manifest loads back to the same resolved values and digest.
    """

    def __init__(self, config_path=DEFAULT_CONFIG_PATH, profile=None, overrides=None):
        self.config_path = config_path
        raw = self._load_config()
        self.profile = profile or (raw.get('general') or {}).get('profile')
        self.config = apply_overrides(self._apply_profile(raw, self.profile), overrides)

    def _load_config(self):
        """Load configuration from YAML file."""
        if not os.path.exists(self.config_path):
            raise FileNotFoundError(f"Configuration file not found: {self.config_path}")

        with open(self.config_path, 'r') as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{self.config_path} must hold a mapping of sections")
        data.pop(MANIFEST_KEY, None)
        return data

    def _apply_profile(self, raw, profile):
        profiles = raw.pop(PROFILES_KEY, None)
        if profile is None:
            return raw
        if profiles is None:
            # Already resolved (a manifest); the overlay is baked in.
            logger.debug(f"No profiles section in {self.config_path}, keeping '{profile}' as recorded")
            return raw
        if profile not in profiles:
            raise ConfigError(f"Unknown profile '{profile}', expected one of {sorted(profiles)}")
        merged = deep_merge(raw, profiles[profile])
        merged.setdefault('general', {})['profile'] = profile
        return merged

    def get(self, *keys, default=None):
        """Get nested configuration value.

        Example:
            config.get('general', 'log_level')
            config.get('baselines', 'bc', 'epochs', default=200)
        """
        value = self.config
        for key in keys:
            if isinstance(value, dict):
                value = value.get(key)
            else:
                return default
            if value is None:
                return default
        return value

    @property
    def log_level(self):
        return self.get('general', 'log_level', default='INFO')

    @property
    def log_file(self):
        return self.get('general', 'log_file')

    @property
    def economy(self) -> EconConfig:
        return EconConfig.from_dict(self.get('economy', default={}))

    @property
    def training(self) -> TrainConfig:
        return TrainConfig.from_dict(self.get('training', default={}))

    @property
    def evaluation(self) -> EvaluationConfig:
        return EvaluationConfig.from_dict(self.get('evaluation', default={}))

    @property
    def behavior(self) -> BehaviorParams:
        return BehaviorParams.from_dict(self.get('baselines', 'behavior', default={}))

    @property
    def baselines(self):
        return self.get('baselines', default={})

    @property
    def experiment(self):
        return self.get('experiment', default={})

    @property
    def sweep(self):
        return self.get('sweep', default={})

    @property
    def paths(self):
        return self.get('paths', default={})

    @property
    def run(self):
        return self.get('run', default={})

    def derive(self, overrides) -> 'Config':
        """Copy of this configuration with further dotted overrides applied."""
        child = copy.copy(self)
        child.config = apply_overrides(self.config, overrides)
        return child

    def resolved(self) -> dict:
        return copy.deepcopy(self.config)

    def dump(self) -> str:
        return yaml.safe_dump(self.config, sort_keys=True, default_flow_style=False)

    def digest(self) -> str:
        """SHA-256 of the canonical YAML dump of the resolved configuration."""
        return sha256_bytes(self.dump().encode('utf-8'))

    def write_manifest(self, path, **extra):
        """Write the resolved configuration plus its digest; loadable again as a Config."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        document = self.resolved()
        document[MANIFEST_KEY] = {
            'digest': self.digest(),
            'seed': self.get('run', 'seed', default=0),
            'source': str(self.config_path),
        }
        document[MANIFEST_KEY].update(extra)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            yaml.safe_dump(document, f, sort_keys=True, default_flow_style=False)
        logger.debug(f"Wrote manifest {path}")
        return path
