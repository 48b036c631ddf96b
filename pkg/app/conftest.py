import sys
from pathlib import Path

import pytest
import yaml

# Add app directory to path
sys.path.insert(0, str(Path(__file__).parent))

from agents import TrainConfig
from economy import EconConfig


@pytest.fixture
def tiny_econ():
    return EconConfig(n_households=4, horizon=8)


@pytest.fixture
def tiny_train():
    return TrainConfig(
        epochs=2,
        epoch_length=8,
        batch_size=4,
        update_cycles=2,
        inner_update_cycles=1,
        warmup_batches=1,
        hidden_sizes=(8,),
        follower_samples=2,
        opponent_samples=2,
        m_concat=3,
        buffer_capacity=64,
    )


@pytest.fixture
def config_file(tmp_path):
    """Write a small settings file; keyword sections are merged over the defaults."""

    def write(**sections):
        values = {
            'general': {'log_level': 'DEBUG'},
            'run': {'algo': 'smfg', 'seed': 0},
            'economy': {'n_households': 3, 'horizon': 5},
            'training': {
                'epochs': 2, 'epoch_length': 5, 'batch_size': 4, 'update_cycles': 1,
                'inner_update_cycles': 1, 'warmup_batches': 1, 'hidden_sizes': [8],
                'follower_samples': 2, 'opponent_samples': 2, 'm_concat': 2, 'buffer_capacity': 64,
            },
            'evaluation': {'episodes': 2, 'seed': 100, 'br_budget': 1,
                           'exploitability_interval': 0, 'exploitability_seeds': 1},
            'baselines': {
                'bc': {'dataset_size': 30, 'epochs': 2, 'hidden_sizes': [8], 'batch_size': 16},
                'saez': {'calibration_rates': [0.0, 0.2, 0.4]},
            },
            'experiment': {'shock_step': 2, 'shock_factor': 0.5},
            'sweep': {'algos': ['smfg'], 'seeds': [0], 'tradeoff_alphas': [0, 2]},
        }
        for name, section in sections.items():
            values.setdefault(name, {}).update(section)
        path = tmp_path / 'settings.yml'
        path.write_text(yaml.safe_dump(values, sort_keys=True))
        return path

    return write
