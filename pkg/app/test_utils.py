import logging
from dataclasses import dataclass
from typing import Tuple

import pytest

from errors import ConfigError
from utils import build_dataclass, resolve_log_level, setup_logging, sha256_bytes, sha256_file


@dataclass(frozen=True)
class _Settings:
    count: int = 1
    rate: float = 0.5
    enabled: bool = False
    sizes: Tuple[int, ...] = (4,)
    name: str = 'x'


@pytest.mark.parametrize('value,expected', [
    ('warn', 'WARNING'),
    ('debug', 'DEBUG'),
    ('ERROR', 'ERROR'),
    ('info', 'INFO'),
])
def test_env_level_wins(monkeypatch, value, expected):
    monkeypatch.setenv('SMFG_LOG_LEVEL', value)
    assert resolve_log_level('CRITICAL') == expected


def test_config_level_used_without_env(monkeypatch):
    monkeypatch.delenv('SMFG_LOG_LEVEL', raising=False)
    assert resolve_log_level('debug') == 'DEBUG'


def test_setup_logging_writes_file(tmp_path, monkeypatch):
    monkeypatch.delenv('SMFG_LOG_LEVEL', raising=False)
    log_file = tmp_path / 'logs' / 'run.log'
    setup_logging('INFO', str(log_file))
    logging.getLogger('smfg-lab.test').info('hello registry')
    root = logging.getLogger()
    for handler in list(root.handlers):
        handler.flush()
        root.removeHandler(handler)
        handler.close()
    assert 'hello registry' in log_file.read_text()


def test_build_dataclass_coerces_types():
    settings = build_dataclass(_Settings, {'count': '3', 'rate': 1, 'enabled': 'yes',
                                           'sizes': [8, 8.0], 'name': 'y'}, 'test')
    assert settings == _Settings(count=3, rate=1.0, enabled=True, sizes=(8, 8), name='y')
    assert build_dataclass(_Settings, None, 'test') == _Settings()


@pytest.mark.parametrize('values', [
    {'unknown': 1},
    {'count': 2.5},
    {'enabled': 'maybe'},
    {'rate': 'fast'},
    {'count': True},
])
def test_build_dataclass_rejects_bad_values(values):
    with pytest.raises(ConfigError):
        build_dataclass(_Settings, values, 'test')


def test_file_hash_matches_bytes_hash(tmp_path):
    path = tmp_path / 'blob.bin'
    payload = b'a' * 10_000
    path.write_bytes(payload)
    assert sha256_file(path) == sha256_bytes(payload)
