import zipfile
import tempfile
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional
import logging

import numpy as np

from checkpoint_info import CheckpointInfo
from errors import CheckpointError, ContractError
from network import AdamState, NetworkParams, NetworkSpec

logger = logging.getLogger('smfg-lab.checkpoint')

# Fixed member timestamp so identical contents give identical archive bytes
_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)
REQUIRED_FIELDS = ['Kind']


class CheckpointFile:
    """ZIP container holding CheckpointInfo.xml plus raw float64 arrays."""

    INFO_NAME = 'CheckpointInfo.xml'
    ARRAY_DIR = 'arrays/'
    ARRAY_SUFFIX = '.f64'

    def __init__(self, file_path):
        """
        Args:
            file_path: Path to checkpoint file
        """
        self.file_path = Path(file_path)
        self._validate()

    def _validate(self):
        if not self.file_path.exists():
            raise CheckpointError(f"Checkpoint file not found: {self.file_path}")
        if not zipfile.is_zipfile(self.file_path):
            raise CheckpointError(f"File is not a valid checkpoint archive: {self.file_path}")
        if not self.has_file(self.INFO_NAME):
            raise CheckpointError(f"Checkpoint has no {self.INFO_NAME}: {self.file_path}")

    @classmethod
    def write(cls, file_path, info: CheckpointInfo, arrays: Dict[str, np.ndarray]) -> 'CheckpointFile':
        """Write a new checkpoint, replacing any existing file atomically.

        Args:
            file_path: Destination path
            info: Header; array entries are added here
            arrays: Named arrays, stored little-endian row-major

        Returns:
            CheckpointFile for the written archive
        """
        file_path = Path(file_path)
        file_path.parent.mkdir(parents=True, exist_ok=True)

        with tempfile.TemporaryDirectory() as temp_dir:
            temp_file = Path(temp_dir) / 'temp.ckpt'
            with zipfile.ZipFile(temp_file, 'w', zipfile.ZIP_DEFLATED) as zf:
                for name in sorted(arrays):
                    array = np.ascontiguousarray(arrays[name], dtype='<f8')
                    info.add_array(name, array.shape)
                    member = zipfile.ZipInfo(cls.ARRAY_DIR + name + cls.ARRAY_SUFFIX, date_time=_ZIP_EPOCH)
                    member.compress_type = zipfile.ZIP_DEFLATED
                    zf.writestr(member, array.tobytes(order='C'))
                header = zipfile.ZipInfo(cls.INFO_NAME, date_time=_ZIP_EPOCH)
                header.compress_type = zipfile.ZIP_DEFLATED
                zf.writestr(header, info.to_xml())
            shutil.move(str(temp_file), str(file_path))

        logger.info(f"Wrote checkpoint {file_path.name} ({len(arrays)} arrays)")
        return cls(file_path)

    def list_files(self) -> List[str]:
        with zipfile.ZipFile(self.file_path, 'r') as zf:
            return zf.namelist()

    def has_file(self, filename: str) -> bool:
        return filename in self.list_files()

    def read_file(self, filename: str) -> bytes:
        try:
            with zipfile.ZipFile(self.file_path, 'r') as zf:
                return zf.read(filename)
        except KeyError:
            raise CheckpointError(f"{filename} not found in {self.file_path.name}")
        except zipfile.BadZipFile as e:
            raise CheckpointError(f"Corrupt checkpoint {self.file_path.name}: {e}")

    def read_info(self) -> CheckpointInfo:
        return CheckpointInfo(self.read_file(self.INFO_NAME))

    def read_arrays(self) -> Dict[str, np.ndarray]:
        """Read every array listed in the header, checking its byte length."""
        arrays = {}
        for name, shape in self.read_info().arrays().items():
            raw = self.read_file(self.ARRAY_DIR + name + self.ARRAY_SUFFIX)
            expected = int(np.prod(shape, dtype=np.int64)) * 8
            if len(raw) != expected:
                raise CheckpointError(
                    f"Array {name} holds {len(raw)} bytes, header shape {shape} needs {expected}")
            arrays[name] = np.frombuffer(raw, dtype='<f8').reshape(shape).astype(np.float64)
        return arrays


@dataclass
class LoadedCheckpoint:
    info: CheckpointInfo
    networks: Dict[str, NetworkParams]
    optimizers: Dict[str, AdamState] = field(default_factory=dict)

    @property
    def extras(self) -> Dict[str, str]:
        return self.info.extras()


def save_checkpoint(file_path, kind: str, networks: Dict[str, NetworkParams],
                    optimizers: Optional[Dict[str, AdamState]] = None, seed: Optional[int] = None,
                    epoch: Optional[int] = None, config_digest: Optional[str] = None,
                    variant: Optional[str] = None, extras: Optional[Dict] = None) -> Path:
    """Bundle named networks and their optimizer states into one file.

    Returns:
        Path of the written checkpoint
    """
    info = CheckpointInfo()
    info.kind = kind
    if seed is not None:
        info.seed = seed
    if epoch is not None:
        info.epoch = epoch
    if config_digest:
        info.config_digest = config_digest
    if variant:
        info.variant = variant

    arrays = {}
    for name, params in networks.items():
        info.add_network(name, params.spec)
        arrays.update(params.named_arrays(name))
    for name, state in (optimizers or {}).items():
        info.add_optimizer(name, state.step, state.beta1, state.beta2, state.eps)
        arrays[f"{name}.adam_m"] = state.m
        arrays[f"{name}.adam_v"] = state.v
    for key, value in (extras or {}).items():
        info.set_extra(key, value)

    return CheckpointFile.write(file_path, info, arrays).file_path


def load_checkpoint(file_path, expected_specs: Optional[Dict[str, NetworkSpec]] = None,
                    kind: Optional[str] = None) -> LoadedCheckpoint:
    """Load a checkpoint, validating it against the networks the caller needs.

    Args:
        file_path: Checkpoint path
        expected_specs: Network name -> spec the caller will run; any missing
            network or differing spec raises CheckpointError
        kind: Required header kind, if any

    Returns:
        LoadedCheckpoint with networks and optimizer states
    """
    ckpt = CheckpointFile(file_path)
    info = ckpt.read_info()
    if not info.validate_required_fields(REQUIRED_FIELDS):
        raise CheckpointError(f"{ckpt.file_path.name} header lacks one of {REQUIRED_FIELDS}")
    if kind is not None and info.kind != kind:
        raise CheckpointError(f"{ckpt.file_path.name} holds '{info.kind}', expected '{kind}'")

    specs = info.networks()
    for name, spec in (expected_specs or {}).items():
        if name not in specs:
            raise CheckpointError(f"{ckpt.file_path.name} has no network '{name}'")
        if specs[name] != spec:
            raise CheckpointError(
                f"Network '{name}' in {ckpt.file_path.name} is {specs[name].layer_sizes}, "
                f"expected {spec.layer_sizes}")

    arrays = ckpt.read_arrays()
    try:
        networks = {
            name: NetworkParams.from_named_arrays(spec, arrays, name)
            for name, spec in specs.items()
        }
    except ContractError as e:
        raise CheckpointError(f"{ckpt.file_path.name}: {e}")

    optimizers = {}
    for name, hyper in info.optimizers().items():
        m = arrays.get(f"{name}.adam_m")
        v = arrays.get(f"{name}.adam_v")
        if m is None or v is None:
            raise CheckpointError(f"Optimizer state for '{name}' is incomplete")
        optimizers[name] = AdamState(m, v, hyper['step'], hyper['beta1'], hyper['beta2'], hyper['eps'])

    logger.debug(f"Loaded checkpoint {ckpt.file_path.name}: {info}")
    return LoadedCheckpoint(info, networks, optimizers)
