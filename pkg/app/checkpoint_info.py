from lxml import etree
from typing import Optional, Dict, Any, List, Tuple
import logging

from errors import CheckpointError
from network import NetworkSpec

logger = logging.getLogger('smfg-lab.checkpoint')


def _join(values) -> str:
    return ','.join(str(int(v)) for v in values)


def _split(text: Optional[str]) -> Tuple[int, ...]:
    if not text:
        return ()
    return tuple(int(v) for v in text.split(','))


class CheckpointInfo:
    """Handler for the CheckpointInfo.xml header stored in checkpoint files."""

    ROOT = 'CheckpointInfo'

    def __init__(self, xml_content: Optional[bytes] = None):
        """
        Args:
            xml_content: Existing CheckpointInfo.xml content, or None to create new
        """
        if xml_content:
            try:
                self.root = etree.fromstring(xml_content)
            except etree.XMLSyntaxError as e:
                raise CheckpointError(f"Corrupt checkpoint header: {e}")
            if self.root.tag != self.ROOT:
                raise CheckpointError(f"Unexpected header root <{self.root.tag}>")
        else:
            self.root = etree.Element(self.ROOT)

    def get_field(self, field_name: str, default: Any = None) -> Any:
        element = self.root.find(field_name)
        return element.text if element is not None else default

    def set_field(self, field_name: str, value: Any):
        element = self.root.find(field_name)
        if element is None:
            element = etree.SubElement(self.root, field_name)
        element.text = str(value) if value is not None else ''

    def _section(self, name: str):
        section = self.root.find(name)
        if section is None:
            section = etree.SubElement(self.root, name)
        return section

    @property
    def kind(self) -> Optional[str]:
        """What the checkpoint holds, e.g. 'agent-nets' or 'bc-policy'."""
        return self.get_field('Kind')

    @kind.setter
    def kind(self, value: str):
        self.set_field('Kind', value)

    @property
    def seed(self) -> Optional[int]:
        seed = self.get_field('Seed')
        return int(seed) if seed else None

    @seed.setter
    def seed(self, value: int):
        self.set_field('Seed', value)

    @property
    def epoch(self) -> Optional[int]:
        epoch = self.get_field('Epoch')
        return int(epoch) if epoch else None

    @epoch.setter
    def epoch(self, value: int):
        self.set_field('Epoch', value)

    @property
    def config_digest(self) -> Optional[str]:
        return self.get_field('ConfigDigest')

    @config_digest.setter
    def config_digest(self, value: str):
        self.set_field('ConfigDigest', value)

    @property
    def variant(self) -> Optional[str]:
        return self.get_field('Variant')

    @variant.setter
    def variant(self, value: str):
        self.set_field('Variant', value)

    def add_network(self, name: str, spec: NetworkSpec):
        etree.SubElement(
            self._section('Networks'), 'Network',
            name=name,
            layers=_join(spec.layer_sizes),
            hidden=spec.hidden_activation,
            output=spec.output_activation,
        )

    def networks(self) -> Dict[str, NetworkSpec]:
        specs = {}
        for element in self._section('Networks'):
            specs[element.get('name')] = NetworkSpec(
                _split(element.get('layers')),
                element.get('hidden'),
                element.get('output'),
            )
        return specs

    def add_array(self, name: str, shape):
        etree.SubElement(self._section('Arrays'), 'Array', name=name, shape=_join(shape))

    def arrays(self) -> Dict[str, Tuple[int, ...]]:
        return {e.get('name'): _split(e.get('shape')) for e in self._section('Arrays')}

    def add_optimizer(self, name: str, step: int, beta1: float, beta2: float, eps: float):
        etree.SubElement(
            self._section('Optimizers'), 'Optimizer',
            name=name, step=str(int(step)),
            beta1=repr(float(beta1)), beta2=repr(float(beta2)), eps=repr(float(eps)),
        )

    def optimizers(self) -> Dict[str, Dict[str, float]]:
        return {
            e.get('name'): {
                'step': int(e.get('step')),
                'beta1': float(e.get('beta1')),
                'beta2': float(e.get('beta2')),
                'eps': float(e.get('eps')),
            }
            for e in self._section('Optimizers')
        }

    def set_extra(self, key: str, value: Any):
        section = self._section('Extras')
        for element in section:
            if element.get('key') == key:
                element.text = repr(value) if isinstance(value, float) else str(value)
                return
        element = etree.SubElement(section, 'Extra', key=key)
        element.text = repr(value) if isinstance(value, float) else str(value)

    def extras(self) -> Dict[str, str]:
        return {e.get('key'): e.text or '' for e in self._section('Extras')}

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind,
            'seed': self.seed,
            'epoch': self.epoch,
            'config_digest': self.config_digest,
            'variant': self.variant,
            'networks': {k: v.to_dict() for k, v in self.networks().items()},
            'extras': self.extras(),
        }

    def to_xml(self, pretty_print: bool = True) -> bytes:
        return etree.tostring(
            self.root,
            xml_declaration=True,
            encoding='utf-8',
            pretty_print=pretty_print
        )

    def validate_required_fields(self, required: List[str]) -> bool:
        """Check if required fields are present and non-empty."""
        for field in required:
            if not self.get_field(field):
                logger.warning(f"Required header field '{field}' is missing or empty")
                return False
        return True

    def __repr__(self):
        return f"CheckpointInfo(kind={self.kind}, seed={self.seed}, epoch={self.epoch})"
