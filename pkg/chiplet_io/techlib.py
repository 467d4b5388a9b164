# coding=utf-8
"""Packaging technology generations and the geometry vocabulary shared by the
extraction, ESD and signal-integrity models.

All lengths are stored in meters. Table units (mm, um) are converted once,
at construction, through the MM/UM factors below.
"""
import logging
from dataclasses import dataclass
from typing import Optional

from .utils import ModelError

_logger = logging.getLogger('chiplet_io.techlib')

MM = 1e-3
UM = 1e-6

MICRO_BUMP = 'micro-bump'
HYBRID_BOND = 'hybrid-bond'

KIND_ALIASES = {
    'micro-bump': MICRO_BUMP,
    'microbump': MICRO_BUMP,
    'ubump': MICRO_BUMP,
    'hybrid-bond': HYBRID_BOND,
    'hybrid': HYBRID_BOND,
    'hb': HYBRID_BOND,
}

# (L mm, W=S um, T=H um, P um)
MICRO_BUMP_TABLE = (
    (4.0, 2.5, 5.0, 70.0),
    (2.0, 2.0, 4.0, 55.0),
    (1.6, 1.5, 3.0, 40.0),
    (0.9, 1.0, 2.0, 30.0),
    (0.4, 0.5, 1.0, 20.0),
    (0.15, 0.25, 0.5, 10.0),
)

# (L um, W=S um, T=H um, P um)
HYBRID_BOND_TABLE = (
    (150.0, 0.25, 0.5, 10.0),
    (100.0, 0.20, 0.4, 5.0),
    (75.0, 0.15, 0.3, 2.5),
    (50.0, 0.10, 0.2, 1.0),
    (25.0, 0.05, 0.1, 0.5),
)

# Published SPICE parameters for micro-bump channels, per generation:
# C_pkg fF, R_pkg ohm, L_pkg nH, C_pad fF, R_pad mohm
REFERENCE_PARASITICS = (
    (1141.04, 7.040, 5.978, 5.911, 4.574),
    (423.11, 11.00, 2.801, 4.645, 5.822),
    (427.89, 7.333, 2.262, 3.378, 8.004),
    (233.26, 9.899, 1.242, 2.533, 10.673),
    (103.67, 17.599, 0.542, 1.689, 16.009),
    (38.87, 26.400, 0.195, 0.844, 32.018),
)

# Published total clamp areas (um^2) for micro-bump generations 0..5, by CDM target.
REFERENCE_DIODE_AREAS_UM2 = {
    10.0: (6.46, 6.11, 6.38, 6.15, 6.15, 6.02),
    30.0: (20.4, 18.2, 20.1, 18.7, 18.7, 17.9),
    50.0: (34.3, 30.5, 34.2, 31.2, 31.2, 29.8),
    125.0: (51.8, 46.6, 51.6, 47.9, 47.9, 45.4),
}

JEDEC_TARGETS_V = {
    'legacy': 250.0,
    'scaled': 125.0,
    'hybrid': 5.0,
}


def normalize_kind(kind):
    try:
        return KIND_ALIASES[str(kind).strip().lower()]
    except KeyError:
        raise ModelError("unknown interface kind '{}' (expected one of {})".format(
            kind, ', '.join(sorted(set(KIND_ALIASES)))))


@dataclass(frozen=True)
class WireGeometry:
    length: float
    width: float
    spacing: float
    thickness: float
    height: float

    def __post_init__(self):
        # zero length is allowed: it models a degenerate, pads-only channel
        if self.length < 0:
            raise ModelError('wire length must be >= 0, got {}'.format(self.length))
        for name in ('width', 'spacing', 'thickness', 'height'):
            if not getattr(self, name) > 0:
                raise ModelError('wire {} must be > 0, got {}'.format(name, getattr(self, name)))


@dataclass(frozen=True)
class PadGeometry:
    pitch: float
    kind: str

    def __post_init__(self):
        if not self.pitch > 0:
            raise ModelError('pad pitch must be > 0, got {}'.format(self.pitch))
        object.__setattr__(self, 'kind', normalize_kind(self.kind))


@dataclass(frozen=True)
class ChipletGeometry:
    edge: float
    spacing: float

    def __post_init__(self):
        if not (self.edge > 0 and self.spacing > 0):
            raise ModelError('chiplet edge and spacing must be > 0')


@dataclass(frozen=True)
class TechGeneration:
    kind: str
    index: Optional[int]
    wire: WireGeometry
    pad: PadGeometry

    def __post_init__(self):
        object.__setattr__(self, 'kind', normalize_kind(self.kind))
        if self.pad.kind != self.kind:
            raise ModelError('pad kind {} does not match generation kind {}'.format(self.pad.kind, self.kind))

    @property
    def is_builtin(self):
        if self.index is None:
            return False
        try:
            return builtin_generation(self.kind, self.index) == self
        except ModelError:
            return False

    @property
    def label(self):
        prefix = 'ubump' if self.kind == MICRO_BUMP else 'hybrid'
        return '{}-gen{}'.format(prefix, self.index) if self.index is not None else '{}-custom'.format(prefix)

    def with_length(self, length):
        wire = WireGeometry(length, self.wire.width, self.wire.spacing, self.wire.thickness, self.wire.height)
        return TechGeneration(self.kind, self.index, wire, self.pad)

    def to_config(self):
        """Serialize to the keys of a `technology:` config section."""
        wire = self.wire
        section = dict(
            kind='ubump' if self.kind == MICRO_BUMP else 'hybrid',
            gen=self.index,
            L_mm=_to_unit(wire.length, MM),
            W_um=_to_unit(wire.width, UM),
            T_um=_to_unit(wire.thickness, UM),
            P_um=_to_unit(self.pad.pitch, UM),
        )
        if wire.spacing != wire.width:
            section['S_um'] = _to_unit(wire.spacing, UM)
        if wire.height != wire.thickness:
            section['H_um'] = _to_unit(wire.height, UM)
        return section


def _to_unit(value, unit):
    # round() lands on the shortest decimal, the same double the table literal parsed to
    return round(value / unit, 12)


def custom_generation(kind, length, width, thickness, pitch, spacing=None, height=None, index=None):
    """Build a generation from raw SI fields. W = S and T = H unless given."""
    kind = normalize_kind(kind)
    wire = WireGeometry(
        length=length,
        width=width,
        spacing=width if spacing is None else spacing,
        thickness=thickness,
        height=thickness if height is None else height,
    )
    return TechGeneration(kind, index, wire, PadGeometry(pitch, kind))


def generation_from_config(section):
    """Inverse of TechGeneration.to_config.

    `gen` alone selects a table row; explicit dimensions override its fields.
    """
    kind = normalize_kind(section.get('kind', MICRO_BUMP))
    index = section.get('gen')
    base = builtin_generation(kind, index) if index is not None else None

    def pick(key, unit, fallback):
        value = section.get(key)
        if value is None:
            if fallback is None:
                raise ModelError("technology needs '{}' when no table generation is selected".format(key))
            return fallback
        return float(value) * unit

    length = pick('L_mm', MM, base.wire.length if base else None)
    width = pick('W_um', UM, base.wire.width if base else None)
    thickness = pick('T_um', UM, base.wire.thickness if base else None)
    pitch = pick('P_um', UM, base.pad.pitch if base else None)
    spacing = pick('S_um', UM, width)
    height = pick('H_um', UM, thickness)
    return custom_generation(kind, length, width, thickness, pitch, spacing=spacing, height=height, index=index)


def _table_for(kind):
    # third item: table length units per mm
    kind = normalize_kind(kind)
    if kind == MICRO_BUMP:
        return kind, MICRO_BUMP_TABLE, 1.0
    return kind, HYBRID_BOND_TABLE, 1000.0


def builtin_generation(kind, index):
    kind, table, per_mm = _table_for(kind)
    if isinstance(index, bool) or not isinstance(index, int) or not 0 <= index < len(table):
        raise ModelError('{} generation index {} out of range 0..{}'.format(kind, index, len(table) - 1))
    length, width, thickness, pitch = table[index]
    # lengths go through mm, the unit to_config writes, so the round trip is exact
    return custom_generation(kind, (length / per_mm) * MM, width * UM, thickness * UM, pitch * UM, index=index)


def list_generations(kind):
    kind, table, _ = _table_for(kind)
    return [builtin_generation(kind, i) for i in range(len(table))]
