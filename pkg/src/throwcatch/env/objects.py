"""The fifteen throwable objects, reduced to discs.

Gymball, bowling ball, cube and board sizes come from their physical
dimensions (radius, radius, half edge, half length). The remaining radii are
bounding-disc estimates. Masses are scaled into 0.1-1.0 kg so that the grip
spring both holds every object against gravity and stays stable at the
default time step (needs mass > damper_k * dt for two palms).
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ObjectSpec:
    id: int
    name: str
    radius: float
    mass: float


_CATALOG = (
    ("gymball", 0.6, 1.0),
    ("bowling", 0.215, 1.0),
    ("cube", 0.025, 0.1),
    ("board", 0.45, 0.8),
    ("banana", 0.09, 0.12),
    ("meat_can", 0.05, 0.35),
    ("mug", 0.06, 0.2),
    ("brick", 0.1, 0.6),
    ("kettle", 0.12, 0.6),
    ("bottle", 0.04, 0.15),
    ("cup", 0.045, 0.1),
    ("bucket", 0.15, 0.5),
    ("pen", 0.02, 0.1),
    ("pot", 0.2, 0.8),
    ("scissors", 0.08, 0.1),
)

N_OBJECTS = len(_CATALOG)
RADII = np.array([r for _, r, _ in _CATALOG])
MASSES = np.array([m for _, _, m in _CATALOG])
NAMES = tuple(name for name, _, _ in _CATALOG)


def object_catalog() -> list[ObjectSpec]:
    return [ObjectSpec(i, name, r, m) for i, (name, r, m) in enumerate(_CATALOG)]


def object_by_name(name: str) -> ObjectSpec:
    return object_catalog()[NAMES.index(name)]
