"""The five benchmark grasp objects.

Dimensions are the measured desk objects; frictions and compliances are
plant calibration targets, not datasheet values (the shipped calibrated
config may override them per object). The effective radius collapses
each shape onto the 1-D closure model: the distance from the grasp axis
at which fingertips meet the surface.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .errors import ConfigurationError


class ObjectShape(str, Enum):
    CYLINDER = "cylinder"
    CUBOID = "cuboid"
    FRUSTUM = "frustum"
    IRREGULAR = "irregular"


@dataclass(frozen=True)
class ObjectSpec:
    name: str
    shape: ObjectShape
    dimensions_cm: tuple[float, ...]
    base_mass_g: float
    deformability_mm_per_n: float   # 0 = rigid
    surface_friction: float
    effective_radius_cm: float
    added_mass_g: float = 0.0
    # Mass beyond which load deforms the object enough to push the contact
    # patch onto the fingertip edges (only edge-blind tips care).
    edge_shift_mass_g: float | None = None
    palm_contact_prone: bool = False

    def __post_init__(self):
        if self.base_mass_g < 0 or self.added_mass_g < 0:
            raise ConfigurationError("object masses must be >= 0")
        if any(d <= 0 for d in self.dimensions_cm):
            raise ConfigurationError("object dimensions must be positive")
        if self.deformability_mm_per_n < 0:
            raise ConfigurationError("deformability must be >= 0")
        if self.effective_radius_cm <= 0:
            raise ConfigurationError("effective radius must be positive")

    @property
    def total_mass_g(self) -> float:
        return self.base_mass_g + self.added_mass_g

    def with_added_mass(self, grams: float) -> "ObjectSpec":
        return replace(self, added_mass_g=float(grams))


def object_library() -> tuple[ObjectSpec, ...]:
    """The five benchmark objects with their measured dimensions."""
    return (
        ObjectSpec(
            name="plastic cup",
            shape=ObjectShape.FRUSTUM,
            dimensions_cm=(9.5, 5.3, 12.5),   # top diameter, base diameter, height
            base_mass_g=10.0,
            deformability_mm_per_n=1.2,
            surface_friction=0.48,            # plastic
            effective_radius_cm=(9.5 + 5.3) / 4.0,
        ),
        ObjectSpec(
            name="tea cup",
            shape=ObjectShape.CYLINDER,
            dimensions_cm=(8.0, 8.0, 8.0),
            base_mass_g=200.0,
            deformability_mm_per_n=0.0,       # rigid ceramic
            surface_friction=0.42,            # ceramic
            effective_radius_cm=4.0,
        ),
        ObjectSpec(
            name="can",
            shape=ObjectShape.CYLINDER,
            dimensions_cm=(7.9, 7.9, 25.9),
            base_mass_g=20.0,
            deformability_mm_per_n=0.15,      # thin foil wall dents slightly
            surface_friction=0.30,            # foil
            effective_radius_cm=3.95,
        ),
        ObjectSpec(
            name="water bottle",
            shape=ObjectShape.IRREGULAR,
            dimensions_cm=(7.3, 8.7, 10.0),
            base_mass_g=30.0,
            deformability_mm_per_n=0.6,       # non-solid plastic shell
            surface_friction=0.48,            # plastic
            effective_radius_cm=(7.3 + 8.7) / 4.0,
            edge_shift_mass_g=500.0,
            palm_contact_prone=True,
        ),
        ObjectSpec(
            name="cube box",
            shape=ObjectShape.CUBOID,
            dimensions_cm=(8.0, 8.0, 8.0),    # non-parallel sides
            base_mass_g=150.0,
            deformability_mm_per_n=0.0,       # rigid wood
            surface_friction=0.54,            # wood
            effective_radius_cm=4.0,
        ),
    )


def get_object(name: str) -> ObjectSpec:
    for spec in object_library():
        if spec.name == name:
            return spec
    known = ", ".join(s.name for s in object_library())
    raise LookupError(f"unknown object {name!r}; known objects: {known}")
