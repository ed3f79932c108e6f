"""Domain types shared by the assessment and planning modules."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional


class CridsError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(CridsError, ValueError):
    pass


class Category(enum.Enum):
    RESISTIVE = "Resistive"
    ADAPTIVE = "Adaptive"
    RECOVERY = "Recovery"

    @property
    def prefix(self) -> str:
        return {"Resistive": "R", "Adaptive": "A", "Recovery": "Re"}[self.value]


@dataclass(frozen=True, order=True)
class FactorId:
    category: Category = field(compare=False)
    ordinal: int = field(compare=False)
    name: str = field(compare=False)
    # registry position; drives ordering and hashing
    position: int = field(default=-1, repr=False)

    @property
    def code(self) -> str:
        return f"{self.category.prefix}{self.ordinal}"

    def __str__(self) -> str:
        return self.code

    def __hash__(self) -> int:
        return hash(self.name)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FactorId):
            return NotImplemented
        return self.name == other.name


_CANONICAL = [
    (Category.RESISTIVE, 1, "capacity_redundancy"),
    (Category.RESISTIVE, 2, "flood_exposure"),
    (Category.RESISTIVE, 3, "vertical_separation"),
    (Category.ADAPTIVE, 1, "wetland_distance"),
    (Category.ADAPTIVE, 2, "wellfield_protection_zone"),
    (Category.ADAPTIVE, 3, "wellhead_distance"),
    (Category.ADAPTIVE, 4, "groundwater_contamination"),
    (Category.ADAPTIVE, 5, "system_age"),
    (Category.ADAPTIVE, 6, "canal_distance"),
    (Category.ADAPTIVE, 7, "drainage_distance"),
    (Category.ADAPTIVE, 8, "land_use"),
    (Category.RECOVERY, 1, "sewer_distance"),
    (Category.RECOVERY, 2, "median_household_income"),
    (Category.RECOVERY, 3, "overflow_distance"),
    (Category.RECOVERY, 4, "moratorium_status"),
]

_REGISTRY = tuple(
    FactorId(cat, ordinal, name, position=i) for i, (cat, ordinal, name) in enumerate(_CANONICAL)
)
_LOOKUP = {}
for _f in _REGISTRY:
    _LOOKUP[_f.code] = _f
    _LOOKUP[_f.code.lower()] = _f
    _LOOKUP[_f.name] = _f

def registry() -> list[FactorId]:
    """Return the 15 canonical factors ordered resistive, adaptive, recovery."""
    return list(_REGISTRY)


def factor(key: "str | FactorId") -> FactorId:
    """Look a factor up by code (``"R3"``), or by name (``"vertical_separation"``)."""
    if isinstance(key, FactorId):
        return key
    try:
        return _LOOKUP[key]
    except KeyError:
        try:
            return _LOOKUP[key.strip().lower()]
        except KeyError:
            raise KeyError(f"unknown factor {key!r}") from None


def factors_in(category: Category) -> list[FactorId]:
    return [f for f in _REGISTRY if f.category is category]


R3 = factor("R3")
A1 = factor("A1")
A4 = factor("A4")
A5 = factor("A5")
RE4 = factor("Re4")


@dataclass(frozen=True)
class Site:
    """A single decentralized system with its raw factor measurements."""

    id: str
    point: tuple[float, float]
    raw: Mapping[FactorId, float] = field(default_factory=dict)
    metadata: Mapping[str, str] = field(default_factory=dict)

    def with_raw(self, updates: Mapping[FactorId, float]) -> "Site":
        raw = dict(self.raw)
        raw.update(updates)
        return Site(self.id, self.point, raw, dict(self.metadata))


@dataclass(frozen=True)
class MembershipVector:
    scores: Mapping[FactorId, float]
    resistivity: float = math.nan
    adaptability: float = math.nan
    recovery: float = math.nan
    index: float = math.nan

    def score(self, f: "str | FactorId") -> float:
        return self.scores.get(factor(f), 1.0)


class TransformKind(enum.Enum):
    SIGMOID = "Sigmoid"
    INVERSE_SIGMOID = "InverseSigmoid"
    GRADE = "Grade"
    INVERSE_GRADE = "InverseGrade"
    PASSTHROUGH = "Passthrough"


MEDIAN = "median"


@dataclass(frozen=True)
class FactorTransformSpec:
    """Membership function choice for one factor.

    ``f2`` is either a positive reference value or the string ``"median"``,
    in which case it is resolved from the loaded dataset.
    """

    function: TransformKind
    f1: Optional[float] = None
    f2: "float | str | None" = None
    x_min: Optional[float] = None
    x_max: Optional[float] = None

    def __post_init__(self):
        fn = self.function
        if fn in (TransformKind.SIGMOID, TransformKind.INVERSE_SIGMOID):
            if self.f1 is None or not self.f1 > 0:
                raise InvalidParameterError(f"{fn.value} needs f1 > 0, got {self.f1}")
            if self.f2 != MEDIAN and (self.f2 is None or not float(self.f2) > 0):
                raise InvalidParameterError(f"{fn.value} needs f2 > 0 or 'median', got {self.f2}")
        elif fn in (TransformKind.GRADE, TransformKind.INVERSE_GRADE):
            if self.x_min is None or self.x_max is None or not self.x_min < self.x_max:
                raise InvalidParameterError(
                    f"{fn.value} needs x_min < x_max, got {self.x_min}, {self.x_max}"
                )

    @property
    def median_reference(self) -> bool:
        return self.f2 == MEDIAN


@dataclass(frozen=True)
class Scenario:
    name: str = "current"
    sea_level_rise: float = 0.0
    groundwater_response_ratio: float = 0.345
    drainfield_depth: float = 3.0

    def __post_init__(self):
        if self.sea_level_rise < 0:
            raise InvalidParameterError("sea_level_rise must be >= 0")
        if not 0 <= self.groundwater_response_ratio <= 1:
            raise InvalidParameterError("groundwater_response_ratio must lie in [0, 1]")

    @property
    def groundwater_rise(self) -> float:
        return self.sea_level_rise * self.groundwater_response_ratio


class Formula(enum.Enum):
    FULL = "Full"
    RECOVERY_ONLY = "RecoveryOnly"
    MOUND = "Mound"


class OptionName(enum.Enum):
    DO_NOTHING = "DoNothing"
    SEWER_EXTENSION = "SewerExtension"
    MOUND_SYSTEM = "MoundSystem"
    COMMUNITY_TREATMENT = "CommunityTreatment"
    ONSITE_TREATMENT = "OnsiteTreatment"


def _always(site: Site) -> bool:
    return True


@dataclass(frozen=True)
class AdaptationOption:
    id: int
    name: OptionName
    formula: Formula
    masked_factors: frozenset = frozenset()
    default_cost: float = 0.0
    site_costs: Mapping[str, float] = field(default_factory=dict)
    feasibility: Callable[[Site], bool] = field(default=_always, compare=False)

    def cost_for(self, site_id: str) -> float:
        return float(self.site_costs.get(site_id, self.default_cost))

    def is_feasible(self, site: Site) -> bool:
        return bool(self.feasibility(site))


MOUND_MASK = frozenset({R3, A4, A5})
_NON_RECOVERY = frozenset(f for f in _REGISTRY if f.category is not Category.RECOVERY)


def default_options(costs: Optional[Mapping[OptionName, float]] = None) -> list[AdaptationOption]:
    """The five adaptation options with their masks and index formulas."""
    costs = {OptionName(k): v for k, v in (costs or {}).items()}
    spec = [
        (1, OptionName.DO_NOTHING, Formula.FULL, frozenset()),
        (2, OptionName.SEWER_EXTENSION, Formula.RECOVERY_ONLY, _NON_RECOVERY),
        (3, OptionName.MOUND_SYSTEM, Formula.MOUND, MOUND_MASK),
        (4, OptionName.COMMUNITY_TREATMENT, Formula.RECOVERY_ONLY, _NON_RECOVERY),
        (5, OptionName.ONSITE_TREATMENT, Formula.MOUND, MOUND_MASK),
    ]
    return [
        AdaptationOption(i, name, formula, mask, float(costs.get(name, 0.0)))
        for i, name, formula, mask in spec
    ]


class PlanStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class Plan:
    assignments: Mapping[str, int]
    total_cost: float
    per_site_index: Mapping[str, float]
    status: PlanStatus = PlanStatus.OPTIMAL
    infeasible_sites: tuple = ()
    objective: float = math.nan

    @property
    def optimal(self) -> bool:
        return self.status is PlanStatus.OPTIMAL


def resolve_factor_map(values: Mapping) -> dict[FactorId, float]:
    """Convert a mapping keyed by factor code/name into one keyed by FactorId."""
    return {factor(k): float(v) for k, v in values.items()}
