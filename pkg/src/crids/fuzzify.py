"""Membership transforms mapping raw factor measurements onto [0, 1]."""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .model import (
    A4,
    FactorId,
    FactorTransformSpec,
    InvalidParameterError,
    MembershipVector,
    Site,
    TransformKind,
    CridsError,
)


class EmptyDatasetError(CridsError):
    pass


class FactorTransformError(CridsError):
    def __init__(self, factor: FactorId, message: str):
        super().__init__(f"{factor.code} ({factor.name}): {message}")
        self.factor = factor


def _check_shape(f1: float, f2: float) -> None:
    if not f1 > 0:
        raise InvalidParameterError(f"f1 must be positive, got {f1}")
    if not f2 > 0:
        raise InvalidParameterError(f"f2 must be positive, got {f2}")


def _ratio_power(x: float, f2: float, p: float) -> float:
    r = x / f2
    if r == 0.0:
        # subnormal x underflows the ratio
        return math.inf if p < 0 else 0.0
    try:
        return r ** p
    except OverflowError:
        return math.inf


def sigmoid_membership(x: float, f1: float, f2: float) -> float:
    """Increasing S-curve ``1 / (1 + (x/f2)**-f1)``, equal to 0.5 at ``x == f2``.

    Non-positive ``x`` scores 0.
    """
    _check_shape(f1, f2)
    if x <= 0:
        return 0.0
    return 1.0 / (1.0 + _ratio_power(x, f2, -f1))


def inverse_sigmoid_membership(x: float, f1: float, f2: float) -> float:
    """Decreasing S-curve ``1 / (1 + (x/f2)**f1)``; scores 1 for ``x <= 0``."""
    _check_shape(f1, f2)
    if x <= 0:
        return 1.0
    return 1.0 / (1.0 + _ratio_power(x, f2, f1))


def _check_bounds(x_min: float, x_max: float) -> None:
    if not x_min < x_max:
        raise InvalidParameterError(f"x_min must be below x_max, got {x_min} >= {x_max}")


def grade_membership(x: float, x_min: float, x_max: float) -> float:
    _check_bounds(x_min, x_max)
    if x <= x_min:
        return 0.0
    if x >= x_max:
        return 1.0
    return (x - x_min) / (x_max - x_min)


def inverse_grade_membership(x: float, x_min: float, x_max: float) -> float:
    _check_bounds(x_min, x_max)
    if x <= x_min:
        return 1.0
    if x >= x_max:
        return 0.0
    return (x_max - x) / (x_max - x_min)


def passthrough_membership(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise InvalidParameterError(f"passthrough value must already lie in [0, 1], got {x}")
    return float(x)


def resolve_reference(values: Iterable[float], spec: FactorTransformSpec) -> float | None:
    """Return the concrete ``f2`` for ``spec``.

    Fixed references come back unchanged; median references are computed from
    ``values`` (average of the two central values for even counts).
    """
    if not spec.median_reference:
        return None if spec.f2 is None else float(spec.f2)
    values = [float(v) for v in values]
    if not values:
        raise EmptyDatasetError("median reference requested but the dataset has no values")
    return float(statistics.median(values))


def apply_spec(x: float, spec: FactorTransformSpec, f2: float | None = None) -> float:
    fn = spec.function
    if fn is TransformKind.SIGMOID or fn is TransformKind.INVERSE_SIGMOID:
        ref = f2 if f2 is not None else spec.f2
        if ref is None or isinstance(ref, str):
            raise InvalidParameterError("reference value has not been resolved")
        if fn is TransformKind.SIGMOID:
            return sigmoid_membership(x, spec.f1, float(ref))
        return inverse_sigmoid_membership(x, spec.f1, float(ref))
    if fn is TransformKind.GRADE:
        return grade_membership(x, spec.x_min, spec.x_max)
    if fn is TransformKind.INVERSE_GRADE:
        return inverse_grade_membership(x, spec.x_min, spec.x_max)
    return passthrough_membership(x)


@dataclass(frozen=True)
class TransformTable:
    specs: Mapping[FactorId, FactorTransformSpec]
    resolved_references: Mapping[FactorId, float] = field(default_factory=dict)

    @classmethod
    def resolve(cls, specs: Mapping[FactorId, FactorTransformSpec], sites: Iterable[Site]) -> "TransformTable":
        """Build a table whose median references are resolved against ``sites``."""
        sites = list(sites)
        resolved = {}
        for f, spec in specs.items():
            if spec.median_reference:
                values = [s.raw[f] for s in sites if f in s.raw]
                # nothing to score for this factor, so nothing to resolve
                if values:
                    resolved[f] = resolve_reference(values, spec)
            elif spec.f2 is not None:
                resolved[f] = float(spec.f2)
        return cls(dict(specs), resolved)

    def transform(self, f: FactorId, x: float) -> float:
        spec = self.specs.get(f)
        if spec is None:
            raise FactorTransformError(f, "no transform configured")
        if spec.median_reference and f not in self.resolved_references:
            raise FactorTransformError(f, "median reference not resolved")
        try:
            return apply_spec(x, spec, self.resolved_references.get(f))
        except InvalidParameterError as exc:
            raise FactorTransformError(f, str(exc)) from None


def transform_site(site: Site, table: TransformTable) -> MembershipVector:
    """Score every raw measurement of ``site``; absent factors score 1.

    The groundwater-contamination factor is derived during aggregation and is
    never transformed from a raw value.
    """
    scores = {}
    for f, x in site.raw.items():
        if f == A4:
            continue
        scores[f] = table.transform(f, x)
    return MembershipVector(scores)
