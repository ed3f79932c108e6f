"""Series/parallel aggregation of membership scores into the resilience index."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .model import (
    A1,
    A4,
    R3,
    AdaptationOption,
    Category,
    CridsError,
    FactorId,
    Formula,
    MembershipVector,
    MOUND_MASK,
    factor,
    factors_in,
    registry,
)


class UnknownLeafError(CridsError, KeyError):
    pass


@dataclass(frozen=True)
class Leaf:
    factor: FactorId


@dataclass(frozen=True)
class Series:
    children: tuple


@dataclass(frozen=True)
class Parallel:
    children: tuple


Node = Union[Leaf, Series, Parallel]


def default_diagram() -> Node:
    """Resistive chain in parallel with the adaptive and recovery chains in series."""
    def chain(cat):
        return Series(tuple(Leaf(f) for f in factors_in(cat)))

    return Parallel((
        chain(Category.RESISTIVE),
        Series((chain(Category.ADAPTIVE), chain(Category.RECOVERY))),
    ))


def diagram_from_config(doc) -> Node:
    """Parse a nested ``{"series": [...]}`` / ``{"parallel": [...]}`` document.

    Bare strings are leaves naming a factor by code or name.
    """
    if isinstance(doc, str):
        return Leaf(factor(doc))
    if isinstance(doc, Mapping) and len(doc) == 1:
        (kind, children), = doc.items()
        nodes = tuple(diagram_from_config(c) for c in children)
        if not nodes:
            raise ValueError(f"empty {kind} block")
        if kind.lower() == "series":
            return Series(nodes)
        if kind.lower() == "parallel":
            return Parallel(nodes)
    raise ValueError(f"cannot parse block diagram node {doc!r}")


def diagram_to_config(node: Node):
    if isinstance(node, Leaf):
        return node.factor.code
    kind = "series" if isinstance(node, Series) else "parallel"
    return {kind: [diagram_to_config(c) for c in node.children]}


def diagram_leaves(node: Node) -> list[FactorId]:
    if isinstance(node, Leaf):
        return [node.factor]
    out = []
    for c in node.children:
        out.extend(diagram_leaves(c))
    return out


def evaluate_block_diagram(
    diagram: Node, scores: Mapping[FactorId, float], default: float | None = 1.0
) -> float:
    """Reliability of ``diagram``: series multiplies, parallel is 1 - prod(1 - child).

    Leaves missing from ``scores`` take ``default``; pass ``default=None`` to
    make a missing leaf an error instead.
    """
    if isinstance(diagram, Leaf):
        try:
            return scores[diagram.factor]
        except KeyError:
            if default is None:
                raise UnknownLeafError(f"no score for leaf {diagram.factor.code}") from None
            return default
    values = [evaluate_block_diagram(c, scores, default) for c in diagram.children]
    if isinstance(diagram, Series):
        out = 1.0
        for v in values:
            out *= v
        return out
    miss = 1.0
    for v in values:
        miss *= 1.0 - v
    return 1.0 - miss


def derive_groundwater_contamination(vsd_score: float, wetland_score: float) -> float:
    return vsd_score * wetland_score


def category_score(
    scores: Mapping[FactorId, float], category: Category, exclude: frozenset = frozenset()
) -> float:
    out = 1.0
    for f in factors_in(category):
        if f in exclude:
            continue
        out *= scores.get(f, 1.0)
    return out


def cri_ds(resistivity: float, adaptability: float, recovery: float) -> float:
    return 1.0 - (1.0 - resistivity) * (1.0 - adaptability * recovery)


def with_groundwater_contamination(scores: Mapping[FactorId, float]) -> dict[FactorId, float]:
    out = dict(scores)
    out[A4] = derive_groundwater_contamination(scores.get(R3, 1.0), scores.get(A1, 1.0))
    return out


def aggregate(scores: Mapping[FactorId, float], diagram: Node | None = None) -> MembershipVector:
    """Fill category scores and index; A4 is recomputed from R3 and A1."""
    scores = with_groundwater_contamination(scores)
    r = category_score(scores, Category.RESISTIVE)
    a = category_score(scores, Category.ADAPTIVE)
    c = category_score(scores, Category.RECOVERY)
    if diagram is None:
        index = cri_ds(r, a, c)
    else:
        index = evaluate_block_diagram(diagram, scores)
    return MembershipVector(scores, r, a, c, index)


def post_adaptation_cri(scores: Mapping[FactorId, float], option: AdaptationOption) -> float:
    """Resilience index of a site once ``option`` is carried out."""
    masked = {f: (1.0 if f in option.masked_factors else v) for f, v in scores.items()}
    if option.formula is Formula.RECOVERY_ONLY:
        return category_score(masked, Category.RECOVERY)
    exclude = MOUND_MASK if option.formula is Formula.MOUND else frozenset()
    r = category_score(masked, Category.RESISTIVE, exclude)
    a = category_score(masked, Category.ADAPTIVE, exclude)
    c = category_score(masked, Category.RECOVERY, exclude)
    return cri_ds(r, a, c)


def check_diagram_covers_registry(diagram: Node) -> Sequence[FactorId]:
    """Return registry factors missing from ``diagram``."""
    present = set(diagram_leaves(diagram))
    return [f for f in registry() if f not in present]
