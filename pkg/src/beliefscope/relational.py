"""Image regions, deterministic relation evaluators, and the instantiation transform.

A relation node's value is a function of its input regions, so it is computed
from the scene and clamped as evidence; what remains is an ordinary tree
network in which the relation node is just another observed child of the
hypothesis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import InvalidNetworkError, SpecSyntaxError
from .network import (
    EvidenceSet,
    Network,
    NetworkSpec,
    load_json,
    network_diagnostics,
    validate_network,
)

COLOUR_CLASSES = ("dark", "bright", "yellow", "green", "brown", "other")

PRESENT = "present"
ABSENT = "absent"
FEATURE_STATES = (PRESENT, ABSENT)

HOLDS = "holds"
HOLDS_NOT = "holds_not"
NEAR = "near"
FAR = "far"
BOOLEAN_STATES = (HOLDS, HOLDS_NOT)
DISTANCE_STATES = (NEAR, FAR)

#: evaluator name -> the state labels its outputs range over
RELATION_STATES: dict[str, tuple[str, ...]] = {
    "surrounding": BOOLEAN_STATES,
    "adjacent": BOOLEAN_STATES,
    "distance": DISTANCE_STATES,
    "static": BOOLEAN_STATES,
}

DEFAULT_TAU = 2.0
DEFAULT_EPSILON = 2.0

_REGION_KEYS = {"id", "colour_class", "centroid", "area", "bbox", "mask"}


@dataclass(frozen=True, eq=False)
class Region:
    """A detected image region.

    ``bbox`` is (xmin, ymin, xmax, ymax) in inclusive pixel coordinates; a
    mask, when present, is a boolean grid of shape (height, width) aligned to
    the bbox and indexed [y - ymin, x - xmin].
    """

    id: str
    colour_class: str
    centroid: tuple[float, float]
    area: int
    bbox: tuple[int, int, int, int]
    mask: np.ndarray | None = None

    def __post_init__(self):
        if self.colour_class not in COLOUR_CLASSES:
            raise ValueError(f"region '{self.id}': unknown colour class '{self.colour_class}'")
        if self.area < 1:
            raise ValueError(f"region '{self.id}': area must be >= 1")
        xmin, ymin, xmax, ymax = self.bbox
        if xmin > xmax or ymin > ymax:
            raise ValueError(f"region '{self.id}': bbox not well-ordered")
        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=bool)
            object.__setattr__(self, "mask", mask)
            h, w = ymax - ymin + 1, xmax - xmin + 1
            if mask.shape != (h, w):
                raise ValueError(f"region '{self.id}': mask shape {mask.shape} does not match bbox {h}x{w}")
            if int(mask.sum()) != self.area:
                raise ValueError(f"region '{self.id}': mask has {int(mask.sum())} pixels, area is {self.area}")
            if not (mask[0].any() and mask[-1].any() and mask[:, 0].any() and mask[:, -1].any()):
                raise ValueError(f"region '{self.id}': mask extent does not reach the bbox")

    def pixels(self) -> np.ndarray:
        """Absolute (x, y) coordinates of set mask pixels; requires a mask."""
        ys, xs = np.nonzero(self.mask)
        return np.stack([xs + self.bbox[0], ys + self.bbox[1]], axis=1).astype(float)


def region_from_document(obj) -> Region:
    if not isinstance(obj, dict):
        raise SpecSyntaxError("region entries must be objects")
    for key in obj:
        if key not in _REGION_KEYS:
            raise SpecSyntaxError(f"region: unknown field '{key}'")
    try:
        mask = obj.get("mask")
        return Region(
            id=obj["id"],
            colour_class=obj["colour_class"],
            centroid=(float(obj["centroid"][0]), float(obj["centroid"][1])),
            area=int(obj["area"]),
            bbox=tuple(int(v) for v in obj["bbox"]),
            mask=np.asarray(mask, dtype=bool) if mask is not None else None,
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise SpecSyntaxError(f"malformed region entry: {exc}") from None
    except ValueError as exc:
        raise SpecSyntaxError(str(exc)) from None


def region_to_document(region: Region) -> dict:
    doc: dict[str, Any] = {
        "id": region.id,
        "colour_class": region.colour_class,
        "centroid": [region.centroid[0], region.centroid[1]],
        "area": region.area,
        "bbox": list(region.bbox),
    }
    if region.mask is not None:
        doc["mask"] = region.mask.astype(int).tolist()
    return doc


def parse_scene(text: str) -> tuple[Region, ...]:
    doc = load_json(text)
    if not (isinstance(doc, dict) and set(doc) == {"regions"} and isinstance(doc["regions"], list)):
        raise SpecSyntaxError('scene document must be {"regions": [...]}')
    regions = tuple(region_from_document(obj) for obj in doc["regions"])
    seen = set()
    for r in regions:
        if r.id in seen:
            raise SpecSyntaxError(f"duplicate region id '{r.id}'")
        seen.add(r.id)
    return regions


def scene_to_document(regions: Sequence[Region]) -> dict:
    return {"regions": [region_to_document(r) for r in regions]}


# ---------------------------------------------------------------------------
# relation evaluators


def _euclid(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _bbox_strictly_inside(inner, outer) -> bool:
    ixn, iyn, ixx, iyx = inner
    oxn, oyn, oxx, oyx = outer
    return oxn < ixn and ixx < oxx and oyn < iyn and iyx < oyx


def _masks_overlap(a: Region, b: Region) -> bool:
    axn, ayn, axx, ayx = a.bbox
    bxn, byn, bxx, byx = b.bbox
    xn, xx = max(axn, bxn), min(axx, bxx)
    yn, yx = max(ayn, byn), min(ayx, byx)
    if xn > xx or yn > yx:
        return False
    sa = a.mask[yn - ayn : yx - ayn + 1, xn - axn : xx - axn + 1]
    sb = b.mask[yn - byn : yx - byn + 1, xn - bxn : xx - bxn + 1]
    return bool((sa & sb).any())


def _four_rays_hit(a: Region, b: Region) -> bool:
    """Do the four axis rays from b's centroid to a's bbox edges all cross a's mask?"""
    axn, ayn, axx, ayx = a.bbox
    px = int(round(b.centroid[0]))
    py = int(round(b.centroid[1]))
    if not (axn <= px <= axx and ayn <= py <= ayx):
        return False
    row = a.mask[py - ayn]
    col = a.mask[:, px - axn]
    return bool(
        row[: px - axn + 1].any()
        and row[px - axn :].any()
        and col[: py - ayn + 1].any()
        and col[py - ayn :].any()
    )


def _bbox_gap(a_bbox, b_bbox) -> float:
    axn, ayn, axx, ayx = a_bbox
    bxn, byn, bxx, byx = b_bbox
    dx = max(0, bxn - axx, axn - bxx)
    dy = max(0, byn - ayx, ayn - byx)
    return math.hypot(dx, dy)


def _min_region_distance(a: Region, b: Region) -> float:
    if a.mask is not None and b.mask is not None:
        pa, pb = a.pixels(), b.pixels()
        d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=-1)
        return float(np.sqrt(d2.min()))
    return _bbox_gap(a.bbox, b.bbox)


def eval_relation(kind: str, a: Region, b: Region, *,
                  tau: float = DEFAULT_TAU, epsilon: float = DEFAULT_EPSILON) -> str:
    """Deterministic relation value between two regions, as a state label.

    surrounding: requires disjoint masks, b's bbox strictly inside a's, and a
    mask hit on each of the four axis rays from b's centroid to a's bbox edge;
    without both masks it degrades to strict bbox containment.  adjacent:
    minimum inter-mask (or inter-bbox) distance <= tau.  distance: centroid
    distance binned at tau into near/far.  static: centroid displacement of
    two matched instances of the same region <= epsilon.
    """
    if kind not in RELATION_STATES:
        raise ValueError(f"unknown evaluator '{kind}'")
    if tau <= 0 or epsilon <= 0:
        raise ValueError("relation params must be strictly positive")

    if kind == "surrounding":
        if not _bbox_strictly_inside(b.bbox, a.bbox):
            return HOLDS_NOT
        if a.mask is None or b.mask is None:
            return HOLDS
        if _masks_overlap(a, b):
            return HOLDS_NOT
        return HOLDS if _four_rays_hit(a, b) else HOLDS_NOT
    if kind == "adjacent":
        return HOLDS if _min_region_distance(a, b) <= tau else HOLDS_NOT
    if kind == "distance":
        return NEAR if _euclid(a.centroid, b.centroid) <= tau else FAR
    # static
    if a.colour_class != b.colour_class:
        raise ValueError(
            f"static relation applied to unmatched regions '{a.id}'/'{b.id}' "
            f"({a.colour_class} vs {b.colour_class})")
    return HOLDS if _euclid(a.centroid, b.centroid) <= epsilon else HOLDS_NOT


# ---------------------------------------------------------------------------
# the instantiation transform


def relational_diagnostics(spec: NetworkSpec) -> list[str]:
    """Invariants specific to relational specs (relation nodes and bindings)."""
    diags: list[str] = []
    by_id = {n.id: n for n in spec.nodes}
    children: dict[str, int] = {n.id: 0 for n in spec.nodes}
    for n in spec.nodes:
        for p in n.parents:
            if p in children:
                children[p] += 1

    for n in spec.nodes:
        if n.kind != "relation":
            continue
        if n.evaluator is None:
            diags.append(f"relation node {n.id}: missing evaluator")
            continue
        want = RELATION_STATES.get(n.evaluator)
        if want is None:
            diags.append(f"relation node {n.id}: unknown evaluator '{n.evaluator}'")
            continue
        if len(n.inputs) != 2:
            diags.append(f"relation node {n.id}: expected 2 inputs, got {len(n.inputs)}")
        for i in n.inputs:
            other = by_id.get(i)
            if other is None or other.kind != "chance" or children.get(i, 0) > 0:
                diags.append(f"relation node {n.id}: input '{i}' is not a feature (leaf) node")
        if set(n.states) != set(want):
            diags.append(
                f"relation node {n.id}: states must be {{{', '.join(want)}}} for evaluator '{n.evaluator}'")
        for key, value in n.params.items():
            if key not in ("tau", "epsilon"):
                diags.append(f"relation node {n.id}: unknown param '{key}'")
            elif value <= 0:
                diags.append(f"relation node {n.id}: param '{key}' must be strictly positive")

    for fid, pred in spec.bind.items():
        node = by_id[fid]
        if node.kind != "chance" or children.get(fid, 0) > 0:
            diags.append(f"bound node {fid}: not a feature (leaf) node")
        if set(node.states) != set(FEATURE_STATES):
            diags.append(f"bound node {fid}: states must be {{present, absent}}")
        for attr, want in pred.items():
            if attr != "colour_class":
                diags.append(f"bound node {fid}: unknown predicate attribute '{attr}'")
                continue
            values = want if isinstance(want, (tuple, list)) else (want,)
            for v in values:
                if v not in COLOUR_CLASSES:
                    diags.append(f"bound node {fid}: unknown colour class '{v}'")
    return diags


def _matches(pred: Mapping[str, Any], region: Region) -> bool:
    for attr, want in pred.items():
        got = getattr(region, attr)
        if isinstance(want, (tuple, list)):
            if got not in want:
                return False
        elif got != want:
            return False
    return True


def select_region(pred: Mapping[str, Any], regions: Sequence[Region]) -> Region | None:
    """The region bound by a predicate: largest area, ties to lowest id."""
    candidates = [r for r in regions if _matches(pred, r)]
    candidates.sort(key=lambda r: (-r.area, r.id))
    return candidates[0] if candidates else None


def bind_features(spec: NetworkSpec, regions: Sequence[Region]) -> dict[str, Region | None]:
    """Bind each feature predicate per :func:`select_region`."""
    return {fid: select_region(pred, regions) for fid, pred in spec.bind.items()}


def relationalize(spec: NetworkSpec, regions: Sequence[Region], *,
                  tau: float | None = None, epsilon: float | None = None,
                  ) -> tuple[Network, EvidenceSet]:
    """Instantiate relation nodes from the scene and drop the functional links.

    Returns the plain tree network (relation CPTs intact) plus an evidence set
    clamping every bound feature to present/absent and every fully-bound
    relation node to its evaluated value.  Relation nodes with an unmatched
    input stay unobserved: the feature node already carries the absence
    evidence, and clamping the relation too would double-count it.

    ``tau``/``epsilon`` override the per-node params (used by CLI flags).
    """
    diags = network_diagnostics(spec) + relational_diagnostics(spec)
    if diags:
        raise InvalidNetworkError(diags)
    net = validate_network(spec)
    bound = bind_features(spec, regions)

    assignments: dict[str, str] = {}
    for fid in spec.bind:
        assignments[fid] = PRESENT if bound[fid] is not None else ABSENT
    for n in spec.nodes:
        if n.kind != "relation":
            continue
        pair = [bound.get(i) for i in n.inputs]
        if any(r is None for r in pair):
            continue
        assignments[n.id] = eval_relation(
            n.evaluator, pair[0], pair[1],
            tau=tau if tau is not None else n.params.get("tau", DEFAULT_TAU),
            epsilon=epsilon if epsilon is not None else n.params.get("epsilon", DEFAULT_EPSILON),
        )
    return net, EvidenceSet(assignments)
