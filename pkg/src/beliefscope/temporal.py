"""Temporal recognition over frame streams.

Semi-static filtering rolls each frame's posterior into the next frame's
prior through a transition table; dynamic recognition builds one tree over a
window of frames, with a per-frame presence node and an inter-frame relation
node per consecutive matched pair.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import (
    BeliefscopeError,
    FrameInferenceError,
    ImpossibleEvidenceError,
    InvalidNetworkError,
    SpecSyntaxError,
    StreamValidationError,
)
from .network import (
    EvidenceSet,
    Network,
    NetworkSpec,
    NodeSpec,
    ROW_SUM_TOL,
    apply_evidence,
    load_json,
    network_diagnostics,
    network_spec_from_document,
    network_spec_to_document,
    validate_network,
)
from .propagation import propagate, sig10
from .relational import (
    COLOUR_CLASSES,
    DEFAULT_EPSILON,
    DEFAULT_TAU,
    FEATURE_STATES,
    PRESENT,
    ABSENT,
    RELATION_STATES,
    Region,
    bind_features,
    eval_relation,
    region_from_document,
    region_to_document,
    relational_diagnostics,
    relationalize,
    select_region,
)

MODES = ("paper", "filter")

DEFAULT_MATCH_DELTA = 10.0
DEFAULT_AREA_RATIO = (0.5, 2.0)
DEFAULT_MAX_WINDOW = 5


@dataclass(frozen=True, eq=False)
class Frame:
    """Time-indexed set of regions."""

    index: int
    t: float
    regions: tuple[Region, ...] = ()

    def __post_init__(self):
        if self.index < 0:
            raise StreamValidationError(f"frame index {self.index} must be >= 0")
        seen = set()
        for r in self.regions:
            if r.id in seen:
                raise StreamValidationError(f"frame {self.index}: duplicate region id '{r.id}'")
            seen.add(r.id)


@dataclass(frozen=True, eq=False)
class FrameStream:
    """Ordered frames with a nominal inter-frame interval ``dt`` (seconds)."""

    frames: tuple[Frame, ...]
    dt: float

    def __post_init__(self):
        if self.dt <= 0:
            raise StreamValidationError("dt must be positive")
        for a, b in zip(self.frames, self.frames[1:]):
            if b.index <= a.index:
                raise StreamValidationError(
                    f"frame indices out of order: {a.index} followed by {b.index}")
            if abs((b.t - a.t) - self.dt) > 0.1 * self.dt:
                raise StreamValidationError(
                    f"interval {b.t - a.t:g} between frames {a.index} and {b.index} "
                    f"deviates from dt {self.dt:g} by more than 10%")


def parse_stream(text: str) -> FrameStream:
    """Parse a JSONL stream: a {"dt": ...} header line then one frame per line."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SpecSyntaxError("empty stream document")
    header = load_json(lines[0])
    if not (isinstance(header, dict) and set(header) == {"dt"}):
        raise SpecSyntaxError('stream header must be {"dt": ...}')
    frames = []
    for lineno, line in enumerate(lines[1:], start=2):
        obj = load_json(line)
        if not (isinstance(obj, dict) and set(obj) <= {"index", "t", "regions"}
                and {"index", "t"} <= set(obj)):
            raise SpecSyntaxError(f"stream line {lineno}: expected index, t, regions")
        regions = tuple(region_from_document(r) for r in obj.get("regions", []))
        frames.append(Frame(int(obj["index"]), float(obj["t"]), regions))
    return FrameStream(tuple(frames), float(header["dt"]))


def stream_to_jsonl(stream: FrameStream) -> str:
    lines = [json.dumps({"dt": stream.dt})]
    for f in stream.frames:
        lines.append(json.dumps(
            {"index": f.index, "t": f.t, "regions": [region_to_document(r) for r in f.regions]}))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# semi-static filtering


def semi_static_prior(prior, transition, prev_belief, mode: str = "paper") -> np.ndarray:
    """Effective prior for the current frame.

    mode="paper": static prior times the transition-mixed previous posterior,
    normalised.  mode="filter": the transition-mixed previous posterior alone
    (standard forward filtering).  ``transition`` rows are indexed by the
    previous state.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    prior = np.asarray(prior, dtype=float)
    trans = np.asarray(transition, dtype=float)
    prev = np.asarray(prev_belief, dtype=float)
    k = prior.shape[0] if prior.ndim == 1 else 0
    if prior.ndim != 1 or prev.shape != (k,) or trans.shape != (k, k):
        raise ValueError("dimension mismatch between prior, transition and previous belief")
    mixed = prev @ trans
    eff = prior * mixed if mode == "paper" else mixed
    total = eff.sum()
    if total <= 0.0:
        raise ImpossibleEvidenceError(None, "effective prior has zero mass")
    return eff / total


@dataclass(frozen=True, eq=False)
class TemporalModel:
    """Per-frame relational spec plus the hypothesis transition table."""

    per_frame: NetworkSpec
    transition: np.ndarray
    mode: str = "paper"

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidNetworkError([f"mode must be one of {MODES}"])
        states = self.per_frame.node(self.per_frame.root).states
        trans = np.asarray(self.transition, dtype=float)
        diags = []
        k = len(states)
        if trans.shape != (k, k):
            diags.append(f"transition must be {k}x{k} over the hypothesis states")
        else:
            for i, row in enumerate(trans):
                if abs(row.sum() - 1.0) > ROW_SUM_TOL:
                    diags.append(f"transition: row sum {row.sum():g} != 1 (row {i})")
                if ((row < 0) | (row > 1)).any():
                    diags.append(f"transition: entry outside [0,1] (row {i})")
        if diags:
            raise InvalidNetworkError(diags)
        trans = trans / trans.sum(axis=1, keepdims=True)
        trans.flags.writeable = False
        object.__setattr__(self, "transition", trans)

    @property
    def hypothesis(self) -> str:
        return self.per_frame.root


@dataclass(frozen=True, eq=False)
class FrameBelief:
    index: int
    posterior: np.ndarray
    effective_prior: np.ndarray
    bindings: Mapping[str, str | None]


@dataclass(frozen=True, eq=False)
class BeliefTrace:
    """Per-frame posterior over the hypothesis states."""

    hypothesis: str
    states: tuple[str, ...]
    frames: tuple[FrameBelief, ...]

    def to_jsonl(self) -> str:
        lines = []
        for fb in self.frames:
            lines.append(json.dumps({
                "index": fb.index,
                "posterior": {s: sig10(p) for s, p in zip(self.states, fb.posterior)},
                "effective_prior": {s: sig10(p) for s, p in zip(self.states, fb.effective_prior)},
                "bindings": dict(fb.bindings),
            }))
        return "\n".join(lines) + "\n"


def filter_stream(model: TemporalModel, stream: FrameStream, *,
                  tau: float | None = None, epsilon: float | None = None) -> BeliefTrace:
    """Semi-static recognition over a stream.

    Frame 0 uses the static prior; every later frame replaces the hypothesis
    prior with :func:`semi_static_prior` over the previous posterior, then
    runs the per-frame scene through relationalize + propagate.
    """
    if not stream.frames:
        raise StreamValidationError("stream is empty")
    spec = model.per_frame
    diags = network_diagnostics(spec) + relational_diagnostics(spec)
    if diags:
        raise InvalidNetworkError(diags)
    root = spec.node(spec.root)
    static_prior = np.asarray(root.rows[0], dtype=float)
    static_prior = static_prior / static_prior.sum()

    entries = []
    prev: np.ndarray | None = None
    for frame in stream.frames:
        if prev is None:
            eff = static_prior
        else:
            eff = semi_static_prior(static_prior, model.transition, prev, model.mode)
        try:
            net, ev = relationalize(spec.with_root_prior(eff), frame.regions,
                                    tau=tau, epsilon=epsilon)
            beliefs = propagate(apply_evidence(net, ev))
        except BeliefscopeError as exc:
            raise FrameInferenceError(frame.index, exc) from exc
        bound = bind_features(spec, frame.regions)
        post = beliefs.distribution(spec.root)
        entries.append(FrameBelief(frame.index, post, eff,
                                   {f: (r.id if r is not None else None) for f, r in bound.items()}))
        prev = post
    return BeliefTrace(spec.root, root.states, tuple(entries))


# ---------------------------------------------------------------------------
# cross-frame matching and dynamic recognition


def match_regions(prev: Frame, cur: Frame, *, delta: float = DEFAULT_MATCH_DELTA,
                  area_ratio: tuple[float, float] = DEFAULT_AREA_RATIO) -> dict[str, str]:
    """Greedy matching by ascending centroid distance.

    A pair is admissible iff same colour class, area ratio within
    ``area_ratio`` and centroid distance <= ``delta``; each region is matched
    at most once; ties break on the lowest (prev id, cur id) pair.
    """
    candidates = []
    for p in prev.regions:
        for c in cur.regions:
            if p.colour_class != c.colour_class:
                continue
            ratio = c.area / p.area
            if not (area_ratio[0] <= ratio <= area_ratio[1]):
                continue
            d = math.hypot(p.centroid[0] - c.centroid[0], p.centroid[1] - c.centroid[1])
            if d > delta:
                continue
            candidates.append((d, p.id, c.id))
    candidates.sort()
    matched: dict[str, str] = {}
    used_cur: set[str] = set()
    for _, pid, cid in candidates:
        if pid in matched or cid in used_cur:
            continue
        matched[pid] = cid
        used_cur.add(cid)
    return matched


@dataclass(frozen=True, eq=False)
class DynamicModel:
    """Template for window recognition: hypothesis, per-frame presence node,
    and one inter-frame relation node per consecutive pair."""

    hypothesis_id: str
    hypothesis_states: tuple[str, ...]
    prior: tuple[float, ...]
    feature_id: str
    feature_rows: tuple[tuple[float, ...], ...]
    predicate: Mapping[str, Any]
    relation_id: str
    relation_evaluator: str
    relation_rows: tuple[tuple[float, ...], ...]
    params: Mapping[str, float] = field(default_factory=dict)
    delta: float = DEFAULT_MATCH_DELTA
    max_window: int = DEFAULT_MAX_WINDOW

    def __post_init__(self):
        diags = []
        if self.relation_evaluator not in ("static", "distance"):
            diags.append(f"dynamic relation evaluator must be static or distance, "
                         f"got '{self.relation_evaluator}'")
        if self.max_window < 2:
            diags.append("max_window must be >= 2")
        if self.delta <= 0:
            diags.append("match delta must be strictly positive")
        if diags:
            raise InvalidNetworkError(diags)


def window_spec(model: DynamicModel, k: int) -> NetworkSpec:
    """The tree for a k-frame window: hypothesis -> k presence nodes + k-1
    relation nodes."""
    nodes = [NodeSpec(model.hypothesis_id, "chance", tuple(model.hypothesis_states), (),
                      (tuple(model.prior),))]
    feature_ids = [f"{model.feature_id}_{i}" for i in range(k)]
    for fid in feature_ids:
        nodes.append(NodeSpec(fid, "chance", FEATURE_STATES, (model.hypothesis_id,),
                              tuple(tuple(r) for r in model.feature_rows)))
    rel_states = RELATION_STATES[model.relation_evaluator]
    for i in range(k - 1):
        nodes.append(NodeSpec(
            f"{model.relation_id}_{i}_{i + 1}", "relation", rel_states,
            (model.hypothesis_id,), tuple(tuple(r) for r in model.relation_rows),
            evaluator=model.relation_evaluator,
            inputs=(feature_ids[i], feature_ids[i + 1]),
            params=dict(model.params)))
    return NetworkSpec(model.hypothesis_id, tuple(nodes))


def dynamic_diagnostics(model: DynamicModel) -> list[str]:
    """Every violated invariant of a dynamic model (probe via a 2-frame window)."""
    spec = window_spec(model, 2)
    diags = network_diagnostics(spec) + relational_diagnostics(spec)
    for attr, want in model.predicate.items():
        if attr != "colour_class":
            diags.append(f"dynamic predicate: unknown attribute '{attr}'")
            continue
        values = want if isinstance(want, (tuple, list)) else (want,)
        for v in values:
            if v not in COLOUR_CLASSES:
                diags.append(f"dynamic predicate: unknown colour class '{v}'")
    return diags


def build_dynamic_window(model: DynamicModel, frames: Sequence[Frame], *,
                         tau: float | None = None, epsilon: float | None = None,
                         delta: float | None = None) -> tuple[Network, EvidenceSet]:
    """Tree over a window: hypothesis -> per-frame presence nodes + relation nodes.

    Presence nodes are observed present/absent from the frame's bound region;
    a relation node is observed only when the bound regions of its two frames
    match across frames, otherwise it stays unobserved.
    """
    k = len(frames)
    if k < 2:
        raise StreamValidationError("window >= 2 required")
    if k > model.max_window:
        raise StreamValidationError(f"window {k} exceeds max {model.max_window}")

    diags = dynamic_diagnostics(model)
    if diags:
        raise InvalidNetworkError(diags)
    net = validate_network(window_spec(model, k))
    feature_ids = [f"{model.feature_id}_{i}" for i in range(k)]

    bound = [select_region(model.predicate, f.regions) for f in frames]
    assignments = {fid: (PRESENT if bound[i] is not None else ABSENT)
                   for i, fid in enumerate(feature_ids)}
    eff_tau = tau if tau is not None else model.params.get("tau", DEFAULT_TAU)
    eff_eps = epsilon if epsilon is not None else model.params.get("epsilon", DEFAULT_EPSILON)
    eff_delta = delta if delta is not None else model.delta
    for i in range(k - 1):
        a, b = bound[i], bound[i + 1]
        if a is None or b is None:
            continue
        matched = match_regions(frames[i], frames[i + 1], delta=eff_delta)
        if matched.get(a.id) != b.id:
            continue
        assignments[f"{model.relation_id}_{i}_{i + 1}"] = eval_relation(
            model.relation_evaluator, a, b, tau=eff_tau, epsilon=eff_eps)
    return net, EvidenceSet(assignments)


def dynamic_trace(model: DynamicModel, stream: FrameStream, *, window: int | None = None,
                  tau: float | None = None, epsilon: float | None = None,
                  delta: float | None = None) -> BeliefTrace:
    """Sliding-window dynamic recognition; one entry per window, indexed by its
    last frame."""
    frames = stream.frames
    k = window if window is not None else model.max_window
    if k > model.max_window:
        raise StreamValidationError(f"window {k} exceeds max {model.max_window}")
    k = min(k, len(frames))
    if k < 2:
        raise StreamValidationError("window >= 2 required")

    prior = np.asarray(model.prior, dtype=float)
    prior = prior / prior.sum()
    entries = []
    for end in range(k - 1, len(frames)):
        sub = frames[end - k + 1 : end + 1]
        try:
            net, ev = build_dynamic_window(model, sub, tau=tau, epsilon=epsilon, delta=delta)
            beliefs = propagate(apply_evidence(net, ev))
        except BeliefscopeError as exc:
            raise FrameInferenceError(frames[end].index, exc) from exc
        bindings = {}
        for i, frame in enumerate(sub):
            region = select_region(model.predicate, frame.regions)
            bindings[f"{model.feature_id}_{i}"] = region.id if region is not None else None
        entries.append(FrameBelief(frames[end].index,
                                   beliefs.distribution(model.hypothesis_id), prior, bindings))
    return BeliefTrace(model.hypothesis_id, tuple(model.hypothesis_states), tuple(entries))


# ---------------------------------------------------------------------------
# model documents


def semi_static_from_document(doc) -> TemporalModel:
    if not (isinstance(doc, dict) and doc.get("type") == "semi_static"):
        raise SpecSyntaxError('semi-static model document must have "type": "semi_static"')
    for key in doc:
        if key not in {"type", "per_frame", "transition", "mode"}:
            raise SpecSyntaxError(f"semi-static model: unknown field '{key}'")
    if "per_frame" not in doc or "transition" not in doc:
        raise SpecSyntaxError("semi-static model: 'per_frame' and 'transition' required")
    spec = network_spec_from_document(doc["per_frame"])
    trans = doc["transition"]
    if not (isinstance(trans, list) and all(isinstance(r, list) for r in trans)):
        raise SpecSyntaxError("semi-static model: 'transition' must be a list of rows")
    return TemporalModel(spec, np.asarray(trans, dtype=float), doc.get("mode", "paper"))


def semi_static_to_document(model: TemporalModel) -> dict:
    return {
        "type": "semi_static",
        "mode": model.mode,
        "transition": [[float(v) for v in row] for row in model.transition],
        "per_frame": network_spec_to_document(model.per_frame),
    }


def dynamic_from_document(doc) -> DynamicModel:
    if not (isinstance(doc, dict) and doc.get("type") == "dynamic"):
        raise SpecSyntaxError('dynamic model document must have "type": "dynamic"')
    for key in doc:
        if key not in {"type", "hypothesis", "feature", "relation", "max_window", "delta"}:
            raise SpecSyntaxError(f"dynamic model: unknown field '{key}'")
    try:
        hyp, feat, rel = doc["hypothesis"], doc["feature"], doc["relation"]
        return DynamicModel(
            hypothesis_id=hyp["id"],
            hypothesis_states=tuple(hyp["states"]),
            prior=tuple(float(p) for p in hyp["prior"]),
            feature_id=feat["id"],
            feature_rows=tuple(tuple(float(v) for v in r) for r in feat["cpt"]),
            predicate={a: (tuple(v) if isinstance(v, list) else v) for a, v in feat["bind"].items()},
            relation_id=rel["id"],
            relation_evaluator=rel["evaluator"],
            relation_rows=tuple(tuple(float(v) for v in r) for r in rel["cpt"]),
            params={k: float(v) for k, v in rel.get("params", {}).items()},
            delta=float(doc.get("delta", DEFAULT_MATCH_DELTA)),
            max_window=int(doc.get("max_window", DEFAULT_MAX_WINDOW)),
        )
    except (KeyError, TypeError) as exc:
        raise SpecSyntaxError(f"malformed dynamic model document: {exc}") from None


def dynamic_to_document(model: DynamicModel) -> dict:
    rel: dict[str, Any] = {
        "id": model.relation_id,
        "evaluator": model.relation_evaluator,
        "cpt": [list(r) for r in model.relation_rows],
    }
    if model.params:
        rel["params"] = dict(model.params)
    return {
        "type": "dynamic",
        "hypothesis": {"id": model.hypothesis_id, "states": list(model.hypothesis_states),
                       "prior": list(model.prior)},
        "feature": {"id": model.feature_id, "cpt": [list(r) for r in model.feature_rows],
                    "bind": {a: (list(v) if isinstance(v, tuple) else v)
                             for a, v in model.predicate.items()}},
        "relation": rel,
        "max_window": model.max_window,
        "delta": model.delta,
    }
