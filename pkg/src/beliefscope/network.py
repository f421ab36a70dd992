"""Network data model: the JSON document format, parsing, validation and evidence.

Parsing is purely syntactic (shape, types, references); every numerical and
structural invariant lives in :func:`network_diagnostics` so that a bad
document is reported with all of its problems at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

import numpy as np

from .errors import EvidenceError, InvalidNetworkError, SpecSyntaxError

ROW_SUM_TOL = 1e-9

NODE_KINDS = ("chance", "relation")

_TOP_KEYS = {"root", "nodes", "bind"}
_CHANCE_KEYS = {"id", "kind", "states", "parent", "prior", "cpt"}
_RELATION_KEYS = _CHANCE_KEYS | {"evaluator", "inputs", "params"}


@dataclass(frozen=True)
class NodeSpec:
    """One node of a parsed network document.

    ``rows`` holds the prior (a single row) for parentless nodes, otherwise one
    distribution per parent state.  ``parents`` normally has 0 or 1 entries;
    more are expressible so validation can report them.
    """

    id: str
    kind: str
    states: tuple[str, ...]
    parents: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]
    evaluator: str | None = None
    inputs: tuple[str, ...] = ()
    params: Mapping[str, float] = field(default_factory=dict)

    @property
    def parent(self) -> str | None:
        return self.parents[0] if self.parents else None


@dataclass(frozen=True)
class NetworkSpec:
    """Parsed, not yet validated, network document.

    ``bind`` maps feature node ids to region-attribute predicates and is only
    meaningful for relational models (see :mod:`beliefscope.relational`).
    """

    root: str
    nodes: tuple[NodeSpec, ...]
    bind: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)

    def node(self, node_id: str) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def with_root_prior(self, prior) -> "NetworkSpec":
        """Copy of this spec with the root's prior row replaced."""
        nodes = tuple(
            replace(n, rows=(tuple(float(p) for p in prior),)) if n.id == self.root else n
            for n in self.nodes
        )
        return replace(self, nodes=nodes)


@dataclass(frozen=True)
class EvidenceSet:
    """Observed state assignments for a subset of nodes."""

    assignments: Mapping[str, str] = field(default_factory=dict)

    def to_document(self) -> dict:
        return {"assignments": dict(self.assignments)}


@dataclass(frozen=True, eq=False)
class Node:
    """Validated node: CPT as a read-only array of shape (rows, n_states)."""

    id: str
    kind: str
    states: tuple[str, ...]
    parent: str | None
    cpt: np.ndarray
    evaluator: str | None = None
    inputs: tuple[str, ...] = ()
    params: Mapping[str, float] = field(default_factory=dict)

    def state_index(self, label: str) -> int:
        return self.states.index(label)


@dataclass(frozen=True, eq=False)
class Network:
    """Validated tree network; immutable and safe to share."""

    root: str
    nodes: tuple[Node, ...]
    by_id: Mapping[str, Node]
    children: Mapping[str, tuple[str, ...]]

    def node(self, node_id: str) -> Node:
        return self.by_id[node_id]


@dataclass(frozen=True, eq=False)
class InstantiatedNetwork:
    """A network annotated with observed states; CPTs are untouched."""

    net: Network
    observed: Mapping[str, str]


# ---------------------------------------------------------------------------
# parsing


def _checked_object(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise SpecSyntaxError(f"duplicate key '{k}'")
        out[k] = v
    return out


def load_json(text: str):
    """json.loads with duplicate-key detection and positioned syntax errors."""
    try:
        return json.loads(text, object_pairs_hook=_checked_object)
    except json.JSONDecodeError as exc:
        raise SpecSyntaxError(exc.msg, line=exc.lineno, column=exc.colno) from None


def _require(cond: bool, message: str):
    if not cond:
        raise SpecSyntaxError(message)


def _check_keys(obj: dict, allowed: set, where: str):
    for key in obj:
        _require(key in allowed, f"{where}: unknown field '{key}'")


def _as_number(value, where: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool), f"{where}: expected a number")
    return float(value)


def _as_row(value, where: str) -> tuple[float, ...]:
    _require(isinstance(value, list), f"{where}: expected a list of numbers")
    return tuple(_as_number(v, where) for v in value)


def _as_str_list(value, where: str) -> tuple[str, ...]:
    _require(isinstance(value, list) and all(isinstance(s, str) for s in value), f"{where}: expected a list of strings")
    return tuple(value)


def _parse_node(obj, declared_kind_check=True) -> NodeSpec:
    _require(isinstance(obj, dict), "node entries must be objects")
    _require(isinstance(obj.get("id"), str) and obj["id"], "node: 'id' must be a non-empty string")
    nid = obj["id"]
    where = f"node '{nid}'"
    kind = obj.get("kind")
    _require(kind in NODE_KINDS, f"{where}: 'kind' must be one of {NODE_KINDS}")
    _check_keys(obj, _RELATION_KEYS if kind == "relation" else _CHANCE_KEYS, where)
    states = _as_str_list(obj.get("states", []), f"{where}: 'states'")
    _require("states" in obj, f"{where}: missing 'states'")

    parents: tuple[str, ...] = ()
    if "parent" in obj:
        p = obj["parent"]
        if isinstance(p, str):
            parents = (p,)
        elif isinstance(p, list) and all(isinstance(x, str) for x in p):
            parents = tuple(p)
        else:
            raise SpecSyntaxError(f"{where}: 'parent' must be a node id or list of node ids")

    _require(("prior" in obj) != ("cpt" in obj), f"{where}: exactly one of 'prior'/'cpt' required")
    if "prior" in obj:
        rows = (_as_row(obj["prior"], f"{where}: 'prior'"),)
    else:
        cpt = obj["cpt"]
        _require(isinstance(cpt, list), f"{where}: 'cpt' must be a list of rows")
        rows = tuple(_as_row(r, f"{where}: 'cpt' row") for r in cpt)

    evaluator = None
    inputs: tuple[str, ...] = ()
    params: dict[str, float] = {}
    if kind == "relation":
        if "evaluator" in obj:
            _require(isinstance(obj["evaluator"], str), f"{where}: 'evaluator' must be a string")
            evaluator = obj["evaluator"]
        if "inputs" in obj:
            inputs = _as_str_list(obj["inputs"], f"{where}: 'inputs'")
        if "params" in obj:
            _require(isinstance(obj["params"], dict), f"{where}: 'params' must be an object")
            params = {k: _as_number(v, f"{where}: param '{k}'") for k, v in obj["params"].items()}

    return NodeSpec(nid, kind, states, parents, rows, evaluator, inputs, params)


def _parse_bind(obj, ids: set[str]) -> dict:
    _require(isinstance(obj, dict), "'bind' must be an object")
    bind = {}
    for fid, pred in obj.items():
        _require(fid in ids, f"bind: undeclared node '{fid}'")
        _require(isinstance(pred, dict), f"bind '{fid}': predicate must be an object")
        clean = {}
        for attr, want in pred.items():
            if isinstance(want, str):
                clean[attr] = want
            elif isinstance(want, list) and all(isinstance(w, str) for w in want):
                clean[attr] = tuple(want)
            else:
                raise SpecSyntaxError(f"bind '{fid}': value for '{attr}' must be a string or list of strings")
        bind[fid] = clean
    return bind


def network_spec_from_document(doc) -> NetworkSpec:
    """Build a NetworkSpec from a decoded JSON document (syntactic checks only)."""
    _require(isinstance(doc, dict), "network document must be a JSON object")
    _check_keys(doc, _TOP_KEYS, "document")
    _require(isinstance(doc.get("root"), str), "document: 'root' must be a node id")
    _require(isinstance(doc.get("nodes"), list), "document: 'nodes' must be a list")

    nodes = tuple(_parse_node(obj) for obj in doc["nodes"])
    ids = set()
    for n in nodes:
        _require(n.id not in ids, f"duplicate node id '{n.id}'")
        ids.add(n.id)
    for n in nodes:
        for p in n.parents:
            _require(p in ids, f"node '{n.id}': undeclared parent '{p}'")
        for i in n.inputs:
            _require(i in ids, f"node '{n.id}': undeclared input '{i}'")
    _require(doc["root"] in ids, f"undeclared root '{doc['root']}'")

    bind = _parse_bind(doc.get("bind", {}), ids)
    return NetworkSpec(doc["root"], nodes, bind)


def parse_network_spec(text: str) -> NetworkSpec:
    """Parse a network-spec document; raises SpecSyntaxError with position on bad JSON."""
    return network_spec_from_document(load_json(text))


def serialize_network_spec(spec: NetworkSpec) -> str:
    return json.dumps(network_spec_to_document(spec), indent=2)


def network_spec_to_document(spec: NetworkSpec) -> dict:
    nodes = []
    for n in spec.nodes:
        obj: dict[str, Any] = {"id": n.id, "kind": n.kind, "states": list(n.states)}
        if len(n.parents) == 1:
            obj["parent"] = n.parents[0]
        elif n.parents:
            obj["parent"] = list(n.parents)
        if n.parents:
            obj["cpt"] = [list(r) for r in n.rows]
        else:
            obj["prior"] = list(n.rows[0])
        if n.kind == "relation":
            if n.evaluator is not None:
                obj["evaluator"] = n.evaluator
            if n.inputs:
                obj["inputs"] = list(n.inputs)
            if n.params:
                obj["params"] = dict(n.params)
        nodes.append(obj)
    doc: dict[str, Any] = {"root": spec.root, "nodes": nodes}
    if spec.bind:
        doc["bind"] = {f: {a: (list(v) if isinstance(v, tuple) else v) for a, v in p.items()}
                       for f, p in spec.bind.items()}
    return doc


def parse_evidence(text: str) -> EvidenceSet:
    doc = load_json(text)
    _require(isinstance(doc, dict) and set(doc) == {"assignments"}, "evidence document must be {\"assignments\": {...}}")
    asg = doc["assignments"]
    _require(isinstance(asg, dict) and all(isinstance(v, str) for v in asg.values()),
             "evidence assignments must map node ids to state labels")
    return EvidenceSet(dict(asg))


# ---------------------------------------------------------------------------
# validation


def _fmt_labels(labels) -> str:
    return "{" + ",".join(labels) + "}"


def network_diagnostics(spec: NetworkSpec) -> list[str]:
    """Every violated Network invariant, aggregated (empty list means valid)."""
    diags: list[str] = []
    by_id = {n.id: n for n in spec.nodes}

    for n in spec.nodes:
        if len(n.states) < 2:
            diags.append(f"node {n.id}: fewer than 2 states")
        seen = set()
        for s in n.states:
            if s in seen:
                diags.append(f"node {n.id}: duplicate state label '{s}'")
            seen.add(s)
        if len(n.parents) > 1:
            diags.append(f"node {n.id} has {len(n.parents)} parents; tree required")

    parentless = [n.id for n in spec.nodes if not n.parents]
    if not parentless:
        diags.append("no root: every node declares a parent")
    elif len(parentless) > 1:
        diags.append(f"multiple roots: {', '.join(parentless)} (exactly one parentless node required)")
    elif parentless[0] != spec.root:
        diags.append(f"declared root '{spec.root}' is not the parentless node ('{parentless[0]}')")

    # reachability via all declared parent edges; unreachable nodes sit on cycles
    children: dict[str, list[str]] = {n.id: [] for n in spec.nodes}
    for n in spec.nodes:
        for p in n.parents:
            children[p].append(n.id)
    reached = set(parentless)
    queue = list(parentless)
    while queue:
        for c in children[queue.pop()]:
            if c not in reached:
                reached.add(c)
                queue.append(c)
    stranded = [n.id for n in spec.nodes if n.id not in reached]
    if stranded:
        diags.append(f"cycle detected: {', '.join(stranded)} unreachable from the root")

    for n in spec.nodes:
        expected_rows = 1 if not n.parents else (
            len(by_id[n.parents[0]].states) if len(n.parents) == 1 else None)
        if expected_rows is not None and len(n.rows) != expected_rows:
            if n.parents:
                diags.append(f"node {n.id}: {len(n.rows)} cpt rows, parent '{n.parents[0]}' has {expected_rows} states")
            else:
                diags.append(f"node {n.id}: {len(n.rows)} rows, expected 1 (root prior)")
        for i, row in enumerate(n.rows):
            if len(row) != len(n.states):
                diags.append(f"node {n.id}: row {i} has {len(row)} entries, {len(n.states)} states declared")
                continue
            bad = [v for v in row if not (0.0 <= v <= 1.0)]
            if bad:
                diags.append(f"node {n.id}: cpt entry {bad[0]:g} outside [0,1] (row {i})")
                continue
            s = sum(row)
            if abs(s - 1.0) > ROW_SUM_TOL:
                diags.append(f"node {n.id}: row sum {s:g} != 1 (row {i})")
    return diags


def validate_network(spec: NetworkSpec) -> Network:
    """Check every invariant; on success build a Network with rows renormalised.

    Raises InvalidNetworkError carrying the full diagnostic list on failure.
    """
    diags = network_diagnostics(spec)
    if diags:
        raise InvalidNetworkError(diags)

    nodes = []
    for n in spec.nodes:
        cpt = np.asarray(n.rows, dtype=float)
        cpt = cpt / cpt.sum(axis=1, keepdims=True)
        cpt.flags.writeable = False
        nodes.append(Node(n.id, n.kind, n.states, n.parent, cpt, n.evaluator, n.inputs, dict(n.params)))
    by_id = {n.id: n for n in nodes}
    children: dict[str, list[str]] = {n.id: [] for n in nodes}
    for n in nodes:
        if n.parent is not None:
            children[n.parent].append(n.id)
    return Network(spec.root, tuple(nodes), by_id, {k: tuple(v) for k, v in children.items()})


def apply_evidence(net: Network, ev: EvidenceSet) -> InstantiatedNetwork:
    """Clamp observed nodes; pure annotation, never touches CPTs."""
    observed: dict[str, str] = {}
    for nid, label in ev.assignments.items():
        node = net.by_id.get(nid)
        if node is None:
            raise EvidenceError(f"unknown node '{nid}'")
        if label not in node.states:
            raise EvidenceError(f"node '{nid}': state '{label}' not in {_fmt_labels(node.states)}")
        observed[nid] = label
    return InstantiatedNetwork(net, observed)
