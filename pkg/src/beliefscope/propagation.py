"""Exact posteriors on tree networks.

Two routes with identical contracts: two-pass message passing (upward
likelihood, downward prior) and a joint-enumeration oracle that materialises
the full joint table.  The oracle exists to verify the fast path and is kept
algorithmically independent of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ImpossibleEvidenceError, StateSpaceCapError
from .network import InstantiatedNetwork, Network

ENUMERATION_CAP = 1 << 20


def sig10(x: float) -> float:
    """Round to 10 significant digits, the documented output precision."""
    return float(f"{x:.10g}")


@dataclass(frozen=True, eq=False)
class Beliefs:
    """Per-node posteriors, each a probability vector in declared state order."""

    marginals: Mapping[str, np.ndarray]
    states: Mapping[str, tuple[str, ...]]

    def distribution(self, node_id: str) -> np.ndarray:
        return self.marginals[node_id]

    def probability(self, node_id: str, state: str) -> float:
        return float(self.marginals[node_id][self.states[node_id].index(state)])

    def to_document(self) -> dict:
        return {
            "beliefs": {
                nid: {s: sig10(p) for s, p in zip(self.states[nid], vec)}
                for nid, vec in self.marginals.items()
            }
        }


def _topological(net: Network) -> list[str]:
    order = [net.root]
    i = 0
    while i < len(order):
        order.extend(net.children[order[i]])
        i += 1
    return order


def _indicators(inet: InstantiatedNetwork) -> dict[str, np.ndarray]:
    out = {}
    for nid, label in inet.observed.items():
        node = inet.net.node(nid)
        vec = np.zeros(len(node.states))
        vec[node.state_index(label)] = 1.0
        out[nid] = vec
    return out


def propagate(inet: InstantiatedNetwork) -> Beliefs:
    """Exact per-node posteriors given all evidence.

    Upward pass collects likelihood messages from the leaves, downward pass
    distributes prior messages from the root; each node's posterior is the
    normalised product of the two.  Messages are renormalised at every node so
    long chains cannot underflow (posteriors are invariant to this).

    Raises ImpossibleEvidenceError, naming the node where support vanished,
    when the evidence has probability zero under the model.
    """
    net = inet.net
    order = _topological(net)
    indicator = _indicators(inet)

    lam: dict[str, np.ndarray] = {}
    lam_msg: dict[str, np.ndarray] = {}
    for nid in reversed(order):
        node = net.node(nid)
        vec = indicator.get(nid)
        vec = np.ones(len(node.states)) if vec is None else vec.copy()
        for child in net.children[nid]:
            vec *= lam_msg[child]
        total = vec.sum()
        if total <= 0.0:
            raise ImpossibleEvidenceError(nid)
        lam[nid] = vec / total
        if nid != net.root:
            msg = node.cpt @ lam[nid]
            total = msg.sum()
            if total <= 0.0:
                raise ImpossibleEvidenceError(nid)
            lam_msg[nid] = msg / total

    pi: dict[str, np.ndarray] = {net.root: net.node(net.root).cpt[0]}
    marginals: dict[str, np.ndarray] = {}
    for nid in order:
        bel = pi[nid] * lam[nid]
        total = bel.sum()
        if total <= 0.0:
            raise ImpossibleEvidenceError(nid)
        marginals[nid] = bel / total

        kids = net.children[nid]
        if not kids:
            continue
        base = pi[nid]
        own = indicator.get(nid)
        if own is not None:
            base = base * own
        for child in kids:
            msg = base.copy()
            for other in kids:
                if other != child:
                    msg *= lam_msg[other]
            total = msg.sum()
            if total <= 0.0:
                raise ImpossibleEvidenceError(nid)
            pi[child] = net.node(child).cpt.T @ (msg / total)

    return Beliefs(marginals, {n.id: n.states for n in net.nodes})


def brute_force_beliefs(inet: InstantiatedNetwork, cap: int = ENUMERATION_CAP) -> Beliefs:
    """Joint-enumeration oracle: same contract as :func:`propagate`.

    Accumulates the probability of every joint assignment consistent with the
    evidence (as a dense table of CPT-entry products) and normalises the
    per-node marginals.  Refuses joint state spaces larger than ``cap``.
    """
    net = inet.net
    sizes = [len(n.states) for n in net.nodes]
    total_states = math.prod(sizes)
    if total_states > cap:
        raise StateSpaceCapError(f"joint state space {total_states} exceeds cap {cap}")

    axis = {n.id: i for i, n in enumerate(net.nodes)}
    joint = np.ones(sizes)
    for n in net.nodes:
        shape = [1] * len(sizes)
        shape[axis[n.id]] = len(n.states)
        if n.parent is None:
            joint = joint * n.cpt[0].reshape(shape)
        else:
            pa = axis[n.parent]
            shape[pa] = len(net.node(n.parent).states)
            table = n.cpt if pa < axis[n.id] else n.cpt.T
            joint = joint * table.reshape(shape)
    for nid, label in inet.observed.items():
        node = net.node(nid)
        ind = np.zeros(len(node.states))
        ind[node.state_index(label)] = 1.0
        shape = [1] * len(sizes)
        shape[axis[nid]] = len(node.states)
        joint = joint * ind.reshape(shape)

    if joint.sum() <= 0.0:
        raise ImpossibleEvidenceError(None, "impossible evidence: total joint mass is zero")

    marginals = {}
    for n in net.nodes:
        other = tuple(i for i in range(len(sizes)) if i != axis[n.id])
        m = joint.sum(axis=other)
        marginals[n.id] = m / m.sum()
    return Beliefs(marginals, {n.id: n.states for n in net.nodes})


def map_assignment(beliefs: Beliefs) -> dict[str, str]:
    """Per-node argmax state; ties go to the lowest declared state index."""
    return {
        nid: beliefs.states[nid][int(np.argmax(vec))]
        for nid, vec in beliefs.marginals.items()
    }
