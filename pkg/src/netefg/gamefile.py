"""Load and save network game descriptions as a single JSON document.

Three sections: agents (list of ids), edges (each referencing a game by
key), games (each a rooted node list mirroring the in-memory schema).
Shared game keys reuse one tree object, which is how agents share
information sets across their edges.  All field names are lower_snake;
numbers are plain decimal text, so fixtures diff cleanly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

from .efg import CHANCE, OWNERS, TERMINAL, GameTree, Node
from .games import NetworkDescription


class GameFileError(ValueError):
    """Malformed game document."""


def _node_to_obj(node: Node) -> dict:
    obj: dict = {"owner": node.owner}
    if node.infoset is not None:
        obj["infoset"] = node.infoset
    if node.actions:
        obj["actions"] = [{"name": a, "child": c} for a, c in node.actions]
    if node.chance_probs is not None:
        obj["chance_probs"] = {a: float(p) for a, p in node.chance_probs.items()}
    if node.payoffs is not None:
        obj["payoffs"] = [float(node.payoffs[0]), float(node.payoffs[1])]
    return obj


def _node_from_obj(obj: dict, where: str) -> Node:
    if not isinstance(obj, dict):
        raise GameFileError(f"{where}: node must be an object")
    owner = obj.get("owner")
    if owner not in OWNERS:
        raise GameFileError(f"{where}: unknown owner {owner!r}")
    actions = []
    for k, a in enumerate(obj.get("actions", [])):
        if not isinstance(a, dict) or "name" not in a or "child" not in a:
            raise GameFileError(f"{where}: action {k} needs 'name' and 'child'")
        actions.append((str(a["name"]), int(a["child"])))
    chance_probs = obj.get("chance_probs")
    if chance_probs is not None:
        chance_probs = {str(a): float(p) for a, p in chance_probs.items()}
    elif owner == CHANCE:
        raise GameFileError(f"{where}: chance node without chance_probs")
    payoffs = obj.get("payoffs")
    if payoffs is not None:
        if len(payoffs) != 2:
            raise GameFileError(f"{where}: payoffs must be a pair")
        payoffs = (float(payoffs[0]), float(payoffs[1]))
    elif owner == TERMINAL:
        raise GameFileError(f"{where}: terminal node without payoffs")
    return Node(owner=owner, infoset=obj.get("infoset"), actions=tuple(actions),
                chance_probs=chance_probs, payoffs=payoffs)


def _tree_to_obj(tree: GameTree) -> dict:
    return {"root": tree.root, "nodes": [_node_to_obj(n) for n in tree.nodes]}


def _tree_from_obj(obj: dict, where: str) -> GameTree:
    if not isinstance(obj, dict) or "nodes" not in obj:
        raise GameFileError(f"{where}: game must be an object with a 'nodes' list")
    nodes = tuple(_node_from_obj(n, f"{where}.nodes[{i}]")
                  for i, n in enumerate(obj["nodes"]))
    return GameTree(nodes=nodes, root=int(obj.get("root", 0)))


def dump(description: NetworkDescription, path: Union[str, Path]) -> None:
    """Write a description to a JSON document; identical trees on several
    edges are stored once and referenced by key."""
    games: dict[str, dict] = {}
    key_of: dict[int, str] = {}
    edges = []
    for u, v, tree in description.edges:
        key = key_of.get(id(tree))
        if key is None:
            key = f"g{u}_{v}"
            key_of[id(tree)] = key
            games[key] = _tree_to_obj(tree)
        edges.append({"u": u, "v": v, "game": key})
    doc = {
        "agents": list(description.agents),
        "edges": edges,
        "games": games,
        "metadata": dict(description.metadata),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")


def load(path: Union[str, Path]) -> NetworkDescription:
    """Parse a JSON game document into a NetworkDescription; edges that
    reference the same game key share one tree object."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise GameFileError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise GameFileError(f"{path}: top level must be an object")
    for section in ("agents", "edges", "games"):
        if section not in doc:
            raise GameFileError(f"{path}: missing section {section!r}")
    agents = tuple(doc["agents"])
    if len(set(agents)) != len(agents):
        raise GameFileError(f"{path}: duplicate agent ids")
    trees = {key: _tree_from_obj(obj, f"games[{key}]")
             for key, obj in doc["games"].items()}
    edges = []
    for i, e in enumerate(doc["edges"]):
        if not isinstance(e, dict) or not {"u", "v", "game"} <= set(e):
            raise GameFileError(f"{path}: edges[{i}] needs 'u', 'v', 'game'")
        u, v, key = e["u"], e["v"], e["game"]
        if u not in agents or v not in agents:
            raise GameFileError(f"{path}: edges[{i}] references unknown agent")
        if u == v:
            raise GameFileError(f"{path}: edges[{i}] is a self-loop")
        if key not in trees:
            raise GameFileError(f"{path}: edges[{i}] references unknown game {key!r}")
        edges.append((u, v, trees[key]))
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise GameFileError(f"{path}: metadata must be an object")
    return NetworkDescription(agents=agents, edges=tuple(edges), metadata=dict(metadata))
