"""Abstract reachability graph: nodes, coverage, error paths, DOT export."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from minicpa.cfa.model import Edge


class ArgNode:
    """One abstract state in the reachability graph."""

    __slots__ = ("node_id", "state", "parents", "children", "covered_by",
                 "covers", "alive")

    def __init__(self, node_id: int, state):
        self.node_id = node_id
        self.state = state
        self.parents: list[tuple[ArgNode, Edge]] = []
        self.children: list[tuple[Edge, ArgNode]] = []
        self.covered_by: ArgNode | None = None
        self.covers: list[ArgNode] = []
        self.alive = True

    @property
    def is_covered(self) -> bool:
        return self.covered_by is not None

    def __repr__(self):
        return f"<ArgNode {self.node_id}>"


class Arg:
    """Reachability graph rooted at the initial abstract state.

    Structural rules: acyclic over parent/child links, covered nodes are
    leaves, and every live non-root node keeps at least one live parent.
    """

    def __init__(self):
        self.nodes: list[ArgNode] = []
        self.root: ArgNode | None = None

    # -- construction --------------------------------------------------------

    def _new_node(self, state) -> ArgNode:
        node = ArgNode(len(self.nodes), state)
        self.nodes.append(node)
        return node

    def make_root(self, state) -> ArgNode:
        assert self.root is None, "ARG already has a root"
        self.root = self._new_node(state)
        return self.root

    def add_child(self, parent: ArgNode, edge: Edge, state) -> ArgNode:
        node = self._new_node(state)
        self.link(parent, edge, node)
        return node

    def link(self, parent: ArgNode, edge: Edge, child: ArgNode) -> None:
        parent.children.append((edge, child))
        child.parents.append((parent, edge))

    # -- coverage ------------------------------------------------------------

    def cover(self, node: ArgNode, coverer: ArgNode) -> None:
        assert node.covered_by is None and not node.children
        node.covered_by = coverer
        coverer.covers.append(node)

    def uncover(self, node: ArgNode) -> None:
        coverer = node.covered_by
        if coverer is not None:
            coverer.covers.remove(node)
            node.covered_by = None

    def retarget_coverage(self, old: ArgNode, new: ArgNode) -> None:
        """Point every node covered by *old* at *new* (which must cover it)."""
        for covered in list(old.covers):
            self.uncover(covered)
            self.cover(covered, new)

    # -- removal -------------------------------------------------------------

    def is_ancestor(self, node: ArgNode, descendant: ArgNode) -> bool:
        seen = set()
        todo = [descendant]
        while todo:
            cur = todo.pop()
            if cur is node:
                return True
            if cur.node_id in seen:
                continue
            seen.add(cur.node_id)
            todo.extend(p for p, _ in cur.parents if p.alive)
        return False

    def remove_subtree(self, node: ArgNode):
        """Remove *node* and every descendant reachable only through it.

        Returns (removed, orphaned) where orphaned are previously covered
        nodes whose coverer was removed; the caller must re-explore them.
        """
        removed: list[ArgNode] = []
        orphaned: list[ArgNode] = []
        queue = deque([node])
        # cut node off from its parents first
        for parent, edge in node.parents:
            parent.children = [(e, c) for e, c in parent.children
                               if c is not node]
        node.parents = []
        while queue:
            cur = queue.popleft()
            if not cur.alive:
                continue
            cur.alive = False
            removed.append(cur)
            if cur.covered_by is not None:
                self.uncover(cur)
            for covered in list(cur.covers):
                self.uncover(covered)
                if covered.alive:
                    orphaned.append(covered)
            for edge, child in cur.children:
                child.parents = [(p, e) for p, e in child.parents
                                 if p is not cur]
                if not child.parents and child is not self.root:
                    queue.append(child)
            cur.children = []
        return removed, orphaned

    # -- queries -------------------------------------------------------------

    def alive_nodes(self):
        return [n for n in self.nodes if n.alive]

    def non_covered_count(self) -> int:
        return sum(1 for n in self.nodes if n.alive and not n.is_covered)

    # -- validation ----------------------------------------------------------

    def validate(self) -> None:
        """Check the structural rules; raises AssertionError on violation."""
        assert self.root is not None and self.root.alive
        assert self.root.covered_by is None
        for node in self.nodes:
            if not node.alive:
                continue
            if node is not self.root:
                live_parents = [p for p, _ in node.parents if p.alive]
                assert live_parents, f"orphaned node {node.node_id}"
            for parent, edge in node.parents:
                assert parent.alive, f"dead parent of {node.node_id}"
                assert (edge, node) in parent.children
            for edge, child in node.children:
                assert child.alive, f"dead child of {node.node_id}"
                assert any(p is node for p, _ in child.parents), \
                    f"dangling child link {node.node_id}->{child.node_id}"
            if node.is_covered:
                assert not node.children, \
                    f"covered node {node.node_id} has children"
                assert node.covered_by.alive and not node.covered_by.is_covered
        # acyclic over child links
        state = {}  # id -> 1 (visiting) | 2 (done)
        for start in self.nodes:
            if not start.alive or state.get(start.node_id):
                continue
            stack = [(start, iter(start.children))]
            state[start.node_id] = 1
            while stack:
                node, it = stack[-1]
                advanced = False
                for _, child in it:
                    mark = state.get(child.node_id)
                    assert mark != 1, f"cycle through node {child.node_id}"
                    if mark is None:
                        state[child.node_id] = 1
                        stack.append((child, iter(child.children)))
                        advanced = True
                        break
                if not advanced:
                    state[node.node_id] = 2
                    stack.pop()


@dataclass(frozen=True)
class ErrorPath:
    """Root-to-target chain through the ARG."""

    nodes: tuple
    edges: tuple

    @property
    def target(self) -> ArgNode:
        return self.nodes[-1]

    @property
    def states(self) -> tuple:
        return tuple(n.state for n in self.nodes)

    def signature(self) -> tuple:
        return tuple(e.edge_id for e in self.edges)

    def __len__(self):
        return len(self.edges)


def extract_error_path(arg: Arg, target: ArgNode) -> ErrorPath:
    """Shortest root→target chain; ties broken by smallest parent id."""
    depth = {arg.root.node_id: 0}
    queue = deque([arg.root])
    while queue:
        node = queue.popleft()
        for _, child in node.children:
            if child.alive and child.node_id not in depth:
                depth[child.node_id] = depth[node.node_id] + 1
                queue.append(child)
    nodes = [target]
    edges = []
    node = target
    while node is not arg.root:
        d = depth[node.node_id]
        best = min(((p, e) for p, e in node.parents
                    if p.alive and depth.get(p.node_id) == d - 1),
                   key=lambda pe: pe[0].node_id)
        nodes.append(best[0])
        edges.append(best[1])
        node = best[0]
    return ErrorPath(tuple(reversed(nodes)), tuple(reversed(edges)))


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_arg_dot(arg: Arg, error_path: ErrorPath | None = None,
                   label=None) -> str:
    """Render the live part of the ARG as a DOT digraph.

    Error-path nodes and edges are drawn red; covered nodes dashed with a
    dashed link to their coverer.
    """
    if label is None:
        label = str
    on_path = set()
    path_edges = set()
    if error_path is not None:
        on_path = {n.node_id for n in error_path.nodes}
        for parent, edge, child in zip(error_path.nodes, error_path.edges,
                                       error_path.nodes[1:]):
            path_edges.add((parent.node_id, child.node_id, edge.edge_id))
    out = ["digraph ARG {", "  node [shape=box, fontname=monospace];"]
    for node in arg.nodes:
        if not node.alive:
            continue
        text = f"{node.node_id}: {label(node.state)}"
        attrs = [f'label="{_dot_escape(text)}"']
        if node.node_id in on_path:
            attrs.append('color=red')
            attrs.append('penwidth=2')
        if node.is_covered:
            attrs.append('style=dashed')
        out.append(f"  n{node.node_id} [{', '.join(attrs)}];")
    for node in arg.nodes:
        if not node.alive:
            continue
        for edge, child in node.children:
            if not child.alive:
                continue
            attrs = [f'label="{_dot_escape(edge.describe())}"']
            if (node.node_id, child.node_id, edge.edge_id) in path_edges:
                attrs.append('color=red')
                attrs.append('penwidth=2')
            out.append(f"  n{node.node_id} -> n{child.node_id} "
                       f"[{', '.join(attrs)}];")
        if node.is_covered:
            out.append(f"  n{node.node_id} -> n{node.covered_by.node_id} "
                       f'[style=dashed, label="covered by"];')
    out.append("}")
    return "\n".join(out) + "\n"
