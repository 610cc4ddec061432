"""树分解：读写、校验、启发式构造、二叉化定根，以及按电路门窗口切片的路径分解。"""
import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
from networkx.algorithms.approximation import treewidth_min_degree, treewidth_min_fill_in

from config import Config
from errors import (ContractViolation, DecompositionError, DisconnectedBagsError,
                    UncoveredEdgeError, UncoveredVertexError)

logger = logging.getLogger(__name__)


def make_graph(n: int, edges: Iterable[Tuple[int, int]] = ()) -> nx.Graph:
    """顶点 0..n-1 的简单无向图"""
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for u, v in edges:
        if u == v:
            raise ContractViolation(f"self-loop at vertex {u}")
        g.add_edge(int(u), int(v))
    return g


@dataclass
class TreeDecomposition:
    bags: List[Tuple[int, ...]]
    edges: List[Tuple[int, int]] = field(default_factory=list)
    root: Optional[int] = None

    def __post_init__(self):
        self.bags = [tuple(sorted(set(b))) for b in self.bags]
        self.edges = [tuple(sorted(e)) for e in self.edges]

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    def tree(self) -> nx.Graph:
        t = nx.Graph()
        t.add_nodes_from(range(len(self.bags)))
        t.add_edges_from(self.edges)
        return t

    def parents(self) -> List[Optional[int]]:
        """以 root（缺省 0）为根的父节点表"""
        root = 0 if self.root is None else self.root
        parent: List[Optional[int]] = [None] * len(self.bags)
        if not self.bags:
            return parent
        t = self.tree()
        seen = {root}
        queue = deque([root])
        while queue:
            b = queue.popleft()
            for c in sorted(t.neighbors(b)):
                if c not in seen:
                    seen.add(c)
                    parent[c] = b
                    queue.append(c)
        return parent

    def children(self) -> List[List[int]]:
        kids: List[List[int]] = [[] for _ in self.bags]
        for c, p in enumerate(self.parents()):
            if p is not None:
                kids[p].append(c)
        return kids

    def postorder(self) -> List[int]:
        if not self.bags:
            return []
        root = 0 if self.root is None else self.root
        kids = self.children()
        order: List[int] = []
        stack = [(root, False)]
        while stack:
            b, done = stack.pop()
            if done:
                order.append(b)
                continue
            stack.append((b, True))
            for c in reversed(kids[b]):
                stack.append((c, False))
        return order

    def to_dict(self):
        return {'bags': [list(b) for b in self.bags], 'edges': [list(e) for e in self.edges],
                'root': self.root, 'width': self.width}


# ===================== 校验 =====================
def validate(td: TreeDecomposition, g: nx.Graph) -> int:
    t = td.tree()
    if td.bags and (not nx.is_connected(t) or t.number_of_edges() != len(td.bags) - 1):
        logger.error(f"Bag graph with {len(td.bags)} bags and {t.number_of_edges()} edges is not a tree")
        raise DecompositionError("bag graph is not a tree")
    holders: Dict[int, List[int]] = {v: [] for v in g.nodes}
    for i, bag in enumerate(td.bags):
        for v in bag:
            holders.setdefault(v, []).append(i)
    for v in sorted(g.nodes):
        if not holders[v]:
            raise UncoveredVertexError(v)
    bag_sets = [set(b) for b in td.bags]
    for u, v in sorted(tuple(sorted(e)) for e in g.edges):
        if not any(u in b and v in b for b in bag_sets):
            raise UncoveredEdgeError(u, v)
    for v in sorted(g.nodes):
        if not nx.is_connected(t.subgraph(holders[v])):
            raise DisconnectedBagsError(v)
    return td.width


# ===================== 启发式分解 =====================
def heuristic_decompose(g: nx.Graph, strategy: str = "min-fill") -> TreeDecomposition:
    if strategy not in ("min-degree", "min-fill"):
        raise ContractViolation(f"unknown strategy {strategy!r}")
    heuristic = treewidth_min_degree if strategy == "min-degree" else treewidth_min_fill_in
    bags: List[Tuple[int, ...]] = []
    edges: List[Tuple[int, int]] = []
    anchors: List[int] = []
    for comp in sorted((sorted(c) for c in nx.connected_components(g)), key=lambda c: c[0]):
        if len(comp) == 1:
            anchors.append(len(bags))
            bags.append((comp[0],))
            continue
        sub = nx.Graph()
        sub.add_nodes_from(comp)
        sub.add_edges_from(sorted(tuple(sorted(e)) for e in g.subgraph(comp).edges))
        _, decomp = heuristic(sub)
        local = sorted(decomp.nodes, key=lambda b: (sorted(b), len(b)))
        index = {b: len(bags) + i for i, b in enumerate(local)}
        anchors.append(len(bags))
        bags.extend(tuple(sorted(b)) for b in local)
        edges.extend(sorted(tuple(sorted((index[a], index[b]))) for a, b in decomp.edges))
    if len(anchors) > 1:
        hub = len(bags)
        bags.append(())
        edges.extend((a, hub) for a in anchors)
    td = TreeDecomposition(bags, edges)
    logger.debug(f"{strategy} decomposition: {len(bags)} bags, width {td.width}")
    return td


# ===================== 二叉化与定根 =====================
def binarize_and_root(td: TreeDecomposition, tau: Optional[int] = None) -> TreeDecomposition:
    if not td.bags:
        return TreeDecomposition([()], [], 0)
    limit = td.width + 1
    if tau is not None:
        limit = min(limit, max(tau, 0) + 1)
    vertices = [v for b in td.bags for v in b]
    root = 0
    if vertices:
        lowest = min(vertices)
        root = next(i for i, b in enumerate(td.bags) if lowest in b)
    parent = TreeDecomposition(td.bags, td.edges, root).parents()

    bags: Dict[int, set] = {i: set(b) for i, b in enumerate(td.bags)}
    kids: Dict[int, List[int]] = {i: [] for i in bags}
    for c, p in enumerate(parent):
        if p is not None:
            kids[p].append(c)

    # 并集不超过 limit 的父子包合并
    queue = deque([root])
    while queue:
        b = queue.popleft()
        changed = True
        while changed:
            changed = False
            for c in list(kids[b]):
                if len(bags[b] | bags[c]) <= limit:
                    bags[b] |= bags.pop(c)
                    kids[b].remove(c)
                    kids[b].extend(kids.pop(c))
                    changed = True
        queue.extend(kids[b])

    # 重编号为 BFS 序，多于两个孩子时复制中心包
    out_bags: List[Tuple[int, ...]] = []
    out_edges: List[Tuple[int, int]] = []

    def new_bag(content) -> int:
        out_bags.append(tuple(sorted(content)))
        return len(out_bags) - 1

    queue = deque([(root, new_bag(bags[root]))])
    while queue:
        old, new = queue.popleft()
        children = sorted(kids[old], key=lambda c: min(bags[c], default=-1))
        holder = new
        while len(children) > 2:
            c = children.pop(0)
            nc = new_bag(bags[c])
            out_edges.append((holder, nc))
            queue.append((c, nc))
            dup = new_bag(bags[old])
            out_edges.append((holder, dup))
            holder = dup
        for c in children:
            nc = new_bag(bags[c])
            out_edges.append((holder, nc))
            queue.append((c, nc))
    result = TreeDecomposition(out_bags, out_edges, 0)
    n = len(set(vertices))
    budget = Config.BINARIZE_BAG_FACTOR * n // max(td.width, 1) + len(td.bags)
    if len(out_bags) > budget:
        logger.warning(f"Binarized decomposition has {len(out_bags)} bags, above budget {budget}")
    logger.debug(f"Binarized: {len(td.bags)} -> {len(out_bags)} bags, width {result.width}")
    return result


# ===================== 电路切片 =====================
def slices_from_births(g: nx.Graph, births: Sequence[int], window: int) -> TreeDecomposition:
    """每个顶点占据 [birth, 邻居最大 birth] 区间，按 window 个门切成路径分解。

    时刻 0 为输入边界，最大时刻为输出边界，二者分别并入第一个和最后一个门窗口
    """
    window = max(window, 1)
    last: Dict[int, int] = {}
    for v in g.nodes:
        last[v] = max([births[v]] + [births[u] for u in g.neighbors(v)])
    top = max(last.values(), default=0)

    def slot(t: int) -> int:
        return (min(max(t, 1), max(top - 1, 1)) - 1) // window

    count = slot(top) + 1
    bags: List[List[int]] = [[] for _ in range(count)]
    for v in sorted(g.nodes):
        for w in range(slot(births[v]), slot(last[v]) + 1):
            bags[w].append(v)
    edges = [(w, w + 1) for w in range(count - 1)]
    return TreeDecomposition([tuple(b) for b in bags], edges, 0)


def circuit_slices(circuit) -> TreeDecomposition:
    """电路约化图的路径分解，包为连续的门窗口"""
    g, births = circuit.reduction_graph()
    td = slices_from_births(g, births, 2 * max(circuit.n, 1))
    logger.info(f"Circuit slices: {len(td.bags)} windows, width {td.width}")
    return td


# ===================== 文件格式 =====================
def read_graph(path: Path) -> nx.Graph:
    """DIMACS 风格边表（1 起始）读入为 0 起始的图"""
    g = None
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            entries = line.strip().split()
            if not entries or entries[0] == "c":
                continue
            if entries[0] == "p":
                n = int(entries[-2])
                g = make_graph(n)
            elif entries[0] == "e" or len(entries) == 2:
                if g is None:
                    raise ContractViolation(f"{path}:{line_no}: edge before header")
                u, v = int(entries[-2]) - 1, int(entries[-1]) - 1
                if u == v:
                    raise ContractViolation(f"{path}:{line_no}: self-loop")
                g.add_edge(u, v)
    if g is None:
        raise ContractViolation(f"{path}: missing 'p' header")
    return g


def write_graph(g: nx.Graph, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"p {g.number_of_nodes()} {g.number_of_edges()}\n")
        for u, v in sorted(tuple(sorted(e)) for e in g.edges):
            f.write(f"e {u + 1} {v + 1}\n")


def read_td(path: Path) -> TreeDecomposition:
    bags: Dict[int, Tuple[int, ...]] = {}
    edges: List[Tuple[int, int]] = []
    count = None
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            entries = line.strip().split()
            if not entries or entries[0] == "c":
                continue
            if entries[0] == "s":
                count = int(entries[2])
            elif entries[0] == "b":
                bags[int(entries[1]) - 1] = tuple(int(v) - 1 for v in entries[2:])
            else:
                edges.append((int(entries[0]) - 1, int(entries[1]) - 1))
    if count is None:
        raise ContractViolation(f"{path}: missing 's td' header")
    return TreeDecomposition([bags.get(i, ()) for i in range(count)], edges)


def write_td(td: TreeDecomposition, path: Path, n_vertices: int) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"s td {len(td.bags)} {td.width + 1} {n_vertices}\n")
        for i, bag in enumerate(td.bags):
            f.write(" ".join(["b", str(i + 1)] + [str(v + 1) for v in bag]) + "\n")
        for a, b in td.edges:
            f.write(f"{a + 1} {b + 1}\n")
