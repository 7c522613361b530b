"""Belief-net structure, CP-table row indexing and count tables.

Rows of a CP-table are enumerated in mixed-radix order over the parent
domains, last-listed parent varying fastest.  For three binary parents the
row order is 000, 001, 010, ..., 111.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import DataError, NetworkError

__all__ = [
    "NodeSpec",
    "BeliefNet",
    "Dataset",
    "CountTable",
    "ProportionTable",
    "validate_network",
    "count_tuples",
    "proportions",
]


@dataclass(frozen=True)
class NodeSpec:
    """One variable: its ordered category labels and ordered parent names."""

    name: str
    domain: tuple[str, ...]
    parents: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(str(v) for v in self.domain))
        object.__setattr__(self, "parents", tuple(str(p) for p in self.parents))


def validate_network(nodes: Sequence[NodeSpec]) -> list[str]:
    """Check structural validity and return a topological order of node names.

    Raises :class:`NetworkError` describing the first violation found:
    duplicate node names, a domain with fewer than two distinct values,
    an unknown parent, or a directed cycle (self-loops included).
    """
    if isinstance(nodes, BeliefNet):
        nodes = nodes.nodes
    by_name: dict[str, NodeSpec] = {}
    for node in nodes:
        if node.name in by_name:
            raise NetworkError(f"duplicate node name {node.name!r}")
        by_name[node.name] = node
    for node in nodes:
        if len(node.domain) < 2:
            raise NetworkError(f"node {node.name!r}: domain needs at least 2 values")
        if len(set(node.domain)) != len(node.domain):
            raise NetworkError(f"node {node.name!r}: domain values are not distinct")
        if len(set(node.parents)) != len(node.parents):
            raise NetworkError(f"node {node.name!r}: repeated parent")
        for parent in node.parents:
            if parent not in by_name:
                raise NetworkError(f"node {node.name!r}: unknown parent {parent!r}")

    # Kahn's algorithm; ties resolved by declaration order.
    indegree = {node.name: len(node.parents) for node in nodes}
    children: dict[str, list[str]] = {node.name: [] for node in nodes}
    for node in nodes:
        for parent in node.parents:
            children[parent].append(node.name)
    ready = [node.name for node in nodes if indegree[node.name] == 0]
    order = []
    while ready:
        name = ready.pop(0)
        order.append(name)
        for child in children[name]:
            indegree[child] -= 1
            if indegree[child] == 0:
                ready.append(child)
    if len(order) != len(nodes):
        stuck = [node.name for node in nodes if node.name not in order]
        raise NetworkError(f"cycle detected among nodes {stuck}")
    return order


@dataclass(frozen=True)
class BeliefNet:
    """A DAG over discrete variables; arcs are implied by parent lists."""

    nodes: tuple[NodeSpec, ...]
    order: tuple[str, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "order", tuple(validate_network(self.nodes)))

    @classmethod
    def from_dicts(cls, entries: Iterable[Mapping]) -> "BeliefNet":
        return cls(tuple(
            NodeSpec(e["name"], tuple(e["domain"]), tuple(e.get("parents", ())))
            for e in entries
        ))

    @property
    def names(self) -> list[str]:
        return [node.name for node in self.nodes]

    def node(self, name: str) -> NodeSpec:
        for node in self.nodes:
            if node.name == name:
                return node
        raise KeyError(name)

    def parent_sizes(self, name: str) -> tuple[int, ...]:
        return tuple(len(self.node(p).domain) for p in self.node(name).parents)

    def n_rows(self, name: str) -> int:
        return int(np.prod(self.parent_sizes(name), dtype=np.int64))

    def row_assignments(self, name: str) -> list[tuple[str, ...]]:
        """Parent-label tuples for every CP-table row, in row order."""
        domains = [self.node(p).domain for p in self.node(name).parents]
        return list(itertools.product(*domains))

    def row_codes(self, name: str) -> np.ndarray:
        """Integer parent codes per row, shape ``(n_rows, n_parents)``."""
        sizes = self.parent_sizes(name)
        if not sizes:
            return np.zeros((1, 0), dtype=np.int64)
        return np.array(list(itertools.product(*(range(s) for s in sizes))), dtype=np.int64)

    def row_index(self, name: str, assignment: Sequence[str]) -> int:
        """Row number for a parent assignment given as labels in parent order."""
        node = self.node(name)
        if len(assignment) != len(node.parents):
            raise ValueError(f"{name}: expected {len(node.parents)} parent values")
        codes = []
        for parent, label in zip(node.parents, assignment):
            domain = self.node(parent).domain
            if label not in domain:
                raise ValueError(f"{label!r} not in domain of {parent!r}")
            codes.append(domain.index(label))
        if not codes:
            return 0
        return int(np.ravel_multi_index(codes, self.parent_sizes(name)))


@dataclass
class Dataset:
    """Complete tuples as string labels; ``columns`` names the node of each field."""

    columns: tuple[str, ...]
    rows: list[tuple[str, ...]]

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.rows = [tuple(r) for r in self.rows]

    def __len__(self):
        return len(self.rows)

    def encode(self, net: BeliefNet) -> np.ndarray:
        """Integer codes, one column per network node in declaration order.

        Every network node must be a column; extra columns are ignored.
        """
        missing = [n for n in net.names if n not in self.columns]
        if missing:
            raise DataError(f"data has no column for node(s) {missing}")
        if len(set(self.columns)) != len(self.columns):
            raise DataError("duplicate column names in data header")
        position = {c: i for i, c in enumerate(self.columns)}
        codes = np.empty((len(self.rows), len(net.nodes)), dtype=np.int64)
        lookups = [{v: k for k, v in enumerate(node.domain)} for node in net.nodes]
        for i, record in enumerate(self.rows):
            if len(record) != len(self.columns):
                raise DataError(
                    f"record {i} has {len(record)} fields, header has {len(self.columns)}",
                    row=i,
                )
            for j, node in enumerate(net.nodes):
                value = record[position[node.name]]
                if value is None or value == "":
                    raise DataError(f"record {i}: missing value for {node.name!r}",
                                    row=i, column=node.name)
                try:
                    codes[i, j] = lookups[j][value]
                except KeyError:
                    raise DataError(
                        f"record {i}: {value!r} is not in the domain of {node.name!r}",
                        row=i, column=node.name,
                    ) from None
        return codes


@dataclass
class CountTable:
    """Counts ``m[f, x]`` for one node; rows are parent assignments."""

    node: str
    counts: np.ndarray

    @property
    def n(self) -> np.ndarray:
        """Row totals n_f."""
        return self.counts.sum(axis=1)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class ProportionTable:
    """Sample proportions ``p[f, x] = m[f, x] / n_f``; NaN on rows with n_f = 0."""

    node: str
    p: np.ndarray
    n: np.ndarray

    @property
    def active(self) -> np.ndarray:
        """Boolean mask of the active rows (n_f > 0)."""
        return self.n > 0

    @property
    def active_rows(self) -> np.ndarray:
        return np.flatnonzero(self.n > 0)


def count_tuples(net: BeliefNet, data: Dataset | np.ndarray) -> dict[str, CountTable]:
    """Count child/parent configurations for every node.

    ``data`` is either a :class:`Dataset` of labels or an already-encoded
    integer array with one column per node in declaration order.
    """
    codes = data.encode(net) if isinstance(data, Dataset) else np.asarray(data, dtype=np.int64)
    column = {name: j for j, name in enumerate(net.names)}
    tables = {}
    for node in net.nodes:
        sizes = net.parent_sizes(node.name)
        n_x = len(node.domain)
        n_rows = net.n_rows(node.name)
        if sizes:
            rows = np.ravel_multi_index(
                tuple(codes[:, column[p]] for p in node.parents), sizes
            ) if len(codes) else np.zeros(0, dtype=np.int64)
        else:
            rows = np.zeros(len(codes), dtype=np.int64)
        flat = np.bincount(rows * n_x + codes[:, column[node.name]],
                           minlength=n_rows * n_x) if len(codes) else np.zeros(n_rows * n_x, np.int64)
        tables[node.name] = CountTable(node.name, flat.reshape(n_rows, n_x).astype(np.int64))
    return tables


def proportions(counts: CountTable) -> ProportionTable:
    n = counts.n
    p = np.full(counts.counts.shape, np.nan)
    active = n > 0
    p[active] = counts.counts[active] / n[active, None]
    return ProportionTable(counts.node, p, n)
