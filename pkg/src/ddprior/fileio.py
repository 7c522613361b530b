"""Reading and writing networks, data, prior configurations and results.

Networks, prior configurations and scenarios are JSON documents; data and
tabular results are CSV.  Numbers are written in Python's shortest
round-trip form so that repeated runs produce identical bytes.

Network file::

    {"nodes": [{"name": "A", "domain": ["0", "1"], "parents": []}, ...]}

Prior configuration::

    {"default": {"alpha": "flat", "mu": "uniform",
                 "pi": {"pi0": 0.25, "pi1": 0.5, "pi2": 0.25},
                 "correlation_mode": "quadratic", "adjust": false},
     "nodes": {"X": {"alpha": 2, "mu": {"0": 0.5, "1": 0.5},
                     "pi": {"pi0": 0, "piW": {"A": 0.5, "B": 0.5}, "pi2": 0}}}}

A node entry may instead give a general DD prior under ``"dd"`` with keys
``alpha0`` (label -> shape), ``alphaW`` (parent -> parent label -> label ->
shape) and ``alpha2`` (one label -> shape map per CP-table row, in row order).
Node entries override the default entry key by key.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from .correlation import DEFAULT_ANCHOR, CorrelationMode
from .exceptions import DDPriorError, PriorSpecError
from .network import BeliefNet, Dataset
from .prior import DdPrior, MddPrior

__all__ = [
    "ParseError",
    "NodePriorConfig",
    "PriorConfig",
    "fmt",
    "digest",
    "load_network",
    "parse_network",
    "dump_network",
    "load_data",
    "parse_data",
    "dump_data",
    "load_prior_config",
    "parse_prior_config",
    "dump_prior_config",
    "build_prior",
]


class ParseError(DDPriorError):
    """A file could not be read as the expected format."""


def fmt(value) -> str:
    """Shortest round-trip text for a number (``nan`` for NaN)."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return repr(value)


def digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def _load_json(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what}: invalid JSON ({exc})") from exc


# -- networks ---------------------------------------------------------------

def parse_network(text: str) -> BeliefNet:
    doc = _load_json(text, "network")
    if not isinstance(doc, dict) or not isinstance(doc.get("nodes"), list):
        raise ParseError("network: expected an object with a 'nodes' array")
    entries = []
    for i, e in enumerate(doc["nodes"]):
        if not isinstance(e, dict) or "name" not in e or "domain" not in e:
            raise ParseError(f"network: node entry {i} needs 'name' and 'domain'")
        if not isinstance(e["domain"], list) or not isinstance(e.get("parents", []), list):
            raise ParseError(f"network: node entry {i}: 'domain' and 'parents' must be arrays")
        entries.append({"name": str(e["name"]), "domain": [str(v) for v in e["domain"]],
                        "parents": [str(p) for p in e.get("parents", [])]})
    return BeliefNet.from_dicts(entries)


def load_network(path) -> BeliefNet:
    return parse_network(_read_text(path))


def dump_network(net: BeliefNet) -> str:
    doc = {"nodes": [{"name": n.name, "domain": list(n.domain), "parents": list(n.parents)}
                     for n in net.nodes]}
    return json.dumps(doc, indent=2) + "\n"


# -- data -------------------------------------------------------------------

def parse_data(text: str) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("data: file is empty (a header row is required)") from None
    header = [h.strip() for h in header]
    rows = [tuple(r) for r in reader if r]
    return Dataset(tuple(header), rows)


def load_data(path) -> Dataset:
    return parse_data(_read_text(path))


def dump_data(data: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(data.columns)
    writer.writerows(data.rows)
    return buf.getvalue()


# -- prior configuration ----------------------------------------------------

@dataclass
class NodePriorConfig:
    """One entry of a prior configuration; ``None`` means inherit from the default."""

    alpha: Any = None
    mu: Any = None
    pi: Any = None
    dd: Any = None
    correlation_mode: Any = None
    anchor: Any = None
    adjust: Any = None
    seed: Any = None
    mc_samples: Any = None

    def merged(self, base: "NodePriorConfig") -> "NodePriorConfig":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        for name, value in values.items():
            if value is None:
                values[name] = getattr(base, name)
        # an explicit MDD override drops an inherited general DD block and vice versa
        if self.pi is not None and self.dd is None:
            values["dd"] = None
        if self.dd is not None and self.pi is None:
            values["pi"] = None
        return NodePriorConfig(**values)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @property
    def mode(self) -> CorrelationMode:
        return CorrelationMode.parse(self.correlation_mode or CorrelationMode.QUADRATIC_APPROX)

    @property
    def anchor_mode(self) -> CorrelationMode:
        return CorrelationMode.parse(self.anchor or DEFAULT_ANCHOR)


@dataclass
class PriorConfig:
    default: NodePriorConfig = field(default_factory=NodePriorConfig)
    nodes: dict = field(default_factory=dict)

    def for_node(self, name: str) -> NodePriorConfig:
        entry = self.nodes.get(name)
        return entry.merged(self.default) if entry is not None else self.default

    def __eq__(self, other):
        return (isinstance(other, PriorConfig) and self.default == other.default
                and self.nodes == other.nodes)


_KEYS = {f.name for f in fields(NodePriorConfig)}


def _node_config(entry, where) -> NodePriorConfig:
    if not isinstance(entry, dict):
        raise ParseError(f"prior config: {where} must be an object")
    unknown = set(entry) - _KEYS
    if unknown:
        raise ParseError(f"prior config: {where} has unknown keys {sorted(unknown)}")
    cfg = NodePriorConfig(**entry)
    if cfg.correlation_mode is not None:
        try:
            CorrelationMode.parse(cfg.correlation_mode)
        except ValueError as exc:
            raise ParseError(f"prior config: {where}: {exc}") from exc
    return cfg


def parse_prior_config(text: str) -> PriorConfig:
    doc = _load_json(text, "prior config")
    if not isinstance(doc, dict):
        raise ParseError("prior config: expected an object")
    unknown = set(doc) - {"default", "nodes"}
    if unknown:
        raise ParseError(f"prior config: unknown top-level keys {sorted(unknown)}")
    default = _node_config(doc.get("default", {}), "'default'")
    nodes = doc.get("nodes", {})
    if not isinstance(nodes, dict):
        raise ParseError("prior config: 'nodes' must be an object")
    return PriorConfig(default, {k: _node_config(v, f"node {k!r}") for k, v in nodes.items()})


def load_prior_config(path) -> PriorConfig:
    return parse_prior_config(_read_text(path))


def dump_prior_config(config: PriorConfig) -> str:
    doc = {"default": config.default.to_dict(),
           "nodes": {k: v.to_dict() for k, v in config.nodes.items()}}
    return json.dumps(doc, indent=2) + "\n"


def _label_map(values, domain, what):
    if not isinstance(values, dict) or set(values) != set(domain):
        raise PriorSpecError(f"{what} must map exactly the labels {list(domain)}")
    return np.array([float(values[x]) for x in domain])


def _alpha_mu(cfg: NodePriorConfig, domain):
    k = len(domain)
    alpha = cfg.alpha if cfg.alpha is not None else "flat"
    alpha = float(k) if alpha == "flat" else float(alpha)
    mu = cfg.mu if cfg.mu is not None else "uniform"
    mu = np.full(k, 1.0 / k) if mu == "uniform" else _label_map(mu, domain, "mu")
    return alpha, mu


def build_prior(net: BeliefNet, name: str, cfg: NodePriorConfig) -> MddPrior | DdPrior:
    """Turn a resolved node configuration into a prior for that node's CP-table."""
    node = net.node(name)
    sizes = net.parent_sizes(name)
    if cfg.dd is not None:
        dd = cfg.dd
        if not isinstance(dd, dict):
            raise PriorSpecError(f"{name}: 'dd' must be an object")
        alpha0 = _label_map(dd.get("alpha0", {x: 0 for x in node.domain}), node.domain,
                            f"{name}: alpha0")
        alpha_w = []
        aw = dd.get("alphaW", {})
        for parent in node.parents:
            pdomain = net.node(parent).domain
            table = aw.get(parent, {v: {x: 0 for x in node.domain} for v in pdomain})
            if set(table) != set(pdomain):
                raise PriorSpecError(f"{name}: alphaW[{parent}] must cover {list(pdomain)}")
            alpha_w.append(np.array([_label_map(table[v], node.domain, f"{name}: alphaW")
                                     for v in pdomain]))
        rows = dd.get("alpha2", [{x: 0 for x in node.domain}] * net.n_rows(name))
        if len(rows) != net.n_rows(name):
            raise PriorSpecError(f"{name}: alpha2 needs {net.n_rows(name)} rows")
        alpha2 = np.array([_label_map(r, node.domain, f"{name}: alpha2") for r in rows])
        return DdPrior(alpha0, alpha_w, alpha2, sizes, name)

    alpha, mu = _alpha_mu(cfg, node.domain)
    pi = cfg.pi if cfg.pi is not None else {"pi0": 0.0, "pi1": 0.0, "pi2": 1.0}
    if not isinstance(pi, dict):
        raise PriorSpecError(f"{name}: 'pi' must be an object")
    if "piW" in pi:
        pi_w = pi["piW"]
        if set(pi_w) != set(node.parents):
            raise PriorSpecError(f"{name}: piW must name exactly the parents {list(node.parents)}")
        return MddPrior(alpha, mu, float(pi.get("pi0", 0.0)),
                        [float(pi_w[p]) for p in node.parents], float(pi.get("pi2", 0.0)),
                        sizes, name)
    triple = (float(pi.get("pi0", 0.0)), float(pi.get("pi1", 0.0)), float(pi.get("pi2", 0.0)))
    return MddPrior.symmetric(alpha, mu, triple, sizes, name)
