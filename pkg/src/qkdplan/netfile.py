"""TOML network description files.

File units are km, dB, Hz, microseconds and kbit/s; the in-memory model
uses SI units.  A minimal file::

    schema_version = 1
    nodes = ["A", "B", "C"]

    [[links]]
    from = "A"
    to = "B"
    rate_kbit_s = 2.7

    [[links]]
    from = "B"
    to = "C"
    rate_kbit_s = 1.4

Links either carry a measured/assumed ``rate_kbit_s`` or physical
parameters referring to a ``[detectors.<name>]`` table.  Keys in
``[link_defaults]`` are merged into every physical link.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .backbone import CostModel
from .model import DetectorParams, LinkBudget, NoDecoy, OneWay, PlugPlay, Protocol, TwoDecoy

SCHEMA_VERSION = 1

_PHYSICAL_KEYS = {
    "length_km", "loss_db", "detector", "alpha_bob_db", "alpha_alice_db",
    "pulse_freq_hz", "scheme", "num_detectors", "n_pulses_per_train",
    "storage_line_km", "fiber_index",
}
_LINK_KEYS = _PHYSICAL_KEYS | {"from", "to", "rate_kbit_s"}
_DETECTOR_KEYS = {"eta_det", "dcr_hz", "tau_dead_us", "tau_gate_us", "visibility", "p_after"}
_TOP_KEYS = {
    "schema_version", "name", "nodes", "links", "link_defaults", "detectors",
    "protocol", "costs", "constraints",
}


def _us_to_s(v: float) -> float:
    return v / 1e6


def _s_to_us(v: float) -> float:
    # 15 significant digits undo the representation error of the division
    return float(f"{v * 1e6:.15g}")


class NetworkFileError(ValueError):
    """Raised for unreadable or inconsistent network files."""


@dataclass(frozen=True)
class LinkEntry:
    from_node: str
    to_node: str
    rate_kbit_s: float | None = None
    length_km: float | None = None
    loss_db: float | None = None
    detector: str | None = None
    budget: LinkBudget | None = None

    @property
    def name(self) -> str:
        return f"{self.from_node}-{self.to_node}"

    @property
    def is_physical(self) -> bool:
        return self.budget is not None


@dataclass(frozen=True)
class NetworkFile:
    nodes: tuple[str, ...]
    links: tuple[LinkEntry, ...]
    name: str = ""
    detectors: dict[str, DetectorParams] = field(default_factory=dict)
    protocol: Protocol | None = None
    costs: CostModel = field(default_factory=CostModel)
    locked_full: tuple[str, ...] = ()
    k_values: tuple[int, ...] = ()
    schema_version: int = SCHEMA_VERSION

    def link(self, selector: str) -> tuple[int, LinkEntry]:
        """Find a link by 1-based index, ``from-to`` name or ``from``/``to`` node."""
        if selector.isdigit():
            i = int(selector) - 1
            if not 0 <= i < len(self.links):
                raise NetworkFileError(f"link index {selector} out of range 1..{len(self.links)}")
            return i, self.links[i]
        for i, entry in enumerate(self.links):
            if selector in (entry.name, entry.from_node):
                return i, entry
        raise NetworkFileError(f"no link matches {selector!r}")

    def detector_for(self, entry: LinkEntry) -> DetectorParams:
        return self.detectors[entry.detector]


def _err(where: str, msg: str) -> NetworkFileError:
    return NetworkFileError(f"{where}: {msg}")


def _number(table: dict, key: str, where: str, *, required: bool = True, default: Any = None) -> Any:
    if key not in table:
        if required:
            raise _err(where, f"missing field '{key}'")
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _err(where, f"field '{key}' must be a number, got {value!r}")
    return value


def _check_keys(table: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise _err(where, f"unknown field(s) {', '.join(unknown)}")


def _parse_detector(name: str, table: dict) -> DetectorParams:
    where = f"detectors.{name}"
    _check_keys(table, _DETECTOR_KEYS, where)
    gate = _number(table, "tau_gate_us", where, required=False)
    try:
        return DetectorParams(
            eta_det=_number(table, "eta_det", where),
            dcr=_number(table, "dcr_hz", where),
            tau_dead=_us_to_s(_number(table, "tau_dead_us", where)),
            tau_gate=None if gate is None else _us_to_s(gate),
            visibility=_number(table, "visibility", where, required=False, default=1.0),
            p_after=_number(table, "p_after", where, required=False, default=0.0),
        )
    except NetworkFileError:
        raise
    except ValueError as exc:
        raise _err(where, str(exc)) from None


def _parse_protocol(table: dict) -> Protocol:
    where = "protocol"
    variant = table.get("variant")
    try:
        if variant == "no-decoy":
            _check_keys(table, {"variant", "mu", "f_ec"}, where)
            return NoDecoy(mu=_number(table, "mu", where),
                           f_ec=_number(table, "f_ec", where, required=False, default=1.15))
        if variant == "two-decoy":
            _check_keys(table, {"variant", "mu", "nu1", "nu2", "p_mu", "p_nu1", "f_ec"}, where)
            return TwoDecoy(
                mu=_number(table, "mu", where),
                nu1=_number(table, "nu1", where),
                nu2=_number(table, "nu2", where),
                p_mu=_number(table, "p_mu", where, required=False, default=0.5),
                p_nu1=_number(table, "p_nu1", where, required=False, default=0.25),
                f_ec=_number(table, "f_ec", where, required=False, default=1.15),
            )
    except NetworkFileError:
        raise
    except ValueError as exc:
        raise _err(where, str(exc)) from None
    raise _err(where, f"variant must be 'no-decoy' or 'two-decoy', got {variant!r}")


def _parse_link(i: int, raw: dict, defaults: dict, detectors: dict) -> LinkEntry:
    where = f"links[{i + 1}]"
    _check_keys(raw, _LINK_KEYS, where)
    for key in ("from", "to"):
        if not isinstance(raw.get(key), str):
            raise _err(where, f"field '{key}' must be a node name")
    physical = set(raw) & _PHYSICAL_KEYS
    if "rate_kbit_s" in raw:
        if physical:
            raise _err(where, f"give either rate_kbit_s or physical parameters, not both ({', '.join(sorted(physical))})")
        rate = _number(raw, "rate_kbit_s", where)
        if not rate > 0:
            raise _err(where, "rate_kbit_s must be positive")
        return LinkEntry(raw["from"], raw["to"], rate_kbit_s=rate)

    table = {**defaults, **raw}
    det_name = table.get("detector")
    if det_name not in detectors:
        raise _err(where, f"unknown detector {det_name!r}")
    scheme_name = table.get("scheme", "one-way")
    try:
        if scheme_name == "one-way":
            scheme = OneWay()
        elif scheme_name == "plug-play":
            scheme = PlugPlay(
                n_pulses_per_train=int(_number(table, "n_pulses_per_train", where, required=False, default=1200)),
                storage_line_km=_number(table, "storage_line_km", where, required=False, default=25.0),
                fiber_index=_number(table, "fiber_index", where, required=False, default=1.47),
            )
        else:
            raise _err(where, f"scheme must be 'one-way' or 'plug-play', got {scheme_name!r}")
        budget = LinkBudget(
            length_km=_number(table, "length_km", where),
            alpha_opt_db=_number(table, "loss_db", where),
            alpha_bob_db=_number(table, "alpha_bob_db", where),
            alpha_alice_db=_number(table, "alpha_alice_db", where, required=False, default=0.0),
            pulse_freq_hz=_number(table, "pulse_freq_hz", where),
            scheme=scheme,
            num_detectors=int(_number(table, "num_detectors", where, required=False, default=2)),
        )
    except NetworkFileError:
        raise
    except ValueError as exc:
        raise _err(where, str(exc)) from None
    return LinkEntry(
        raw["from"], raw["to"],
        length_km=budget.length_km, loss_db=budget.alpha_opt_db,
        detector=det_name, budget=budget,
    )


def parse(doc: dict) -> NetworkFile:
    _check_keys(doc, _TOP_KEYS, "file")
    version = doc.get("schema_version")
    if version is None:
        raise _err("file", "missing field 'schema_version'")
    if version != SCHEMA_VERSION:
        raise _err("file", f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")

    nodes = doc.get("nodes")
    if not isinstance(nodes, list) or len(nodes) < 2 or not all(isinstance(n, str) for n in nodes):
        raise _err("nodes", "expected a list of at least two node names")
    if len(set(nodes)) != len(nodes):
        raise _err("nodes", "node names must be unique")

    detectors = {name: _parse_detector(name, t) for name, t in doc.get("detectors", {}).items()}
    defaults = doc.get("link_defaults", {})
    _check_keys(defaults, _PHYSICAL_KEYS, "link_defaults")

    raw_links = doc.get("links")
    if not isinstance(raw_links, list) or not raw_links:
        raise _err("links", "expected at least one [[links]] entry")
    links = tuple(_parse_link(i, raw, defaults, detectors) for i, raw in enumerate(raw_links))
    if len(links) != len(nodes) - 1:
        raise _err("links", f"{len(nodes)} nodes need {len(nodes) - 1} links, got {len(links)}")
    for i, entry in enumerate(links):
        if (entry.from_node, entry.to_node) != (nodes[i], nodes[i + 1]):
            raise _err(f"links[{i + 1}]", f"expected {nodes[i]} -> {nodes[i + 1]}, got {entry.from_node} -> {entry.to_node}")

    protocol = _parse_protocol(doc["protocol"]) if "protocol" in doc else None
    if protocol is None and any(e.is_physical for e in links):
        raise _err("protocol", "physical links need a [protocol] block")

    costs_raw = doc.get("costs", {})
    _check_keys(costs_raw, {"alice", "bob", "switch"}, "costs")
    try:
        costs = CostModel(
            alice=_number(costs_raw, "alice", "costs", required=False, default=1.0),
            bob=_number(costs_raw, "bob", "costs", required=False, default=1.0),
            switch=_number(costs_raw, "switch", "costs", required=False, default=0.0),
        )
    except NetworkFileError:
        raise
    except ValueError as exc:
        raise _err("costs", str(exc)) from None

    cons = doc.get("constraints", {})
    _check_keys(cons, {"locked_full", "k"}, "constraints")
    locked = cons.get("locked_full", [])
    if not isinstance(locked, list) or any(n not in nodes[1:-1] for n in locked):
        raise _err("constraints.locked_full", "expected a list of intermediate node names")
    k = cons.get("k", [])
    k_values = [k] if isinstance(k, int) and not isinstance(k, bool) else k
    if not isinstance(k_values, list) or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in k_values):
        raise _err("constraints.k", "expected a non-negative integer or a list of them")

    name = doc.get("name", "")
    if not isinstance(name, str):
        raise _err("name", "expected a string")
    return NetworkFile(
        nodes=tuple(nodes), links=links, name=name, detectors=detectors,
        protocol=protocol, costs=costs, locked_full=tuple(locked),
        k_values=tuple(k_values), schema_version=version,
    )


def loads(text: str) -> NetworkFile:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise NetworkFileError(f"TOML syntax error: {exc}") from None
    return parse(doc)


def load(path: str | Path) -> NetworkFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise NetworkFileError(f"{path}: {exc.strerror}") from None
    try:
        return loads(text)
    except NetworkFileError as exc:
        raise NetworkFileError(f"{path}: {exc}") from None


def _detector_doc(det: DetectorParams) -> dict:
    doc = {"eta_det": det.eta_det, "dcr_hz": det.dcr, "tau_dead_us": _s_to_us(det.tau_dead)}
    if det.tau_gate is not None:
        doc["tau_gate_us"] = _s_to_us(det.tau_gate)
    doc["visibility"] = det.visibility
    doc["p_after"] = det.p_after
    return doc


def _link_doc(entry: LinkEntry) -> dict:
    doc: dict[str, Any] = {"from": entry.from_node, "to": entry.to_node}
    if entry.budget is None:
        doc["rate_kbit_s"] = entry.rate_kbit_s
        return doc
    b = entry.budget
    doc.update(
        length_km=b.length_km, loss_db=b.alpha_opt_db, detector=entry.detector,
        alpha_bob_db=b.alpha_bob_db, alpha_alice_db=b.alpha_alice_db,
        pulse_freq_hz=b.pulse_freq_hz, num_detectors=b.num_detectors,
    )
    if isinstance(b.scheme, PlugPlay):
        doc.update(
            scheme="plug-play",
            n_pulses_per_train=b.scheme.n_pulses_per_train,
            storage_line_km=b.scheme.storage_line_km,
            fiber_index=b.scheme.fiber_index,
        )
    else:
        doc["scheme"] = "one-way"
    return doc


def _protocol_doc(p: Protocol) -> dict:
    if isinstance(p, NoDecoy):
        return {"variant": "no-decoy", "mu": p.mu, "f_ec": p.f_ec}
    return {"variant": "two-decoy", "mu": p.mu, "nu1": p.nu1, "nu2": p.nu2,
            "p_mu": p.p_mu, "p_nu1": p.p_nu1, "f_ec": p.f_ec}


def dumps(net: NetworkFile) -> str:
    """Canonical TOML: defaults expanded, fields in a fixed order."""
    doc: dict[str, Any] = {"schema_version": net.schema_version}
    if net.name:
        doc["name"] = net.name
    doc["nodes"] = list(net.nodes)
    if net.protocol is not None:
        doc["protocol"] = _protocol_doc(net.protocol)
    if net.detectors:
        doc["detectors"] = {k: _detector_doc(v) for k, v in sorted(net.detectors.items())}
    doc["costs"] = {"alice": net.costs.alice, "bob": net.costs.bob, "switch": net.costs.switch}
    doc["constraints"] = {"locked_full": list(net.locked_full), "k": list(net.k_values)}
    doc["links"] = [_link_doc(e) for e in net.links]
    return tomli_w.dumps(doc)


def save(net: NetworkFile, path: str | Path) -> None:
    Path(path).write_text(dumps(net), encoding="utf-8")


def packaged(name: str) -> Path:
    """Path of a network or candidate file shipped with the package."""
    return Path(__file__).parent / "data" / name
