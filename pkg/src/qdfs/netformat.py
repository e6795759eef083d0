"""The ``.qnet`` network-description format.

A description is a JSON-compatible object with complex scalars written as
two-element ``[re, im]`` arrays and matrices as nested row-major arrays.
Canonical serialization sorts object keys, prints every float with 17
significant digits in lowercase e-notation, and terminates with a newline,
so equal values always serialize to identical bytes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    NotHermitianError,
    QnetSchemaError,
    QnetSyntaxError,
    QnetValidationError,
)
from .passive_model import HamiltonianCoupling, PassiveSystem, realize
from .synthesis import (
    ControllerGains,
    ScatteringPair,
    controller_ac,
    observer_topology,
    static_feedback_blocks,
    yamamoto_topology,
)

__all__ = ["NetworkDescription", "parse_network", "serialize_network"]

PLANT_CHANNEL_ORDER = ("w", "u", "f")
PRESET_NAMES = ("observer", "yamamoto")


# ---------------------------------------------------------------------------
# value type
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NetworkDescription:
    """Parsed network file: plant, optional topology, optional gains."""

    plant_hamiltonian: HamiltonianCoupling | None = None
    plant_raw: PassiveSystem | None = None
    topology: str | ScatteringPair | None = None
    gains: tuple | None = None  # (G1, G2, G3 or None)
    name: str | None = None
    comment: str | None = None

    def __post_init__(self):
        if (self.plant_hamiltonian is None) == (self.plant_raw is None):
            raise QnetSchemaError(
                "plant", "exactly one of 'hamiltonian' and 'raw' must be present"
            )

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkDescription):
            return NotImplemented
        return serialize_network(self) == serialize_network(other)

    def __hash__(self):
        return hash(serialize_network(self))

    def plant_system(self) -> PassiveSystem:
        if self.plant_hamiltonian is not None:
            return realize(self.plant_hamiltonian)
        return self.plant_raw

    def scattering(self, plant: PassiveSystem | None = None) -> ScatteringPair | None:
        """Resolve a preset name against the plant's channel widths."""
        if self.topology is None or isinstance(self.topology, ScatteringPair):
            return self.topology
        plant = plant if plant is not None else self.plant_system()
        b1, b2 = static_feedback_blocks(plant)
        if self.topology == "observer":
            return observer_topology(b1.shape[1], b2.shape[1])
        if self.topology == "yamamoto":
            return yamamoto_topology(b1.shape[1])
        raise QnetValidationError("topology", f"unknown preset {self.topology!r}")

    def controller(self, plant: PassiveSystem | None = None,
                   sw: ScatteringPair | None = None) -> ControllerGains | None:
        """Derive the full controller (drift included) from stored gains."""
        if self.gains is None:
            return None
        plant = plant if plant is not None else self.plant_system()
        sw = sw if sw is not None else self.scattering(plant)
        if sw is None:
            raise QnetValidationError("gains", "gains need a topology to derive A_c")
        g1, g2, g3 = self.gains
        a_c = controller_ac(plant, sw, g1, g2)
        if g3 is None:
            g3 = np.zeros((plant.n, 0), dtype=complex)
        return ControllerGains(g1, g2, g3, a_c)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _expect_object(node, path: str) -> dict:
    if not isinstance(node, dict):
        raise QnetSchemaError(path, f"expected an object, got {type(node).__name__}")
    return node


def _check_keys(node: dict, allowed: tuple, required: tuple, path: str):
    for key in node:
        if key not in allowed:
            raise QnetSchemaError(f"{path}.{key}" if path else key, "unknown field")
    for key in required:
        if key not in node:
            raise QnetSchemaError(f"{path}.{key}" if path else key, "missing field")


def _parse_scalar(node, path: str) -> complex:
    if (not isinstance(node, list) or len(node) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in node)):
        raise QnetSchemaError(path, "complex scalar must be a [re, im] pair of numbers")
    z = complex(float(node[0]), float(node[1]))
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise QnetValidationError(path, "non-finite entry")
    return z


def _parse_matrix(node, path: str) -> np.ndarray:
    if not isinstance(node, list):
        raise QnetSchemaError(path, "matrix must be an array of rows")
    rows = []
    width = None
    for i, row in enumerate(node):
        if not isinstance(row, list):
            raise QnetSchemaError(f"{path}[{i}]", "matrix row must be an array")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise QnetValidationError(
                f"{path}[{i}]", f"ragged matrix: row has {len(row)} entries, expected {width}"
            )
        rows.append([_parse_scalar(z, f"{path}[{i}][{j}]") for j, z in enumerate(row)])
    if not rows:
        return np.zeros((0, 0), dtype=complex)
    return np.array(rows, dtype=complex).reshape(len(rows), width or 0)


def _parse_channel_map(node, path: str, n: int | None = None) -> tuple:
    node = _expect_object(node, path)
    _check_keys(node, PLANT_CHANNEL_ORDER, (), path)
    out = []
    for label in PLANT_CHANNEL_ORDER:  # canonical channel order
        if label in node:
            out.append((label, _parse_matrix(node[label], f"{path}.{label}")))
    return tuple(out)


def _parse_plant(node, path: str):
    node = _expect_object(node, path)
    _check_keys(node, ("hamiltonian", "raw"), (), path)
    if ("hamiltonian" in node) == ("raw" in node):
        raise QnetSchemaError(path, "exactly one of 'hamiltonian' and 'raw' required")
    if "hamiltonian" in node:
        h = _expect_object(node["hamiltonian"], f"{path}.hamiltonian")
        _check_keys(h, ("M", "couplings"), ("M",), f"{path}.hamiltonian")
        m = _parse_matrix(h["M"], f"{path}.hamiltonian.M")
        couplings = ()
        if "couplings" in h:
            couplings = _parse_channel_map(h["couplings"], f"{path}.hamiltonian.couplings")
        try:
            return HamiltonianCoupling(m, couplings), None
        except NotHermitianError as exc:
            raise QnetValidationError(f"{path}.hamiltonian.M", str(exc)) from exc
        except DimensionMismatchError as exc:
            raise QnetValidationError(f"{path}.hamiltonian", str(exc)) from exc
    r = _expect_object(node["raw"], f"{path}.raw")
    _check_keys(r, ("A", "B", "C"), ("A",), f"{path}.raw")
    a = _parse_matrix(r["A"], f"{path}.raw.A")
    b_blocks = _parse_channel_map(r.get("B", {}), f"{path}.raw.B")
    c_blocks = _parse_channel_map(r.get("C", {}), f"{path}.raw.C")
    try:
        return None, PassiveSystem(a, b_blocks, c_blocks)
    except DimensionMismatchError as exc:
        raise QnetValidationError(f"{path}.raw", str(exc)) from exc


def _require_int(node, path: str) -> int:
    if not isinstance(node, int) or isinstance(node, bool):
        raise QnetSchemaError(path, "expected an integer")
    return node


def _parse_topology(node, path: str):
    if isinstance(node, str):
        if node in PRESET_NAMES:
            return node
        if node == "general":
            raise QnetSchemaError(path, "'general' requires explicit S and W blocks")
        raise QnetSchemaError(path, f"unknown preset {node!r}")
    node = _expect_object(node, path)
    _check_keys(node, ("S", "W", "m1", "n_w", "n_u"),
                ("S", "W", "m1", "n_w", "n_u"), path)
    s = _parse_matrix(node["S"], f"{path}.S")
    w = _parse_matrix(node["W"], f"{path}.W")
    m1 = _require_int(node["m1"], f"{path}.m1")
    n_w = _require_int(node["n_w"], f"{path}.n_w")
    n_u = _require_int(node["n_u"], f"{path}.n_u")
    for name, mat in (("S", s), ("W", w)):
        if mat.shape[0] != mat.shape[1]:
            raise QnetValidationError(f"{path}.{name}", f"must be square, got {mat.shape}")
        dev = float(np.linalg.norm(mat.conj().T @ mat - np.eye(mat.shape[0])))
        if dev > 1e-9 * max(1.0, float(np.linalg.norm(mat))):
            raise QnetValidationError(
                f"{path}.{name}", f"not unitary (deviation {dev:.3e})"
            )
    try:
        return ScatteringPair(s, w, m1=m1, n_w=n_w, n_u=n_u)
    except DimensionMismatchError as exc:
        raise QnetValidationError(path, str(exc)) from exc


def _parse_gains(node, path: str):
    node = _expect_object(node, path)
    _check_keys(node, ("G1", "G2", "G3"), ("G1", "G2"), path)
    g1 = _parse_matrix(node["G1"], f"{path}.G1")
    g2 = _parse_matrix(node["G2"], f"{path}.G2")
    g3 = _parse_matrix(node["G3"], f"{path}.G3") if "G3" in node else None
    rows = {g1.shape[0], g2.shape[0]}
    if g3 is not None:
        rows.add(g3.shape[0])
    if len(rows) > 1:
        raise QnetValidationError(path, f"gain blocks disagree on mode count: {sorted(rows)}")
    return (g1, g2, g3)


def parse_network(data) -> NetworkDescription:
    """Parse and validate a ``.qnet`` document from bytes or text."""
    if isinstance(data, (bytes, bytearray)):
        try:
            text = bytes(data).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise QnetSyntaxError(f"invalid UTF-8: {exc.reason}",
                                  line=1, col=exc.start + 1, pos=exc.start) from exc
    else:
        text = str(data)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise QnetSyntaxError(exc.msg, line=exc.lineno, col=exc.colno, pos=exc.pos) from exc
    except RecursionError as exc:
        raise QnetSyntaxError("input nested too deeply", line=1, col=1, pos=0) from exc
    doc = _expect_object(doc, "")
    _check_keys(doc, ("name", "comment", "plant", "topology", "gains"), ("plant",), "")
    name = doc.get("name")
    comment = doc.get("comment")
    for key, val in (("name", name), ("comment", comment)):
        if val is not None and not isinstance(val, str):
            raise QnetSchemaError(key, "expected a string")
    ham, raw = _parse_plant(doc["plant"], "plant")
    topology = _parse_topology(doc["topology"], "topology") if "topology" in doc else None
    gains = _parse_gains(doc["gains"], "gains") if "gains" in doc else None
    return NetworkDescription(
        plant_hamiltonian=ham,
        plant_raw=raw,
        topology=topology,
        gains=gains,
        name=name,
        comment=comment,
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _matrix_tree(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(m)]


def _channel_tree(blocks) -> dict:
    return {label: _matrix_tree(mat) for label, mat in blocks}


def _description_tree(desc: NetworkDescription) -> dict:
    tree: dict = {}
    if desc.name is not None:
        tree["name"] = desc.name
    if desc.comment is not None:
        tree["comment"] = desc.comment
    if desc.plant_hamiltonian is not None:
        hc = desc.plant_hamiltonian
        tree["plant"] = {"hamiltonian": {
            "M": _matrix_tree(hc.m_matrix),
            "couplings": _channel_tree(hc.couplings),
        }}
    else:
        sys = desc.plant_raw
        tree["plant"] = {"raw": {
            "A": _matrix_tree(sys.a_matrix),
            "B": _channel_tree(sys.b_blocks),
            "C": _channel_tree(sys.c_blocks),
        }}
    if desc.topology is not None:
        if isinstance(desc.topology, str):
            tree["topology"] = desc.topology
        else:
            sw = desc.topology
            tree["topology"] = {
                "S": _matrix_tree(sw.s_matrix),
                "W": _matrix_tree(sw.w_matrix),
                "m1": sw.m1,
                "n_w": sw.n_w,
                "n_u": sw.n_u,
            }
    if desc.gains is not None:
        g1, g2, g3 = desc.gains
        gtree = {"G1": _matrix_tree(g1), "G2": _matrix_tree(g2)}
        if g3 is not None:
            gtree["G3"] = _matrix_tree(g3)
        tree["gains"] = gtree
    return tree


def canonical_dumps(node) -> str:
    """Canonical rendering: sorted keys, fixed float format, no whitespace."""
    parts: list[str] = []
    _emit(node, parts)
    return "".join(parts)


def _emit(node, out: list):
    if isinstance(node, dict):
        out.append("{")
        for i, key in enumerate(sorted(node)):
            if i:
                out.append(",")
            out.append(json.dumps(key))
            out.append(":")
            _emit(node[key], out)
        out.append("}")
    elif isinstance(node, (list, tuple)):
        out.append("[")
        for i, item in enumerate(node):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    elif isinstance(node, bool):
        out.append("true" if node else "false")
    elif isinstance(node, int):
        out.append(repr(node))
    elif isinstance(node, float):
        out.append(f"{node:.16e}")
    elif isinstance(node, str):
        out.append(json.dumps(node))
    elif node is None:
        out.append("null")
    else:
        raise TypeError(f"cannot serialize {type(node).__name__}")


def serialize_network(desc: NetworkDescription) -> bytes:
    """Canonical byte form; ``parse_network`` inverts it exactly."""
    return (canonical_dumps(_description_tree(desc)) + "\n").encode("utf-8")
