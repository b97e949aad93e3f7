"""Symbolic circuit IR for alternating re-uploading networks.

A template is an ordered gate program ``U_0 . Phi . U_1 . Phi . ... . Phi . U_D``
where the encoding stage ``Phi`` is repeated verbatim (same input expressions)
while each trainable stage ``U_l`` carries its own fresh parameters.  Angles
are symbolic: either a product of input features, a reference into the
trainable parameter vector, or a constant.  Templates are immutable after
assembly and binding is pure, so they are safe to share across threads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .statevec import BoundGate

ENTANGLEMENTS = ("linear", "circular", "full")


@dataclass(frozen=True)
class InputExpr:
    """Product of input features: the represented angle is prod_j y_j."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise ArgumentError("InputExpr needs at least one feature index")
        if len(set(idx)) != len(idx):
            raise ArgumentError(f"repeated feature index in {idx}")
        object.__setattr__(self, "indices", idx)

    def value(self, y: np.ndarray) -> float:
        out = 1.0
        for i in self.indices:
            out *= y[i]
        return out

    def partial(self, j: int, y: np.ndarray) -> float:
        """d(angle)/d y_j: the product over the remaining indices."""
        if j not in self.indices:
            return 0.0
        out = 1.0
        for i in self.indices:
            if i != j:
                out *= y[i]
        return out


@dataclass(frozen=True)
class ParamRef:
    """Reference to one trainable angle: layer index plus a slot label."""

    layer: int
    slot: tuple

    def __post_init__(self):
        if self.layer == 0 and self.slot[0] != "ry":
            raise ArgumentError("layer 0 carries single-qubit rotation slots only")


@dataclass(frozen=True)
class SymbolicGate:
    """Gate whose angle source is a constant, an InputExpr, or a ParamRef."""

    kind: str
    qubits: tuple[int, ...]
    source: object = None  # None (cnot), float, InputExpr, or ParamRef

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind == "cnot" and self.source is not None:
            raise ArgumentError("cnot has no angle source")
        if self.kind != "cnot" and self.source is None:
            raise ArgumentError(f"{self.kind} gate needs an angle source")


def pair_set(num_qubits: int, entanglement: str) -> tuple[tuple[int, int], ...]:
    """Qubit pairs for the chosen entanglement pattern, as sorted unordered
    pairs in lexicographic order (pairs commute, the order is for determinism)."""
    if entanglement not in ENTANGLEMENTS:
        raise ArgumentError(f"entanglement must be one of {ENTANGLEMENTS}")
    if entanglement == "linear":
        pairs = {(j, j + 1) for j in range(num_qubits - 1)}
    elif entanglement == "circular":
        pairs = set()
        for j in range(num_qubits):
            k = (j + 1) % num_qubits
            if j != k:
                pairs.add(tuple(sorted((j, k))))
    else:
        pairs = set(itertools.combinations(range(num_qubits), 2))
    return tuple(sorted(pairs))


def sliding_degree_sets(num_qubits: int, size: int = 3) -> tuple[tuple[int, ...], ...]:
    """Width-`size` windows over neighbouring qubits, stride 1."""
    return tuple(tuple(range(j, j + size)) for j in range(num_qubits - size + 1))


@dataclass(frozen=True)
class EncodingSpec:
    """Shape of one encoding stage: entangling pairs plus higher-degree sets."""

    num_qubits: int
    entanglement: str = "full"
    degree_sets: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ArgumentError("need at least one qubit")
        if self.entanglement not in ENTANGLEMENTS:
            raise ArgumentError(f"entanglement must be one of {ENTANGLEMENTS}")
        sets = tuple(tuple(int(q) for q in s) for s in self.degree_sets)
        object.__setattr__(self, "degree_sets", sets)
        for s in sets:
            if len(set(s)) != len(s):
                raise ArgumentError(f"degree set {s} has repeated qubits")
            if any(not 0 <= q < self.num_qubits for q in s):
                raise ArgumentError(f"degree set {s} out of range for "
                                    f"{self.num_qubits} qubits")

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return pair_set(self.num_qubits, self.entanglement)


class AnsatzSpec(EncodingSpec):
    """Shape of one trainable stage; the knobs match the encoding's."""


def feature_map(spec: EncodingSpec) -> list[SymbolicGate]:
    """One encoding stage: ry(y_j) per qubit, then multiz(y_j*y_k) per pair,
    then multiz(prod y) per degree set, in a fixed deterministic order."""
    gates = [SymbolicGate("ry", (j,), InputExpr((j,)))
             for j in range(spec.num_qubits)]
    gates += [SymbolicGate("multiz", pair, InputExpr(pair))
              for pair in spec.pairs]
    gates += [SymbolicGate("multiz", s, InputExpr(s))
              for s in spec.degree_sets]
    return gates


def trainable_layer(spec: AnsatzSpec, layer: int) -> list[SymbolicGate]:
    """One trainable stage.  Layer 0 is single-qubit rotations only; deeper
    layers add entangling pair and degree-set rotations, each with its own
    fresh parameter."""
    if layer < 0:
        raise ArgumentError("layer index must be non-negative")
    gates = [SymbolicGate("ry", (j,), ParamRef(layer, ("ry", j)))
             for j in range(spec.num_qubits)]
    if layer == 0:
        return gates
    gates += [SymbolicGate("multiz", pair, ParamRef(layer, ("zz",) + pair))
              for pair in spec.pairs]
    gates += [SymbolicGate("multiz", s, ParamRef(layer, ("z" * len(s),) + s))
              for s in spec.degree_sets]
    return gates


@dataclass(frozen=True)
class QnnTemplate:
    """Assembled re-uploading program with its parameter table."""

    encoding: EncodingSpec
    ansatz: AnsatzSpec
    depth: int
    gates: tuple[SymbolicGate, ...]
    param_refs: tuple[ParamRef, ...]

    @property
    def num_features(self) -> int:
        return self.encoding.num_qubits

    @property
    def num_qubits(self) -> int:
        return self.encoding.num_qubits

    @property
    def param_count(self) -> int:
        return len(self.param_refs)

    def param_index(self, ref: ParamRef) -> int:
        return self.param_refs.index(ref)


def assemble_qnn(encoding: EncodingSpec, ansatz: AnsatzSpec, depth: int) -> QnnTemplate:
    """Interleave D identical encoding stages with D+1 trainable stages."""
    if encoding.num_qubits != ansatz.num_qubits:
        raise ArgumentError(
            f"encoding has {encoding.num_qubits} qubits but ansatz has "
            f"{ansatz.num_qubits}"
        )
    if depth < 1:
        raise ArgumentError("depth must be at least 1")
    gates: list[SymbolicGate] = list(trainable_layer(ansatz, 0))
    stage = feature_map(encoding)
    for layer in range(1, depth + 1):
        gates += stage
        gates += trainable_layer(ansatz, layer)
    refs = tuple(g.source for g in gates if isinstance(g.source, ParamRef))
    assert len(set(refs)) == len(refs)
    return QnnTemplate(encoding, ansatz, depth, tuple(gates), refs)


def bind(template: QnnTemplate, y: np.ndarray, theta: np.ndarray) -> list[BoundGate]:
    """Substitute concrete features and parameters, yielding executable gates."""
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if y.shape != (template.num_features,):
        raise ArgumentError(
            f"expected {template.num_features} features, got shape {y.shape}"
        )
    if theta.shape != (template.param_count,):
        raise ArgumentError(
            f"expected {template.param_count} parameters, got shape {theta.shape}"
        )
    index = {ref: i for i, ref in enumerate(template.param_refs)}
    bound = []
    for gate in template.gates:
        src = gate.source
        if src is None:
            bound.append(BoundGate(gate.kind, gate.qubits))
        elif isinstance(src, InputExpr):
            bound.append(BoundGate(gate.kind, gate.qubits, src.value(y)))
        elif isinstance(src, ParamRef):
            bound.append(BoundGate(gate.kind, gate.qubits, theta[index[src]]))
        else:
            bound.append(BoundGate(gate.kind, gate.qubits, float(src)))
    return bound


# ---------------------------------------------------------------------------
# Encoded monomials.  The encoding stage applies rotations by y_j, y_j*y_k and
# higher products; classical reference networks take this same monomial vector
# as their input so that both model families see identical information.

def encoding_exprs(spec: EncodingSpec) -> tuple[InputExpr, ...]:
    return tuple(g.source for g in feature_map(spec))


def encoding_monomials(spec: EncodingSpec, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return np.array([e.value(y) for e in encoding_exprs(spec)])


def monomial_jacobian(spec: EncodingSpec, y: np.ndarray) -> np.ndarray:
    """d(monomials)/d(features), shape (num_monomials, num_features)."""
    y = np.asarray(y, dtype=float)
    exprs = encoding_exprs(spec)
    jac = np.zeros((len(exprs), y.size))
    for row, e in enumerate(exprs):
        for j in e.indices:
            jac[row, j] = e.partial(j, y)
    return jac


# ---------------------------------------------------------------------------
# Serialization (embedded in model checkpoints).

def _spec_to_dict(spec: EncodingSpec) -> dict:
    return {
        "num_qubits": spec.num_qubits,
        "entanglement": spec.entanglement,
        "degree_sets": [list(s) for s in spec.degree_sets],
    }


def _spec_from_dict(d: dict, cls):
    return cls(
        num_qubits=int(d["num_qubits"]),
        entanglement=str(d["entanglement"]),
        degree_sets=tuple(tuple(s) for s in d["degree_sets"]),
    )


def _gate_to_dict(gate: SymbolicGate) -> dict:
    out = {"kind": gate.kind, "qubits": list(gate.qubits)}
    src = gate.source
    if isinstance(src, InputExpr):
        out["input"] = list(src.indices)
    elif isinstance(src, ParamRef):
        out["param"] = [src.layer, list(src.slot)]
    elif src is not None:
        out["const"] = float(src)
    return out


def template_to_dict(template: QnnTemplate) -> dict:
    return {
        "encoding": _spec_to_dict(template.encoding),
        "ansatz": _spec_to_dict(template.ansatz),
        "depth": template.depth,
        "gates": [_gate_to_dict(g) for g in template.gates],
    }


def template_from_dict(d: dict) -> QnnTemplate:
    try:
        encoding = _spec_from_dict(d["encoding"], EncodingSpec)
        ansatz = _spec_from_dict(d["ansatz"], AnsatzSpec)
        depth = int(d["depth"])
    except (KeyError, TypeError) as exc:
        raise ArgumentError(f"malformed template record: {exc}") from exc
    template = assemble_qnn(encoding, ansatz, depth)
    stored = d.get("gates")
    if stored is not None:
        rebuilt = [_gate_to_dict(g) for g in template.gates]
        if rebuilt != list(stored):
            raise ArgumentError("stored gate list does not match the declared specs")
    return template
