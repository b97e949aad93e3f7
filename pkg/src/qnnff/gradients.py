"""Exact differentiation of circuit outputs via the parameter-shift rule.

Every parameterized gate here is generated by a Pauli string P:
``ry(t) = exp(-i t sigma_y / 2)`` and ``multiz(t) = exp(-i t P)``.  Writing
each as ``exp(-i mu P / 2)`` in a normalized half-angle ``mu``, the output is
a degree-1 trigonometric polynomial in ``mu`` and

    df/dmu = (f(mu + pi/2) - f(mu - pi/2)) / 2

holds exactly.  Mapping back to the raw gate angle contributes the chain
factor d(mu)/d(angle): 1 for ry, 2 for multiz (which turns the shift into
+-pi/4 on the raw angle with unit coefficient).  Input derivatives shift each
*occurrence* of a feature independently and weight it by the derivative of
the gate's product expression; second derivatives nest two shifts with the
[++ - +- - -+ + --]/4 pattern.

All shifted circuits for one gradient call are evaluated in a single batched
statevector run; samples fan out along the batch axis with a deterministic
ordered reduction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .circuit import InputExpr, ParamRef, QnnTemplate
from .errors import ArgumentError
from .statevec import _apply_kind, _expectation_z_raw

# (shift on the raw angle, coefficient on the difference) per gate kind
_SHIFT = {"ry": (np.pi / 2, 0.5), "rz": (np.pi / 2, 0.5), "multiz": (np.pi / 4, 1.0)}

OBSERVABLE_QUBIT = 0

# Rows per executed chunk are limited so batched gradient calls stay inside a
# fixed memory budget regardless of dataset size.
_MAX_CHUNK_AMPS = 1 << 21


@dataclass
class EvalCounter:
    """Bookkeeping for circuit executions, split by what requested them."""

    total: int = 0
    grad_params: int = 0
    grad_inputs: int = 0
    hessian: int = 0

    def reset(self) -> None:
        self.total = self.grad_params = self.grad_inputs = self.hessian = 0


counter = EvalCounter()


@dataclass
class GradientReport:
    value: float
    d_params: np.ndarray
    d_inputs: np.ndarray
    mixed_hessian: np.ndarray | None = None


class _Program:
    """Template lowered to a flat record list ready for batched execution."""

    def __init__(self, template: QnnTemplate):
        self.num_qubits = template.num_qubits
        index = {ref: i for i, ref in enumerate(template.param_refs)}
        self.records: list[tuple[str, tuple[int, ...], str, object]] = []
        self.param_pos: list[int] = [-1] * template.param_count
        self.param_kind: list[str] = [""] * template.param_count
        self.input_occurrences: list[tuple[int, InputExpr]] = []
        for pos, gate in enumerate(template.gates):
            src = gate.source
            if src is None:
                self.records.append((gate.kind, gate.qubits, "const", 0.0))
            elif isinstance(src, InputExpr):
                self.records.append((gate.kind, gate.qubits, "input", src))
                self.input_occurrences.append((pos, src))
            elif isinstance(src, ParamRef):
                p = index[src]
                self.records.append((gate.kind, gate.qubits, "param", p))
                self.param_pos[p] = pos
                self.param_kind[p] = gate.kind
            else:
                self.records.append((gate.kind, gate.qubits, "const", float(src)))

    def input_values(self, features: np.ndarray) -> list[np.ndarray]:
        """Per input occurrence, the bound angle for every sample row."""
        return [np.prod(features[:, list(expr.indices)], axis=1)
                for _, expr in self.input_occurrences]


@lru_cache(maxsize=64)
def _program(template: QnnTemplate) -> _Program:
    return _Program(template)


def _execute(prog: _Program, angles: list, rows: int) -> np.ndarray:
    """Run the program over `rows` circuits; angles are scalars or (rows,) arrays."""
    dim = 1 << prog.num_qubits
    out = np.empty(rows)
    chunk = max(1, _MAX_CHUNK_AMPS // dim)
    for start in range(0, rows, chunk):
        stop = min(start + chunk, rows)
        amps = np.zeros((stop - start, dim), dtype=complex)
        amps[:, 0] = 1.0
        for (kind, qubits, _, _), ang in zip(prog.records, angles):
            if isinstance(ang, np.ndarray):
                ang = ang[start:stop]
            amps = _apply_kind(amps, prog.num_qubits, kind, qubits, ang)
        out[start:stop] = _expectation_z_raw(amps, prog.num_qubits, OBSERVABLE_QUBIT)
    return out


def _as_feature_matrix(template: QnnTemplate, features) -> np.ndarray:
    mat = np.atleast_2d(np.asarray(features, dtype=float))
    if mat.shape[1] != template.num_features:
        raise ArgumentError(
            f"expected {template.num_features} features per row, got {mat.shape[1]}"
        )
    return mat


def _check_theta(template: QnnTemplate, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (template.param_count,):
        raise ArgumentError(
            f"expected {template.param_count} parameters, got shape {theta.shape}"
        )
    return theta


def _base_angles(prog: _Program, values: list[np.ndarray], theta: np.ndarray,
                 repeat: int) -> list:
    """Angle per record; sample-bound inputs are repeated for shift variants."""
    angles: list = []
    occ = iter(values)
    for kind, qubits, stype, payload in prog.records:
        if stype == "input":
            vals = next(occ)
            angles.append(np.repeat(vals, repeat) if repeat > 1 else vals)
        elif stype == "param":
            angles.append(theta[payload])
        else:
            angles.append(payload)
    return angles


def eval_qnn_batch(template: QnnTemplate, features, theta) -> np.ndarray:
    """Model output <Z_0> for each feature row."""
    feats = _as_feature_matrix(template, features)
    theta = _check_theta(template, theta)
    prog = _program(template)
    angles = _base_angles(prog, prog.input_values(feats), theta, repeat=1)
    out = _execute(prog, angles, feats.shape[0])
    counter.total += feats.shape[0]
    return out


def eval_qnn(template: QnnTemplate, y, theta) -> float:
    """Expectation of Z on qubit 0 after the bound circuit acts on |0...0>."""
    return float(eval_qnn_batch(template, np.asarray(y, dtype=float)[None, :], theta)[0])


def _sample_chunks(num_samples: int, variants: int):
    per = max(1, (1 << 16) // max(variants, 1))
    for start in range(0, num_samples, per):
        yield start, min(start + per, num_samples)


def grad_params_batch(template: QnnTemplate, features, theta) -> np.ndarray:
    """Shift-rule gradient d f / d theta, one row per sample; 2d runs each."""
    feats = _as_feature_matrix(template, features)
    theta = _check_theta(template, theta)
    prog = _program(template)
    d = template.param_count
    out = np.empty((feats.shape[0], d))
    for lo, hi in _sample_chunks(feats.shape[0], 2 * d):
        out[lo:hi] = _grad_params_block(prog, feats[lo:hi], theta, d)
    counter.grad_params += feats.shape[0] * 2 * d
    counter.total += feats.shape[0] * 2 * d
    return out


def _grad_params_block(prog: _Program, feats: np.ndarray, theta: np.ndarray,
                       d: int) -> np.ndarray:
    b = feats.shape[0]
    rows = b * 2 * d
    angles = _base_angles(prog, prog.input_values(feats), theta, repeat=2 * d)
    for p in range(d):
        shift, _ = _SHIFT[prog.param_kind[p]]
        arr = np.full((b, 2 * d), theta[p])
        arr[:, 2 * p] += shift
        arr[:, 2 * p + 1] -= shift
        angles[prog.param_pos[p]] = arr.ravel()
    f = _execute(prog, angles, rows).reshape(b, d, 2)
    coef = np.array([_SHIFT[k][1] for k in prog.param_kind])
    return coef * (f[:, :, 0] - f[:, :, 1])


def grad_params(template: QnnTemplate, y, theta) -> np.ndarray:
    return grad_params_batch(template, np.asarray(y, dtype=float)[None, :], theta)[0]


def grad_inputs_batch(template: QnnTemplate, features, theta) -> np.ndarray:
    """d f / d y_j, summing the shift derivative of every encoding occurrence
    weighted by the derivative of its product expression."""
    feats = _as_feature_matrix(template, features)
    theta = _check_theta(template, theta)
    prog = _program(template)
    m = len(prog.input_occurrences)
    out = np.empty((feats.shape[0], template.num_features))
    for lo, hi in _sample_chunks(feats.shape[0], 2 * m):
        out[lo:hi] = _grad_inputs_block(prog, template, feats[lo:hi], theta, m)
    counter.grad_inputs += feats.shape[0] * 2 * m
    counter.total += feats.shape[0] * 2 * m
    return out


def _grad_inputs_block(prog: _Program, template: QnnTemplate, feats: np.ndarray,
                       theta: np.ndarray, m: int) -> np.ndarray:
    b = feats.shape[0]
    values = prog.input_values(feats)
    angles = _base_angles(prog, values, theta, repeat=2 * m)
    for o, (pos, _) in enumerate(prog.input_occurrences):
        kind = prog.records[pos][0]
        shift, _ = _SHIFT[kind]
        arr = np.repeat(values[o], 2 * m).reshape(b, 2 * m)
        arr[:, 2 * o] += shift
        arr[:, 2 * o + 1] -= shift
        angles[pos] = arr.ravel()
    f = _execute(prog, angles, b * 2 * m).reshape(b, m, 2)
    occ_coef = np.array([_SHIFT[prog.records[pos][0]][1]
                         for pos, _ in prog.input_occurrences])
    d_occ = occ_coef * (f[:, :, 0] - f[:, :, 1])  # (b, m)
    grad = np.zeros((b, template.num_features))
    for o, (_, expr) in enumerate(prog.input_occurrences):
        for j in expr.indices:
            chain = np.prod(feats[:, [k for k in expr.indices if k != j]], axis=1)
            grad[:, j] += chain * d_occ[:, o]
    return grad


def grad_inputs(template: QnnTemplate, y, theta) -> np.ndarray:
    return grad_inputs_batch(template, np.asarray(y, dtype=float)[None, :], theta)[0]


def mixed_hessian(template: QnnTemplate, y, theta,
                  literal_input_shift: bool = False) -> np.ndarray:
    """d^2 f / d theta_p d y_j via nested shifts, shape (d, num_features).

    The default path shifts each (parameter gate, encoding occurrence) pair
    independently and applies the product-expression chain factor, which is
    exact under re-uploading.  ``literal_input_shift=True`` instead shifts the
    whole feature vector by +-pi/2 along each axis, treating every feature as
    if it entered a single half-angle rotation; this is only exact when that
    is actually the case and is provided for comparison.
    """
    y = np.asarray(y, dtype=float)
    theta = _check_theta(template, theta)
    if y.shape != (template.num_features,):
        raise ArgumentError(f"expected {template.num_features} features")
    prog = _program(template)
    if literal_input_shift:
        return _mixed_hessian_literal(prog, template, y, theta)
    return _mixed_hessian_exact(prog, template, y, theta)


def _mixed_hessian_exact(prog: _Program, template: QnnTemplate,
                         y: np.ndarray, theta: np.ndarray) -> np.ndarray:
    d = template.param_count
    m = len(prog.input_occurrences)
    n = template.num_features
    variants = d * m * 4
    values = [v[0] for v in prog.input_values(y[None, :])]
    angles: list = []
    occ_index = {pos: o for o, (pos, _) in enumerate(prog.input_occurrences)}
    for pos, (kind, qubits, stype, payload) in enumerate(prog.records):
        if stype == "param":
            p = payload
            shift, _ = _SHIFT[kind]
            arr = np.full((d, m, 2, 2), theta[p])
            arr[p, :, 0, :] += shift
            arr[p, :, 1, :] -= shift
            angles.append(arr.ravel())
        elif stype == "input":
            o = occ_index[pos]
            shift, _ = _SHIFT[kind]
            arr = np.full((d, m, 2, 2), values[o])
            arr[:, o, :, 0] += shift
            arr[:, o, :, 1] -= shift
            angles.append(arr.ravel())
        else:
            angles.append(payload)
    f = _execute(prog, angles, variants).reshape(d, m, 2, 2)
    counter.hessian += variants
    counter.total += variants
    core = f[:, :, 0, 0] - f[:, :, 0, 1] - f[:, :, 1, 0] + f[:, :, 1, 1]
    p_coef = np.array([_SHIFT[k][1] for k in prog.param_kind])
    o_coef = np.array([_SHIFT[prog.records[pos][0]][1]
                       for pos, _ in prog.input_occurrences])
    core = p_coef[:, None] * o_coef[None, :] * core  # d^2 f / d theta d angle_o
    hess = np.zeros((d, n))
    for o, (_, expr) in enumerate(prog.input_occurrences):
        for j in expr.indices:
            hess[:, j] += expr.partial(j, y) * core[:, o]
    return hess


def _mixed_hessian_literal(prog: _Program, template: QnnTemplate,
                           y: np.ndarray, theta: np.ndarray) -> np.ndarray:
    d = template.param_count
    n = template.num_features
    variants = d * n * 4
    angles: list = []
    shifted_values = {}
    for j in range(n):
        for s, delta in ((0, np.pi / 2), (1, -np.pi / 2)):
            yj = y.copy()
            yj[j] += delta
            shifted_values[j, s] = [v[0] for v in prog.input_values(yj[None, :])]
    occ_index = {pos: o for o, (pos, _) in enumerate(prog.input_occurrences)}
    for pos, (kind, qubits, stype, payload) in enumerate(prog.records):
        if stype == "param":
            p = payload
            shift, _ = _SHIFT[kind]
            arr = np.full((d, n, 2, 2), theta[p])
            arr[p, :, 0, :] += shift
            arr[p, :, 1, :] -= shift
            angles.append(arr.ravel())
        elif stype == "input":
            o = occ_index[pos]
            arr = np.empty((d, n, 2, 2))
            for j in range(n):
                arr[:, j, :, 0] = shifted_values[j, 0][o]
                arr[:, j, :, 1] = shifted_values[j, 1][o]
            angles.append(arr.ravel())
        else:
            angles.append(payload)
    f = _execute(prog, angles, variants).reshape(d, n, 2, 2)
    counter.hessian += variants
    counter.total += variants
    core = f[:, :, 0, 0] - f[:, :, 0, 1] - f[:, :, 1, 0] + f[:, :, 1, 1]
    p_coef = np.array([_SHIFT[k][1] for k in prog.param_kind])
    return p_coef[:, None] * 0.5 * core


def gradient_report(template: QnnTemplate, y, theta,
                    with_hessian: bool = False) -> GradientReport:
    return GradientReport(
        value=eval_qnn(template, y, theta),
        d_params=grad_params(template, y, theta),
        d_inputs=grad_inputs(template, y, theta),
        mixed_hessian=mixed_hessian(template, y, theta) if with_hessian else None,
    )


def qnn_param_grad_fn(template: QnnTemplate):
    """Adapter for the capacity module: (theta, inputs) -> (K, d) gradient rows."""
    def fn(theta, inputs):
        return grad_params_batch(template, inputs, theta)
    return fn
