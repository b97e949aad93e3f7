"""Fully connected tanh networks with parameter budgets matched to circuit
models, for accuracy and effective-dimension comparisons.

Hidden layers use tanh, the single output unit is linear.  Parameters pack
into one flat vector layer by layer (weights row-major, then biases), which
is the layout the Fisher/effective-dimension code differentiates against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuit import EncodingSpec, encoding_monomials, monomial_jacobian
from .descriptors import DescriptorPipeline
from .errors import ArgumentError


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths input -> hidden... -> 1; at least one affine layer."""

    widths: tuple[int, ...]

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        object.__setattr__(self, "widths", widths)
        if len(widths) < 2:
            raise ArgumentError("need at least input and output widths")
        if widths[-1] != 1:
            raise ArgumentError("output width must be 1")
        if any(w < 1 for w in widths):
            raise ArgumentError("layer widths must be positive")

    @property
    def param_count(self) -> int:
        return param_count(self.widths)


def param_count(widths) -> int:
    return sum(w_in * w_out + w_out for w_in, w_out in zip(widths, widths[1:]))


@dataclass
class MlpModel:
    spec: MlpSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def param_count(self) -> int:
        return self.spec.param_count


def mlp_init_xavier(spec: MlpSpec, seed: int = 0) -> MlpModel:
    """Xavier-uniform weights, zero biases, deterministic per seed."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for w_in, w_out in zip(spec.widths, spec.widths[1:]):
        bound = np.sqrt(6.0 / (w_in + w_out))
        weights.append(rng.uniform(-bound, bound, size=(w_out, w_in)))
        biases.append(np.zeros(w_out))
    return MlpModel(spec, weights, biases)


def pack_params(model: MlpModel) -> np.ndarray:
    parts = []
    for w, b in zip(model.weights, model.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def unpack_params(spec: MlpSpec, theta: np.ndarray) -> MlpModel:
    theta = np.asarray(theta, dtype=float)
    if theta.size != spec.param_count:
        raise ArgumentError(
            f"theta has {theta.size} entries, spec wants {spec.param_count}"
        )
    weights, biases, at = [], [], 0
    for w_in, w_out in zip(spec.widths, spec.widths[1:]):
        weights.append(theta[at: at + w_in * w_out].reshape(w_out, w_in))
        at += w_in * w_out
        biases.append(theta[at: at + w_out])
        at += w_out
    return MlpModel(spec, weights, biases)


def _forward_cached(model: MlpModel, x: np.ndarray):
    acts = [np.atleast_2d(np.asarray(x, dtype=float))]
    if acts[0].shape[1] != model.spec.widths[0]:
        raise ArgumentError(
            f"input width {acts[0].shape[1]} does not match {model.spec.widths[0]}"
        )
    last = len(model.weights) - 1
    for l, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = acts[-1] @ w.T + b
        acts.append(z if l == last else np.tanh(z))
    return acts


def mlp_forward(model: MlpModel, x) -> np.ndarray | float:
    """Network output; a single input vector yields a scalar."""
    single = np.asarray(x).ndim == 1
    out = _forward_cached(model, x)[-1][:, 0]
    return float(out[0]) if single else out


def mlp_backward(model: MlpModel, x):
    """Exact gradients of the output w.r.t. parameters and inputs.

    Returns (value, d_params, d_inputs); batched inputs give one row per
    sample.  These are output gradients (not loss gradients), which is what
    both force prediction and the Fisher estimator need.
    """
    single = np.asarray(x).ndim == 1
    acts = _forward_cached(model, x)
    batch = acts[0].shape[0]
    delta = np.ones((batch, 1))
    grads = [None] * len(model.weights)
    for l in range(len(model.weights) - 1, -1, -1):
        gw = np.einsum("bo,bi->boi", delta, acts[l])
        gb = delta
        grads[l] = (gw, gb)
        delta = delta @ model.weights[l]
        if l > 0:  # route through the tanh of the previous hidden layer
            delta = delta * (1.0 - acts[l] ** 2)
    d_inputs = delta
    d_params = np.concatenate(
        [np.concatenate([gw.reshape(batch, -1), gb], axis=1) for gw, gb in grads],
        axis=1,
    )
    value = acts[-1][:, 0]
    if single:
        return float(value[0]), d_params[0], d_inputs[0]
    return value, d_params, d_inputs


def mlp_param_grad_fn(spec: MlpSpec):
    """Adapter for the capacity module: (theta, inputs) -> (K, d) gradients."""
    def fn(theta, inputs):
        model = unpack_params(spec, theta)
        _, d_params, _ = mlp_backward(model, np.atleast_2d(inputs))
        return d_params
    return fn


def topology_search(budget_d: int, input_width: int, trials: int, seed: int = 0,
                    train=None, val=None, tolerance: int = 2,
                    epochs: int = 300):
    """Random search over layer widths with parameter count within
    ``tolerance`` of the budget.

    ``train``/``val`` are optional (features, labels) pairs; when given, each
    candidate is trained briefly and the best validation loss wins.  Without
    data the candidate whose count is closest to the budget wins.  The search
    is deterministic per seed.
    """
    rng = np.random.default_rng(seed)
    candidates: list[MlpSpec] = []
    seen = set()
    for _ in range(max(200, 400 * trials)):
        if len(candidates) >= trials:
            break
        hidden = [int(w) for w in rng.integers(1, 17, size=rng.integers(1, 5))]
        widths = (input_width, *hidden, 1)
        if widths in seen:
            continue
        seen.add(widths)
        if abs(param_count(widths) - budget_d) <= tolerance:
            candidates.append(MlpSpec(widths))
    if not candidates:
        raise ArgumentError(
            f"no feasible topology within {tolerance} of budget {budget_d} "
            f"for input width {input_width}"
        )
    if train is None:
        return min(candidates,
                   key=lambda s: (abs(s.param_count - budget_d), s.widths))
    from .train import AdamConfig, adam_minimize

    x_train, e_train = train
    x_val, e_val = val if val is not None else train
    best_spec, best_loss = None, np.inf
    for k, spec in enumerate(candidates):
        theta0 = pack_params(mlp_init_xavier(spec, seed=seed + k))

        def value_and_grad(theta, spec=spec):
            model = unpack_params(spec, theta)
            f, d_params, _ = mlp_backward(model, x_train)
            r = f - e_train
            return float(np.mean(r ** 2)), (2.0 / len(r)) * (d_params.T @ r)

        cfg = AdamConfig(max_steps=epochs, seed=seed + k)
        theta, _, _, _ = adam_minimize(value_and_grad, theta0, cfg)
        val_loss = float(np.mean(
            (mlp_forward(unpack_params(spec, theta), x_val) - e_val) ** 2))
        if val_loss < best_loss:
            best_spec, best_loss = spec, val_loss
    return best_spec


@dataclass
class MlpForceField:
    """Classical counterpart of the circuit force field.

    Inputs are either the pipeline features directly or, when ``encoding``
    is set, the same monomials (singles, pair products, degree products) the
    circuit encoding applies, so both families see identical information.
    """

    spec: MlpSpec
    pipeline: DescriptorPipeline
    theta: np.ndarray
    energy_scale: float
    energy_offset: float
    encoding: EncodingSpec | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        expected = (self.pipeline.num_features if self.encoding is None
                    else len(encoding_monomials(self.encoding,
                                                np.zeros(self.pipeline.num_features))))
        if self.spec.widths[0] != expected:
            raise ArgumentError(
                f"network input width {self.spec.widths[0]} does not match "
                f"{expected} model inputs"
            )
        if self.energy_scale <= 0:
            raise ArgumentError("energy scale must be positive")

    @property
    def param_count(self) -> int:
        return self.spec.param_count

    def _net(self) -> MlpModel:
        return unpack_params(self.spec, self.theta)

    def inputs_from_features(self, y: np.ndarray) -> np.ndarray:
        if self.encoding is None:
            return y
        return encoding_monomials(self.encoding, y)

    def raw_output(self, geom) -> float:
        return mlp_forward(self._net(),
                           self.inputs_from_features(self.pipeline.apply(geom)))

    def predict_energy(self, geom) -> float:
        return self.energy_scale * self.raw_output(geom) + self.energy_offset

    def predict_energy_batch(self, geoms) -> np.ndarray:
        return np.array([self.predict_energy(g) for g in geoms])

    def predict_forces(self, geom) -> np.ndarray:
        y, jac = self.pipeline.apply_with_jacobian(geom)
        _, _, d_in = mlp_backward(self._net(), self.inputs_from_features(y))
        if self.encoding is not None:
            d_in = d_in @ monomial_jacobian(self.encoding, y)
        return -self.energy_scale * (d_in @ jac)

    def scaled_energy(self, energy) -> np.ndarray:
        return (np.asarray(energy, dtype=float) - self.energy_offset) / self.energy_scale


def mlp_payload(ff: MlpForceField) -> dict:
    from .circuit import _spec_to_dict

    return {
        "family": "mlp",
        "widths": list(ff.spec.widths),
        "theta": [float(v) for v in ff.theta],
        "encoding": None if ff.encoding is None else _spec_to_dict(ff.encoding),
    }


def mlp_from_payload(payload: dict, pipeline, scale, offset, metadata) -> MlpForceField:
    from .circuit import _spec_from_dict

    enc = payload.get("encoding")
    return MlpForceField(
        spec=MlpSpec(tuple(payload["widths"])),
        pipeline=pipeline,
        theta=np.array(payload["theta"], dtype=float),
        energy_scale=scale,
        energy_offset=offset,
        encoding=None if enc is None else _spec_from_dict(enc, EncodingSpec),
        metadata=metadata,
    )
