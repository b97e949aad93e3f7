"""End-to-end force field: descriptor pipeline + circuit + label scaling.

The circuit output lives in [-1, 1]; an affine label transform fit on the
training energies maps that band onto physical eV.  Energies are

    E(C) = scale * f_theta(pipeline(C)) + offset

and forces follow by the exact chain rule through the pipeline Jacobian,

    F(C) = -scale * grad_y f . d(pipeline)/dC,

so energy and force predictions are consistent by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import gradients
from .circuit import QnnTemplate, template_from_dict, template_to_dict
from .descriptors import DescriptorPipeline, pipeline_from_dict, pipeline_to_dict
from .errors import ArgumentError, CheckpointError

CHECKPOINT_FORMAT = "qnnff-checkpoint"
CHECKPOINT_VERSION = 1

LABEL_HEADROOM = 0.1  # training energies map into +-(1 - headroom)


def fit_label_scaling(energies, headroom: float = LABEL_HEADROOM):
    """Affine transform sending [E_min, E_max] onto +-(1 - headroom)."""
    e = np.asarray(energies, dtype=float)
    lo, hi = float(e.min()), float(e.max())
    offset = 0.5 * (hi + lo)
    scale = (hi - lo) / (2.0 * (1.0 - headroom)) if hi > lo else 1.0
    return scale, offset


@dataclass
class QffModel:
    """Trained (or trainable) circuit force field."""

    template: QnnTemplate
    pipeline: DescriptorPipeline
    theta: np.ndarray
    energy_scale: float
    energy_offset: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.shape != (self.template.param_count,):
            raise ArgumentError(
                f"theta has shape {self.theta.shape}, template wants "
                f"{self.template.param_count} parameters"
            )
        if self.pipeline.num_features != self.template.num_features:
            raise ArgumentError(
                f"pipeline emits {self.pipeline.num_features} features, "
                f"template expects {self.template.num_features}"
            )
        if self.energy_scale <= 0:
            raise ArgumentError("energy scale must be positive")

    @property
    def param_count(self) -> int:
        return self.template.param_count

    def features(self, geom) -> np.ndarray:
        return self.pipeline.apply(geom)

    def feature_matrix(self, geoms) -> np.ndarray:
        return np.stack([self.pipeline.apply(g) for g in geoms])

    def raw_output(self, geom) -> float:
        return gradients.eval_qnn(self.template, self.features(geom), self.theta)

    def predict_energy(self, geom) -> float:
        return self.energy_scale * self.raw_output(geom) + self.energy_offset

    def predict_energy_batch(self, geoms) -> np.ndarray:
        f = gradients.eval_qnn_batch(self.template, self.feature_matrix(geoms),
                                     self.theta)
        return self.energy_scale * f + self.energy_offset

    def predict_forces(self, geom) -> np.ndarray:
        y, jac = self.pipeline.apply_with_jacobian(geom)
        gy = gradients.grad_inputs(self.template, y, self.theta)
        return -self.energy_scale * (gy @ jac)

    def scaled_energy(self, energy) -> np.ndarray:
        """Map physical energies into circuit-output units."""
        return (np.asarray(energy, dtype=float) - self.energy_offset) / self.energy_scale


def initialized_model(template: QnnTemplate, pipeline: DescriptorPipeline,
                      train_energies, metadata: dict | None = None) -> QffModel:
    """Zero-parameter model with label scaling fit on the training energies."""
    scale, offset = fit_label_scaling(train_energies)
    return QffModel(template, pipeline, np.zeros(template.param_count),
                    scale, offset, metadata or {})


def bond_energy_force(model, r: float):
    """Energy and the signed bond-axis force of a diatomic model at distance r.

    The bond force is -dE/dr; in the canonical axis-aligned geometry it is
    the x component of the force on the second atom.
    """
    from .data import diatomic_geometry

    geom = diatomic_geometry(r)
    return model.predict_energy(geom), model.predict_forces(geom)[3]


# ---------------------------------------------------------------------------
# Checkpoints.  One JSON container serves both model families; the family tag
# selects the payload interpretation on load.

def _model_payload(model) -> dict:
    from . import baseline

    if isinstance(model, QffModel):
        return {
            "family": "qnn",
            "template": template_to_dict(model.template),
            "theta": [float(v) for v in model.theta],
        }
    if isinstance(model, baseline.MlpForceField):
        return baseline.mlp_payload(model)
    raise ArgumentError(f"cannot checkpoint object of type {type(model).__name__}")


def save_checkpoint(model, path) -> None:
    payload = _model_payload(model)
    payload.update({
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "pipeline": pipeline_to_dict(model.pipeline),
        "energy_scale": float(model.energy_scale),
        "energy_offset": float(model.energy_offset),
        "metadata": dict(model.metadata),
    })
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_checkpoint(path):
    from . import baseline

    try:
        with open(path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CheckpointError(
            f"{path}: not a valid checkpoint (line {exc.lineno}, col {exc.colno}: "
            f"{exc.msg})"
        ) from exc
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: missing or wrong format tag")
    version = payload.get("version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {version!r} "
            f"(this build reads version {CHECKPOINT_VERSION})"
        )
    try:
        pipeline = pipeline_from_dict(payload["pipeline"])
        scale = float(payload["energy_scale"])
        offset = float(payload["energy_offset"])
        metadata = dict(payload.get("metadata", {}))
        family = payload["family"]
        if family == "qnn":
            template = template_from_dict(payload["template"])
            theta = np.array(payload["theta"], dtype=float)
            return QffModel(template, pipeline, theta, scale, offset, metadata)
        if family == "mlp":
            return baseline.mlp_from_payload(payload, pipeline, scale, offset,
                                             metadata)
        raise CheckpointError(f"{path}: unknown model family {family!r}")
    except KeyError as exc:
        raise CheckpointError(f"{path}: missing checkpoint field {exc}") from exc
