"""Loss functions and optimizers.

The loss is evaluated in scaled units: energies pass through the model's
affine label transform, forces are divided by the energy scale.  Training is
full batch; ADAM consumes exact shift-rule gradients (plus the nested-shift
mixed Hessian when the force weight is nonzero), the gradient-free path
drives the same loss through COBYLA and never requests a parameter gradient.
Parameters start at zero so every trainable stage begins as the identity.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import gradients
from .data import Dataset
from .errors import ArgumentError, DataError, NumericalError
from .model import QffModel


@dataclass(frozen=True)
class LossSpec:
    """Force weight chi in  loss = MSE(energy) + chi * MSE(forces)."""

    chi: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.chi) or self.chi < 0:
            raise ArgumentError("chi must be finite and non-negative")


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_steps: int = 4000
    tolerance: float = 1e-6   # relative loss improvement per epoch ...
    patience: int = 50        # ... sustained below tolerance for this long
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ArgumentError("ADAM betas must lie in (0, 1)")
        if self.max_steps < 1:
            raise ArgumentError("max_steps must be positive")


@dataclass
class TrainReport:
    losses: list[float]
    epochs: int
    converged: bool
    train_rmse_energy: float
    train_rmse_forces: float | None
    val_rmse_energy: float | None
    val_rmse_forces: float | None
    wall_time: float
    circuit_evals: int
    optimizer: str
    budget_exhausted: bool = False

    def to_text(self) -> str:
        rows = [
            ("optimizer", self.optimizer),
            ("epochs", self.epochs),
            ("converged", self.converged),
            ("budget_exhausted", self.budget_exhausted),
            ("final_loss", self.losses[-1] if self.losses else float("nan")),
            ("train_rmse_energy_eV", self.train_rmse_energy),
            ("train_rmse_forces_eV_per_A", self.train_rmse_forces),
            ("val_rmse_energy_eV", self.val_rmse_energy),
            ("val_rmse_forces_eV_per_A", self.val_rmse_forces),
            ("wall_time_s", round(self.wall_time, 3)),
            ("circuit_evals", self.circuit_evals),
        ]
        return "\n".join(f"{k} = {v}" for k, v in rows)

    def save_loss_curve(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# epoch loss\n")
            for i, loss in enumerate(self.losses):
                fh.write(f"{i} {loss!r}\n")


def zero_init(template) -> np.ndarray:
    """All-zero parameters: every trainable stage acts as the identity."""
    return np.zeros(template.param_count)


@dataclass
class _Problem:
    """Dataset lowered to arrays in scaled units, reused across epochs."""

    features: np.ndarray        # (B, N)
    energies: np.ndarray        # (B,) scaled
    jacobians: np.ndarray | None  # (B, N, 3n)
    forces: np.ndarray | None     # (B, 3n) scaled


def _lower(model: QffModel, dataset: Dataset, chi: float) -> _Problem:
    geoms = dataset.cartesians()
    energies = model.scaled_energy(dataset.energies())
    if chi > 0:
        if not dataset.has_forces:
            raise DataError("chi > 0 requires force labels on every sample")
        feats, jacs = [], []
        for g in geoms:
            y, jac = model.pipeline.apply_with_jacobian(g)
            feats.append(y)
            jacs.append(jac)
        return _Problem(np.stack(feats), energies, np.stack(jacs),
                        dataset.forces_matrix() / model.energy_scale)
    return _Problem(model.feature_matrix(geoms), energies, None, None)


def _loss_terms(model: QffModel, prob: _Problem, chi: float, theta: np.ndarray):
    f = gradients.eval_qnn_batch(model.template, prob.features, theta)
    residual = f - prob.energies
    loss = float(np.mean(residual ** 2))
    force_residual = None
    if chi > 0:
        gy = gradients.grad_inputs_batch(model.template, prob.features, theta)
        pred = -np.einsum("bj,bjc->bc", gy, prob.jacobians)
        force_residual = pred - prob.forces
        loss += chi * float(np.mean(force_residual ** 2))
    return loss, residual, force_residual


def loss_chi(model: QffModel, dataset: Dataset, spec: LossSpec) -> float:
    """Scaled-unit loss: mean squared energy residual plus chi times the mean
    squared force-component residual."""
    prob = _lower(model, dataset, spec.chi)
    return _loss_terms(model, prob, spec.chi, model.theta)[0]


def _loss_and_grad(model: QffModel, prob: _Problem, chi: float, theta: np.ndarray):
    loss, residual, force_residual = _loss_terms(model, prob, chi, theta)
    g_param = gradients.grad_params_batch(model.template, prob.features, theta)
    grad = (2.0 / residual.size) * (g_param.T @ residual)
    if chi > 0:
        b, _, ncart = prob.jacobians.shape
        scale = 2.0 * chi / force_residual.size
        for alpha in range(b):
            hess = gradients.mixed_hessian(model.template, prob.features[alpha],
                                           theta)
            d_pred = -hess @ prob.jacobians[alpha]      # (d, 3n)
            grad += scale * (d_pred @ force_residual[alpha])
    return loss, grad


def adam_minimize(value_and_grad, theta0: np.ndarray, config: AdamConfig):
    """Plain full-batch ADAM with a patience-window convergence test.

    Returns (theta, losses, epochs, converged).  Shared by the circuit and
    classical model families so comparisons use one optimizer code path.
    """
    theta = np.asarray(theta0, dtype=float).copy()
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    losses: list[float] = []
    stall = 0
    for step in range(1, config.max_steps + 1):
        loss, grad = value_and_grad(theta)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise NumericalError(
                f"non-finite loss or gradient at epoch {step} (loss={loss})"
            )
        if losses:
            prev = losses[-1]
            improvement = (prev - loss) / max(abs(prev), 1e-30)
            stall = stall + 1 if improvement < config.tolerance else 0
        losses.append(loss)
        if stall >= config.patience:
            return theta, losses, step, True
        m = config.beta1 * m + (1 - config.beta1) * grad
        v = config.beta2 * v + (1 - config.beta2) * grad ** 2
        m_hat = m / (1 - config.beta1 ** step)
        v_hat = v / (1 - config.beta2 ** step)
        theta = theta - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)
    return theta, losses, config.max_steps, False


def evaluate_rmse(model, dataset: Dataset, with_forces: bool = True):
    """Physical-unit RMSEs (eV, eV/A); force RMSE is None without labels."""
    pred_e = model.predict_energy_batch(dataset.cartesians())
    rmse_e = float(np.sqrt(np.mean((pred_e - dataset.energies()) ** 2)))
    rmse_f = None
    if with_forces and dataset.has_forces:
        pred_f = np.stack([model.predict_forces(g) for g in dataset.cartesians()])
        rmse_f = float(np.sqrt(np.mean((pred_f - dataset.forces_matrix()) ** 2)))
    return rmse_e, rmse_f


def _finish(model: QffModel, dataset, validation, theta, losses, epochs,
            converged, started, evals0, optimizer, budget_exhausted=False):
    trained = QffModel(model.template, model.pipeline, theta,
                       model.energy_scale, model.energy_offset,
                       dict(model.metadata))
    tr_e, tr_f = evaluate_rmse(trained, dataset)
    va_e = va_f = None
    if validation is not None:
        va_e, va_f = evaluate_rmse(trained, validation)
    report = TrainReport(
        losses=losses,
        epochs=epochs,
        converged=converged,
        train_rmse_energy=tr_e,
        train_rmse_forces=tr_f,
        val_rmse_energy=va_e,
        val_rmse_forces=va_f,
        wall_time=time.monotonic() - started,
        circuit_evals=gradients.counter.total - evals0,
        optimizer=optimizer,
        budget_exhausted=budget_exhausted,
    )
    return trained, report


def adam_fit(model: QffModel, dataset: Dataset, spec: LossSpec,
             config: AdamConfig, validation: Dataset | None = None):
    """Full-batch gradient descent with ADAM moments from the given model."""
    started = time.monotonic()
    evals0 = gradients.counter.total
    prob = _lower(model, dataset, spec.chi)
    theta, losses, epochs, converged = adam_minimize(
        lambda th: _loss_and_grad(model, prob, spec.chi, th),
        model.theta, config,
    )
    return _finish(model, dataset, validation, theta, losses, epochs,
                   converged, started, evals0, "adam")


def gradient_free_fit(model: QffModel, dataset: Dataset, spec: LossSpec,
                      config: AdamConfig, validation: Dataset | None = None):
    """Derivative-free COBYLA over the same scaled loss; never evaluates a
    parameter gradient, so the only shift-rule calls are the input gradients
    used for force predictions when chi > 0."""
    from scipy.optimize import minimize

    started = time.monotonic()
    evals0 = gradients.counter.total
    prob = _lower(model, dataset, spec.chi)
    best = {"theta": model.theta.copy(), "loss": np.inf}
    trace: list[float] = []

    def objective(theta):
        loss = _loss_terms(model, prob, spec.chi, theta)[0]
        if not np.isfinite(loss):
            raise NumericalError("non-finite loss during gradient-free fit")
        if loss < best["loss"]:
            best["loss"] = loss
            best["theta"] = np.array(theta, dtype=float)
        trace.append(best["loss"])
        return loss

    result = minimize(objective, model.theta, method="COBYLA",
                      options={"maxiter": config.max_steps, "rhobeg": 0.4})
    exhausted = len(trace) >= config.max_steps and not result.success
    return _finish(model, dataset, validation, best["theta"], trace,
                   len(trace), bool(result.success), started, evals0,
                   "cobyla", budget_exhausted=exhausted)
