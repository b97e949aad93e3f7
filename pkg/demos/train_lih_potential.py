"""Learn a diatomic dissociation curve end to end.

Generates a mirrored Morse-surrogate dataset, fits the descriptor pipeline
and label scaling on the training split, trains a shallow circuit model with
ADAM from zero initialization, and prints validation errors plus a slice of
the learned curve.  A shallower depth than the full preset keeps this demo
around a minute; raise ``DEPTH`` for production accuracy.
"""

import numpy as np

from qnnff.data import train_test_split
from qnnff.model import bond_energy_force, initialized_model
from qnnff.presets import generate_lih, get_preset
from qnnff.train import AdamConfig, LossSpec, adam_fit

DEPTH = 4
EPOCHS = 400

preset = get_preset("lih")
data = generate_lih(170, mirror=True)
train_set, test_set = train_test_split(data, 50, seed=0)
print(f"dataset: {len(data)} samples (mirrored grid), "
      f"{len(train_set)} train / {len(test_set)} validation")

template = preset.template(depth=DEPTH)
pipeline = preset.pipeline().fit(train_set.cartesians())
model = initialized_model(template, pipeline, train_set.energies())
print(f"circuit: {template.num_qubits} qubits, depth {DEPTH}, "
      f"{template.param_count} parameters, zero-initialized")

trained, report = adam_fit(model, train_set, LossSpec(chi=0.0),
                           AdamConfig(max_steps=EPOCHS, seed=0),
                           validation=test_set)
print(f"\ntrained for {report.epochs} epochs "
      f"({report.wall_time:.0f}s, {report.circuit_evals} circuit runs)")
print(f"validation RMSE: {report.val_rmse_energy * 1000:.2f} meV energy, "
      f"{report.val_rmse_forces:.4f} eV/A forces")

from qnnff.data import morse_oracle

print("\n  r (A)   exact E     model E     exact F     model F")
for r in (1.0, 1.3, 1.6, 2.2, 3.0, 4.0, 5.5, 7.0):
    e_ref, f_ref = morse_oracle(r)
    e, f = bond_energy_force(trained, r)
    print(f"  {r:4.1f}   {e_ref:9.5f}  {e:9.5f}   {f_ref:+9.5f}  {f:+9.5f}")

report.save_loss_curve("lih_demo_loss.txt")
print("\nloss curve written to lih_demo_loss.txt")
