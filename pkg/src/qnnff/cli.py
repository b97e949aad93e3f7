"""Command-line front end.

Subcommands: gen, train, eval, effdim, md, spectrum.  Every run is
deterministic given --seed.  A key=value config file passed with --config
overrides any flag of the same name (dashes become underscores).  Exit codes:
0 success, 2 argument error, 3 data error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import baseline, capacity, dynamics, gradients, model as model_mod, train
from .data import load_dataset, save_dataset, train_test_split
from .errors import ArgumentError, DataError, NumericalError, QnnffError
from .presets import get_preset, reduced_mass

EXIT_ARGUMENT, EXIT_DATA, EXIT_NUMERICAL = 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnnff",
        description="Quantum neural network force fields: data generation, "
        "training, evaluation, capacity analysis, molecular dynamics and "
        "spectra.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value file overriding flags")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output path or prefix")

    p = sub.add_parser("gen", help="generate a surrogate dataset")
    common(p)
    p.add_argument("--preset", default="lih", choices=["lih", "h2o", "h3o"])
    p.add_argument("--count", type=int, default=170)
    p.add_argument("--mirror", action="store_true",
                   help="mirror a diatomic grid about its upper range edge")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a model on a dataset file")
    common(p)
    p.add_argument("--preset", default=None,
                   help="molecule preset (defaults to the dataset tag)")
    p.add_argument("--model", default="qnn", choices=["qnn", "mlp"])
    p.add_argument("--data", required=True)
    p.add_argument("--train-size", type=int, default=None,
                   help="train on this many samples, validate on the rest")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--entanglement", default=None,
                   choices=["linear", "circular", "full"])
    p.add_argument("--degree", type=int, default=3, choices=[2, 3],
                   help="3 keeps the degree-3 coupling sets, 2 drops them")
    p.add_argument("--chi", type=float, default=None)
    p.add_argument("--optimizer", default=None, choices=["adam", "cobyla"])
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="RMSE of a checkpoint on a dataset file")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--forces", action="store_true",
                   help="require force labels and report force RMSE")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("effdim", help="effective dimension of a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--n", type=int, default=None,
                   help="sample-size parameter (default: dataset size)")
    p.add_argument("--draws", type=int, default=100)
    p.add_argument("--trace-normalize", action="store_true")
    p.set_defaults(func=cmd_effdim)

    p = sub.add_parser("md", help="velocity Verlet driven by a model or oracle")
    common(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--oracle", action="store_true",
                   help="drive with the preset's analytic oracle instead")
    p.add_argument("--preset", default=None)
    p.add_argument("--data", default=None,
                   help="dataset whose first sample seeds the geometry")
    p.add_argument("--steps", type=int, default=4000)
    p.add_argument("--dt", type=float, default=0.05, help="time step in fs")
    p.add_argument("--r0", type=float, default=1.05,
                   help="initial bond length for diatomic presets")
    p.add_argument("--v0", type=float, default=0.0)
    p.set_defaults(func=cmd_md)

    p = sub.add_parser("spectrum", help="trajectory or model output spectrum")
    common(p)
    p.add_argument("--traj", default=None, help="trajectory file to analyze")
    p.add_argument("--repetitions", type=int, default=100)
    p.add_argument("--checkpoint", default=None,
                   help="circuit checkpoint for a model Fourier spectrum")
    p.add_argument("--feature", type=int, default=0)
    p.add_argument("--grid", type=int, default=64)
    p.set_defaults(func=cmd_spectrum)

    return parser


def apply_config_file(args: argparse.Namespace) -> None:
    """Mutate parsed args with key=value overrides from --config."""
    path = getattr(args, "config", None)
    if not path:
        return
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise ArgumentError(f"{path}:{lineno}: unknown option {key!r}")
        current = getattr(args, dest)
        if isinstance(current, bool):
            parsed = value.lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int):
            parsed = int(value)
        elif isinstance(current, float):
            parsed = float(value)
        else:
            parsed = value
        setattr(args, dest, parsed)


def _out_prefix(args, fallback: str) -> str:
    return args.out if args.out else fallback


def cmd_gen(args) -> None:
    preset = get_preset(args.preset)
    if args.preset == "lih":
        dataset = preset.generate(args.count, seed=args.seed, mirror=args.mirror)
    else:
        dataset = preset.generate(args.count, seed=args.seed)
    out = _out_prefix(args, f"{args.preset}_data.txt")
    save_dataset(dataset, out)
    print(f"wrote {len(dataset)} samples to {out}")


def _build_qnn(preset, args, train_set):
    template = preset.template(depth=args.depth,
                               entanglement=args.entanglement,
                               degree=args.degree)
    pipeline = preset.pipeline().fit(train_set.cartesians())
    return model_mod.initialized_model(
        template, pipeline, train_set.energies(),
        metadata={"preset": preset.name, "family": "qnn"})


def cmd_train(args) -> None:
    dataset = load_dataset(args.data)
    preset = get_preset(args.preset or dataset.preset)
    if args.train_size is not None:
        train_set, validation = train_test_split(dataset, args.train_size,
                                                 seed=args.seed)
    else:
        train_set, validation = dataset, None
    chi = preset.chi if args.chi is None else args.chi
    optimizer = args.optimizer or preset.optimizer
    steps = args.steps or preset.steps
    config = train.AdamConfig(learning_rate=args.learning_rate,
                              max_steps=steps, seed=args.seed)
    spec = train.LossSpec(chi=chi)
    if args.model == "qnn":
        qff = _build_qnn(preset, args, train_set)
        print(f"training qnn preset={preset.name} d={qff.param_count} "
              f"chi={chi} optimizer={optimizer} max_steps={steps}")
        fit = train.adam_fit if optimizer == "adam" else train.gradient_free_fit
        trained, report = fit(qff, train_set, spec, config, validation)
    else:
        trained, report = _train_mlp(preset, args, train_set, validation,
                                     chi, config)
    model_mod.save_checkpoint(trained, args.checkpoint)
    prefix = _out_prefix(args, args.checkpoint)
    with open(f"{prefix}.report.txt", "w") as fh:
        fh.write(report.to_text() + "\n")
    report.save_loss_curve(f"{prefix}.loss.txt")
    print(report.to_text())
    print(f"wrote checkpoint {args.checkpoint}")


def _train_mlp(preset, args, train_set, validation, chi, config):
    """Budget-matched tanh network on the encoded monomials, energy loss."""
    if chi:
        raise ArgumentError(
            "force-weighted training is only wired for the circuit family; "
            "pass --chi 0 with --model mlp"
        )
    template = preset.template(depth=args.depth,
                               entanglement=args.entanglement,
                               degree=args.degree)
    pipeline = preset.pipeline().fit(train_set.cartesians())
    enc = preset.encoding_spec(args.entanglement, args.degree)
    feats = np.stack([pipeline.apply(c) for c in train_set.cartesians()])
    from .circuit import encoding_monomials

    inputs = np.stack([encoding_monomials(enc, y) for y in feats])
    scale, offset = model_mod.fit_label_scaling(train_set.energies())
    labels = (train_set.energies() - offset) / scale
    spec = baseline.topology_search(
        budget_d=template.param_count, input_width=inputs.shape[1],
        trials=8, seed=args.seed, train=(inputs, labels), epochs=150)
    print(f"training mlp widths={spec.widths} d={spec.param_count} "
          f"(budget {template.param_count})")
    theta0 = baseline.pack_params(baseline.mlp_init_xavier(spec, seed=args.seed))

    def value_and_grad(theta):
        net = baseline.unpack_params(spec, theta)
        f, d_params, _ = baseline.mlp_backward(net, inputs)
        r = f - labels
        return float(np.mean(r ** 2)), (2.0 / r.size) * (d_params.T @ r)

    import time

    started = time.monotonic()
    theta, losses, epochs, converged = train.adam_minimize(
        value_and_grad, theta0, config)
    ff = baseline.MlpForceField(spec, pipeline, theta, scale, offset,
                                encoding=enc,
                                metadata={"preset": preset.name,
                                          "family": "mlp"})
    tr_e, tr_f = train.evaluate_rmse(ff, train_set)
    va_e = va_f = None
    if validation is not None:
        va_e, va_f = train.evaluate_rmse(ff, validation)
    report = train.TrainReport(
        losses=losses, epochs=epochs, converged=converged,
        train_rmse_energy=tr_e, train_rmse_forces=tr_f,
        val_rmse_energy=va_e, val_rmse_forces=va_f,
        wall_time=time.monotonic() - started, circuit_evals=0,
        optimizer="adam")
    return ff, report


def cmd_eval(args) -> None:
    ff = model_mod.load_checkpoint(args.checkpoint)
    dataset = load_dataset(args.data)
    if args.forces and not dataset.has_forces:
        raise DataError(f"{args.data} has no force labels but --forces was given")
    rmse_e, rmse_f = train.evaluate_rmse(ff, dataset,
                                         with_forces=args.forces or dataset.has_forces)
    print(f"rmse_energy_eV = {rmse_e!r}")
    if rmse_f is not None:
        print(f"rmse_forces_eV_per_A = {rmse_f!r}")
    prefix = _out_prefix(args, None)
    if prefix:
        pred = ff.predict_energy_batch(dataset.cartesians())
        np.savetxt(f"{prefix}.energy.txt",
                   np.column_stack([dataset.energies(), pred]),
                   header="label_eV prediction_eV")
        if rmse_f is not None:
            rows = []
            for s in dataset.samples:
                rows.append(np.column_stack([
                    s.forces, ff.predict_forces(s.cartesian)]))
            np.savetxt(f"{prefix}.forces.txt", np.vstack(rows),
                       header="label_eV_per_A prediction_eV_per_A")
        print(f"wrote scatter data with prefix {prefix}")


def _grad_interface(ff):
    if isinstance(ff, model_mod.QffModel):
        inputs_of = lambda feats: feats
        return (gradients.qnn_param_grad_fn(ff.template), ff.param_count,
                (-np.pi, np.pi), inputs_of)
    from .circuit import encoding_monomials

    def inputs_of(feats):
        return np.stack([encoding_monomials(ff.encoding, y) for y in feats]) \
            if ff.encoding is not None else feats

    return (baseline.mlp_param_grad_fn(ff.spec), ff.param_count,
            (-1.0, 1.0), inputs_of)


def cmd_effdim(args) -> None:
    ff = model_mod.load_checkpoint(args.checkpoint)
    dataset = load_dataset(args.data)
    feats = np.stack([ff.pipeline.apply(c) for c in dataset.cartesians()])
    grad_fn, dim, bounds, inputs_of = _grad_interface(ff)
    n = args.n or len(dataset)
    report = capacity.effective_dimension(
        grad_fn, inputs_of(feats), dim=dim, n=n, bounds=bounds,
        draws=args.draws, seed=args.seed,
        trace_normalize=args.trace_normalize)
    print(report.to_text())
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report.to_text() + "\n")


def _diatomic_provider(args):
    if args.oracle or args.checkpoint is None:
        from .data import morse_oracle

        def provider(x):
            e, f = morse_oracle(float(x[0]))
            return e, np.array([f])
    else:
        ff = model_mod.load_checkpoint(args.checkpoint)

        def provider(x):
            e, f = model_mod.bond_energy_force(ff, float(x[0]))
            return e, np.array([f])
    return provider


def cmd_md(args) -> None:
    if args.checkpoint is None and not args.oracle:
        raise ArgumentError("md needs --checkpoint or --oracle")
    preset_name = args.preset
    ff = None
    if args.checkpoint is not None:
        ff = model_mod.load_checkpoint(args.checkpoint)
        preset_name = preset_name or ff.metadata.get("preset")
    if preset_name is None:
        raise ArgumentError("cannot infer the molecule preset; pass --preset")
    preset = get_preset(preset_name)
    if len(preset.elements) == 2:
        provider = _diatomic_provider(args)
        config = dynamics.MdConfig(dt=args.dt, steps=args.steps,
                                   masses=[reduced_mass(preset)],
                                   x0=[args.r0], v0=[args.v0])
    else:
        if args.data is None:
            raise ArgumentError(
                "Cartesian MD needs --data for the initial geometry")
        dataset = load_dataset(args.data)
        x0 = dataset.samples[0].cartesian
        if args.oracle or ff is None:
            from .data import hydronium_oracle, triatomic_oracle

            oracle = triatomic_oracle if preset_name == "h2o" else hydronium_oracle
            provider = lambda x: oracle(x)
        else:
            provider = lambda x: (ff.predict_energy(x), ff.predict_forces(x))
        config = dynamics.MdConfig(dt=args.dt, steps=args.steps,
                                   masses=preset.masses, x0=x0,
                                   v0=np.zeros_like(x0))
    traj = dynamics.velocity_verlet_run(provider, config)
    out = _out_prefix(args, "trajectory.txt")
    dynamics.write_trajectory(traj, out)
    drift = float(np.max(np.abs(traj.total - traj.total[0])))
    print(f"wrote {len(traj)} frames to {out}; energy drift {drift:.3e} eV")


def cmd_spectrum(args) -> None:
    if args.traj is not None:
        traj = dynamics.read_trajectory(args.traj)
        freqs, mags = dynamics.oscillation_spectrum(traj,
                                                    repetitions=args.repetitions)
        peak = dynamics.dominant_frequency(freqs, mags)
        print(f"dominant frequency {peak:.6f} / fs")
    elif args.checkpoint is not None:
        ff = model_mod.load_checkpoint(args.checkpoint)
        if not isinstance(ff, model_mod.QffModel):
            raise ArgumentError("model spectra are defined for circuit models")
        freqs, mags = dynamics.qnn_model_spectrum(
            ff.template, ff.theta, feature_index=args.feature,
            grid_points=args.grid)
        print(f"frequencies 0..{freqs[-1]}, peak magnitude {mags.max():.4f}")
    else:
        raise ArgumentError("spectrum needs --traj or --checkpoint")
    out = _out_prefix(args, "spectrum.txt")
    dynamics.write_spectrum(freqs, mags, out)
    print(f"wrote spectrum to {out}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        apply_config_file(args)
        args.func(args)
    except ArgumentError as exc:
        print(f"argument error: {exc}", file=sys.stderr)
        return EXIT_ARGUMENT
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except QnnffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
