"""Command-line front end.

Subcommands: gen (synthetic datasets), train, predict, eval, bench
(sweeps to CSV), render (PGM images of field rows). Every command is
deterministic given its flags; exit codes are 0 on success, 2 for
usage/validation errors, 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import bench, gp, mlp, models, pca, serialize
from .data import load_dataset, save_dataset
from .datagen import GENERATORS, GeneratorSpec, generate_dataset
from .models import TrainingConfig

__all__ = ["main", "render_pgm"]


def _parse_grid(text: str):
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except Exception:
        raise ValueError(f"grid must look like 32x32, got {text!r}") from None


def _parse_widths(text: str):
    text = text.strip()
    if not text:
        return ()
    return tuple(int(v) for v in text.split(","))


def cmd_gen(args) -> int:
    spec = GeneratorSpec(name=args.generator, grid_shape=_parse_grid(args.grid),
                         n_samples=args.n, seed=args.seed)
    ds = generate_dataset(spec)
    save_dataset(ds, args.out)
    print(f"wrote {ds.m} samples ({ds.grid_shape[0]}x{ds.grid_shape[1]} "
          f"{args.generator}) to {args.out}")
    return 0


def _training_config(args, d: int) -> TrainingConfig:
    kwargs = dict(epochs=args.epochs, batch_size=args.batch_size, lr=args.lr,
                  gp_iters=args.gp_iters, gp_lr=args.gp_lr,
                  identity_bypass=args.identity_bypass,
                  normalize=not args.no_normalize,
                  final_activation=args.final_activation,
                  latent_activation=args.latent_activation)
    if args.latent_dim is not None:
        kwargs["latent_dim"] = args.latent_dim
    if args.widths_disentangle is not None:
        kwargs["widths_disentangle"] = _parse_widths(args.widths_disentangle)
    if args.widths_reconstruct is not None:
        kwargs["widths_reconstruct"] = _parse_widths(args.widths_reconstruct)
    if args.mlp_widths is not None:
        kwargs["mlp_widths"] = _parse_widths(args.mlp_widths)
    return TrainingConfig(**kwargs)


def cmd_train(args) -> int:
    ds = load_dataset(args.data)
    cfg = _training_config(args, ds.d)
    if args.method in ("elmc", "lmc"):
        if args.rank is None:
            raise ValueError(f"--rank is required for method {args.method}")
        if not (1 <= args.rank <= ds.m):
            raise ValueError(f"rank must be in [1, {ds.m}], got {args.rank}")
    if args.method == "elmc":
        model = models.train_elmc(ds, args.rank, cfg, args.seed)
        Yn = model.normalizer.apply(ds.fields)
        recon = mlp.forward_reconstruct(
            model.net, pca.reconstruct(model.basis,
                                       pca.project(model.basis,
                                                   mlp.forward_disentangle(model.net, Yn))))
        print(f"final autoencoder loss: {mlp.mse_loss(recon, Yn):.6e}")
        _print_gp_diagnostics(model.gps)
    elif args.method == "lmc":
        model = models.train_lmc(ds, args.rank, cfg, args.seed)
        _print_gp_diagnostics(model.gps)
    elif args.method == "mlp":
        model = models.train_mlp_baseline(ds, cfg, args.seed)
        Yn = model.normalizer.apply(ds.fields)
        loss = mlp.mse_loss(mlp.forward_layers(model.layers, ds.inputs), Yn)
        print(f"final training loss: {loss:.6e}")
    models.save_model(model, args.out)
    print(f"saved {args.method} model to {args.out}")
    return 0


def _print_gp_diagnostics(gps) -> None:
    for q, g in enumerate(gps):
        mll = gp.log_marginal_likelihood(g)
        if not math.isfinite(mll):
            raise RuntimeError(f"non-finite marginal likelihood for GP {q}")
        print(f"gp[{q}] final MLL: {mll:.6f}")


def cmd_predict(args) -> int:
    model = models.load_model(args.model)
    Xq = serialize.read_matrix(args.inputs)
    if isinstance(model, models.ElmcModel):
        pred = models.predict_elmc(model, Xq)
    elif isinstance(model, models.LmcModel):
        pred = models.predict_lmc(model, Xq)
    else:
        pred = models.predict_mlp_baseline(model, Xq)
    serialize.write_matrix(args.out, pred)
    if args.latent_variance is not None:
        if not isinstance(model, (models.ElmcModel, models.LmcModel)):
            raise ValueError("latent variances are only defined for elmc/lmc models")
        _, variances = models.predict_latent(model, Xq)
        serialize.write_matrix(args.latent_variance, variances)
    print(f"wrote {pred.shape[0]}x{pred.shape[1]} predictions to {args.out}")
    return 0


def cmd_eval(args) -> int:
    pred = serialize.read_matrix(args.pred)
    truth = serialize.read_matrix(args.truth)
    mse = models.evaluate_mse(pred, truth)
    print(serialize.format_real(mse))
    return 0


def cmd_bench(args) -> int:
    with open(args.config) as fh:
        cfg = bench.BenchConfig.from_dict(serialize.loads(fh.read()))

    def progress(method, rank, size, seed):
        print(f"cell method={method} rank={rank} train_size={size} seed={seed}",
              file=sys.stderr)

    rows = bench.run_bench(cfg, progress=progress if args.verbose else None)
    with open(args.out, "w") as fh:
        fh.write(bench.rows_to_csv(rows))
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def render_pgm(row: np.ndarray, grid_shape, out_path) -> None:
    """Write one field row as an ASCII PGM (P2, maxval 255), scaled by the
    row's own min/max; constant rows map to all-zero pixels."""
    H, W = grid_shape
    row = np.asarray(row, dtype=float)
    if row.size != H * W:
        raise ValueError(f"row has {row.size} values, grid needs {H * W}")
    lo, hi = float(row.min()), float(row.max())
    if hi > lo:
        scaled = 255.0 * (row - lo) / (hi - lo)
        # round half away from zero (values are nonnegative here)
        pixels = np.floor(scaled + 0.5).astype(int)
    else:
        pixels = np.zeros(row.size, dtype=int)
    img = pixels.reshape(H, W)
    with open(out_path, "w") as fh:
        fh.write("P2\n")
        fh.write(f"{W} {H}\n")
        fh.write("255\n")
        for r in img:
            fh.write(" ".join(str(v) for v in r))
            fh.write("\n")


def cmd_render(args) -> int:
    fields = serialize.read_matrix(args.fields)
    if not (0 <= args.row < fields.shape[0]):
        raise ValueError(f"row index {args.row} out of range [0, {fields.shape[0]})")
    with open(args.meta) as fh:
        meta = serialize.loads(fh.read())
    grid = tuple(int(v) for v in meta["grid"])
    render_pgm(fields[args.row], grid, args.out)
    print(f"rendered row {args.row} to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elmc", description="Spatial-field surrogate modeling toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--generator", required=True, choices=sorted(GENERATORS))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--grid", default="32x32")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a surrogate model")
    p.add_argument("--data", required=True)
    p.add_argument("--method", required=True, choices=["elmc", "lmc", "mlp"])
    p.add_argument("--rank", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=TrainingConfig.epochs)
    p.add_argument("--batch-size", type=int, default=TrainingConfig.batch_size)
    p.add_argument("--lr", type=float, default=TrainingConfig.lr)
    p.add_argument("--gp-iters", type=int, default=TrainingConfig.gp_iters)
    p.add_argument("--gp-lr", type=float, default=TrainingConfig.gp_lr)
    p.add_argument("--latent-dim", type=int)
    p.add_argument("--widths-disentangle", help="comma-separated layer widths")
    p.add_argument("--widths-reconstruct", help="comma-separated layer widths")
    p.add_argument("--mlp-widths", help="comma-separated hidden widths (mlp baseline)")
    p.add_argument("--identity-bypass", action="store_true")
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--final-activation", choices=["relu", "identity"], default="relu")
    p.add_argument("--latent-activation", choices=["relu", "identity"], default="relu")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict fields for query inputs")
    p.add_argument("--model", required=True)
    p.add_argument("--inputs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--latent-variance",
                   help="also write latent-space GP variances to this CSV")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="MSE between prediction and truth CSVs")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run a benchmark sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", help="render one field row as a PGM image")
    p.add_argument("--fields", required=True)
    p.add_argument("--row", type=int, required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
