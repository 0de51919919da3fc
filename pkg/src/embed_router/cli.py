"""Command-line surface.

Subcommands: train, register, serve, match, evaluate, seed-ablation.
Shared flags --seed, --addr, --data-dir are accepted by every subcommand;
EMBED_ROUTER_ADDR and EMBED_ROUTER_DATA_DIR supply their defaults.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from embed_router.data.datasets import DATA_DIR_ENV, parse_dataset_spec
from embed_router.errors import ConfigError, EmbedRouterError, ParamError
from embed_router.experiment import (
    SERVER,
    ExperimentConfig,
    desk_scale_specs,
    prepare_dataset,
    run_evaluation,
    run_seed_ablation,
    train_server,
)
from embed_router.matcher import CentroidIndex, build_centroids, load_index, save_index
from embed_router.nn.autoencoder import encode, load_model, save_model
from embed_router.nn.train import TrainConfig
from embed_router.wire.client import client_match, register_expert
from embed_router.wire.frames import NO_CLASS
from embed_router.wire.server import DEFAULT_PORT, RouterServer

ADDR_ENV = "EMBED_ROUTER_ADDR"


def _default_addr() -> str:
    return os.environ.get(ADDR_ENV, f"127.0.0.1:{DEFAULT_PORT}")


def _default_data_dir() -> str:
    return os.environ.get(DATA_DIR_ENV, "data")


def parse_addr(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise ConfigError(f"address must look like host:port, got {text!r}")
    try:
        port_num = int(port)
    except ValueError:
        raise ConfigError(f"port must be an integer, got {port!r}") from None
    if not 0 < port_num < 65536:
        raise ConfigError(f"port {port_num} out of range")
    return host, port_num


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=0, help="experiment seed (default 0)")
    shared.add_argument(
        "--addr",
        default=_default_addr(),
        help="server address host:port (default $EMBED_ROUTER_ADDR or 127.0.0.1:%d)"
        % DEFAULT_PORT,
    )
    shared.add_argument(
        "--data-dir",
        default=_default_data_dir(),
        help="dataset cache directory (default $EMBED_ROUTER_DATA_DIR or ./data)",
    )

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument("--epochs", type=int, default=45, help="training epochs (default 45)")
    training.add_argument("--batch-size", type=int, default=128, help="mini-batch size")

    parser = argparse.ArgumentParser(
        prog="embed-router",
        description="Expert-model routing over shared 128-dim autoencoder embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "train", parents=[shared, training], help="train one autoencoder on a server split"
    )
    p.add_argument("--dataset", default="mnist", help="dataset spec: name, file, or key=value list")
    p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser(
        "register", parents=[shared], help="register a trained model's centroids with the server"
    )
    p.add_argument("--model", required=True, help="path to a saved model file")
    p.add_argument("--dataset", default="mnist", help="dataset the model was trained on")
    p.add_argument("--expert-id", type=int, default=0, help="registry id for this expert")

    p = sub.add_parser("serve", parents=[shared], help="run the routing registry server")
    p.add_argument("--index", help="optional centroid index file to preload")

    p = sub.add_parser("match", parents=[shared], help="route one sample through the server")
    p.add_argument("--model", required=True, help="model used to embed the sample")
    p.add_argument("--dataset", default="mnist", help="dataset supplying the sample")
    p.add_argument(
        "--split",
        choices=["server", "client-a", "client-b"],
        default="client-a",
        help="which split to draw the sample from",
    )
    p.add_argument("--sample", type=int, default=0, help="sample index within the split")
    p.add_argument(
        "--threshold", type=float, default=-1.0, help="rejection threshold; -1 disables"
    )
    p.add_argument("--no-fine", action="store_true", help="coarse assignment only")
    p.add_argument("--timeout", type=float, default=10.0, help="request timeout in seconds")

    p = sub.add_parser(
        "evaluate",
        parents=[shared, training],
        help="train all models and score CA/FA plus the MSE baseline",
    )
    p.add_argument(
        "--dataset",
        action="append",
        dest="datasets",
        help="dataset spec; repeat for several (default: built-in three-dataset config)",
    )
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument(
        "--shared-seed",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="clients reuse the server seed (default on)",
    )

    p = sub.add_parser(
        "seed-ablation",
        parents=[shared, training],
        help="run the evaluation with and without seed sharing",
    )
    p.add_argument("--dataset", action="append", dest="datasets", help="dataset spec; repeatable")
    p.add_argument("--out", default="out", help="output directory")

    return parser


def _experiment_config(args) -> ExperimentConfig:
    specs = (
        [parse_dataset_spec(text) for text in args.datasets]
        if args.datasets
        else desk_scale_specs()
    )
    train_cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size)
    return ExperimentConfig(
        datasets=specs,
        seed=args.seed,
        shared_seed=getattr(args, "shared_seed", True),
        train=train_cfg,
        output_dir=Path(args.out),
        data_dir=Path(args.data_dir),
    )


def _role_slug(role: str) -> str:
    return "server" if role == SERVER else f"client_{role.lower()}"


def _write_outcome(outcome, out_dir: Path) -> None:
    from embed_router import report

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "models").mkdir(exist_ok=True)
    (out_dir / "losses").mkdir(exist_ok=True)
    (out_dir / "figures").mkdir(exist_ok=True)

    report.write_results_csv(outcome.table, out_dir / "results.csv")
    save_index(outcome.index, out_dir / "index.emci")
    for name, ae in outcome.server_models.items():
        save_model(ae, out_dir / "models" / f"server_{name}.emae")
    for (client, name), ae in outcome.client_models.items():
        save_model(ae, out_dir / "models" / f"client_{client.lower()}_{name}.emae")
    for (role, name), history in outcome.histories.items():
        report.write_loss_csv(
            history, outcome.config.train, out_dir / "losses" / f"{_role_slug(role)}_{name}.csv"
        )
    report.save_loss_figure(outcome.histories, out_dir / "figures" / "loss_curves.png")
    report.save_accuracy_figure(outcome.table, out_dir / "figures" / "accuracy.png")


def cmd_train(args) -> int:
    from embed_router import report

    spec = parse_dataset_spec(args.dataset)
    train_cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size)
    ae, history, ds, parts = train_server(spec, args.seed, train_cfg, Path(args.data_dir))

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / f"{spec.name}.emae"
    loss_path = out_dir / f"{spec.name}_loss.csv"
    save_model(ae, model_path)
    report.write_loss_csv(history, train_cfg, loss_path)
    report.save_loss_figure({(SERVER, spec.name): history}, out_dir / f"{spec.name}_loss.png")
    print(
        f"trained {spec.name} on {len(parts.server_idx)} server samples: "
        f"loss {history[0]:.6f} -> {history[-1]:.6f}"
    )
    print(f"wrote {model_path} and {loss_path}")
    return 0


def cmd_register(args) -> int:
    spec = parse_dataset_spec(args.dataset)
    ae = load_model(args.model)
    ds, parts = prepare_dataset(spec, args.seed, Path(args.data_dir))
    entry = build_centroids(ae, ds.subset(parts.server_idx), expert_id=args.expert_id)
    count = register_expert(parse_addr(args.addr), entry)
    print(f"registered expert {args.expert_id} ({spec.name}); server holds {count} entries")
    return 0


def cmd_serve(args) -> int:
    index = load_index(args.index) if args.index else CentroidIndex()
    server = RouterServer(parse_addr(args.addr), index=index)
    host, port = server.server_address[:2]
    print(f"listening on {host}:{port} with {len(index)} experts", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
    return 0


def cmd_match(args) -> int:
    spec = parse_dataset_spec(args.dataset)
    ae = load_model(args.model)
    ds, parts = prepare_dataset(spec, args.seed, Path(args.data_dir))
    idx = {
        "server": parts.server_idx,
        "client-a": parts.client_a_idx,
        "client-b": parts.client_b_idx,
    }[args.split]
    if not 0 <= args.sample < len(idx):
        raise ConfigError(f"sample index {args.sample} outside split of {len(idx)}")
    sample = ds.x[idx[args.sample]]
    embedding = encode(ae, sample)
    result = client_match(
        parse_addr(args.addr),
        embedding,
        threshold=args.threshold,
        want_fine=not args.no_fine,
        timeout=args.timeout,
    )
    if result.rejected:
        print(f"rejected (no coarse score reached {args.threshold})")
    else:
        class_part = "-" if result.class_id == NO_CLASS else str(result.class_id)
        print(f"expert {result.expert_id}  class {class_part}  score {result.score:.6f}")
    return 0


def cmd_evaluate(args) -> int:
    from embed_router import report

    cfg = _experiment_config(args)
    outcome = run_evaluation(cfg)
    _write_outcome(outcome, cfg.output_dir)
    print(report.render_console_table(outcome.table))
    print(f"\nwrote {cfg.output_dir / 'results.csv'}")
    return 0


def cmd_seed_ablation(args) -> int:
    from embed_router import report

    cfg = _experiment_config(args)
    legs = run_seed_ablation(cfg)
    out_dir = cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "figures").mkdir(exist_ok=True)
    report.write_ablation_csv(legs, out_dir / "ablation.csv")
    report.save_ablation_figure(legs, out_dir / "figures" / "ablation.png")
    for shared, outcome in legs:
        print(f"shared_seed={'true' if shared else 'false'}")
        print(report.render_console_table(outcome.table))
        print()
    print(f"wrote {out_dir / 'ablation.csv'}")
    return 0


_COMMANDS = {
    "train": cmd_train,
    "register": cmd_register,
    "serve": cmd_serve,
    "match": cmd_match,
    "evaluate": cmd_evaluate,
    "seed-ablation": cmd_seed_ablation,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ParamError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (EmbedRouterError, OSError, TimeoutError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
