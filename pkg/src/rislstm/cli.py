"""Command line entry point: ``rislstm {gen,train,eval,bench,robust}``.

Every subcommand accepts ``--config <json> --seed <u64> --out <path>``. On
failure a single JSON line ``{"error": ..., "kind": ...}`` goes to stderr and
the exit code is 1 (2 for usage errors).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataset as dsmod
from . import evaluation as ev
from .neural import TrainConfig, calibrate_batchnorm, init_params, load_model, save_model
from .pilots import FEATURE_MODES, KRON_EVEN, feature_dim
from .pipeline import DESK_FRACTIONS, DESK_TRAIN, evaluate_split, profile, train_model
from .sysmodel import SystemConfig

log = logging.getLogger("rislstm")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _load_config(args) -> tuple[SystemConfig, int, tuple[int, int]]:
    cfg, hidden, dense = profile(args.profile)
    if args.config:
        cfg = SystemConfig.from_json(Path(args.config).read_text())
    if getattr(args, "powers", None):
        cfg = cfg.replace(powers_dbm=args.powers)
    return cfg, hidden, dense


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True))


def cmd_gen(args) -> dict:
    cfg, _, _ = _load_config(args)
    ds = dsmod.generate_dataset(
        cfg,
        args.samples,
        args.label_power,
        args.seed,
        feature_mode=args.feature_mode,
        codebook_kind="ideal" if args.ideal else "practical",
        reference=args.reference,
        fractions=tuple(args.fractions),
        workers=args.workers,
    )
    dsmod.save(ds, args.out)
    return {"samples": len(ds), "mean_label_size": float(ds.labels.sum(axis=1).mean()), "out": str(args.out)}


def cmd_train(args) -> dict:
    _, hidden, dense = _load_config(args)
    ds = dsmod.load(args.data)
    tr, va, te = dsmod.split(ds)
    hidden = args.hidden or hidden
    dense = tuple(args.dense) if args.dense else dense
    tcfg = TrainConfig(
        batch_size=args.batch_size,
        learning_rate=args.lr,
        max_epochs=args.epochs,
        patience=args.patience,
        sigmoid_threshold=args.threshold,
        seed=args.seed,
    )
    model, hist = train_model(tr, va, hidden, dense, tcfg, single_label=args.single_label)
    summary = {"epochs": len(hist), "best_epoch": hist.best_epoch, "train_loss": hist.train_loss,
               "val_loss": hist.val_loss, "test": evaluate_split(model, te, args.threshold, args.seed)}  # fmt: skip
    save_model(model, args.out, extra={"train_config": tcfg.to_dict(), "dataset_meta": vars(ds.meta),
                                       "single_label": args.single_label})  # fmt: skip
    _write_json(Path(args.out) / "history.json", summary)
    return {"out": str(args.out), **{k: summary[k] for k in ("epochs", "best_epoch", "test")}}


def _model_or_none(args):
    if not args.model:
        return None
    model, _ = load_model(args.model)
    return model


def cmd_eval(args) -> dict:
    cfg, _, _ = _load_config(args)
    model = _model_or_none(args)
    schemes = tuple(args.schemes.split(","))
    if model is None:
        schemes = tuple(s for s in schemes if s != ev.LSTM)
    report = ev.run_power_sweep(model, cfg, schemes, args.trials, args.seed, pilot_power_dbm=args.label_power,
                                threshold=args.threshold)  # fmt: skip
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ev.export_report(report, out / "report.json", "json")
    ev.export_report(report, out / "report.csv", "csv")
    return {"out": str(out), "rows": len(report.rows), "exceeds_es": report.metadata["exceeds_es"]}


def cmd_bench(args) -> dict:
    cfg, hidden, dense = _load_config(args)
    model = _model_or_none(args)
    if model is None:
        # untrained network at the profile's widths; latency depends on the architecture only
        model = init_params(feature_dim(cfg.n_tx, cfg.n_ris, KRON_EVEN), cfg.n_h * cfg.n_v, hidden, dense)
        calibrate_batchnorm(model, np.random.default_rng(args.seed).standard_normal((64, cfg.pilot_len, model.d_in)))
    timing = ev.benchmark_timing(model, cfg, args.trials, args.seed)
    energy = {s: ev.estimate_flops_energy(model if s == ev.LSTM else s, cfg) for s in ev.ALL_SCHEMES}
    result = {
        "ms_median": timing,
        "lstm_over_es_time": timing[ev.LSTM] / timing[ev.ES],
        "flops": {s: e[0] for s, e in energy.items()},
        "joules": {s: e[1] for s, e in energy.items()},
        "lstm_over_es_energy": energy[ev.LSTM][1] / energy[ev.ES][1],
    }
    _write_json(Path(args.out), result)
    return result


def cmd_robust(args) -> dict:
    cfg, _, _ = _load_config(args)
    model, _ = load_model(args.model)
    result = ev.robustness_study(model, cfg, args.perturb, args.trials, args.seed, args.label_power,
                                 threshold=args.threshold)  # fmt: skip
    _write_json(Path(args.out), result)
    return {k: result[k] for k in ("worst_case", "worst_norm_se_pct", "worst_ratio")}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rislstm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="SystemConfig JSON file (overrides --profile)")
        p.add_argument("--profile", choices=("desk", "full"), default="desk")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=Path, required=True)
        p.add_argument("--label-power", type=float, default=dsmod.DEFAULT_LABEL_DBM)
        p.add_argument("--threshold", type=float, default=0.5)
        return p

    p = common(sub.add_parser("gen", help="synthesize a labelled dataset"))
    p.add_argument("--samples", type=int, default=20_000)
    p.add_argument("--feature-mode", choices=FEATURE_MODES, default=KRON_EVEN)
    p.add_argument("--reference", choices=("zero", "random"), default="zero")
    p.add_argument("--ideal", action="store_true", help="label over the ideal (unit-amplitude) codebook")
    p.add_argument("--fractions", type=float, nargs=3, default=DESK_FRACTIONS)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_gen)

    p = common(sub.add_parser("train", help="train the LSTM on a dataset directory"))
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--hidden", type=int)
    p.add_argument("--dense", type=int, nargs=2)
    p.add_argument("--batch-size", type=int, default=DESK_TRAIN["batch_size"])
    p.add_argument("--lr", type=float, default=DESK_TRAIN["learning_rate"])
    p.add_argument("--epochs", type=int, default=DESK_TRAIN["max_epochs"])
    p.add_argument("--patience", type=int, default=DESK_TRAIN["patience"])
    p.add_argument("--single-label", action="store_true")
    p.set_defaults(func=cmd_train)

    p = common(sub.add_parser("eval", help="power sweep over ES / AO / LSTM / Random"))
    p.add_argument("--model", type=Path)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--powers", type=_floats)
    p.add_argument("--schemes", default=",".join(ev.ALL_SCHEMES))
    p.set_defaults(func=cmd_eval)

    p = common(sub.add_parser("bench", help="latency and FLOP/energy comparison"))
    p.add_argument("--model", type=Path)
    p.add_argument("--trials", type=int, default=20)
    p.set_defaults(func=cmd_bench)

    p = common(sub.add_parser("robust", help="normalized SE under +/- perturbed propagation parameters"))
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--perturb", type=float, default=0.2)
    p.set_defaults(func=cmd_robust)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.seed < 0:
        parser.error("--seed must be unsigned")
    try:
        result = args.func(args)
    except Exception as exc:  # surfaced as one machine-readable line
        print(json.dumps({"error": str(exc), "kind": type(exc).__name__}), file=sys.stderr)
        return 1
    print(json.dumps(result, sort_keys=True, default=float))
    return 0


if __name__ == "__main__":
    sys.exit(main())
