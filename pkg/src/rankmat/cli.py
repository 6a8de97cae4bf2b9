"""Command-line entry point: ``rankmat {compare,train,eval,ranks}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dataset import load_ratings, split
from .experiments import emit_plot_data, run_comparison
from .metrics import (
    FreqDistribution,
    evaluate,
    recommendation_counts,
    top_n_recommend,
)
from .models import EmbeddingModel, ModelKind
from .ranking import RankBasis, compute_ranks, dump_ranks
from .trainer import TrainConfig, TrainTrace, default_grid, train

log = logging.getLogger("rankmat")


def parse_grid(text: str) -> list[float]:
    try:
        rates = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad learning-rate list: {text!r}") from None
    if not rates:
        raise argparse.ArgumentTypeError("empty learning-rate list")
    return rates


def _coerce(value: str):
    low = value.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value


def load_config(path) -> dict:
    """Read a JSON object or ``key = value`` lines (``#`` comments allowed).

    Keys are :class:`TrainConfig` fields plus ``grid``, ``ratio``, ``basis``
    and ``topn``.
    """
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return json.loads(text)
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        value = value.strip("\"'")
        out[key] = parse_grid(value.strip("[]")) if key == "grid" else _coerce(value)
    return out


def _settings(args) -> dict:
    """Merge config file and flags; explicit flags win."""
    s = {
        "kind": "vanilla", "k": 10, "epochs": 100, "seed": 42, "init_scale": 0.1,
        "shuffle_each_epoch": True, "ratio": 0.8, "basis": "sum", "topn": 10,
        "grid": default_grid(), "learning_rate": 0.01,
    }
    if getattr(args, "config", None):
        s.update(load_config(args.config))
    for key in s:
        value = getattr(args, key, None)
        if value is not None:
            s[key] = value
    return s


def _train_config(s: dict, **extra) -> TrainConfig:
    fields = ("kind", "k", "learning_rate", "epochs", "seed", "init_scale", "shuffle_each_epoch")
    d = {f: s[f] for f in fields}
    d.update(extra)
    return TrainConfig(**d)


def cmd_compare(args) -> int:
    s = _settings(args)
    overrides = {
        "k": s["k"], "epochs": s["epochs"], "seed": s["seed"],
        "init_scale": s["init_scale"], "shuffle_each_epoch": s["shuffle_each_epoch"],
    }
    table = run_comparison(
        args.data, overrides, s["grid"], ratio=s["ratio"], basis=RankBasis(s["basis"]), top_n=s["topn"]
    )
    for path in emit_plot_data(table, args.out):
        print(path)
    return 0


def cmd_train(args) -> int:
    s = _settings(args)
    config = _train_config(s)
    pair = split(load_ratings(args.data), s["ratio"], s["seed"])
    ranks = compute_ranks(pair.train, RankBasis(s["basis"]))
    trace = train(config, pair.train, ranks)
    model = trace.final_model
    model.config = {**config.to_dict(), "ratio": s["ratio"], "basis": s["basis"]}
    report = evaluate(trace, pair.train, pair.test, ranks, top_n=s["topn"])
    if args.out:
        model.save(args.out)
    print(report.to_json())
    return 0


def cmd_eval(args) -> int:
    model = EmbeddingModel.load(args.model)
    cfg = dict(model.config)
    ratio = cfg.pop("ratio", 0.8)
    basis = RankBasis(args.basis or cfg.pop("basis", "sum"))
    cfg.pop("basis", None)
    config = TrainConfig.from_dict(cfg) if cfg else TrainConfig(kind=model.kind)
    pair = split(load_ratings(args.data), ratio, config.seed)
    ranks = compute_ranks(pair.train, basis)
    trace = TrainTrace(losses=[], diverged=not model.is_finite(), final_model=model, config=config)
    report = evaluate(trace, pair.train, pair.test, ranks, top_n=args.topn)
    if args.freq_out and not report.diverged:
        lists = top_n_recommend(model, pair.train, ranks, args.topn)
        FreqDistribution.from_counts(recommendation_counts(lists, pair.train.item_count)).dump(args.freq_out)
    print(report.to_json())
    return 0


def cmd_ranks(args) -> int:
    data = load_ratings(args.data)
    source = data if args.full else split(data, args.ratio, args.seed).train
    ranks = compute_ranks(source, RankBasis(args.basis))
    if args.out:
        dump_ranks(ranks, args.out)
    else:
        top = ranks.item_rank.argsort()[:10]
        inv = {v: k for k, v in data.item_id_map.items()}
        for j in top:
            print(f"{ranks.item_rank[j]:>4}  item {inv[int(j)]}  score {ranks.item_score[j]:g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rankmat", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_lr=False):
        sp.add_argument("--data", required=True, help="MovieLens ratings.csv")
        sp.add_argument("--config", help="JSON or key=value config file")
        sp.add_argument("--k", type=int)
        sp.add_argument("--epochs", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--init-scale", dest="init_scale", type=float)
        sp.add_argument("--ratio", type=float)
        sp.add_argument("--topn", type=int)
        sp.add_argument("--basis", choices=[b.value for b in RankBasis])
        if with_lr:
            sp.add_argument("--lr", dest="learning_rate", type=float)
            sp.add_argument("--kind", choices=[k.value for k in ModelKind])

    sp = sub.add_parser("compare", help="sweep all three models over a learning-rate grid")
    common(sp)
    sp.add_argument("--grid", type=parse_grid, help="comma-separated learning rates")
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("train", help="train one model and report its metrics")
    common(sp, with_lr=True)
    sp.add_argument("--out", help="write the model checkpoint (JSON) here")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a saved model checkpoint")
    sp.add_argument("--data", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--topn", type=int, default=10)
    sp.add_argument("--basis", choices=[b.value for b in RankBasis])
    sp.add_argument("--freq-out", help="dump the top-N frequency distribution as CSV")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("ranks", help="compute popularity ranks")
    sp.add_argument("--data", required=True)
    sp.add_argument("--basis", choices=[b.value for b in RankBasis], default="sum")
    sp.add_argument("--ratio", type=float, default=0.8)
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--full", action="store_true", help="rank the whole file instead of the train split")
    sp.add_argument("--out", help="CSV path for entity_type,dense_index,score,rank")
    sp.set_defaults(func=cmd_ranks)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"rankmat: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
