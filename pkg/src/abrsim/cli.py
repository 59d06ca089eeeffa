"""Command line front end.

    abrsim run --config scenario.conf [--out rows.csv] [--queue-trace q.csv]
    abrsim table 2 [--buffer bound] [--out table2.csv]
    abrsim check-bound --config scenario.conf [--a 3 --b 1 --c 1]
    abrsim sweep --param n_sources --values 1,2,5,10,15 [--config base.conf]
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from abrsim.experiments.config import ScenarioConfig, config_from_dict, load_config
from abrsim.experiments.metrics import BoundCoefficients, check_bound
from abrsim.experiments.runner import (
    bound_for,
    metrics_csv,
    run_many,
    run_table,
    simulate,
    sweep_configs,
    write_erica_trace,
    write_queue_trace,
)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _overrides(pairs: list[str] | None) -> dict:
    raw = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise SystemExit(f"--set expects key=value, got {pair!r}")
        k, v = pair.split("=", 1)
        raw[k.strip()] = v.strip()
    return raw


def _scenario(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig(name="default")
    extra = _overrides(getattr(args, "set", None))
    return config_from_dict(extra, cfg) if extra else cfg


def _buffer(cfg: ScenarioConfig, value: str | None) -> ScenarioConfig:
    if value is None:
        return cfg
    if value == "bound":
        return cfg.replace(buffer_cells=bound_for(cfg))
    if value == "unbounded":
        return cfg.replace(buffer_cells=None)
    return cfg.replace(buffer_cells=int(value))


def cmd_run(args) -> int:
    cfg = _buffer(_scenario(args), args.buffer)
    result = simulate(cfg, queue_trace=bool(args.queue_trace), erica_trace=bool(args.erica_trace))
    _emit(metrics_csv([result.metrics]), args.out)
    if args.queue_trace:
        write_queue_trace(result.queue_trace, args.queue_trace)
    if args.erica_trace:
        write_erica_trace(result.erica_trace, args.erica_trace)
    return 0


def cmd_table(args) -> int:
    _emit(run_table(args.table, buffer_cells=args.buffer, workers=args.workers), args.out)
    return 0


def cmd_check_bound(args) -> int:
    cfg = _scenario(args)
    k = BoundCoefficients(args.a, args.b, args.c)
    bound = bound_for(cfg, k)
    if args.sized:
        cfg = cfg.replace(buffer_cells=bound)
    result = simulate(cfg, queue_trace=bool(args.queue_trace))
    m = result.metrics
    ok = check_bound(m, bound) and (not args.sized or (m.drops == 0 and not m.timeout_flag))
    if args.out:
        Path(args.out).write_text(metrics_csv([m]))
    if args.queue_trace:
        write_queue_trace(result.queue_trace, args.queue_trace)
    print(
        f"{'PASS' if ok else 'FAIL'} max_q={m.max_queue_cells} bound={bound} "
        f"(a={k.a:g} b={k.b:g} c={k.c:g}) drops={m.drops} timeouts={m.timeouts}"
    )
    return 0 if ok else 1


def cmd_sweep(args) -> int:
    base = _scenario(args)
    values = [v for v in args.values.replace(";", ",").split(",") if v.strip()]
    configs = [_buffer(c, args.buffer) for c in sweep_configs(base, args.param, values)]
    _emit(metrics_csv(run_many(configs, args.workers)), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abrsim", description="TCP over ATM ABR/ERICA buffer experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=False):
        p.add_argument("--config", required=config_required, help="key = value scenario file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--out", help="write CSV here instead of stdout")

    p = sub.add_parser("run", help="run one scenario")
    common(p)
    p.add_argument("--buffer", help="cells, 'bound' or 'unbounded'")
    p.add_argument("--queue-trace", help="CSV of bottleneck depth at every arrival")
    p.add_argument("--erica-trace", help="CSV of per-interval ERICA state at the bottleneck")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("table", help="run a preset table")
    p.add_argument("table", type=int, choices=[1, 2, 3, 4])
    p.add_argument("--buffer", help="cells or 'bound' (default unbounded)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("check-bound", help="compare the max queue with the predicted bound")
    common(p, config_required=True)
    p.add_argument("--a", type=float, default=3.0, help="RTT coefficient")
    p.add_argument("--b", type=float, default=1.0, help="averaging-interval coefficient")
    p.add_argument("--c", type=float, default=1.0, help="feedback-delay coefficient")
    p.add_argument("--sized", action="store_true", help="also run with buffers equal to the bound")
    p.add_argument("--queue-trace")
    p.set_defaults(func=cmd_check_bound)

    p = sub.add_parser("sweep", help="vary one config key")
    common(p)
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma separated")
    p.add_argument("--buffer")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
