"""Command-line interface.

Subcommands:
    simulate <config> --out <dir> [--jobs N]   full Monte Carlo campaign
    precision <config> --out <dir>             loss model + theoretical curve
    optimize <config> --out <dir>              worst-case loss search
    reduce <config>                            print the symmetric-sector protocol

Exit codes: 0 success, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .campaign import (
    _fmt,
    build_protocol,
    build_truth,
    emit_histogram,
    parse_config,
    run_campaign,
    write_report,
)
from .exceptions import ConfigError, TomographyError
from .precision import loss_model, maximize_loss, minimal_loss
from .protocols import format_protocol
from .symmetric import reduce_protocol

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polytomo",
        description="Simulate and analyze polyhedral tomography protocols "
                    "for 1-3 polarization qubits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo campaign")
    sim.add_argument("config", help="key=value campaign config file")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--jobs", type=int, default=1,
                     help="concurrent runs (results are identical for any value)")

    prec = sub.add_parser("precision", help="loss model and theoretical curve only")
    prec.add_argument("config")
    prec.add_argument("--out", required=True)

    opt = sub.add_parser("optimize", help="worst-case loss over pure states")
    opt.add_argument("config")
    opt.add_argument("--out", required=True)
    opt.add_argument("--starts", type=int, default=64)
    opt.add_argument("--max-evals", type=int, default=2000)
    opt.add_argument("--seed", type=int, default=2024)

    red = sub.add_parser("reduce", help="print the symmetric-sector protocol")
    red.add_argument("config")
    return parser


def _cmd_simulate(args) -> int:
    cfg = parse_config(args.config)
    report = run_campaign(cfg, jobs=max(1, args.jobs))
    write_report(report, args.out)
    loss = "n/a" if report.theoretical_loss is None else f"{report.theoretical_loss:.4g}"
    print(f"mean fidelity {report.mean_fidelity:.6f}  "
          f"empirical loss {report.empirical_loss:.4g}  theoretical loss {loss}")
    print(f"wrote {Path(args.out).resolve()}")
    return EXIT_OK


def _cmd_precision(args) -> int:
    cfg = parse_config(args.config)
    protocol = build_protocol(cfg)
    rho_true, pure_true = build_truth(cfg)
    model = loss_model(protocol, rho_true if pure_true is None else pure_true,
                       rank=cfg.rank)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "config": cfg.__dict__,
        "coefficients": [float(d) for d in model.coefficients],
        "dof": model.dof,
        "mean_loss": model.mean_loss,
        "scaled_loss": model.scaled_loss,
        "minimal_loss": minimal_loss(cfg.working_dim),
    }
    with open(out / "loss_model.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _, theory = emit_histogram([0.0], 1, model)
    with open(out / "hist_theory.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("z,density\n")
        for z, density in theory:
            fh.write(f"{_fmt(z)},{_fmt(density)}\n")
    with open(out / "protocol.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_protocol(protocol))
    print(f"scaled loss {model.scaled_loss:.6g} over {model.dof} degrees of freedom")
    print(f"wrote {out.resolve()}")
    return EXIT_OK


def _cmd_optimize(args) -> int:
    cfg = parse_config(args.config)
    protocol = build_protocol(cfg)
    state, value = maximize_loss(protocol, cfg.n, starts=args.starts,
                                 max_evals=args.max_evals, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    vec = state.column()
    payload = {
        "config": cfg.__dict__,
        "max_loss": value,
        "minimal_loss": minimal_loss(cfg.working_dim),
        "worst_state_re": [float(x) for x in vec.real],
        "worst_state_im": [float(x) for x in vec.imag],
        "starts": args.starts,
        "max_evals": args.max_evals,
        "seed": args.seed,
    }
    with open(out / "optimize.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"max loss {value:.4f} (lower bound {minimal_loss(cfg.working_dim)})")
    print(f"wrote {out.resolve()}")
    return EXIT_OK


def _cmd_reduce(args) -> int:
    cfg = parse_config(args.config)
    if cfg.qubits != 3:
        raise ConfigError("reduce needs qubits=3")
    # Build the full 8-dim protocol regardless of the degenerate flag, then
    # print its symmetric-sector reduction.
    from .protocols import assign_exposures, tensor_protocol
    from .campaign import PROTOCOL_BUILDERS

    single = PROTOCOL_BUILDERS[cfg.protocol]()
    full = assign_exposures(tensor_protocol([single] * 3), cfg.n)
    print(format_protocol(reduce_protocol(full)), end="")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "precision": _cmd_precision,
        "optimize": _cmd_optimize,
        "reduce": _cmd_reduce,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TomographyError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
