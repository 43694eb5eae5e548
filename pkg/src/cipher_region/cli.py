"""``cipher-region`` command line: capacity, rd, region, simulate, equivocation."""

from __future__ import annotations

import argparse
import io
import json
import sys
from typing import Optional

import numpy as np

from cipher_region.cipher_sim import (
    DEFAULT_EPSILON,
    IdealBackend,
    RateOverflow,
    SchemeConfig,
    SchemeError,
    Strategy,
    UncodedBackend,
    build_rd_codebook,
    ideal_key_budget,
    run_additive_uncoded,
    run_matched_additive,
    run_separation,
    separation_cryptogram,
)
from cipher_region.config import (
    ConfigError,
    ExperimentConfig,
    field_integer,
    field_number,
    field_pmf,
    load_config,
)
from cipher_region.equivocation import (
    ENUMERATION_BUDGET,
    BudgetExceeded,
    enumerate_scheme_joint,
    equivocation_lower_bound,
    separation_equivocation_identity,
)
from cipher_region.info_core import DimensionMismatch, InvalidDistribution
from cipher_region.rd_capacity import (
    CAPACITY_TOL,
    RD_TOL,
    ConvergenceError,
    InfeasibleDistortion,
    capacity,
    rate_distortion,
)
from cipher_region.region import REGION_RD_TOL, h_star, is_achievable

CSV_HEADER = "# cipher-region v1"
EXIT_USAGE = 2

# failures that are the user's input, not a bug
_INPUT_ERRORS = (
    ConfigError,
    InvalidDistribution,
    DimensionMismatch,
    InfeasibleDistortion,
    RateOverflow,
    SchemeError,
    BudgetExceeded,
    ConvergenceError,
    ValueError,
)


def fmt9(x: float) -> str:
    return format(float(x), ".9g")


def write_csv(columns: list, rows: list) -> str:
    out = io.StringIO()
    out.write(CSV_HEADER + "\n")
    out.write(",".join(columns) + "\n")
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, bool):
                cells.append("1" if v else "0")
            elif isinstance(v, (float, int, np.floating, np.integer)):
                cells.append(fmt9(v))
            elif v is None:
                cells.append("")
            else:
                cells.append(str(v))
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def write_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _grid(cfg: ExperimentConfig, spec) -> list:
    if cfg.grid is not None:
        return cfg.grid
    points = cfg.grid_points or 101
    return [float(x) for x in spec.default_grid(points)]


def _format(args, cfg: ExperimentConfig, default: str) -> str:
    return args.format or cfg.output_format or default


def cmd_capacity(cfg: ExperimentConfig, args) -> str:
    ch = cfg.require_channel()
    res = capacity(ch, args.tol or cfg.tol or CAPACITY_TOL)
    if _format(args, cfg, "text") == "json":
        return write_json(
            {
                "capacity": res.capacity,
                "optimal_input": [float(p) for p in res.optimal_input.probs],
                "iterations": res.iterations,
                "gap": res.gap,
            }
        )
    if _format(args, cfg, "text") == "csv":
        return write_csv(
            ["capacity", "iterations", "gap"], [(res.capacity, res.iterations, res.gap)]
        )
    probs = " ".join(f"{p:.6f}" for p in res.optimal_input.probs)
    return (
        f"capacity: {res.capacity:.6f}\n"
        f"optimal_input: {probs}\n"
        f"iterations: {res.iterations}\n"
        f"gap: {res.gap:.3g}\n"
    )


def cmd_rd(cfg: ExperimentConfig, args) -> str:
    spec = cfg.require_spec()
    tol = args.tol or cfg.tol or RD_TOL
    rows = []
    for D in _grid(cfg, spec):
        try:
            pt = rate_distortion(spec.source, spec.distortion, D, tol)
            rows.append((D, pt.rate, pt.slope, "ok"))
        except InfeasibleDistortion:
            rows.append((D, None, None, "infeasible"))
    if _format(args, cfg, "csv") == "json":
        return write_json(
            [{"D": D, "R": r, "slope": s, "status": st} for D, r, s, st in rows]
        )
    return write_csv(["D", "R", "slope", "status"], rows)


def cmd_region(cfg: ExperimentConfig, args) -> str:
    spec = cfg.require_spec()
    tol = args.tol or cfg.tol or REGION_RD_TOL
    rows = []
    for D in _grid(cfg, spec):
        try:
            r = spec.rate(D, tol)
        except InfeasibleDistortion:
            rows.append((D, None, None, None, "infeasible"))
            continue
        hs = h_star(spec, D, tol)
        rows.append((D, r, hs, r <= spec.key_rate + 1e-9, "ok"))
    if _format(args, cfg, "csv") == "json":
        return write_json(
            {
                "capacity": spec.capacity,
                "lambda": spec.lam,
                "source_entropy": spec.source_entropy,
                "rows": [
                    {"D": D, "R": r, "h_star": hs, "perfect_secrecy": ps, "status": st}
                    for D, r, hs, ps, st in rows
                ],
            }
        )
    return write_csv(["D", "R", "h_star", "perfect_secrecy", "status"], rows)


def _backend(block: dict):
    b = block.get("backend", {"type": "ideal", "delta": 0.0})
    if not isinstance(b, dict):
        raise ConfigError("simulate.backend: expected an object")
    kind = b.get("type", "ideal")
    if kind == "ideal":
        delta = field_number(b, "delta", "simulate.backend", 0.0)
        if not 0 <= delta <= 1:
            raise ConfigError("simulate.backend.delta: must lie in [0, 1]")
        return IdealBackend(delta)
    if kind == "uncoded":
        return UncodedBackend()
    raise ConfigError(f"simulate.backend.type: expected 'ideal' or 'uncoded', got {kind!r}")


def cmd_simulate(cfg: ExperimentConfig, args) -> str:
    spec = cfg.require_spec()
    block = cfg.simulate
    path = "simulate"
    try:
        strategy = Strategy(block.get("strategy", "separation"))
    except ValueError:
        raise ConfigError(
            f"{path}.strategy: expected one of {[s.value for s in Strategy]}"
        ) from None
    trials = field_integer(block, "trials", path)
    if trials < 1:
        raise ConfigError("trials must be positive")
    N = field_integer(block, "N", path)
    epsilon = field_number(block, "epsilon", path, DEFAULT_EPSILON)
    seed = cfg.seed
    config = SchemeConfig(spec, N, epsilon, strategy, _backend(block), seed)

    target = None
    if strategy is Strategy.SEPARATION:
        target = field_number(block, "target_D", path)
        report = run_separation(config, target, trials)
    elif strategy is Strategy.MATCHED_ADDITIVE:
        report = run_matched_additive(config, trials)
    else:
        z_law = field_pmf(block, "z_law", cfg.symbols.get("source"), path)
        report = run_additive_uncoded(config, z_law, trials)

    D = report.distortion
    boundary = {
        "D": D,
        "distortion_basis": "expected" if report.expected_distortion is not None else "empirical",
        "R": spec.rate(D),
        "h_star": h_star(spec, D),
        "capacity": spec.capacity,
        "lambda": spec.lam,
        "source_entropy": spec.source_entropy,
        "achievable": is_achievable(spec, report.tradeoff_point()),
    }
    if target is not None:
        boundary["target_D"] = target
        boundary["equivocation_lower_bound_bits"] = equivocation_lower_bound(spec, target, epsilon, N)
    return write_json(
        {
            "format": "cipher-region v1",
            "command": "simulate",
            "seed": seed,
            "report": report.to_dict(),
            "boundary": boundary,
        }
    )


def cmd_equivocation(cfg: ExperimentConfig, args) -> str:
    block = cfg.equivocation
    path = "equivocation"
    scheme_name = block.get("scheme", "separation")
    N = field_integer(block, "N", path)
    if N < 1:
        raise ConfigError(f"{path}.N: must be >= 1")
    spec = cfg.require_spec()
    source = spec.source
    k = source.alphabet_size
    extra = {}
    if scheme_name in ("one_time_pad", "identity"):
        if k != 2:
            raise ConfigError(f"{path}.scheme: {scheme_name} needs a binary source")
        key_bits = N if scheme_name == "one_time_pad" else 0
        ell = key_bits

        def scheme(u, key):
            return tuple((a ^ b) for a, b in zip(u, key)) if key else tuple(u)

    elif scheme_name == "separation":
        epsilon = field_number(block, "epsilon", path, DEFAULT_EPSILON)
        target = field_number(block, "target_D", path)
        size = k**N
        if size > ENUMERATION_BUDGET:
            raise BudgetExceeded(size)
        cb = build_rd_codebook(source, spec.distortion, target, N, epsilon, cfg.seed)
        m = cb.index_bits
        if "ell" in block:
            ell = field_integer(block, "ell", path)
            if not 0 <= ell <= m:
                raise ConfigError(f"{path}.ell: must lie in [0, {m}]")
        else:
            n = spec.lam * N
            ell = min(ideal_key_budget(spec, int(round(n)), epsilon), m)
        key_bits = ell

        def scheme(u, key):
            return separation_cryptogram(u, key, cb, ell)

        extra = {
            "target_D": target,
            "separation_lower_bound_bits": equivocation_lower_bound(spec, target, epsilon, N),
        }
    else:
        raise ConfigError(
            f"{path}.scheme: expected 'separation', 'one_time_pad' or 'identity', got {scheme_name!r}"
        )

    joint = enumerate_scheme_joint(scheme, source, N, key_bits)
    eq_bits = joint.equivocation_bits()
    h_w = joint.cryptogram_entropy()
    ident = separation_equivocation_identity(N, joint.m, ell, spec.source_entropy, h_w)
    result = {
        "scheme": scheme_name,
        "N": N,
        "m": joint.m,
        "ell": ell,
        "equivocation_bits": eq_bits,
        "equivocation_rate": eq_bits / N,
        "cryptogram_entropy_bits": h_w,
        "identity_bits": ident,
        "identity_agrees": abs(ident - eq_bits) <= 1e-9,
        "source_entropy_bits": N * spec.source_entropy,
        **extra,
    }
    if _format(args, cfg, "text") == "json":
        return write_json(result)
    lines = [f"{key}: {_text(v)}" for key, v in result.items()]
    return "\n".join(lines) + "\n"


def _text(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return fmt9(v)
    return str(v)


COMMANDS = {
    "capacity": cmd_capacity,
    "rd": cmd_rd,
    "region": cmd_region,
    "simulate": cmd_simulate,
    "equivocation": cmd_equivocation,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON experiment config")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--tol", type=float, help="solver tolerance")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=["csv", "json"], help="output format")
    parser = argparse.ArgumentParser(
        prog="cipher-region",
        description="Cipher-system region with a capacity-limited key channel.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "capacity": "capacity of the key channel",
        "rd": "rate-distortion curve over a D grid",
        "region": "region boundary (D, R(D), h*(D)) over a D grid",
        "simulate": "simulate a scheme and compare with the boundary",
        "equivocation": "exact equivocation by enumeration",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    command = COMMANDS[args.command]
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.tol is not None and args.tol <= 0:
            raise ConfigError("--tol must be > 0")
        text = command(cfg, args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _INPUT_ERRORS as exc:
        if args.command in ("simulate", "equivocation"):
            err = {"error": {"type": type(exc).__name__, "message": str(exc)}}
            print(json.dumps(err, sort_keys=True), file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or cfg.output_path
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
