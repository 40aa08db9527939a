"""Command-line front end: simulate circuits, analyze distillation rounds,
emit CSV sweeps, tabulate the bunch-and-subtract costs, and print plans.

All CSV output uses a header row, `.` decimals, and 12 significant digits, so
re-running a command with the same flags and seed produces identical bytes.
Monte Carlo paths use --seed (default 12345).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from typing import Sequence

from .circuits import (
    BUILTIN_NAMES,
    DISTILL3_PATTERN,
    Circuit,
    CircuitParseError,
    NamedCircuit,
    builtin_circuit,
    distill3,
    parse_circuit_text,
    run_circuit,
)
from .distill import (
    SCHEMES,
    analyze,
    break_even,
    n3_error_lower,
    n3_error_upper,
    n3_psuccess_lower,
    plan,
    sb_error,
    sb_expected_photons,
    sb_success_prob,
)
from .fock import DEFAULT_PRUNE_TOL, FockState, phase_normalized, prune, single_photon_state, tensor
from .measurement import DetectionPattern, WeightedEnsemble, postselect
from .noise import DetectorModel, noisy_postselect
from .source import SourceModel, enumerate_inputs, input_state

DEFAULT_SEED = 12345

__all__ = ["main"]


class UsageError(ValueError):
    """Bad command-line input; reported on stderr with a nonzero exit."""


@dataclass
class InputSpec:
    """Parsed --input mini-language."""

    num_photons: int
    overrides: dict[int, int]
    model: SourceModel | None

    def pure_state(self) -> FockState:
        modes = [self.overrides.get(rail, 0) for rail in range(self.num_photons)]
        return input_state(modes)


def parse_input_spec(text: str) -> InputSpec:
    """Parse `ideal:n[,error:k@r...][,model:...,eps=...]`.

    `ideal:n` places n photons, one per rail; `error:k@r` puts rail r's photon
    in error mode k; `model:allsame|alldistinct|explicit=p1,p2,...` with
    `eps=...` selects a source model instead of a fixed pure state.
    """
    num_photons: int | None = None
    overrides: dict[int, int] = {}
    model_kind: str | None = None
    explicit_weights: list[float] = []
    eps: float | None = None
    tokens = [t.strip() for t in text.split(",") if t.strip()]
    collecting_weights = False
    for token in tokens:
        if collecting_weights:
            try:
                explicit_weights.append(float(token))
                continue
            except ValueError:
                collecting_weights = False
        if token.startswith("ideal:"):
            num_photons = int(token[len("ideal:") :])
        elif token.startswith("error:"):
            body = token[len("error:") :]
            mode_text, _, rail_text = body.partition("@")
            if not rail_text:
                raise UsageError(f"error override {token!r} must look like error:k@r")
            overrides[int(rail_text)] = int(mode_text)
        elif token.startswith("model:"):
            body = token[len("model:") :]
            if body.startswith("explicit="):
                model_kind = "explicit"
                explicit_weights.append(float(body[len("explicit=") :]))
                collecting_weights = True
            elif body in ("allsame", "alldistinct"):
                model_kind = body
            else:
                raise UsageError(f"unknown model {body!r}")
        elif token.startswith("eps="):
            eps = float(token[len("eps=") :])
        else:
            raise UsageError(f"unknown input token {token!r}")
    if num_photons is None or num_photons < 1:
        raise UsageError("input spec must include ideal:n with n >= 1")
    if any(not 0 <= rail < num_photons for rail in overrides):
        raise UsageError("error override rail outside 0..n-1")
    model: SourceModel | None = None
    if model_kind == "allsame":
        if eps is None:
            raise UsageError("model:allsame requires eps=...")
        model = SourceModel.all_same(eps)
    elif model_kind == "alldistinct":
        if eps is None:
            raise UsageError("model:alldistinct requires eps=...")
        model = SourceModel.all_distinct(eps)
    elif model_kind == "explicit":
        model = SourceModel.explicit(explicit_weights)
        if eps is not None and abs(model.epsilon - eps) > 1e-12:
            raise UsageError(f"explicit weights sum to {model.epsilon}, not eps={eps}")
    return InputSpec(num_photons, overrides, model)


def parse_pattern(text: str) -> DetectionPattern:
    """Parse `rail:count,rail:count,...`."""
    counts: dict[int, int] = {}
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        rail_text, _, count_text = token.partition(":")
        if not count_text:
            raise UsageError(f"pattern token {token!r} must look like rail:count")
        try:
            counts[int(rail_text)] = int(count_text)
        except ValueError:
            raise UsageError(f"pattern token {token!r} must use integers") from None
    if not counts:
        raise UsageError("empty detection pattern")
    return DetectionPattern.from_counts(counts)


def _load_circuit(args: argparse.Namespace) -> NamedCircuit:
    if getattr(args, "builtin", None):
        try:
            return builtin_circuit(args.builtin)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if getattr(args, "circuit", None):
        try:
            with open(args.circuit, encoding="utf-8") as handle:
                text = handle.read()
        except OSError as exc:
            raise UsageError(f"cannot read circuit file: {exc}") from None
        try:
            return NamedCircuit(args.circuit, parse_circuit_text(text))
        except CircuitParseError as exc:
            raise UsageError(f"{args.circuit}: {exc}") from None
    raise UsageError("provide --builtin NAME or --circuit FILE")


def _fmt(value: float) -> str:
    return format(value, ".12g")


def _model_from_flags(args: argparse.Namespace) -> SourceModel:
    kind = args.model
    if kind == "allsame":
        return SourceModel.all_same(args.eps)
    if kind == "alldistinct":
        return SourceModel.all_distinct(args.eps)
    if kind.startswith("explicit="):
        model = SourceModel.explicit([float(p) for p in kind[len("explicit=") :].split(";")])
        if abs(model.epsilon - args.eps) > 1e-12:
            raise UsageError(f"explicit weights sum to {model.epsilon}, not eps={args.eps}")
        return model
    raise UsageError(f"unknown model {kind!r}")


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write output: {exc}") from None


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_simulate(args: argparse.Namespace) -> None:
    named = _load_circuit(args)
    spec = parse_input_spec(args.input)
    if spec.model is not None:
        raise UsageError("simulate prints amplitudes of a pure input; use `analyze` for source models")
    if spec.num_photons != named.circuit.num_rails:
        raise UsageError(
            f"input has {spec.num_photons} photons but the circuit has {named.circuit.num_rails} rails"
        )
    state = run_circuit(spec.pure_state(), named.circuit)
    state = phase_normalized(prune(state, args.tolerance))
    print(f"# circuit: {named.name} ({named.circuit.num_rails} rails, {len(named.circuit.elements)} elements)")
    print("# pre-measurement amplitudes (global-phase normalized):")
    for config, amp in sorted(state.items()):
        print(f"{config.ket(named.circuit.num_rails):<24s} {amp.real:+.9f}{amp.imag:+.9f}j   p={abs(amp) ** 2:.9f}")
    if args.pattern:
        pattern = parse_pattern(args.pattern)
        result = postselect(state, pattern)
        print(f"# post-selection {pattern}: probability {_fmt(result.probability)}")
        if result.conditional is not None:
            for weight, branch in result.conditional:
                terms = " ".join(
                    f"{config.ket()}:{amp.real:+.6f}{amp.imag:+.6f}j" for config, amp in sorted(branch.items())
                )
                print(f"#   branch weight {weight:.9f}: {terms}")


def cmd_analyze(args: argparse.Namespace) -> None:
    named = _load_circuit(args)
    model = _model_from_flags(args)
    if args.pattern:
        pattern = parse_pattern(args.pattern)
    elif named.name == "distill3":
        pattern = DetectionPattern.from_counts(DISTILL3_PATTERN)
    elif named.name == "distill4":
        pattern = DetectionPattern.from_counts({1: 1, 2: 1, 3: 1})
    else:
        raise UsageError("provide --pattern for circuits without a default")
    report = analyze(named, pattern, model)
    print(f"circuit:            {named.name}")
    print(f"model:              {args.model} eps={_fmt(report.epsilon_in)}")
    print(f"success prob:       {_fmt(report.p_success)}")
    print(f"output error:       {_fmt(report.epsilon_out)}")
    if report.bound_interval is not None:
        lo, hi = report.bound_interval
        print(f"closed-form bounds: [{_fmt(lo)}, {_fmt(hi)}]")
    print(f"photons per output: {_fmt(report.expected_photons_per_output)}")


def cmd_sweep(args: argparse.Namespace) -> None:
    if args.count < 2:
        raise UsageError("sweep needs at least 2 grid points")
    if not (0.0 <= args.start < 0.5 and 0.0 <= args.stop < 0.5):
        raise UsageError("sweep grid must lie within [0, 0.5)")
    if args.log:
        if args.start <= 0 or args.stop <= 0:
            raise UsageError("log grid needs positive endpoints")
        lo, hi = math.log(args.start), math.log(args.stop)
        grid = [math.exp(lo + (hi - lo) * i / (args.count - 1)) for i in range(args.count)]
    else:
        grid = [args.start + (args.stop - args.start) * i / (args.count - 1) for i in range(args.count)]
    circuit = distill3()
    pattern = DetectionPattern.from_counts(DISTILL3_PATTERN)
    header = (
        "epsilon,present3_lower,present3_upper,present3_exact_allsame,"
        "present3_exact_alldistinct,sb2,sb3,psuccess_exact,psuccess_bound"
    )
    lines = [header]
    for eps in grid:
        same = analyze(circuit, pattern, SourceModel.all_same(eps))
        distinct = analyze(circuit, pattern, SourceModel.all_distinct(eps))
        exact_for_model = analyze(circuit, pattern, _model_from_flags_with(args, eps))
        row = [
            eps,
            n3_error_lower(eps),
            n3_error_upper(eps),
            same.epsilon_out,
            distinct.epsilon_out,
            sb_error(2, eps),
            sb_error(3, eps),
            exact_for_model.p_success,
            n3_psuccess_lower(eps),
        ]
        lines.append(",".join(_fmt(v) for v in row))
    _write_text(args.output, "\r\n".join(lines) + "\r\n")


def _model_from_flags_with(args: argparse.Namespace, eps: float) -> SourceModel:
    if args.model == "allsame":
        return SourceModel.all_same(eps)
    if args.model == "alldistinct":
        return SourceModel.all_distinct(eps)
    raise UsageError("sweep supports --model allsame|alldistinct")


def cmd_sb_table(args: argparse.Namespace) -> None:
    if not 2 <= args.n_max <= 12:
        raise UsageError("n_max must lie in 2..12")
    print(f"{'n':>3s} {'P_ps':>14s} {'expected photons':>18s}")
    for n in range(2, args.n_max + 1):
        print(f"{n:>3d} {sb_success_prob(n):>14.6e} {sb_expected_photons(n):>18.6g}")


def cmd_plan(args: argparse.Namespace) -> None:
    try:
        steps, total = plan(args.eps0, args.target, args.scheme)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not steps:
        print(f"error {_fmt(args.eps0)} already meets target {_fmt(args.target)}: 0 rounds needed")
        return
    print(f"{'round':>5s} {'eps before':>14s} {'eps after':>14s} {'photons x':>12s}")
    for step in steps:
        print(
            f"{step.round_index:>5d} {step.epsilon_before:>14.6e} "
            f"{step.epsilon_after:>14.6e} {step.photon_cost_multiplier:>12.4f}"
        )
    print(f"total expected photons per output: {_fmt(total)}")


def cmd_noise_scan(args: argparse.Namespace) -> None:
    if not args.param:
        raise UsageError("provide at least one --param dark|loss|miscount")
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad --values list {args.values!r}") from None
    if len(values) < 2:
        raise UsageError("noise scan needs at least two parameter values")
    circuit = distill3().circuit
    pattern = DetectionPattern.from_counts(DISTILL3_PATTERN)
    inputs = enumerate_inputs(3, SourceModel.all_distinct(args.eps))
    evolved = WeightedEnsemble((w, run_circuit(s, circuit)) for w, s in inputs)
    lines = ["parameter,values,slope,r_squared"]
    for param in args.param:
        metrics = []
        for value in values:
            if param == "dark":
                model = DetectorModel(dark_count_prob=value)
            elif param == "loss":
                model = DetectorModel(loss_prob=value)
            elif param == "miscount":
                model = DetectorModel(miscount_prob=value)
            else:
                raise UsageError(f"unknown noise parameter {param!r}")
            stats = noisy_postselect(evolved, pattern, model, max_events=None)
            metric = stats.vacuum_output_prob if param == "loss" else stats.false_accept_bad_output_prob
            if metric <= 0.0:
                raise UsageError(f"metric vanished for {param}={value}; cannot fit a log-log slope")
            metrics.append(metric)
        slope, r_squared = _loglog_fit(values, metrics)
        lines.append(f"{param},{';'.join(_fmt(v) for v in values)},{_fmt(slope)},{_fmt(r_squared)}")
    _write_text(args.output, "\r\n".join(lines) + "\r\n")


def _loglog_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    lx = [math.log(x) for x in xs]
    ly = [math.log(y) for y in ys]
    n = len(lx)
    mean_x, mean_y = sum(lx) / n, sum(ly) / n
    sxx = sum((x - mean_x) ** 2 for x in lx)
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(lx, ly))
    slope = sxy / sxx
    syy = sum((y - mean_y) ** 2 for y in ly)
    r_squared = 1.0 if syy == 0 else (sxy * sxy) / (sxx * syy)
    return slope, r_squared


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photondistill",
        description="Simulate and analyze linear-optical distillation of indistinguishable photons.",
    )
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for Monte Carlo paths")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a circuit on a pure input and print amplitudes")
    sim.add_argument("--builtin", choices=BUILTIN_NAMES)
    sim.add_argument("--circuit", help="circuit file (rails/bs text format)")
    sim.add_argument("--input", required=True, help="e.g. ideal:3 or ideal:3,error:1@0")
    sim.add_argument("--pattern", help="detection pattern, e.g. 1:1,2:1")
    sim.add_argument("--tolerance", type=float, default=DEFAULT_PRUNE_TOL, help="prune tolerance")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="exact one-round distillation report")
    ana.add_argument("--builtin", choices=BUILTIN_NAMES)
    ana.add_argument("--circuit")
    ana.add_argument("--pattern")
    ana.add_argument("--model", default="alldistinct", help="allsame|alldistinct|explicit=p1;p2;...")
    ana.add_argument("--eps", type=float, required=True)
    ana.set_defaults(func=cmd_analyze)

    swe = sub.add_parser("sweep", help="CSV sweep of error reduction and success probability")
    swe.add_argument("--start", type=float, required=True)
    swe.add_argument("--stop", type=float, required=True)
    swe.add_argument("--count", type=int, required=True)
    swe.add_argument("--log", action="store_true", help="log-spaced grid")
    swe.add_argument("--model", default="alldistinct", help="model for the psuccess_exact column")
    swe.add_argument("--output", help="CSV path (default stdout)")
    swe.set_defaults(func=cmd_sweep)

    sbt = sub.add_parser("sb", help="bunch-and-subtract success probability table")
    sbt.add_argument("--n-max", type=int, default=6)
    sbt.set_defaults(func=cmd_sb_table)

    pla = sub.add_parser("plan", help="multi-round distillation plan")
    pla.add_argument("--eps0", type=float, required=True)
    pla.add_argument("--target", type=float, required=True)
    pla.add_argument("--scheme", choices=sorted(SCHEMES), default="present3")
    pla.set_defaults(func=cmd_plan)

    noi = sub.add_parser("noise-scan", help="CSV of noise-order slopes")
    noi.add_argument("--param", action="append", choices=["dark", "loss", "miscount"])
    noi.add_argument("--values", required=True, help="comma-separated parameter values")
    noi.add_argument("--eps", type=float, default=0.0, help="source error rate")
    noi.add_argument("--output", help="CSV path (default stdout)")
    noi.set_defaults(func=cmd_noise_scan)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, CircuitParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
