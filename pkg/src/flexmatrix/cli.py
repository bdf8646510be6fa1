"""``flexmatrix`` command line.

Exit codes: 0 success, 1 configuration or input error, 2 infeasible fleet,
3 I/O failure, 4 verification bound violated.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .core import ConstraintSet
from .errors import (
    AllMasked,
    ArchetypeInfeasible,
    HorizonTooShort,
    InfeasibleEnergy,
    JointlyInfeasible,
    SessionError,
)
from .fleetgen import load_archetype, sample_fleet
from .heatmap import render_heatmap
from .io import ConfigError, RunConfig, load_config, read_sessions_csv, sessions_to_csv
from .matrix import (
    MonteCarloSpec,
    Normalization,
    ReductionPotentialMatrix,
    build_matrix,
    matrix_to_csv,
    monte_carlo_matrix,
    read_matrix_csv,
)
from .verify import run_verify

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_IO = 3
EXIT_VERIFY = 4

DEFAULT_OUT_CSV = Path("reduction_potential.csv")


def _err(message: str) -> None:
    print(f"flexmatrix: {message}", file=sys.stderr)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")


def compute_matrix(config: RunConfig) -> ReductionPotentialMatrix:
    config.validate()
    normalization = config.effective_normalization()
    if config.archetype is not None:
        archetype = load_archetype(config.archetype)
        spec = MonteCarloSpec(config.fleet_size, config.samples, config.seed)
        return monte_carlo_matrix(
            archetype, spec, config.horizon, config.max_delay, normalization,
            global_capacity_kw=config.global_capacity_kw,
            resolution_kwh=config.resolution_kwh, workers=config.threads,
        )
    sessions = read_sessions_csv(config.sessions_path, config.horizon)
    try:
        constraints = ConstraintSet(sessions, config.capacity_groups, config.global_capacity_kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    matrix = build_matrix(constraints, config.horizon, config.max_delay, config.resolution_kwh, config.threads)
    if normalization is Normalization.PER_VEHICLE:
        matrix = replace(matrix, values=matrix.values / len(sessions) if sessions else matrix.values,
                         normalization=normalization)
    return matrix


def summary(matrix: ReductionPotentialMatrix) -> str:
    value, t, k = matrix.peak()
    unit = "kW per vehicle" if matrix.normalization is Normalization.PER_VEHICLE else "kW"
    energy_unit = "kWh per vehicle" if matrix.normalization is Normalization.PER_VEHICLE else "kWh"
    lines = [
        f"peak reduction potential: {value:.6f} {unit} at t={t} ({matrix.horizon.clock_label(t)}), k={k}",
        f"total shiftable energy (first row): {matrix.shiftable_energy_kwh():.6f} {energy_unit}"
        " -- sum over separate one-slot windows, not simultaneously dispatchable",
    ]
    if matrix.has_negative:
        lines.append("warning: negative cells present; capacity limits bind harder than unmanaged charging")
    return "\n".join(lines)


def cmd_matrix(config: RunConfig) -> int:
    try:
        matrix = compute_matrix(config)
    except (InfeasibleEnergy, JointlyInfeasible, ArchetypeInfeasible) as exc:
        _err(f"infeasible fleet: {exc}")
        return EXIT_INFEASIBLE
    except (ConfigError, SessionError, HorizonTooShort, ValueError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO
    try:
        _write(config.out_csv or DEFAULT_OUT_CSV, matrix_to_csv(matrix))
        if config.out_svg is not None:
            _write(config.out_svg, render_heatmap(matrix))
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO
    print(summary(matrix))
    return EXIT_OK


def cmd_verify(config: RunConfig, trials: int, seed: int, flow_solver=None) -> int:
    """Cross-check solvers on ``trials`` random instances. ``flow_solver`` replaces the flow solver under test."""
    kwargs = {} if flow_solver is None else {"flow_solver": flow_solver}
    report = run_verify(trials, seed, resolution_kwh=config.resolution_kwh, **kwargs)
    print(f"trials: {report.trials}")
    print(f"max flow-oracle discrepancy: {report.max_discrepancy_kwh:.9f} kWh "
          f"(largest allowed bound {report.max_gap_kwh:.6f} kWh)")
    for i, inst, problems in report.failures:
        print(f"FAIL trial {i} (reproduce: --seed {seed} trial {i}): {'; '.join(problems)}")
        print(f"  horizon={inst.horizon} window={inst.window}")
        print(f"  constraints={inst.constraints}")
    if not report.ok:
        return EXIT_VERIFY
    print("all instances within bounds")
    return EXIT_OK


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    if getattr(args, "sessions", None):
        overrides.update(sessions_path=Path(args.sessions), archetype=None)
    if getattr(args, "archetype", None):
        overrides.update(archetype=args.archetype, sessions_path=None)
    for flag, attr in (("fleet_size", "fleet_size"), ("samples", "samples"), ("seed", "seed"),
                       ("max_delay", "max_delay"), ("threads", "threads")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[attr] = value
    if getattr(args, "normalization", None):
        overrides["normalization"] = Normalization.parse(args.normalization)
    if getattr(args, "out_csv", None):
        overrides["out_csv"] = Path(args.out_csv)
    if getattr(args, "out_svg", None):
        overrides["out_svg"] = Path(args.out_svg)
    return replace(config, **overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flexmatrix", description="EV fleet reduction potential matrices.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, inputs=True):
        p.add_argument("--config", help="JSON run config")
        if inputs:
            p.add_argument("--sessions", help="sessions CSV")
            p.add_argument("--archetype", help="archetype JSON path, or 'freight' / 'transit'")
        p.add_argument("--fleet-size", type=int)
        p.add_argument("--seed", type=int)

    p = sub.add_parser("matrix", help="compute a reduction potential matrix")
    common(p)
    p.add_argument("--samples", type=int, help="Monte Carlo samples (archetype mode)")
    p.add_argument("--max-delay", type=int)
    p.add_argument("--normalization", choices=["aggregate", "per-vehicle"])
    p.add_argument("--out-csv")
    p.add_argument("--out-svg")
    p.add_argument("--threads", type=int, help="worker processes, 0 = one per CPU")

    p = sub.add_parser("verify", help="cross-check solvers on random small instances")
    p.add_argument("--config", help="JSON run config (only resolution_kwh is used)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("sample", help="write one sampled fleet as a sessions CSV")
    common(p, inputs=False)
    p.add_argument("--archetype", required=False)
    p.add_argument("--out-csv", help="defaults to standard output")

    p = sub.add_parser("heatmap", help="render a matrix CSV as SVG")
    p.add_argument("matrix_csv")
    p.add_argument("--config", help="JSON run config (horizon fields)")
    p.add_argument("--normalization", choices=["aggregate", "per-vehicle"])
    p.add_argument("--out-svg", required=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args) if args.command != "verify" else (
            load_config(args.config) if args.config else RunConfig())
    except (ConfigError, ValueError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO

    if args.command == "matrix":
        return cmd_matrix(config)
    if args.command == "verify":
        return cmd_verify(config, args.trials, args.seed)
    if args.command == "sample":
        if not config.archetype:
            _err("sample needs --archetype")
            return EXIT_CONFIG
        try:
            sessions = sample_fleet(load_archetype(config.archetype), config.fleet_size, config.horizon, config.seed)
        except ArchetypeInfeasible as exc:
            _err(str(exc))
            return EXIT_INFEASIBLE
        except (HorizonTooShort, ValueError) as exc:
            _err(str(exc))
            return EXIT_CONFIG
        except OSError as exc:
            _err(f"I/O error: {exc}")
            return EXIT_IO
        text = sessions_to_csv(sessions)
        if config.out_csv:
            try:
                _write(config.out_csv, text)
            except OSError as exc:
                _err(f"I/O error: {exc}")
                return EXIT_IO
        else:
            sys.stdout.write(text)
        return EXIT_OK
    # heatmap
    try:
        matrix = read_matrix_csv(
            args.matrix_csv,
            config.horizon.slot_duration_hours,
            config.horizon.start_hour,
            config.effective_normalization() if config.normalization else Normalization.AGGREGATE,
        )
        render_heatmap(matrix, config.out_svg)
    except OSError as exc:
        _err(f"I/O error: {exc}")
        return EXIT_IO
    except (AllMasked, ValueError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
