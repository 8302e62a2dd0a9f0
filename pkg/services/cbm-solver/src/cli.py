"""
Command-line entry point for the CBM Solver
Subcommands: generate, solve, simulate, table1, table2, sweep, validate
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, NoReturn, Optional

import numpy as np
from pydantic import ValidationError

from config import (
    DATA_DIR,
    DEFAULT_JOBS,
    TABLE2_DEFAULTS,
    configure_logging,
    cost_setting,
    load_experiment_config,
)
from errors import CBMSolverError
from experiment_runner import (
    ExperimentRunner,
    solution_document,
    summary_path,
    write_csv,
)
from instance_generator import build_params, generate_instance, load_instance, save_instance
from mdp_builder import MDPBuilder, solve_policy_class
from mdp_solver import MDPSolver
from models import (
    Action,
    ErrorResponse,
    GeneratorConfig,
    ModelParams,
    PolicyClass,
    SimConfig,
    SimulationReport,
    SolutionDocument,
    SystemState,
)
from simulator import PolicySimulator, write_trace
from state_space import StateSpace
from validation import validate_model

logger = logging.getLogger(__name__)

EXIT_FAILURE = 1
EXIT_USAGE = 2


def emit_error(error: str, error_code: str, details: Optional[Dict[str, Any]] = None) -> None:
    print(ErrorResponse(error=error, error_code=error_code, details=details).model_dump_json())


class JsonArgumentParser(argparse.ArgumentParser):
    """Usage errors as an error document on stdout"""

    def error(self, message: str) -> NoReturn:
        emit_error(message, "USAGE_ERROR", {"usage": self.format_usage().strip()})
        sys.exit(EXIT_USAGE)


def write_document(document: str, out: Optional[Path]) -> None:
    if out is None:
        print(document)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(document + "\n")
    logger.info(f"Output written to {out}")


def model_params(args: argparse.Namespace) -> ModelParams:
    """Instance from --instance or --seed plus the load, phase and cost flags"""
    if args.instance is not None:
        instance = load_instance(Path(args.instance))
    else:
        instance = generate_instance(GeneratorConfig(seed=args.seed))
    return build_params(instance, args.n_phases, args.rho, args.K, cost_setting(args.cost_setting), args.discount)


def cmd_generate(args: argparse.Namespace) -> int:
    instance = generate_instance(
        GeneratorConfig(seed=args.seed, I=args.I, J=args.J, square_side=args.square_side, t_star=args.t_star)
    )
    if args.out is None:
        print(instance.model_dump_json(indent=2))
    else:
        save_instance(instance, Path(args.out))
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    params = model_params(args)
    builder = MDPBuilder.reachable(params) if args.reachable_only else MDPBuilder(params)
    solver = MDPSolver()
    cls = PolicyClass(args.policy)

    solution = solve_policy_class(builder, solver, cls)
    cf_upsilon = solution.upsilon if cls == PolicyClass.CF else solve_policy_class(builder, solver, PolicyClass.CF).upsilon

    if args.dump_transitions is not None:
        builder.engine.dump(Path(args.dump_transitions), builder.build(cls))

    document = solution_document(builder, solution, cf_upsilon)
    write_document(document.model_dump_json(indent=2), Path(args.out) if args.out else None)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    path = Path(args.solution)
    if not path.exists():
        raise FileNotFoundError(f"Solution file not found: {path}")
    document = SolutionDocument.model_validate_json(path.read_text())

    # rebuild the model over exactly the exported states
    space = StateSpace(document.params, [SystemState(tuple(r.F), tuple(r.P), tuple(r.C), r.j) for r in document.states])
    builder = MDPBuilder(document.params, space)
    mdp = builder.build(document.policy_class)
    policy = np.empty(mdp.n_states, dtype=np.int64)
    for record in document.states:
        start, stop = mdp.state_ptr[record.index], mdp.state_ptr[record.index + 1]
        chosen = Action(*record.action)
        matches = [pair for pair in range(start, stop) if mdp.actions[pair] == chosen]
        if not matches:
            raise CBMSolverError(
                f"Action {tuple(chosen)} is not admissible in state {record.index}",
                {"index": record.index, "action": list(chosen)},
            )
        policy[record.index] = matches[0]

    start_index = builder.canonical_index if args.start_index is None else args.start_index
    cfg = SimConfig(
        replications=args.replications,
        horizon_steps=args.horizon,
        seed=args.seed,
        start_state=space.state_of(start_index),
    )
    result = PolicySimulator(mdp, policy).run(cfg, record_trace=args.trace is not None)
    if args.trace is not None:
        write_trace(result.trace, Path(args.trace))

    solver_value = document.states[start_index].V
    report = SimulationReport(
        policy_class=document.policy_class,
        start_index=start_index,
        replications=cfg.replications,
        horizon_steps=result.horizon_steps,
        seed=cfg.seed,
        mean=result.mean,
        halfwidth_95=result.halfwidth_95,
        solver_value=solver_value,
        inside_interval=result.contains(solver_value),
        mean_counts=result.mean_counts,
    )
    write_document(report.model_dump_json(indent=2), Path(args.out) if args.out else None)
    return 0


def experiment_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "base_seed": args.seed,
        "n_instances": args.instances,
        "cost_settings": [args.cost_setting] if args.cost_setting is not None else None,
        "rho_list": [args.rho] if args.rho is not None else None,
        "N_list": [args.n_phases] if args.n_phases is not None else None,
        "policy_classes": args.policy,
        "jobs": args.jobs,
        "record_timings": True if args.timings else None,
    }


def run_table(args: argparse.Namespace, table: str) -> int:
    config_path = Path(args.config) if args.config else None
    defaults = TABLE2_DEFAULTS if table == "table2" else None
    config = load_experiment_config(config_path, defaults=defaults, **experiment_overrides(args))
    runner = ExperimentRunner(config)
    results = runner.run_table2() if table == "table2" else runner.run_table1()

    out = Path(args.out) if args.out else DATA_DIR / "results" / f"{table}.csv"
    write_csv(results, out)
    write_csv(ExperimentRunner.summarize(results), summary_path(out))
    print(json.dumps({"results": str(out), "summary": str(summary_path(out)), "rows": len(results)}))
    return 0


def cmd_table1(args: argparse.Namespace) -> int:
    return run_table(args, "table1")


def cmd_table2(args: argparse.Namespace) -> int:
    return run_table(args, "table2")


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_experiment_config(
        Path(args.config) if args.config else None,
        sweep_seed=args.seed,
        sweep_rho=args.rho,
        sweep_N=args.n_phases,
        sweep_points=args.points,
        jobs=args.jobs,
    )
    grid = ExperimentRunner(config).run_cost_sweep()
    out = Path(args.out) if args.out else DATA_DIR / "results" / "sweep.csv"
    write_csv(grid, out)
    print(json.dumps({"results": str(out), "rows": len(grid)}))
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    report = validate_model(model_params(args), samples=args.samples, seed=args.sample_seed, solve=not args.structural_only)
    write_document(report.model_dump_json(indent=2), Path(args.out) if args.out else None)
    for failure in report.failures:
        logger.error(f"{failure.name}: {failure.detail}")
    return 0 if report.passed else EXIT_FAILURE


def add_model_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--instance", help="Instance JSON file; generated from --seed when omitted")
    parser.add_argument("--seed", type=int, default=7, help="Instance seed")
    parser.add_argument("--n-phases", type=int, default=2, help="Number of condition phases N")
    parser.add_argument("--rho", type=float, default=1.0, help="Load parameter")
    parser.add_argument("--cost-setting", type=int, choices=[1, 2, 3], default=1)
    parser.add_argument("--K", type=int, default=2, help="Aggregate inventory level")
    parser.add_argument("--discount", type=float, default=0.95, help="Per-step discount factor")


def add_experiment_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML experiment configuration")
    parser.add_argument("--seed", type=int, help="Base instance seed")
    parser.add_argument("--instances", type=int, help="Instances per cell")
    parser.add_argument("--cost-setting", type=int, choices=[1, 2, 3])
    parser.add_argument("--rho", type=float)
    parser.add_argument("--n-phases", type=int)
    parser.add_argument("--policy", action="append", choices=[c.value for c in PolicyClass])
    parser.add_argument("--jobs", type=int, default=None, help=f"Parallel instances (default {DEFAULT_JOBS})")
    parser.add_argument("--timings", action="store_true", help="Record wall-clock times")
    parser.add_argument("--out", help="Results CSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = JsonArgumentParser(prog="cbm-solver", description="Exact CBM and spare-parts MDP solver")
    parser.add_argument("--log-level", default=None, help="Logging level (default from LOG_LEVEL)")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=JsonArgumentParser)

    generate = commands.add_parser("generate", help="Generate an instance file")
    generate.add_argument("--seed", type=int, required=True)
    generate.add_argument("--I", type=int, default=2)
    generate.add_argument("--J", type=int, default=2)
    generate.add_argument("--square-side", type=float, default=33.0)
    generate.add_argument("--t-star", type=float, default=10.0)
    generate.add_argument("--out", help="Instance JSON path (stdout when omitted)")
    generate.set_defaults(handler=cmd_generate)

    solve = commands.add_parser("solve", help="Solve one policy class")
    add_model_arguments(solve)
    solve.add_argument("--policy", choices=[c.value for c in PolicyClass], default="ocpr")
    solve.add_argument("--reachable-only", action="store_true", help="Restrict to states reachable from the canonical state")
    solve.add_argument("--dump-transitions", help="Write the sparse transition listing here")
    solve.add_argument("--out", help="Solution JSON path (stdout when omitted)")
    solve.set_defaults(handler=cmd_solve)

    simulate = commands.add_parser("simulate", help="Monte Carlo check of a solution")
    simulate.add_argument("--solution", required=True, help="Solution JSON from solve")
    simulate.add_argument("--replications", type=int, default=10_000)
    simulate.add_argument("--horizon", type=int, default=None, help="Steps per replication")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--start-index", type=int, default=None)
    simulate.add_argument("--trace", help="CSV trace of replication 0")
    simulate.add_argument("--out", help="Report JSON path (stdout when omitted)")
    simulate.set_defaults(handler=cmd_simulate)

    for name, handler in (("table1", cmd_table1), ("table2", cmd_table2)):
        table = commands.add_parser(name, help=f"Reproduce {name}")
        add_experiment_arguments(table)
        table.set_defaults(handler=handler)

    sweep = commands.add_parser("sweep", help="Setup-cost sweep of the OCPR action fractions")
    sweep.add_argument("--config", help="YAML experiment configuration")
    sweep.add_argument("--seed", type=int, help="Sweep instance seed")
    sweep.add_argument("--rho", type=float)
    sweep.add_argument("--n-phases", type=int)
    sweep.add_argument("--points", type=int, help="Grid points per axis")
    sweep.add_argument("--jobs", type=int, default=None)
    sweep.add_argument("--out", help="Sweep CSV path")
    sweep.set_defaults(handler=cmd_sweep)

    validate = commands.add_parser("validate", help="Run the invariant suite")
    add_model_arguments(validate)
    validate.add_argument("--samples", type=int, default=100, help="Pairs for the transition cross-check")
    validate.add_argument("--sample-seed", type=int, default=0)
    validate.add_argument("--structural-only", action="store_true", help="Skip the solver checks")
    validate.add_argument("--out", help="Report JSON path (stdout when omitted)")
    validate.set_defaults(handler=cmd_validate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    try:
        return args.handler(args)
    except CBMSolverError as e:
        logger.error(f"Error running {args.command}: {str(e)}")
        emit_error(str(e), e.error_code, e.details)
    except FileNotFoundError as e:
        logger.error(f"Error running {args.command}: {str(e)}")
        emit_error(str(e), "FILE_NOT_FOUND", {"path": e.filename} if e.filename else None)
    except ValidationError as e:
        logger.error(f"Error running {args.command}: {str(e)}")
        emit_error("Invalid input", "INVALID_INPUT", {"errors": json.loads(e.json(include_url=False))})
    except ValueError as e:
        logger.error(f"Error running {args.command}: {str(e)}")
        emit_error(str(e), "INVALID_INPUT")
    except Exception as e:
        logger.exception(f"Error running {args.command}: {str(e)}")
        emit_error(str(e), "INTERNAL_ERROR")
    return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
