"""
Experiment Runner for the policy-class comparison
Batch solves over seeded random instances, per-cell summaries against the
published averages, the setup-cost sweep and solution export
"""

import logging
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from action_space import admissible_actions
from config import COST_SETTINGS, REFERENCE_TABLE1, REFERENCE_TABLE2
from instance_generator import build_params, generate_instance
from mdp_builder import MDPBuilder, solve_policy_class
from mdp_solver import MDPSolver, PolicySolution, relative_improvement
from models import (
    CostParams,
    EpochKind,
    ExperimentConfig,
    GeneratorConfig,
    NetworkInstance,
    PolicyClass,
    ResultRow,
    SolutionDocument,
    StateRecord,
)

logger = logging.getLogger(__name__)

RESULT_COLUMNS = list(ResultRow.model_fields)
SWEEP_COLUMNS = ["c_ps", "c_rs", "prev_fraction", "reloc_fraction", "upsilon"]
FLOAT_FORMAT = "%.10g"


def action_fractions(
    solution: PolicySolution, builder: MDPBuilder
) -> Tuple[Optional[float], Optional[float]]:
    """
    Share of degradation epochs with a preventive dispatch, and share of
    relocation-capable states where the policy relocates; None for an
    empty denominator.

    Both denominators come from the OCPR action sets, whatever class was
    solved: a state counts as relocation-capable when OCPR admits a
    relocation there. Fractions of different classes on one instance
    therefore share a denominator, and a class without relocations
    reports 0.0 rather than None.
    """
    prevention_possible = prevention_done = 0
    relocation_possible = relocation_done = 0
    for index, state in enumerate(builder.space):
        action = solution.actions[index]
        if builder.epochs[index] == EpochKind.DEGRADATION:
            prevention_possible += 1
            prevention_done += action.x >= 0
        if any(a.y >= 1 for a in admissible_actions(state, PolicyClass.OCPR, builder.params)):
            relocation_possible += 1
            relocation_done += action.y >= 1

    prev_fraction = prevention_done / prevention_possible if prevention_possible else None
    reloc_fraction = relocation_done / relocation_possible if relocation_possible else None
    return prev_fraction, reloc_fraction


def solution_document(
    builder: MDPBuilder, solution: PolicySolution, cf_upsilon: Optional[float] = None
) -> SolutionDocument:
    """Exportable solution with per-state action, V and pi"""
    prev_fraction, reloc_fraction = action_fractions(solution, builder)
    states = [
        StateRecord(
            index=index,
            F=list(state.F),
            P=list(state.P),
            C=list(state.C),
            j=state.j,
            action=tuple(solution.actions[index]),
            V=float(solution.V[index]),
            pi=float(solution.pi[index]),
        )
        for index, state in enumerate(builder.space)
    ]
    return SolutionDocument(
        params=builder.params,
        policy_class=solution.policy_class,
        n_states=len(builder.space),
        upsilon=solution.upsilon,
        cf_upsilon=cf_upsilon,
        delta_pct=relative_improvement(cf_upsilon, solution.upsilon) if cf_upsilon is not None else None,
        iterations=solution.iterations,
        converged=solution.converged,
        bellman_residual=solution.bellman_residual,
        stationary_method=solution.stationary_method,
        stationary_residual=solution.stationary_residual,
        prev_fraction=prev_fraction,
        reloc_fraction=reloc_fraction,
        states=states,
    )


def reference_values(setting: str, rho: float, N: int) -> Optional[Tuple[float, Dict[str, float]]]:
    """Published (upsilon_CF, delta by class) for a cell, if there is one"""
    if not setting.isdigit():
        return None
    if N == 2 and (int(setting), rho) in REFERENCE_TABLE1:
        return REFERENCE_TABLE1[(int(setting), rho)]
    if setting == "1":
        return REFERENCE_TABLE2.get((rho, N))
    return None


def instance_for(config: ExperimentConfig, seed: int) -> NetworkInstance:
    return generate_instance(
        GeneratorConfig(seed=seed, I=config.I, J=config.J, square_side=config.square_side, t_star=config.t_star)
    )


def solve_instance(
    config: ExperimentConfig, seed: int, rho: float, N: int
) -> List[ResultRow]:
    """All cost settings and policy classes on one instance, CF first"""
    instance = instance_for(config, seed)
    settings = ExperimentRunner.settings(config)
    base = build_params(
        instance, N, rho, config.K, settings[0][1], config.discount, config.mu, config.alpha
    )
    builder = MDPBuilder(base)
    solver = MDPSolver()
    classes = sorted(set(config.policy_classes) | {PolicyClass.CF}, key=list(PolicyClass).index)

    rows: List[ResultRow] = []
    for label, costs in settings:
        variant = builder.with_costs(costs)
        cf_upsilon: Optional[float] = None
        for cls in classes:
            started = time.perf_counter()
            try:
                solution = solve_policy_class(variant, solver, cls)
            except Exception as e:
                logger.error(f"Error on instance {seed} (setting {label}, rho={rho}, N={N}, {cls.value}): {str(e)}")
                upsilon, delta, iterations = None, None, -1
            else:
                upsilon, iterations = solution.upsilon, solution.iterations
                if cls == PolicyClass.CF:
                    cf_upsilon = upsilon
                delta = relative_improvement(cf_upsilon, upsilon) if cf_upsilon is not None else None
            elapsed = time.perf_counter() - started if config.record_timings else 0.0
            if cls not in config.policy_classes:
                continue
            rows.append(
                ResultRow(
                    cost_setting=label,
                    rho=rho,
                    N=N,
                    instance_seed=seed,
                    policy=cls.value.upper(),
                    upsilon=upsilon,
                    delta_pct=delta,
                    iterations=iterations,
                    wall_time_s=elapsed,
                )
            )
    return rows


def sweep_point(builder: MDPBuilder, solver: MDPSolver, c_ps: float, c_rs: float) -> dict:
    costs = builder.params.costs.model_copy(update={"c_ps": c_ps, "c_rs": c_rs})
    variant = builder.with_costs(costs)
    solution = solve_policy_class(variant, solver, PolicyClass.OCPR)
    prev_fraction, reloc_fraction = action_fractions(solution, variant)
    return {
        "c_ps": c_ps,
        "c_rs": c_rs,
        "prev_fraction": prev_fraction,
        "reloc_fraction": reloc_fraction,
        "upsilon": solution.upsilon,
    }


class ExperimentRunner:
    """
    Runs the instance grids; instance seeds base_seed + k are shared by
    every cell so cells compare on the same geometry
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config

    @staticmethod
    def settings(config: ExperimentConfig) -> List[Tuple[str, CostParams]]:
        if config.custom_costs is not None:
            return [("custom", config.custom_costs)]
        return [(str(k), COST_SETTINGS[k]) for k in config.cost_settings]

    def instance_seeds(self) -> List[int]:
        return [self.config.base_seed + k for k in range(self.config.n_instances)]

    def run_grid(self) -> pd.DataFrame:
        """Per-instance rows over rho_list x N_list x instances"""
        cfg = self.config
        tasks = [
            (seed, rho, N)
            for N in cfg.N_list
            for rho in cfg.rho_list
            for seed in self.instance_seeds()
        ]
        logger.info(f"Running {len(tasks)} instance solves with {cfg.jobs} job(s)")
        batches = Parallel(n_jobs=cfg.jobs)(
            delayed(solve_instance)(cfg, seed, rho, N) for seed, rho, N in tasks
        )
        rows = [row.model_dump() for batch in batches for row in batch]
        frame = pd.DataFrame(rows, columns=RESULT_COLUMNS)
        frame[["upsilon", "delta_pct"]] = frame[["upsilon", "delta_pct"]].astype(float)
        order = {label: k for k, (label, _) in enumerate(self.settings(cfg))}
        frame["_setting"] = frame["cost_setting"].map(order)
        frame = frame.sort_values(["_setting", "N"], kind="stable").drop(columns="_setting")
        return frame.reset_index(drop=True)

    def run_table1(self) -> pd.DataFrame:
        return self.run_grid()

    def run_table2(self) -> pd.DataFrame:
        """N grid under cost setting 1 unless explicit costs are configured"""
        if self.config.custom_costs is None and self.config.cost_settings != [1]:
            logger.warning(f"Table 2 uses cost setting 1, ignoring {self.config.cost_settings}")
            return ExperimentRunner(self.config.model_copy(update={"cost_settings": [1]})).run_grid()
        return self.run_grid()

    @staticmethod
    def summarize(results: pd.DataFrame) -> pd.DataFrame:
        """
        Cell averages over successful instances, both delta aggregates and
        deviations from the published averages
        """
        keys = ["cost_setting", "rho", "N", "policy"]
        grouped = results.groupby(keys, sort=False)
        summary = grouped.agg(
            upsilon=("upsilon", "mean"),
            delta_pct=("delta_pct", "mean"),
            n_ok=("upsilon", "count"),
            n_total=("upsilon", "size"),
        ).reset_index()
        summary["n_failed"] = summary["n_total"] - summary["n_ok"]
        summary = summary.drop(columns="n_total")

        cf = summary[summary["policy"] == "CF"].set_index(["cost_setting", "rho", "N"])["upsilon"]
        delta_of_mean = []
        reference_upsilon = []
        reference_delta = []
        for row in summary.itertuples(index=False):
            baseline = cf.get((row.cost_setting, row.rho, row.N), np.nan)
            if np.isnan(baseline) or baseline == 0:
                delta_of_mean.append(np.nan)
            else:
                delta_of_mean.append(relative_improvement(baseline, row.upsilon))
            reference = reference_values(row.cost_setting, row.rho, row.N)
            if reference is None:
                reference_upsilon.append(np.nan)
                reference_delta.append(np.nan)
            elif row.policy == "CF":
                reference_upsilon.append(reference[0])
                reference_delta.append(0.0)
            else:
                reference_upsilon.append(np.nan)
                reference_delta.append(reference[1].get(row.policy, np.nan))

        summary["delta_of_mean_pct"] = delta_of_mean
        summary["reference_upsilon"] = reference_upsilon
        summary["reference_delta_pct"] = reference_delta
        summary["upsilon_dev_pct"] = (summary["upsilon"] - summary["reference_upsilon"]) / summary["reference_upsilon"] * 100.0
        summary["delta_dev_pp"] = summary["delta_pct"] - summary["reference_delta_pct"]
        return summary

    def run_cost_sweep(self) -> pd.DataFrame:
        """OCPR action fractions over a (c_ps, c_rs) grid on one instance"""
        cfg = self.config
        instance = instance_for(cfg, cfg.sweep_seed)
        base_costs = cfg.custom_costs or COST_SETTINGS[1]
        params = build_params(
            instance, cfg.sweep_N, cfg.sweep_rho, cfg.K, base_costs, cfg.discount, cfg.mu, cfg.alpha
        )
        builder = MDPBuilder(params)
        solver = MDPSolver()
        grid = np.linspace(0.0, cfg.sweep_max, cfg.sweep_points).tolist()
        logger.info(f"Cost sweep on seed {cfg.sweep_seed}: {len(grid)}x{len(grid)} points")
        points = Parallel(n_jobs=cfg.jobs)(
            delayed(sweep_point)(builder, solver, c_ps, c_rs) for c_ps in grid for c_rs in grid
        )
        return pd.DataFrame(points, columns=SWEEP_COLUMNS)


def write_csv(frame: pd.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"{len(frame)} rows written to {path}")


def summary_path(path: Path) -> Path:
    return path.with_name(f"{path.stem}_summary.csv")
