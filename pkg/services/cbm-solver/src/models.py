"""
Domain types and pydantic models for the CBM Solver Service
Covers model parameters, system states, actions and the JSON documents
"""

import math
from enum import Enum, IntEnum
from typing import Dict, List, NamedTuple, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class PolicyClass(str, Enum):
    """Restricted action spaces compared in the experiments"""

    CF = "cf"
    OC = "oc"
    OCR = "ocr"
    OCP = "ocp"
    OCPR = "ocpr"


class EpochKind(IntEnum):
    """What kind of event opened a decision epoch"""

    REPLENISHMENT = 0
    FAILURE = 1
    DEGRADATION = 2
    REPAIR = 3


class SystemState(NamedTuple):
    """(F, P, C, j): stock, pipeline, machine conditions, last-event machine"""

    F: Tuple[int, ...]
    P: Tuple[int, ...]
    C: Tuple[int, ...]
    j: int


class Action(NamedTuple):
    """(x, y, z): dispatch origin, relocation origin, relocation destination"""

    x: int
    y: int
    z: int


NO_ACTION = Action(-1, -1, -1)


class DegradationModel(BaseModel):
    """Cox-distributed lifetime with N phases plus corrective downtime"""

    model_config = ConfigDict(frozen=True)

    N: int = Field(..., ge=1, description="Number of condition phases (N = perfect)")
    mu: Tuple[float, ...] = Field(..., description="mu[0] repair rate, mu[n] sojourn rate in condition n")
    alpha: Tuple[float, ...] = Field(..., description="alpha[n] failure probability when leaving condition n")

    @model_validator(mode="after")
    def check_phases(self) -> "DegradationModel":
        if len(self.mu) != self.N + 1:
            raise ValueError(f"mu must have N+1={self.N + 1} entries, got {len(self.mu)}")
        if len(self.alpha) != self.N + 1:
            raise ValueError(f"alpha must have N+1={self.N + 1} entries, got {len(self.alpha)}")
        if any(rate <= 0 for rate in self.mu):
            raise ValueError("all mu rates must be positive")
        if self.alpha[0] != 0:
            raise ValueError("alpha[0] is unused and must be 0")
        if self.alpha[1] != 1:
            raise ValueError("alpha[1] must be exactly 1")
        for n in range(2, self.N + 1):
            if not 0 <= self.alpha[n] < 1:
                raise ValueError(f"alpha[{n}] must lie in [0, 1), got {self.alpha[n]}")
        return self

    @classmethod
    def uniform(cls, N: int, rate: float = 1.0) -> "DegradationModel":
        """Equal rates in every phase, failure only from condition 1"""
        return cls(N=N, mu=(rate,) * (N + 1), alpha=(0.0, 1.0) + (0.0,) * (N - 1))

    def failure_rate(self, condition: int) -> float:
        if condition == 0:
            return 0.0
        return self.alpha[condition] * self.mu[condition]

    def degradation_rate(self, condition: int) -> float:
        if condition <= 1:
            return 0.0
        return (1.0 - self.alpha[condition]) * self.mu[condition]


class NetworkInstance(BaseModel):
    """Local warehouses, machines and their deterministic response times"""

    model_config = ConfigDict(frozen=True)

    seed: Optional[int] = Field(None, description="Generator seed, if generated")
    I: int = Field(..., ge=1, description="Number of local warehouses")
    J: int = Field(..., ge=1, description="Number of machines")
    t_star: float = Field(10.0, gt=0, description="Response-time threshold")
    square_side: Optional[float] = Field(None, gt=0, description="Side of the placement square")
    warehouses: Optional[Tuple[Tuple[float, float], ...]] = Field(None, description="Warehouse coordinates")
    machines: Optional[Tuple[Tuple[float, float], ...]] = Field(None, description="Machine coordinates")
    R: Tuple[Tuple[float, ...], ...] = Field(..., description="R[i][j] response time, warehouse i to machine j")

    @model_validator(mode="after")
    def check_geometry(self) -> "NetworkInstance":
        if len(self.R) != self.I or any(len(row) != self.J for row in self.R):
            raise ValueError(f"R must be a {self.I}x{self.J} matrix")
        if any(value < 0 for row in self.R for value in row):
            raise ValueError("response times must be nonnegative")
        for j in range(self.J):
            if min(self.R[i][j] for i in range(self.I)) > self.t_star:
                raise ValueError(f"machine {j + 1} has no warehouse within t_star={self.t_star}")
        for i in range(self.I):
            if min(self.R[i]) > self.t_star:
                raise ValueError(f"warehouse {i + 1} has no machine within t_star={self.t_star}")
        if (self.warehouses is None) != (self.machines is None):
            raise ValueError("warehouse and machine coordinates must be given together")
        if self.warehouses is not None:
            if len(self.warehouses) != self.I or len(self.machines) != self.J:
                raise ValueError("coordinate counts must match I and J")
            for i, (wx, wy) in enumerate(self.warehouses):
                for j, (mx, my) in enumerate(self.machines):
                    if not math.isclose(self.R[i][j], math.hypot(wx - mx, wy - my), rel_tol=1e-12, abs_tol=1e-12):
                        raise ValueError(f"R[{i + 1}][{j + 1}] does not match the coordinate distance")
        return self

    def response_time(self, warehouse: int, machine: int) -> float:
        """Response time with 1-based warehouse and machine indices"""
        return self.R[warehouse - 1][machine - 1]


class CostParams(BaseModel):
    """Setup costs and late-response penalties"""

    model_config = ConfigDict(frozen=True)

    c_e: float = Field(..., ge=0, description="Dispatch from the central warehouse")
    c_cs: float = Field(..., ge=0, description="Corrective setup")
    c_ps: float = Field(..., ge=0, description="Preventive setup")
    c_rs: float = Field(..., ge=0, description="Relocation setup")
    c_r: float = Field(..., ge=0, description="Replenishment setup")
    c_cl: float = Field(..., ge=0, description="Fixed late-response penalty")
    c_cp: float = Field(..., ge=0, description="Late-response penalty per time unit")


class ModelParams(BaseModel):
    """Everything that defines one MDP instance"""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    instance: NetworkInstance
    degradation: DegradationModel
    K: int = Field(..., ge=0, description="Aggregate inventory level")
    gamma: float = Field(..., gt=0, description="Replenishment rate per pipeline unit")
    discount: float = Field(0.95, gt=0, lt=1, alias="lambda", description="Per-step discount factor")
    costs: CostParams

    @property
    def I(self) -> int:
        return self.instance.I

    @property
    def J(self) -> int:
        return self.instance.J

    @property
    def N(self) -> int:
        return self.degradation.N

    def with_costs(self, costs: CostParams) -> "ModelParams":
        return self.model_copy(update={"costs": costs})


class GeneratorConfig(BaseModel):
    """Seeded random placement of warehouses and machines"""

    seed: int = Field(..., ge=0, lt=2**64, description="64-bit generator seed")
    I: int = Field(2, ge=1)
    J: int = Field(2, ge=1)
    square_side: float = Field(33.0, gt=0)
    t_star: float = Field(10.0, gt=0)
    max_resamples: int = Field(100_000, ge=1)


class LoadSpec(BaseModel):
    """Load parameter rho = J / (N gamma K)"""

    rho: float = Field(..., gt=0)


class SimConfig(BaseModel):
    """Monte Carlo settings for the discounted-cost oracle"""

    replications: int = Field(..., ge=1)
    horizon_steps: Optional[int] = Field(None, ge=1, description="None derives it from the truncation budget")
    seed: int = Field(0, ge=0, lt=2**64)
    start_state: Optional[SystemState] = Field(None, description="None starts from the canonical state")
    truncation_budget: float = Field(1e-6, gt=0)


class ExperimentConfig(BaseModel):
    """Batch settings for the table reproductions and the cost sweep"""

    model_config = ConfigDict(populate_by_name=True)

    base_seed: int = Field(7, ge=0)
    n_instances: int = Field(30, ge=1)
    I: int = Field(2, ge=1)
    J: int = Field(2, ge=1)
    K: int = Field(2, ge=1)
    cost_settings: List[int] = Field(default_factory=lambda: [1, 2, 3])
    custom_costs: Optional[CostParams] = None
    rho_list: List[float] = Field(default_factory=lambda: [1.0, 0.7, 0.5, 0.3])
    N_list: List[int] = Field(default_factory=lambda: [2])
    policy_classes: List[PolicyClass] = Field(default_factory=lambda: list(PolicyClass))
    discount: float = Field(0.95, gt=0, lt=1, alias="lambda")
    t_star: float = Field(10.0, gt=0)
    square_side: float = Field(33.0, gt=0)
    mu: Optional[List[float]] = Field(None, description="None means all rates equal to 1")
    alpha: Optional[List[float]] = Field(None, description="None means alpha_1 = 1, others 0")
    jobs: int = Field(1, ge=1)
    record_timings: bool = False
    sweep_seed: int = Field(2021, ge=0)
    sweep_rho: float = Field(0.5, gt=0)
    sweep_N: int = Field(2, ge=1)
    sweep_points: int = Field(16, ge=2)
    sweep_max: float = Field(1.5, ge=0)

    @field_validator("cost_settings")
    @classmethod
    def check_settings(cls, value: List[int]) -> List[int]:
        for setting in value:
            if setting not in (1, 2, 3):
                raise ValueError(f"unknown cost setting {setting}, expected 1, 2 or 3")
        return value


class ResultRow(BaseModel):
    """One (instance, policy class) line of the results CSV"""

    cost_setting: str
    rho: float
    N: int
    instance_seed: int
    policy: str
    upsilon: Optional[float]
    delta_pct: Optional[float]
    iterations: int
    wall_time_s: float


class StateRecord(BaseModel):
    """Per-state entry of an exported solution"""

    index: int
    F: List[int]
    P: List[int]
    C: List[int]
    j: int
    action: Tuple[int, int, int]
    V: float
    pi: float


class SolutionDocument(BaseModel):
    """Solution export: parameters, per-state values and summary metrics"""

    model_config = ConfigDict(populate_by_name=True)

    params: ModelParams
    policy_class: PolicyClass
    n_states: int
    upsilon: float
    cf_upsilon: Optional[float] = None
    delta_pct: Optional[float] = None
    iterations: int
    converged: bool
    bellman_residual: float
    stationary_method: str
    stationary_residual: float
    prev_fraction: Optional[float] = None
    reloc_fraction: Optional[float] = None
    states: List[StateRecord]


class SimulationReport(BaseModel):
    """Monte Carlo estimate next to the solver value it checks"""

    policy_class: Optional[PolicyClass] = None
    start_index: int
    replications: int
    horizon_steps: int
    seed: int
    mean: float
    halfwidth_95: float
    solver_value: Optional[float] = None
    inside_interval: Optional[bool] = None
    mean_counts: Dict[str, float] = Field(default_factory=dict)


class CheckResult(BaseModel):
    """Outcome of one structural or solver check"""

    name: str
    passed: bool
    detail: str = ""


class ValidationReport(BaseModel):
    """All invariant checks run on one model"""

    n_states: int
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]


class SolveRequest(BaseModel):
    """Request model for solving one policy class"""

    model_config = ConfigDict(
        json_schema_extra={
            "example": {"seed": 7, "n_phases": 2, "rho": 0.5, "cost_setting": 1, "policy_class": "ocpr"}
        }
    )

    instance_filename: Optional[str] = Field(None, description="Instance file under the instances directory")
    seed: int = Field(7, ge=0, description="Instance seed when no file is given")
    n_phases: int = Field(2, ge=1, description="Number of condition phases N")
    rho: float = Field(1.0, gt=0, description="Load parameter")
    K: int = Field(2, ge=1, description="Aggregate inventory level")
    cost_setting: int = Field(1, ge=1, le=3, description="Cost setting 1, 2 or 3")
    policy_class: PolicyClass = Field(PolicyClass.OCPR, description="Policy class to optimize")
    discount: float = Field(0.95, gt=0, lt=1, description="Per-step discount factor")


class SolveResponse(BaseModel):
    """Response model for a solved policy class"""

    policy_class: PolicyClass = Field(..., description="Solved policy class")
    n_states: int = Field(..., description="Number of states")
    upsilon: float = Field(..., description="Stationary-weighted discounted cost")
    cf_upsilon: float = Field(..., description="Same measure under closest-first")
    delta_pct: Optional[float] = Field(None, description="Saving over closest-first in percent")
    iterations: int = Field(..., description="Policy iteration steps")
    converged: bool = Field(..., description="Whether the policy became stable")
    bellman_residual: float = Field(..., description="Bellman residual of the returned values")
    prev_fraction: Optional[float] = Field(None, description="Share of degradation epochs with preventive dispatch")
    reloc_fraction: Optional[float] = Field(None, description="Share of relocation-capable states that relocate")
    solve_time: float = Field(..., description="Wall-clock seconds")


class HealthResponse(BaseModel):
    """Health check response model"""

    status: str = Field(..., description="Service health status")
    service: str = Field(..., description="Service name")
    version: str = Field(default="1.0.0", description="Service version")


class ErrorResponse(BaseModel):
    """Error response model"""

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "error": "Instance file not found",
                "error_code": "FILE_NOT_FOUND",
                "details": {"path": "data/instances/seed_7.json"},
            }
        }
    )

    error: str = Field(..., description="Error message")
    error_code: str = Field(..., description="Error code")
    details: Optional[Dict] = Field(None, description="Additional error details")
