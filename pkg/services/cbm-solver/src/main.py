"""
CBM Solver Service
Exact MDP solutions for condition-based maintenance with spare-part
dispatch and relocation, served over HTTP
"""

import asyncio
import logging
import time
from contextlib import asynccontextmanager
from pathlib import Path

import uvicorn
from fastapi import FastAPI, HTTPException
from pydantic import ValidationError

from config import DATA_DIR, configure_logging, cost_setting
from errors import CBMSolverError
from experiment_runner import action_fractions
from instance_generator import build_params, generate_instance, load_instance, save_instance
from mdp_builder import MDPBuilder, solve_policy_class
from mdp_solver import MDPSolver, relative_improvement
from models import (
    ErrorResponse,
    GeneratorConfig,
    HealthResponse,
    NetworkInstance,
    PolicyClass,
    SolveRequest,
    SolveResponse,
)

# Configure logging
configure_logging()
logger = logging.getLogger(__name__)

# Configuration
INSTANCES_DIR = DATA_DIR / "instances"
SERVICE_NAME = "cbm-solver"

stats = {"instances_generated": 0, "solves_completed": 0, "solves_failed": 0}


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Initialize service on startup"""
    logger.info("Starting CBM Solver Service...")
    INSTANCES_DIR.mkdir(parents=True, exist_ok=True)
    logger.info(f"CBM Solver Service started, instances in {INSTANCES_DIR}")
    yield
    logger.info("CBM Solver Service shutting down...")


# Initialize FastAPI app
app = FastAPI(
    title="CBM Solver Service",
    description="Exact MDP solver for maintenance and spare-parts relocation policies",
    version="1.0.0",
    lifespan=lifespan,
)


def error_detail(error: str, error_code: str, details=None) -> dict:
    return ErrorResponse(error=error, error_code=error_code, details=details).model_dump()


@app.get("/health", response_model=HealthResponse)
async def health_check():
    """Health check endpoint"""
    return HealthResponse(status="healthy", service=SERVICE_NAME)


@app.get("/")
async def root():
    """Root endpoint with service information"""
    return {
        "service": "CBM Solver",
        "version": "1.0.0",
        "description": "Exact MDP solver for maintenance and spare-parts relocation policies",
        "policy_classes": [cls.value for cls in PolicyClass],
        "endpoints": {
            "health": "/health",
            "generate": "/generate",
            "solve": "/solve",
            "stats": "/stats",
        },
    }


@app.post("/generate", response_model=NetworkInstance)
async def generate(config: GeneratorConfig):
    """Generate and store a random instance"""
    try:
        instance = await asyncio.to_thread(generate_instance, config)
        save_instance(instance, INSTANCES_DIR / f"seed_{config.seed}.json")
        stats["instances_generated"] += 1
        return instance
    except CBMSolverError as e:
        logger.error(f"Error generating instance: {str(e)}")
        raise HTTPException(status_code=422, detail=error_detail(str(e), e.error_code, e.details))
    except Exception as e:
        logger.error(f"Error generating instance: {str(e)}")
        raise HTTPException(status_code=500, detail=error_detail(str(e), "INTERNAL_ERROR"))


def run_solve(request: SolveRequest) -> SolveResponse:
    started = time.perf_counter()
    if request.instance_filename is not None:
        instance = load_instance(INSTANCES_DIR / Path(request.instance_filename).name)
    else:
        instance = generate_instance(GeneratorConfig(seed=request.seed))
    params = build_params(
        instance, request.n_phases, request.rho, request.K, cost_setting(request.cost_setting), request.discount
    )
    builder = MDPBuilder(params)
    solver = MDPSolver()

    solution = solve_policy_class(builder, solver, request.policy_class)
    if request.policy_class == PolicyClass.CF:
        cf_upsilon = solution.upsilon
    else:
        cf_upsilon = solve_policy_class(builder, solver, PolicyClass.CF).upsilon
    prev_fraction, reloc_fraction = action_fractions(solution, builder)

    return SolveResponse(
        policy_class=request.policy_class,
        n_states=len(builder.space),
        upsilon=solution.upsilon,
        cf_upsilon=cf_upsilon,
        delta_pct=relative_improvement(cf_upsilon, solution.upsilon),
        iterations=solution.iterations,
        converged=solution.converged,
        bellman_residual=solution.bellman_residual,
        prev_fraction=prev_fraction,
        reloc_fraction=reloc_fraction,
        solve_time=time.perf_counter() - started,
    )


@app.post("/solve", response_model=SolveResponse)
async def solve(request: SolveRequest):
    """Solve one policy class and compare it with closest-first"""
    try:
        logger.info(f"Solving {request.policy_class.value.upper()} (N={request.n_phases}, rho={request.rho})")
        response = await asyncio.to_thread(run_solve, request)
        stats["solves_completed"] += 1
        return response
    except FileNotFoundError as e:
        stats["solves_failed"] += 1
        logger.error(f"Error solving: {str(e)}")
        raise HTTPException(status_code=404, detail=error_detail(str(e), "FILE_NOT_FOUND"))
    except CBMSolverError as e:
        stats["solves_failed"] += 1
        logger.error(f"Error solving: {str(e)}")
        raise HTTPException(status_code=422, detail=error_detail(str(e), e.error_code, e.details))
    except (ValidationError, ValueError) as e:
        stats["solves_failed"] += 1
        logger.error(f"Error solving: {str(e)}")
        raise HTTPException(status_code=422, detail=error_detail(str(e), "INVALID_INPUT"))
    except Exception as e:
        stats["solves_failed"] += 1
        logger.error(f"Error solving: {str(e)}")
        raise HTTPException(status_code=500, detail=error_detail(str(e), "INTERNAL_ERROR"))


@app.get("/stats")
async def get_service_stats():
    """Get service statistics"""
    try:
        return {
            **stats,
            "instances_stored": len(list(INSTANCES_DIR.glob("*.json"))),
            "service_uptime": "running",
            "policy_classes": [cls.value for cls in PolicyClass],
        }
    except Exception as e:
        logger.error(f"Error getting stats: {str(e)}")
        raise HTTPException(status_code=500, detail=str(e))


if __name__ == "__main__":
    uvicorn.run(
        "main:app",
        host="0.0.0.0",
        port=8004,
        reload=False,
        log_level="info",
    )
