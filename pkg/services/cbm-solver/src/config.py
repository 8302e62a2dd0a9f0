"""
Configuration for the CBM Solver Service
Environment settings, cost settings and the published reference averages
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml
from dotenv import load_dotenv

from models import CostParams, ExperimentConfig

load_dotenv()

LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
MAX_STATES = int(os.getenv("CBM_MAX_STATES", "10000000"))
MAX_PI_ITERATIONS = int(os.getenv("CBM_MAX_PI_ITERATIONS", "1000"))
DIRECT_SOLVE_LIMIT = int(os.getenv("CBM_DIRECT_SOLVE_LIMIT", "10000"))
DATA_DIR = Path(os.getenv("CBM_DATA_DIR", "./data"))
DEFAULT_JOBS = int(os.getenv("CBM_DEFAULT_JOBS", "1"))

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

COST_SETTINGS: Dict[int, CostParams] = {
    # moderate criticality
    1: CostParams(c_e=10, c_cs=1, c_ps=0.2, c_rs=0.2, c_r=0, c_cl=1, c_cp=0.05),
    # critical machinery
    2: CostParams(c_e=100, c_cs=10, c_ps=0.2, c_rs=0.2, c_r=0, c_cl=1, c_cp=0.1),
    # breakdowns not critical within the threshold
    3: CostParams(c_e=10, c_cs=0, c_ps=0, c_rs=0, c_r=0, c_cl=1, c_cp=0),
}

# Published cell averages: (upsilon_CF, {class: delta_pct}) keyed by (setting, rho)
REFERENCE_TABLE1: Dict[Tuple[int, float], Tuple[float, Dict[str, float]]] = {
    (1, 1.0): (7.19, {"OC": 1.0, "OCR": 8.6, "OCP": 2.9, "OCPR": 8.7}),
    (1, 0.7): (5.37, {"OC": 1.5, "OCR": 10.8, "OCP": 9.0, "OCPR": 15.6}),
    (1, 0.5): (4.02, {"OC": 2.1, "OCR": 13.0, "OCP": 13.6, "OCPR": 21.5}),
    (1, 0.3): (2.54, {"OC": 3.3, "OCR": 16.3, "OCP": 17.6, "OCPR": 27.3}),
    (2, 1.0): (63.67, {"OC": 0.1, "OCR": 0.8, "OCP": 2.3, "OCPR": 2.8}),
    (2, 0.7): (46.03, {"OC": 0.1, "OCR": 1.0, "OCP": 9.9, "OCPR": 10.5}),
    (2, 0.5): (33.30, {"OC": 0.2, "OCR": 1.2, "OCP": 15.6, "OCPR": 16.3}),
    (2, 0.3): (19.91, {"OC": 0.3, "OCR": 1.6, "OCP": 21.0, "OCPR": 21.8}),
    (3, 1.0): (5.24, {"OC": 1.7, "OCR": 14.4, "OCP": 1.7, "OCPR": 14.4}),
    (3, 0.7): (3.55, {"OC": 2.8, "OCR": 20.0, "OCP": 7.6, "OCPR": 19.8}),
    (3, 0.5): (2.38, {"OC": 4.5, "OCR": 26.8, "OCP": 15.7, "OCPR": 32.0}),
    (3, 0.3): (1.25, {"OC": 8.3, "OCR": 40.6, "OCP": 25.7, "OCPR": 49.8}),
}

# Keyed by (rho, N), cost setting 1
REFERENCE_TABLE2: Dict[Tuple[float, int], Tuple[float, Dict[str, float]]] = {
    (1.0, 2): (7.19, {"OC": 1.0, "OCR": 8.6, "OCP": 2.9, "OCPR": 8.7}),
    (1.0, 3): (6.69, {"OC": 0.8, "OCR": 7.4, "OCP": 14.7, "OCPR": 18.7}),
    (1.0, 4): (6.03, {"OC": 0.7, "OCR": 6.8, "OCP": 22.1, "OCPR": 24.5}),
    (1.0, 5): (5.42, {"OC": 0.6, "OCR": 6.4, "OCP": 31.2, "OCPR": 32.7}),
    (1.0, 6): (4.89, {"OC": 0.6, "OCR": 6.2, "OCP": 36.6, "OCPR": 33.9}),
    (0.5, 2): (4.02, {"OC": 2.1, "OCR": 13.0, "OCP": 13.6, "OCPR": 21.5}),
    (0.5, 3): (4.06, {"OC": 1.6, "OCR": 2.8, "OCP": 26.6, "OCPR": 28.0}),
    (0.5, 4): (3.88, {"OC": 1.4, "OCR": 0.9, "OCP": 41.6, "OCPR": 45.0}),
    (0.5, 5): (3.64, {"OC": 1.2, "OCR": 6.8, "OCP": 52.0, "OCPR": 51.7}),
    (0.5, 6): (3.39, {"OC": 1.1, "OCR": 8.9, "OCP": 60.1, "OCPR": 59.9}),
}


TABLE2_DEFAULTS: Dict[str, Any] = {
    "cost_settings": [1],
    "rho_list": [1.0, 0.5],
    "N_list": [2, 3, 4, 5, 6],
}


def configure_logging(level: Optional[str] = None) -> None:
    """Configure root logging once per entry point"""
    logging.basicConfig(
        level=getattr(logging, (level or LOG_LEVEL).upper(), logging.INFO),
        format=LOG_FORMAT,
    )


def cost_setting(setting: int) -> CostParams:
    if setting not in COST_SETTINGS:
        raise ValueError(f"Unknown cost setting: {setting}")
    return COST_SETTINGS[setting]


def load_experiment_config(
    path: Optional[Path] = None, defaults: Optional[Dict[str, Any]] = None, **overrides: Any
) -> ExperimentConfig:
    """Defaults, then YAML file values, then non-None overrides"""
    data: Dict[str, Any] = {"jobs": DEFAULT_JOBS, **(defaults or {})}
    if path is not None:
        if not path.exists():
            raise FileNotFoundError(f"Config file not found: {path}")
        with open(path) as f:
            data.update(yaml.safe_load(f) or {})
    data.update({key: value for key, value in overrides.items() if value is not None})
    return ExperimentConfig.model_validate(data)
