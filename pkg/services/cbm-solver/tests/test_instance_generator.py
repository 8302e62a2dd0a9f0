import math

import numpy as np
import pytest

from config import cost_setting
from errors import InstanceGenerationError
from instance_generator import (
    InstanceGenerator,
    build_params,
    gamma_from_load,
    generate_instance,
    load_from_gamma,
    load_instance,
    save_instance,
)
from models import GeneratorConfig, LoadSpec


class TestGenerateInstance:
    def test_deterministic(self):
        first = generate_instance(GeneratorConfig(seed=7))
        second = generate_instance(GeneratorConfig(seed=7))
        assert first.model_dump_json() == second.model_dump_json()

    def test_seeds_differ(self):
        assert generate_instance(GeneratorConfig(seed=7)).R != generate_instance(GeneratorConfig(seed=8)).R

    @pytest.mark.parametrize("seed", range(20))
    def test_coverage_and_bounds(self, seed):
        instance = generate_instance(GeneratorConfig(seed=seed))
        R = np.asarray(instance.R)
        assert R.shape == (2, 2)
        assert (R.min(axis=0) <= 10.0).all()
        assert (R.min(axis=1) <= 10.0).all()
        assert R.max() <= 33.0 * math.sqrt(2)
        for point in instance.warehouses + instance.machines:
            assert all(0.0 <= c <= 33.0 for c in point)

    def test_larger_networks(self):
        instance = generate_instance(GeneratorConfig(seed=3, I=3, J=4))
        assert (instance.I, instance.J) == (3, 4)
        assert len(instance.R) == 3 and all(len(row) == 4 for row in instance.R)

    def test_infeasible_geometry(self):
        cfg = GeneratorConfig(seed=1, square_side=1e6, t_star=1e-3, max_resamples=5)
        with pytest.raises(InstanceGenerationError) as excinfo:
            InstanceGenerator(cfg).generate()
        assert excinfo.value.error_code == "INSTANCE_INFEASIBLE"

    def test_placements_are_centred(self):
        points = np.array(
            [p for seed in range(2000) for p in generate_instance(GeneratorConfig(seed=seed)).machines]
        )
        assert 0.45 * 33.0 <= points[:, 0].mean() <= 0.55 * 33.0
        assert 0.45 * 33.0 <= points[:, 1].mean() <= 0.55 * 33.0


class TestLoad:
    @pytest.mark.parametrize("rho, gamma", [(0.5, 1.0), (1.0, 0.5)])
    def test_gamma_from_load(self, rho, gamma):
        assert gamma_from_load(LoadSpec(rho=rho), J=2, N=2, K=2) == pytest.approx(gamma)

    def test_fixed_point(self):
        J, N, K = 3, 2, 4
        assert gamma_from_load(LoadSpec(rho=J / (N * K)), J, N, K) == pytest.approx(1.0)

    def test_inverse(self):
        assert load_from_gamma(gamma_from_load(LoadSpec(rho=0.7), 2, 3, 2), 2, 3, 2) == pytest.approx(0.7)

    def test_degenerate_inputs(self):
        with pytest.raises(ValueError):
            gamma_from_load(LoadSpec(rho=1.0), J=2, N=2, K=0)


class TestPersistence:
    def test_save_and_load(self, tmp_path):
        instance = generate_instance(GeneratorConfig(seed=11))
        path = tmp_path / "instances" / "seed_11.json"
        save_instance(instance, path)
        assert load_instance(path) == instance

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_instance(tmp_path / "missing.json")


class TestBuildParams:
    def test_uniform_degradation(self):
        params = build_params(generate_instance(GeneratorConfig(seed=7)), 2, 1.0, 2, cost_setting(1))
        assert params.gamma == pytest.approx(0.5)
        assert params.degradation.mu == (1.0, 1.0, 1.0)
        assert params.degradation.alpha == (0.0, 1.0, 0.0)
        assert params.discount == 0.95

    def test_custom_rates(self):
        params = build_params(
            generate_instance(GeneratorConfig(seed=7)), 3, 0.5, 2, cost_setting(2), mu=[2.0, 1.0, 1.0, 0.5],
            alpha=[0.0, 1.0, 0.2, 0.0],
        )
        assert params.degradation.failure_rate(2) == pytest.approx(0.2)
        assert params.degradation.degradation_rate(3) == pytest.approx(0.5)
