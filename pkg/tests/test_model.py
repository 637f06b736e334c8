import math

import numpy as np
import pytest

from qbm.errors import ConfigurationError, DomainError
from qbm.model import (
    BathSpec,
    CouplingFunction,
    ModelConfig,
    ThermalState,
    bose_occupation,
    discretize,
    thermal_state,
)


def test_from_damping_sets_rate_and_peak():
    for n in (1, 2, 3):
        c = CouplingFunction.from_damping(0.02, 1.5, n)
        assert 2 * math.pi * float(c(1.5)) == pytest.approx(0.02, rel=1e-14)
        assert c.peak == pytest.approx(1.5)


def test_coupling_zero_below_threshold():
    c = CouplingFunction("power-exponential", 1.0, 1.0, 1.0)
    assert np.all(c(np.array([-1.0, 0.0])) == 0.0)


def test_window_and_table_values():
    w = CouplingFunction("window", 0.3, lower=0.5, upper=1.5)
    assert list(w(np.array([0.4, 0.5, 1.0, 1.5, 1.6]))) == [0.0, 0.3, 0.3, 0.3, 0.0]
    t = CouplingFunction("custom-table", 2.0, table=((0.0, 0.0), (1.0, 1.0), (2.0, 0.0)))
    assert float(t(0.5)) == pytest.approx(1.0)
    assert t.breakpoints == (0.0, 1.0, 2.0)


@pytest.mark.parametrize("kwargs", [
    {"family": "nope"},
    {"strength": -1.0},
    {"exponent": 0.0},
    {"family": "window", "lower": 2.0, "upper": 1.0},
    {"family": "custom-table", "table": ((1.0, 1.0),)},
    {"family": "custom-table", "table": ((1.0, 1.0), (0.5, 1.0))},
])
def test_coupling_validation(kwargs):
    with pytest.raises(ConfigurationError):
        CouplingFunction(**kwargs)


def test_total_weight_gamma_function():
    c = CouplingFunction("power-exponential", 0.7, 2.0, 0.5)
    assert c.total_weight() == pytest.approx(0.7 * math.gamma(3) * 0.5**3, rel=1e-12)


@pytest.mark.parametrize("scheme", ["midpoint", "gauss-bin"])
def test_discretize_preserves_weight(scheme):
    c = CouplingFunction.from_damping(0.01, 1.0, 1)
    bath = discretize(c, 400, 20.0, scheme)
    assert np.sum(bath.couplings**2) == pytest.approx(c.total_weight(20.0), rel=1e-9)
    assert np.all(np.diff(bath.frequencies) > 0)


def test_discretize_window_edges_inside_bins():
    c = CouplingFunction("window", 0.2, lower=0.33, upper=1.77)
    bath = discretize(c, 10, 2.0)
    assert np.sum(bath.couplings**2) == pytest.approx(0.2 * 1.44, rel=1e-12)


def test_bath_validation():
    with pytest.raises(ConfigurationError):
        BathSpec([1.0, 1.0], [0.1, 0.1])
    with pytest.raises(ConfigurationError):
        BathSpec([0.0], [0.1])
    with pytest.raises(ConfigurationError):
        BathSpec([1.0, 2.0], [0.1])
    bath = BathSpec.from_modes([(1.0, 0.1), (2.0, 0.2)])
    assert len(bath) == 2
    with pytest.raises(ValueError):
        bath.frequencies[0] = 3.0


@pytest.mark.parametrize("field,value", [("omega", 0.0), ("mass", -1.0), ("beta", 0.0), ("n0", -1.0), ("omega", math.nan)])
def test_model_config_validation(field, value):
    kwargs = {"omega": 1.0, "bath": BathSpec([1.0], [0.1]), field: value}
    with pytest.raises(ConfigurationError):
        ModelConfig(**kwargs)


def test_bose_occupation():
    assert bose_occupation(1.0, 1.0) == pytest.approx(1 / (math.e - 1))
    assert bose_occupation(1e-8, 1.0) == pytest.approx(1e8, rel=1e-7)
    assert bose_occupation(1.0, 1000.0) == 0.0
    with pytest.raises(DomainError):
        bose_occupation(1.0, 0.0)


def test_thermal_state_matches_bose():
    cfg = ModelConfig(1.0, BathSpec([0.5, 1.0, 2.0], [0.1, 0.1, 0.1]), beta=2.0)
    th = thermal_state(cfg)
    assert isinstance(th, ThermalState)
    np.testing.assert_allclose(th.occupations, 1 / np.expm1(2.0 * np.array([0.5, 1.0, 2.0])), rtol=1e-15)
