import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinstar.errors import ConfigError
from spinstar.model import ModelParams, XState, build_state, canonical_family, random_params, random_xstate


def test_bell_state():
    x = build_state("phi+", math.pi / 4, 0.0)
    assert x.rho22 == pytest.approx(0.5)
    assert x.rho33 == pytest.approx(0.5)
    assert x.rho23 == pytest.approx(0.5)


@pytest.mark.parametrize("beta", [0.0, 0.7, math.pi])
def test_theta_half_pi_is_product_state(beta):
    x = build_state("phi_plus", math.pi / 2, beta)
    assert x.rho22 == pytest.approx(1.0)
    assert abs(x.rho23) < 1e-15
    assert x.rho33 < 1e-30


def test_phase_convention():
    x = build_state("phi+", math.pi / 3, math.pi / 2)
    assert x.rho22 == pytest.approx(0.75)
    assert x.rho33 == pytest.approx(0.25)
    assert x.rho23 == pytest.approx(-1j * math.sqrt(3) / 4, abs=1e-15)


def test_matches_outer_product():
    theta, beta = 0.4, 1.1
    for fam, sign, (a, b) in [("phi+", 1, (1, 2)), ("phi-", -1, (1, 2)), ("psi+", 1, (0, 3)), ("psi-", -1, (0, 3))]:
        psi = np.zeros(4, dtype=complex)
        psi[a] = math.sin(theta)
        psi[b] = sign * cmath.exp(1j * beta) * math.cos(theta)
        np.testing.assert_allclose(build_state(fam, theta, beta).matrix(), np.outer(psi, psi.conj()), atol=1e-15)


def test_unknown_family():
    with pytest.raises(ConfigError):
        canonical_family("ghz")


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(rho11=0.5, rho22=0.5, rho33=0.5, rho44=0.0),
        dict(rho11=-0.1, rho22=0.6, rho33=0.5, rho44=0.0),
        dict(rho11=0.0, rho22=0.5, rho33=0.5, rho44=0.0, rho23=0.6),
        dict(rho11=0.5, rho22=0.0, rho33=0.0, rho44=0.5, rho14=0.51),
    ],
)
def test_invalid_states(kwargs):
    with pytest.raises(ConfigError):
        XState(**kwargs)


@pytest.mark.parametrize("kwargs", [dict(gamma=-1, alpha=1), dict(gamma=1, alpha=float("nan")),
                                    dict(gamma=1, alpha=1, bath_size=0), dict(gamma=1, alpha=1, bath_size=2.5)])
def test_invalid_params(kwargs):
    with pytest.raises(ConfigError):
        ModelParams(**kwargs)


def test_limit_params_have_no_bath_size():
    with pytest.raises(ConfigError):
        ModelParams(1.0, 0.5).N


@given(st.integers(0, 2**32 - 1))
def test_random_states_valid_and_roundtrip(seed):
    rng = np.random.default_rng(seed)
    x = random_xstate(rng)
    eig = np.linalg.eigvalsh(x.matrix())
    assert eig.min() > -1e-12
    assert XState.from_dict(json.loads(json.dumps(x.as_dict()))) == x
    assert XState.from_matrix(x.matrix()) == x
    p = random_params(rng)
    assert 0.01 <= p.alpha / p.gamma <= 100
    assert p.N in (1, 2, 4, 6, 8)


def test_from_dict_errors():
    with pytest.raises(ConfigError):
        XState.from_dict({"rho11": 1})
    with pytest.raises(ConfigError):
        XState.from_dict({"rho11": 1, "rho22": 0, "rho33": 0, "rho44": 0, "rho23": [1, 2, 3]})


def test_from_matrix_rejects_non_x():
    m = np.eye(4) / 4
    m[0, 1] = m[1, 0] = 0.1
    with pytest.raises(ConfigError):
        XState.from_matrix(m)
