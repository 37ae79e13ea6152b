import pytest

from decoykit import AnalysisConfig, ChannelParams

# Reference operating point: optimized parameter sets at 110 km, 1e10 pulses,
# and the benchmark key rates they should reproduce (within 10 percent), plus
# the benchmark optimized rates per distance used by the acceptance suite.
REFERENCE_PARAMS_110 = {
    "3Int-0": {"p_Z1": 0.142, "p_Z2": 0.338, "mu_Z1": 0.116, "mu_Z2": 0.390},
    "4Int-1": {
        "p_Z1": 0.190, "p_Z2": 0.597, "p_X1": 0.112,
        "mu_Z1": 0.078, "mu_Z2": 0.379, "mu_X1": 0.255, "q_x": 0.223,
    },
    "4Int-2": {
        "p_Z1": 0.077, "p_Z2": 0.260, "p_X1": 0.205,
        "mu_Z1": 0.200, "mu_Z2": 0.419, "mu_X1": 0.073, "mu_X2": 0.396, "q_x": 0.579,
    },
}
REFERENCE_RATES_110 = {"3Int-0": 2.39e-6, "4Int-1": 2.99e-6, "4Int-2": 3.50e-6}

REFERENCE_OPTIMAL_RATES = {
    "3Int-0": {80: 3.37e-5, 90: 1.73e-5, 100: 7.65e-6, 110: 2.39e-6, 120: 3.91e-8},
    "3Int-1": {80: 5.04e-5, 90: 2.38e-5, 100: 9.29e-6, 110: 2.02e-6, 120: 0.0},
    "4Int-1": {80: 5.43e-5, 90: 2.65e-5, 100: 1.09e-5, 110: 2.99e-6, 120: 3.65e-8},
    "4Int-2": {80: 5.05e-5, 90: 2.39e-5, 100: 9.63e-6, 110: 3.50e-6, 120: 4.55e-7},
    "5Int-1": {80: 5.43e-5, 90: 2.65e-5, 100: 1.09e-5, 110: 3.50e-6, 120: 4.55e-7},
}

N_TOTAL = 1e10

# Valid distance-independent parameter sets, one per family, used wherever a
# representative protocol is needed (soundness sweeps, CLI round trips).
GENERIC_PARAMS = {
    "3Int-0": {"p_Z1": 0.2, "p_Z2": 0.2, "mu_Z1": 0.1, "mu_Z2": 0.4},
    "3Int-1": {"p_Z1": 0.25, "p_Z2": 0.25, "p_X1": 0.25, "mu_Z1": 0.1, "q_x": 0.5},
    "4Int-1": {
        "p_Z1": 0.25, "p_Z2": 0.25, "p_X1": 0.25,
        "mu_Z1": 0.1, "mu_Z2": 0.4, "mu_X1": 0.1, "q_x": 0.5,
    },
    "4Int-2": {
        "p_Z1": 0.25, "p_Z2": 0.25, "p_X1": 0.25,
        "mu_Z1": 0.1, "mu_Z2": 0.4, "mu_X1": 0.1, "mu_X2": 0.4, "q_x": 0.5,
    },
    "5Int-1": {
        "p_Z1": 0.2, "p_Z2": 0.2, "p_X1": 0.2, "p_O": 0.2,
        "mu_Z1": 0.1, "mu_Z2": 0.4, "mu_X1": 0.1, "mu_X2": 0.4, "q_x": 0.5, "ps_Z1": 0.1,
    },
}


@pytest.fixture
def channel_110():
    return ChannelParams(distance_km=110)


@pytest.fixture
def default_cfg():
    return AnalysisConfig()


@pytest.fixture
def fluct_free_cfg():
    return AnalysisConfig(fluctuation_free=True)


def channel_at(km: float, **kwargs) -> ChannelParams:
    return ChannelParams(distance_km=km, **kwargs)
