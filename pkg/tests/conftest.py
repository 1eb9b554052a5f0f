import numpy as np
import pytest

from margingate.freqresp import FrequencyGrid, FrequencyResponse, log_grid


def first_order(gain: float, corner_hz: float, grid: FrequencyGrid) -> FrequencyResponse:
    """L(s) = gain / (1 + s / (2*pi*corner_hz)) sampled on the grid."""
    return FrequencyResponse(
        grid,
        gain / (1.0 + 1j * grid.points / corner_hz),
        unit="dimensionless",
        label=f"first-order({gain},{corner_hz})",
    )


def three_pole(gain: float, corner_hz: float, grid: FrequencyGrid) -> FrequencyResponse:
    """L(s) = gain / (1 + s / (2*pi*corner_hz))^3 sampled on the grid."""
    return FrequencyResponse(
        grid,
        gain / (1.0 + 1j * grid.points / corner_hz) ** 3,
        unit="dimensionless",
        label=f"three-pole({gain},{corner_hz})",
    )


@pytest.fixture
def grid_2k() -> FrequencyGrid:
    return log_grid(1.0, 10000.0, 2000)


@pytest.fixture
def grid_dense() -> FrequencyGrid:
    return log_grid(1.0, 10000.0, 20000)


@pytest.fixture
def constant_half(grid_2k) -> FrequencyResponse:
    return FrequencyResponse(
        grid_2k, np.full(len(grid_2k), 0.5 + 0j), unit="dimensionless", label="0.5"
    )
