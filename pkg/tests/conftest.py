"""Shared fixtures for sweepcert tests."""

import json
from pathlib import Path
from typing import Any, Callable, Dict

import numpy as np
import pytest

from sweepcert.models import CellCycleModel
from sweepcert.tools.numerics import RandomStream
from sweepcert.tools.qnd import MeasurementEnsemble


CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def _unitary(theta: float, phase: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex) @ np.diag([1.0, np.exp(1j * phase)])


@pytest.fixture
def diagonal_table():
    """Two diagonal outcomes built from 0.6 / 0.8."""
    return np.array([[0.6, 0.8], [0.8, 0.6]])


@pytest.fixture
def diagonal_ensemble(diagonal_table):
    """Complete diagonal ensemble on C^2."""
    return MeasurementEnsemble.from_diagonal(diagonal_table)


@pytest.fixture
def nondiagonal_ensemble():
    """Complete, non-diagonal, non-Hermitian ensemble M_k = W_k D_k U on C^2."""
    right = _unitary(0.4, 0.3)
    first = _unitary(1.1, -0.7) @ np.diag([0.6, 0.8]) @ right
    second = _unitary(-0.5, 1.9) @ np.diag([0.8, 0.6]) @ right
    return MeasurementEnsemble.from_matrices([first, second])


@pytest.fixture
def cell_model():
    """Cell-cycle model that sweeps to infinity (alpha ln sigma > -1)."""
    return CellCycleModel(alpha=1.0, sigma=0.5)


@pytest.fixture
def stream():
    """Fixed random stream."""
    return RandomStream(seed=12345)


@pytest.fixture
def write_config(tmp_path) -> Callable[[Dict[str, Any]], Path]:
    """Write an experiment document into tmp_path and return its path."""

    def write(document: Dict[str, Any], name: str = "experiment.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path

    return write


@pytest.fixture
def qnd_document(tmp_path) -> Dict[str, Any]:
    """Small diagonal qnd experiment writing into tmp_path."""
    return {
        "model": {"kind": "qnd", "diagonal": [[0.6, 0.8], [0.8, 0.6]]},
        "seed": 2024,
        "n_trajectories": 2000,
        "horizon": 40,
        "checkpoints": [0, 10, 20, 40],
        "certificate": {"n_points": 2000, "n_integrability_samples": 20000},
        "output": {"directory": str(tmp_path / "results")},
    }


@pytest.fixture
def cell_document(tmp_path) -> Dict[str, Any]:
    """Small cell-cycle experiment writing into tmp_path."""
    return {
        "model": {"kind": "cell", "alpha": 1.0, "sigma": 0.5, "beta": "auto"},
        "seed": 11,
        "n_trajectories": 2000,
        "horizon": 20,
        "checkpoints": [0, 5, 10, 20],
        "certificate": {"n_points": 500, "n_integrability_samples": 1000},
        "output": {"directory": str(tmp_path / "results")},
    }


@pytest.fixture
def config_dir() -> Path:
    """Directory of the shipped example configurations."""
    return CONFIG_DIR
