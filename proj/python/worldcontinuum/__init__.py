"""Simulation of the world continuum: wavefunction propagation, world flow and world measures."""

import json
import os

from ._core import (
    ConfigError,
    Frames,
    Grid,
    NumericalError,
    WaveField,
    WorldContinuumError,
    __version__,
    newtonian_worlds,
    sample_worlds,
    substantial_amount,
    trajectories,
    world_probability,
)
from ._core import Config as _Config
from ._core import list_scenarios as _list_scenarios
from ._core import render_report as _render_report
from ._core import run_scenario as _run_scenario
from ._core import scenario_dir as _source_scenario_dir


def scenario_dir():
    """Directory of the bundled scenarios."""
    packaged = os.path.join(os.path.dirname(__file__), "scenarios")
    return packaged if os.path.isdir(packaged) else os.fspath(_source_scenario_dir())


def list_scenarios(directory=None):
    """Name, description and path of every scenario in a directory (bundled by default)."""
    return _list_scenarios(directory or scenario_dir())


def config(source):
    """Parse a scenario from a dict, a JSON string, a file path or a bundled scenario name."""
    if isinstance(source, dict):
        return _Config.parse(json.dumps(source))
    text = os.fspath(source)
    if text.lstrip().startswith("{"):
        return _Config.parse(text)
    if os.path.exists(text):
        return _Config.load(text)
    bundled = os.path.join(scenario_dir(), text + ".json")
    if os.path.exists(bundled):
        return _Config.load(bundled)
    raise ConfigError(f"no scenario file or bundled scenario named '{text}'")


def run(source, output_dir=None, seed=None, tolerances=None, write_artifacts=True):
    """Run a scenario file or bundled scenario; returns the summary dict."""
    text = os.fspath(source)
    path = text if os.path.exists(text) else os.path.join(scenario_dir(), text + ".json")
    return _run_scenario(path, output_dir, seed, tolerances or {}, write_artifacts)


def report(summary):
    """Plain-text metric table for a summary dict."""
    return _render_report(json.dumps(summary))


__all__ = [
    "ConfigError",
    "Frames",
    "Grid",
    "NumericalError",
    "WaveField",
    "WorldContinuumError",
    "__version__",
    "config",
    "list_scenarios",
    "newtonian_worlds",
    "report",
    "run",
    "sample_worlds",
    "scenario_dir",
    "substantial_amount",
    "trajectories",
    "world_probability",
]
