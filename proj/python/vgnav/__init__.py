"""Python access to the vgnav sparse-GP navigation library."""

import json as _json

from . import _core
from ._core import (
    AzimuthMetric,
    OptimSettings,
    RqKernelParams,
    Scenario,
    SgpModel,
    World,
    collapsed_elbo,
    exact_gp_predict,
    fit_svgp,
    load_scenario,
    make_world,
    rq_gram,
    simulate_lidar,
    world_generator_names,
)

__all__ = [
    "AzimuthMetric",
    "OptimSettings",
    "RqKernelParams",
    "Scenario",
    "SgpModel",
    "World",
    "collapsed_elbo",
    "exact_gp_predict",
    "fit_svgp",
    "load_scenario",
    "make_world",
    "rq_gram",
    "run_suite",
    "run_trial",
    "simulate_lidar",
    "world_generator_names",
]


def run_trial(scenario, mode="VG", seed=None):
    """Run one trial. Returns (summary dict, trajectory array of x, y, z, heading)."""
    text, trajectory = _core.run_trial(scenario, mode, scenario.seed if seed is None else seed)
    return _json.loads(text), trajectory


def run_suite(scenario, out_dir=None):
    """Run every configured mode; returns the report as a dict."""
    return _json.loads(_core.run_suite(scenario, "" if out_dir is None else str(out_dir)))
