"""Optimal control of sweeping processes with controlled polyhedral sets.

Numeric kernels take and return NumPy arrays.  Problem-level calls accept the
JSON documents used by the command-line tool, either as text or as dicts, and
return parsed dicts.
"""

import json

from . import _core
from ._core import PolysweepError, coderiv_orthant, nnls, normal_cone_multipliers, project

__all__ = [
    "PolysweepError",
    "certify",
    "coderiv_orthant",
    "cost",
    "example8",
    "nnls",
    "normal_cone_multipliers",
    "project",
    "reduced_halfspace",
    "simulate",
    "solve",
    "trajectory_csv",
]


def _text(doc):
    return doc if isinstance(doc, str) else json.dumps(doc)


def example8(nu=2):
    """The planar example as (discrete problem, optimal controls, constrained-branch controls)."""
    return (
        json.loads(_core.example8_discrete(nu)),
        json.loads(_core.example8_controls(nu, "optimal")),
        json.loads(_core.example8_controls(nu, "constrained")),
    )


def simulate(discrete, controls):
    return json.loads(_core.simulate(_text(discrete), _text(controls)))


def trajectory_csv(quadruple):
    return _core.trajectory_csv(_text(quadruple))


def cost(discrete, quadruple):
    return _core.cost(_text(discrete), _text(quadruple))


def reduced_halfspace(discrete, branch="any"):
    return _core.reduced_halfspace(_text(discrete), branch)


def solve(discrete, init_controls, starts=16, seed=0, branch="any"):
    out = _core.solve(_text(discrete), _text(init_controls), starts, seed, branch)
    out["quadruple"] = json.loads(out["quadruple"])
    return out


def certify(discrete, quadruple, mode="th72", exhaustive=False):
    return json.loads(_core.certify(_text(discrete), _text(quadruple), mode, exhaustive))
