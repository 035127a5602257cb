"""Energy-optimal rematerialization and paging schedules for training graphs.

Exact quantities (energies, times) are returned as ``fractions.Fraction`` and
schedules as dicts holding the five boolean matrices as row strings.
"""

import json
from fractions import Fraction

from . import _core
from ._core import Instance, PoetError

__all__ = [
    "Instance",
    "PoetError",
    "baseline",
    "brute_force",
    "diagonal",
    "evaluate",
    "generate",
    "instance",
    "simulate",
    "solve",
    "verify",
]


def _frac(text):
    return None if text is None else Fraction(text)


def _sched_in(schedule):
    return schedule if isinstance(schedule, str) else json.dumps(schedule)


def _sched_out(text):
    return None if text is None else json.loads(text)


def _metrics(m):
    if m is None:
        return None
    m = dict(m)
    m["energy"] = Fraction(m["energy"])
    m["compute_time"] = Fraction(m["compute_time"])
    return m


def generate(kind, depth, regime="mixed", seed=0, tags=""):
    """Graph and profile documents (as dicts) for a synthetic instance."""
    graph, profile = _core.generate(kind, depth, regime, seed, tags)
    return json.loads(graph), json.loads(profile)


def instance(kind, depth, regime="mixed", seed=0, tags="", ram=None, deadline=None):
    """A costed instance; ``deadline`` may be a Fraction, number or string."""
    graph, profile = _core.generate(kind, depth, regime, seed, tags)
    return Instance(graph, profile, ram, None if deadline is None else str(Fraction(deadline)))


def solve(inst, mode="integrated", time_limit=60.0):
    r = dict(_core.solve(inst, mode, time_limit))
    r["objective"] = _frac(r["objective"])
    r["schedule"] = _sched_out(r["schedule"])
    return r


def verify(inst, schedule):
    return dict(_core.verify(inst, _sched_in(schedule)))


def evaluate(inst, schedule):
    return _metrics(_core.evaluate(inst, _sched_in(schedule)))


def diagonal(inst):
    return json.loads(_core.diagonal(inst))


def brute_force(inst, cap=100_000_000):
    r = dict(_core.brute_force(inst, cap))
    r["energy"] = _frac(r["energy"])
    r["schedule"] = _sched_out(r["schedule"])
    return r


def baseline(inst, name, time_limit=60.0):
    r = dict(_core.baseline(inst, name, time_limit))
    r["schedule"] = _sched_out(r["schedule"])
    r["metrics"] = _metrics(r["metrics"])
    return r


def simulate(inst, schedule, hide_latency=False, sync_paging=False):
    r = dict(_core.simulate(inst, _sched_in(schedule), hide_latency, sync_paging))
    for key in ("wall_clock", "compute_time", "hidden_transfer"):
        r[key] = Fraction(r[key])
    return r
