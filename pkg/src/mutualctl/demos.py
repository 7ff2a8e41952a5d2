"""Bundled demo problems."""

import inspect

from .model import Constants, MutualControlProblem
from .problemfile import SolverSettings, format_problem

DEMO_NAMES = ("linear", "sinpair", "prey")


def linear():
    """f = g = 0: x(0) = k beta e^{(A-B)T} = 2 e^{0.5} in closed form."""
    p = MutualControlProblem(
        n=1, T=1.0, k=2.0, A=[[1.0]], B=[[0.5]], f=["0"], g=["0"], beta=[1.0],
        lipschitz=Constants(0.0, 0.0, 0.0, 0.0),
    )
    return p, SolverSettings(grid=2000, tol=1e-10, max_iter=500)


def sinpair():
    """Weak sine coupling; exact Lipschitz constants b = c = 0.1."""
    p = MutualControlProblem(
        n=1, T=1.0, k=1.0, A=[[1.0]], B=[[1.0]],
        f=["0.1*sin(y1)"], g=["0.1*sin(x1)"], beta=[1.0],
        lipschitz=Constants(0.0, 0.1, 0.1, 0.0),
    )
    return p, SolverSettings(grid=2000, theta=0.0, tol=1e-10, max_iter=500)


def prey():
    """Two habitat patches of prey x and predators y with dispersal between
    patches and tanh-saturated interactions; the target is prey = 3 x
    predators at time T. Constants are left to sampled estimation."""
    # loss rates 0.2 (prey) and 0.4 (predators) plus dispersal 0.1
    p = MutualControlProblem(
        n=2, T=1.0, k=3.0,
        A=[[0.3, -0.1], [-0.1, 0.3]],
        B=[[0.5, -0.1], [-0.1, 0.5]],
        f=["0.1*tanh(x1) - 0.1*tanh(y1)", "0.1*tanh(x2) - 0.1*tanh(y2)"],
        g=["0.05*tanh(x1) - 0.02*tanh(y1)", "0.05*tanh(x2) - 0.02*tanh(y2)"],
        beta=[1.0, 0.5],
    )
    return p, SolverSettings(grid=2000, tol=1e-10, max_iter=500)


_BUILDERS = {"linear": linear, "sinpair": sinpair, "prey": prey}


def demo(name):
    if name not in _BUILDERS:
        raise KeyError(f"unknown demo {name!r}; choose from {', '.join(DEMO_NAMES)}")
    return _BUILDERS[name]()


def demo_text(name):
    problem, settings = demo(name)
    header = f"mutualctl demo: {name}\n" + inspect.getdoc(_BUILDERS[name])
    return format_problem(problem, settings, header=header)
