"""Error models for approximate solutions of parameterized dynamical systems.

Generates surrogate error data (reduced-order and coarse-mesh models), builds
features from parameters, time and residuals, and trains recursive regression
models plus stochastic noise models that predict state-norm and QoI errors.
"""

from . import datagen, dynsys, evaluate, features, integrator, noise, reduction, regress
from .exceptions import ErrorModelsError

__version__ = "0.1.0"

__all__ = ["datagen", "dynsys", "evaluate", "features", "integrator", "noise", "reduction",
           "regress", "ErrorModelsError", "__version__"]
