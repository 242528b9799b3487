"""Concolic exploration and semantic differencing for component-and-connector models."""

__version__ = "0.1.0"

from .errors import CclError  # noqa: E402
from .parser import parse_file, parse_model, render_model  # noqa: E402
from .ir import flatten, validate_model  # noqa: E402
from .executor import Oracle, default_oracle, replay_check, run  # noqa: E402
from .controllers import ControllerConfig, explore  # noqa: E402
from .semdiff import semantic_diff  # noqa: E402
from .bruteforce import brute_diff, enumerate_runs  # noqa: E402

__all__ = [
    "__version__",
    "CclError",
    "ControllerConfig",
    "Oracle",
    "brute_diff",
    "default_oracle",
    "enumerate_runs",
    "explore",
    "flatten",
    "parse_file",
    "parse_model",
    "render_model",
    "replay_check",
    "run",
    "semantic_diff",
    "validate_model",
]
