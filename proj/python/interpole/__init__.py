"""Interpretable policy learning from offline demonstrations.

The compiled extension carries the full API: belief updates and boundary
policies, forward-backward smoothing, MAP fitting (joint and two-stage),
reference environments, evaluation metrics, and behavior audits.
"""

try:
    from ._interpole import *  # noqa: F401,F403
    from ._interpole import __doc__ as _ext_doc  # noqa: F401
except ImportError:  # pragma: no cover - build-tree layout fallback
    from _interpole import *  # type: ignore  # noqa: F401,F403

__version__ = "0.1.0"
