"""Information geometry of finite causal-state machines and generalized Wright-Fisher evolution."""

from __future__ import annotations

__version__ = "0.1.0"

from .machine import Alphabet, DfaType, Machine  # noqa: E402

__all__ = ["Alphabet", "DfaType", "Machine", "__version__"]
