"""Ambient-backscatter anti-jamming laboratory (native core bindings)."""

from ._abjam import *  # noqa: F401,F403

__version__ = "0.1.0"
