"""Python bindings for the SRAM-SUC emulator."""

from ._sramsuc import *  # noqa: F401,F403
from ._sramsuc import SramSucError, __doc__  # noqa: F401

__version__ = "0.1.0"
