"""Phonon and quasiparticle transport for superconducting qubit chips."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
