"""Dynamics of small non-Hermitian quantum systems.

Four ways of evolving a state under a non-Hermitian generator are provided
side by side: biorthogonal quantum mechanics, the time-dependent metric, the
no-jump (division-by-norm) limit of a Lindblad master equation, and the full
master equation itself.
"""

__version__ = "0.1.0"
