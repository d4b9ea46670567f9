"""Blow-up rates of multi-bubble solutions to a critical elliptic equation on a ball.

Submodules: :mod:`greens` (Green's and Robin functions), :mod:`interaction`
(interaction matrix and its Perron data), :mod:`profiles` (correction
profiles W, W2), :mod:`rates` (reduced energy and rate predictions),
:mod:`pde` (radial shooting validation) and :mod:`cli`.
"""

__version__ = "0.1.0"
