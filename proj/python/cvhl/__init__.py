"""Homodyne-detection simulation and pattern-function tomography."""

try:
    from ._cvhl import *  # noqa: F401,F403  (installed layout)
except ImportError:  # in-tree build with the extension on sys.path
    from _cvhl import *  # noqa: F401,F403
