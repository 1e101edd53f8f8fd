"""Python surface of the offline-RL laboratory.

The heavy lifting lives in the compiled `_core` module: closed-form penalty
analysis (Blom expected max, penalized expectations, absorbed discount),
penalized bootstrapping over raw value matrices, ranking metrics, and the
micro-MDP oracle.
"""

try:
    from vpqlab._core import *  # noqa: F401,F403  (installed wheel layout)
    from vpqlab._core import __version__  # noqa: F401
except ImportError:  # bare build tree: _core sits directly on sys.path
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
