"""Cardinality sketches built around entropy and Fisher information.

Subpackages: :mod:`fishtank.sketches` (PCSA/LogLog state machines),
:mod:`fishtank.estimation`, :mod:`fishtank.fishmonger`,
:mod:`fishtank.infotheory` and :mod:`fishtank.harness`.
"""

__version__ = "0.1.0"
