"""Context-aware threat detection for tourists in a mountain area.

The package covers the whole loop: an environment simulator publishes
sensor data on an in-process broker, the pipeline locates and tags each
tourist, stores context rows, reasons about threats with an embedded SAT
solver and emits per-tourist behavior traces checked against a regular
threat language.  ``rescuectx.runner.run_simulation`` ties it together.
"""

from ._kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
