"""Process tensors for two-step open-quantum-system dynamics.

Construction of one- and two-step process tensors, necessary-and-sufficient
condition checks (Markov product form, no information backflow through the
reduced environment state, no system-environment correlation effect), and
alternating convex-optimization distance measures with a brute-force
random-search oracle.
"""

from .linalg import LabeledSpace, trace_distance
from .quantum import DensityMatrix, QuantumMap
from .process_tensor import ProcessTensor, ReducedProcessTensor

__version__ = "0.1.0"

__all__ = [
    "LabeledSpace",
    "trace_distance",
    "DensityMatrix",
    "QuantumMap",
    "ProcessTensor",
    "ReducedProcessTensor",
    "__version__",
]
