"""Finite-size scaling of the quantum Rabi model critical point.

Library layout:

- operators: truncated bosonic ladder/number/quadrature/parity matrices
- hamiltonians: effective phase Hamiltonians, the full Rabi model, and
  analytic large-ratio observables
- eigensolver: in-repo dense symmetric eigensolver
- fss: scaling-exponent curves, curve intersections, exponent estimates
- extrapolate: sequence extrapolation with a free power exponent
- rbm: three-layer restricted Boltzmann machine variational engine
- qcircuit: Gibbs-state preparation circuit with post-selection
- cli: reproducible command-line pipelines
"""

__version__ = "0.1.0"
