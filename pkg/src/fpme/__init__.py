"""Structure-preserving P1 finite element solver for a nonlocal porous medium
equation whose pressure is the inverse spectral fractional Neumann Laplacian
of the (zero-mean) density.

Subpackage layout:

* :mod:`fpme.mesh` -- structured weakly acute triangulations of rectangles
* :mod:`fpme.assembly` -- P1 stiffness / mass operators and nodal interpolation
* :mod:`fpme.spectral` -- Neumann Laplacian eigenpairs and fractional powers
* :mod:`fpme.nonlinearity` -- density cutoff, regularized entropy, chain-rule matrix
* :mod:`fpme.stepper` -- implicit Euler time loop with Picard iteration
* :mod:`fpme.diagnostics` -- conserved/dissipated quantities, decay fits, profiles
* :mod:`fpme.cli` -- JSON-configured runs, sweeps, and CSV output
"""

__version__ = "0.1.0"
