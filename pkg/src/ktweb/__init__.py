"""Killing two-tensors on the Euclidean plane.

Exact tensor algebra and a generalized Killing tensor solver on flat
pseudo-Euclidean spaces, the six-parameter tensor space on E^2 with its
isometry action, algebraic and differential invariants, web classification,
joint invariants and resultants of tensor pairs, Bertrand-Darboux
compatibility for natural Hamiltonians, and coordinate-web tracing with
SVG output.
"""

__version__ = "0.1.0"

CONVENTIONS = (
    "bracket: [A,B] = p*A^(k..)d_k B^(..) - q*B^(k..)d_k A^(..), symmetrized",
    "tensor parameters: the d1(x)d2 coefficient enters the component matrix unhalved",
    "group action on parameters: pushforward, K~(g.x) = R K(x) R^T",
    "first integral normalization: dU = 2*K_hat dV",
)
