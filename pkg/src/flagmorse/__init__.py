"""Morse decompositions of gradient flows on real flag manifolds.

Exact root-system combinatorics (``rootsys``, ``parabolic``, ``cohomology``,
``schubert``) plus floating point numerics for sl(n, R) (``flowlab``) and a
product-bundle harness (``bundlelab``).
"""
from .rootsys import (
    ConfigurationError,
    RootSystem,
    WeylElement,
    WeylGroup,
    as_weyl_group,
    bruhat_leq,
    build_root_system,
    generate_weyl,
    longest_element,
    reduced_words,
)
from .parabolic import ChamberElement, dimension_table, double_cosets, flag_type, sign_profile
from .cohomology import IntPolynomial, MorseEquationError, flag_poincare, morse_residual, morse_table
from .schubert import closure_bruhat, closure_gamma

__version__ = "0.1.0"
