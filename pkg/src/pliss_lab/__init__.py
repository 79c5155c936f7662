"""Numerical laboratory for SRB-measure constructions on mostly expanding
partially hyperbolic maps: Pliss times, Følner time sets, Gibbs bounds,
entropy and exponent checks on models with known ground truth."""

__version__ = "0.1.0"
