"""Survey disagreement indices and bivariate Bayesian VAR impulse responses."""

__version__ = "0.1.0"
