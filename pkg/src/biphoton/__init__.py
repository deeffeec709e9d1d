"""Group-velocity-dispersion broadening of the SPDC biphoton and its measurement."""

__version__ = "0.1.0"
