"""Random sequences in the unit disk: geometry, radii profiles, Steinhaus
sampling, dyadic Carleson windows, generating-function tail bounds and
Monte Carlo checks of the associated 0-1 laws."""

__version__ = "0.1.0"
