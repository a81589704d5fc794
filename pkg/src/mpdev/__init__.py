"""Marchenko-Pastur law, Laguerre zeros and covariance-matrix spectra."""
