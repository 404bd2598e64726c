"""Carrier-frequency-offset estimation for OFDM receivers.

Phase-difference estimators (cyclic prefix, preamble, pilot), their
closed-form error model and decoding criterion, a two-step coarse/residual
compensation scheme, and a Monte Carlo harness that checks them against
each other.
"""

__version__ = "0.1.0"
