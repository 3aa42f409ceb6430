"""Arbitrage analysis for one-dimensional general diffusion markets.

Builds the auxiliary signed measure and canonical feedback strategy for a
diffusion given by scale function, speed measure, boundary behavior, and
interest rate; decides the no-increasing-profit, quadratic-variation
increasing-profit, and representation-property verdicts; and verifies the
predictions by Monte Carlo on an exit-time grid chain.
"""

__version__ = "0.1.0"
