"""Desk-scale toolkit for concurrent plant, control and layout design of
heaving-buoy wave farms: frequency-domain farm dynamics, probabilistic
site power aggregation, pairwise interaction composition, committee
surrogates with active sampling, and genetic-algorithm studies.
"""

__version__ = "0.1.0"
