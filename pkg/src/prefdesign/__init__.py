"""Active preference learning with counterfactual queries and environment design."""

__version__ = "0.1.0"
