"""huci: a desk-scale federated open-citation index for the humanities."""

__version__ = "0.1.0"
