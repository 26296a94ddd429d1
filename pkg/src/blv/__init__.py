"""Balancing Logit Variation: pérdida, estimadores de frecuencia y banco de pruebas long-tail."""

__version__ = "0.1.0"
