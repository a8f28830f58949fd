"""Evolution-strategy training of hybrid quantum-classical neural networks."""

__version__ = "0.1.0"
