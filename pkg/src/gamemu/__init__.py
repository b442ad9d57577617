"""First-order game logic and the first-order modal mu-calculus at desk scale."""

__version__ = "0.1.0"
