"""sentsimp: sentence simplification with a reinforcement-learned encoder-decoder."""

__version__ = "0.1.0"
