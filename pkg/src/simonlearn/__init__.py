"""Training parameterised circuits around a Simon oracle to rediscover Simon's algorithm."""

__version__ = "0.1.0"
