"""Exception types shared across the package."""


class GraphDataError(ValueError):
    """Malformed or inconsistent input data: edge lists, embeddings, pair files."""


class ConfigError(ValueError):
    """Invalid configuration value or unsupported parameter range."""


class ShapeError(ValueError):
    """Array dimensions inconsistent with the graph or model."""


class SamplingExhaustedError(RuntimeError):
    """Negative sampling cannot supply the requested number of pairs."""


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""
