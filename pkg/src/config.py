"""
Runtime and numerical configuration
"""
import os

from dotenv import load_dotenv

from .utils.errors import ConfigError

load_dotenv()


def env_int(name: str, default: int, minimum: int = 1) -> int:
    """Integer setting from the environment; errors name the variable"""
    raw = os.environ.get(name)
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"expected an integer, got {raw!r}", key=name) from None
    if value < minimum:
        raise ConfigError(f"must be at least {minimum}, got {value}", key=name)
    return value


class Config:
    # Operational settings
    LOG_LEVEL = os.environ.get('GRAPH_CRB_LOG_LEVEL') or 'WARNING'
    FLOAT_FORMAT = os.environ.get('GRAPH_CRB_FLOAT_FORMAT') or '%.12g'

    # Spectral conventions
    EIGEN_ZERO_TOL = 1e-9  # relative to the largest eigenvalue
    SIGN_TOL = 1e-12

    # Pseudo-inverse and conditioning
    PINV_RCOND = 1e-10
    SINGULAR_COND = 1e10
    RANDOM_SUBSET_COND = 1e6

    # Generators and samplers
    MAX_ATTEMPTS = 100
    DEFAULT_REWIRE_PROB = 0.2
    PRNG_NAME = 'numpy.random.PCG64'

    # Statistical checks
    UNBIASED_SIGMAS = 3.0

    @staticmethod
    def threads() -> int:
        """Default Monte Carlo worker threads, read when an experiment starts"""
        return env_int('GRAPH_CRB_THREADS', 1)
