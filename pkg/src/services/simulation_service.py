"""
Simulation service

Random graph generators, samplers for the two measurement models and
the Monte Carlo engine that sets empirical risks against the bounds.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from ..config import Config
from ..models.experiment import ExperimentConfig
from ..models.fisher import DiagonalNoise
from ..models.graph import Graph, Spectrum
from ..models.observations import MaskedObservation, RelativeObservation
from ..models.results import MonteCarloRecord, MonteCarloResult, parse_policy
from ..utils import csv_io
from ..utils.errors import (
    BadCovariance, ConfigError, DimensionMismatch, ExperimentError, GenerationFailed,
    GraphCRBError, InvalidVariance, NodeIndexOutOfRange,
)
from ..utils.linalg import as_vector, symmetrize
from .estimator_service import EstimatorService
from .metrics_service import RiskAccumulator
from .sampling_service import SamplingService
from .spectral_service import SpectralService

logger = logging.getLogger(__name__)

WeightSampler = Callable[[np.random.Generator, int], np.ndarray]

# spawn keys separating the setup streams of one grid point
_GRAPH_STREAM = 0
_TRUTH_STREAM = 1
_PLACEMENT_STREAM = 2


def uniform_weights(low: float, high: float) -> WeightSampler:
    """Sampler of i.i.d. uniform(low, high) edge weights"""
    def sample(rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(low, high, size=count)
    return sample


def _rng(*entropy: int, spawn_key: Tuple[int, ...] = ()) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(entropy), spawn_key=spawn_key)))


def _seed_from(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2 ** 32))


class SimulationService:
    """Generators, samplers and the Monte Carlo harness"""

    # --------------------------------------------------------- generators

    @staticmethod
    def _connected(build: Callable[[int], nx.Graph], name: str, seed: Optional[int],
                   weight_sampler: Optional[WeightSampler]) -> Graph:
        rng = np.random.default_rng(seed)
        for attempt in range(1, Config.MAX_ATTEMPTS + 1):
            candidate = build(_seed_from(rng))
            if nx.is_connected(candidate):
                break
        else:
            raise GenerationFailed(f"{name}: no connected graph in {Config.MAX_ATTEMPTS} attempts")
        if attempt > 1:
            logger.info(f"{name}: connected graph after {attempt} attempts")

        g = Graph.from_networkx(candidate)
        if weight_sampler is not None:
            weights = np.asarray(weight_sampler(rng, g.num_edges), dtype=float)
            g = Graph(g.num_vertices, tuple((i, j, w) for (i, j, _), w in zip(g.edges, weights)))
        return g

    @classmethod
    def gen_watts_strogatz(cls, M: int, mean_degree: int, rewire_prob: float = Config.DEFAULT_REWIRE_PROB,
                           seed: Optional[int] = None,
                           weight_sampler: Optional[WeightSampler] = None) -> Graph:
        """
        Connected small-world graph: ring lattice with random rewiring

        Rewiring is redrawn until the graph is connected. Edges have unit
        weight unless weight_sampler is given.

        Raises:
            ConfigError: odd degree, degree >= M or probability outside [0, 1]
            GenerationFailed: no connected draw within the attempt limit
        """
        if mean_degree < 2 or mean_degree % 2 or mean_degree >= M:
            raise ConfigError(f"mean degree must be even and in 2..{M - 1}, got {mean_degree}", key='graph.degree')
        if not 0.0 <= rewire_prob <= 1.0:
            raise ConfigError(f"rewiring probability {rewire_prob} outside [0, 1]", key='graph.rewire')
        return cls._connected(
            lambda s: nx.watts_strogatz_graph(M, mean_degree, rewire_prob, seed=s),
            "watts-strogatz", seed, weight_sampler,
        )

    @classmethod
    def gen_erdos_renyi(cls, M: int, p: float, seed: Optional[int] = None,
                        weight_sampler: Optional[WeightSampler] = None) -> Graph:
        """Connected G(M, p) graph, redrawn until connected"""
        if not 0.0 < p <= 1.0:
            raise ConfigError(f"edge probability {p} outside (0, 1]", key='graph.p')
        if M < 1:
            raise ConfigError(f"graph needs at least one vertex, got {M}", key='graph.m')
        return cls._connected(
            lambda s: nx.gnp_random_graph(M, p, seed=s),
            "erdos-renyi", seed, weight_sampler,
        )

    # ----------------------------------------------------------- samplers

    @staticmethod
    def sample_relative(meas_graph: Graph, theta, sigma2: float,
                        rng: np.random.Generator) -> RelativeObservation:
        """Noisy weighted differences w_ij (theta_i - theta_j) + N(0, sigma2) per edge i < j"""
        theta = as_vector(theta, meas_graph.num_vertices, name="signal")
        if not (np.isfinite(sigma2) and sigma2 >= 0):
            raise InvalidVariance(f"sigma2 must be nonnegative, got {sigma2}")
        src = np.array([i for i, _, _ in meas_graph.edges], dtype=int)
        dst = np.array([j for _, j, _ in meas_graph.edges], dtype=int)
        x = meas_graph.weights * (theta[src] - theta[dst])
        if sigma2 > 0:
            x = x + np.sqrt(sigma2) * rng.standard_normal(meas_graph.num_edges)
        return RelativeObservation(meas_graph, x)

    @staticmethod
    def sample_masked(theta, nodes: Sequence[int], noise_cov,
                      rng: np.random.Generator) -> MaskedObservation:
        """
        Samples theta_S + w_S with w ~ N(0, noise_cov)

        noise_cov is either an MxM covariance or a length-M vector of
        independent variances; it is restricted to the sample set.
        """
        theta = as_vector(theta, name="signal")
        idx = np.asarray(nodes, dtype=int)
        if idx.size and (idx.min() < 0 or idx.max() >= theta.size):
            raise DimensionMismatch(f"sample indices must lie in 0..{theta.size - 1}")
        cov = np.asarray(noise_cov, dtype=float)

        if cov.ndim == 1:
            if cov.shape[0] != theta.size:
                raise BadCovariance(f"{cov.shape[0]} variances for {theta.size} nodes")
            if np.any(cov < 0) or not np.all(np.isfinite(cov)):
                raise BadCovariance("noise variances must be finite and nonnegative")
            var_S = cov[idx]
            x = theta[idx] + np.sqrt(var_S) * rng.standard_normal(idx.size)
            return MaskedObservation(tuple(idx), x, var_S)

        if cov.shape != (theta.size, theta.size):
            raise BadCovariance(f"noise covariance has shape {cov.shape}, expected {(theta.size, theta.size)}")
        cov_S = symmetrize(cov[np.ix_(idx, idx)])
        scale = max(1.0, float(np.max(np.abs(cov_S), initial=0.0)))
        if cov_S.size and np.min(np.linalg.eigvalsh(cov_S)) < -1e-10 * scale:
            raise BadCovariance("noise covariance is not positive semidefinite")
        noise = rng.multivariate_normal(np.zeros(idx.size), cov_S, method='eigh') if idx.size else np.zeros(0)
        return MaskedObservation(tuple(idx), theta[idx] + noise, cov_S)

    @staticmethod
    def bus_noise_variances(M: int, generator_nodes: Iterable[int], sigma_l2: float,
                            ratio: float = 0.5) -> np.ndarray:
        """Load buses get sigma_l2, generator buses ratio * sigma_l2"""
        if not (np.isfinite(sigma_l2) and sigma_l2 > 0) or not ratio > 0:
            raise InvalidVariance(f"bus noise needs positive variance and ratio, got {sigma_l2}, {ratio}")
        variances = np.full(M, float(sigma_l2))
        for node in generator_nodes:
            if not 0 <= node < M:
                raise NodeIndexOutOfRange(f"generator bus {node + 1} outside 1..{M}")
            variances[node] = ratio * sigma_l2
        return variances

    # -------------------------------------------------------- Monte Carlo

    @staticmethod
    def _build_graph(cfg: ExperimentConfig, grid_index: int, M: Optional[int]) -> Graph:
        if not cfg.is_generated:
            return csv_io.load_graph_csv(cfg.resolve(cfg.graph_source))
        # one fixed graph unless the network size itself is swept
        key = (cfg.seed, grid_index) if cfg.sweep_var == 'm' else (cfg.seed,)
        seed = _seed_from(_rng(*key, spawn_key=(_GRAPH_STREAM,)))
        sampler = None
        if cfg.weight_low is not None:
            sampler = uniform_weights(cfg.weight_low, cfg.weight_high)
        if cfg.graph_source.lower() == 'watts-strogatz':
            return SimulationService.gen_watts_strogatz(M, cfg.graph_degree, cfg.graph_rewire, seed, sampler)
        return SimulationService.gen_erdos_renyi(M, cfg.graph_p, seed, sampler)

    @staticmethod
    def _noise_profile(cfg: ExperimentConfig, M: int, sigma2: float) -> np.ndarray:
        if cfg.noise_csv is not None:
            return sigma2 * csv_io.load_node_noise_csv(cfg.resolve(cfg.noise_csv), num_vertices=M)
        if cfg.generators:
            return SimulationService.bus_noise_variances(M, cfg.generators, sigma2)
        return np.full(M, sigma2)

    @staticmethod
    def _accumulate(spec: Spectrum, truth: np.ndarray, trial: Callable[[int], np.ndarray],
                    trials: int, threads: int):
        """Run trials (in parallel when threads > 1) and merge them in trial order"""
        accumulator = RiskAccumulator(spec)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for estimate in pool.map(trial, range(trials)):
                    accumulator.add(estimate, truth)
        else:
            for t in range(trials):
                accumulator.add(trial(t), truth)
        return accumulator.risk()

    @classmethod
    def _relative_point(cls, cfg: ExperimentConfig, grid_index: int, g: Graph, L: np.ndarray,
                        spec: Spectrum, sigma2: float, threads: int) -> List[MonteCarloRecord]:
        truth = _rng(cfg.seed, grid_index, spawn_key=(_TRUTH_STREAM,)).standard_normal(g.num_vertices)
        records = []
        for k, name in enumerate(cfg.policies):
            started = time.perf_counter()
            policy = parse_policy(name)
            seed = _seed_from(_rng(cfg.seed, grid_index, k, spawn_key=(_PLACEMENT_STREAM,)))
            placement = SamplingService.spanning_tree_policy(g, policy, seed=seed, sigma2=sigma2, spec=spec, L=L)
            tree = placement.tree

            def trial(t: int) -> np.ndarray:
                rng = _rng(cfg.seed, grid_index, t)
                obs = cls.sample_relative(tree, truth, sigma2, rng)
                return EstimatorService.relative_estimate(obs, anchor=None)

            risk = cls._accumulate(spec, truth, trial, cfg.trials, threads)
            records.append(MonteCarloRecord(
                0.0, name, risk.trace_mean, risk.trace_se, placement.crb_trace, risk.trials,
                time.perf_counter() - started, placement.seconds,
            ))
        return records

    @classmethod
    def _masked_point(cls, cfg: ExperimentConfig, grid_index: int, g: Graph, spec: Spectrum,
                      sigma2: float, D: int, threads: int) -> List[MonteCarloRecord]:
        M = g.num_vertices
        R = cfg.band_r
        if cfg.signal_csv is not None:
            truth = csv_io.load_signal_csv(cfg.resolve(cfg.signal_csv), num_vertices=M)
        else:
            coeffs = _rng(cfg.seed, grid_index, spawn_key=(_TRUTH_STREAM,)).standard_normal(R)
            truth = spec.low_band(R) @ coeffs
        variances = cls._noise_profile(cfg, M, sigma2)
        J = DiagonalNoise(variances)

        records = []
        for k, name in enumerate(cfg.policies):
            started = time.perf_counter()
            policy = parse_policy(name)
            seed = _seed_from(_rng(cfg.seed, grid_index, k, spawn_key=(_PLACEMENT_STREAM,)))
            placement = SamplingService.select_nodes(policy, spec, R, D, J, seed)
            subset = placement.subset

            def trial(t: int) -> np.ndarray:
                rng = _rng(cfg.seed, grid_index, t)
                obs = cls.sample_masked(truth, subset, variances, rng)
                estimate, _ = EstimatorService.cml_bandlimited(obs, spec, R)
                return estimate

            risk = cls._accumulate(spec, truth, trial, cfg.trials, threads)
            records.append(MonteCarloRecord(
                0.0, name, risk.trace_mean, risk.trace_se, placement.crb_trace, risk.trials,
                time.perf_counter() - started, placement.seconds,
            ))
        return records

    @classmethod
    def run_monte_carlo(cls, cfg: ExperimentConfig, threads: Optional[int] = None) -> MonteCarloResult:
        """
        Run every (sweep value, policy) pair of an experiment

        Trial t of grid point g draws from PCG64 seeded with
        SeedSequence([seed, g, t]); estimates are merged in trial order,
        so the result does not depend on the thread count.

        Raises:
            ExperimentError: a component failed; the message names the grid point
        """
        threads = max(1, int(threads or Config.threads()))
        records = []
        for grid_index, value in enumerate(cfg.grid):
            point = f"{cfg.sweep_var}={value:g}"
            try:
                M = int(value) if cfg.sweep_var == 'm' else cfg.graph_m
                g = cls._build_graph(cfg, grid_index, M)
                L = SpectralService.build_laplacian(g)
                spec = SpectralService.decompose(L)
                sigma2 = 1.0 / value if cfg.sweep_var == 'inv_sigma2' else cfg.sigma2
                if cfg.model == 'relative':
                    point_records = cls._relative_point(cfg, grid_index, g, L, spec, sigma2, threads)
                else:
                    D = int(value) if cfg.sweep_var == 'd' else cfg.budget_for(g.num_vertices)
                    point_records = cls._masked_point(cfg, grid_index, g, spec, sigma2, D, threads)
            except GraphCRBError as e:
                raise ExperimentError(f"grid point {grid_index + 1} ({point}): {e}", e) from e

            for record in point_records:
                record = replace(record, sweep_value=float(value))
                records.append(record)
                logger.info(
                    f"{point} {record.policy}: risk {record.empirical_wmse:.6g} "
                    f"(se {record.wmse_se:.3g}), bound {record.crb_trace:.6g}, "
                    f"placement {record.placement_seconds:.3f}s"
                )
        return MonteCarloResult(tuple(records), cfg.seed, Config.PRNG_NAME)
