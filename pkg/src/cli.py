"""
Command-line front end

Each subcommand loads its inputs, calls one service operation and
writes CSV to stdout or --out. Diagnostics go to stderr via logging.
Exit codes: 0 success, 1 usage, 2 bad data, 3 numerical failure.
"""
import argparse
import logging
import sys
from typing import List, Optional

import numpy as np

from . import __version__
from .config import Config
from .models.experiment import ExperimentConfig
from .models.fisher import DiagonalNoise
from .models.results import EdgePolicy, NodePolicy, parse_policy
from .services.bounds_service import BoundsService
from .services.sampling_service import SamplingService
from .services.simulation_service import SimulationService
from .services.spectral_service import SpectralService
from .utils import csv_io
from .utils.errors import GraphCRBError, UsageError

logger = logging.getLogger(__name__)

POLICY_NAMES = [p.value for p in EdgePolicy] + [p.value for p in NodePolicy]


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting"""

    def error(self, message):
        raise UsageError(message)


def _parse_subset(text: str) -> List[int]:
    """'1;3;5' or '1,3,5' (1-based) to sorted 0-based indices"""
    tokens = [t for t in text.replace(',', ';').split(';') if t.strip()]
    try:
        nodes = sorted({int(t) - 1 for t in tokens})
    except ValueError:
        raise UsageError(f"--subset expects 1-based node indices, got '{text}'")
    if not nodes:
        raise UsageError("--subset is empty")
    if nodes[0] < 0:
        raise UsageError("--subset indices are 1-based")
    return nodes


def _node_variances(args, M: int) -> np.ndarray:
    if args.sigma2 <= 0:
        raise UsageError("--sigma2 must be positive for node sampling")
    if args.noise_csv:
        return args.sigma2 * csv_io.load_node_noise_csv(args.noise_csv, num_vertices=M)
    return np.full(M, args.sigma2)


def _output(args):
    return args.out if args.out else sys.stdout


# --------------------------------------------------------------- commands

def cmd_spectrum(args) -> int:
    g = csv_io.load_graph_csv(args.graph)
    spec = SpectralService.spectrum_of(g)
    csv_io.write_spectrum_csv(spec, _output(args))
    if args.vectors:
        csv_io.write_eigenvectors_csv(spec, args.vectors)
    return 0


def cmd_crb(args) -> int:
    g = csv_io.load_graph_csv(args.graph)
    M = g.num_vertices
    L = SpectralService.build_laplacian(g)
    spec = SpectralService.decompose(L)

    if args.model == 'relative':
        if args.r is not None or args.subset is not None or args.noise_csv:
            raise UsageError("--r, --subset and --noise-csv apply to the bandlimited model only")
        meas = csv_io.load_graph_csv(args.meas_graph, num_vertices=M) if args.meas_graph else g
        bound = BoundsService.relative_crb(spec, L, meas, args.sigma2)
        record = {'model': 'relative', 'policy': '-', 'M': M, 'sigma2': args.sigma2, 'trace': bound.trace}
    else:
        if args.meas_graph:
            raise UsageError("--meas-graph applies to the relative model only")
        if args.r is None or args.subset is None:
            raise UsageError("the bandlimited model needs --r and --subset")
        nodes = _parse_subset(args.subset)
        if nodes[-1] >= M:
            raise UsageError(f"--subset node {nodes[-1] + 1} exceeds the {M} graph nodes")
        J_S = DiagonalNoise(_node_variances(args, M)).restrict(nodes)
        trace = BoundsService.bandlimited_crb_trace(spec, args.r, nodes, J_S)
        record = {'model': 'bandlimited', 'policy': '-', 'M': M, 'R': args.r, 'D': len(nodes),
                  'sigma2': args.sigma2, 'trace': trace}

    csv_io.write_bound_summary_csv([record], _output(args))
    return 0


def cmd_place(args) -> int:
    g = csv_io.load_graph_csv(args.graph)
    policy = parse_policy(args.policy)

    if isinstance(policy, EdgePolicy):
        if args.r is not None or args.d is not None:
            raise UsageError(f"--r and --d do not apply to {policy.value}")
        result = SamplingService.spanning_tree_policy(g, policy, seed=args.seed, sigma2=args.sigma2)
        param = args.seed if policy is EdgePolicy.RAND_ST else '-'
        row = {'policy': policy.value, 'param': param,
               'selection': result.selection_tokens(), 'objective': result.crb_trace}
    else:
        if args.r is None or args.d is None:
            raise UsageError(f"{policy.value} needs --r and --d")
        spec = SpectralService.spectrum_of(g)
        J = DiagonalNoise(_node_variances(args, g.num_vertices))
        result = SamplingService.select_nodes(policy, spec, args.r, args.d, J, seed=args.seed)
        row = {'policy': policy.value, 'param': args.d,
               'selection': result.selection_tokens(), 'objective': result.objective}

    csv_io.write_selection_csv([row], _output(args))
    return 0


def cmd_montecarlo(args) -> int:
    cfg = ExperimentConfig.from_toml(args.config)
    if args.threads is not None and args.threads < 1:
        raise UsageError("--threads must be at least 1")
    result = SimulationService.run_monte_carlo(cfg, threads=args.threads)
    csv_io.write_montecarlo_csv(result, _output(args), __version__)
    return 0


# ----------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='graph-crb', description=__doc__.strip().splitlines()[0])
    parser.add_argument('--version', action='version',
                        version=f"graph-crb {__version__} ({Config.PRNG_NAME})")
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help="log INFO (-v) or DEBUG (-vv) messages to stderr")
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)
    sub.required = True

    p = sub.add_parser('spectrum', help="Laplacian eigenvalues of a graph")
    p.add_argument('--graph', required=True)
    p.add_argument('--out')
    p.add_argument('--vectors', help="also write the eigenvector matrix to this file")
    p.set_defaults(handler=cmd_spectrum)

    p = sub.add_parser('crb', help="graph CRB trace for a measurement model")
    p.add_argument('--graph', required=True)
    p.add_argument('--model', required=True, choices=['relative', 'bandlimited'])
    p.add_argument('--sigma2', type=float, default=1.0)
    p.add_argument('--meas-graph')
    p.add_argument('--r', type=int)
    p.add_argument('--subset', help="1-based sample nodes, e.g. '1;4;7'")
    p.add_argument('--noise-csv', help="node,variance multipliers of sigma2")
    p.add_argument('--out')
    p.set_defaults(handler=cmd_crb)

    p = sub.add_parser('place', help="sensor placement by one policy")
    p.add_argument('--graph', required=True)
    p.add_argument('--policy', required=True, choices=POLICY_NAMES)
    p.add_argument('--r', type=int)
    p.add_argument('--d', type=int)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--sigma2', type=float, default=1.0)
    p.add_argument('--noise-csv')
    p.add_argument('--out')
    p.set_defaults(handler=cmd_place)

    p = sub.add_parser('montecarlo', help="run a Monte Carlo experiment file")
    p.add_argument('--config', required=True)
    p.add_argument('--threads', type=int)
    p.add_argument('--out')
    p.set_defaults(handler=cmd_montecarlo)
    return parser


def _configure_logging(verbosity: int):
    level = Config.LOG_LEVEL
    if verbosity == 1:
        level = 'INFO'
    elif verbosity >= 2:
        level = 'DEBUG'
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s', force=True)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        _configure_logging(0)
        logger.error(f"usage: {e}")
        return e.exit_code
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0)

    _configure_logging(args.verbose)
    try:
        return args.handler(args)
    except GraphCRBError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return 2


if __name__ == '__main__':
    sys.exit(main())
