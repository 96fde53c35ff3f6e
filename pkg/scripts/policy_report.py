#!/usr/bin/env python3
"""
Win counts of the placement policies over seeded random instances

Spanning trees: MaxST against MinST and against the RandST median on
Watts-Strogatz graphs. Node subsets: Greedy against the Random median
and against A-design / E-design on Erdos-Renyi graphs.
"""

import argparse
import os
import sys

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np

from src.models.fisher import DiagonalNoise
from src.models.results import EdgePolicy, NodePolicy
from src.services.sampling_service import SamplingService
from src.services.simulation_service import SimulationService, uniform_weights
from src.services.spectral_service import SpectralService
from src.utils.errors import GraphCRBError


def tree_report(instances: int, random_trees: int):
    """MaxST vs MinST / RandST on M=50, degree 4, uniform(0.5, 1.5) weights"""
    wins_min = wins_rand = 0
    for seed in range(instances):
        g = SimulationService.gen_watts_strogatz(50, 4, seed=seed, weight_sampler=uniform_weights(0.5, 1.5))
        L = SpectralService.build_laplacian(g)
        spec = SpectralService.decompose(L)
        best = SamplingService.spanning_tree_policy(g, EdgePolicy.MAX_ST, spec=spec, L=L).crb_trace
        worst = SamplingService.spanning_tree_policy(g, EdgePolicy.MIN_ST, spec=spec, L=L).crb_trace
        rand = np.median([
            SamplingService.spanning_tree_policy(g, EdgePolicy.RAND_ST, seed=s, spec=spec, L=L).crb_trace
            for s in range(random_trees)
        ])
        wins_min += best <= worst
        wins_rand += best <= rand
    print(f"max-st <= min-st:         {wins_min}/{instances}")
    print(f"max-st <= rand-st median: {wins_rand}/{instances}")


def node_report(instances: int, random_subsets: int):
    """Greedy vs Random / A-design / E-design on M=60, p=0.1, R=10, D=15"""
    M, R, D = 60, 10, 15
    wins = {'random': 0, 'a-design': 0, 'e-design': 0}
    for seed in range(instances):
        g = SimulationService.gen_erdos_renyi(M, 0.1, seed=seed)
        spec = SpectralService.spectrum_of(g)
        J = DiagonalNoise.iid(M, 1.0)
        greedy = SamplingService.greedy_node_selection(spec, R, D, J).crb_trace
        try:
            rand = np.median([
                SamplingService.random_selection(spec, R, D, J, seed=s).crb_trace
                for s in range(random_subsets)
            ])
        except GraphCRBError as e:
            print(f"instance {seed}: random policy failed ({e})")
            rand = np.inf
        a_design = SamplingService.adesign_selection(spec, R, D, J).crb_trace
        e_design = SamplingService.edesign_selection(spec, R, D, J).crb_trace
        wins['random'] += greedy <= rand
        wins['a-design'] += greedy <= a_design
        wins['e-design'] += greedy <= e_design
    for name, count in wins.items():
        print(f"greedy <= {name}: {count}/{instances}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    parser.add_argument('--instances', type=int, default=100)
    parser.add_argument('--draws', type=int, default=21, help="random trees / subsets per instance")
    args = parser.parse_args()

    print("Spanning-tree policies")
    tree_report(args.instances, args.draws)
    print()
    print("Node-sampling policies")
    node_report(args.instances, args.draws)


if __name__ == '__main__':
    main()
