"""Simulation model, population oracles, Monte Carlo harness and diagnostic demos."""
from .dgp import DGPConfig, SimDraws, simulate_dataset, simulate_draws
from .fstat import first_stage_fstat_demo
from .margin import MarginFit, margin_curve
from .montecarlo import MonteCarloResult, run_monte_carlo
from .oracle import OracleMoments, oracle_moments, psi_from_strength, solve_dgp_params
