from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class SolverOptions(BaseSettings):
    """
    Solver configuration. Every field can be set through the environment (or a .env file loaded
    by the CLI) with the QUIVER_CAPACITY_ prefix, e.g. QUIVER_CAPACITY_TOL=1e-10.

    Attributes:
        tol (float): Stationarity residual at which the fixed-point iteration stops.
        max_iter (int): Iteration cap.
        cap_floor (float): Capacity values below this are reported as numerically infeasible.
        damping (float): Log-space damping of every fixed-point step, in [0, 1).
        seed (int): Seed for randomized searches and restarts.
        rank_tol (float): Relative tolerance for numerical rank.
        violator_budget (int): Number of subspace tuples find_violator may evaluate.
        restarts (int): Number of random restarts in the uniqueness probe.
        threads (int): Concurrent restart solves in the CLI (1 = sequential).
    """

    model_config = SettingsConfigDict(env_prefix="QUIVER_CAPACITY_", extra="ignore")

    tol: float = Field(default=1e-8, gt=0)
    max_iter: int = Field(default=10000, ge=0)
    cap_floor: float = Field(default=1e-12, gt=0)
    damping: float = Field(default=0.0, ge=0, lt=1)
    seed: int = 0
    rank_tol: float = Field(default=1e-10, gt=0)
    violator_budget: int = Field(default=10000, ge=0)
    restarts: int = Field(default=20, ge=1)
    threads: int = Field(default=1, ge=1)
