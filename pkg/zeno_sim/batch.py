"""Seeded, order-preserving batches of independent Monte Carlo runs."""

import logging
from multiprocessing import Pool
from typing import Any, Callable, List, Tuple

import numpy as np

logger = logging.getLogger(__name__)

Job = Tuple[Callable[..., Any], np.random.SeedSequence, dict]


def _call(job: Job) -> Any:
    func, seed_seq, kwargs = job
    return func(rng=np.random.default_rng(seed_seq), **kwargs)


def run_batch(
    func: Callable[..., Any], n_runs: int, seed: int, workers: int = 1, **kwargs
) -> List[Any]:
    """Call func(rng=..., **kwargs) n_runs times, one SeedSequence child per run.

    Results come back in run order whatever the worker count, so a batch
    is reproducible from (seed, n_runs) alone.
    """
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    children = np.random.SeedSequence(seed).spawn(n_runs)
    jobs = [(func, child, kwargs) for child in children]
    logger.info(f"Running {n_runs} {func.__name__} jobs on {workers} worker(s)")
    if workers == 1 or n_runs == 1:
        return [_call(job) for job in jobs]
    with Pool(processes=min(workers, n_runs)) as pool:
        return pool.map(_call, jobs)
