"""Seeded random streams and ordered parallel mapping.

All randomness in the package flows from one master seed. Independent
sub-streams are derived by position (scenario, sigma index, replicate index,
block index, ...) with ``SeedSequence`` spawn keys, so a task's stream never
depends on which worker runs it or in what order tasks finish.
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Sequence, TypeVar, Union

import numpy as np
from loguru import logger

T = TypeVar("T")
R = TypeVar("R")

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


def as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    """Normalize a seed, seed sequence or generator to a SeedSequence.

    A generator is consumed once to draw the entropy of the new sequence.
    """
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(0, 2**63)))
    return np.random.SeedSequence(seed)


def derive(seed: SeedLike, *key: int) -> np.random.SeedSequence:
    """Derive the sub-sequence addressed by ``key`` below ``seed``."""
    root = as_seed_sequence(seed)
    return np.random.SeedSequence(
        entropy=root.entropy,
        spawn_key=tuple(root.spawn_key) + tuple(int(k) for k in key),
        pool_size=root.pool_size,
    )


def derive_rng(seed: SeedLike, *key: int) -> np.random.Generator:
    """Return a generator on the sub-stream addressed by ``key``."""
    return np.random.default_rng(derive(seed, *key))


def as_generator(rng: SeedLike) -> np.random.Generator:
    """Accept a generator or anything seed-like and return a generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(as_seed_sequence(rng))


def ordered_map(
    func: Callable[[T], R], tasks: Iterable[T], workers: int = 1
) -> List[R]:
    """Map ``func`` over ``tasks`` and return results in task order.

    With ``workers > 1`` tasks run in a process pool; ``func`` and the tasks
    must then be picklable.
    """
    task_list: Sequence[T] = list(tasks)
    if workers <= 1 or len(task_list) <= 1:
        return [func(task) for task in task_list]

    chunksize = max(1, len(task_list) // (workers * 4))
    logger.debug(
        f"Dispatching {len(task_list)} tasks to {workers} workers "
        f"(chunksize={chunksize})"
    )
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, task_list, chunksize=chunksize))
