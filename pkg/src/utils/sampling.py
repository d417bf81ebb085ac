"""
Seeded sampling and batch execution helpers.

Every batch draws from its own ``random.Random`` seeded with
"<seed>:<label>:<batch index>", so a run's samples depend only on
(seed, label, budget) and never on the number of worker threads.
"""

import random
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

from tqdm import tqdm

from src.groups.base_model import GroupModel
from src.groups.elements import GroupElement

T = TypeVar("T")
R = TypeVar("R")

DEFAULT_BATCH_SIZE = 256


def batch_rng(seed: int, label: str, index: int) -> random.Random:
    """Deterministic generator for one batch of one suite."""
    return random.Random(f"{seed}:{label}:{index}")


def partition(budget: int, batch_size: int = DEFAULT_BATCH_SIZE) -> List[int]:
    """Split a sample budget into batch sizes (last batch may be short)."""
    sizes = [batch_size] * (budget // batch_size)
    if budget % batch_size:
        sizes.append(budget % batch_size)
    return sizes


def random_element(model: GroupModel, rng: random.Random, length: int) -> GroupElement:
    """
    Element of the given word length, reached by random length-increasing steps.

    Returns the identity for length 0. Stops early only if no neighbor is
    farther from the identity (a table-model boundary).
    """
    g = model.identity
    for n in range(length):
        steps = [h for h in model.neighbors(g) if model.length(h) == n + 1]
        if not steps:
            break
        g = rng.choice(steps)
    return g


def random_in_ball(model: GroupModel, rng: random.Random, radius: int) -> GroupElement:
    """Element of B(1, radius) with a uniformly drawn target length."""
    return random_element(model, rng, rng.randint(0, radius))


def run_batches(
    fn: Callable[[T], R],
    batches: Sequence[T],
    workers: int = 1,
    show_progress: bool = False,
    desc: Optional[str] = None,
) -> List[R]:
    """
    Apply fn to every batch, preserving order.

    Args:
        fn: Batch worker (must be thread-safe)
        batches: Batch descriptors
        workers: Thread count; 1 runs inline
        show_progress: Wrap the results in a tqdm bar
        desc: Progress bar label

    Returns:
        Results in batch order
    """
    if workers <= 1 or len(batches) <= 1:
        iterator: Iterable[R] = map(fn, batches)
        if show_progress:
            iterator = tqdm(iterator, total=len(batches), desc=desc)
        return list(iterator)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        iterator = pool.map(fn, batches)
        if show_progress:
            iterator = tqdm(iterator, total=len(batches), desc=desc)
        return list(iterator)
