from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

from .settings import get_settings

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(func: Callable[[T], R], items: Iterable[T], workers=None) -> list[R]:
    """
    Apply func to every item in a thread pool, results in input order.
    numpy releases the GIL in the heavy kernels, so threads are enough.
    :param func: pure function of one item
    :param items: inputs
    :param workers: pool size, ISOBEM_WORKERS by default
    :return: list of results, same order as items
    """
    items = list(items)
    workers = workers or get_settings().workers
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def chunked(n: int, size: int):
    """Yield slices covering range(n) in blocks of `size`"""
    for start in range(0, n, size):
        yield slice(start, min(start + size, n))
