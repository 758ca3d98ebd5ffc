"""保序的线程池映射"""

import concurrent.futures
import os
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
S = TypeVar("S")


def default_threads() -> int:
    return os.cpu_count() or 1


def parallel_map(fn: Callable[[T], S], items: Iterable[T], threads: int | None = None) -> List[S]:
    """并行求值，结果顺序与输入一致，与线程数无关

    threads 为 1 时在当前线程顺序执行。第一个异常会原样抛出。
    """
    items = list(items)
    threads = threads or default_threads()
    if threads < 1:
        raise ValueError(f"线程数必须 ≥ 1：{threads}")
    if threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))
