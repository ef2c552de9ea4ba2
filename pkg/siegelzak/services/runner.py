import asyncio
import logging
from typing import Any, Callable, List, Optional

from siegelzak.config import settings
from siegelzak.services.numerics import RngStream

logger = logging.getLogger("runner")

SampleFn = Callable[[int, RngStream], Any]


def _run_chunk(fn: SampleFn, stream: RngStream, start: int, stop: int) -> List[Any]:
    return [fn(index, stream.spawn(index)) for index in range(start, stop)]


async def gather_samples(
    fn: SampleFn,
    n_samples: int,
    stream: RngStream,
    workers: Optional[int] = None,
    chunk_size: Optional[int] = None,
) -> List[Any]:
    """
    Evaluate fn(i, stream.spawn(i)) for i < n_samples on a bounded pool of
    worker threads. Results come back in index order.
    """
    workers = max(1, workers or settings.MAX_WORKERS)
    chunk_size = max(1, chunk_size or settings.CHUNK_SIZE)
    semaphore = asyncio.Semaphore(workers)

    async def worker(start: int, stop: int) -> List[Any]:
        async with semaphore:
            return await asyncio.to_thread(_run_chunk, fn, stream, start, stop)

    bounds = [(lo, min(lo + chunk_size, n_samples)) for lo in range(0, n_samples, chunk_size)]
    logger.info(f"Dispatching {n_samples} samples in {len(bounds)} chunks to {workers} workers")
    chunks = await asyncio.gather(*(worker(lo, hi) for lo, hi in bounds))
    return [value for chunk in chunks for value in chunk]


def map_samples(
    fn: SampleFn,
    n_samples: int,
    stream: RngStream,
    workers: Optional[int] = None,
    chunk_size: Optional[int] = None,
) -> List[Any]:
    if n_samples <= 0:
        return []
    return asyncio.run(gather_samples(fn, n_samples, stream, workers, chunk_size))
