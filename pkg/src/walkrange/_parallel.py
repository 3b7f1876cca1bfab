from concurrent.futures import ProcessPoolExecutor
from functools import partial


def map_replicas(func, reps, n_jobs=1, **kwargs):
    """Evaluate ``func(i, **kwargs)`` for replica ids ``0..reps-1``.

    Results come back in replica order whatever ``n_jobs`` is, so any reduction
    over them is bit-identical between serial and parallel runs.
    """
    task = partial(func, **kwargs)
    if n_jobs is None or n_jobs <= 1 or reps < 2:
        return [task(i) for i in range(reps)]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(task, range(reps), chunksize=max(1, reps // (4 * n_jobs))))
