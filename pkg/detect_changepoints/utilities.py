#! /usr/bin/env python3

import contextlib
import math
import multiprocessing as mp
import multiprocessing.pool
import os
from typing import Callable, Iterable, Iterator, List, Optional

import numpy as np
import pandas as pd

from .metric import DataError, DataMatrix


# Full precision decimal representation for CSV outputs
CSV_FLOAT_FORMAT = "%.17g"


def _parse_cell(cell: str) -> float:
    """
    Parses one cell, mapping non-numeric text to NaN.

    """
    try:
        return float(cell)
    except ValueError:
        return math.nan


#
# Pandas functions
#
def ingest_csv(file_path: str, has_header: bool = False) -> DataMatrix:
    """
    Reads a comma-separated file of observations, one row per time point and
    one column per coordinate.

    Args:
        file_path (str): The path to the CSV file.
        has_header (bool): Whether the first row is a header row.

    Returns:
        DataMatrix

    Raises:
        DataError

    """
    try:
        df = pd.read_csv(file_path, header=0 if has_header else None,
                         dtype=str, na_filter=False, skip_blank_lines=True,
                         encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"{file_path} NOT found")
    except pd.errors.EmptyDataError:
        raise DataError(f"{file_path} is empty")
    except pd.errors.ParserError as e:
        raise DataError(f"{file_path} has ragged rows: {e}")
    except (OSError, UnicodeDecodeError) as e:
        raise DataError(f"Cannot read {file_path}: {e}")

    if df.empty:
        raise DataError(f"{file_path} contains no observations")

    # The line number of the first data row in the file
    first_line = 2 if has_header else 1

    values = np.empty(df.shape, dtype=float)
    for col_idx, column in enumerate(df.columns):
        cells = df[column]
        # Short rows are padded with NaN, empty fields read as ""
        missing = (cells.isna() | (cells.fillna("").str.strip() == ""))\
            .to_numpy()
        if missing.any():
            row = int(np.flatnonzero(missing)[0])
            raise DataError(f"{file_path}: missing value at line "
                            f"{row + first_line}, column {col_idx + 1}")
        stripped = cells.str.strip()
        try:
            # Correctly rounded parsing, so %.17g values round trip exactly
            column_values = stripped.astype(float).to_numpy()
        except ValueError:
            column_values = np.array([_parse_cell(c) for c in stripped])
        bad = ~np.isfinite(column_values)
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise DataError(f"{file_path}: invalid cell '{cells.iloc[row]}' "
                            f"at line {row + first_line}, column "
                            f"{col_idx + 1}")
        values[:, col_idx] = column_values

    return DataMatrix(values)


def write_matrix_csv(data: DataMatrix, file_path: str):
    """
    Writes the observations to a header-less CSV at full precision.

    """
    ensure_parent_dir(file_path)
    pd.DataFrame(data.values).to_csv(file_path, header=False, index=False,
                                     float_format=CSV_FLOAT_FORMAT)


#
# Other functions
#
def log_returns(prices: DataMatrix) -> DataMatrix:
    """
    Converts a price series to log returns, log(X_{t+1,i} / X_{t,i}).

    Args:
        prices (DataMatrix): Strictly positive prices, n >= 2.

    Returns:
        DataMatrix: The (n - 1) x p matrix of log returns.

    Raises:
        DataError

    """
    values = prices.values
    if prices.n < 2:
        raise DataError("At least two time points are needed for returns")
    if np.any(values <= 0):
        row, col = np.argwhere(values <= 0)[0]
        raise DataError(f"Non-positive price {values[row, col]} at row "
                        f"{row + 1}, column {col + 1}")
    return DataMatrix(np.log(values[1:] / values[:-1]))


def dir_exists(dir_path: str) -> bool:
    """
    Tests whether the path provided corresponds to an existing directory.

    """
    return os.path.exists(dir_path) and os.path.isdir(dir_path)


def ensure_parent_dir(file_path: str):
    """
    Creates the directory that will hold file_path, if needed.

    """
    parent = os.path.dirname(os.path.abspath(file_path))
    if not dir_exists(parent):
        os.makedirs(parent)


def sidecar_path(file_path: str, extension: str = ".json") -> str:
    """
    Derives the path of a sidecar file, e.g. data.csv -> data.json.

    """
    return os.path.splitext(file_path)[0] + extension


def order_statistic_rank(q: float, count: int) -> int:
    """
    The 1-based rank k = ceil(q * count) of the order statistic used as the
    q-quantile of count values, clamped to [1, count].

    """
    # Guard against products such as 0.95 * 100 = 95.00000000000001
    k = math.ceil(round(q * count, 9))
    return min(max(k, 1), count)


def order_statistic(values: np.ndarray, q: float,
                    rank: Optional[int] = None) -> float:
    """
    Returns the ceil(q * len(values))-th smallest value.

    """
    values = np.sort(np.asarray(values, dtype=float))
    k = rank if rank is not None else order_statistic_rank(q, len(values))
    return float(values[k - 1])


@contextlib.contextmanager
def worker_pool(threads: int) -> Iterator[Optional[mp.pool.Pool]]:
    """
    Opens a pool of worker processes that several parallel_map calls can
    share. Yields None when a single worker is requested.

    """
    if threads <= 1:
        yield None
        return
    with mp.Pool(processes=threads) as pool:
        yield pool
        pool.close()
        pool.join()


def parallel_map(func: Callable, items: Iterable, threads: int = 1,
                 pool: Optional[mp.pool.Pool] = None) -> List:
    """
    Applies func to every item, in a multiprocessing pool when more than one
    worker is requested. Results are returned in item order.

    Args:
        func (callable): A picklable callable, e.g. a functools.partial of a
                         module-level function.
        items (iterable): The work items.
        threads (int): The maximum number of worker processes.
        pool (multiprocessing.pool.Pool, optional): An open pool from
            worker_pool; a temporary pool is created otherwise.

    Returns:
        list

    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    processes = min(threads, len(items))
    chunksize = max(1, len(items) // (4 * processes))
    if pool is not None:
        return pool.map(func, items, chunksize=chunksize)
    with mp.Pool(processes=processes) as temporary:
        results = temporary.map(func, items, chunksize=chunksize)
        temporary.close()
        temporary.join()
    return results


def stream_generator(seed: int, *key: int) -> np.random.Generator:
    """
    A generator for the random stream identified by key under the given
    seed. Distinct keys give independent streams.

    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))
