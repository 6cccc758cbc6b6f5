#! /usr/bin/env python3
"""
This module defines the grouping schemes behind the generalized Euclidean
distance and computes the pairwise distance matrix every statistic reads from.

"""
import enum
import graphlib
import logging
import math
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import pdist, squareform


LOGGER = logging.getLogger(__name__)

# Dimension from which per-group contributions are accumulated with
# compensated summation
COMPENSATED_SUM_MIN_DIM = 10_000

ABSOLUTE = "absolute"
EUCLIDEAN = "euclidean"


class DataError(Exception):
    """
    Exception indicating malformed input data or structure files.

    """
    pass


class SchemeMode(enum.Enum):
    L1_SQRT = "l1_sqrt"
    GROUPED_SQRT = "grouped_sqrt"
    EUCLIDEAN_BASELINE = "euclidean_baseline"
    GRAPH_CLIQUES = "graph_cliques"
    DAG_PARENTS = "dag_parents"


# Command line prefixes for each mode
SCHEME_PREFIXES: Dict[str, SchemeMode] = {
    "l1sqrt": SchemeMode.L1_SQRT,
    "euclid": SchemeMode.EUCLIDEAN_BASELINE,
    "groups": SchemeMode.GROUPED_SQRT,
    "graph": SchemeMode.GRAPH_CLIQUES,
    "dag": SchemeMode.DAG_PARENTS,
}

STRUCTURED_MODES = {SchemeMode.GROUPED_SQRT, SchemeMode.GRAPH_CLIQUES,
                    SchemeMode.DAG_PARENTS}


class SchemeSpec(NamedTuple):
    """
    A scheme description: the mode plus, for the structured modes, the text
    of the grouping/graph/DAG file.

    """
    mode: SchemeMode
    payload: Optional[str] = None
    label: str = ""


class GroupingScheme(NamedTuple):
    """
    Coordinate groups S_1, ..., S_g (0-based, in group order) together with
    the base distance applied to each group.

    """
    mode: SchemeMode
    groups: Tuple[Tuple[int, ...], ...]
    base_metric: Tuple[str, ...]
    p: int

    @property
    def one_based_groups(self) -> List[List[int]]:
        return [[i + 1 for i in group] for group in self.groups]


class DataMatrix:
    """
    A time-ordered n x p matrix of observations; row t is X_t.

    """
    def __init__(self, values: np.ndarray):
        """
        Args:
            values (np.ndarray): A 2-dimensional array of finite values.

        Raises:
            DataError

        """
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise DataError(f"Expected a 2-dimensional array, got "
                            f"{values.ndim} dimensions")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise DataError(f"Data matrix is empty (shape {values.shape})")
        if not np.all(np.isfinite(values)):
            row, col = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"Non-finite value at row {row + 1}, "
                            f"column {col + 1}")
        self.values = values

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


class DistanceMatrix:
    """
    The n x n matrix of gamma(X_i, X_j), computed once per analysis.

    """
    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"Distance matrix must be square, got shape "
                             f"{values.shape}")
        self.values = values

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def block(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        """
        Extracts the sub-matrix of the given 0-based row and column indices.

        """
        return self.values[np.ix_(np.asarray(rows), np.asarray(cols))]


def parse_scheme_spec(spec: str) -> SchemeSpec:
    """
    Parses a command line scheme description, reading the structure file of
    the structured modes.

    Args:
        spec (str): One of l1sqrt, euclid, groups:FILE, graph:FILE, dag:FILE.

    Returns:
        SchemeSpec

    Raises:
        DataError

    """
    prefix, _, path = spec.partition(":")
    if prefix not in SCHEME_PREFIXES:
        raise DataError(f"Unknown scheme: {spec}")
    mode = SCHEME_PREFIXES[prefix]
    if mode not in STRUCTURED_MODES:
        return SchemeSpec(mode, label=spec)
    if not path:
        raise DataError(f"Scheme {prefix} requires a structure file")
    try:
        with open(path, encoding="utf-8") as fh:
            payload = fh.read()
    except OSError as e:
        raise DataError(f"Cannot read structure file {path}: {e}")
    return SchemeSpec(mode, payload, label=spec)


def _parse_index(token: str, p: int, line_no: int) -> int:
    """
    Converts a 1-based index token to a 0-based index, checking its range.

    """
    try:
        index = int(token.strip())
    except ValueError:
        raise DataError(f"Line {line_no}: '{token.strip()}' is not an "
                        f"integer index")
    if not 1 <= index <= p:
        raise DataError(f"Line {line_no}: index {index} out of range "
                        f"[1, {p}]")
    return index - 1


def _content_lines(payload: str):
    """
    Yields (line number, stripped line) for non-blank, non-comment lines.

    """
    for line_no, line in enumerate(payload.splitlines(), start=1):
        line = line.strip()
        if line and not line.startswith("#"):
            yield line_no, line


def _parse_groups(payload: str, p: int) -> List[Tuple[int, ...]]:
    groups = []
    for line_no, line in _content_lines(payload):
        tokens = [t for t in line.split(",") if t.strip()]
        if not tokens:
            raise DataError(f"Line {line_no}: empty group")
        groups.append(tuple(_parse_index(t, p, line_no) for t in tokens))
    return groups


def _parse_edges(payload: str, p: int) -> List[Tuple[int, ...]]:
    groups = []
    for line_no, line in _content_lines(payload):
        tokens = line.split(",")
        if len(tokens) != 2:
            raise DataError(f"Line {line_no}: expected an edge 'i,j', got "
                            f"'{line}'")
        i, j = (_parse_index(t, p, line_no) for t in tokens)
        if i == j:
            raise DataError(f"Line {line_no}: self-loop on node {i + 1}")
        groups.append((i, j))
    return groups


def _parse_dag(payload: str, p: int) -> List[Tuple[int, ...]]:
    """
    Reads "i: p1,p2,..." lines and returns the groups {i} U parents(i) for
    i = 1, ..., p. Nodes without a line have no parents.

    """
    parents: Dict[int, Tuple[int, ...]] = {}
    for line_no, line in _content_lines(payload):
        node_token, sep, parent_tokens = line.partition(":")
        if not sep:
            raise DataError(f"Line {line_no}: expected 'i: parents', got "
                            f"'{line}'")
        node = _parse_index(node_token, p, line_no)
        if node in parents:
            raise DataError(f"Line {line_no}: node {node + 1} listed twice")
        parents[node] = tuple(_parse_index(t, p, line_no)
                              for t in parent_tokens.split(",") if t.strip())
        if node in parents[node]:
            raise DataError(f"Line {line_no}: node {node + 1} is its own "
                            f"parent")

    sorter = graphlib.TopologicalSorter(
        {node: set(pa) for node, pa in parents.items()})
    try:
        sorter.prepare()
    except graphlib.CycleError as e:
        cycle = " -> ".join(str(i + 1) for i in e.args[1])
        raise DataError(f"DAG structure contains a cycle: {cycle}")

    return [tuple(sorted({i, *parents.get(i, ())})) for i in range(p)]


def build_scheme(spec: SchemeSpec, p: int) -> GroupingScheme:
    """
    Builds and validates the grouping scheme for data of dimension p.

    Args:
        spec (SchemeSpec): The scheme description.
        p (int): The number of coordinates.

    Returns:
        GroupingScheme

    Raises:
        DataError

    """
    if p < 1:
        raise DataError(f"Dimension must be positive, got {p}")

    mode = spec.mode
    if mode in (SchemeMode.L1_SQRT, SchemeMode.EUCLIDEAN_BASELINE):
        groups = [(i,) for i in range(p)] if mode is SchemeMode.L1_SQRT \
            else [tuple(range(p))]
    else:
        if spec.payload is None:
            raise DataError(f"Scheme {mode.value} requires a structure "
                            f"payload")
        parser = {SchemeMode.GROUPED_SQRT: _parse_groups,
                  SchemeMode.GRAPH_CLIQUES: _parse_edges,
                  SchemeMode.DAG_PARENTS: _parse_dag}[mode]
        groups = parser(spec.payload, p)

    if not groups:
        raise DataError("Structure payload defines no groups")

    covered = set().union(*groups)
    missing = sorted(set(range(p)) - covered)
    if missing:
        raise DataError(
            f"Coordinates not covered by any group: "
            f"{', '.join(str(i + 1) for i in missing[:10])}"
            f"{' ...' if len(missing) > 10 else ''}")

    if mode is SchemeMode.L1_SQRT:
        base = (ABSOLUTE,) * p
    else:
        base = tuple(ABSOLUTE if len(g) == 1 else EUCLIDEAN for g in groups)

    return GroupingScheme(mode, tuple(groups), base, p)


def _group_distance(diff: np.ndarray, metric: str) -> np.ndarray:
    if metric == ABSOLUTE:
        return np.abs(diff[..., 0])
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _compensated_sum(terms) -> np.ndarray:
    """
    Neumaier summation of a sequence of equally shaped arrays, in order.

    """
    total = None
    compensation = None
    for term in terms:
        if total is None:
            total = np.array(term, dtype=float)
            compensation = np.zeros_like(total)
            continue
        t = total + term
        big = np.abs(total) >= np.abs(term)
        compensation += np.where(big, (total - t) + term,
                                 (term - t) + total)
        total = t
    return total + compensation


def _check_vector(z: np.ndarray, p: int, name: str) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (p,):
        raise ValueError(f"{name} has shape {z.shape}, expected ({p},)")
    if not np.all(np.isfinite(z)):
        raise ValueError(f"{name} contains non-finite values")
    return z


def gamma(z: np.ndarray, z_prime: np.ndarray,
          scheme: GroupingScheme) -> float:
    """
    Computes the generalized Euclidean distance between two p-vectors.

    Args:
        z (np.ndarray): The first vector.
        z_prime (np.ndarray): The second vector.
        scheme (GroupingScheme): The grouping scheme.

    Returns:
        float

    """
    z = _check_vector(z, scheme.p, "z")
    z_prime = _check_vector(z_prime, scheme.p, "z'")
    diff = z - z_prime

    if scheme.mode is SchemeMode.EUCLIDEAN_BASELINE:
        return float(np.sqrt(np.sum(diff * diff)))

    contributions = [_group_distance(diff[list(group)], metric)
                     for group, metric in zip(scheme.groups,
                                              scheme.base_metric)]
    if scheme.p >= COMPENSATED_SUM_MIN_DIM:
        return float(np.sqrt(math.fsum(contributions)))
    total = 0.
    for c in contributions:
        total += c
    return float(np.sqrt(total))


def _condensed_group_distances(values: np.ndarray, scheme: GroupingScheme):
    """
    Yields the condensed pairwise base distances of each group, in group
    order.

    """
    for group, metric in zip(scheme.groups, scheme.base_metric):
        sub = values[:, list(group)]
        yield pdist(sub, "cityblock" if metric == ABSOLUTE else "euclidean")


def pairwise_matrix(data: DataMatrix,
                    scheme: GroupingScheme) -> DistanceMatrix:
    """
    Computes the full n x n matrix of gamma(X_i, X_j).

    Args:
        data (DataMatrix): The observations.
        scheme (GroupingScheme): The grouping scheme, with scheme.p == data.p.

    Returns:
        DistanceMatrix

    """
    if scheme.p != data.p:
        raise ValueError(f"Scheme dimension {scheme.p} does not match data "
                         f"dimension {data.p}")
    if data.n == 1:
        return DistanceMatrix(np.zeros((1, 1)))

    LOGGER.debug(f"Computing {data.n}x{data.n} distance matrix "
                 f"({scheme.mode.value}, {len(scheme.groups)} groups)")

    values = data.values
    if scheme.mode is SchemeMode.EUCLIDEAN_BASELINE:
        condensed = pdist(values, "euclidean")
    elif scheme.p >= COMPENSATED_SUM_MIN_DIM:
        condensed = np.sqrt(_compensated_sum(
            _condensed_group_distances(values, scheme)))
    elif scheme.mode is SchemeMode.L1_SQRT:
        condensed = np.sqrt(pdist(values, "cityblock"))
    else:
        total = np.zeros(data.n * (data.n - 1) // 2)
        for part in _condensed_group_distances(values, scheme):
            total += part
        condensed = np.sqrt(total)

    return DistanceMatrix(squareform(condensed))


def chain_graph_payload(p: int) -> str:
    """
    The graph file text for the chain 1 - 2 - ... - p.

    """
    return "".join(f"{i},{i + 1}\n" for i in range(1, p))


def chain_dag_payload(p: int) -> str:
    """
    The DAG file text for the directed chain 1 -> 2 -> ... -> p.

    """
    lines = ["1:\n"] + [f"{i}: {i - 1}\n" for i in range(2, p + 1)]
    return "".join(lines)
