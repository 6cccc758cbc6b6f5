#! /usr/bin/env python3
"""
This module generates the seeded simulation scenarios, each returned with its
true change-points. A change-point tau is the last index of the regime
preceding the change.

"""
# This enables delayed evaluation of type hints, which is necessary for the
# classmethods defined below
from __future__ import annotations
import dataclasses
import json
import logging
from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy import linalg, signal, special

from .metric import (DataError, DataMatrix, SchemeMode, SchemeSpec,
                     chain_dag_payload, chain_graph_payload)
from .utilities import (ensure_parent_dir, ingest_csv, sidecar_path,
                        stream_generator, write_matrix_csv)


LOGGER = logging.getLogger(__name__)

SIMULATION_STREAM = 5
GIBBS_STREAM = 6

AR_COEFFICIENT = 0.7
MEAN_SHIFT = 0.6
BANDED_CORRELATION = 0.25
BANDED_WIDTH = 2

ARCH2_PARAMS = (1e-6, 0.008, 0.001)
GARCH11_PARAMS = (1e-6, 0.001, 0.001)
WARM_UP = 50

DEFAULT_BETA = 0.5
DEFAULT_PHI = 0.5

GIBBS_BURNIN = 1000
GIBBS_THIN = 10

# (b, band coupling) of the two FVBM regimes
FVBM_REGIMES = ((0.1, 0.1), (0.5, 0.3))


@dataclasses.dataclass
class LabeledDataset:
    data: DataMatrix
    true_cps: List[int]
    scenario: str
    params: Dict

    def save(self, file_path: str):
        """
        Writes the data as a header-less CSV and a JSON sidecar holding the
        true change-points, scenario and parameters.

        """
        write_matrix_csv(self.data, file_path)
        meta_file = sidecar_path(file_path)
        ensure_parent_dir(meta_file)
        with open(meta_file, "w") as fh:
            json.dump({"scenario": self.scenario, "true_cps": self.true_cps,
                       "params": self.params,
                       "seed": self.params.get("seed")}, fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, file_path: str) -> LabeledDataset:
        """
        Reads a dataset written by save.

        Raises:
            DataError

        """
        data = ingest_csv(file_path)
        meta_file = sidecar_path(file_path)
        try:
            with open(meta_file) as fh:
                meta = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise DataError(f"Cannot read {meta_file}: {e}")
        return cls(data, list(meta["true_cps"]), meta["scenario"],
                   meta["params"])


#
# Building blocks
#
def ar_rows(rng: np.random.Generator, rows: int, p: int,
            rho: float = AR_COEFFICIENT) -> np.ndarray:
    """
    Rows with covariance rho^|i - j|, by the recursion across coordinates
    x_1 = e_1, x_j = rho x_{j-1} + sqrt(1 - rho^2) e_j.

    """
    noise = rng.standard_normal((rows, p))
    noise[:, 1:] *= np.sqrt(1. - rho * rho)
    return signal.lfilter([1.], [1., -rho], noise, axis=1)


def _arch_columns(rng: np.random.Generator, n: int, p: int,
                  garch: bool) -> np.ndarray:
    """
    Independent ARCH(2) or GARCH(1,1) series, one per coordinate. The
    recursion starts at the unconditional variance and the first WARM_UP
    steps are discarded.

    """
    if garch:
        alpha0, alpha1, beta1 = GARCH11_PARAMS
        unconditional = alpha0 / (1. - alpha1 - beta1)
    else:
        alpha0, alpha1, alpha2 = ARCH2_PARAMS
        unconditional = alpha0 / (1. - alpha1 - alpha2)

    total = n + WARM_UP
    noise = rng.standard_normal((total, p))
    values = np.empty((total, p))
    sigma2 = np.full(p, unconditional)
    # Squared observations before the start are set to their expectation
    prev1 = np.full(p, unconditional)
    prev2 = np.full(p, unconditional)
    for t in range(total):
        if t > 0:
            if garch:
                sigma2 = alpha0 + alpha1 * prev1 + beta1 * sigma2
            else:
                sigma2 = alpha0 + alpha1 * prev1 + alpha2 * prev2
        values[t] = np.sqrt(sigma2) * noise[t]
        prev2 = prev1
        prev1 = values[t] ** 2
    return values[WARM_UP:]


def _poisson_centered(rng: np.random.Generator, rows: int,
                      p: int) -> np.ndarray:
    return rng.poisson(1., size=(rows, p)) - 1.


def _poisson_rademacher(rng: np.random.Generator, rows: int, p: int,
                        beta: float) -> np.ndarray:
    """
    The first floor(beta p) coordinates centered Poisson(1), the rest
    Rademacher.

    """
    keep = int(np.floor(beta * p))
    values = np.empty((rows, p))
    values[:, :keep] = _poisson_centered(rng, rows, keep)
    values[:, keep:] = rng.choice([-1., 1.], size=(rows, p - keep))
    return values


def banded_sqrt(p: int) -> np.ndarray:
    """
    The symmetric square root of R, r_ii = 1 and r_ij = 0.25 for
    1 <= |i - j| <= 2.

    Raises:
        ValueError

    """
    offsets = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    corr = np.where(offsets == 0, 1.,
                    np.where(offsets <= BANDED_WIDTH, BANDED_CORRELATION, 0.))
    eigenvalues, eigenvectors = linalg.eigh(corr)
    if eigenvalues.min() <= 0:
        raise ValueError(f"Banded correlation matrix is not positive "
                         f"definite for p={p}")
    return (eigenvectors * np.sqrt(eigenvalues)) @ eigenvectors.T


def _chain_solve(noise: np.ndarray, phi: float) -> np.ndarray:
    """
    X = (I - L)^-1 e with L_{i,i-1} = phi, applied row-wise.

    """
    return signal.lfilter([1.], [1., -phi], noise, axis=1)


#
# Scenarios
#
Scenario = Callable[[np.random.Generator, int, int, Dict],
                    Tuple[np.ndarray, List[int]]]


def _half(n: int) -> int:
    return n // 2


def _thirds(n: int) -> Tuple[int, int]:
    return n // 3, 2 * (n // 3)


def _single_change(first: Callable, second: Callable) -> Scenario:
    def scenario(rng, n, p, options):
        tau = _half(n)
        return np.vstack([first(rng, tau, p, options),
                          second(rng, n - tau, p, options)]), [tau]
    return scenario


def _two_changes(outer: Callable, middle: Callable) -> Scenario:
    def scenario(rng, n, p, options):
        tau1, tau2 = _thirds(n)
        return np.vstack([outer(rng, tau1, p, options),
                          middle(rng, tau2 - tau1, p, options),
                          outer(rng, n - tau2, p, options)]), [tau1, tau2]
    return scenario


def _no_change(rows: Callable) -> Scenario:
    def scenario(rng, n, p, options):
        return rows(rng, n, p, options), []
    return scenario


def _gauss(rng, rows, p, options):
    return rng.standard_normal((rows, p))


def _gauss_shifted(rng, rows, p, options):
    return rng.standard_normal((rows, p)) + MEAN_SHIFT


def _ar(rng, rows, p, options):
    return ar_rows(rng, rows, p)


def _ar_shifted(rng, rows, p, options):
    return ar_rows(rng, rows, p) + MEAN_SHIFT


def _gauss_ones(rng, rows, p, options):
    return rng.standard_normal((rows, p)) + 1.


def _exponential(rng, rows, p, options):
    return rng.exponential(1., size=(rows, p))


def _poisson(rng, rows, p, options):
    return _poisson_centered(rng, rows, p)


def _mixed(rng, rows, p, options):
    return _poisson_rademacher(rng, rows, p, options["beta"])


def _banded(rng, n, p, options):
    root = banded_sqrt(p)
    tau = _half(n)
    z1 = rng.standard_normal((tau, p))
    z2 = rng.exponential(1., size=(n - tau, p)) - 1.
    return np.vstack([z1, z2]) @ root, [tau]


def _directed_chain(rng, n, p, options):
    tau = _half(n)
    noise = np.vstack([rng.standard_normal((tau, p)) + 1.,
                       rng.exponential(1., size=(n - tau, p))])
    return _chain_solve(noise, options["phi"]), [tau]


SCENARIOS: Dict[str, Scenario] = {
    "null_gauss_iid": _no_change(_gauss),
    "null_gauss_ar": _no_change(_ar),
    "null_arch2": _no_change(
        lambda rng, n, p, options: _arch_columns(rng, n, p, False)),
    "null_garch11": _no_change(
        lambda rng, n, p, options: _arch_columns(rng, n, p, True)),
    "mean_shift_iid": _single_change(_gauss, _gauss_shifted),
    "mean_shift_ar": _single_change(_ar, _ar_shifted),
    "higher_moment_exp": _single_change(_gauss_ones, _exponential),
    "higher_moment_poisson_rademacher": _single_change(_poisson, _mixed),
    "higher_moment_banded": _banded,
    "two_cp_mean_iid": _two_changes(_gauss, _gauss_shifted),
    "two_cp_mean_ar": _two_changes(_ar, _ar_shifted),
    "two_cp_higher_exp": _two_changes(_gauss_ones, _exponential),
    "two_cp_higher_poisson": _two_changes(_poisson, _mixed),
    "directed_chain": _directed_chain,
}

FVBM = "fvbm"

SCENARIO_NAMES = sorted([*SCENARIOS, FVBM])

TWO_CHANGE_SCENARIOS = {"two_cp_mean_iid", "two_cp_mean_ar",
                        "two_cp_higher_exp", "two_cp_higher_poisson"}


def _min_observations(scenario: str) -> int:
    if scenario.startswith("null_"):
        return 1
    return 3 if scenario in TWO_CHANGE_SCENARIOS else 2


def generate(scenario: str, n: int, p: int, seed: int,
             beta: float = DEFAULT_BETA, phi: float = DEFAULT_PHI,
             burnin: int = GIBBS_BURNIN,
             thin: int = GIBBS_THIN) -> LabeledDataset:
    """
    Generates a seeded dataset of the named scenario.

    Args:
        scenario (str): The scenario name, see SCENARIO_NAMES.
        n (int): The number of observations.
        p (int): The dimension.
        seed (int): The seed.
        beta (float): The Poisson fraction of the mixed Poisson/Rademacher
                      regime.
        phi (float): The coefficient of the directed chain.
        burnin (int): FVBM Gibbs burn-in sweeps.
        thin (int): FVBM Gibbs thinning.

    Returns:
        LabeledDataset

    Raises:
        ValueError

    """
    if scenario == FVBM:
        return fvbm_scenario(n, p, seed, burnin=burnin, thin=thin)
    if scenario not in SCENARIOS:
        raise ValueError(f"Unknown scenario: {scenario} (expected one of "
                         f"{', '.join(SCENARIO_NAMES)})")
    if n < _min_observations(scenario) or p < 1:
        raise ValueError(f"Invalid size for {scenario}: n={n}, p={p}")
    if not 0. <= beta <= 1.:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")

    options = {"beta": beta, "phi": phi}
    rng = stream_generator(seed, SIMULATION_STREAM)
    values, cps = SCENARIOS[scenario](rng, n, p, options)
    LOGGER.debug(f"Generated {scenario}: n={n}, p={p}, change-points {cps}")

    params: Dict = {"n": n, "p": p, "seed": seed}
    if scenario.endswith("poisson") or scenario.endswith("rademacher"):
        params["beta"] = beta
    if scenario == "directed_chain":
        params["phi"] = phi
    return LabeledDataset(DataMatrix(values), cps, scenario, params)


#
# Fully visible Boltzmann machine
#
def band_matrix(p: int, coupling: float) -> np.ndarray:
    """
    The symmetric p x p matrix with M(a, b) = coupling for |a - b| = 1.

    """
    offsets = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    return np.where(offsets == 1, coupling, 0.)


def fvbm_gibbs(b: np.ndarray, coupling: np.ndarray, count: int,
               burnin: int = GIBBS_BURNIN, thin: int = GIBBS_THIN,
               seed: int = 0, chain_id: int = 0) -> np.ndarray:
    """
    Samples the fully visible Boltzmann machine with density proportional to
    exp(x'Mx / 2 + b'x) on {-1, +1}^p by Gibbs sweeps. Each coordinate is set
    to +1 with probability expit(2 (b_i + sum_j M_ij x_j)).

    Args:
        b (np.ndarray): The p-vector of biases.
        coupling (np.ndarray): The symmetric, zero-diagonal p x p matrix M.
        count (int): The number of samples to keep.
        burnin (int): The number of sweeps discarded first.
        thin (int): Keep every thin-th sweep after the burn-in.
        seed (int): The seed.
        chain_id (int): Selects an independent chain under the same seed.

    Returns:
        np.ndarray: count x p array of -1.0 / +1.0.

    Raises:
        ValueError

    """
    b = np.asarray(b, dtype=float)
    coupling = np.asarray(coupling, dtype=float)
    p = len(b)
    if coupling.shape != (p, p):
        raise ValueError(f"M has shape {coupling.shape}, expected ({p}, {p})")
    if not np.allclose(coupling, coupling.T, rtol=0., atol=1e-12):
        raise ValueError("M must be symmetric")
    if np.any(np.diag(coupling) != 0.):
        raise ValueError("M must have a zero diagonal")
    if count < 0 or burnin < 0 or thin < 1:
        raise ValueError(f"Invalid sampler settings: count={count}, "
                         f"burnin={burnin}, thin={thin}")

    rng = stream_generator(seed, GIBBS_STREAM, chain_id)
    state = rng.choice([-1., 1.], size=p)
    samples = np.empty((count, p))
    sweeps = burnin + count * thin
    for sweep in range(sweeps):
        uniforms = rng.random(p)
        for i in range(p):
            field = b[i] + coupling[i] @ state
            state[i] = 1. if uniforms[i] < special.expit(2. * field) else -1.
        kept = sweep - burnin + 1
        if kept > 0 and kept % thin == 0:
            samples[kept // thin - 1] = state
    return samples


def fvbm_scenario(n: int, p: int, seed: int, burnin: int = GIBBS_BURNIN,
                  thin: int = GIBBS_THIN) -> LabeledDataset:
    """
    Observations up to floor(n/2) from the FVBM with b = 0.1 and chain
    coupling 0.1, after it from the FVBM with b = 0.5 and coupling 0.3.

    """
    if p < 2 or n < 2:
        raise ValueError(f"Invalid size for {FVBM}: n={n}, p={p}")
    tau = _half(n)
    regimes = []
    for chain_id, (count, (bias, coupling)) in enumerate(
            zip((tau, n - tau), FVBM_REGIMES)):
        regimes.append(fvbm_gibbs(np.full(p, bias), band_matrix(p, coupling),
                                  count, burnin, thin, seed, chain_id))
    params = {"n": n, "p": p, "seed": seed, "burnin": burnin, "thin": thin}
    return LabeledDataset(DataMatrix(np.vstack(regimes)), [tau], FVBM,
                          params)


def default_scheme(scenario: str, p: int) -> SchemeSpec:
    """
    The grouping paired with a scenario: edge pairs of the coordinate chain
    for the FVBM, the chain DAG for the directed chain and singletons
    otherwise.

    """
    if scenario == FVBM:
        return SchemeSpec(SchemeMode.GRAPH_CLIQUES, chain_graph_payload(p),
                          label="graph:chain")
    if scenario == "directed_chain":
        return SchemeSpec(SchemeMode.DAG_PARENTS, chain_dag_payload(p),
                          label="dag:chain")
    return SchemeSpec(SchemeMode.L1_SQRT, label="l1sqrt")
