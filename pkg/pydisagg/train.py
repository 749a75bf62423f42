"""
Fitting LinExp parameters to census counts.

Only unit totals are known, so the loss compares predicted unit totals
to census counts with one of the error metrics and is minimised over
``(a, b, c)`` by full-batch Adam on its analytic subgradient. The
subgradient takes the value 0 at both kinks of the problem: where a
pixel is clamped to zero and where a unit is predicted exactly.
"""

from __future__ import annotations

__all__ = ('adam_step', 'AdamState', 'check_gradient', 'ConfigError',
           'fit', 'Gradient', 'gradient', 'objective', 'OverflowPolicy',
           'problem', 'Problem', 'save_trace', 'TrainConfig',
           'TrainingAborted', 'TrainTrace')

import dataclasses
from enum import Enum
import logging
import math
from typing import Iterable, List, NamedTuple, Optional, Tuple, Union

import numpy as np
import pandas as pd

from pydisagg import metrics, model, serialisation
from pydisagg.ingest import CensusTable, CovariateStack, PathLike, ZoneMap
from pydisagg.metrics import Metric
from pydisagg.model import LinExpParams, ModelOverflow, UnitDesign
from pydisagg.utils import DisaggError, relative_difference

logger = logging.getLogger(__name__)

_LOG_EVERY = 100


class ConfigError(DisaggError, ValueError):
    """Thrown when a training configuration or input is unusable."""


class OverflowPolicy(Enum):
    """What `fit` does when the model overflows."""

    RAISE = 'raise'
    STOP = 'stop'


@dataclasses.dataclass(frozen=True)
class TrainConfig(serialisation.JSONMixin):
    """Training hyperparameters."""

    loss: Metric = Metric.PPE
    lr_a: float = 0.01
    lr_b: float = 0.01
    lr_c: float = 0.001
    iterations: int = 1000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    init_b: float = -4.0
    init_c: float = 0.0
    seed: int = 0
    deterministic: bool = False
    freeze_a: bool = False
    on_overflow: OverflowPolicy = OverflowPolicy.RAISE
    plateau_window: int = 50
    plateau_tolerance: float = 1e-9

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, 'loss', Metric.parse(self.loss))
            object.__setattr__(self, 'on_overflow',
                               OverflowPolicy(self.on_overflow))
        except ValueError as e:
            raise ConfigError(str(e)) from e
        for name in ('lr_a', 'lr_b', 'lr_c', 'adam_eps'):
            if not getattr(self, name) > 0:
                raise ConfigError(f'{name} must be positive, got '
                                  f'{getattr(self, name)!r}')
        for name in ('adam_beta1', 'adam_beta2'):
            if not 0 < getattr(self, name) < 1:
                raise ConfigError(f'{name} must be in (0, 1), got '
                                  f'{getattr(self, name)!r}')
        if not (isinstance(self.iterations, int) and self.iterations >= 1):
            raise ConfigError(f'iterations must be at least 1, got '
                              f'{self.iterations!r}')
        if self.plateau_window < 1:
            raise ConfigError('plateau_window must be at least 1')

    def learning_rates(self, n_bands: int) -> np.ndarray:
        """
        Learning rate of every parameter of ``[a..., b, c]``.

        :param n_bands: Length of ``a``
        :return: Learning rates
        """
        return np.concatenate((np.full(n_bands, self.lr_a),
                               [self.lr_b, self.lr_c]))


@dataclasses.dataclass(frozen=True, eq=False)
class TrainTrace:
    """What happened while fitting."""

    losses: Tuple[float, ...]
    params: LinExpParams
    best_iteration: int
    converged_early: bool
    plateau_iteration: Optional[int]
    overflow_aborts: int

    @property
    def best_loss(self) -> float:
        """Loss of the returned parameters."""
        return self.losses[self.best_iteration]


class TrainingAborted(DisaggError, ArithmeticError):
    """Thrown when training diverges."""

    def __init__(self,
                 iteration: int,
                 reason: str,
                 trace: Optional[TrainTrace] = None) -> None:
        """
        Initialise error with debugging information.

        :param iteration: Iteration that failed
        :param reason: What went wrong
        :param trace: Trace up to the failure, if any loss was computed
        """
        self.iteration = iteration
        self.reason = reason
        self.trace = trace
        super().__init__(f'Training aborted at iteration {iteration}: '
                         f'{reason}')


class Gradient(NamedTuple):
    """Subgradient of a loss with respect to ``(a, b, c)``."""

    a: np.ndarray
    b: float
    c: float

    def vector(self) -> np.ndarray:
        """
        Flatten to ``[a..., b, c]``.

        :return: Gradient vector
        """
        return np.concatenate((self.a, [self.b, self.c]))


def _metric_gradient(loss: Metric,
                     pred: np.ndarray,
                     count: np.ndarray,
                     surface: np.ndarray) -> np.ndarray:
    """Derivative of a metric with respect to each unit prediction."""
    diff = pred - count
    if loss is Metric.RMSE:
        value = metrics.error(loss, pred, count, surface)
        if value == 0:
            return np.zeros_like(diff)
        return diff / (len(diff) * value)
    included = count > 0
    total = math.fsum(surface[included].tolist())
    scale = np.zeros_like(diff)
    np.divide(surface, count * total, out=scale, where=included)
    if loss is Metric.PPE:
        return scale * np.sign(diff)
    return 2 * scale * diff


@dataclasses.dataclass(frozen=True, eq=False)
class Problem:
    """A loss over the predictions of some units."""

    design: UnitDesign
    count: np.ndarray
    surface: np.ndarray
    loss: Metric

    def objective(self, params: LinExpParams) -> float:
        """
        Loss of some parameters.

        :param params: Model parameters
        :return: Metric of the predicted unit totals
        """
        return metrics.error(self.loss, self.design.predict(params),
                             self.count, self.surface)

    def value_and_gradient(self, params: LinExpParams
                           ) -> Tuple[float, Gradient]:
        """
        Loss and subgradient of some parameters.

        :param params: Model parameters
        :return: Loss, subgradient
        """
        densities, exp_z, active = self.design.densities(params)
        pred = self.design.totals(densities)
        value = metrics.error(self.loss, pred, self.count, self.surface)
        d_pred = _metric_gradient(self.loss, pred, self.count, self.surface)
        d_density = (d_pred[self.design.unit_index] * self.design.weight
                     * active)
        d_exponent = d_density * exp_z
        return value, Gradient(a=self.design.covariates.T @ d_exponent,
                               b=float(d_exponent.sum()),
                               c=float(d_density.sum()))

    def gradient(self, params: LinExpParams) -> Gradient:
        """
        Subgradient of some parameters.

        :param params: Model parameters
        :return: Subgradient
        """
        return self.value_and_gradient(params)[1]


def problem(stack: CovariateStack,
            zone: ZoneMap,
            census: CensusTable,
            unit_ids: Iterable[str],
            loss: Union[str, Metric]) -> Problem:
    """
    Set up the loss over some units.

    :param stack: Standardised covariates
    :param zone: Zone map
    :param census: Census table
    :param unit_ids: Units the loss covers
    :param loss: Metric used as loss
    :return: Problem
    """
    unit_ids = tuple(unit_ids)
    return Problem(design=model.design(stack, zone, unit_ids),
                   count=census.values(unit_ids),
                   surface=zone.surfaces(unit_ids),
                   loss=Metric.parse(loss))


def objective(params: LinExpParams,
              stack: CovariateStack,
              zone: ZoneMap,
              census: CensusTable,
              unit_ids: Iterable[str],
              loss: Union[str, Metric]) -> float:
    """
    Loss of some parameters over some units.

    :param params: Model parameters
    :param stack: Standardised covariates
    :param zone: Zone map
    :param census: Census table
    :param unit_ids: Units the loss covers
    :param loss: Metric used as loss
    :return: Metric of the predicted unit totals
    """
    params.check_bands(stack.bands)
    return problem(stack, zone, census, unit_ids, loss).objective(params)


def gradient(params: LinExpParams,
             stack: CovariateStack,
             zone: ZoneMap,
             census: CensusTable,
             unit_ids: Iterable[str],
             loss: Union[str, Metric]) -> Gradient:
    """
    Subgradient of the loss over some units.

    :param params: Model parameters
    :param stack: Standardised covariates
    :param zone: Zone map
    :param census: Census table
    :param unit_ids: Units the loss covers
    :param loss: Metric used as loss
    :return: Subgradient
    """
    params.check_bands(stack.bands)
    return problem(stack, zone, census, unit_ids, loss).gradient(params)


def check_gradient(prob: Problem,
                   params: LinExpParams,
                   h: float = 1e-6) -> Tuple[np.ndarray, np.ndarray]:
    """
    Analytic subgradient next to central finite differences.

    :param prob: Problem
    :param params: Point to check at
    :param h: Step
    :return: Analytic and numerical gradient vectors
    """
    theta = params.vector()
    numeric = np.zeros_like(theta)
    for i in range(len(theta)):
        step = np.zeros_like(theta)
        step[i] = h
        upper = prob.objective(params.with_vector(theta + step))
        lower = prob.objective(params.with_vector(theta - step))
        numeric[i] = (upper - lower) / (2 * h)
    return prob.gradient(params).vector(), numeric


@dataclasses.dataclass(frozen=True, eq=False)
class AdamState:
    """Parameters and moment estimates of Adam."""

    theta: np.ndarray
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def start(cls, theta: np.ndarray) -> AdamState:
        """
        State before the first step.

        :param theta: Initial parameters
        :return: State with zero moments
        """
        theta = np.array(theta, dtype=np.float64)
        return cls(theta, np.zeros_like(theta), np.zeros_like(theta))


def adam_step(state: AdamState,
              grads: Union[Gradient, np.ndarray],
              config: TrainConfig) -> AdamState:
    """
    One Adam update with per-group learning rates.

    :param state: Current state
    :param grads: Gradient, as `Gradient` or aligned with ``theta``
    :param config: Hyperparameters
    :return: Next state
    """
    g = grads.vector() if isinstance(grads, Gradient) else np.asarray(
        grads, dtype=np.float64)
    if g.shape != state.theta.shape:
        raise ValueError(f'Gradient of shape {g.shape} for parameters of '
                         f'shape {state.theta.shape}')
    if not np.isfinite(g).all():
        raise TrainingAborted(state.t + 1, 'non-finite gradient')
    t = state.t + 1
    beta1, beta2 = config.adam_beta1, config.adam_beta2
    m = beta1 * state.m + (1 - beta1) * g
    v = beta2 * state.v + (1 - beta2) * (g * g)
    m_hat = m / (1 - beta1 ** t)
    v_hat = v / (1 - beta2 ** t)
    lr = config.learning_rates(len(g) - 2)
    theta = state.theta - lr * m_hat / (np.sqrt(v_hat) + config.adam_eps)
    return AdamState(theta, m, v, t)


def _plateau(losses: List[float], window: int, tolerance: float
             ) -> Optional[int]:
    for i in range(window, len(losses)):
        if relative_difference(losses[i], losses[i - window]) < tolerance:
            return i
    return None


def _trace(losses: List[float],
           best: LinExpParams,
           best_iteration: int,
           config: TrainConfig,
           overflow_aborts: int = 0) -> TrainTrace:
    plateau = _plateau(losses, config.plateau_window,
                       config.plateau_tolerance)
    return TrainTrace(losses=tuple(losses),
                      params=best,
                      best_iteration=best_iteration,
                      converged_early=plateau is not None,
                      plateau_iteration=plateau,
                      overflow_aborts=overflow_aborts)


def fit(stack: CovariateStack,
        zone: ZoneMap,
        census: CensusTable,
        unit_ids: Iterable[str],
        config: Optional[TrainConfig] = None
        ) -> Tuple[LinExpParams, TrainTrace]:
    """
    Fit LinExp parameters to the census of some units.

    Runs every configured iteration and returns the parameters with the
    lowest loss seen, the initial ones included.

    :param stack: Standardised covariates
    :param zone: Zone map
    :param census: Census table
    :param unit_ids: Training units
    :param config: Hyperparameters, defaults if ``None``
    :return: Best parameters, trace
    """
    config = config or TrainConfig()
    unit_ids = tuple(unit_ids)
    if not stack.standardized:
        raise ConfigError('Covariates must be standardised')
    if not any(census[u] > 0 for u in unit_ids):
        raise ConfigError('No training unit has a positive census')
    prob = problem(stack, zone, census, unit_ids, config.loss)
    params = LinExpParams(a=np.zeros(len(stack.bands)), b=config.init_b,
                          c=config.init_c, bands=stack.bands,
                          stats=stack.stats)
    state = AdamState.start(params.vector())
    logger.info('Fitting %d bands on %d units (%d memberships) with %s '
                'loss, %d iterations', len(stack.bands), len(unit_ids),
                len(prob.design.weight), config.loss.value,
                config.iterations)

    losses: List[float] = []
    best, best_iteration = params, 0
    for iteration in range(config.iterations + 1):
        current = params.with_vector(state.theta)
        try:
            loss, grad = prob.value_and_gradient(current)
        except ModelOverflow as e:
            if config.on_overflow is OverflowPolicy.RAISE or not losses:
                trace = (_trace(losses, best, best_iteration, config, 1)
                         if losses else None)
                raise TrainingAborted(iteration, str(e), trace) from e
            logger.warning('Stopping at iteration %d: %s', iteration, e)
            return best, _trace(losses, best, best_iteration, config, 1)
        if not math.isfinite(loss):
            raise TrainingAborted(iteration, f'loss is {loss!r}',
                                  _trace(losses, best, best_iteration,
                                         config) if losses else None)
        losses.append(loss)
        if loss < losses[best_iteration]:
            best, best_iteration = current, iteration
        if iteration % _LOG_EVERY == 0:
            logger.debug('Iteration %d: loss %.9g', iteration, loss)
        if iteration == config.iterations:
            break
        if config.freeze_a:
            grad = grad._replace(a=np.zeros_like(grad.a))
        try:
            state = adam_step(state, grad, config)
        except TrainingAborted as e:
            raise TrainingAborted(e.iteration, e.reason,
                                  _trace(losses, best, best_iteration,
                                         config)) from e

    trace = _trace(losses, best, best_iteration, config)
    logger.info('Best loss %.6g at iteration %d (initial %.6g)',
                trace.best_loss, best_iteration, losses[0])
    if trace.converged_early:
        logger.info('Loss plateaued from iteration %d',
                    trace.plateau_iteration)
    return best, trace


def save_trace(trace: TrainTrace, path: PathLike) -> None:
    """
    Write the loss of every iteration as CSV.

    :param trace: Training trace
    :param path: Output path
    """
    pd.DataFrame({
        'iteration': np.arange(len(trace.losses)),
        'loss': trace.losses,
    }).to_csv(path, index=False, float_format='%.17g')
