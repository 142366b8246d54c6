"""Training of the smoothness-multiplier networks.

A training cycle draws one problem, integrates it with WENO-DS on the
training grid and, after every time step, differentiates the loss against
the reference through that single step and updates both networks with Adam.
At the final time the model is scored on the validation set and saved as a
checkpoint. The best-scoring checkpoint is the trained model.
"""

import json
import logging
import shutil
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import autodiff as ad
from . import flux_models as fm
from .deep_smoothness import (EULER_ARCHITECTURE, SCALAR_ARCHITECTURE, SmoothnessModel,
                              default_architecture, init_model, save_params, zero_network)
from .errors import ProblemSpecError, SolverAbort, TapeError
from .mesh import Grid1D
from .problems import (BL_A_RANGE, BURGERS_Z_RANGES, BurgersIC, EulerProblem, Problem,
                       ProblemFamily, ScalarProblem, buckley_leverett_problem, burgers_problem,
                       parse_problem, riemann_problem)
from .reference_oracles import ReferenceSolution, exact_solution, fine_reference
from .semidiscrete import semidiscrete_rhs, wave_speeds
from .time_integration import StepPlan, adaptive_dt, rk3_step, run
from .weno_kernel import SchemeConfig, Weighting

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Problem samples
# ---------------------------------------------------------------------------

@dataclass
class ProblemSample:
    """A randomly drawn training problem."""
    family: ProblemFamily
    params: Dict[str, Any]
    seed: Optional[int] = None

    def to_problem(self) -> Problem:
        if self.family is ProblemFamily.BUCKLEY_LEVERETT:
            return buckley_leverett_problem(self.params["a"])
        if self.family is ProblemFamily.BURGERS:
            return burgers_problem(self.params["ic"], self.params["z"])
        if self.family is ProblemFamily.EULER:
            return riemann_problem(tuple(self.params["left"]), tuple(self.params["right"]))
        raise ProblemSpecError(f"No training samples for {self.family.value}")

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family.value, "params": self.params, "seed": self.seed}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ProblemSample":
        return cls(ProblemFamily(data["family"]), dict(data["params"]), data.get("seed"))

def gen_bl_sample(rng: np.random.Generator) -> ProblemSample:
    return ProblemSample(ProblemFamily.BUCKLEY_LEVERETT, {"a": float(rng.uniform(*BL_A_RANGE))})

def gen_burgers_sample(rng: np.random.Generator) -> ProblemSample:
    ic = list(BurgersIC)[int(rng.integers(len(BurgersIC)))]
    z = float(rng.uniform(*BURGERS_Z_RANGES[ic]))
    return ProblemSample(ProblemFamily.BURGERS, {"ic": ic.value, "z": z})

def euler_states_from_draws(branch: int, draws: Dict[str, float]) -> Tuple[Tuple[float, float, float],
                                                                         Tuple[float, float, float]]:
    """Left and right (rho, u, p) of the shock-tube generator for given draws.

    Branch 0 reads draws a, b, c, d, e; branch 1 reads k, l, r.
    """
    if branch == 0:
        p_l = draws["a"] + draws["b"]
        p_r = 1.0 / draws["c"]
        return (p_l, draws["e"], p_l), (p_r + draws["d"], 0.0, p_r)
    if branch == 1:
        rho_l = draws["k"]
        return (rho_l, draws["r"], 1.0), (rho_l / 10.0 + draws["l"], 0.0, 0.1)
    raise ValueError(f"Generator branch must be 0 or 1, got {branch}")

EULER_DRAW_RANGES = {
    0: {"a": (0.5, 10.0), "b": (-0.05, 0.05), "c": (5.0, 10.0), "d": (-0.05, 0.05), "e": (0.0, 1.0)},
    1: {"k": (1.0, 3.0), "l": (-0.05, 0.05), "r": (0.0, 1.0)},
}

def gen_euler_sample(rng: np.random.Generator, branch: Optional[int] = None) -> ProblemSample:
    if branch is None:
        branch = int(rng.integers(2))
    draws = {name: float(rng.uniform(lo, hi)) for name, (lo, hi) in EULER_DRAW_RANGES[branch].items()}
    left, right = euler_states_from_draws(branch, draws)
    return ProblemSample(ProblemFamily.EULER,
                         {"branch": branch, "draws": draws, "left": list(left), "right": list(right)})

SAMPLE_GENERATORS: Dict[ProblemFamily, Callable[[np.random.Generator], ProblemSample]] = {
    ProblemFamily.BUCKLEY_LEVERETT: gen_bl_sample,
    ProblemFamily.BURGERS: gen_burgers_sample,
    ProblemFamily.EULER: gen_euler_sample,
}

def generate_dataset(family: Union[ProblemFamily, str], count: int, seed: int) -> List[ProblemSample]:
    """``count`` samples, each drawn from its own recorded seed."""
    family = ProblemFamily(family)
    if family not in SAMPLE_GENERATORS:
        raise ProblemSpecError(f"No sample generator for {family.value}")
    seeds = np.random.default_rng(seed).integers(0, 2**63 - 1, size=count)
    samples = []
    for sample_seed in seeds:
        sample = SAMPLE_GENERATORS[family](np.random.default_rng(int(sample_seed)))
        sample.seed = int(sample_seed)
        samples.append(sample)
    return samples

# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

class LossKind(str, Enum):
    """Training and validation loss."""
    MSE = "mse"
    MSE_OVERFLOW = "mse+overflow"
    EULER = "euler"

def loss_mse(u, u_ref):
    diff = u - u_ref
    return ad.sum_(diff * diff) / float(np.size(ad.value_of(u_ref)))

def loss_overflow(u, u_min: float = 0.0, u_max: float = 1.0):
    below = ad.absolute(ad.minimum(u, u_min) - u_min)
    above = ad.absolute(ad.maximum(u, u_max) - u_max)
    return ad.sum_(below + above)

def loss_euler(primitive: Sequence[Any], reference: Sequence[np.ndarray]):
    """Sum of the density, velocity and pressure mean square errors."""
    rho, u, p = primitive
    rho_ref, u_ref, p_ref = reference
    return loss_mse(rho, rho_ref) + loss_mse(u, u_ref) + loss_mse(p, p_ref)

def euler_component_losses(state: np.ndarray, reference: Sequence[np.ndarray],
                           gamma: float = fm.GAMMA) -> Dict[str, float]:
    primitive = fm.primitive_variables(np.asarray(state), gamma)
    return {name: float(loss_mse(q, ref))
            for name, q, ref in zip(("rho", "u", "p"), primitive, reference)}

def problem_loss(kind: LossKind, values, target, problem: Problem):
    """Loss of a scalar field against its reference, or of an Euler state
    against reference primitives."""
    if kind is LossKind.EULER:
        return loss_euler(fm.primitive_variables(values, problem.gamma), target)
    loss = loss_mse(values, target)
    if kind is LossKind.MSE_OVERFLOW:
        lo, hi = problem.bounds or (0.0, 1.0)
        loss = loss + loss_overflow(values, lo, hi)
    return loss

# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    """Moment estimates of the bias-corrected Adam recursion."""
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], lr: float) -> "AdamState":
        return cls(lr=lr, m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])

    def copy(self) -> "AdamState":
        return replace(self, m=[a.copy() for a in self.m], v=[a.copy() for a in self.v])

def adam_update(params: Sequence[np.ndarray], grads: Sequence[np.ndarray],
                state: AdamState) -> List[np.ndarray]:
    """One Adam step; updates ``state`` in place and returns new parameters."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("Parameter, gradient and moment lists differ in length")
    state.step += 1
    t = state.step
    updated = []
    for k, (p, g) in enumerate(zip(params, grads)):
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g
        m_hat = state.m[k] / (1.0 - state.beta1 ** t)
        v_hat = state.v[k] / (1.0 - state.beta2 ** t)
        updated.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return updated

# ---------------------------------------------------------------------------
# Protocols and options
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainingProtocol:
    """Grid, schedule, loss and validation set of one training setup.

    ``n_steps`` None means CFL-adaptive steps (Euler).
    """
    family: ProblemFamily
    n_intervals: int
    n_steps: Optional[int]
    final_time: float
    lr: float
    loss: LossKind
    cycles: int
    runs: int = 1
    channels: Tuple[int, ...] = SCALAR_ARCHITECTURE[0]
    kernels: Tuple[int, ...] = SCALAR_ARCHITECTURE[1]
    reference_intervals: int = 1024
    reference_steps: Optional[int] = None
    validation: Tuple[str, ...] = ()
    cfl: float = 0.9

TRAINING_PROTOCOLS: Dict[str, TrainingProtocol] = {
    "bl": TrainingProtocol(
        family=ProblemFamily.BUCKLEY_LEVERETT, n_intervals=128, n_steps=140, final_time=0.4,
        lr=1e-4, loss=LossKind.MSE_OVERFLOW, cycles=60, reference_steps=8960,
        validation=tuple(f"bl:a={a}" for a in (0.15, 0.35, 0.55, 0.75))),
    "burgers": TrainingProtocol(
        family=ProblemFamily.BURGERS, n_intervals=128, n_steps=100, final_time=0.3,
        lr=1e-3, loss=LossKind.MSE, cycles=90, runs=3, reference_steps=6400,
        validation=("burgers:ic=step,z=1.5", "burgers:ic=gauss,z=20", "burgers:ic=sine,z=1.5")),
    "euler": TrainingProtocol(
        family=ProblemFamily.EULER, n_intervals=64, n_steps=None, final_time=0.1,
        lr=1e-3, loss=LossKind.EULER, cycles=500,
        channels=EULER_ARCHITECTURE[0], kernels=EULER_ARCHITECTURE[1],
        validation=("euler:preset=sod",)),
}

@dataclass
class TrainingOptions:
    """Options for ``train``; None fields fall back to the protocol preset.

    Attributes:
        protocol: Preset name (bl, burgers, euler)
        seed: Master seed; a run is a pure function of seed and protocol
        cycles: Training cycles per run
        runs: Independent runs; the best validation model over all runs wins
        lr: Adam learning rate
        n_intervals: Training grid size
        n_steps: Training step count (fixed-step protocols)
        reference_intervals: Fine reference grid size
        reference_steps: Fine reference step count
        zero_init: Start from all-zero networks instead of random weights
        output_dir: Where checkpoints, the run log and best_model.json go
        cache_dir: Reference cache directory (None uses WENO_DS_CACHE)
    """
    protocol: str = "bl"
    seed: int = 0
    cycles: Optional[int] = None
    runs: Optional[int] = None
    lr: Optional[float] = None
    n_intervals: Optional[int] = None
    n_steps: Optional[int] = None
    reference_intervals: Optional[int] = None
    reference_steps: Optional[int] = None
    zero_init: bool = False
    output_dir: Path = Path("training_runs")
    cache_dir: Optional[Path] = None

    def resolve(self) -> TrainingProtocol:
        if self.protocol not in TRAINING_PROTOCOLS:
            raise ProblemSpecError(f"Unknown training protocol '{self.protocol}', choose from "
                                   f"{', '.join(TRAINING_PROTOCOLS)}")
        overrides = {name: getattr(self, name)
                     for name in ("cycles", "runs", "lr", "n_intervals", "n_steps",
                                  "reference_intervals", "reference_steps")
                     if getattr(self, name) is not None}
        protocol = replace(TRAINING_PROTOCOLS[self.protocol], **overrides)
        if protocol.cycles < 1 or protocol.runs < 1:
            raise ProblemSpecError("cycles and runs must be at least 1")
        return protocol

# ---------------------------------------------------------------------------
# Training cycle
# ---------------------------------------------------------------------------

@dataclass
class TrainerState:
    """Model and optimizer state carried from cycle to cycle."""
    model: SmoothnessModel
    adam_positive: AdamState
    adam_negative: AdamState

    def copy(self) -> "TrainerState":
        return TrainerState(self.model.copy(), self.adam_positive.copy(),
                            self.adam_negative.copy())

@dataclass
class TrainingCycleLog:
    """Outcome of one training cycle."""
    run: int
    cycle: int
    sample: Dict[str, Any]
    step_losses: List[float] = field(default_factory=list)
    validation_losses: Dict[str, float] = field(default_factory=dict)
    validation_loss: float = float("inf")
    component_losses: Dict[str, Dict[str, float]] = field(default_factory=dict)
    aborted: bool = False
    error: Optional[str] = None
    checkpoint: Optional[str] = None

    def to_record(self) -> Dict[str, Any]:
        losses = np.array(self.step_losses) if self.step_losses else np.array([np.nan])
        return _json_safe({
            "run": self.run,
            "cycle": self.cycle,
            "sample": self.sample,
            "steps": len(self.step_losses),
            "step_loss": {"first": losses[0], "last": losses[-1],
                          "mean": float(np.mean(losses)), "max": float(np.max(losses))},
            "validation_losses": self.validation_losses,
            "validation_loss": self.validation_loss,
            "component_losses": self.component_losses,
            "aborted": self.aborted,
            "error": self.error,
            "checkpoint": self.checkpoint,
        })

def _json_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (float, np.floating)):
        return float(value) if np.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value

def training_reference(problem: ScalarProblem, protocol: TrainingProtocol, grid: Grid1D,
                       cache_dir: Optional[Path] = None) -> ReferenceSolution:
    """Fine reference restricted to the training grid at every training step."""
    if protocol.reference_steps is None or protocol.n_steps is None:
        raise ValueError("Scalar protocols need fixed training and reference step counts")
    if protocol.reference_steps % protocol.n_steps:
        raise ValueError(f"{protocol.reference_steps} reference steps do not align with "
                         f"{protocol.n_steps} training steps")
    fine = fine_reference(problem, protocol.reference_intervals, protocol.reference_steps,
                          record_every=protocol.reference_steps // protocol.n_steps,
                          cache_dir=cache_dir)
    return fine.restrict(grid)

def training_step(trainer: TrainerState, problem: Problem, state: np.ndarray, dt: float,
                  dx: float, target, loss_kind: LossKind, step: int) -> Tuple[np.ndarray, float]:
    """Advance one step with a taped WENO-DS solve and update both networks.

    The splitting speed is frozen from the state at the start of the step.

    Returns:
        The new state (detached) and the step loss.
    """
    model = trainer.model
    cfg = SchemeConfig(Weighting.DS, C=model.C)
    tape = ad.Tape()
    bound, positive_vars, negative_vars = model.bind(tape)
    alpha = wave_speeds(state, problem)
    rhs = lambda v: semidiscrete_rhs(v, problem, dx, cfg, bound, alpha)
    advanced = rk3_step(state, dt, rhs, step=step)
    loss = problem_loss(loss_kind, advanced, target, problem)
    grads = tape.backward(loss, positive_vars + negative_vars)
    loss_value = float(ad.value_of(loss))
    if not np.isfinite(loss_value) or not all(np.all(np.isfinite(g)) for g in grads):
        raise SolverAbort("Non-finite loss or gradient", step=step)

    split = len(positive_vars)
    model.positive = model.positive.with_params(
        adam_update(model.positive.params, grads[:split], trainer.adam_positive))
    model.negative = model.negative.with_params(
        adam_update(model.negative.params, grads[split:], trainer.adam_negative))
    return np.array(ad.value_of(advanced)), loss_value

def _run_training_steps(trainer: TrainerState, problem: Problem, protocol: TrainingProtocol,
                        cache_dir: Optional[Path]) -> List[float]:
    grid = problem.make_grid(protocol.n_intervals)
    state = problem.initial_values(grid)
    losses: List[float] = []
    if isinstance(problem, EulerProblem):
        x = grid.nodes(problem.boundary)
        t, step = 0.0, 0
        T = protocol.final_time
        while T - t > 1e-14 * T:
            dt = min(adaptive_dt(problem, state, grid.dx, protocol.cfl), T - t)
            t = T if dt == T - t else t + dt
            target = exact_solution(problem, x, t)
            state, loss = training_step(trainer, problem, state, dt, grid.dx, target,
                                        protocol.loss, step)
            problem.max_signal(state)
            losses.append(loss)
            step += 1
        return losses

    reference = training_reference(problem, protocol, grid, cache_dir)
    dt = protocol.final_time / protocol.n_steps
    for step in range(protocol.n_steps):
        state, loss = training_step(trainer, problem, state, dt, grid.dx,
                                    reference.states[step + 1], protocol.loss, step)
        losses.append(loss)
    return losses

def validate(model: SmoothnessModel, protocol: TrainingProtocol,
             cache_dir: Optional[Path] = None) -> Tuple[Dict[str, float], Dict[str, Dict[str, float]]]:
    """Final-time loss of WENO-DS on every validation problem.

    Returns:
        Loss per validation spec, and per-component losses for Euler problems.
        A validation run that aborts scores infinity.
    """
    cfg = SchemeConfig(Weighting.DS, C=model.C)
    losses: Dict[str, float] = {}
    components: Dict[str, Dict[str, float]] = {}
    for spec in protocol.validation:
        problem = parse_problem(spec, final_time=protocol.final_time)
        grid = problem.make_grid(protocol.n_intervals)
        try:
            if isinstance(problem, EulerProblem):
                plan = StepPlan.adaptive(problem.final_time, protocol.cfl)
                final = run(problem, cfg, plan, grid, model).final
                target = exact_solution(problem, grid.nodes(problem.boundary), problem.final_time)
                components[spec] = euler_component_losses(final, target, problem.gamma)
                losses[spec] = float(sum(components[spec].values()))
            else:
                plan = StepPlan.fixed(problem.final_time, protocol.n_steps)
                final = run(problem, cfg, plan, grid, model).final
                target = training_reference(problem, protocol, grid, cache_dir).final
                losses[spec] = float(problem_loss(protocol.loss, final, target, problem))
        except SolverAbort as e:
            logger.warning("Validation on %s aborted: %s", spec, e)
            losses[spec] = float("inf")
    return losses, components

def training_cycle(trainer: TrainerState, sample: ProblemSample, protocol: TrainingProtocol,
                   run_index: int = 0, cycle: int = 1,
                   cache_dir: Optional[Path] = None) -> TrainingCycleLog:
    """Train on one sampled problem up to T, then validate.

    A non-finite loss or solver failure restores the parameters and optimizer
    state from before the cycle and marks the log as aborted.
    """
    log = TrainingCycleLog(run=run_index, cycle=cycle, sample=sample.to_dict())
    saved = trainer.copy()
    problem = sample.to_problem()
    if problem.family is not protocol.family:
        raise ProblemSpecError(f"Sample family {problem.family.value} does not match the "
                               f"{protocol.family.value} protocol")
    problem = replace(problem, final_time=protocol.final_time)
    try:
        log.step_losses = _run_training_steps(trainer, problem, protocol, cache_dir)
    except (SolverAbort, TapeError, FloatingPointError) as e:
        logger.warning("Cycle %d aborted, restoring parameters: %s", cycle, e)
        trainer.model = saved.model
        trainer.adam_positive = saved.adam_positive
        trainer.adam_negative = saved.adam_negative
        log.aborted = True
        log.error = str(e)
        return log

    log.validation_losses, log.component_losses = validate(trainer.model, protocol, cache_dir)
    values = list(log.validation_losses.values())
    log.validation_loss = float(np.mean(values)) if values else float("inf")
    logger.info("Run %d cycle %d: last step loss %.3e, validation %.3e", run_index, cycle,
                log.step_losses[-1] if log.step_losses else float("nan"), log.validation_loss)
    return log

def select_model(logs: Sequence[TrainingCycleLog]) -> TrainingCycleLog:
    """Checkpoint with the lowest finite validation loss; ties go to the earliest.

    Raises:
        ValueError: If no cycle finished with a finite validation loss.
    """
    best: Optional[TrainingCycleLog] = None
    for log in logs:
        if log.aborted or log.checkpoint is None or not np.isfinite(log.validation_loss):
            continue
        if best is None or log.validation_loss < best.validation_loss:
            best = log
    if best is None:
        raise ValueError("No training cycle finished with a finite validation loss")
    return best

@dataclass
class TrainingResult:
    """Logs of all cycles and the selected model."""
    protocol: TrainingProtocol
    logs: List[TrainingCycleLog]
    best: TrainingCycleLog
    model_path: Path
    log_path: Path

def _initial_model(protocol: TrainingProtocol, rng: np.random.Generator,
                   zero_init: bool) -> SmoothnessModel:
    layers = default_architecture(protocol.channels, protocol.kernels)
    if zero_init:
        return SmoothnessModel(zero_network(layers), zero_network(layers))
    return init_model(layers, rng)

def train(options: TrainingOptions,
          on_cycle: Optional[Callable[[TrainingCycleLog], None]] = None) -> TrainingResult:
    """Run the protocol, write checkpoints and the run log, select the best model.

    Args:
        options: Training options
        on_cycle: Called with each finished cycle log

    Returns:
        TrainingResult with the path of ``best_model.json``.

    Raises:
        ValueError: If no cycle produced a usable checkpoint.
    """
    protocol = options.resolve()
    output_dir = Path(options.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    log_path = output_dir / "run_log.jsonl"
    logs: List[TrainingCycleLog] = []

    with open(log_path, "w") as log_file:
        header = {"event": "start", "seed": options.seed, "protocol": asdict(protocol),
                  "initialization": "zero" if options.zero_init else "uniform-fan-in"}
        log_file.write(json.dumps(_json_safe(header), default=str) + "\n")
        for run_index in range(protocol.runs):
            rng = np.random.default_rng([options.seed, run_index])
            model = _initial_model(protocol, rng, options.zero_init)
            model.metadata = {"protocol": options.protocol, "seed": options.seed, "run": run_index}
            trainer = TrainerState(
                model,
                AdamState.for_params(model.positive.params, protocol.lr),
                AdamState.for_params(model.negative.params, protocol.lr))
            for cycle in range(1, protocol.cycles + 1):
                sample = SAMPLE_GENERATORS[protocol.family](rng)
                log = training_cycle(trainer, sample, protocol, run_index, cycle, options.cache_dir)
                if not log.aborted:
                    trainer.model.metadata["cycle"] = cycle
                    path = output_dir / f"run{run_index:02d}" / f"cycle_{cycle:04d}.json"
                    log.checkpoint = str(save_params(trainer.model, path))
                log_file.write(json.dumps(log.to_record()) + "\n")
                log_file.flush()
                logs.append(log)
                if on_cycle is not None:
                    on_cycle(log)

        best = select_model(logs)
        model_path = output_dir / "best_model.json"
        shutil.copyfile(best.checkpoint, model_path)
        log_file.write(json.dumps(_json_safe({"event": "selected", "run": best.run,
                                              "cycle": best.cycle,
                                              "validation_loss": best.validation_loss,
                                              "checkpoint": best.checkpoint})) + "\n")
    logger.info("Selected run %d cycle %d (validation %.4e)", best.run, best.cycle,
                best.validation_loss)
    return TrainingResult(protocol, logs, best, model_path, log_path)
