"""Teacher-student curriculum over length-binned protein tasks.

A single shared policy (the student) trains on proteins drawn from length
bins (the tasks). After every evaluation round the teacher scores each task,
estimates per-task learning progress, converts progress to attention, and
maps attention to the task-sampling distribution used for the next rounds.
Baseline schedules (random order, short-only, long-only) reuse the same loop
with a fixed sampling rule so runs stay directly comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .environment import CodonDesignEnvironment
from .exceptions import ConfigurationError, InputError
from .objectives import ObjectiveScorer, check_weights
from .proteins import ProteinPool
from .training import (
    TraceRow,
    TrainingConfig,
    evaluate_mean_reward,
    make_optimizer,
    sample_weights,
    training_step,
)

DEFAULT_TASKS = ((25, 40), (45, 60), (65, 80), (85, 120), (125, 180))
SHORT_ONLY_RANGE = (30, 60)
LONG_ONLY_RANGE = (125, 180)
SCHEDULES = ("curriculum", "random_order", "short_only", "long_only")
LPE_KINDS = ("online", "sampling", "linreg")
ACP_KINDS = ("lp", "mr")
A2D_KINDS = ("prop", "greedy_prop")
NAMED_CONFIGS = ("conservative", "aggressive", "balanced")


def default_tasks() -> list[tuple[int, int]]:
    """The five standard amino-acid length intervals."""
    return [tuple(t) for t in DEFAULT_TASKS]


def bin_protein(length: int, tasks=DEFAULT_TASKS) -> int:
    """Index of the task interval containing the given amino-acid length."""
    for i, (lo, hi) in enumerate(tasks):
        if lo <= length <= hi:
            return i
    raise InputError(f"protein length {length} falls outside every task interval")


@dataclass
class CurriculumConfig:
    """Teacher knobs: progress estimation, attention, and task distribution."""

    tasks: tuple = DEFAULT_TASKS
    n_iterations: int = 100
    eval_every: int = 5
    train_steps_per_task: int = 200
    lpe: str = "online"  # "online" | "sampling" | "linreg"
    lpe_alpha: float = 0.05
    lpe_window: int = 10
    acp: str = "lp"  # "lp" | "mr"
    mr_window: int = 25
    mr_power: float = 2.0
    mr_pot_prop: float = 0.4
    mr_att_pred: float = 0.1
    mr_att_succ: float = 0.05
    a2d: str = "greedy_prop"  # "prop" | "greedy_prop"
    a2d_eps: float = 0.15
    floor_eps: float = 0.01
    w_eval: tuple = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    n_eval: int = 64
    fixed_eval_protein: bool = True

    def __post_init__(self):
        tasks = tuple((int(lo), int(hi)) for lo, hi in self.tasks)
        if not tasks:
            raise ConfigurationError("at least one task interval is required")
        for lo, hi in tasks:
            if lo < 1 or hi < lo:
                raise ConfigurationError(f"bad task interval [{lo}, {hi}]")
        if any(tasks[i + 1][0] <= tasks[i][0] for i in range(len(tasks) - 1)):
            raise ConfigurationError("task intervals must be ordered by ascending length")
        self.tasks = tasks
        if self.n_iterations < 0 or self.eval_every < 1 or self.train_steps_per_task < 0:
            raise ConfigurationError(
                "n_iterations/train_steps_per_task must be >= 0 and eval_every >= 1"
            )
        if self.lpe not in LPE_KINDS:
            raise ConfigurationError(f"unknown lpe kind {self.lpe!r}; use one of {LPE_KINDS}")
        if not 0.0 < self.lpe_alpha <= 1.0:
            raise ConfigurationError("lpe_alpha must lie in (0, 1]")
        if self.lpe_window < 1 or self.mr_window < 1:
            raise ConfigurationError("estimator windows must be >= 1")
        if self.acp not in ACP_KINDS:
            raise ConfigurationError(f"unknown acp kind {self.acp!r}; use one of {ACP_KINDS}")
        if self.mr_power <= 0 or not 0.0 <= self.mr_pot_prop <= 1.0:
            raise ConfigurationError("mr_power must be > 0 and mr_pot_prop in [0, 1]")
        if self.mr_att_pred < 0 or self.mr_att_succ < 0:
            raise ConfigurationError("neighbor attention shares must be >= 0")
        if self.a2d not in A2D_KINDS:
            raise ConfigurationError(f"unknown a2d kind {self.a2d!r}; use one of {A2D_KINDS}")
        if not 0.0 <= self.a2d_eps <= 1.0 or self.floor_eps < 0.0:
            raise ConfigurationError("a2d_eps must lie in [0, 1] and floor_eps be >= 0")
        self.w_eval = tuple(float(v) for v in self.w_eval)
        check_weights(self.w_eval)
        if self.n_eval < 1:
            raise ConfigurationError("n_eval must be >= 1")

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)


def named_config(name: str, **overrides) -> CurriculumConfig:
    """Three vetted teacher presets; extra keyword arguments override fields."""
    if name == "conservative":
        cfg = CurriculumConfig()
    elif name == "aggressive":
        cfg = CurriculumConfig(
            lpe="sampling", lpe_window=10, acp="mr", mr_power=8.0, mr_pot_prop=0.8
        )
    elif name == "balanced":
        cfg = CurriculumConfig(
            lpe="linreg",
            lpe_window=25,
            acp="mr",
            mr_power=4.0,
            mr_pot_prop=0.6,
            a2d="prop",
            a2d_eps=0.0,
            floor_eps=0.0,
        )
    else:
        raise ConfigurationError(
            f"unknown curriculum preset {name!r}; use one of {NAMED_CONFIGS}"
        )
    return replace(cfg, **overrides) if overrides else cfg


# --- learning-progress estimators -------------------------------------------


def update_lp_online(lp_prev: float, delta_m: float, beta: float) -> float:
    """Exponential moving average of metric deltas."""
    if not 0.0 < beta <= 1.0:
        raise ConfigurationError(f"EMA smoothing must lie in (0, 1], got {beta}")
    return (1.0 - beta) * lp_prev + beta * delta_m


def estimate_lp_sampling(history, window: int) -> float:
    """Mean of the last `window` successive differences; 0 before two points."""
    h = np.asarray(history, dtype=np.float64)
    if h.size < 2:
        return 0.0
    diffs = np.diff(h)
    return float(diffs[-window:].mean())


def estimate_lp_linreg(history, window: int) -> float:
    """Least-squares slope of the last `window` entries; 0 before two points."""
    h = np.asarray(history, dtype=np.float64)[-window:]
    if h.size < 2:
        return 0.0
    x = np.arange(h.size, dtype=np.float64)
    return float(np.polyfit(x, h, 1)[0])


# --- attention and task distribution ----------------------------------------


def attention_lp(lp: np.ndarray) -> np.ndarray:
    """Positive part of learning progress."""
    return np.maximum(0.0, np.asarray(lp, dtype=np.float64))


def mastering_rates(histories, window: int) -> np.ndarray:
    """Latest metric rescaled into [0, 1] by the windowed min/max per task.

    Tasks with no spread yet (empty, single-entry, or constant window) count
    as unmastered (0).
    """
    rates = np.zeros(len(histories))
    for i, history in enumerate(histories):
        recent = np.asarray(history[-window:], dtype=np.float64)
        if recent.size == 0:
            continue
        lo, hi = recent.min(), recent.max()
        if hi - lo <= 0.0:
            continue
        rates[i] = np.clip((recent[-1] - lo) / (hi - lo), 0.0, 1.0)
    return rates


def attention_mr(lp: np.ndarray, histories, cfg: CurriculumConfig) -> np.ndarray:
    """Mastering-rate attention with neighbor spillover along the length chain.

    base_i = pot_prop * M_i^power * (1 - M_i) + (1 - pot_prop) * max(0, LP_i);
    each task then receives fixed shares of its shorter and longer neighbors'
    base attention.
    """
    rates = mastering_rates(histories, cfg.mr_window)
    base = cfg.mr_pot_prop * rates**cfg.mr_power * (1.0 - rates) + (
        1.0 - cfg.mr_pot_prop
    ) * attention_lp(lp)
    att = base.copy()
    att[1:] += cfg.mr_att_pred * base[:-1]
    att[:-1] += cfg.mr_att_succ * base[1:]
    return att


def attention(lp: np.ndarray, histories, cfg: CurriculumConfig) -> np.ndarray:
    if cfg.acp == "lp":
        return attention_lp(lp)
    return attention_mr(lp, histories, cfg)


def to_distribution(att: np.ndarray, cfg: CurriculumConfig) -> np.ndarray:
    """Floor-padded normalization, optionally mixed with uniform exploration."""
    att = np.asarray(att, dtype=np.float64)
    if att.ndim != 1 or att.size == 0:
        raise ConfigurationError(f"attention must be a non-empty vector, got shape {att.shape}")
    if np.any(att < 0) or not np.isfinite(att).all():
        raise ConfigurationError("attention values must be non-negative and finite")
    padded = att + cfg.floor_eps
    total = padded.sum()
    if total <= 0.0:
        raise ConfigurationError(
            "all-zero attention with a zero exploration floor leaves no valid distribution"
        )
    p = padded / total
    if cfg.a2d == "greedy_prop":
        p = (1.0 - cfg.a2d_eps) * p + cfg.a2d_eps / att.size
    return p


# --- the teacher state machine ----------------------------------------------


@dataclass
class TeacherTraceRow:
    round_index: int
    task_id: int
    m: float
    delta_m: float
    lp: float
    p: float


class Teacher:
    """Sequential teacher: consumes per-task metrics, emits the distribution."""

    def __init__(self, cfg: CurriculumConfig):
        self.cfg = cfg
        n = cfg.n_tasks
        self.lp = np.zeros(n)
        self.histories: list[list[float]] = [[] for _ in range(n)]
        self.p = np.full(n, 1.0 / n)
        self.round_index = 0
        self.trace: list[TeacherTraceRow] = []

    def observe(self, metrics) -> np.ndarray:
        """One evaluation round: update progress, histories, and distribution."""
        m = np.asarray(metrics, dtype=np.float64)
        if m.shape != (self.cfg.n_tasks,):
            raise InputError(
                f"expected {self.cfg.n_tasks} task metrics, got shape {m.shape}"
            )
        self.round_index += 1
        deltas = np.empty_like(m)
        for j in range(self.cfg.n_tasks):
            prev = self.histories[j][-1] if self.histories[j] else 0.0
            deltas[j] = m[j] - prev
            self.histories[j].append(float(m[j]))
            if self.cfg.lpe == "online":
                self.lp[j] = update_lp_online(self.lp[j], deltas[j], self.cfg.lpe_alpha)
            elif self.cfg.lpe == "sampling":
                self.lp[j] = estimate_lp_sampling(self.histories[j], self.cfg.lpe_window)
            else:
                self.lp[j] = estimate_lp_linreg(self.histories[j], self.cfg.lpe_window)
        att = attention(self.lp, self.histories, self.cfg)
        try:
            self.p = to_distribution(att, self.cfg)
        except ConfigurationError:
            # Zero-floor presets can hit an all-zero attention round (for
            # instance before any task shows progress); keep the previous
            # distribution instead of dying mid-run.
            pass
        for j in range(self.cfg.n_tasks):
            self.trace.append(
                TeacherTraceRow(
                    round_index=self.round_index,
                    task_id=j,
                    m=float(m[j]),
                    delta_m=float(deltas[j]),
                    lp=float(self.lp[j]),
                    p=float(self.p[j]),
                )
            )
        return self.p

    def sample_task(self, rng: np.random.Generator) -> int:
        return int(rng.choice(self.cfg.n_tasks, p=self.p))


def write_teacher_trace(path, rows: list[TeacherTraceRow]) -> None:
    """CSV trace with full-precision floats; stable column order."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("# codonflow teacher trace v1\n")
        handle.write("round,task_id,m,delta_m,lp,p\n")
        for row in rows:
            handle.write(
                f"{row.round_index},{row.task_id},{row.m!r},{row.delta_m!r},"
                f"{row.lp!r},{row.p!r}\n"
            )


# --- the outer training loop -------------------------------------------------


@dataclass
class CurriculumResult:
    policy: object
    optimizer: object
    teacher: Teacher
    loss_trace: list[TraceRow] = field(default_factory=list)
    eval_rounds: list[np.ndarray] = field(default_factory=list)
    aggregate: list[float] = field(default_factory=list)

    @property
    def teacher_trace(self) -> list[TeacherTraceRow]:
        return self.teacher.trace


def validate_task_pools(task_pools: list[ProteinPool], cfg: CurriculumConfig) -> None:
    if len(task_pools) != cfg.n_tasks:
        raise ConfigurationError(
            f"got {len(task_pools)} task pools for {cfg.n_tasks} task intervals"
        )
    for i, ((lo, hi), pool) in enumerate(zip(cfg.tasks, task_pools)):
        if len(pool) == 0:
            raise ConfigurationError(f"task {i} ([{lo}, {hi}]) has an empty protein pool")
        for record in pool:
            if not lo <= len(record) <= hi:
                raise ConfigurationError(
                    f"protein '{record.name}' (length {len(record)}) does not fit "
                    f"task {i} interval [{lo}, {hi}]"
                )


def _flat_range_pool(task_pools, cfg, lo, hi) -> list[tuple[int, object]]:
    """(task index, record) pairs whose lengths fall inside [lo, hi]."""
    flat = [
        (k, record)
        for k, pool in enumerate(task_pools)
        for record in pool
        if lo <= len(record) <= hi
    ]
    if not flat:
        raise ConfigurationError(
            f"schedule restricted to lengths [{lo}, {hi}] matches no pooled protein"
        )
    return flat


def curriculum_train(
    task_pools: list[ProteinPool],
    policy,
    scorer: ObjectiveScorer,
    cfg: CurriculumConfig,
    training_cfg: TrainingConfig,
    schedule: str = "curriculum",
    seed=None,
    optimizer=None,
    on_round=None,
) -> CurriculumResult:
    """Outer task-sampling loop with periodic all-task evaluation.

    Every schedule runs the identical loop; they differ only in how the next
    (task, protein) pair is drawn. The teacher always records metrics and
    updates its distribution, but only the "curriculum" schedule samples
    from it.
    """
    if schedule not in SCHEDULES:
        raise ConfigurationError(f"unknown schedule {schedule!r}; use one of {SCHEDULES}")
    validate_task_pools(task_pools, cfg)
    flat = None
    if schedule == "short_only":
        flat = _flat_range_pool(task_pools, cfg, *SHORT_ONLY_RANGE)
    elif schedule == "long_only":
        flat = _flat_range_pool(task_pools, cfg, *LONG_ONLY_RANGE)

    master = np.random.SeedSequence(seed if seed is not None else training_cfg.seed)
    task_rng = np.random.default_rng(master.spawn(1)[0])
    weight_rng = np.random.default_rng(master.spawn(1)[0])
    pick_rng = np.random.default_rng(master.spawn(1)[0])
    eval_records = [pool.sample(pick_rng) for pool in task_pools]

    teacher = Teacher(cfg)
    if optimizer is None:
        optimizer = make_optimizer(policy, training_cfg)
    envs: dict[str, CodonDesignEnvironment] = {}

    def env_for(protein) -> CodonDesignEnvironment:
        key = protein.residues
        if key not in envs:
            envs[key] = CodonDesignEnvironment(protein)
        return envs[key]

    result = CurriculumResult(policy=policy, optimizer=optimizer, teacher=teacher)
    global_step = 0
    for outer in range(1, cfg.n_iterations + 1):
        if flat is not None:
            task_idx, record = flat[int(task_rng.integers(len(flat)))]
        elif schedule == "random_order":
            task_idx = int(task_rng.integers(cfg.n_tasks))
            record = task_pools[task_idx].sample(task_rng)
        else:
            task_idx = teacher.sample_task(task_rng)
            record = task_pools[task_idx].sample(task_rng)
        env = env_for(record.protein)
        for _ in range(cfg.train_steps_per_task):
            if training_cfg.conditional:
                w = sample_weights(weight_rng, training_cfg.dirichlet_alpha)
            else:
                w = np.asarray(training_cfg.fixed_weights, dtype=np.float64)
            loss_val, mean_reward = training_step(
                policy,
                env,
                scorer,
                training_cfg,
                w,
                master.spawn(1)[0],
                optimizer,
                iteration=global_step,
            )
            optimizer.update_plateau(loss_val)
            result.loss_trace.append(
                TraceRow(global_step, loss_val, mean_reward, policy.log_z)
            )
            global_step += 1
        if outer % cfg.eval_every == 0:
            metrics = np.empty(cfg.n_tasks)
            for j, pool in enumerate(task_pools):
                record = (
                    eval_records[j] if cfg.fixed_eval_protein else pool.sample(pick_rng)
                )
                metrics[j] = evaluate_mean_reward(
                    env_for(record.protein),
                    policy,
                    scorer,
                    np.asarray(cfg.w_eval),
                    cfg.n_eval,
                    master.spawn(1)[0],
                )
            teacher.observe(metrics)
            result.eval_rounds.append(metrics)
            result.aggregate.append(float(metrics.mean()))
            if on_round is not None:
                on_round(teacher.round_index, metrics, teacher.p)
    return result
