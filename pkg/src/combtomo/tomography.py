"""Stepwise comb tomography by learning one isometry per time step.

At step ``k`` the isometries ``V_0 .. V_{k-1}`` are already known. Every
experiment ``(alpha, beta)`` is summarised by its temporary state

    η^(-1) = ρ^(0)_{α_0}
    η^(t)  = Tr_{o_t}[ (ρ^(t+1)_{α_{t+1}} ⊗ E^(t)_{β_t}) V_t η^(t-1) V_t^† ]

on ``H_{i_{k}} ⊗ H_{A_{k}}``, and the model probability of a candidate
``W`` is ``Tr[(E^(k)_{β_k} ⊗ I) W η^(k-1) W^†]``. ``V_k`` is the minimiser of
the squared probability residuals over the Stiefel manifold.

Instrument experiments replace the product ``ρ ⊗ E`` in the recursion by the
ξ operator of the instrument applied in that gap (see :mod:`.instruments`).
"""

import dataclasses
import logging
import time

import numpy as np

from .comb import CombDims, QuantumComb, random_isometry
from .errors import BadDesign, BadIndex, DimensionMismatch, Misalignment, RankDeficientDesign
from .instruments import InstrumentSet
from .linalg import as_matrix, dagger, fro, hermitian_eig, numerical_rank
from .stiefel import OptimizerConfig, optimize, riemannian_grad_norm

log = logging.getLogger(__name__)

RANK_TOL = 1e-8


@dataclasses.dataclass(frozen=True)
class PreparationSet:
    states: tuple

    def __post_init__(self):
        states = tuple(as_matrix(s) for s in self.states)
        if not states:
            raise BadDesign("empty preparation set")
        d = states[0].shape[0]
        for s in states:
            if s.shape != (d, d):
                raise DimensionMismatch("preparations must share one dimension")
            if fro(s - dagger(s)) > 1e-10 or abs(np.trace(s) - 1) > 1e-10:
                raise BadDesign("preparations must be Hermitian with unit trace")
            if hermitian_eig(s)[0][-1] < -1e-10:
                raise BadDesign("preparations must be positive semidefinite")
        object.__setattr__(self, "states", states)

    @property
    def dim(self):
        return self.states[0].shape[0]

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]

    @property
    def is_complete(self):
        return numerical_rank(self.states, RANK_TOL) == self.dim**2


@dataclasses.dataclass(frozen=True)
class MeasurementSet:
    effects: tuple
    completeness_group: tuple | None = None  # indices of effects summing to I

    def __post_init__(self):
        effects = tuple(as_matrix(e) for e in self.effects)
        if not effects:
            raise BadDesign("empty measurement set")
        d = effects[0].shape[0]
        for e in effects:
            if e.shape != (d, d) or fro(e - dagger(e)) > 1e-10:
                raise BadDesign("effects must be Hermitian and share one dimension")
            w, _ = hermitian_eig(e)
            if w[-1] < -1e-10 or w[0] > 1 + 1e-10:
                raise BadDesign("effects must satisfy 0 <= E <= I")
        if self.completeness_group is not None:
            total = sum(effects[i] for i in self.completeness_group)
            if fro(total - np.eye(d)) > 1e-9:
                raise BadDesign("completeness group does not sum to the identity")
            object.__setattr__(self, "completeness_group", tuple(self.completeness_group))
        object.__setattr__(self, "effects", effects)

    @property
    def dim(self):
        return self.effects[0].shape[0]

    def __len__(self):
        return len(self.effects)

    def __getitem__(self, i):
        return self.effects[i]

    @property
    def is_complete(self):
        return numerical_rank(self.effects, RANK_TOL) == self.dim**2


def default_single_qubit_sets():
    """The four single-qubit states (−X, +X, +Y eigenstates and |0>) used as both preparations and effects."""
    mats = (
        np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=complex),
        np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex),
        np.array([[0.5, -0.5j], [0.5j, 0.5]], dtype=complex),
        np.array([[1, 0], [0, 0]], dtype=complex),
    )
    return PreparationSet(mats), MeasurementSet(mats, completeness_group=(0, 1))


@dataclasses.dataclass(frozen=True)
class Experiment:
    """Index lists describing one experiment.

    State/effect experiments at step ``k`` have ``len(alpha) == len(beta) == k + 1``
    and empty ``x``. Instrument experiments have a single initial state
    ``alpha = (α,)``, instrument choices ``x`` for gaps ``0..k-1`` and a single
    final effect ``beta = (β,)``.
    """

    alpha: tuple
    beta: tuple
    x: tuple = ()

    def __post_init__(self):
        for name in ("alpha", "beta", "x"):
            object.__setattr__(self, name, tuple(int(i) for i in getattr(self, name)))
        if self.x or len(self.alpha) == 1 and len(self.beta) == 1:
            ok = len(self.alpha) == 1 and len(self.beta) == 1
        else:
            ok = len(self.alpha) == len(self.beta) and len(self.alpha) >= 1
        if not ok:
            raise BadDesign(f"inconsistent index lists alpha={self.alpha} beta={self.beta} x={self.x}")

    @property
    def step(self):
        return len(self.x) if self.x else len(self.beta) - 1

    def to_dict(self):
        d = {"alpha": list(self.alpha), "beta": list(self.beta)}
        if self.x:
            d["x"] = list(self.x)
        return d


@dataclasses.dataclass(frozen=True)
class ExperimentRecord:
    """Observed data for one experiment: an exact probability or counts out of shots."""

    experiment: Experiment
    prob: float | None = None
    counts: int | None = None
    shots: int | None = None

    def __post_init__(self):
        if self.prob is None:
            if self.counts is None or self.shots is None or not 0 <= self.counts <= self.shots or self.shots < 1:
                raise BadDesign("a record needs prob, or counts with 0 <= counts <= shots")
        elif not 0.0 <= self.prob <= 1.0:
            raise BadDesign(f"probability {self.prob} outside [0, 1]")

    @property
    def target(self):
        return self.prob if self.prob is not None else self.counts / self.shots

    @property
    def step(self):
        return self.experiment.step

    def to_dict(self):
        d = self.experiment.to_dict()
        if self.prob is not None:
            d["prob"] = self.prob
        else:
            d["counts"] = int(self.counts)
            d["shots"] = int(self.shots)
        return d

    @classmethod
    def from_dict(cls, d):
        exp = Experiment(d["alpha"], d["beta"], d.get("x", ()))
        if "prob" in d:
            return cls(exp, prob=float(d["prob"]))
        return cls(exp, counts=int(d["counts"]), shots=int(d["shots"]))


class ExperimentSetup:
    """Preparations, measurements and (optionally) gap instruments per time step.

    Each argument may be a single set, reused at every step, or a sequence
    indexed by step (instruments: by gap).
    """

    def __init__(self, preps, meas, instruments=None):
        self._preps = preps
        self._meas = meas
        self._instruments = instruments

    @staticmethod
    def _pick(obj, i):
        if isinstance(obj, (list, tuple)):
            if i >= len(obj):
                raise BadIndex(f"no set provided for step {i}")
            return obj[i]
        return obj

    @property
    def uses_instruments(self):
        return self._instruments is not None

    def prep(self, k) -> PreparationSet:
        return self._pick(self._preps, k)

    def meas(self, k) -> MeasurementSet:
        return self._pick(self._meas, k)

    def instruments(self, t) -> InstrumentSet:
        if self._instruments is None:
            raise BadDesign("setup has no instruments")
        return self._pick(self._instruments, t)

    def initial_state(self, exp):
        return self.prep(0)[exp.alpha[0]]

    def gap_xi(self, t, exp):
        """ξ operator applied between steps ``t`` and ``t + 1``."""
        if exp.x:
            return self.instruments(t)[exp.x[t]]
        return np.kron(self.prep(t + 1)[exp.alpha[t + 1]], self.meas(t)[exp.beta[t]])

    def final_effect(self, k, exp):
        return self.meas(k)[exp.beta[-1]]

    @staticmethod
    def prefix_key(t, exp):
        """Indices ``η^(t)`` depends on."""
        if exp.x:
            return (t, exp.alpha[:1], (), exp.x[: t + 1])
        return (t, exp.alpha[: t + 2], exp.beta[: t + 1], ())

    def validate(self, exp):
        k = exp.step
        try:
            if exp.x:
                self.prep(0)[exp.alpha[0]]
                for t, xt in enumerate(exp.x):
                    self.instruments(t)[xt]
            else:
                for t, (a, b) in enumerate(zip(exp.alpha, exp.beta)):
                    self.prep(t)[a]
                    self.meas(t)[b]
            self.meas(k)[exp.beta[-1]]
        except IndexError as exc:
            raise BadDesign(f"experiment {exp} has an index out of range") from exc


class TempStateCache(dict):
    """Memo of temporary states keyed by :meth:`ExperimentSetup.prefix_key`."""


def _gap_propagate(v, eta, xi, d_o):
    # Tr_o[(ξ ⊗ I_A)(I_i ⊗ V η V^†)] on H_i ⊗ H_A
    y = v @ eta @ dagger(v)
    d_a = y.shape[0] // d_o
    d_i = xi.shape[0] // d_o
    yt = y.reshape(d_o, d_a, d_o, d_a)
    xt = xi.reshape(d_i, d_o, d_i, d_o)
    out = np.einsum("ipjq,qapb->iajb", xt, yt).reshape(d_i * d_a, d_i * d_a)
    return 0.5 * (out + dagger(out))


def temp_state(prefix, setup, exp, t, cache=None):
    """Temporary state ``η^(t)`` of ``exp`` through the isometries ``prefix``.

    ``t = -1`` returns the initial preparation. ``prefix`` must contain at
    least ``t + 1`` isometries.
    """
    if t < -1:
        raise BadIndex("t must be >= -1")
    if t + 1 > len(prefix):
        raise BadIndex(f"η^({t}) needs {t + 1} isometries, got {len(prefix)}")
    if t == -1:
        return setup.initial_state(exp)
    key = setup.prefix_key(t, exp)
    if cache is not None and key in cache:
        return cache[key]
    prev = temp_state(prefix, setup, exp, t - 1, cache)
    v = prefix[t]
    if v.shape[1] != prev.shape[0]:
        raise DimensionMismatch(f"isometry {t} of shape {v.shape} cannot act on η of dim {prev.shape[0]}")
    eta = _gap_propagate(v, prev, setup.gap_xi(t, exp), setup.meas(t).dim)
    if cache is not None:
        cache[key] = eta
    return eta


def instrument_temp_state(prefix, initial_state, xis, out_dims):
    """``η^(t)`` for an explicit list of ξ operators (one per applied isometry)."""
    eta = as_matrix(initial_state)
    for v, xi, d_o in zip(prefix, xis, out_dims):
        eta = _gap_propagate(v, eta, xi, d_o)
    return eta


def recovered_probability(w, eta, effect):
    """``Tr[(E ⊗ I_A) W η W^†]``; the ancilla dimension is inferred from the shapes."""
    w = as_matrix(w)
    effect = as_matrix(effect)
    d_o = effect.shape[0]
    if w.shape[0] % d_o or eta.shape[0] != w.shape[1]:
        raise DimensionMismatch("effect, isometry and temporary state do not fit together")
    d_a = w.shape[0] // d_o
    y = (w @ eta @ dagger(w)).reshape(d_o, d_a, d_o, d_a)
    return float(np.einsum("ji,iaja->", effect, y).real)


def instrument_probability(w, eta, xi, out_dim=None):
    """``Tr[ξ W η W^†]`` for an instrument applied after the last isometry.

    For the NISQ-style last step pass an effect through
    :func:`recovered_probability` instead.
    """
    xi = as_matrix(xi)
    if out_dim is None:
        out_dim = int(round(np.sqrt(xi.shape[0])))
    w = as_matrix(w)
    if xi.shape[0] % out_dim or w.shape[0] % out_dim:
        raise DimensionMismatch("ξ and isometry dimensions are incompatible")
    return float(np.trace(_gap_propagate(w, eta, xi, out_dim)).real)


def experiment_probability(comb, setup, exp, cache=None):
    """Probability of ``exp`` when the comb's first ``step + 1`` steps are probed."""
    k = exp.step
    if k >= comb.steps:
        raise BadDesign(f"experiment at step {k} on a {comb.steps}-step comb")
    eta = temp_state(comb.isometries, setup, exp, k - 1, cache)
    return recovered_probability(comb.isometries[k], eta, setup.final_effect(k, exp))


def simulate_experiments(truth, setup, design, shots=None, seed=None):
    """Records for ``design`` generated by the comb ``truth``.

    ``shots=None`` (or ``inf``) stores exact probabilities; otherwise each
    experiment gets an independent binomial count ``Bin(shots, p)`` from one
    generator seeded by ``seed`` (an int or ``numpy.random.Generator``).
    """
    exact = shots is None or (isinstance(shots, float) and np.isinf(shots))
    if not exact and int(shots) < 1:
        raise BadDesign("shots must be >= 1")
    rng = np.random.default_rng(seed)
    cache = TempStateCache()
    records = []
    for exp in design:
        setup.validate(exp)
        p = min(max(experiment_probability(truth, setup, exp, cache), 0.0), 1.0)
        if exact:
            records.append(ExperimentRecord(exp, prob=p))
        else:
            n = int(shots)
            records.append(ExperimentRecord(exp, counts=int(rng.binomial(n, p)), shots=n))
    return records


class _SpanTracker:
    """Greedy linear-independence filter on vectorised matrices."""

    def __init__(self, tol=RANK_TOL):
        self.tol = tol
        self.basis = []
        self.scale = 0.0

    def offer(self, m):
        v = np.asarray(m, dtype=complex).ravel()
        norm = np.linalg.norm(v)
        if norm == 0:
            return False
        self.scale = max(self.scale, norm)
        r = v.copy()
        for _ in range(2):
            for b in self.basis:
                r -= np.vdot(b, r) * b
        rn = np.linalg.norm(r)
        if rn <= self.tol * self.scale:
            return False
        self.basis.append(r / rn)
        return True

    @property
    def rank(self):
        return len(self.basis)


def _extensions(setup, k, prev):
    # Candidate prefixes for step k built from a selected prefix at step k - 1.
    if setup.uses_instruments:
        for xk in range(len(setup.instruments(k - 1))):
            yield Experiment(prev.alpha, (0,), prev.x + (xk,))
    else:
        for a in range(len(setup.prep(k))):
            for b in range(len(setup.meas(k - 1))):
                yield Experiment(prev.alpha + (a,), prev.beta[:-1] + (b, 0))


def _select_prefixes(prefix, setup, k, cache, tol):
    """Prefixes (final effect index left as a placeholder) whose η^(k-1) span the target space."""
    selected = None
    for step in range(k + 1):
        d_in = setup.prep(step).dim if (step == 0 or not setup.uses_instruments) else setup.instruments(step - 1).in_dim
        d_anc = 1 if step == 0 else prefix[step - 1].shape[0] // setup.meas(step - 1).dim
        target = d_in**2 * d_anc**2
        if step == 0:
            cands = (Experiment((a,), (0,)) for a in range(len(setup.prep(0))))
        else:
            cands = (c for p in selected for c in _extensions(setup, step, p))
        tracker = _SpanTracker(tol)
        chosen = []
        for c in cands:
            if tracker.offer(temp_state(prefix, setup, c, step - 1, cache)):
                chosen.append(c)
                if tracker.rank == target:
                    break
        if tracker.rank < target:
            raise RankDeficientDesign(
                f"step {step}: temporary states reach rank {tracker.rank} < {target}",
                step=step,
                rank=tracker.rank,
                target=target,
            )
        selected = chosen
    return selected


def design_experiments(prefix, setup, k, cache=None, tol=RANK_TOL):
    """Experiments for recovering ``V_k`` given the isometries ``prefix = [V_0..V_{k-1}]``.

    Prefixes are extended in lexicographic order of the new indices and kept
    only when they raise the rank of the temporary-state collection, until it
    reaches ``d_{i_k}^2 d_{A_k}^2``. Each kept prefix is then paired with every
    effect of the step-``k`` measurement set.

    Raises:
        RankDeficientDesign: if the sets cannot reach the target rank.
    """
    if len(prefix) < k:
        raise BadIndex(f"need {k} known isometries, got {len(prefix)}")
    cache = TempStateCache() if cache is None else cache
    selected = _select_prefixes(prefix, setup, k, cache, tol)
    design = []
    for p in selected:
        for b in range(len(setup.meas(k))):
            if p.x or setup.uses_instruments and k > 0:
                design.append(Experiment(p.alpha, (b,), p.x))
            else:
                design.append(Experiment(p.alpha, p.beta[:-1] + (b,)))
    return design


class StepCost:
    """``F(W) = Σ_n (Tr[(E_n ⊗ I) W η_n W^†] - p_n)^2`` and its gradient ``∂F/∂W*``.

    Terms sharing an effect are grouped so one evaluation costs a handful of
    small matrix products per distinct effect.
    """

    def __init__(self, targets, etas, effects, anc_dim):
        targets = np.asarray(targets, dtype=float)
        etas = np.asarray(etas, dtype=complex)
        if len(targets) != len(etas) or len(effects) != len(targets):
            raise Misalignment("targets, temporary states and effects must align")
        self.targets = targets
        self.etas = etas
        uniq, index = [], []
        for e in effects:
            e = as_matrix(e)
            for j, u in enumerate(uniq):
                if u.shape == e.shape and np.array_equal(u, e):
                    index.append(j)
                    break
            else:
                uniq.append(e)
                index.append(len(uniq) - 1)
        index = np.asarray(index)
        eye = np.eye(anc_dim)
        self.lifted = [np.kron(e, eye) for e in uniq]
        self.groups = [np.flatnonzero(index == j) for j in range(len(uniq))]
        self._eta_t = [np.ascontiguousarray(np.swapaxes(etas[g], 1, 2)).reshape(len(g), -1) for g in self.groups]
        self._eta_g = [etas[g] for g in self.groups]

    def probabilities(self, w):
        p = np.empty(len(self.targets))
        for lifted, g, eta_t in zip(self.lifted, self.groups, self._eta_t):
            q = dagger(w) @ (lifted @ w)
            p[g] = (eta_t @ q.ravel()).real
        return p

    def __call__(self, w):
        cost = 0.0
        grad = np.zeros_like(w, dtype=complex)
        for lifted, g, eta_t, eta_g in zip(self.lifted, self.groups, self._eta_t, self._eta_g):
            ew = lifted @ w
            p = (eta_t @ (dagger(w) @ ew).ravel()).real
            res = p - self.targets[g]
            cost += float(res @ res)
            s = np.tensordot(2.0 * res, eta_g, axes=1)
            grad += ew @ s
        return cost, grad


def cost_and_gradient(w, targets, etas, effects):
    """Cost and Wirtinger gradient for one step; see :class:`StepCost`.

    ``targets`` may be plain probabilities or :class:`ExperimentRecord` objects.
    """
    w = as_matrix(w)
    targets = [t.target if isinstance(t, ExperimentRecord) else t for t in targets]
    d_o = as_matrix(effects[0]).shape[0] if len(effects) else 1
    return StepCost(targets, etas, effects, w.shape[0] // d_o)(w)


@dataclasses.dataclass
class RecoveryResult:
    isometry: np.ndarray
    final_cost: float
    iterations: int
    grad_norm: float
    trace: list
    restart_costs: list


def recover_isometry(cost, shape, cfg=None, n_restarts=3, seed=None):
    """Best of ``n_restarts`` Stiefel-ADAM runs from random isometries of ``shape``."""
    cfg = cfg or OptimizerConfig()
    rng = np.random.default_rng(seed)
    best = None
    costs = []
    for _ in range(max(1, n_restarts)):
        x0 = random_isometry(shape[0], shape[1], rng)
        res = optimize(x0, cost, cfg)
        costs.append(res.cost)
        if best is None or res.cost < best.cost:
            best = res
    _, grad = cost(best.x)
    return RecoveryResult(
        isometry=best.x,
        final_cost=best.cost,
        iterations=best.iterations,
        grad_norm=riemannian_grad_norm(best.x, grad),
        trace=best.trace,
        restart_costs=costs,
    )


@dataclasses.dataclass
class StepReport:
    step: int
    design_size: int
    design_rank: int
    final_cost: float
    grad_norm: float
    iterations: int
    elapsed_ms: float

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclasses.dataclass
class IqctResult:
    comb: QuantumComb
    reports: list
    records: list
    truncated: list  # truncated[k] is the recovered (k + 1)-step comb


def _model_dims(setup, steps, anc_dims):
    in_dims, out_dims = [], []
    for k in range(steps):
        if k > 0 and setup.uses_instruments:
            in_dims.append(setup.instruments(k - 1).in_dim)
        else:
            in_dims.append(setup.prep(k).dim)
        out_dims.append(setup.meas(k).dim)
    return CombDims.from_lists(in_dims, out_dims, anc_dims)


def iqct_run(setup, anc_dims, truth=None, records=None, shots=None, cfg=None, n_restarts=3, seed=0, steps=None):
    """Recover a comb step by step.

    Data come either from a ``truth`` comb, simulated on designs chosen from
    the isometries recovered so far, or from a list of ``records`` covering
    every step.

    Args:
        setup: :class:`ExperimentSetup`.
        anc_dims: model ancilla dimensions ``[d_A1 .. d_AN]`` (a leading 1 is optional).
        truth: comb to probe, or ``None`` when ``records`` are given.
        records: pre-recorded :class:`ExperimentRecord` list.
        shots: finite-shot sampling when probing ``truth``; ``None`` is exact.
        cfg: :class:`OptimizerConfig`.
        n_restarts: random initialisations per step.
        seed: seeds both the sampling and the initialisations.
        steps: number of steps to recover; defaults to the truth's or the records'.

    Raises:
        RankDeficientDesign: when a step's temporary states cannot reach the
            required rank.
    """
    if (truth is None) == (records is None):
        raise BadDesign("provide exactly one of truth or records")
    if steps is None:
        steps = truth.steps if truth is not None else 1 + max(r.step for r in records)
    dims = _model_dims(setup, steps, anc_dims)
    cfg = cfg or OptimizerConfig()
    root = np.random.SeedSequence(seed)
    sim_seq, opt_seq = root.spawn(2)
    sim_rng = np.random.default_rng(sim_seq)
    opt_seeds = opt_seq.spawn(steps)

    cache = TempStateCache()
    recovered, reports, all_records, truncated = [], [], [], []
    for k in range(steps):
        t0 = time.perf_counter()
        d_anc = dims.anc_dims[k]
        target = dims.in_dims[k] ** 2 * d_anc**2
        if truth is not None:
            design = design_experiments(recovered, setup, k, cache)
            step_records = simulate_experiments(truth, setup, design, shots, sim_rng)
        else:
            step_records = [r for r in records if r.step == k]
            if not step_records:
                raise RankDeficientDesign(f"no records for step {k}", step=k, rank=0, target=target)
        for r in step_records:
            setup.validate(r.experiment)
        etas = [temp_state(recovered, setup, r.experiment, k - 1, cache) for r in step_records]
        rank = numerical_rank(etas, RANK_TOL)
        if rank < target:
            raise RankDeficientDesign(f"step {k}: records reach rank {rank} < {target}", step=k, rank=rank, target=target)
        effects = [setup.final_effect(k, r.experiment) for r in step_records]
        cost = StepCost([r.target for r in step_records], etas, effects, dims.anc_dims[k + 1])
        res = recover_isometry(cost, dims.shape(k), cfg, n_restarts, np.random.default_rng(opt_seeds[k]))
        recovered.append(res.isometry)
        elapsed = 1000.0 * (time.perf_counter() - t0)
        reports.append(
            StepReport(
                step=k,
                design_size=len(step_records),
                design_rank=rank,
                final_cost=res.final_cost,
                grad_norm=res.grad_norm,
                iterations=res.iterations,
                elapsed_ms=elapsed,
            )
        )
        log.info("step %d: cost=%.3e, grad_norm=%.3e, time=%.1f ms", k, res.final_cost, res.grad_norm, elapsed)
        all_records.extend(step_records)
        truncated.append(QuantumComb(dims.truncated(k + 1), tuple(recovered)))
    return IqctResult(comb=truncated[-1], reports=reports, records=all_records, truncated=truncated)


def relative_cost(comb_a, comb_b, setup, design):
    """``Σ (p_a - p_b)^2`` over the designed experiments."""
    if comb_a.dims.in_dims != comb_b.dims.in_dims or comb_a.dims.out_dims != comb_b.dims.out_dims:
        raise DimensionMismatch("combs differ in their input/output dimensions")
    ca, cb = TempStateCache(), TempStateCache()
    total = 0.0
    for exp in design:
        diff = experiment_probability(comb_a, setup, exp, ca) - experiment_probability(comb_b, setup, exp, cb)
        total += diff * diff
    return total


def full_design(setup, steps):
    """Every state/effect experiment up to ``steps`` (exhaustive, for small systems)."""
    design = []
    for k in range(steps):
        grids = [range(len(setup.prep(t))) for t in range(k + 1)]
        bgrids = [range(len(setup.meas(t))) for t in range(k + 1)]
        for a in np.ndindex(*[len(g) for g in grids]):
            for b in np.ndindex(*[len(g) for g in bgrids]):
                design.append(Experiment(a, b))
    return design


def minimal_anc_dims(dims, rank):
    """Model ancilla dims with the last one lowered to ``rank`` where the isometry still exists."""
    anc = list(dims.anc_dims)
    k = dims.steps - 1
    need = -(-dims.in_dims[k] * anc[k] // dims.out_dims[k])
    anc[-1] = max(int(rank), need)
    return CombDims(dims.in_dims, dims.out_dims, tuple(anc))
