"""Optimizer step orchestration, memory accounting and checkpointing.

Three modes share one step routine:

* ``adam``           full-space Adam (no projection, no history)
* ``galore``         low-rank projection + Adam in the subspace
* ``natural-galore`` galore plus the inverse empirical Fisher transform
"""

import io
import json
import zipfile
from dataclasses import dataclass, field, asdict

import numpy as np

from . import adam as adam_mod
from . import natgrad
from . import projector as proj_mod
from .errors import CheckpointError, DimensionError, NumericalError

MODES = ("adam", "galore", "natural-galore")
CHECKPOINT_VERSION = 1


@dataclass
class OptimizerConfig:
    mode: str = "natural-galore"
    lr: float = 1e-3
    rank: int = 4
    refresh_period: int = proj_mod.DEFAULT_REFRESH_PERIOD
    lam: float = natgrad.DEFAULT_LAMBDA
    history: int = natgrad.DEFAULT_WINDOW
    alpha: float = 1.0
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    bias_correction: bool = True
    eps_inside_sqrt: bool = True
    min_dim_for_projection: int = 2
    clear_history_on_refresh: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise DimensionError(f"unknown mode {self.mode!r}")
        if self.lr < 0:
            # lr == 0 is allowed: a no-op optimizer is useful in tests
            raise DimensionError("lr must be >= 0")
        if self.rank < 1:
            raise DimensionError("rank must be >= 1")
        if self.alpha < 0:
            raise DimensionError("alpha must be >= 0")


@dataclass
class ParamSlot:
    name: str
    theta: np.ndarray = field(repr=False)
    projector: proj_mod.Projector | None
    history: natgrad.GradHistory | None
    adam: adam_mod.AdamState


def init_slots(params, config):
    """Build one slot per named parameter matrix.

    Parameters whose smaller dimension is below
    ``min_dim_for_projection`` stay in full space (full Adam) even in
    the low-rank modes. The rank is clamped to min(n, m).
    """
    slots = []
    seen = set()
    for name, theta in params.items():
        if name in seen:
            raise DimensionError(f"duplicate slot name {name!r}")
        seen.add(name)
        theta = np.array(theta, dtype=np.float64, copy=True)
        if theta.ndim != 2:
            raise DimensionError(f"parameter {name!r} must be 2-D, got shape {theta.shape}")
        n, m = theta.shape
        project = config.mode != "adam" and min(n, m) >= config.min_dim_for_projection
        p = None
        hist = None
        if project:
            rank = min(config.rank, n, m)
            p = proj_mod.Projector(
                side=proj_mod.pick_side(n, m),
                rank=rank,
                refresh_period=config.refresh_period,
            )
            shape = proj_mod.projected_shape(p, n, m)
            if config.mode == "natural-galore":
                hist = natgrad.GradHistory(capacity=config.history, lam=config.lam)
        else:
            shape = (n, m)
        state = adam_mod.init_adam(
            shape,
            beta1=config.beta1,
            beta2=config.beta2,
            epsilon=config.epsilon,
            bias_correction=config.bias_correction,
            eps_inside_sqrt=config.eps_inside_sqrt,
        )
        slots.append(ParamSlot(name=name, theta=theta, projector=p, history=hist, adam=state))
    return slots


def step(slots, grads, config, step_index):
    """Apply one optimizer step to every slot, in place."""
    for slot in slots:
        if slot.name not in grads:
            raise DimensionError(f"missing gradient for slot {slot.name!r}")
        grad = grads[slot.name]
        if grad.shape != slot.theta.shape:
            raise DimensionError(
                f"gradient shape {grad.shape} does not match parameter "
                f"{slot.name!r} of shape {slot.theta.shape}"
            )
        if not np.all(np.isfinite(grad)):
            raise NumericalError(f"non-finite gradient for slot {slot.name!r} at step {step_index}")
        if slot.projector is not None:
            p = slot.projector
            if proj_mod.should_refresh(p, step_index):
                proj_mod.refresh(p, grad, step_index)
                if slot.history is not None and config.clear_history_on_refresh:
                    natgrad.reset(slot.history)
            g = proj_mod.project(p, grad)
            if slot.history is not None:
                natgrad.push(slot.history, g)
                g = natgrad.apply_inverse_fim(slot.history, g)
        else:
            g = grad
        u, _ = adam_mod.adam_update(slot.adam, g, slot_name=slot.name)
        if slot.projector is not None:
            u = proj_mod.project_back(slot.projector, u)
        slot.theta -= config.lr * config.alpha * u
        if config.weight_decay > 0:
            adam_mod.apply_weight_decay(slot.theta, config.weight_decay, config.lr)
    return slots


# ---------------------------------------------------------------------------
# memory accounting


@dataclass
class SlotMemory:
    parameters: int
    gradient: int
    projector_factor: int
    adam_moments: int
    grad_history: int

    @property
    def optimizer_state(self):
        return self.projector_factor + self.adam_moments + self.grad_history

    @property
    def total(self):
        return self.parameters + self.gradient + self.optimizer_state


@dataclass
class MemoryReport:
    slots: dict  # name -> SlotMemory
    baseline_moments: int  # full-space Adam moments (2 n m per slot)

    @property
    def totals(self):
        agg = SlotMemory(0, 0, 0, 0, 0)
        for sm in self.slots.values():
            agg.parameters += sm.parameters
            agg.gradient += sm.gradient
            agg.projector_factor += sm.projector_factor
            agg.adam_moments += sm.adam_moments
            agg.grad_history += sm.grad_history
        return agg

    @property
    def moment_ratio(self):
        return self.totals.adam_moments / self.baseline_moments

    @property
    def state_ratio(self):
        """Optimizer state (factor + moments + history) vs full Adam moments."""
        return self.totals.optimizer_state / self.baseline_moments

    def to_text(self, widths=(2, 4)):
        lines = []
        for name, sm in sorted(self.slots.items()):
            for k, v in _memory_fields(sm).items():
                lines.append(f"{name}.{k}={v}")
        tot = self.totals
        for k, v in _memory_fields(tot).items():
            lines.append(f"total.{k}={v}")
        lines.append(f"baseline.adam_moments={self.baseline_moments}")
        lines.append(f"ratio.moments={self.moment_ratio:.6g}")
        lines.append(f"ratio.optimizer_state={self.state_ratio:.6g}")
        for w in widths:
            lines.append(f"bytes.total_at_{w}B={tot.total * w}")
            lines.append(f"bytes.optimizer_state_at_{w}B={tot.optimizer_state * w}")
        return "\n".join(lines) + "\n"


def _memory_fields(sm):
    return {
        "parameters": sm.parameters,
        "gradient": sm.gradient,
        "projector_factor": sm.projector_factor,
        "adam_moments": sm.adam_moments,
        "grad_history": sm.grad_history,
        "optimizer_state": sm.optimizer_state,
        "total": sm.total,
    }


def memory_report(slots, config):
    """Element counts per state category, straight from the live arrays."""
    per_slot = {}
    baseline = 0
    for slot in slots:
        n, m = slot.theta.shape
        if slot.projector is not None:
            p = slot.projector
            factor = (n if p.side == "left" else m) * p.rank
            grad_elems = int(np.prod(proj_mod.projected_shape(p, n, m)))
        else:
            factor = 0
            grad_elems = n * m
        hist = 0
        if slot.history is not None:
            hist = slot.history.capacity * grad_elems
        per_slot[slot.name] = SlotMemory(
            parameters=n * m,
            gradient=grad_elems,
            projector_factor=factor,
            adam_moments=slot.adam.m.size + slot.adam.v.size,
            grad_history=hist,
        )
        baseline += 2 * n * m
    return MemoryReport(slots=per_slot, baseline_moments=baseline)


def live_element_count(slots):
    """Actual elements held by slot arrays; the oracle for memory_report."""
    total = 0
    for slot in slots:
        total += slot.theta.size
        total += slot.adam.m.size + slot.adam.v.size
        if slot.projector is not None and slot.projector.factor is not None:
            total += slot.projector.factor.size
        if slot.history is not None and slot.history._buf is not None:
            total += slot.history._buf.size
    return total


# ---------------------------------------------------------------------------
# checkpoints


def checkpoint_save(slots, config, path, step_index=0):
    """Write a versioned binary checkpoint (zip of little-endian npy arrays)."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "step_index": step_index,
        "config": asdict(config),
        "slots": [],
    }
    arrays = {}
    for i, slot in enumerate(slots):
        rec = {
            "name": slot.name,
            "adam_step_count": slot.adam.step_count,
            "projector": None,
            "history": None,
        }
        arrays[f"slot{i}.theta"] = slot.theta
        arrays[f"slot{i}.m"] = slot.adam.m
        arrays[f"slot{i}.v"] = slot.adam.v
        if slot.projector is not None:
            p = slot.projector
            rec["projector"] = {
                "side": p.side,
                "rank": p.rank,
                "refresh_period": p.refresh_period,
                "last_refresh_step": p.last_refresh_step,
                "initialized": p.initialized,
            }
            if p.initialized:
                arrays[f"slot{i}.factor"] = p.factor
        if slot.history is not None:
            h = slot.history
            rec["history"] = {"capacity": h.capacity, "lam": h.lam, "count": h.count}
            if h.count > 0:
                arrays[f"slot{i}.history"] = natgrad.columns(h)
        meta["slots"].append(rec)
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
        zf.writestr("meta.json", json.dumps(meta))
        for key, arr in arrays.items():
            buf = io.BytesIO()
            np.save(buf, np.ascontiguousarray(arr, dtype="<f8"))
            zf.writestr(key + ".npy", buf.getvalue())


def checkpoint_load(path):
    """Restore ``(slots, config, step_index)`` from checkpoint_save output."""
    try:
        with zipfile.ZipFile(path, "r") as zf:
            meta = json.loads(zf.read("meta.json"))
            arrays = {}
            for info in zf.namelist():
                if info.endswith(".npy"):
                    arrays[info[: -len(".npy")]] = np.load(io.BytesIO(zf.read(info)))
    except (OSError, ValueError, KeyError, zipfile.BadZipFile) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if meta.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {meta.get('version')!r}, "
            f"expected {CHECKPOINT_VERSION}"
        )
    config = OptimizerConfig(**meta["config"])
    slots = []
    for i, rec in enumerate(meta["slots"]):
        theta = arrays[f"slot{i}.theta"]
        state = adam_mod.init_adam(
            theta.shape,  # placeholder, replaced below
        )
        state.m = arrays[f"slot{i}.m"]
        state.v = arrays[f"slot{i}.v"]
        state.step_count = rec["adam_step_count"]
        state.beta1 = config.beta1
        state.beta2 = config.beta2
        state.epsilon = config.epsilon
        state.bias_correction = config.bias_correction
        state.eps_inside_sqrt = config.eps_inside_sqrt
        p = None
        if rec["projector"] is not None:
            pr = rec["projector"]
            p = proj_mod.Projector(
                side=pr["side"],
                rank=pr["rank"],
                refresh_period=pr["refresh_period"],
                last_refresh_step=pr["last_refresh_step"],
            )
            if pr["initialized"]:
                p.factor = arrays[f"slot{i}.factor"]
        hist = None
        if rec["history"] is not None:
            hr = rec["history"]
            hist = natgrad.GradHistory(capacity=hr["capacity"], lam=hr["lam"])
            key = f"slot{i}.history"
            if key in arrays:
                for col in arrays[key].T:
                    natgrad.push(hist, col)
        slots.append(ParamSlot(name=rec["name"], theta=theta, projector=p,
                               history=hist, adam=state))
    return slots, config, meta["step_index"]
