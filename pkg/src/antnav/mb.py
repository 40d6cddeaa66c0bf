"""Mushroom-body associative network: sparse expansion coding, a lateralized
two-unit readout, collision/escape-gated synaptic depression, and three-tier
memory consolidation (short / intermediate / long term).

The fixed input expansion is a binary sparse matrix stored as per-cell index
lists; the plastic output weights are represented by three nonnegative
depression layers so that the effective weight is
``W1 = 1 - (ltm + itm + stm)`` elementwise, which keeps the bookkeeping
identity between the layers and the learned state exact by construction.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Literal, NamedTuple

import numpy as np

Side = Literal["left", "right"]
SIDES: tuple[Side, Side] = ("left", "right")
_SIDE_INDEX = {"left": 0, "right": 1}

CONSOLIDATION_MODES = ("selective", "excessive", "checkpoint")


def opposite(side: Side) -> Side:
    return "right" if side == "left" else "left"


class MBONOutput(NamedTuple):
    z_left: float
    z_right: float


@dataclass(frozen=True)
class MBParams:
    n_pn: int = 1089
    n_kc: int = 32000
    k: int = 320
    alpha: float = 0.5  # depression rate per reinforcement event
    tau_e: int = 3  # eligibility delay in frames (punishment looks this far back)
    fan_in: int = 10  # input connections per expansion cell
    seed: int = 7

    def __post_init__(self):
        if not 0 < self.k < self.n_kc:
            raise ValueError("k must satisfy 0 < k < n_kc")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must be in (0, 1]")
        if self.tau_e < 0:
            raise ValueError("tau_e must be >= 0")
        if self.fan_in > self.n_pn:
            raise ValueError("fan_in > n_pn")
        if self.fan_in < 1:
            raise ValueError("fan_in must be >= 1")


@lru_cache(maxsize=8)
def _sparse_projection(n_pn: int, n_kc: int, fan_in: int, seed: int) -> np.ndarray:
    """Fixed random expansion wiring: (n_kc, fan_in) distinct input indices per row."""
    rng = np.random.default_rng(seed)
    if fan_in == n_pn:
        idx = np.tile(np.arange(n_pn), (n_kc, 1))
    elif 3 * fan_in > n_pn:
        # dense draw; only reasonable for small test-sized networks
        idx = np.argsort(rng.random((n_kc, n_pn)), axis=1)[:, :fan_in]
    else:
        idx = rng.integers(0, n_pn, size=(n_kc, fan_in))
        while True:
            s = np.sort(idx, axis=1)
            dup = (s[:, 1:] == s[:, :-1]).any(axis=1)
            if not dup.any():
                break
            idx[dup] = rng.integers(0, n_pn, size=(int(dup.sum()), fan_in))
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    idx.flags.writeable = False
    return idx


class MushroomBody:
    """One plastic memory instance, owned by a single episode runner."""

    def __init__(self, params: MBParams | None = None):
        self.params = params or MBParams()
        p = self.params
        self.w0_idx = _sparse_projection(p.n_pn, p.n_kc, p.fan_in, p.seed)
        self.d_stm = np.zeros((2, p.n_kc))
        self.d_itm = np.zeros((2, p.n_kc))
        self.d_ltm = np.zeros((2, p.n_kc))
        # ring buffer of (active set, touched-row weight snapshot) per frame
        self._eligibility: deque[tuple[np.ndarray, np.ndarray]] = deque(maxlen=p.tau_e + 1)
        self.checkpoints: list[tuple[float, dict[str, np.ndarray]]] = []

    # -- readout path -------------------------------------------------------

    def encode(self, pn: np.ndarray) -> np.ndarray:
        """k-winners-take-all sparse code: sorted indices of the k most driven
        cells, ties broken toward the lowest index."""
        pn = np.asarray(pn, dtype=float)
        if pn.shape != (self.params.n_pn,):
            raise ValueError(f"expected input vector of length {self.params.n_pn}")
        scores = pn[self.w0_idx].sum(axis=1)
        k = self.params.k
        thresh = np.partition(scores, scores.size - k)[scores.size - k]
        active = np.flatnonzero(scores > thresh)
        short = k - active.size
        if short:
            at_thresh = np.flatnonzero(scores == thresh)[:short]
            active = np.concatenate([active, at_thresh])
        return np.sort(active)

    def _w1_at(self, kc: np.ndarray) -> np.ndarray:
        """(2, k) effective weights of both output rows at the active cells."""
        return 1.0 - (self.d_stm[:, kc] + self.d_itm[:, kc] + self.d_ltm[:, kc])

    def read_out(self, kc: np.ndarray) -> MBONOutput:
        z = self._w1_at(kc).sum(axis=1) / self.params.k
        return MBONOutput(float(z[0]), float(z[1]))

    def record(self, kc: np.ndarray) -> None:
        """Push the current frame onto the eligibility buffer (call once per frame,
        before any reinforcement for that frame)."""
        self._eligibility.append((kc, self._w1_at(kc)))

    # -- learning -----------------------------------------------------------

    def punish(self, side: Side) -> None:
        """Depress the collision-side row against the view seen tau_e frames ago.

        The decrement is alpha times the snapshot weight from the buffered
        frame, clamped so the live weight never drops below zero.
        """
        if not self._eligibility:
            raise RuntimeError("punish called before any frame was recorded")
        kc, snap = self._eligibility[0]  # oldest available ~= t - tau_e
        i = _SIDE_INDEX[side]
        dec = self.params.alpha * snap[i]
        live = 1.0 - (self.d_stm[i, kc] + self.d_itm[i, kc] + self.d_ltm[i, kc])
        np.minimum(dec, live, out=dec)
        self.d_stm[i, kc] += dec

    def reward(self, side: Side, kc: np.ndarray) -> None:
        """Depress `side` against the current view (the post-escape release frame).

        Callers pass the side opposite the original collision; no eligibility
        delay applies on this path.
        """
        i = _SIDE_INDEX[side]
        live = 1.0 - (self.d_stm[i, kc] + self.d_itm[i, kc] + self.d_ltm[i, kc])
        self.d_stm[i, kc] += self.params.alpha * live

    # -- consolidation ------------------------------------------------------

    def end_trial(self, spl_this_trial: float, best_spl_so_far: float, mode: str = "selective") -> bool:
        """Shift the memory tiers at a trial boundary.

        selective: fold ITM into LTM only when the trial improved on the best
        SPL so far; excessive: fold unconditionally; checkpoint: selective
        dynamics plus a full state snapshot for later restore-best.  Always
        ends with ITM <- STM, STM <- 0.  Returns True when LTM actually changed.
        """
        if mode not in CONSOLIDATION_MODES:
            raise ValueError(f"unknown consolidation mode {mode!r}")
        if mode == "checkpoint":
            self.checkpoints.append((spl_this_trial, self._snapshot()))
        improved = spl_this_trial > best_spl_so_far
        fold = improved or mode == "excessive"
        changed = False
        if fold:
            changed = bool(self.d_itm.any())
            self.d_ltm += self.d_itm
        self.d_itm[:] = self.d_stm
        self.d_stm[:] = 0.0
        return changed

    def _snapshot(self) -> dict[str, np.ndarray]:
        return {"stm": self.d_stm.copy(), "itm": self.d_itm.copy(), "ltm": self.d_ltm.copy()}

    def restore_best_checkpoint(self) -> float:
        """Load the highest-SPL checkpoint back into the live layers."""
        if not self.checkpoints:
            raise RuntimeError("no checkpoints recorded")
        spl, state = max(self.checkpoints, key=lambda cs: cs[0])
        self.d_stm[:] = state["stm"]
        self.d_itm[:] = state["itm"]
        self.d_ltm[:] = state["ltm"]
        return spl

    def start_trial(self) -> None:
        """Clear the eligibility buffer (views from the previous attempt are stale)."""
        self._eligibility.clear()

    def reset_episode(self) -> None:
        """Erase all memory tiers (weights back to 1), checkpoints included."""
        self.d_stm[:] = 0.0
        self.d_itm[:] = 0.0
        self.d_ltm[:] = 0.0
        self._eligibility.clear()
        self.checkpoints.clear()

    # -- introspection / persistence ----------------------------------------

    @property
    def w1(self) -> np.ndarray:
        """Full (2, n_kc) effective output weight matrix (materialized copy)."""
        return 1.0 - (self.d_stm + self.d_itm + self.d_ltm)

    def check_invariants(self) -> None:
        """Raise unless every layer is nonnegative and W1 stays inside [0, 1]."""
        for tag, layer in (("stm", self.d_stm), ("itm", self.d_itm), ("ltm", self.d_ltm)):
            if (layer < 0).any():
                raise AssertionError(f"negative entries in {tag} layer")
        w1 = self.w1
        if (w1 < -1e-12).any() or (w1 > 1 + 1e-12).any():
            raise AssertionError("effective weights escaped [0, 1]")

    def state_dict(self) -> dict:
        return {
            "n_kc": self.params.n_kc,
            "layers": {
                "stm": self.d_stm.tolist(),
                "itm": self.d_itm.tolist(),
                "ltm": self.d_ltm.tolist(),
            },
        }

    def load_state_dict(self, state: dict) -> None:
        if state["n_kc"] != self.params.n_kc:
            raise ValueError("state size does not match this network")
        for tag, target in (("stm", self.d_stm), ("itm", self.d_itm), ("ltm", self.d_ltm)):
            arr = np.asarray(state["layers"][tag], dtype=float)
            if arr.shape != target.shape:
                raise ValueError(f"bad shape for layer {tag}")
            target[:] = arr

    def save_state(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.state_dict()), encoding="utf-8")

    def load_state(self, path: str | Path) -> None:
        self.load_state_dict(json.loads(Path(path).read_text(encoding="utf-8")))
