"""Incremental formation of over-segmented 3D primitives.

Each frame's accepted mask sets are folded into the primitive partition in
mask order. A Gaussian already holding an assignment keeps it only while its
current primitive is smaller than the incoming set; otherwise it moves to the
set's new primitive. Small primitives therefore survive and the partition
refines over time.
"""

from __future__ import annotations

from typing import Iterable, List, Set, Tuple

import numpy as np

from .relevance import UpdateOutcome
from .types import MapState, Primitive


def assign_primitives(
    state: MapState,
    frame_sets: Iterable[Tuple[int, Set[int], UpdateOutcome]],
) -> List[int]:
    """Apply one frame's (mask_id, gaussian_ids, outcome) triples in order.

    Sets whose update was rejected as an outlier are skipped entirely.
    Returns the IDs of primitives created or modified. Primitives emptied by
    moves are deleted and their IDs never reused.
    """
    touched: List[int] = []
    for _mask_id, gaussian_ids, outcome in frame_sets:
        if outcome is UpdateOutcome.REJECTED_AS_OUTLIER:
            continue
        if not gaussian_ids:
            continue
        rows = state.rows_for(gaussian_ids)
        n_set = rows.size
        pids = state.primitive_of[rows]
        # Keep/move decisions use primitive sizes as they stand when this
        # mask is processed; moves within the mask do not feed back.
        moving = pids < 0
        for pid in np.unique(pids[pids >= 0]):
            if len(state.primitive_members[int(pid)]) >= n_set:
                moving |= pids == pid
        to_new = rows[moving]
        if to_new.size == 0:
            continue
        new_pid = state.new_primitive_id()
        new_members = set(int(r) for r in to_new)
        for pid in np.unique(pids[moving & (pids >= 0)]):
            pid = int(pid)
            members = state.primitive_members[pid]
            members -= new_members
            if not members:
                del state.primitive_members[pid]
            elif pid not in touched:
                touched.append(pid)
        state.primitive_of[to_new] = new_pid
        state.primitive_members[new_pid] = new_members
        touched.append(new_pid)
    return touched


def primitive_distribution(state: MapState, primitive_id: int) -> np.ndarray:
    """Normalized task distribution of a primitive, null task last.

    Per-task values are the unweighted mean of member posteriors; the null
    entry is the product of the per-task complements (independent-relevance
    reading of "relevant for no task").
    """
    members = state.primitive_members.get(primitive_id)
    if not members:
        raise ValueError(f"primitive {primitive_id} is empty or unknown")
    rows = np.fromiter(members, dtype=np.int64)
    raw = state.posteriors[rows].mean(axis=0)
    null = float(np.prod(1.0 - raw))
    dist = np.concatenate((raw, [null]))
    return dist / dist.sum()


def materialize_primitives(state: MapState) -> List[Primitive]:
    """Snapshot the current partition as value objects with uniform prior mass."""
    pids = sorted(state.primitive_members)
    n = len(pids)
    out = []
    for pid in pids:
        out.append(
            Primitive(
                id=pid,
                gaussian_ids=state.primitive_gaussian_ids(pid),
                task_dist=primitive_distribution(state, pid),
                prior_mass=1.0 / n,
            )
        )
    return out
