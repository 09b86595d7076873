from __future__ import annotations

import copy
import threading
from datetime import date, datetime, timezone
from typing import Callable, Optional, Tuple, Union

from .discovery import DiscoveryPrimitives
from .model import DateLike, as_date, parse_instant
from .primitives import DeterministicPrimitives
from .store import GraphStore
from .text import SemanticScorer, make_scorer

DEFAULT_WEIGHTS = (0.5, 0.5)


def utc_now() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


class Engine(DeterministicPrimitives, DiscoveryPrimitives):
    """All primitives over one frozen store.

    ``pinned_now`` fixes the instant used when a temporal parameter is omitted;
    without it the wall clock is read per call. Use :meth:`pinned` to get a
    copy bound to a specific instant (what the plan executor and the service
    do for every request).
    """

    def __init__(
        self,
        store: GraphStore,
        scorer: Union[SemanticScorer, str, None] = None,
        weights: Tuple[float, float] = DEFAULT_WEIGHTS,
        pinned_now: Optional[DateLike] = None,
        clock: Callable[[], datetime] = utc_now,
    ):
        self.store = store
        if scorer is None:
            scorer = "ngram-cosine"
        self.scorer = make_scorer(scorer) if isinstance(scorer, str) else scorer
        self.weights = (float(weights[0]), float(weights[1]))
        self.clock = clock
        self.pinned_now: Optional[datetime] = parse_instant(pinned_now) if pinned_now is not None else None
        self._scorer_lock = threading.Lock()

    def now_instant(self) -> datetime:
        return self.pinned_now if self.pinned_now is not None else self.clock()

    def now(self) -> date:
        return as_date(self.now_instant())

    def pinned(self, instant: Optional[DateLike] = None) -> "Engine":
        clone = copy.copy(self)
        clone.pinned_now = parse_instant(instant) if instant is not None else self.now_instant()
        return clone
