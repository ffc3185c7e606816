"""Backward chains that generate the genealogy without growing a tree.

The truncated-vector chain ("b") carries, for each successive present
individual, the counts of extra surviving daughters seen at each ancestor
level up to the running maximum of coalescent times.  Its first nonzero
entry is the next coalescent time.  The fixed-length chain ("d") carries all
levels up to the horizon.  Both consume fresh spine-sibling draws at the
levels below the current coalescent time and terminate when no further
individual exists within the horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .environment import Environment, lf_a1_tail
from .errors import ChainStateError, DomainError, NotLinearFractionalError
from .pgf import EtaLaw, eta_law_at_depth
from .sampling import (
    UniformStream,
    as_stream,
    cumulative,
    draw_from_cumulative,
    geometric_failures,
)


class _Terminated:
    """Sentinel: the next individual does not exist within the horizon."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "TERMINATED"


TERMINATED = _Terminated()


class EtaSamplers:
    """Per-level samplers of the spine-sibling law, levels 1..N."""

    def __init__(self, env: Environment):
        self.env = env
        self.horizon = env.horizon
        self._laws: list[EtaLaw] = [eta_law_at_depth(env, m) for m in range(1, env.horizon + 1)]
        self._cum: list[tuple[float, ...] | None] = []
        for law in self._laws:
            self._cum.append(None if law.geom is not None else cumulative(law.probs))

    def law(self, level: int) -> EtaLaw:
        return self._laws[level - 1]

    def draw(self, level: int, stream: UniformStream) -> int:
        law = self._laws[level - 1]
        if law.geom is not None:
            return geometric_failures(law.geom, stream)
        return draw_from_cumulative(self._cum[level - 1], stream)


@dataclass(frozen=True)
class BState:
    """Truncated chain state; the vector length is the running maximum of
    coalescent times, and the first nonzero entry is the next one."""

    b: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(v < 0 for v in self.b):
            raise ChainStateError(f"negative entry in state {self.b}")
        if self.b and all(v == 0 for v in self.b):
            raise ChainStateError("all-zero state is represented by termination")

    @property
    def l(self) -> int:
        return len(self.b)

    @property
    def first_nonzero(self) -> int | None:
        """1-based position of the first nonzero entry; None for the initial
        empty state."""
        for idx, v in enumerate(self.b):
            if v:
                return idx + 1
        return None

    @classmethod
    def initial(cls) -> "BState":
        return cls(())


DState = tuple[int, ...]


def b_step(state: BState, samplers: EtaSamplers, stream: UniformStream):
    """One transition of the truncated chain; returns the next state or
    TERMINATED.

    Entries above the current coalescent time are copied, the entry at it is
    decremented, entries below are replaced by fresh level draws.  If that
    leaves the vector with no nonzero entry, further levels are drawn one by
    one (extending the vector) until a nonzero value appears or the horizon
    is exhausted.
    """
    N = samplers.horizon
    b = state.b
    a = state.first_nonzero
    if a is None:
        prefix: list[int] = []
    else:
        prefix = [samplers.draw(m, stream) for m in range(1, a)]
        prefix.append(b[a - 1] - 1)
        prefix.extend(b[a:])
        if any(prefix):
            return BState(tuple(prefix))
    for level in range(len(b) + 1, N + 1):
        v = samplers.draw(level, stream)
        prefix.append(v)
        if v:
            return BState(tuple(prefix))
    return TERMINATED


def d_step(state: DState | None, samplers: EtaSamplers, stream: UniformStream) -> DState:
    """One transition of the fixed-length chain.

    ``None`` plays the initial role: every level gets a fresh draw.  The
    result may be all-zero, which means no further individual exists.
    """
    N = samplers.horizon
    if state is None:
        return tuple(samplers.draw(m, stream) for m in range(1, N + 1))
    if len(state) != N:
        raise ChainStateError(f"state length {len(state)} != horizon {N}")
    a = 0
    for idx, v in enumerate(state):
        if v:
            a = idx + 1
            break
    if a == 0:
        raise ChainStateError("stepping an all-zero state; the run has terminated")
    out = [samplers.draw(m, stream) for m in range(1, a)]
    out.append(state[a - 1] - 1)
    out.extend(state[a:])
    return tuple(out)


@dataclass
class ChainRun:
    """Realized backward chain: visited states and emitted coalescent times.

    A terminated run describes a genealogy with ``len(a_values) + 1`` present
    individuals.
    """

    a_values: list[int] = field(default_factory=list)
    states: list = field(default_factory=list)
    terminated: bool = False

    @property
    def k(self) -> int | None:
        return len(self.a_values) + 1 if self.terminated else None


def b_run(env: Environment, rng, max_individuals: int = 1_000_000,
          samplers: EtaSamplers | None = None) -> ChainRun:
    """Run the truncated chain from the empty state until termination."""
    if samplers is None:
        samplers = EtaSamplers(env)
    stream = as_stream(rng)
    run = ChainRun()
    state = BState.initial()
    while len(run.a_values) < max_individuals:
        nxt = b_step(state, samplers, stream)
        if nxt is TERMINATED:
            run.terminated = True
            return run
        state = nxt
        run.states.append(state)
        run.a_values.append(state.first_nonzero)
    return run


def d_run(env: Environment, rng, max_individuals: int = 1_000_000,
          samplers: EtaSamplers | None = None) -> ChainRun:
    """Run the fixed-length chain from the null state until termination."""
    if samplers is None:
        samplers = EtaSamplers(env)
    stream = as_stream(rng)
    run = ChainRun()
    state: DState | None = None
    while len(run.a_values) < max_individuals:
        state = d_step(state, samplers, stream)
        first = next((i + 1 for i, v in enumerate(state) if v), None)
        if first is None:
            run.terminated = True
            return run
        run.states.append(state)
        run.a_values.append(first)
    return run


BEYOND_HORIZON = math.inf


def lf_cpp_sample(env: Environment, rng, count: int) -> list[float]:
    """Independent coalescent-time draws from the LF closed-form law.

    Values are levels 1..N; draws falling past the horizon are returned as
    ``BEYOND_HORIZON`` (math.inf) and carry the mass P(time > N).
    """
    if not env.is_linear_fractional:
        raise NotLinearFractionalError("closed-form sampling needs an LF environment")
    if count < 0:
        raise DomainError("count must be >= 0")
    N = env.horizon
    tails = [lf_a1_tail(env, n) for n in range(1, N + 1)]
    pmf = []
    prev = 1.0
    for t in tails:
        pmf.append(prev - t)
        prev = t
    cum = cumulative(pmf)
    stream = as_stream(rng)
    out: list[float] = []
    for _ in range(count):
        idx = draw_from_cumulative(cum, stream)
        out.append(float(idx + 1) if idx < N else BEYOND_HORIZON)
    return out


def lf_run(env: Environment, rng, max_individuals: int = 1_000_000) -> ChainRun:
    """Genealogy sampled from the LF closed form: independent coalescent
    times drawn until one falls past the horizon."""
    if not env.is_linear_fractional:
        raise NotLinearFractionalError("closed-form sampling needs an LF environment")
    N = env.horizon
    tails = [lf_a1_tail(env, n) for n in range(1, N + 1)]
    pmf = []
    prev = 1.0
    for t in tails:
        pmf.append(prev - t)
        prev = t
    cum = cumulative(pmf)
    stream = as_stream(rng)
    run = ChainRun()
    while len(run.a_values) < max_individuals:
        idx = draw_from_cumulative(cum, stream)
        if idx >= N:
            run.terminated = True
            return run
        run.a_values.append(idx + 1)
    return run


# ---------------------------------------------------------------------------
# Pathwise validation of realized runs, used by tests and the CLI.
# ---------------------------------------------------------------------------


def validate_b_run(run: ChainRun, horizon: int) -> None:
    """Check the copy/decrement/extend structure along a realized run.

    Fresh draws cannot be re-derived, but every structural constraint that
    does not depend on them must hold: emitted times are first-nonzero
    positions, lengths follow the running maximum, the entry at the previous
    coalescent time dropped by one unless fresh levels were opened, and
    entries above it are copied verbatim.
    """
    prev: BState | None = None
    running = 0
    for state, a in zip(run.states, run.a_values):
        if state.first_nonzero != a:
            raise ChainStateError(f"emitted {a} but first nonzero is {state.first_nonzero}")
        running = max(running, a)
        if state.l != running:
            raise ChainStateError(f"length {state.l} != running maximum {running}")
        if state.l > horizon:
            raise ChainStateError(f"length {state.l} exceeds horizon {horizon}")
        if prev is not None:
            pa = prev.first_nonzero
            if state.l == prev.l:
                if state.b[pa - 1] != prev.b[pa - 1] - 1:
                    raise ChainStateError("entry at the previous time did not decrement")
                if state.b[pa:] != prev.b[pa:]:
                    raise ChainStateError("entries above the previous time changed")
            else:
                # extension happened, so the replaced prefix died out entirely
                if state.l <= prev.l or any(state.b[: prev.l]):
                    raise ChainStateError("extension with a surviving prefix")
                if any(state.b[prev.l : state.l - 1]):
                    raise ChainStateError("extension passed a nonzero level")
        prev = state


def validate_d_run(run: ChainRun, horizon: int) -> None:
    prev: DState | None = None
    for state, a in zip(run.states, run.a_values):
        if len(state) != horizon:
            raise ChainStateError(f"state length {len(state)} != horizon {horizon}")
        first = next((i + 1 for i, v in enumerate(state) if v), None)
        if first != a:
            raise ChainStateError(f"emitted {a} but first nonzero is {first}")
        if prev is not None:
            pa = next(i + 1 for i, v in enumerate(prev) if v)
            if state[pa - 1] != prev[pa - 1] - 1:
                raise ChainStateError("entry at the previous time did not decrement")
            if state[pa:] != prev[pa:]:
                raise ChainStateError("entries above the previous time changed")
        prev = state
