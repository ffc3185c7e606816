"""Environment container: one offspring law per generation.

The process runs from a single founder at generation -N up to the present
generation 0.  ``laws`` is stored oldest-first: entry ``j`` is the offspring
law of individuals living at generation ``-N + j``.  Generation-0 individuals
do not reproduce within the modeled window.

Backward indices follow the convention used throughout the package: a
generation ``m`` satisfies ``-N <= m <= -1`` for reproducing individuals,
and composition ranges use ``-N <= m <= n <= 0``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Iterable

from .errors import EnvFormatError, HorizonError, NotLinearFractionalError
from .laws import FiniteSupportLaw, LinearFractionalLaw, Number, OffspringLaw


@dataclass(frozen=True)
class Environment:
    laws: tuple[OffspringLaw, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.laws, tuple):
            object.__setattr__(self, "laws", tuple(self.laws))

    @property
    def horizon(self) -> int:
        return len(self.laws)

    def law_for_generation(self, m: int) -> OffspringLaw:
        """Offspring law of individuals at generation m, for -N <= m <= -1."""
        if not -self.horizon <= m <= -1:
            raise HorizonError(
                f"generation {m} outside [-{self.horizon}, -1] for horizon {self.horizon}"
            )
        return self.laws[m + self.horizon]

    def shift(self, k: int) -> "Environment":
        """Drop the k oldest laws, leaving the window of the last N-k generations."""
        if not 0 <= k <= self.horizon:
            raise HorizonError(f"shift by {k} outside [0, {self.horizon}]")
        return Environment(self.laws[k:])

    @property
    def is_linear_fractional(self) -> bool:
        return all(isinstance(law, LinearFractionalLaw) for law in self.laws)

    @property
    def is_finite_support(self) -> bool:
        return all(isinstance(law, FiniteSupportLaw) for law in self.laws)

    def as_rational(self) -> "Environment":
        return Environment(tuple(law.as_rational() for law in self.laws))

    def to_dict(self) -> dict:
        entries = []
        for law in self.laws:
            if isinstance(law, FiniteSupportLaw):
                entries.append({"type": "pmf", "p": [float(p) for p in law.probs]})
            else:
                entries.append({"type": "lf", "r": law.r, "p": law.p})
        return {"horizon": self.horizon, "laws": entries}

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:12]


def environment_from_dict(doc: dict) -> Environment:
    if not isinstance(doc, dict):
        raise EnvFormatError("environment document must be a JSON object")
    if "laws" not in doc:
        raise EnvFormatError("missing 'laws' list")
    raw_laws = doc["laws"]
    if not isinstance(raw_laws, list) or not raw_laws:
        raise EnvFormatError("'laws' must be a non-empty list")
    horizon = doc.get("horizon", len(raw_laws))
    if horizon != len(raw_laws):
        raise EnvFormatError(
            f"declared horizon {horizon} does not match {len(raw_laws)} law entries"
        )
    laws = []
    for i, entry in enumerate(raw_laws):
        try:
            laws.append(_law_from_entry(entry))
        except EnvFormatError as exc:
            raise EnvFormatError(f"laws[{i}]: {exc}") from None
    return Environment(tuple(laws))


def _law_from_entry(entry: dict) -> OffspringLaw:
    if not isinstance(entry, dict) or "type" not in entry:
        raise EnvFormatError("law entry must be an object with a 'type' field")
    kind = entry["type"]
    if kind == "pmf":
        probs = entry.get("p")
        if not isinstance(probs, list) or not probs:
            raise EnvFormatError("'pmf' law needs a non-empty probability list 'p'")
        return FiniteSupportLaw(tuple(float(x) for x in probs))
    if kind == "lf":
        if "r" not in entry or "p" not in entry:
            raise EnvFormatError("'lf' law needs fields 'r' and 'p'")
        return LinearFractionalLaw(float(entry["r"]), float(entry["p"]))
    raise EnvFormatError(f"unknown law type {kind!r} (expected 'pmf' or 'lf')")


def load_environment(path: str) -> Environment:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise EnvFormatError(f"cannot read environment file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise EnvFormatError(f"environment file is not valid JSON: {exc}") from None
    return environment_from_dict(doc)


def save_environment(env: Environment, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(env.to_dict(), fh, indent=2)
        fh.write("\n")


def constant_environment(law: OffspringLaw, horizon: int) -> Environment:
    if horizon < 1:
        raise EnvFormatError("horizon must be >= 1")
    return Environment((law,) * horizon)


# ---------------------------------------------------------------------------
# Linear-fractional closed forms.  The LF family is closed under composition;
# a member is pinned down by its mean and its normalized second factorial
# moment, which compose by explicit products and sums.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LfParams:
    """Parameters (r, p) of a linear-fractional law, boundary p=1 allowed.

    The boundary covers degenerate composites: the identity composition has
    r = p = 1 (one child with certainty) and an extinct range has r = 0.
    """

    r: float
    p: float

    def __post_init__(self) -> None:
        if not 0 <= self.r <= 1 or not 0 < self.p <= 1:
            raise EnvFormatError(f"invalid composite parameters r={self.r}, p={self.p}")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    def mean(self) -> float:
        return self.r / self.p

    def nsfm(self) -> float:
        if self.r == 0:
            return 0.0
        return 2.0 * self.q / self.r

    def pgf(self, s: Number) -> float:
        s = float(s)
        return 1.0 - self.r * (1.0 - s) / (1.0 - self.q * s)


def _lf_range(env: Environment, m: int, n: int) -> list[LinearFractionalLaw]:
    """Laws acting between generations m and n, newest last."""
    N = env.horizon
    if not -N <= m <= n <= 0:
        raise HorizonError(f"range [{m}, {n}] outside [-{N}, 0]")
    laws = env.laws[m + N : n + N]
    for law in laws:
        if not isinstance(law, LinearFractionalLaw):
            raise NotLinearFractionalError(
                "composition closed form needs every law in the range to be "
                "linear fractional"
            )
    return list(laws)


def lf_compose(env: Environment, m: int, n: int) -> LfParams:
    """Composite law of the population n-m generations below one founder.

    Composes the per-generation laws between generations m and n.  The
    composite mean is the product of the per-generation means and the
    composite normalized second factorial moment accumulates one weighted
    term per generation.
    """
    laws = _lf_range(env, m, n)
    if any(law.r == 0 for law in laws):
        return LfParams(r=0.0, p=1.0)
    mean = 1.0
    for law in laws:
        mean *= law.r / law.p
    nsfm = 0.0
    prefix = 1.0  # product of p_l / r_l over the laws already folded in
    for idx, law in enumerate(laws):
        if idx == 0:
            nsfm += 2.0 * law.q / law.r
        else:
            nsfm += 2.0 * prefix * law.q / law.r
        prefix *= law.p / law.r
    if not laws:
        return LfParams(r=1.0, p=1.0)
    r = 2.0 * mean / (2.0 + mean * nsfm)
    p = 2.0 / (2.0 + mean * nsfm)
    return LfParams(r=r, p=p)


def lf_s_coefficients(env: Environment, n: int) -> tuple[float, ...]:
    """Weights s_i for generations i = -n+1 .. 0, returned oldest-first.

    With (r_i, p_i) the parameters of the law acting into generation i,
    s_0 = (1-p_0)/p_0 and deeper coefficients scale by the growth ratio of
    the generations in between.  The tail probability that the two leftmost
    surviving lineages have not met within n generations is
    1 / (1 + sum of these weights).
    """
    N = env.horizon
    if not 1 <= n <= N:
        raise HorizonError(f"depth {n} outside [1, {N}]")
    params = _lf_range(env, -n, 0)  # laws e_{-n+1} .. e_0, oldest first
    out: list[float] = []
    ratio = 1.0  # product of r_j/p_j for j between i+1 and 0
    for law in reversed(params):
        out.append((1.0 - law.p) / law.p * ratio)
        ratio *= law.r / law.p
    out.reverse()
    return tuple(out)


def lf_a1_tail(env: Environment, n: int) -> float:
    """Closed-form tail P(first coalescent time > n) for an LF environment."""
    return 1.0 / (1.0 + sum(lf_s_coefficients(env, n)))


def lf_eta_success(env: Environment, depth: int) -> float:
    """Geometric success probability of the spine-sibling count at ``depth``.

    The number of extra surviving daughters seen at each ancestor level of
    the leftmost lineage is geometric for LF environments; this returns the
    success parameter at the given level (1 = closest to the present).
    """
    s = lf_s_coefficients(env, depth)
    if depth == 1:
        total = 1.0 + s[0]
        return 1.0 / total  # equals p_0
    return (1.0 + sum(s[1:])) / (1.0 + sum(s))
