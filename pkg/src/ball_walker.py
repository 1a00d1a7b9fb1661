import sys
import time
from typing import Optional, Dict, List, Tuple, Iterable

import numpy as np

from .config import BALL_CAP
from .errors import BallTooLarge, UnsupportedFamily
from .group import (
    GroupPresentation, Word, normalize, dehn_reduce, syllable_length, is_identity,
)


class BallWalkerInterface:
    """
    Override and pass to BallWalker constructor to receive each *walked* element.
    """
    def on_element(self, index: int, word: Word, length: int, parent: int, letter: int):
        pass

    def on_duplicate(self, index: int, parent: int, letter: int):
        """
        Called when `parent * letter` is the already seen element `index`
        and has the same length, e.g. another geodesic word.
        """
        pass

    def finalize(self):
        """
        Called before the `BallWalker.run` method returns.
        """
        pass


class BallWalker:
    """
    Breadth-first walk through the ball of radius `radius` of a group,
    visiting every element exactly once with a geodesic word.
    """
    def __init__(
            self,
            pres: GroupPresentation,
            radius: int,
            interface: Optional[BallWalkerInterface] = None,
            cap: int = BALL_CAP,
            verbose: bool = False,
    ):
        self.pres = pres
        self._radius = radius
        self._interface = interface
        self._cap = cap
        self._verbose = verbose
        self._seen: Dict[tuple, int] = dict()
        # abelianization buckets of surface group elements
        self._buckets: Dict[tuple, List[int]] = dict()
        self._words: List[Word] = []
        self._lengths: List[int] = []
        self._num_duplicates = 0
        self._num_shorter = 0
        self._start_time = time.time()
        self._last_message_time = self._start_time

    @property
    def words(self) -> List[Word]:
        return self._words

    def run(self):
        projected = projected_ball_size(self.pres, self._radius)
        if projected > self._cap:
            raise BallTooLarge(
                f"Ball of radius {self._radius} has about {projected:,} elements, cap is {self._cap:,}",
                projected_size=projected,
            )

        self._add((), 0, -1, -1)
        frontier = [0]
        for length in range(1, self._radius + 1):
            next_frontier = []
            for parent in frontier:
                self._dump_status()
                parent_word = self._words[parent]
                for letter in range(self.pres.num_generators):
                    index = self._visit(parent_word + (letter,), length, parent, letter)
                    if index is not None:
                        next_frontier.append(index)
            frontier = next_frontier
            if len(self._words) > self._cap:
                raise BallTooLarge(f"Ball exceeded the cap of {self._cap:,} elements", projected_size=len(self._words))

        if self._interface is not None:
            self._interface.finalize()

    def status_string(self) -> str:
        return (
            f"elements: {len(self._words):,}"
            f", duplicates: {self._num_duplicates:,}"
            f", shorter: {self._num_shorter:,}"
        )

    # --- private ---

    def _dump_status(self):
        if not self._verbose:
            return
        cur_time = time.time()
        if cur_time - self._last_message_time >= 1.:
            self._last_message_time = cur_time
            print(
                f"@ {cur_time - self._start_time:.0f} sec"
                f", {self.status_string()}",
                file=sys.stderr,
            )

    def _add(self, word: Word, length: int, parent: int, letter: int) -> int:
        index = len(self._words)
        self._words.append(word)
        self._lengths.append(length)
        if self._interface is not None:
            self._interface.on_element(index, word, length, parent, letter)
        return index

    def _visit(self, word: Word, length: int, parent: int, letter: int) -> Optional[int]:
        family = self.pres.family
        if family == "surface":
            return self._visit_surface(word, length, parent, letter)

        try:
            key = normalize(self.pres, word)
        except UnsupportedFamily:
            # not accepted by an explicit automaton, so not geodesic
            self._num_shorter += 1
            return None

        if len(key) < length:
            self._num_shorter += 1
            return None
        if key in self._seen:
            self._num_duplicates += 1
            if self._interface is not None:
                self._interface.on_duplicate(self._seen[key], parent, letter)
            return None
        index = self._add(word, length, parent, letter)
        self._seen[key] = index
        return index

    def _visit_surface(self, word: Word, length: int, parent: int, letter: int) -> Optional[int]:
        reduced = dehn_reduce(self.pres, word)
        if len(reduced) < length:
            self._num_shorter += 1
            return None
        bucket_key = abelianization(self.pres, reduced)
        bucket = self._buckets.setdefault(bucket_key, [])
        for other in bucket:
            if is_identity(self.pres, reduced + self.pres.inverse(self._words[other])):
                if self._lengths[other] == length:
                    self._num_duplicates += 1
                    if self._interface is not None:
                        self._interface.on_duplicate(other, parent, letter)
                else:
                    self._num_shorter += 1
                return None
        index = self._add(word, length, parent, letter)
        bucket.append(index)
        return index


class Ball(BallWalkerInterface):
    """
    The elements of length <= radius, each with a geodesic word.

    Element i is `words[i]` = `words[parent[i]] + (letter[i],)`,
    the identity has parent -1.
    """
    def __init__(self, pres: GroupPresentation, radius: int):
        self.pres = pres
        self.radius = radius
        self.words: List[Word] = []
        self._lengths: List[int] = []
        self._parents: List[int] = []
        self._letters: List[int] = []
        self._geodesic_counts: List[int] = []
        self._index: Dict[tuple, int] = dict()
        self._buckets: Dict[tuple, List[int]] = dict()

    def on_element(self, index: int, word: Word, length: int, parent: int, letter: int):
        self.words.append(word)
        self._lengths.append(length)
        self._parents.append(parent)
        self._letters.append(letter)
        self._geodesic_counts.append(self._geodesic_counts[parent] if parent >= 0 else 1)
        if self.pres.family == "surface":
            self._buckets.setdefault(abelianization(self.pres, word), []).append(index)
        else:
            self._index[normalize(self.pres, word)] = index

    def on_duplicate(self, index: int, parent: int, letter: int):
        self._geodesic_counts[index] += self._geodesic_counts[parent]

    def finalize(self):
        self.lengths = np.array(self._lengths, dtype=int)
        self.parents = np.array(self._parents, dtype=int)
        self.letters = np.array(self._letters, dtype=int)
        self.geodesic_counts = np.array(self._geodesic_counts, dtype=np.int64)

    def __len__(self):
        return len(self.words)

    def find(self, word: Word) -> Optional[int]:
        """
        Index of the element represented by `word`, None if outside the ball
        """
        if self.pres.family == "surface":
            reduced = dehn_reduce(self.pres, word)
            for other in self._buckets.get(abelianization(self.pres, reduced), []):
                if is_identity(self.pres, reduced + self.pres.inverse(self.words[other])):
                    return other
            return None
        try:
            return self._index.get(normalize(self.pres, word))
        except UnsupportedFamily:
            return None

    def length_of(self, word: Word) -> Optional[int]:
        index = self.find(word)
        return None if index is None else int(self.lengths[index])

    def sphere(self, n: int) -> np.ndarray:
        return np.flatnonzero(self.lengths == n)

    def sphere_sizes(self) -> List[int]:
        return np.bincount(self.lengths, minlength=self.radius + 1).tolist()

    def geodesic_word_counts(self) -> List[int]:
        """
        Number of geodesic words of each length
        """
        return [int(self.geodesic_counts[self.lengths == n].sum()) for n in range(self.radius + 1)]

    def iter_elements(self, max_length: Optional[int] = None) -> Iterable[Tuple[int, Word]]:
        for i, word in enumerate(self.words):
            if max_length is None or self.lengths[i] <= max_length:
                yield i, word


def abelianization(pres: GroupPresentation, word: Word) -> Tuple[int, ...]:
    """
    Exponent sums of the surface group generators a_i, b_i
    """
    vec = [0] * (pres.num_generators // 2)
    for x in word:
        vec[x // 2] += -1 if x % 2 else 1
    return tuple(vec)


def projected_ball_size(pres: GroupPresentation, radius: int) -> int:
    """
    Number of elements of length <= radius, exact for free groups and
    free products, an upper bound for surface groups.
    """
    if pres.family == "free":
        k = pres.param("rank")
        if k == 0:
            return 1
        if k == 1:
            return 2 * radius + 1
        return 1 + 2 * k * ((2 * k - 1) ** radius - 1) // (2 * k - 2)

    if pres.family == "free_product":
        orders = pres.param("orders")
        # count[n][f]: elements of length n whose last syllable is in factor f
        count = [[0, 0] for _ in range(radius + 1)]
        for n in range(1, radius + 1):
            for f, order in enumerate(orders):
                for e in range(1, order):
                    sl = syllable_length(order, e)
                    if sl > n:
                        continue
                    if sl == n:
                        count[n][f] += 1
                    else:
                        count[n][f] += count[n - sl][1 - f]
        return 1 + sum(sum(c) for c in count[1:])

    if pres.family == "surface":
        g = pres.param("genus")
        return 1 + sum(4 * g * (4 * g - 1) ** (n - 1) for n in range(1, radius + 1))

    if pres.family == "automaton":
        if pres.automaton is None:
            raise UnsupportedFamily("Automaton presentation without automaton")
        return int(sum(pres.automaton.walk_counts(radius)))

    raise UnsupportedFamily(f"Unknown family '{pres.family}'")


_BALL_CACHE: Dict[tuple, Ball] = dict()


def ball(
        pres: GroupPresentation,
        radius: int,
        cap: int = BALL_CAP,
        verbose: bool = False,
) -> Ball:
    """
    All elements of length <= `radius`, with geodesic representatives.
    """
    if radius < 0:
        raise ValueError(f"Radius must not be negative, got {radius}")
    key = (pres, radius)
    if pres.family != "automaton" and key in _BALL_CACHE:
        return _BALL_CACHE[key]

    result = Ball(pres, radius)
    walker = BallWalker(pres, radius, interface=result, cap=cap, verbose=verbose)
    walker.run()
    if verbose:
        print(walker.status_string(), file=sys.stderr)

    if pres.family != "automaton":
        if len(_BALL_CACHE) > 32:
            _BALL_CACHE.clear()
        _BALL_CACHE[key] = result
    return result
