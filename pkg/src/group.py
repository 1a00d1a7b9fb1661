"""
Presentations, words and normal forms of the supported hyperbolic groups.

Words are tuples of generator indices. Every generator has a formal
inverse in the generating set, written with the upper-case name.
"""
import dataclasses
from functools import lru_cache
from typing import Optional, Tuple, List, Dict, Sequence, Union, Any

from .errors import InvalidInput, UnsupportedFamily

Word = Tuple[int, ...]

FAMILIES = ("free", "free_product", "surface", "automaton")


@dataclasses.dataclass(frozen=True)
class GroupPresentation:
    family: str
    params: Tuple[Tuple[str, Any], ...]
    names: Tuple[str, ...]
    inverses: Tuple[int, ...]
    relators: Tuple[Word, ...] = ()
    # explicit automaton families only
    automaton: Optional[Any] = dataclasses.field(default=None, compare=False, hash=False)
    normal_forms: Optional[Dict[Word, Word]] = dataclasses.field(default=None, compare=False, hash=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnsupportedFamily(f"Unknown family '{self.family}'")
        if len(self.names) != len(self.inverses):
            raise InvalidInput("Every generator needs an inverse")
        for i, j in enumerate(self.inverses):
            if not 0 <= j < len(self.names) or self.inverses[j] != i:
                raise InvalidInput(f"Generating set is not symmetric at '{self.names[i]}'")

    @property
    def num_generators(self) -> int:
        return len(self.names)

    def param(self, name: str, default=None):
        return dict(self.params).get(name, default)

    def inverse(self, word: Sequence[int]) -> Word:
        return tuple(self.inverses[x] for x in reversed(word))

    def parse(self, text: Union[str, Sequence[str]]) -> Word:
        """
        Parse "abA", "a1 b1 A1" or a list of generator names.
        The empty string is the identity.
        """
        if not isinstance(text, str):
            return tuple(self._index(n) for n in text)
        text = text.strip()
        if text in ("", "1", "id", "e"):
            return ()
        if " " in text:
            return tuple(self._index(n) for n in text.split())
        word = []
        names = sorted(self.names, key=len, reverse=True)
        pos = 0
        while pos < len(text):
            for name in names:
                if text.startswith(name, pos):
                    word.append(self._index(name))
                    pos += len(name)
                    break
            else:
                raise InvalidInput(f"Can not parse word '{text}' at position {pos}")
        return tuple(word)

    def format(self, word: Sequence[int]) -> str:
        if not word:
            return "id"
        sep = "" if all(len(n) == 1 for n in self.names) else " "
        return sep.join(self.names[x] for x in word)

    def _index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InvalidInput(f"Unknown generator '{name}'")

    def to_json(self) -> dict:
        data = {"family": self.family, "params": dict(self.params)}
        if self.family == "automaton":
            data["generators"] = list(self.names)
            data["inverses"] = {self.names[i]: self.names[j] for i, j in enumerate(self.inverses)}
            if self.normal_forms:
                data["normal_forms"] = {
                    self.format(k): self.format(v) for k, v in self.normal_forms.items()
                }
        return data


# --- families ---

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def free_group(rank: int) -> GroupPresentation:
    """
    Free group on `rank` generators a, b, ... with inverses A, B, ...
    Rank 0 is the trivial group.
    """
    if not 0 <= rank <= len(_LETTERS):
        raise InvalidInput(f"Unsupported rank {rank}")
    names = []
    for i in range(rank):
        names += [_LETTERS[i], _LETTERS[i].upper()]
    return GroupPresentation(
        family="free",
        params=(("rank", rank),),
        names=tuple(names),
        inverses=tuple(i ^ 1 for i in range(2 * rank)),
    )


def free_product(m: int, n: int) -> GroupPresentation:
    """
    Z/m * Z/n = <a, b | a^m = b^n = id>, with `A` and `B` as inverses
    for factors of order larger than 2.
    """
    if m < 2 or n < 2:
        raise InvalidInput(f"Factor orders must be at least 2, got {m}, {n}")
    names, inverses = [], []
    for letter, order in (("a", m), ("b", n)):
        if order == 2:
            names.append(letter)
            inverses.append(len(names) - 1)
        else:
            names += [letter, letter.upper()]
            inverses += [len(names) - 1, len(names) - 2]
    pres = GroupPresentation(
        family="free_product",
        params=(("orders", (m, n)),),
        names=tuple(names),
        inverses=tuple(inverses),
    )
    return dataclasses.replace(pres, relators=(
        (pres._index("a"),) * m,
        (pres._index("b"),) * n,
    ))


def surface_group(genus: int) -> GroupPresentation:
    """
    Fundamental group of the closed orientable surface of genus >= 2,
    with the single relator [a1, b1] ... [ag, bg].
    """
    if genus < 2:
        raise InvalidInput(f"Surface groups need genus >= 2, got {genus}")
    names = []
    for i in range(1, genus + 1):
        names += [f"a{i}", f"A{i}", f"b{i}", f"B{i}"]
    relator = []
    for i in range(genus):
        a, b = 4 * i, 4 * i + 2
        relator += [a, b, a + 1, b + 1]
    return GroupPresentation(
        family="surface",
        params=(("genus", genus),),
        names=tuple(names),
        inverses=tuple(i ^ 1 for i in range(4 * genus)),
        relators=(tuple(relator),),
    )


def automaton_group(
        names: Sequence[str],
        inverses: Dict[str, str],
        automaton,
        normal_forms: Optional[Dict[str, str]] = None,
) -> GroupPresentation:
    """
    A group given by a user supplied geodesic automaton,
    optionally with a table of normal forms.
    """
    names = tuple(names)
    try:
        inverse_indices = tuple(names.index(inverses[n]) for n in names)
    except (KeyError, ValueError) as e:
        raise InvalidInput(f"Incomplete inverse table: {e}")
    pres = GroupPresentation(
        family="automaton",
        params=(),
        names=names,
        inverses=inverse_indices,
        automaton=automaton,
    )
    if normal_forms:
        table = {pres.parse(k): pres.parse(v) for k, v in normal_forms.items()}
        pres = dataclasses.replace(pres, normal_forms=table)
    return pres


def presentation_from_json(data: dict, automaton_loader=None) -> GroupPresentation:
    """
    {"family": "free|free_product|surface|automaton", "params": ...}
    """
    if not isinstance(data, dict):
        raise InvalidInput("Presentation must be an object")
    family = data.get("family")
    params = data.get("params") or {}
    if family == "free":
        return free_group(int(params.get("rank", 2)))
    elif family == "free_product":
        orders = params.get("orders", (3, 2))
        if len(orders) != 2:
            raise UnsupportedFamily(f"Only free products of two cyclic groups, got orders {orders}")
        return free_product(int(orders[0]), int(orders[1]))
    elif family == "surface":
        return surface_group(int(params.get("genus", 2)))
    elif family == "automaton":
        if automaton_loader is None:
            raise UnsupportedFamily("Automaton presentations need an automaton file")
        names = data.get("generators")
        if not names:
            raise InvalidInput("Automaton presentations need a 'generators' list")
        automaton = automaton_loader(data)
        return automaton_group(names, data.get("inverses") or {}, automaton, data.get("normal_forms"))
    raise UnsupportedFamily(f"Unknown family '{family}'")


# --- normal forms ---

def free_reduce(pres: GroupPresentation, word: Sequence[int]) -> Word:
    stack = []
    for x in word:
        if stack and stack[-1] == pres.inverses[x]:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


def _letter_info(pres: GroupPresentation) -> List[Tuple[int, int, int]]:
    """
    (factor, exponent, order) of each free product letter
    """
    orders = pres.param("orders")
    info = []
    for name in pres.names:
        factor = 0 if name.lower() == "a" else 1
        info.append((factor, 1 if name.islower() else -1, orders[factor]))
    return info


def syllables(pres: GroupPresentation, word: Sequence[int]) -> List[Tuple[int, int]]:
    """
    Reduced alternating syllables (factor, exponent mod order) of a free product word.
    """
    info = _letter_info(pres)
    stack = []
    for x in word:
        factor, exp, order = info[x]
        if stack and stack[-1][0] == factor:
            e = (stack[-1][1] + exp) % order
            if e:
                stack[-1] = (factor, e)
            else:
                stack.pop()
        else:
            stack.append((factor, exp % order))
    return stack


def syllable_word(pres: GroupPresentation, factor: int, exponent: int) -> Word:
    order = pres.param("orders")[factor]
    letter = "ab"[factor]
    exponent %= order
    if exponent <= order - exponent:
        return (pres._index(letter),) * exponent
    return (pres._index(letter.upper()),) * (order - exponent)


def syllable_length(order: int, exponent: int) -> int:
    exponent %= order
    return min(exponent, order - exponent)


@lru_cache(maxsize=16)
def _dehn_table(genus: int, relator: Word, inverses: Tuple[int, ...]) -> Dict[Word, Word]:
    """
    Maps the first 2g+1 letters of every cyclic rotation of the relator
    and its inverse to that rotation.
    """
    inverse = tuple(inverses[x] for x in reversed(relator))
    table = dict()
    for r in (relator, inverse):
        for i in range(len(r)):
            rot = r[i:] + r[:i]
            table[rot[:2 * genus + 1]] = rot
    return table


def dehn_reduce(pres: GroupPresentation, word: Sequence[int]) -> Word:
    """
    Dehn's algorithm: replace more than half of a relator
    by the inverse of the remaining part until nothing changes.
    The result is the empty word iff `word` is the identity.
    """
    genus = pres.param("genus")
    table = _dehn_table(genus, pres.relators[0], pres.inverses)
    key_len = 2 * genus + 1
    w = free_reduce(pres, word)
    changed = True
    while changed:
        changed = False
        for i in range(len(w) - key_len + 1):
            rot = table.get(w[i:i + key_len])
            if rot is None:
                continue
            n = key_len
            while n < len(rot) and i + n < len(w) and w[i + n] == rot[n]:
                n += 1
            w = free_reduce(pres, w[:i] + pres.inverse(rot[n:]) + w[i + n:])
            changed = True
            break
    return w


def normalize(pres: GroupPresentation, word: Sequence[int]) -> Word:
    """
    Normal form of `word`:

        free:          free reduction
        free_product:  alternating syllables with shortest exponents
        surface:       Dehn reduction (not necessarily geodesic)
        automaton:     table lookup or acceptance by the automaton
    """
    word = tuple(word)
    for x in word:
        if not 0 <= x < pres.num_generators:
            raise InvalidInput(f"Invalid letter {x}")

    if pres.family == "free":
        return free_reduce(pres, word)

    elif pres.family == "free_product":
        result = ()
        for factor, exp in syllables(pres, word):
            result += syllable_word(pres, factor, exp)
        return result

    elif pres.family == "surface":
        return dehn_reduce(pres, word)

    elif pres.family == "automaton":
        if pres.normal_forms and word in pres.normal_forms:
            return pres.normal_forms[word]
        if pres.automaton is not None and pres.automaton.accepts(word):
            return word
        raise UnsupportedFamily(
            f"Word '{pres.format(word)}' is neither in the normal form table nor accepted by the automaton"
        )

    raise UnsupportedFamily(f"Unknown family '{pres.family}'")


def is_identity(pres: GroupPresentation, word: Sequence[int]) -> bool:
    return not normalize(pres, word)


def equal(pres: GroupPresentation, w1: Sequence[int], w2: Sequence[int]) -> bool:
    return is_identity(pres, tuple(w1) + pres.inverse(w2))


def word_length(pres: GroupPresentation, word: Sequence[int]) -> int:
    if pres.family == "free_product":
        orders = pres.param("orders")
        return sum(syllable_length(orders[f], e) for f, e in syllables(pres, word))
    if pres.family == "surface":
        return _surface_length(pres, word)
    return len(normalize(pres, word))


def distance(pres: GroupPresentation, g: Sequence[int], h: Sequence[int]) -> int:
    """
    Word metric d(g, h) = |h^-1 g|
    """
    return word_length(pres, pres.inverse(h) + tuple(g))


def _surface_length(pres: GroupPresentation, word: Sequence[int]) -> int:
    """
    The Dehn reduced word is an upper bound, the ball
    of smaller radius decides the exact length.
    """
    from .ball_walker import ball

    reduced = dehn_reduce(pres, word)
    if len(reduced) <= 1:
        return len(reduced)
    index = ball(pres, len(reduced) - 1).find(reduced)
    if index is None:
        return len(reduced)
    return int(ball(pres, len(reduced) - 1).lengths[index])


# --- conjugacy ---

def is_cyclically_reduced(pres: GroupPresentation, word: Sequence[int]) -> bool:
    if len(word) < 2:
        return True
    if pres.family == "free_product":
        syl = syllables(pres, word)
        return len(syl) < 2 or syl[0][0] != syl[-1][0]
    return word[0] != pres.inverses[word[-1]]


def cyclic_key(pres: GroupPresentation, word: Sequence[int]) -> Tuple:
    """
    Lexicographically smallest rotation, by syllables for free products.
    """
    if pres.family == "free_product":
        syl = syllables(pres, word)
        if not syl:
            return ()
        return min(tuple(syl[i:] + syl[:i]) for i in range(len(syl)))
    word = tuple(word)
    if not word:
        return ()
    return min(word[i:] + word[:i] for i in range(len(word)))


def cyclic_representatives(pres: GroupPresentation, words: Sequence[Word]) -> Tuple[List[Word], bool]:
    """
    One cyclically reduced word per rotation class among `words`.

    The second value tells if the classes are exactly the conjugacy classes,
    which holds for free groups and free products.
    """
    seen = set()
    result = []
    for word in words:
        if not word or not is_cyclically_reduced(pres, word):
            continue
        key = cyclic_key(pres, word)
        if key in seen:
            continue
        seen.add(key)
        result.append(tuple(word))
    return result, pres.family in ("free", "free_product")


@dataclasses.dataclass(frozen=True)
class TranslationLength:
    # |g^n| / n at n = n_max
    ratio: float
    # min_k |g^k| / k
    upper_bound: float
    # (|g^n| - |g^(n/2)|) / (n/2), free of the additive constant
    estimate: float
    lengths: Tuple[int, ...]


def translation_length(pres: GroupPresentation, word: Sequence[int], n_max: int = 16) -> TranslationLength:
    word = tuple(word)
    if is_identity(pres, word):
        raise InvalidInput("Translation length of the identity")
    if n_max < 2:
        raise InvalidInput(f"n_max must be at least 2, got {n_max}")
    lengths = []
    power = ()
    for k in range(1, n_max + 1):
        power = normalize(pres, power + word) if pres.family != "surface" else dehn_reduce(pres, power + word)
        lengths.append(word_length(pres, power))
    half = n_max // 2
    return TranslationLength(
        ratio=lengths[-1] / n_max,
        upper_bound=min(l / (k + 1) for k, l in enumerate(lengths)),
        estimate=(lengths[n_max - 1] - lengths[half - 1]) / (n_max - half),
        lengths=tuple(lengths),
    )
