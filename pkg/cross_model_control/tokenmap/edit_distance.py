from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]


def edit_distance(a: str, b: str) -> int:
    '''
    Case-sensitive Levenshtein distance with unit costs,
    over Unicode code points. O(min(len)) memory.

    >>> edit_distance("ultimate", "estimate")
    2
    >>> edit_distance("ultimate", "ultimately")
    2
    >>> edit_distance("a", "A")
    1
    '''
    if len(a) < len(b):
        a, b = b, a
    # b is the shorter string
    previous = list(range(len(b) + 1))
    for i, char_a in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, char_b in enumerate(b, start=1):
            current[j] = min(
                previous[j] + 1,                        # delete
                current[j - 1] + 1,                     # insert
                previous[j - 1] + (char_a != char_b),   # substitute
            )
        previous = current
    return previous[len(b)]
