from typing import *  # pyright: ignore[reportWildcardImportFromLibrary]


class TrieNode:
    __slots__ = ('children', 'token_id')

    def __init__(self):
        self.children: dict[str, TrieNode] = {}
        self.token_id: int | None = None
        ''' Set if the path from the root to this node spells a token. '''

class TokenTrie:
    '''
    Character trie over a set of token strings.

    >>> trie = TokenTrie({"a": 4, "ab": 5, "abc": 6, "b": 7})
    >>> trie.longest_match("abd", 0)
    (5, 2)
    >>> sorted(trie.prefixes_of("abd"))
    [4, 5]
    >>> sorted(trie.extensions_of("ab"))
    [5, 6]
    '''

    def __init__(self, tokens: Mapping[str, int]):
        self.root = TrieNode()
        self.max_token_len = 0
        for token, token_id in tokens.items():
            self.insert(token, token_id)

    def insert(self, token: str, token_id: int) -> None:
        assert token, "Empty tokens cannot be stored."
        node = self.root
        for char in token:
            node = node.children.setdefault(char, TrieNode())
        node.token_id = token_id
        self.max_token_len = max(self.max_token_len, len(token))

    def _walk(self, text: str) -> TrieNode | None:
        node = self.root
        for char in text:
            child = node.children.get(char)
            if child is None:
                return None
            node = child
        return node

    def longest_match(self, text: str, start: int) -> tuple[int, int]:
        '''
        Returns:
            (token id, match length) of the longest token
            starting at `text[start]`, or (-1, 0) if none does.
        '''
        node = self.root
        best_id, best_len = -1, 0
        for i in range(start, len(text)):
            child = node.children.get(text[i])
            if child is None:
                break
            node = child
            if node.token_id is not None:
                best_id, best_len = node.token_id, i - start + 1
        return best_id, best_len

    def prefixes_of(self, text: str) -> list[int]:
        ''' Ids of stored tokens that are prefixes of `text` (including `text`). '''
        found = list[int]()
        node = self.root
        for char in text:
            child = node.children.get(char)
            if child is None:
                break
            node = child
            if node.token_id is not None:
                found.append(node.token_id)
        return found

    def extensions_of(self, text: str) -> list[int]:
        ''' Ids of stored tokens having `text` as a prefix (including `text`). '''
        start = self._walk(text)
        if start is None:
            return []
        found = list[int]()
        stack = [start]
        while stack:
            node = stack.pop()
            if node.token_id is not None:
                found.append(node.token_id)
            stack.extend(node.children.values())
        return found
