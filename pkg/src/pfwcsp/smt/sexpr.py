"""Minimal SMT-LIB2 s-expression reader (symbols, |quoted|, "strings", ints)."""

from __future__ import annotations

from typing import List, Optional, Tuple, Union

Sexpr = Union[str, int, list]


def tokenize(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c == ";":
            j = text.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if c in "()":
            yield c
            i += 1
            continue
        if c == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise ValueError("unterminated |symbol|")
            yield text[i + 1: j]
            i = j + 1
            continue
        if c == '"':
            j = i + 1
            buf = []
            while j < n:
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        buf.append('"')
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            yield '"' + "".join(buf)
            i = j + 1
            continue
        j = i
        while j < n and not text[j].isspace() and text[j] not in "()|;\"":
            j += 1
        yield text[i: j]
        i = j


def parse_all(text: str) -> List[Sexpr]:
    stack: List[list] = []
    out: List[Sexpr] = []
    for tok in tokenize(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if not stack:
                raise ValueError("unbalanced ')'")
            done = stack.pop()
            (stack[-1] if stack else out).append(done)
        else:
            atom: Sexpr = tok
            if tok.lstrip("-").isdigit() and tok not in ("-",):
                atom = int(tok)
            (stack[-1] if stack else out).append(atom)
    if stack:
        raise ValueError("unbalanced '('")
    return out


def complete_prefix(text: str) -> Optional[int]:
    """Offset just past the first complete s-expression, or None if incomplete."""
    depth = 0
    i, n = 0, len(text)
    started = False
    while i < n:
        c = text[i]
        if c == ";":
            j = text.find("\n", i)
            if j < 0:
                return None
            i = j + 1
            continue
        if c == "|":
            j = text.find("|", i + 1)
            if j < 0:
                return None
            i = j + 1
            started = True
            if depth == 0:
                break
            continue
        if c == '"':
            j = i + 1
            while j < n:
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        j += 2
                        continue
                    break
                j += 1
            if j >= n:
                return None
            i = j + 1
            started = True
            if depth == 0:
                break
            continue
        if c == "(":
            depth += 1
            started = True
        elif c == ")":
            depth -= 1
            if depth == 0:
                return i + 1
            if depth < 0:
                raise ValueError("unbalanced ')'")
        elif not c.isspace():
            started = True
            if depth == 0:
                while i < n and not text[i].isspace() and text[i] not in "()|;\"":
                    i += 1
                return i
        i += 1
    if started and depth == 0:
        return i
    return None
