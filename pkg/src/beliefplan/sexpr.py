"""Minimal s-expression reader that keeps source positions."""
from __future__ import annotations

from dataclasses import dataclass, field


class SExprError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.msg = message
        self.line = line
        self.col = col
        where = f"line {line}, col {col}: " if line else ""
        super().__init__(where + message)


@dataclass
class Atom:
    value: str
    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        return self.value


@dataclass
class SList:
    items: list = field(default_factory=list)
    line: int = 0
    col: int = 0

    def head(self) -> str | None:
        if self.items and isinstance(self.items[0], Atom):
            return self.items[0].value
        return None

    def __str__(self) -> str:
        return "(" + " ".join(str(x) for x in self.items) + ")"


def tokenize(text: str):
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            yield ch, line, col
            i += 1
            col += 1
            continue
        start, start_col = i, col
        while i < n and not text[i].isspace() and text[i] not in "();":
            i += 1
            col += 1
        yield text[start:i], line, start_col


def read_all(text: str) -> list:
    stack: list[SList] = [SList()]
    for tok, line, col in tokenize(text):
        if tok == "(":
            stack.append(SList([], line, col))
        elif tok == ")":
            if len(stack) == 1:
                raise SExprError("unbalanced ')'", line, col)
            done = stack.pop()
            stack[-1].items.append(done)
        else:
            stack[-1].items.append(Atom(tok.lower() if tok.startswith(":") else tok, line, col))
    if len(stack) != 1:
        open_ = stack[-1]
        raise SExprError("unclosed '('", open_.line, open_.col)
    return stack[0].items


def read_one(text: str):
    items = read_all(text)
    if len(items) != 1:
        raise SExprError(f"expected one expression, found {len(items)}")
    return items[0]
