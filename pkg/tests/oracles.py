"""Brute-force reference implementations used to cross-check the package."""
import itertools
import random

from kog.parser import parse


def random_hierarchy(rng: random.Random, max_ifaces: int = 5):
    """A random acyclic interface hierarchy: I{k} may only extend lower-numbered interfaces."""
    n = rng.randint(1, max_ifaces)
    names = [f"I{k}" for k in range(n)]
    parents = {}
    for k, name in enumerate(names):
        parents[name] = sorted(rng.sample(names[:k], rng.randint(0, k))) if k else []
    lines = []
    for name in names:
        ext = f" extends {', '.join(parents[name])}" if parents[name] else ""
        lines.append(f"interface {name}{ext} {{ }}")
    lines.append("{ skip; }")
    return parse("\n".join(lines)), names, parents


def reaches(parents, a, b):
    """a ≼ b by graph search over the extends edges (Any tops everything)."""
    if b == "Any" or a == b:
        return True
    seen, todo = set(), [a]
    while todo:
        x = todo.pop()
        if x == b:
            return True
        if x in seen or x == "Any":
            continue
        seen.add(x)
        todo.extend(parents.get(x, []))
    return False


def group_le(parents, s1, s2):
    return all(any(reaches(parents, j, i) for j in s1) for i in s2)


def intf_oracle(parents, exports):
    names = {i for _, i in exports}
    return {i for i in names if not any(j != i and reaches(parents, j, i) for j in names)}


def subsets(names, max_size=None):
    top = len(names) if max_size is None else max_size
    for r in range(top + 1):
        yield from itertools.combinations(names, r)
