"""Built-in models addressable by name.

Grammar::

    spec  := name | name "(" arg ("," arg)* ")"
    arg   := number | spec

Models: ``quadratic``, ``quadratic2d``, ``quartic-p``, ``quartic-p2d``,
``pendulum(a)`` or ``pendulum(a, k)`` for ``V = a cos(2 pi k x)``,
``pendulum2d(a, b)`` for ``V = a cos(2 pi x1) + b cos(2 pi x2)`` and
``composed(model, phi)``.

Functions ``phi`` for ``composed``: ``identity``, ``affine(a, b)`` for
``a h + b`` and ``quad(s)`` for ``(h + s) + (h + s)^2 / 2``.
"""

from __future__ import annotations

import re

import numpy as np

from .model import HamiltonianModel, compose_convex, make_mechanical, make_momentum_only

__all__ = ["parse_spec", "build_model", "build_phi", "RegistryError", "MODEL_NAMES"]

MODEL_NAMES = ("quadratic", "quadratic2d", "quartic-p", "quartic-p2d", "pendulum",
               "pendulum2d", "composed")

_TOKEN = re.compile(r"\s*(?:([A-Za-z][A-Za-z0-9_\-]*)|([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)|(.))")


class RegistryError(ValueError):
    pass


def _tokens(text: str):
    pos = 0
    out = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        name, num, sym = m.groups()
        if name:
            out.append(("name", name))
        elif num:
            out.append(("num", float(num)))
        elif sym:
            if sym not in "(),":
                raise RegistryError(f"unexpected character {sym!r} in {text!r}")
            out.append(("sym", sym))
        pos = m.end()
    return out


def parse_spec(text: str):
    """Parse a model spec into nested ``(name, args)`` tuples."""
    toks = _tokens(text)
    if not toks:
        raise RegistryError("empty model spec")
    tree, pos = _parse(toks, 0, text)
    if pos != len(toks):
        raise RegistryError(f"trailing input in {text!r}")
    return tree


def _parse(toks, pos, text):
    kind, val = toks[pos]
    if kind == "num":
        return val, pos + 1
    if kind != "name":
        raise RegistryError(f"malformed spec {text!r}")
    pos += 1
    args = []
    if pos < len(toks) and toks[pos] == ("sym", "("):
        pos += 1
        while True:
            if pos >= len(toks):
                raise RegistryError(f"unclosed parenthesis in {text!r}")
            arg, pos = _parse(toks, pos, text)
            args.append(arg)
            if pos >= len(toks):
                raise RegistryError(f"unclosed parenthesis in {text!r}")
            if toks[pos] == ("sym", ")"):
                pos += 1
                break
            if toks[pos] != ("sym", ","):
                raise RegistryError(f"expected ',' in {text!r}")
            pos += 1
    return (val, tuple(args)), pos


def _numbers(name, args, lo, hi):
    if not lo <= len(args) <= hi or any(isinstance(a, tuple) for a in args):
        raise RegistryError(f"{name} takes {lo}..{hi} numeric arguments")
    return [float(a) for a in args]


def _canon(tree) -> str:
    if not isinstance(tree, tuple):
        return f"{tree:g}"
    name, args = tree
    return name if not args else f"{name}({','.join(_canon(a) for a in args)})"


def build_phi(tree):
    name, args = tree if isinstance(tree, tuple) else (None, ())
    if name == "identity":
        _numbers(name, args, 0, 0)
        return lambda h: h
    if name == "affine":
        a, b = _numbers(name, args, 2, 2)
        if a <= 0:
            raise RegistryError("affine phi needs a > 0")
        return lambda h: a * h + b
    if name == "quad":
        (s,) = _numbers(name, args, 0, 1) or [0.0]
        return lambda h: (h + s) + (h + s) ** 2 / 2
    raise RegistryError(f"unknown phi {_canon(tree)!r}")


def build_model(spec) -> HamiltonianModel:
    """Model for a spec string (or parsed tree); the label is the canonical
    spec, so equal labels mean equal models."""
    tree = parse_spec(spec) if isinstance(spec, str) else spec
    if not isinstance(tree, tuple):
        raise RegistryError("a model spec must start with a name")
    name, args = tree
    label = _canon(tree)
    if name == "quadratic":
        _numbers(name, args, 0, 0)
        return make_momentum_only(lambda p: p ** 2 / 2, 1, label)
    if name == "quadratic2d":
        _numbers(name, args, 0, 0)
        return make_momentum_only(lambda p, q: (p ** 2 + q ** 2) / 2, 2, label)
    if name == "quartic-p":
        _numbers(name, args, 0, 0)
        return make_momentum_only(lambda p: p ** 4 / 4 + p ** 2 / 2, 1, label)
    if name == "quartic-p2d":
        _numbers(name, args, 0, 0)
        return make_momentum_only(
            lambda p, q: p ** 4 / 4 + p ** 2 / 2 + q ** 4 / 4 + q ** 2 / 2, 2, label)
    if name == "pendulum":
        vals = _numbers(name, args, 1, 2)
        a = vals[0]
        k = vals[1] if len(vals) > 1 else 1.0
        if k != int(k) or k < 1:
            raise RegistryError("pendulum frequency must be a positive integer")
        return make_mechanical(lambda x: a * np.cos(2 * np.pi * k * x), 1.0, 1, label)
    if name == "pendulum2d":
        a, b = _numbers(name, args, 2, 2)
        return make_mechanical(
            lambda x, y: a * np.cos(2 * np.pi * x) + b * np.cos(2 * np.pi * y), 1.0, 2, label)
    if name == "composed":
        if len(args) != 2 or not all(isinstance(a, tuple) for a in args):
            raise RegistryError("composed takes (model, phi)")
        base = build_model(args[0])
        try:
            return compose_convex(base, build_phi(args[1]), label)
        except RegistryError:
            raise
        except ValueError as exc:
            raise RegistryError(str(exc)) from exc
    raise RegistryError(f"unknown model {name!r}")
