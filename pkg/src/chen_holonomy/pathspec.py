"""Declarative path descriptions: JSON objects or compact ``family:key=value`` strings.

JSON forms::

    {"type": "parametric", "name": "line", "params": {"v": [1, 1]}}
    {"type": "polynomial", "arity": 2, "coeffs": [...], "ambient": "conf:m=2,n=2"}
    {"type": "compose", "op": "vertical2", "children": [<spec>, <spec>]}

The string ``line:v=1,1`` is shorthand for the parametric form; a value
continues over later comma-separated items that carry no ``=``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import paths as P
from .forms import AmbientSpace, configuration_space, euclidean, punctured_plane
from .presets import braid_generator, circle_loop, full_twist_loop, line_path, wrap3_path


class PathSpecError(ValueError):
    pass


def parse_ambient(text: str | None, dim: int) -> AmbientSpace:
    if text is None:
        return euclidean(dim)
    name, _, rest = text.partition(":")
    params = {k: int(v) for k, v in (p.split("=") for p in rest.split(",") if p)} if rest else {}
    if name == "euclidean":
        return euclidean(dim)
    if name == "punctured-plane":
        return punctured_plane()
    if name == "conf":
        space = configuration_space(params.get("m", 2), params.get("n", 2))
        if space.dim != dim:
            raise PathSpecError(f"ambient {text} has dimension {space.dim}, path has {dim}")
        return space
    raise PathSpecError(f"unknown ambient {text!r}")


def _floats(value):
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    return arr


def _parametric(name: str, params: dict) -> P.NPath:
    eps = float(params.get("eps", P.DEFAULT_MARGIN))
    try:
        if name == "line":
            return line_path(_floats(params["v"]), params.get("start") and _floats(params["start"]), eps)
        if name == "circle-loop":
            center = _floats(params.get("center", [0.0, 0.0]))
            return circle_loop(int(params.get("w", 1)), float(params.get("r", params.get("radius", 1.0))), center, eps)
        if name == "full-twist":
            return full_twist_loop(int(params.get("w", 1)), float(params.get("r", params.get("radius", 1.0))), eps)
        if name == "braid-generator":
            return braid_generator(int(params.get("m", 2)), int(params.get("i", 1)) - 1, int(params.get("half_twists", 1)), eps)
        if name == "figure-wrap":
            return wrap3_path(int(params.get("w", 1)), int(params.get("m", 2)), eps)
        if name == "constant":
            point = _floats(params["point"])
            return P.constant_path(point, int(params.get("arity", 1)), parse_ambient(params.get("ambient"), len(point)))
    except KeyError as exc:
        raise PathSpecError(f"family {name} needs parameter {exc.args[0]}") from exc
    raise PathSpecError(f"unknown path family {name!r}")


def _split_params(text: str) -> dict:
    params: dict = {}
    key = None
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" in item:
            key, value = item.split("=", 1)
            params[key.strip()] = [value.strip()]
        elif key is None:
            raise PathSpecError(f"parameter {item!r} must be key=value")
        else:
            params[key].append(item)
    out = {}
    for k, values in params.items():
        nums = []
        for v in values:
            try:
                nums.append(float(v))
            except ValueError:
                nums = None
                break
        if nums is None:
            out[k] = ",".join(values)
        else:
            out[k] = nums[0] if len(nums) == 1 and k not in ("v", "start", "center", "point") else nums
    return out


_COMPOSE = {
    "compose1": P.compose1,
    "vertical2": P.vertical2,
    "horizontal2": P.horizontal2,
    "lam-lower": P.lam_horizontal_lower,
    "lam-upper": P.lam_horizontal_upper,
    "upward3": P.upward3,
    "vertical3": P.vertical3,
    "horizontal3": P.lam_horizontal3,
    "horizontal3-upper": P.lam_horizontal3_upper,
    "whisker2-left": lambda gamma, g: P.whisker2(gamma, g, "left"),
    "whisker2-right": lambda g, gamma: P.whisker2(gamma, g, "right"),
    "whisker3-left": lambda gamma, J: P.whisker3(gamma, J, "left"),
    "whisker3-right": lambda J, gamma: P.whisker3(gamma, J, "right"),
}


def path_from_dict(data: dict) -> P.NPath:
    kind = data.get("type")
    if kind == "parametric":
        return _parametric(data["name"], data.get("params", {}))
    if kind == "polynomial":
        coeffs = np.asarray(data["coeffs"], dtype=float)
        arity = int(data.get("arity", coeffs.ndim - 1))
        if coeffs.ndim != arity + 1:
            raise PathSpecError(f"coefficients of a {arity}-path need {arity + 1} axes, got {coeffs.ndim}")
        if not 1 <= arity <= 4:
            raise PathSpecError("supported arities are 1 to 4")
        raw = P.PolynomialMap(coeffs)
        path = P.make_sitting(raw, float(data.get("eps", P.DEFAULT_MARGIN)), parse_ambient(data.get("ambient"), raw.dim))
        if arity > 1 and P.check_face_collapse(path) > 1e-12:
            raise PathSpecError("polynomial path does not collapse its t = 0 and t = 1 faces to points")
        return path
    if kind == "compose":
        op = data["op"]
        if op not in _COMPOSE:
            raise PathSpecError(f"unknown composition {op!r}; choose from {sorted(_COMPOSE)}")
        children = [path_from_dict(c) if isinstance(c, dict) else parse_path(c) for c in data["children"]]
        if len(children) != 2:
            raise PathSpecError("compositions take exactly two children")
        try:
            return _COMPOSE[op](*children)
        except P.PathError as exc:
            raise PathSpecError(str(exc)) from exc
    raise PathSpecError(f"unknown path spec type {kind!r}")


def parse_path(text: str, base_dir: Path | None = None) -> P.NPath:
    """Elaborate a path from a JSON file, a JSON literal or a ``family:params`` string."""
    text = text.strip()
    if text.startswith("{"):
        return path_from_dict(json.loads(text))
    candidate = Path(text)
    if base_dir is not None and not candidate.is_absolute():
        candidate = base_dir / candidate
    if text.endswith(".json") or candidate.is_file():
        return path_from_dict(json.loads(candidate.read_text()))
    name, _, rest = text.partition(":")
    return _parametric(name, _split_params(rest))
