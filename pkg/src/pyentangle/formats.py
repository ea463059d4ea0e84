"""Text formats read and written by the CLI.

* Edge lists: a header ``n <N> directed <0|1>`` then one ``i j`` pair
  (0-indexed) per line.
* Flat ``key=value`` files with ``#`` comments, used for model specs and
  similarity settings. Vector values are comma lists; matrix values name a
  CSV file relative to the key-value file.
* CSV matrices without header.
"""

from pathlib import Path
from typing import Dict, List, Mapping, Tuple, Union

import numpy as np
from loguru import logger

from .enums import ModelKind
from .graph import Graph
from .netmodel import (
    DyadicLogisticSpec,
    InnerProductSpec,
    NetworkModelSpec,
    NodeEffectFitSpec,
    ProductExpSpec,
)

PathLike = Union[str, Path]


def _content_lines(text: str) -> List[Tuple[int, str]]:
    """Non-blank lines with comments stripped, paired with their line numbers."""
    lines = []
    for line_num, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if stripped:
            lines.append((line_num, stripped))
    return lines


def parse_key_values(text: str) -> Dict[str, str]:
    """Parse ``key=value`` lines; later keys override earlier ones."""
    values: Dict[str, str] = {}
    for line_num, line in _content_lines(text):
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"Line {line_num}: expected key=value, got '{line}'")
        values[key.strip()] = value.strip()
    return values


def read_key_values(path: PathLike) -> Dict[str, str]:
    """Read a key-value file."""
    with open(path, "r", encoding="utf-8") as f:
        values = parse_key_values(f.read())
    logger.debug(f"Read {len(values)} settings from {path}")
    return values


def format_key_values(values: Mapping[str, object]) -> str:
    return "".join(f"{key}={value}\n" for key, value in values.items())


def parse_edge_list(text: str) -> Graph:
    """Parse an edge list with its ``n <N> directed <0|1>`` header."""
    lines = _content_lines(text)
    if not lines:
        raise ValueError("Edge list is empty; expected a 'n <N> directed <0|1>' header")
    header_num, header = lines[0]
    tokens = header.split()
    if len(tokens) != 4 or tokens[0] != "n" or tokens[2] != "directed":
        raise ValueError(f"Line {header_num}: bad header '{header}'")
    n, directed = int(tokens[1]), tokens[3] == "1"

    edges = []
    for line_num, line in lines[1:]:
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ValueError(f"Line {line_num}: expected 'i j', got '{line}'")
        edges.append((int(parts[0]), int(parts[1])))
    return Graph.from_edges(n, edges, directed=directed)


def read_edge_list(path: PathLike) -> Graph:
    with open(path, "r", encoding="utf-8") as f:
        graph = parse_edge_list(f.read())
    logger.debug(f"Loaded {graph!r} from {path}")
    return graph


def format_edge_list(graph: Graph) -> str:
    lines = [f"n {graph.n} directed {int(graph.directed)}"]
    lines += [f"{i} {j}" for i, j in graph.edges()]
    return "\n".join(lines) + "\n"


def read_matrix(path: PathLike) -> np.ndarray:
    """Read a headerless CSV matrix as a 2-D float array."""
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_matrix(matrix: np.ndarray, path: PathLike) -> None:
    np.savetxt(path, np.atleast_2d(matrix), delimiter=",", fmt="%.17g")


def _vector(value: str, base: Path) -> np.ndarray:
    """Comma list, or a CSV file flattened to a vector."""
    try:
        return np.array([float(v) for v in value.split(",") if v.strip()])
    except ValueError:
        return read_matrix(base / value).ravel()


def _matrix(value: str, base: Path) -> np.ndarray:
    return read_matrix(base / value)


def _flag(value: str) -> bool:
    if value.lower() not in ("0", "1", "true", "false"):
        raise ValueError(f"Expected a 0/1 flag, got '{value}'")
    return value.lower() in ("1", "true")


def _require(values: Mapping[str, str], *keys: str) -> None:
    missing = [key for key in keys if key not in values]
    if missing:
        raise ValueError(f"Model spec is missing {', '.join(missing)}")


def model_spec_from_mapping(
    values: Mapping[str, str], base: PathLike = "."
) -> NetworkModelSpec:
    """Build a network model from key-value settings.

    Args:
        values: Settings including ``model`` (a ``ModelKind`` value)
        base: Directory against which matrix file names resolve

    Returns:
        The model spec
    """
    base = Path(base)
    _require(values, "model")
    kind = ModelKind(values["model"])

    if kind is ModelKind.INNER_PRODUCT:
        _require(values, "a", "b", "covariates")
        return InnerProductSpec(
            a=float(values["a"]),
            b=float(values["b"]),
            covariates=_matrix(values["covariates"], base),
            tau=float(values.get("tau", 1.0)),
        )
    if kind is ModelKind.DYADIC_LOGISTIC:
        _require(values, "node_effects", "b", "dyadic_covariates")
        return DyadicLogisticSpec(
            node_effects=_vector(values["node_effects"], base),
            b=float(values["b"]),
            dyadic_covariates=_matrix(values["dyadic_covariates"], base),
            directed=_flag(values.get("directed", "0")),
        )
    if kind is ModelKind.PRODUCT_EXP:
        _require(values, "covariates")
        return ProductExpSpec(
            covariates=_vector(values["covariates"], base),
            intercept=float(values.get("intercept", 1.0)),
        )
    _require(values, "intercept", "node_effects", "d", "dyadic_covariates")
    return NodeEffectFitSpec(
        intercept=float(values["intercept"]),
        node_effects=_vector(values["node_effects"], base),
        d=float(values["d"]),
        dyadic_covariates=_matrix(values["dyadic_covariates"], base),
        directed=_flag(values.get("directed", "1")),
        ridge_lambda=float(values.get("ridge_lambda", 0.1)),
    )


def read_model_spec(path: PathLike) -> NetworkModelSpec:
    path = Path(path)
    spec = model_spec_from_mapping(read_key_values(path), base=path.parent)
    logger.info(f"Loaded {spec.kind.value} model on {spec.n} units from {path}")
    return spec


def _list(values: np.ndarray) -> str:
    return ",".join(repr(float(v)) for v in np.ravel(values))


def write_model_spec(spec: NetworkModelSpec, path: PathLike) -> None:
    """Write a model spec; matrices go to ``<stem>.<key>.csv`` next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    def matrix_file(key: str, matrix: np.ndarray) -> str:
        name = f"{path.stem}.{key}.csv"
        write_matrix(matrix, path.parent / name)
        return name

    values: Dict[str, object] = {"model": spec.kind.value}
    if isinstance(spec, InnerProductSpec):
        values.update(
            a=repr(float(spec.a)),
            b=repr(float(spec.b)),
            tau=repr(float(spec.tau)),
            covariates=matrix_file("covariates", spec.covariates),
        )
    elif isinstance(spec, DyadicLogisticSpec):
        values.update(
            node_effects=_list(spec.node_effects),
            b=repr(float(spec.b)),
            dyadic_covariates=matrix_file("dyadic_covariates", spec.dyadic_covariates),
            directed=int(spec.directed),
        )
    elif isinstance(spec, ProductExpSpec):
        values.update(
            covariates=_list(spec.covariates), intercept=repr(float(spec.intercept))
        )
    elif isinstance(spec, NodeEffectFitSpec):
        values.update(
            intercept=repr(float(spec.intercept)),
            node_effects=_list(spec.node_effects),
            d=repr(float(spec.d)),
            dyadic_covariates=matrix_file("dyadic_covariates", spec.dyadic_covariates),
            directed=int(spec.directed),
            ridge_lambda=repr(float(spec.ridge_lambda)),
        )
    else:
        raise TypeError(f"Cannot write model spec of type {type(spec).__name__}")

    with open(path, "w", encoding="utf-8") as f:
        f.write(format_key_values(values))
    logger.debug(f"Wrote {spec.kind.value} model spec to {path}")
