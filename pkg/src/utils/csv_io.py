"""
CSV readers and writers

Files use 1-based node indices; everything returned to or accepted from
the library is 0-based.
"""
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, TextIO, Union

import numpy as np
import pandas as pd

from ..config import Config
from ..models.graph import Graph, Spectrum
from .errors import (
    DuplicateEdge, InvalidVariance, NegativeWeight, NodeIndexOutOfRange,
    ParseError, SelfLoop, VertexCountMismatch, ZeroWeight,
)

logger = logging.getLogger(__name__)

Target = Union[str, Path, TextIO]

GRAPH_COLUMNS = ['src', 'dst', 'weight']
SIGNAL_COLUMNS = ['node', 'value']
NOISE_COLUMNS = ['node', 'variance']


# ------------------------------------------------------------------ readers

def _read_table(path, columns: List[str]) -> pd.DataFrame:
    """Read a headed CSV as strings, with a `line` column of 1-based file lines"""
    path = Path(path)
    if not path.is_file():
        raise ParseError("file not found", path=str(path))
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False,
                         skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise ParseError("file is empty", line=1, path=str(path)) from e
    except pd.errors.ParserError as e:
        raise ParseError(f"malformed CSV: {e}", path=str(path)) from e

    header = [str(c).strip() for c in df.columns]
    if header != columns:
        raise ParseError(f"expected header '{','.join(columns)}', got '{','.join(header)}'",
                         line=1, path=str(path))
    df.columns = columns
    df[columns] = df[columns].fillna('')
    df['line'] = df.index + 2
    blank = (df[columns].apply(lambda col: col.str.strip()) == '').all(axis=1)
    return df[~blank].reset_index(drop=True)


def _parse_index(raw: str, line: int, path, what: str) -> int:
    try:
        value = float(raw)
    except ValueError:
        raise ParseError(f"{what} '{raw}' is not an integer", line=line, path=str(path))
    if not np.isfinite(value) or value != int(value):
        raise ParseError(f"{what} '{raw}' is not an integer", line=line, path=str(path))
    if value < 1:
        raise NodeIndexOutOfRange(f"{what} {int(value)} is below 1", line=line, path=str(path))
    return int(value) - 1


def _parse_float(raw: str, line: int, path, what: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ParseError(f"{what} '{raw}' is not a number", line=line, path=str(path))
    if not np.isfinite(value):
        raise ParseError(f"{what} '{raw}' is not finite", line=line, path=str(path))
    return value


def load_graph_csv(path, num_vertices: Optional[int] = None) -> Graph:
    """
    Load an undirected weighted edge list

    The vertex count is the largest index in the file unless
    num_vertices is given. Rows may come in any order. Files written
    here always have src < dst, but a row with src > dst is accepted
    and stored as (dst, src); giving both orientations of one pair is a
    DuplicateEdge.

    Raises:
        ParseError, DuplicateEdge, SelfLoop, NegativeWeight, ZeroWeight,
        NodeIndexOutOfRange: with the offending file line
    """
    df = _read_table(path, GRAPH_COLUMNS)
    if df.empty:
        raise ParseError("no edges", line=2, path=str(path))

    first_line = {}
    edges = []
    for row in df.itertuples(index=False):
        i = _parse_index(row.src, row.line, path, "src")
        j = _parse_index(row.dst, row.line, path, "dst")
        w = _parse_float(row.weight, row.line, path, "weight")
        if i == j:
            raise SelfLoop(f"self-loop at node {i + 1}", line=row.line, path=str(path))
        if w < 0:
            raise NegativeWeight(f"negative weight {w}", line=row.line, path=str(path))
        if w == 0:
            raise ZeroWeight("zero weight", line=row.line, path=str(path))
        key = (min(i, j), max(i, j))
        if key in first_line:
            raise DuplicateEdge(
                f"edge {key[0] + 1}-{key[1] + 1} already given on line {first_line[key]}",
                line=row.line, path=str(path),
            )
        first_line[key] = row.line
        edges.append((key[0], key[1], w))

    largest = max(j for _, j, _ in edges) + 1
    M = largest if num_vertices is None else int(num_vertices)
    if largest > M:
        line = max(first_line[(i, j)] for i, j, _ in edges if j >= M)
        raise NodeIndexOutOfRange(f"node {largest} exceeds the {M} declared vertices",
                                  line=line, path=str(path))
    logger.info(f"Loaded {len(edges)} edges on {M} nodes from {path}")
    return Graph(M, tuple(edges))


def _load_node_values(path, columns: List[str], num_vertices: Optional[int]) -> np.ndarray:
    df = _read_table(path, columns)
    if df.empty:
        raise ParseError("no rows", line=2, path=str(path))
    values = {}
    for row in df.itertuples(index=False):
        node = _parse_index(row.node, row.line, path, "node")
        if node in values:
            raise ParseError(f"node {node + 1} listed twice", line=row.line, path=str(path))
        values[node] = (_parse_float(getattr(row, columns[1]), row.line, path, columns[1]), row.line)

    M = max(values) + 1 if num_vertices is None else int(num_vertices)
    if len(values) != M or max(values) >= M:
        raise VertexCountMismatch(f"{path}: file covers {len(values)} nodes, graph has {M}")
    out = np.empty(M)
    for node, (value, _) in values.items():
        out[node] = value
    return out


def load_signal_csv(path, num_vertices: Optional[int] = None) -> np.ndarray:
    """Graph signal from `node,value` rows; every node must appear once"""
    return _load_node_values(path, SIGNAL_COLUMNS, num_vertices)


def load_node_noise_csv(path, num_vertices: Optional[int] = None) -> np.ndarray:
    """Per-node noise variances from `node,variance` rows (all positive)"""
    variances = _load_node_values(path, NOISE_COLUMNS, num_vertices)
    if np.any(variances <= 0):
        node = int(np.flatnonzero(variances <= 0)[0])
        raise InvalidVariance(f"{path}: node {node + 1} has non-positive variance {variances[node]}")
    return variances


# ------------------------------------------------------------------ writers

@contextmanager
def _open_target(out: Target):
    if isinstance(out, (str, Path)):
        with open(out, 'w', newline='') as f:
            yield f
    else:
        yield out


def _write_frame(df: pd.DataFrame, out: Target, comments: Sequence[str] = ()):
    with _open_target(out) as f:
        for line in comments:
            f.write(f"# {line}\n")
        df.to_csv(f, index=False, float_format=Config.FLOAT_FORMAT, lineterminator='\n')


def write_graph_csv(g: Graph, out: Target):
    df = pd.DataFrame(
        [(i + 1, j + 1, w) for i, j, w in g.edges], columns=GRAPH_COLUMNS
    )
    _write_frame(df, out)


def write_signal_csv(values, out: Target):
    values = np.asarray(values, dtype=float).reshape(-1)
    df = pd.DataFrame({'node': np.arange(1, values.size + 1), 'value': values})
    _write_frame(df, out)


def write_spectrum_csv(spec: Spectrum, out: Target):
    df = pd.DataFrame({'index': np.arange(1, spec.size + 1), 'eigenvalue': spec.eigenvalues})
    _write_frame(df, out)


def write_eigenvectors_csv(spec: Spectrum, out: Target):
    """One row per node, one column v<k> per eigenvector"""
    df = pd.DataFrame(spec.eigenvectors, columns=[f"v{k}" for k in range(1, spec.size + 1)])
    df.insert(0, 'node', np.arange(1, spec.size + 1))
    _write_frame(df, out)


def write_risk_matrix_csv(matrix, out: Target):
    """Row-major `i,j,value` dump of a square matrix"""
    matrix = np.asarray(matrix, dtype=float)
    rows, cols = np.indices(matrix.shape)
    df = pd.DataFrame({
        'i': rows.reshape(-1) + 1,
        'j': cols.reshape(-1) + 1,
        'value': matrix.reshape(-1),
    })
    _write_frame(df, out)


def write_bound_summary_csv(records: Iterable[dict], out: Target):
    """One `model,policy,M,R,D,sigma2,trace` line per bound"""
    columns = ['model', 'policy', 'M', 'R', 'D', 'sigma2', 'trace']
    df = pd.DataFrame([{c: r.get(c, '-') for c in columns} for r in records], columns=columns)
    _write_frame(df, out)


def write_selection_csv(rows: Iterable[dict], out: Target):
    """`policy,param,selection,objective` lines for placement results"""
    columns = ['policy', 'param', 'selection', 'objective']
    df = pd.DataFrame([{c: r.get(c, '-') for c in columns} for r in rows], columns=columns)
    _write_frame(df, out)


def write_montecarlo_csv(result, out: Target, version: str):
    """
    Sweep CSV with `#` metadata lines

    The metadata holds only what determines the numbers (version, PRNG,
    seed) so that reruns compare byte for byte.
    """
    columns = ['sweep_value', 'policy', 'empirical_root_wmse', 'se', 'crb_root', 'trials']
    df = pd.DataFrame([r.to_dict() for r in result.records], columns=columns)
    comments = [f"graph-crb {version}", f"prng {result.prng}", f"seed {result.seed}"]
    _write_frame(df, out, comments)
