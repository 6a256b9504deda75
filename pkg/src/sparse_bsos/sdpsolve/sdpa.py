"""SDPA sparse format (.dat-s) export/import.

A program ``max c.x s.t. rows`` maps onto the SDPA *dual* form
``max <F0, Y> s.t. <F_r, Y> = b_r, Y psd``: psd blocks are listed first,
followed by one diagonal block (negative size) holding the free variables
split as ``x = x_plus - x_minus`` and then the nonnegative variables.
Entries are written as ``matno blkno i j value`` with 1-based ``i <= j``.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import IO, List, Optional, Union

import numpy as np
import scipy.sparse as sp

PathLike = Union[str, os.PathLike]


def _fmt(v: float) -> str:
    return repr(float(v))


def _records(program):
    """Sorted (matno, blkno, i, j, value) tuples of the export."""
    recs = []
    nb = len(program.psd_sizes)
    for b, (rows, ii, jj, vv) in enumerate(program.psd_entries):
        for r, i, j, v in zip(rows.tolist(), ii.tolist(), jj.tolist(), vv.tolist()):
            recs.append((r + 1, b + 1, i + 1, j + 1, v))
    lin_blk = nb + 1
    nf = program.n_free
    A = program.A_lin.tocoo()
    for r, col, v in zip(A.row.tolist(), A.col.tolist(), A.data.tolist()):
        if col < nf:
            recs.append((r + 1, lin_blk, col + 1, col + 1, v))
            recs.append((r + 1, lin_blk, nf + col + 1, nf + col + 1, -v))
        else:
            pos = nf + col + 1
            recs.append((r + 1, lin_blk, pos, pos, v))
    for col, v in enumerate(program.c.tolist()):
        if v == 0.0:
            continue
        if col < nf:
            recs.append((0, lin_blk, col + 1, col + 1, v))
            recs.append((0, lin_blk, nf + col + 1, nf + col + 1, -v))
        else:
            recs.append((0, lin_blk, nf + col + 1, nf + col + 1, v))
    recs = [r for r in recs if r[4] != 0.0]
    recs.sort(key=lambda t: t[:4])
    return recs


def write_sdpa(program, out: Union[PathLike, IO[str]]) -> None:
    lin_size = 2 * program.n_free + program.n_nonneg
    sizes = [str(s) for s in program.psd_sizes]
    if lin_size:
        sizes.append(str(-lin_size))
    lines = [
        f"{program.n_rows}",
        f"{len(sizes)}",
        " ".join(sizes),
        " ".join(_fmt(v) for v in program.rhs),
    ]
    lines.extend(f"{m} {b} {i} {j} {_fmt(v)}" for m, b, i, j, v in _records(program))
    text = "\n".join(lines) + "\n"
    if hasattr(out, "write"):
        out.write(text)
    else:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(text)


export_sdpa = write_sdpa


def read_sdpa(path: PathLike):
    """Parse a .dat-s file back into a ConicProgram (all linear variables nonnegative).

    Free variables come back as their nonnegative split, which is the exact
    meaning of the file.
    """
    from ..sdpbuild import ConicProgram

    with open(path, encoding="ascii") as fh:
        toks = [ln.split("*")[0].strip() for ln in fh if not ln.startswith(("*", '"'))]
    toks = [t for t in toks if t]
    m = int(toks[0].split()[0])
    nblk = int(toks[1].split()[0])
    sizes = [int(float(s)) for s in re.split(r"[\s,{}()]+", toks[2]) if s][:nblk]
    rhs = np.array([float(s) for s in re.split(r"[\s,{}()]+", toks[3]) if s][:m])
    psd_idx = {}
    psd_sizes: List[int] = []
    lin_blk, lin_size = None, 0
    for b, s in enumerate(sizes):
        if s < 0:
            if lin_blk is not None:
                raise ValueError("more than one diagonal block is not supported")
            lin_blk, lin_size = b + 1, -s
        else:
            psd_idx[b + 1] = len(psd_sizes)
            psd_sizes.append(s)
    ent = [[[], [], [], []] for _ in psd_sizes]
    lr, lc, lv = [], [], []
    c = np.zeros(lin_size)
    for ln in toks[4:]:
        parts = ln.split()
        if len(parts) < 5:
            raise ValueError(f"malformed entry line: {ln!r}")
        mat, blk, i, j = (int(p) for p in parts[:4])
        v = float(parts[4])
        if blk == lin_blk:
            if i != j:
                raise ValueError("off-diagonal entry in diagonal block")
            if mat == 0:
                c[i - 1] += v
            else:
                lr.append(mat - 1)
                lc.append(i - 1)
                lv.append(v)
        else:
            b = psd_idx[blk]
            if mat == 0:
                if v != 0.0:
                    raise ValueError("psd objective blocks are not supported")
                continue
            i, j = min(i, j), max(i, j)
            for arr, val in zip(ent[b], (mat - 1, i - 1, j - 1, v)):
                arr.append(val)
    A = sp.csr_matrix((lv, (lr, lc)), shape=(m, lin_size))
    psd_entries = [
        (np.asarray(r, dtype=np.int64), np.asarray(i, dtype=np.int64),
         np.asarray(j, dtype=np.int64), np.asarray(v, dtype=float))
        for r, i, j, v in ent
    ]
    return ConicProgram(0, lin_size, psd_sizes, A, psd_entries, rhs, c, [])


@dataclass
class ImportedSolution:
    """Partial solution read from an external solver's output."""

    y: np.ndarray
    dual_objective: Optional[float] = None
    primal_objective: Optional[float] = None


def _floats(text: str) -> List[float]:
    return [float(t) for t in re.findall(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?", text)]


def import_sdpa_solution(path: PathLike, n_rows: Optional[int] = None) -> ImportedSolution:
    """Read the row multipliers of a solution file.

    Two layouts are accepted: SDPA's own output (``xVec = {...}``,
    ``objValPrimal``/``objValDual``) and a plain whitespace-separated vector
    of multipliers, optionally preceded by ``key: value`` lines for
    ``primal_objective`` and ``dual_objective``.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    pobj = dobj = None
    if "xVec" in text:
        block = text.split("xVec", 1)[1]
        start = block.index("{")
        end = block.index("}", start)
        y = np.array(_floats(block[start + 1:end]))
        # SDPA's primal is the minimisation side, i.e. our dual objective
        mp = re.search(r"objValPrimal\s*=\s*(\S+)", text)
        md = re.search(r"objValDual\s*=\s*(\S+)", text)
        dobj = float(mp.group(1)) if mp else None
        pobj = float(md.group(1)) if md else None
    else:
        vals = []
        for ln in text.splitlines():
            s = ln.strip()
            if not s or s.startswith("#"):
                continue
            if ":" in s:
                key, val = (p.strip() for p in s.split(":", 1))
                if key == "primal_objective":
                    pobj = float(val)
                elif key == "dual_objective":
                    dobj = float(val)
                else:
                    raise ValueError(f"unknown key {key!r} in solution file")
                continue
            vals.extend(_floats(s))
        y = np.array(vals)
    if y.size == 0:
        raise ValueError("solution file holds no multipliers")
    if n_rows is not None and y.size != n_rows:
        raise ValueError(f"expected {n_rows} multipliers, found {y.size}")
    return ImportedSolution(y, dobj, pobj)


def write_solution(path: PathLike, y: np.ndarray, primal_objective: float | None = None,
                   dual_objective: float | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if primal_objective is not None:
            fh.write(f"primal_objective: {_fmt(primal_objective)}\n")
        if dual_objective is not None:
            fh.write(f"dual_objective: {_fmt(dual_objective)}\n")
        fh.write("\n".join(_fmt(v) for v in y) + "\n")
