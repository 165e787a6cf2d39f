"""Independent reference implementations used by the tests.

Graph identity is decided by networkx isomorphism (VF2), never by the
package's canonical SMILES, so MMP and round-trip checks do not reuse the
code under test.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass

import networkx as nx
import numpy as np
from networkx.algorithms.isomorphism import GraphMatcher

from acbench.chem import Molecule, parse_smiles

STAR = "*"


def to_nx(mol: Molecule) -> nx.Graph:
    g = nx.Graph()
    for i, a in enumerate(mol.atoms):
        g.add_node(i, label=f"{a.element}|{a.formal_charge}|{int(a.aromatic)}|{a.implicit_h}")
    for b in mol.bonds:
        g.add_edge(b.begin, b.end, order=int(b.order))
    return g


def _node_match(x, y):
    return x["label"] == y["label"]


def _edge_match(x, y):
    return x["order"] == y["order"]


def isomorphic(g1: nx.Graph, g2: nx.Graph) -> bool:
    if g1.number_of_nodes() != g2.number_of_nodes() or g1.number_of_edges() != g2.number_of_edges():
        return False
    return GraphMatcher(g1, g2, node_match=_node_match, edge_match=_edge_match).is_isomorphic()


def wl_hash(g: nx.Graph) -> str:
    h = nx.Graph()
    h.add_nodes_from((n, d) for n, d in g.nodes(data=True))
    h.add_edges_from((u, v, {"order": str(d["order"])}) for u, v, d in g.edges(data=True))
    return nx.weisfeiler_lehman_graph_hash(h, node_attr="label", edge_attr="order", iterations=4)


# -- brute-force MMP oracle ---------------------------------------------------------

@dataclass
class Cut:
    core: nx.Graph
    var: nx.Graph
    core_heavy: int
    var_heavy: int
    key: str


def _with_star(g: nx.Graph, side: set, attach: int) -> nx.Graph:
    sub = g.subgraph(side).copy()
    star = max(g.nodes) + 1
    sub.add_node(star, label=f"{STAR}|0|0|0")
    sub.add_edge(attach, star, order=1)
    return sub


def single_cuts(mol: Molecule) -> list[Cut]:
    """Every (core, variable) split at a single bond that is a bridge of the graph."""
    g = to_nx(mol)
    out = []
    bridges = {frozenset(e) for e in nx.bridges(g)}
    for u, v, d in g.edges(data=True):
        if d["order"] != 1 or frozenset((u, v)) not in bridges:
            continue
        h = g.copy()
        h.remove_edge(u, v)
        side_u = nx.node_connected_component(h, u)
        side_v = nx.node_connected_component(h, v)
        for core_side, core_at, var_side, var_at in ((side_u, u, side_v, v), (side_v, v, side_u, u)):
            core = _with_star(g, core_side, core_at)
            var = _with_star(g, var_side, var_at)
            out.append(Cut(core, var, len(core_side), len(var_side), wl_hash(core)))
    return out


def constraints_ok(core: int, v1: int, v2: int) -> bool:
    return core >= 2 * max(v1, v2) and v1 <= 13 and v2 <= 13 and abs(v1 - v2) <= 8


def oracle_ac_class(a1: float, a2: float) -> str:
    # ratio of raw activities: a = -log10(value)
    ratio = 10 ** abs(a1 - a2)
    if ratio >= 100 * (1 - 1e-9):
        return "AC"
    if ratio <= 10 * (1 + 1e-9):
        return "NON_AC"
    return "HALF_AC"


@dataclass
class OraclePair:
    id_1: str
    id_2: str
    core_heavy: int
    candidates: list[tuple[nx.Graph, nx.Graph, nx.Graph]]  # (core, var of id_1, var of id_2) at max size
    ac_class: str


def brute_force_mmps(compounds) -> dict[frozenset, OraclePair]:
    """For every compound pair, all shared cores (by isomorphism) passing the constraints; keep the largest."""
    cuts = {c.id: single_cuts(c.mol) for c in compounds}
    by_id = {c.id: c for c in compounds}
    buckets: dict[str, list[tuple[str, Cut]]] = defaultdict(list)
    for cid, cs in cuts.items():
        for cut in cs:
            buckets[cut.key].append((cid, cut))
    found: dict[frozenset, list[tuple[int, Cut, Cut]]] = defaultdict(list)
    for entries in buckets.values():
        for (ca, xa), (cb, xb) in itertools.combinations(entries, 2):
            if ca == cb or xa.core_heavy != xb.core_heavy:
                continue
            if not constraints_ok(xa.core_heavy, xa.var_heavy, xb.var_heavy):
                continue
            if not isomorphic(xa.core, xb.core):
                continue
            first, second = (xa, xb) if ca < cb else (xb, xa)
            found[frozenset((ca, cb))].append((xa.core_heavy, first, second))
    out = {}
    for key, options in found.items():
        best = max(n for n, _, _ in options)
        ida, idb = sorted(key)
        out[key] = OraclePair(ida, idb, best,
                              [(f.core, f.var, s.var) for n, f, s in options if n == best],
                              oracle_ac_class(by_id[ida].a, by_id[idb].a))
    return out


def smiles_graph(smiles: str) -> nx.Graph:
    return to_nx(parse_smiles(smiles, allow_wildcard=True))


def compare_with_oracle(records, compounds) -> list[str]:
    """Differences between build_mmps records and the brute-force oracle (empty list = equal)."""
    oracle = brute_force_mmps(compounds)
    problems = []
    got = {frozenset((r.id_1, r.id_2)): r for r in records}
    for key in sorted(set(oracle) | set(got), key=sorted):
        if key not in got:
            problems.append(f"missing pair {sorted(key)}")
            continue
        if key not in oracle:
            problems.append(f"extra pair {sorted(key)}")
            continue
        r, o = got[key], oracle[key]
        core = smiles_graph(r.core_smiles)
        core_heavy = core.number_of_nodes() - 1
        if core_heavy != o.core_heavy:
            problems.append(f"{sorted(key)}: core size {core_heavy} != oracle {o.core_heavy}")
            continue
        # var_1 belongs to id_1 of the record; map onto the oracle's id order
        v_first, v_second = smiles_graph(r.var_1), smiles_graph(r.var_2)
        if r.id_1 != o.id_1:
            v_first, v_second = v_second, v_first
        if not any(isomorphic(core, c) and isomorphic(v_first, v1) and isomorphic(v_second, v2)
                   for c, v1, v2 in o.candidates):
            problems.append(f"{sorted(key)}: chosen core/variables not among the oracle's largest cores")
        if r.ac_class != o.ac_class:
            problems.append(f"{sorted(key)}: class {r.ac_class} != oracle {o.ac_class}")
    return problems


# -- gradient oracle -------------------------------------------------------------------

def central_difference_check(f, params: list, n_probes: int, rng: np.random.Generator, step: float = 1e-5,
                             skip=None) -> float:
    """Max relative error between analytic grads (already in p.grad) and central differences.

    ``f()`` evaluates the scalar loss from the current parameter values.
    ``skip(param_index, flat_index)`` may veto probes at non-differentiable points.
    """
    sizes = [p.data.size for p in params]
    worst = 0.0
    probes = 0
    attempts = 0
    while probes < n_probes:
        attempts += 1
        if attempts > 20 * n_probes:
            raise RuntimeError("could not place enough probes")
        k = int(rng.choice(len(params), p=np.array(sizes) / sum(sizes)))
        flat = int(rng.integers(sizes[k]))
        if skip is not None and skip(k, flat):
            continue
        p = params[k]
        analytic = 0.0 if p.grad is None else float(p.grad.reshape(-1)[flat])
        view = p.data.reshape(-1)
        orig = view[flat]
        view[flat] = orig + step
        up = f()
        view[flat] = orig - step
        down = f()
        view[flat] = orig
        numeric = (up - down) / (2 * step)
        rel = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-6)
        worst = max(worst, rel)
        probes += 1
    return worst


def finite(x) -> bool:
    return all(math.isfinite(v) for v in np.ravel(x))
