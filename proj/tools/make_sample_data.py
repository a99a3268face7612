#!/usr/bin/env python3
"""Regenerates data/sample and its expected outputs.

The expected metrics are computed here with numpy, scipy and networkx, so
the smoke test compares the C++ pipeline against an independent
implementation of estimation, significance thresholding and the metrics.
"""

import json
import pathlib

import networkx as nx
import numpy as np
from scipy import stats

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data" / "sample"
RNG = np.random.default_rng(20240601)


def write_json(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")


def write_matrix(path, values, measure="correlation"):
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, values, delimiter=",", fmt="%.10f")
    write_json(path.with_suffix(".json"), {"n": len(values), "measure": measure, "params": {}})


def write_network(path, n, edges):
    header = {"n": n, "weighted": False, "edges": len(edges),
              "provenance": {"strategy": "sample", "params": {}}}
    lines = ["# " + json.dumps(header, separators=(",", ":"))]
    lines += [f"{i}\t{j}" for i, j in edges]
    path.write_text("\n".join(lines) + "\n")


def panel():
    """Three spatial modules of four nodes; groups differ in module coupling."""
    n, length, subjects = 12, 150, 8
    centers = np.array([[0, 0, 0], [30, 0, 0], [0, 30, 0]], dtype=float)
    coords = np.vstack([centers[v // 4] + RNG.normal(0, 4, 3) for v in range(n)])
    entries = []
    for s in range(subjects):
        group = "control" if s < subjects // 2 else "patient"
        loading = 0.8 if group == "control" else 0.55
        latent = RNG.normal(size=(3, length))
        series = np.vstack([loading * latent[v // 4] + RNG.normal(size=length)
                            for v in range(n)])
        sid = f"s{s + 1:02d}"
        path = ROOT / "panel" / f"{sid}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        header = ",".join(f"roi{v + 1}" for v in range(n))
        np.savetxt(path, series.T, delimiter=",", fmt="%.6f", header=header, comments="")
        entries.append({"id": sid, "file": f"{sid}.csv", "group": group,
                        "covariates": {"age": float(25 + 3 * s),
                                       "patient": 0.0 if group == "control" else 1.0}})
    write_json(ROOT / "panel" / "manifest.json",
               {"tr": 2.0, "layout": "rows-are-time", "subjects": entries,
                "labels": [f"roi{v + 1}" for v in range(n)],
                "coordinates": np.round(coords, 3).tolist()})
    return entries


def significance_network(series, alpha=0.05):
    """Positive pairs whose Bonferroni-corrected two-sided t-test p < alpha."""
    n, length = series.shape
    r = np.corrcoef(series)
    df = length - 2
    m = n * (n - 1) // 2
    g = nx.Graph()
    g.add_nodes_from(range(n))
    margin = np.inf
    for i in range(n):
        for j in range(i + 1, n):
            t = r[i, j] * np.sqrt(df / (1 - r[i, j] ** 2))
            q = min(1.0, 2 * stats.t.sf(abs(t), df) * m)
            margin = min(margin, abs(np.log(q / alpha)) if q > 0 else np.inf)
            if r[i, j] > 0 and q < alpha:
                g.add_edge(i, j)
    return g, margin


def expected_minimal(entries):
    results = []
    for e in entries:
        data = np.loadtxt(ROOT / "panel" / e["file"], delimiter=",", skiprows=1).T
        g, margin = significance_network(data)
        assert margin > 1e-3, f"{e['id']}: an edge sits on the significance boundary"
        n = g.number_of_nodes()
        lengths = [d for src, dist in nx.all_pairs_shortest_path_length(g)
                   for dst, d in dist.items() if src != dst]
        results.append({
            "subject": e["id"],
            "edges": g.number_of_edges(),
            "density": nx.density(g),
            "global_efficiency": nx.global_efficiency(g),
            "clustering": nx.average_clustering(g),
            "path_length": float(np.mean(lengths)),
        })
    write_json(ROOT / "expected" / "minimal_metrics.json", {"subjects": results})


def groups():
    """Connection matrices for two groups with a planted connected contrast."""
    n, per_group = 20, 10
    contrast = [(0, 1), (1, 2), (2, 3), (3, 4), (1, 5), (5, 6), (6, 7), (2, 8), (8, 9), (4, 10)]
    files = {"a": [], "b": []}
    for label, shift in (("a", 0.0), ("b", 0.6)):
        for s in range(per_group):
            z = RNG.normal(0.3, 0.25, size=(n, n))
            z = np.triu(z, 1)
            for i, j in contrast:
                z[i, j] += shift
            z = z + z.T
            r = np.tanh(z)
            np.fill_diagonal(r, 0.0)
            name = f"{label}{s + 1:02d}.csv"
            write_matrix(ROOT / "groups" / name, r)
            files[label].append(name)
    write_json(ROOT / "groups" / "contrast.json",
               {"planted_edges": [list(e) for e in contrast], "shift_fisher_z": 0.6,
                "noise_sd": 0.25, "group_a": files["a"], "group_b": files["b"]})


def small_files():
    write_network(ROOT / "p3.tsv", 3, [(0, 1), (1, 2)])
    x = RNG.normal(size=(10, 80)) + 0.5 * RNG.normal(size=80)
    x[1] += 0.8 * x[0]
    x[2] += 0.5 * x[1]
    write_matrix(ROOT / "cm.csv", np.corrcoef(x) - np.eye(10))


def configs():
    write_json(ROOT / "pipeline_minimal.json", {
        "input": "panel/manifest.json",
        "seed": 7,
        "estimator": {"measure": "correlation"},
        "threshold": {"strategy": "significance", "alpha": 0.05, "correction": "bonferroni"},
        "analyses": [{"type": "metrics",
                      "metrics": ["density", "global_efficiency", "clustering", "path_length"]}],
    })
    write_json(ROOT / "pipeline_full.json", {
        "input": "panel/manifest.json",
        "seed": 11,
        "estimator": {"measure": "correlation"},
        "threshold": {"strategy": "fixed_degree", "k": 4},
        "analyses": [
            {"type": "metrics", "metrics": ["density", "global_efficiency", "clustering",
                                            "path_length", "modularity"],
             "centrality": ["betweenness"]},
            {"type": "smallworld", "null_count": 10},
            {"type": "community", "runs": 5},
            {"type": "compare", "name": "compare_nbs", "method": "nbs", "group_a": "control",
             "group_b": "patient", "t_threshold": 2.0, "permutations": 200},
            {"type": "compare", "name": "compare_spc", "method": "spc", "group_a": "control",
             "group_b": "patient", "t_threshold": 2.0, "permutations": 200, "radius": 15.0},
            {"type": "ergm", "terms": ["edges", "triangles"]},
            {"type": "twopart", "subject_covariates": ["patient"],
             "dyad_covariates": ["distance"],
             "presence_terms": ["intercept", "patient"],
             "strength_terms": ["intercept", "patient", "distance"],
             "omega": {"kind": "exponential", "phi": 10.0}},
            {"type": "bootstrap", "metric": "global_efficiency", "replicates": 100},
        ],
    })


def main():
    entries = panel()
    expected_minimal(entries)
    groups()
    small_files()
    configs()


if __name__ == "__main__":
    main()
