"""CSV emitters with documented column schemas, plus state snapshots.

Snapshot format: a first line `# <json>` describing the discretization
(ambient dimension, group kind, node count, winding), then one CSV row per
node.  Columns: index, x, w, Q_0..Q_{d-1}, P_0..P_{d-1}, gamma (angle for the
circle group, row-major 9 entries for rotations), sigma_0..sigma_{k-1}.
"""

import csv
import json

import numpy as np

from .grid import PeriodicGrid, PointCloud
from .groups import make_group
from .phase import AmbientManifold, CotangentState


def write_state_csv(state, path):
    d, k = state.d, state.dim_o
    gcols = 1 if state.group.kind == "circle" else 9
    header = {
        "ambient": state.ambient.to_dict(),
        "group": state.group.kind,
        "source": state.source.to_dict(),
        "q_winding": [int(w) for w in state.q_winding],
    }
    cols = (["index", "x", "w"] + [f"Q_{j}" for j in range(d)]
            + [f"P_{j}" for j in range(d)] + [f"gamma_{j}" for j in range(gcols)]
            + [f"sigma_{a}" for a in range(k)])
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(cols)
        gamma = state.gamma.reshape(state.n, -1)
        for i in range(state.n):
            row = ([i, repr(state.source.x[i]), repr(state.source.w[i])]
                   + [repr(v) for v in state.Q[i]] + [repr(v) for v in state.P[i]]
                   + [repr(v) for v in gamma[i]] + [repr(v) for v in state.sigma[i]])
            writer.writerow(row)


def read_state_csv(path):
    with open(path) as fh:
        header = json.loads(fh.readline().lstrip("# "))
        rows = list(csv.reader(fh))
    names = rows[0]
    data = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    d = header["ambient"]["d"]
    group = make_group(header["group"])
    gcols = 1 if group.kind == "circle" else 9
    x, w = data[:, 0], data[:, 1]
    off = 2
    Q = data[:, off:off + d]; off += d
    P = data[:, off:off + d]; off += d
    graw = data[:, off:off + gcols]; off += gcols
    sigma = data[:, off:]
    gamma = graw[:, 0] if gcols == 1 else graw.reshape(-1, 3, 3)
    if header["source"]["kind"] == "periodic_grid":
        source = PeriodicGrid(header["source"]["n"])
    else:
        source = PointCloud(x, w)
    ambient = AmbientManifold(header["ambient"]["kind"], d)
    return CotangentState(source, group, ambient, Q, P, gamma, sigma,
                          q_winding=np.array(header["q_winding"], float))


def write_dirac_momentum_csv(m, path):
    """Columns: index, Q_j (point), wP_j (weighted covector), wsigma_a (charge)."""
    n, d = m.points.shape
    k = m.weighted_charges.shape[1]
    cols = (["index"] + [f"Q_{j}" for j in range(d)] + [f"wP_{j}" for j in range(d)]
            + [f"wsigma_{a}" for a in range(k)])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for i in range(n):
            writer.writerow([i] + [repr(v) for v in m.points[i]]
                            + [repr(v) for v in m.weighted_covectors[i]]
                            + [repr(v) for v in m.weighted_charges[i]])


def write_right_momentum_csv(jr, path):
    """Columns: index, alpha (one-form sample; empty for dim-0), nu_a (charge)."""
    n, k = jr.nu.shape
    cols = ["index", "alpha"] + [f"nu_{a}" for a in range(k)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for i in range(n):
            alpha = repr(jr.alpha[i]) if jr.alpha is not None else ""
            writer.writerow([i, alpha] + [repr(v) for v in jr.nu[i]])


def write_trajectory_csv(traj, path):
    """Columns: t, then per node Q_i / P_i (flattened components), sigma_i_a."""
    m, n, d = traj.Q.shape
    k = traj.sigma.shape[2]
    cols = ["t"]
    for i in range(n):
        cols += [f"Q_{i}_{j}" for j in range(d)]
    for i in range(n):
        cols += [f"P_{i}_{j}" for j in range(d)]
    for i in range(n):
        cols += [f"sigma_{i}_{a}" for a in range(k)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for t_idx in range(m):
            row = [repr(traj.times[t_idx])]
            row += [repr(v) for v in traj.Q[t_idx].ravel()]
            row += [repr(v) for v in traj.P[t_idx].ravel()]
            row += [repr(v) for v in traj.sigma[t_idx].ravel()]
            writer.writerow(row)


def write_diagnostics_csv(traj, path):
    """Columns: t, H, max_charge_drift, max_casimir_drift (cumulative maxima)."""
    cols = ["t", "H", "max_charge_drift", "max_casimir_drift"]
    charge0 = traj.charges[0]
    sig0 = traj.sigma_norms[0]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for t_idx in range(traj.times.size):
            writer.writerow([
                repr(traj.times[t_idx]),
                repr(traj.energies[t_idx]),
                repr(float(np.max(np.abs(traj.charges[t_idx] - charge0)))),
                repr(float(np.max(np.abs(traj.sigma_norms[t_idx] - sig0)))),
            ])
