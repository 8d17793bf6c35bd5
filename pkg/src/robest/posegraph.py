"""Pose-graph optimization over SE(2)/SE(3) with a damped Gauss-Newton solver.

A graph holds vertex poses (rotation matrix + translation), odometry edges and
loop-closure edges; each edge carries a measured relative pose and separate
information matrices for its rotation and translation blocks.  The edge
residual is

    sqrt( ‖Log(R̄ᵀ R_iᵀ R_j)‖²_{Ω^R} + ‖R̄ᵀ(t̄ − R_iᵀ(t_j − t_i))‖²_{Ω^t} )

which is zero exactly when T_j = T_i T̄_ij.  The robust solvers see the graph
through `PoseGraphProblem`: measurements are the loop closures (odometry is
trusted), and every weighted solve restarts Gauss-Newton from the odometry
chain, so solves are stateless and deterministic.

Also implemented: per-loop-closure lower bounds obtained by solving each
loop's single-cycle problem with its odometry edges down-weighted by how many
cycles share them; summed over any subset of loop closures they lower-bound
the corresponding full-graph optimum.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    Degenerate,
    DisconnectedOdometry,
    MissingVertex,
    SingularNormalEquations,
)
from .rotations import exp_so3, hat, jr_inv, log_so3, rot2, wrap_angle
from .solvers import EstimationProblem

_ROT_TOL = 1e-9
_J2 = np.array([[0.0, -1.0], [1.0, 0.0]])  # d/dθ rot2(θ) = rot2(θ) @ _J2

LAMBDA_INIT = 1e-6
LAMBDA_MAX = 1e6
STEP_TOL = 1e-8
GRAD_TOL = 1e-10
MAX_GN_ITERATIONS = 100


@dataclass(frozen=True)
class Edge:
    """Relative pose measurement i → j with rotation/translation information."""

    i: int
    j: int
    R: np.ndarray
    t: np.ndarray
    info_rot: np.ndarray
    info_trans: np.ndarray


def _check_rotation(R, what):
    R = np.asarray(R, dtype=float)
    if np.linalg.norm(R.T @ R - np.eye(R.shape[0])) > _ROT_TOL or np.linalg.det(R) < 0:
        raise Degenerate(f"{what}: not a proper rotation")
    return R


def _check_info(M, what):
    M = np.asarray(M, dtype=float)
    if np.linalg.norm(M - M.T) > 1e-9:
        raise Degenerate(f"{what}: information matrix not symmetric")
    if np.any(np.linalg.eigvalsh(M) <= 0):
        raise Degenerate(f"{what}: information matrix not positive definite")
    return M


class PoseGraph:
    """Vertices, odometry edges and loop-closure edges of one SLAM instance.

    `dim` is 2 or 3.  `poses` maps vertex id to (R, t).  Odometry edges must
    form a spanning tree of the vertices (checked); they are what the solver
    trusts and what anchors the initialization.  `ground_truth` and
    `outlier_labels` are optional bookkeeping for synthetic instances.
    """

    def __init__(self, dim, poses, odometry, loop_closures,
                 ground_truth=None, outlier_labels=None, validate=True):
        if dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {dim}")
        self.dim = dim
        self.poses = dict(poses)
        self.odometry = list(odometry)
        self.loop_closures = list(loop_closures)
        self.ground_truth = ground_truth
        self.outlier_labels = outlier_labels
        if validate:
            self._validate()

    def _validate(self):
        for vid, (R, t) in self.poses.items():
            _check_rotation(R, f"vertex {vid}")
        for e in self.odometry + self.loop_closures:
            if e.i not in self.poses or e.j not in self.poses:
                raise MissingVertex(f"edge ({e.i},{e.j}) references unknown vertex")
            _check_rotation(e.R, f"edge ({e.i},{e.j})")
            _check_info(e.info_rot, f"edge ({e.i},{e.j}) rotation block")
            _check_info(e.info_trans, f"edge ({e.i},{e.j}) translation block")
        # odometry must be a spanning tree: acyclic and connected
        parent = {v: v for v in self.poses}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for e in self.odometry:
            a, b = find(e.i), find(e.j)
            if a == b:
                raise DisconnectedOdometry(
                    f"odometry edge ({e.i},{e.j}) closes a cycle; odometry must be a tree"
                )
            parent[a] = b
        roots = {find(v) for v in self.poses}
        if len(roots) > 1:
            raise DisconnectedOdometry(
                f"odometry does not connect all vertices ({len(roots)} components)"
            )

    @property
    def root(self):
        return min(self.poses)


# ---------------------------------------------------------------------------
# residuals
# ---------------------------------------------------------------------------

def _edge_errors(edge, poses):
    """(rotation error vector, translation error vector), unwhitened."""
    try:
        Ri, ti = poses[edge.i]
        Rj, tj = poses[edge.j]
    except KeyError as exc:
        raise MissingVertex(f"pose for vertex {exc.args[0]} missing") from exc
    dt = np.asarray(tj, dtype=float) - np.asarray(ti, dtype=float)
    e_t = edge.R.T @ (edge.t - Ri.T @ dt)
    if edge.R.shape[0] == 2:
        th_i = np.arctan2(Ri[1, 0], Ri[0, 0])
        th_j = np.arctan2(Rj[1, 0], Rj[0, 0])
        th_bar = np.arctan2(edge.R[1, 0], edge.R[0, 0])
        e_r = np.array([wrap_angle(th_j - th_i - th_bar)])
    else:
        e_r = log_so3(edge.R.T @ Ri.T @ Rj)
    return e_r, e_t


def pgo_residual(edge, poses):
    """Whitened residual sqrt(e_Rᵀ Ω^R e_R + e_tᵀ Ω^t e_t) of one edge."""
    e_r, e_t = _edge_errors(edge, poses)
    return float(np.sqrt(e_r @ edge.info_rot @ e_r + e_t @ edge.info_trans @ e_t))


def pgo_cost(edges, poses, weights=None):
    """sum_e w_e * squared whitened residual over the given edges."""
    if weights is None:
        weights = np.ones(len(edges))
    return float(sum(w * pgo_residual(e, poses) ** 2
                     for e, w in zip(edges, weights)))


# ---------------------------------------------------------------------------
# odometry-chain initialization
# ---------------------------------------------------------------------------

def _spanning_tree(vertex_ids, odometry):
    """parent pointers {child: (parent, edge, forward)} of the odometry tree."""
    adj = {v: [] for v in vertex_ids}
    for e in odometry:
        adj[e.i].append((e.j, e, True))
        adj[e.j].append((e.i, e, False))
    root = min(vertex_ids)
    tree, order, stack, seen = {}, [root], [root], {root}
    while stack:
        v = stack.pop()
        for nxt, e, fwd in adj[v]:
            if nxt not in seen:
                seen.add(nxt)
                tree[nxt] = (v, e, fwd)
                order.append(nxt)
                stack.append(nxt)
    if len(seen) != len(vertex_ids):
        raise DisconnectedOdometry("odometry does not reach every vertex")
    return tree, order


def odometry_init(graph, anchor=None):
    """Poses from composing odometry measurements along the tree.

    The root keeps `anchor` (default: its stored pose); every other vertex is
    its parent's pose composed with the measured relative transform.
    """
    tree, order = _spanning_tree(graph.poses.keys(), graph.odometry)
    root = order[0]
    R0, t0 = graph.poses[root] if anchor is None else anchor
    out = {root: (np.array(R0, dtype=float), np.array(t0, dtype=float))}
    for v in order[1:]:
        p, e, fwd = tree[v]
        Rp, tp = out[p]
        if fwd:  # measured T_child = T_parent ∘ T̄
            out[v] = (Rp @ e.R, tp + Rp @ e.t)
        else:  # edge points child → parent: invert
            out[v] = (Rp @ e.R.T, tp - Rp @ e.R.T @ e.t)
    return out


# ---------------------------------------------------------------------------
# damped Gauss-Newton
# ---------------------------------------------------------------------------

def _edge_jacobian(dim, edge, poses, e_r, e_t):
    """Whitened residual stack and Jacobian blocks (J_i, J_j) for one edge."""
    Ri, ti = poses[edge.i]
    Rj, tj = poses[edge.j]
    dt = tj - ti
    Lr = np.linalg.cholesky(edge.info_rot)
    Lt = np.linalg.cholesky(edge.info_trans)
    A = Lt.T @ edge.R.T @ Ri.T
    if dim == 2:
        sw = Lr.T[0, 0]
        rho = np.concatenate([sw * e_r, Lt.T @ e_t])
        Ji = np.zeros((3, 3))
        Jj = np.zeros((3, 3))
        Ji[0, 2] = -sw
        Jj[0, 2] = sw
        Ji[1:, :2] = A
        Ji[1:, 2] = Lt.T @ edge.R.T @ Ri.T @ _J2 @ dt
        Jj[1:, :2] = -A
        return rho, Ji, Jj
    rho = np.concatenate([Lr.T @ e_r, Lt.T @ e_t])
    Jri = jr_inv(e_r)
    Ji = np.zeros((6, 6))
    Jj = np.zeros((6, 6))
    Ji[:3, 3:] = -Lr.T @ Jri @ Rj.T @ Ri
    Jj[:3, 3:] = Lr.T @ Jri
    Ji[3:, :3] = A
    Ji[3:, 3:] = -Lt.T @ edge.R.T @ hat(Ri.T @ dt)
    Jj[3:, :3] = -A
    return rho, Ji, Jj


def _retract(dim, poses, order, index, fixed, delta):
    k = 3 if dim == 2 else 6
    out = dict(poses)
    for vid in order:
        if vid == fixed:
            continue
        base = index[vid] * k
        d = delta[base:base + k]
        R, t = poses[vid]
        if dim == 2:
            th = np.arctan2(R[1, 0], R[0, 0])
            out[vid] = (rot2(wrap_angle(th + d[2])), t + d[:2])
        else:
            out[vid] = (R @ exp_so3(d[3:]), t + d[:3])
    return out


def gauss_newton(dim, poses, edges, weights, fixed, max_iterations=MAX_GN_ITERATIONS,
                 step_tol=STEP_TOL):
    """Minimize sum_e w_e r_e² over all poses but `fixed` (gauge anchor).

    Levenberg-style damping: λ starts at 1e-6, ×10 whenever a step fails
    (singular system or cost increase), ÷10 on success.  Once λ exceeds 1e6
    the best iterate so far is returned; if that happens before any step was
    ever accepted, SingularNormalEquations is raised instead.  A gradient
    below GRAD_TOL counts as converged without stepping — at a machine-
    precision optimum every retraction re-rounds the rotations, so no
    candidate can strictly lower the cost.  Returns (poses, converged) where
    converged means the gradient or step norm fell below tolerance.
    """
    k = 3 if dim == 2 else 6
    free = [v for v in sorted(poses) if v != fixed]
    index = {v: a for a, v in enumerate(free)}
    n = len(free) * k
    if n == 0:
        return dict(poses), True
    poses = {v: (np.array(R, dtype=float), np.array(t, dtype=float))
             for v, (R, t) in poses.items()}
    live = [(e, w) for e, w in zip(edges, weights) if w > 0.0]
    cost = pgo_cost([e for e, _ in live], poses, [w for _, w in live])
    lam = LAMBDA_INIT
    accepted_any = False
    converged = False
    for _ in range(max_iterations):
        H = np.zeros((n, n))
        g = np.zeros(n)
        for e, w in live:
            e_r, e_t = _edge_errors(e, poses)
            rho, Ji, Jj = _edge_jacobian(dim, e, poses, e_r, e_t)
            blocks = [(e.i, Ji), (e.j, Jj)]
            for vid, J in blocks:
                if vid == fixed:
                    continue
                a = index[vid] * k
                g[a:a + k] += w * (J.T @ rho)
                for wid, J2 in blocks:
                    if wid == fixed:
                        continue
                    b = index[wid] * k
                    H[a:a + k, b:b + k] += w * (J.T @ J2)
        if not np.all(np.isfinite(H)) or not np.all(np.isfinite(g)):
            raise SingularNormalEquations("non-finite normal equations")
        if np.linalg.norm(g) <= GRAD_TOL:
            converged = True
            break
        stepped = False
        while lam <= LAMBDA_MAX:
            try:
                delta = np.linalg.solve(H + lam * np.eye(n), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            cand = _retract(dim, poses, free, index, fixed, delta)
            cand_cost = pgo_cost([e for e, _ in live], cand, [w for _, w in live])
            if np.isfinite(cand_cost) and cand_cost <= cost:
                poses, cost = cand, cand_cost
                lam = max(lam / 10.0, 1e-12)
                accepted_any = True
                stepped = True
                if np.linalg.norm(delta) < step_tol:
                    converged = True
                break
            lam *= 10.0
        if not stepped:
            if not accepted_any:
                raise SingularNormalEquations(
                    "no Gauss-Newton step possible at maximum damping"
                )
            break  # damping exhausted after progress: return best iterate
        if converged:
            break
    return poses, converged


def pgo_weighted_solve(graph, lc_weights=None, init=None):
    """Solve the graph with odometry at weight 1 and the given loop-closure weights.

    Starts from `init` or the odometry chain, clamps the root vertex, and
    returns the optimized poses.
    """
    m = len(graph.loop_closures)
    w_lc = np.ones(m) if lc_weights is None else np.asarray(lc_weights, dtype=float)
    start = odometry_init(graph) if init is None else init
    edges = graph.odometry + graph.loop_closures
    weights = np.concatenate([np.ones(len(graph.odometry)), w_lc])
    poses, _ = gauss_newton(graph.dim, start, edges, weights, graph.root)
    return poses


class PoseGraphProblem(EstimationProblem):
    """Loop closures as measurements; odometry as trusted structure."""

    def __init__(self, graph):
        if not graph.loop_closures:
            raise Degenerate("graph has no loop closures to weigh")
        self.graph = graph

    @property
    def measurement_count(self):
        return len(self.graph.loop_closures)

    @property
    def residual_dof(self):
        return 3 if self.graph.dim == 2 else 6

    def residuals(self, poses):
        return np.array([pgo_residual(e, poses) for e in self.graph.loop_closures])

    def weighted_solve(self, weights):
        return pgo_weighted_solve(self.graph, weights)


# ---------------------------------------------------------------------------
# per-cycle lower bounds
# ---------------------------------------------------------------------------

@dataclass
class CycleBounds:
    """Lower bound b_k per loop closure and cycle multiplicity per odometry edge.

    For any subset S of loop closures, sum of b_k over k ∉ S lower-bounds the
    optimal cost of the graph with S removed: each b_k is the optimum of its
    own single-cycle problem whose odometry edges are scaled by 1/(number of
    cycles sharing them), so summing never counts an odometry edge above its
    full weight.
    """

    bounds: np.ndarray
    multiplicities: np.ndarray


def _cycle_paths(graph):
    """Odometry path (as edge indices) between each loop closure's endpoints."""
    tree, order = _spanning_tree(graph.poses.keys(), graph.odometry)
    root = order[0]
    eidx = {id(e): a for a, e in enumerate(graph.odometry)}

    def path_to_root(v):
        out = []
        while v != root:
            p, e, _ = tree[v]
            out.append((v, eidx[id(e)]))
            v = p
        return out

    paths = []
    for lc in graph.loop_closures:
        up_i = path_to_root(lc.i)
        up_j = path_to_root(lc.j)
        seen_i = {v: a for a, (v, _) in enumerate(up_i)}
        join = len(up_j)
        for a, (v, _) in enumerate(up_j):
            if v in seen_i:
                join = a
                break
        vj = up_j[join][0] if join < len(up_j) else None
        cut_i = seen_i[vj] if vj in seen_i else len(up_i)
        paths.append([e for _, e in up_i[:cut_i]] + [e for _, e in up_j[:join]])
    return paths


def loop_multiplicities(graph):
    """How many loop-closure cycles run through each odometry edge.

    Edges on no cycle get an infinite sentinel (their reciprocal weight is 0
    and they never enter a cycle problem).
    """
    counts = np.zeros(len(graph.odometry))
    for path in _cycle_paths(graph):
        for e in path:
            counts[e] += 1
    counts[counts == 0] = np.inf
    return counts


def cycle_bounds(graph):
    """Optimal cost of every loop closure's single-cycle problem.

    The cycle problem keeps the loop-closure edge at weight 1 and each
    odometry edge on its path at 1/multiplicity, restricted to the cycle's
    vertices (anchored at the smallest one).
    """
    paths = _cycle_paths(graph)
    mult = loop_multiplicities(graph)
    bounds = np.zeros(len(graph.loop_closures))
    for lc_idx, (lc, path) in enumerate(zip(graph.loop_closures, paths)):
        odo = [graph.odometry[e] for e in path]
        verts = {lc.i, lc.j}
        for e in odo:
            verts.update((e.i, e.j))
        sub = {v: graph.poses[v] for v in verts}
        edges = odo + [lc]
        weights = np.array([1.0 / mult[e] for e in path] + [1.0])
        sub_graph = PoseGraph(graph.dim, sub, odo, [lc], validate=False)
        init = odometry_init(sub_graph)
        poses, _ = gauss_newton(graph.dim, init, edges, weights, min(verts))
        bounds[lc_idx] = pgo_cost(edges, poses, weights)
    return CycleBounds(bounds, mult)
