//! The many-body hopping graph: vertices are basis configurations, edges are
//! nonzero off-diagonal matrix elements. Houses the cycle machinery behind
//! the optimal-flux argument: fundamental cycles from a spanning forest,
//! minimal flux-carrying circuits, accumulated phase per cycle, and the
//! diagonal equivalence check against the all-negative matrix.

use crate::basis::FockBasis;
use crate::hamiltonian::{build_all_negative, build_hamiltonian};
use crate::model::{FluxAssignment, RingModel};
use crate::solver::{dense_spectrum, SolverOpts};
use crate::{circ_dist, mod_2pi, FluxRingError, Result};
use serde::Serialize;
use std::collections::HashMap;
use std::collections::VecDeque;
use std::f64::consts::PI;

/// Vertex-count cap: the graph is a proof-inspection tool, not a compute path.
pub const GRAPH_DIM_CAP: usize = 20000;

/// Undirected edge. `phase` is the argument of <j|H|i> in [0, 2 pi), i.e.
/// the phase accumulated traversing i -> j; traversing j -> i negates it.
/// The fermionic sign of the hop is part of the phase (a pi contribution).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GraphEdge {
    pub i: usize,
    pub j: usize,
    pub magnitude: f64,
    pub phase: f64,
    /// +1 when the i -> j hop moves its particle from x to x+1 around the
    /// ring, -1 for the reverse. Net steps over a closed walk are a multiple
    /// of L; the quotient is the walk's winding number.
    pub step: i32,
}

/// Closed walk given by its vertex sequence; the edge from the last vertex
/// back to the first is implied.
#[derive(Clone, Debug, Serialize)]
pub struct Cycle {
    pub vertices: Vec<usize>,
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Accumulated phase and winding of one closed walk.
#[derive(Clone, Debug, Serialize)]
pub struct CycleFlux {
    pub length: usize,
    pub winding: i64,
    /// Sum of directed edge phases, reduced mod 2 pi.
    pub flux: f64,
    pub vertices: Vec<usize>,
}

/// The hopping graph of one sector at one gauge.
#[derive(Clone, Debug)]
pub struct GraphG {
    pub ring_length: usize,
    pub dim: usize,
    pub edges: Vec<GraphEdge>,
    /// Per vertex: (neighbor, edge index).
    pub adjacency: Vec<Vec<(usize, usize)>>,
    pub components: usize,
    /// One cycle per non-forest edge, through the breadth-first forest.
    pub cycle_basis: Vec<Cycle>,
    /// Shortest cycle length of any kind; None for a forest.
    pub girth: Option<usize>,
    /// Minimal-length circuits with nonzero winding, deduplicated up to
    /// rotation and reversal. Empty when no flux-carrying circuit exists
    /// within the search horizon.
    pub minimal_cycles: Vec<Cycle>,
}

fn edge_between(g: &GraphG, a: usize, b: usize) -> Option<usize> {
    g.adjacency[a]
        .iter()
        .find(|&&(nb, _)| nb == b)
        .map(|&(_, e)| e)
}

/// Directed phase and step of traversing edge `e` from `from`.
fn directed(edge: &GraphEdge, from: usize) -> (f64, i32) {
    if edge.i == from {
        (edge.phase, edge.step)
    } else {
        (-edge.phase, -edge.step)
    }
}

/// Accumulated phase and winding of an arbitrary closed vertex walk.
pub fn walk_flux(g: &GraphG, vertices: &[usize]) -> Result<CycleFlux> {
    if vertices.len() < 2 {
        return Err(FluxRingError::InvalidConfig(
            "a closed walk needs at least two vertices".into(),
        ));
    }
    let mut phase = 0.0;
    let mut steps: i64 = 0;
    for w in 0..vertices.len() {
        let a = vertices[w];
        let b = vertices[(w + 1) % vertices.len()];
        let e = edge_between(g, a, b).ok_or_else(|| {
            FluxRingError::InvalidConfig(format!("walk uses missing edge ({a}, {b})"))
        })?;
        let (p, s) = directed(&g.edges[e], a);
        phase += p;
        steps += s as i64;
    }
    let l = g.ring_length as i64;
    debug_assert_eq!(steps.rem_euclid(l), 0, "closed walk with fractional winding");
    Ok(CycleFlux {
        length: vertices.len(),
        winding: steps / l,
        flux: mod_2pi(phase),
        vertices: vertices.to_vec(),
    })
}

/// Fluxes of the fundamental cycles, in basis order.
pub fn cycle_fluxes(g: &GraphG) -> Result<Vec<CycleFlux>> {
    g.cycle_basis.iter().map(|c| walk_flux(g, &c.vertices)).collect()
}

/// Fluxes of the minimal flux-carrying circuits.
pub fn minimal_cycle_fluxes(g: &GraphG) -> Result<Vec<CycleFlux>> {
    g.minimal_cycles.iter().map(|c| walk_flux(g, &c.vertices)).collect()
}

/// The moved particle's direction for the hop from state `i` to state `j`:
/// +1 forward around the ring, -1 backward.
fn hop_step(basis: &FockBasis, l: usize, i: usize, j: usize) -> i32 {
    let (si, sj) = (basis.state(i), basis.state(j));
    let (from_mask, to_mask) = if si.up_mask != sj.up_mask {
        debug_assert_eq!(si.down_mask, sj.down_mask);
        (si.up_mask & !sj.up_mask, sj.up_mask & !si.up_mask)
    } else {
        (si.down_mask & !sj.down_mask, sj.down_mask & !si.down_mask)
    };
    debug_assert_eq!(from_mask.count_ones(), 1);
    debug_assert_eq!(to_mask.count_ones(), 1);
    let from = from_mask.trailing_zeros() as usize;
    let to = to_mask.trailing_zeros() as usize;
    if to == (from + 1) % l {
        1
    } else {
        debug_assert_eq!(from, (to + 1) % l);
        -1
    }
}

/// Rotation- and reversal-invariant key for deduplicating cycles.
fn canonical_cycle(vertices: &[usize]) -> Vec<usize> {
    let n = vertices.len();
    let mut best: Option<Vec<usize>> = None;
    for rev in [false, true] {
        let seq: Vec<usize> = if rev {
            vertices.iter().rev().copied().collect()
        } else {
            vertices.to_vec()
        };
        for start in 0..n {
            let rot: Vec<usize> = (0..n).map(|k| seq[(start + k) % n]).collect();
            if best.as_ref().map(|b| rot < *b).unwrap_or(true) {
                best = Some(rot);
            }
        }
    }
    best.unwrap()
}

struct Forest {
    parent: Vec<Option<(usize, usize)>>,
    depth: Vec<usize>,
    components: usize,
    /// Edge indices not used by the forest.
    non_tree: Vec<usize>,
}

fn spanning_forest(dim: usize, adjacency: &[Vec<(usize, usize)>]) -> Forest {
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; dim];
    let mut depth = vec![0usize; dim];
    let mut visited = vec![false; dim];
    let mut tree_edge = vec![false; adjacency.iter().map(Vec::len).sum::<usize>() / 2];
    let mut components = 0;
    for root in 0..dim {
        if visited[root] {
            continue;
        }
        components += 1;
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &(v, e) in &adjacency[u] {
                if !visited[v] {
                    visited[v] = true;
                    parent[v] = Some((u, e));
                    depth[v] = depth[u] + 1;
                    tree_edge[e] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    let non_tree = (0..tree_edge.len()).filter(|&e| !tree_edge[e]).collect();
    Forest {
        parent,
        depth,
        components,
        non_tree,
    }
}

/// Cycle closed by a non-forest edge (u, v): up from u to the common
/// ancestor, down to v, then the edge back to u.
fn fundamental_cycle(forest: &Forest, u: usize, v: usize) -> Cycle {
    let (mut a, mut b) = (u, v);
    let mut up = vec![a];
    let mut down = vec![b];
    while forest.depth[a] > forest.depth[b] {
        a = forest.parent[a].expect("deeper vertex has a parent").0;
        up.push(a);
    }
    while forest.depth[b] > forest.depth[a] {
        b = forest.parent[b].expect("deeper vertex has a parent").0;
        down.push(b);
    }
    while a != b {
        a = forest.parent[a].expect("distinct roots cannot meet").0;
        b = forest.parent[b].expect("distinct roots cannot meet").0;
        up.push(a);
        down.push(b);
    }
    // `up` ends at the common ancestor, which `down` also ends with.
    down.pop();
    up.extend(down.into_iter().rev());
    Cycle { vertices: up }
}

/// Shortest cycle length by breadth-first search from every vertex. Each
/// non-tree closure gives a closed walk whose length upper-bounds nothing
/// and lower-bounds the girth; the true girth is hit from a vertex on it.
fn plain_girth(dim: usize, adjacency: &[Vec<(usize, usize)>]) -> Option<usize> {
    let mut best: Option<usize> = None;
    let mut dist = vec![usize::MAX; dim];
    let mut via = vec![usize::MAX; dim];
    for root in 0..dim {
        dist.fill(usize::MAX);
        via.fill(usize::MAX);
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            if let Some(b) = best {
                // Deeper vertices cannot improve the best cycle.
                if 2 * dist[u] + 1 >= b {
                    continue;
                }
            }
            for &(v, e) in &adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    via[v] = e;
                    queue.push_back(v);
                } else if via[u] != e {
                    let cand = dist[u] + dist[v] + 1;
                    if best.map(|b| cand < b).unwrap_or(true) {
                        best = Some(cand);
                    }
                }
            }
        }
    }
    best
}

/// Minimal closed walks with nonzero winding, via breadth-first search on
/// the cover graph (vertex, cumulative steps). A minimal such walk never
/// repeats a vertex, so the result is a simple circuit.
fn minimal_flux_cycles(
    ring_length: usize,
    dim: usize,
    adjacency: &[Vec<(usize, usize)>],
    edges: &[GraphEdge],
) -> Vec<Cycle> {
    // Walks longer than 4 L carry no statement we check; bound the cover.
    let max_len = 4 * ring_length;
    let span = max_len as i64;
    let offset = span;
    let width = (2 * span + 1) as usize;
    let idx = |v: usize, c: i64| v * width + (c + offset) as usize;

    let mut best_len: Option<usize> = None;
    let mut found: HashMap<Vec<usize>, Cycle> = HashMap::new();
    let mut dist = vec![usize::MAX; dim * width];
    let mut prev = vec![usize::MAX; dim * width];
    for start in 0..dim {
        dist.fill(usize::MAX);
        prev.fill(usize::MAX);
        let s0 = idx(start, 0);
        dist[s0] = 0;
        let mut queue = VecDeque::from([s0]);
        while let Some(node) = queue.pop_front() {
            let d = dist[node];
            if d >= max_len || best_len.map(|b| d + 1 > b).unwrap_or(false) {
                continue;
            }
            let v = node / width;
            let c = node as i64 % width as i64 - offset;
            for &(w, e) in &adjacency[v] {
                let (_, s) = directed(&edges[e], v);
                let c2 = c + s as i64;
                if c2.abs() > span {
                    continue;
                }
                let n2 = idx(w, c2);
                if dist[n2] == usize::MAX {
                    dist[n2] = d + 1;
                    prev[n2] = node;
                    queue.push_back(n2);
                }
                if w == start && c2 != 0 {
                    let len = d + 1;
                    if best_len.map(|b| len < b).unwrap_or(true) {
                        best_len = Some(len);
                        found.clear();
                    }
                    if best_len == Some(len) {
                        // Recover the walk from the cover-graph parents.
                        let mut path = vec![w];
                        let mut cur = node;
                        while cur != usize::MAX {
                            path.push(cur / width);
                            cur = prev[cur];
                        }
                        path.reverse();
                        path.pop(); // drop the closing repeat of `start`
                        let key = canonical_cycle(&path);
                        found.entry(key).or_insert(Cycle { vertices: path });
                    }
                }
            }
        }
    }
    let mut cycles: Vec<Cycle> = found.into_values().collect();
    cycles.sort_by(|a, b| a.vertices.cmp(&b.vertices));
    cycles
}

/// Assemble the hopping graph of the sector at the given gauge.
pub fn build_graph(
    model: &RingModel,
    gauge: &FluxAssignment,
    basis: &FockBasis,
) -> Result<GraphG> {
    let dim = basis.dim();
    if dim > GRAPH_DIM_CAP {
        return Err(FluxRingError::GraphTooLarge {
            dim,
            cap: GRAPH_DIM_CAP,
        });
    }
    if dim == 0 {
        return Err(FluxRingError::EmptySector);
    }
    let h = build_hamiltonian(model, gauge, basis)?;
    let l = model.length;
    let mut edges = Vec::new();
    let mut adjacency = vec![Vec::new(); dim];
    for i in 0..dim {
        for k in h.row_ptr[i]..h.row_ptr[i + 1] {
            let j = h.col_idx[k];
            if j <= i {
                continue;
            }
            // Row entry is <i|H|j>; the i -> j phase is its conjugate's arg.
            let v = h.values[k];
            let e = edges.len();
            edges.push(GraphEdge {
                i,
                j,
                magnitude: v.norm(),
                phase: mod_2pi(-v.arg()),
                step: hop_step(basis, l, i, j),
            });
            adjacency[i].push((j, e));
            adjacency[j].push((i, e));
        }
    }
    let forest = spanning_forest(dim, &adjacency);
    let cycle_basis: Vec<Cycle> = forest
        .non_tree
        .iter()
        .map(|&e| fundamental_cycle(&forest, edges[e].j, edges[e].i))
        .collect();
    let girth = plain_girth(dim, &adjacency);
    let minimal_cycles = minimal_flux_cycles(l, dim, &adjacency, &edges);
    Ok(GraphG {
        ring_length: l,
        dim,
        edges,
        adjacency,
        components: forest.components,
        cycle_basis,
        girth,
        minimal_cycles,
    })
}

/// The accumulated phase a minimal flux-carrying circuit must show for even
/// electron number: phi + (N_e/2) pi + (N_e - 1) pi, reduced mod 2 pi.
pub fn psi_value(phi: f64, l: usize, n_e: usize) -> Result<f64> {
    if n_e % 2 == 1 || n_e == 0 || n_e > 2 * l {
        return Err(FluxRingError::InapplicableSector(format!(
            "the circuit-flux formula needs even N_e in 2..=2L, got N_e = {n_e} on L = {l}"
        )));
    }
    Ok(mod_2pi(
        phi + (n_e as f64 / 2.0) * PI + (n_e as f64 - 1.0) * PI,
    ))
}

/// Outcome of attempting the diagonal transform onto the all-negative matrix.
#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    /// Max |(D H D^dagger)_ij - (H_-)_ij| over edges when the transform exists.
    pub max_entry_deviation: Option<f64>,
    /// A cycle whose flux obstructs the transform, when one does.
    pub failing_cycle: Option<CycleFlux>,
    /// Whether the sorted spectra of H and H_- differ beyond 1e-9
    /// (dense comparison; None when the dimension exceeds the dense cap).
    pub spectra_differ: Option<bool>,
    pub details: Vec<String>,
}

const EQUIV_ENTRY_TOL: f64 = 1e-12;

/// Try to build the diagonal phase transform turning H into the all-negative
/// matrix: propagate vertex phases over the spanning forest, then verify
/// every edge. An edge that cannot be made negative pins down a cycle whose
/// flux is the obstruction; the spectra are then compared as a cross-check.
pub fn check_equivalence_to_all_negative(
    model: &RingModel,
    gauge: &FluxAssignment,
    basis: &FockBasis,
    opts: &SolverOpts,
) -> Result<EquivalenceReport> {
    let g = build_graph(model, gauge, basis)?;
    let h = build_hamiltonian(model, gauge, basis)?;
    let forest = spanning_forest(g.dim, &g.adjacency);
    let mut lambda = vec![0.0f64; g.dim];
    // Children in breadth-first order: parents are always assigned first.
    let mut order: Vec<usize> = (0..g.dim).collect();
    order.sort_by_key(|&v| forest.depth[v]);
    for &v in &order {
        if let Some((p, e)) = forest.parent[v] {
            let (phase, _) = directed(&g.edges[e], p);
            lambda[v] = lambda[p] + PI - phase;
        }
    }
    let mut details = Vec::new();
    if g.components > 1 {
        details.push(format!("graph has {} components", g.components));
    }
    let mut worst: f64 = 0.0;
    let mut failing_edge: Option<usize> = None;
    for (e, edge) in g.edges.iter().enumerate() {
        let residual = circ_dist(lambda[edge.j] - lambda[edge.i] + edge.phase, PI);
        if residual > worst {
            worst = residual;
            if residual > EQUIV_ENTRY_TOL {
                failing_edge.get_or_insert(e);
            }
        }
    }
    if failing_edge.is_none() {
        // Entrywise confirmation in the transformed matrix.
        let mut max_dev: f64 = 0.0;
        for (i, row) in (0..h.dim).map(|i| (i, h.row_ptr[i]..h.row_ptr[i + 1])) {
            for k in row {
                let j = h.col_idx[k];
                let v = h.values[k]; // <i|H|j>
                let transformed =
                    v * num_complex::Complex64::from_polar(1.0, lambda[i] - lambda[j]);
                let target = num_complex::Complex64::new(-v.norm(), 0.0);
                max_dev = max_dev.max((transformed - target).norm());
            }
        }
        details.push(format!(
            "transform found; max entrywise deviation {max_dev:.3e}"
        ));
        return Ok(EquivalenceReport {
            equivalent: max_dev <= EQUIV_ENTRY_TOL,
            max_entry_deviation: Some(max_dev),
            failing_cycle: None,
            spectra_differ: None,
            details,
        });
    }

    // The failing edge closes a cycle whose flux is not a multiple of pi
    // compatible with its length; report that cycle.
    let e = failing_edge.expect("checked above");
    let cyc = fundamental_cycle(&forest, g.edges[e].j, g.edges[e].i);
    let flux = walk_flux(&g, &cyc.vertices)?;
    details.push(format!(
        "no transform at this flux: cycle of length {} carries flux {:.9}",
        flux.length, flux.flux
    ));
    let spectra_differ = if h.dim <= opts.dense_threshold {
        let a = dense_spectrum(&h)?;
        let b = dense_spectrum(&build_all_negative(&h))?;
        let dev = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        details.push(format!("sorted spectra deviate by {dev:.3e}"));
        Some(dev > 1e-9)
    } else {
        details.push("dimension exceeds the dense cap; spectra not compared".into());
        None
    };
    Ok(EquivalenceReport {
        equivalent: false,
        max_entry_deviation: None,
        failing_cycle: Some(flux),
        spectra_differ,
        details,
    })
}

/// DOT rendering of the graph (undirected, edge labels magnitude@phase).
pub fn to_dot(g: &GraphG) -> String {
    let mut out = String::from("graph hopping {\n");
    for v in 0..g.dim {
        out.push_str(&format!("  n{v};\n"));
    }
    for e in &g.edges {
        out.push_str(&format!(
            "  n{} -- n{} [label=\"{:.4}@{:.4}\"];\n",
            e.i, e.j, e.magnitude, e.phase
        ));
    }
    out.push_str("}\n");
    out
}

/// Edge-list CSV with header i,j,magnitude,phase.
pub fn edges_csv(g: &GraphG) -> String {
    let mut out = String::from("i,j,magnitude,phase\n");
    for e in &g.edges {
        out.push_str(&format!("{},{},{},{}\n", e.i, e.j, e.magnitude, e.phase));
    }
    out
}

/// Summary of one graph analysis, shaped for JSON reports.
#[derive(Clone, Debug, Serialize)]
pub struct GraphReport {
    pub dim: usize,
    pub edge_count: usize,
    pub components: usize,
    pub girth: Option<usize>,
    pub fundamental_cycle_count: usize,
    pub minimal_flux_cycle_length: Option<usize>,
    pub minimal_flux_cycle_fluxes: Vec<f64>,
    pub fundamental_even_lengths: bool,
}

pub fn graph_report(g: &GraphG) -> Result<GraphReport> {
    let minimal = minimal_cycle_fluxes(g)?;
    Ok(GraphReport {
        dim: g.dim,
        edge_count: g.edges.len(),
        components: g.components,
        girth: g.girth,
        fundamental_cycle_count: g.cycle_basis.len(),
        minimal_flux_cycle_length: g.minimal_cycles.first().map(Cycle::len),
        minimal_flux_cycle_fluxes: minimal.iter().map(|c| c.flux).collect(),
        fundamental_even_lengths: g.cycle_basis.iter().all(|c| c.len() % 2 == 0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_basis;
    use crate::model::{make_uniform_gauge, Interaction, RingModel};
    use crate::TWO_PI;

    fn graph_of(model: &RingModel, n_up: usize, n_down: usize, phi: f64) -> GraphG {
        let basis = enumerate_basis(&model.sector(n_up, n_down).unwrap()).unwrap();
        build_graph(model, &make_uniform_gauge(model, phi), &basis).unwrap()
    }

    #[test]
    fn single_particle_ring_is_one_cycle() {
        let model = RingModel::uniform(4, 1.0, Interaction::Finite(0.0)).unwrap();
        let phi = 0.83;
        let g = graph_of(&model, 1, 0, phi);
        assert_eq!(g.dim, 4);
        assert_eq!(g.edges.len(), 4);
        assert_eq!(g.components, 1);
        assert_eq!(g.girth, Some(4));
        assert_eq!(g.cycle_basis.len(), 1);
        let fluxes = cycle_fluxes(&g).unwrap();
        assert_eq!(fluxes[0].length, 4);
        assert_eq!(fluxes[0].winding.abs(), 1);
        // One loop accumulates the whole flux, up to orientation.
        let f = fluxes[0].flux;
        assert!(circ_dist(f, phi).min(circ_dist(f, TWO_PI - phi)) < 1e-12);
        // The minimal flux-carrying circuit is the ring itself.
        assert_eq!(g.minimal_cycles.len(), 1);
        assert_eq!(g.minimal_cycles[0].len(), 4);
    }

    #[test]
    fn half_filled_square_ring_cycles_are_even_and_psi_multiples() {
        let model = RingModel::uniform(4, 1.0, Interaction::Finite(3.0)).unwrap();
        let phi = 1.2345;
        let g = graph_of(&model, 2, 2, phi);
        assert_eq!(g.dim, 36);
        assert_eq!(g.components, 1);
        assert!(g.cycle_basis.iter().all(|c| c.len() % 2 == 0));
        let psi = psi_value(phi, 4, 4).unwrap();
        for cf in cycle_fluxes(&g).unwrap() {
            let target = mod_2pi(cf.winding as f64 * psi);
            assert!(
                circ_dist(cf.flux, target) < 1e-10,
                "cycle flux {} vs winding {} times psi {}",
                cf.flux,
                cf.winding,
                psi
            );
        }
        // Minimal flux-carrying circuits: one particle winding the ring.
        assert_eq!(g.minimal_cycles[0].len(), 4);
        for cf in minimal_cycle_fluxes(&g).unwrap() {
            assert_eq!(cf.winding.abs(), 1);
            let d = circ_dist(cf.flux, psi).min(circ_dist(cf.flux, TWO_PI - psi));
            assert!(d < 1e-10, "minimal cycle flux {} vs psi {}", cf.flux, psi);
        }
    }

    #[test]
    fn projected_pair_has_square_girth_but_double_length_flux_circuits() {
        let model = RingModel::uniform(4, 1.0, Interaction::Infinite).unwrap();
        let phi = 0.9;
        let g = graph_of(&model, 1, 1, phi);
        assert_eq!(g.dim, 12);
        assert_eq!(g.girth, Some(4));
        assert_eq!(g.minimal_cycles[0].len(), 8);
        for cf in minimal_cycle_fluxes(&g).unwrap() {
            assert_eq!(cf.length, 8);
            assert_eq!(cf.winding.abs(), 2);
            let target = mod_2pi(2.0 * phi);
            let d = circ_dist(cf.flux, target).min(circ_dist(cf.flux, TWO_PI - target));
            assert!(d < 1e-10, "flux {} vs 2 phi {}", cf.flux, target);
        }
    }

    #[test]
    fn composite_walk_flux_is_sum_of_fundamental_fluxes() {
        let model = RingModel::uniform(4, 1.0, Interaction::Finite(1.0)).unwrap();
        let g = graph_of(&model, 2, 2, 0.7);
        let fluxes = cycle_fluxes(&g).unwrap();
        let (a, b) = (&g.cycle_basis[0], &g.cycle_basis[1]);
        // Concatenate the two cycles through a connecting walk: traverse a,
        // walk to b's start, traverse b, walk back. The connector cancels.
        let path = shortest_path(&g, a.vertices[0], b.vertices[0]);
        let mut walk = a.vertices.clone();
        walk.push(a.vertices[0]);
        walk.extend(path.iter().skip(1)); // ends at b's start
        walk.extend(b.vertices.iter().skip(1));
        walk.push(b.vertices[0]);
        walk.extend(path.iter().rev().skip(1)); // ends back at a's start
        walk.pop(); // walk_flux closes last -> first itself
        let total = walk_flux(&g, &walk).unwrap();
        let expect = mod_2pi(fluxes[0].flux + fluxes[1].flux);
        assert!(
            circ_dist(total.flux, expect) < 1e-10,
            "walk flux {} vs sum {}",
            total.flux,
            expect
        );
    }

    fn shortest_path(g: &GraphG, from: usize, to: usize) -> Vec<usize> {
        let mut prev = vec![usize::MAX; g.dim];
        let mut seen = vec![false; g.dim];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if u == to {
                break;
            }
            for &(v, _) in &g.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = prev[cur];
            path.push(cur);
        }
        path.reverse();
        path
    }

    #[test]
    fn psi_value_matches_both_parity_branches() {
        assert!((psi_value(0.3, 4, 4).unwrap() - mod_2pi(0.3 + PI)).abs() < 1e-12);
        assert!((psi_value(0.3, 6, 6).unwrap() - 0.3).abs() < 1e-12);
        assert!(psi_value(PI, 4, 4).unwrap() < 1e-12);
        assert!(psi_value(0.3, 4, 3).is_err());
    }

    #[test]
    fn equivalence_holds_exactly_at_the_optimal_flux() {
        let model = RingModel::uniform(4, 1.0, Interaction::Finite(2.0)).unwrap();
        let basis = enumerate_basis(&model.sector(2, 2).unwrap()).unwrap();
        let opts = SolverOpts::default();
        let report = check_equivalence_to_all_negative(
            &model,
            &make_uniform_gauge(&model, PI),
            &basis,
            &opts,
        )
        .unwrap();
        assert!(report.equivalent, "{:?}", report.details);
        assert!(report.max_entry_deviation.unwrap() <= 1e-12);
    }

    #[test]
    fn equivalence_fails_away_from_the_optimal_flux() {
        let model = RingModel::uniform(4, 1.0, Interaction::Finite(2.0)).unwrap();
        let basis = enumerate_basis(&model.sector(2, 2).unwrap()).unwrap();
        let opts = SolverOpts::default();
        let report = check_equivalence_to_all_negative(
            &model,
            &make_uniform_gauge(&model, PI / 2.0),
            &basis,
            &opts,
        )
        .unwrap();
        assert!(!report.equivalent);
        assert!(report.failing_cycle.is_some());
        assert_eq!(report.spectra_differ, Some(true));
    }

    #[test]
    fn single_particle_zero_flux_is_already_all_negative_equivalent() {
        let model = RingModel::uniform(4, 1.0, Interaction::Finite(0.0)).unwrap();
        let basis = enumerate_basis(&model.sector(1, 0).unwrap()).unwrap();
        let opts = SolverOpts::default();
        let report = check_equivalence_to_all_negative(
            &model,
            &make_uniform_gauge(&model, 0.0),
            &basis,
            &opts,
        )
        .unwrap();
        assert!(report.equivalent, "{:?}", report.details);
    }

    #[test]
    fn graph_dimension_is_capped() {
        let model = RingModel::uniform(12, 1.0, Interaction::Finite(1.0)).unwrap();
        let basis = enumerate_basis(&model.sector(3, 3).unwrap()).unwrap();
        let err = build_graph(&model, &make_uniform_gauge(&model, 0.0), &basis);
        assert!(matches!(err, Err(FluxRingError::GraphTooLarge { .. })));
    }

    #[test]
    fn exports_contain_every_edge() {
        let model = RingModel::uniform(4, 1.0, Interaction::Finite(0.0)).unwrap();
        let g = graph_of(&model, 1, 0, 0.5);
        let dot = to_dot(&g);
        assert_eq!(dot.matches(" -- ").count(), g.edges.len());
        let csv = edges_csv(&g);
        assert_eq!(csv.lines().count(), g.edges.len() + 1);
        assert!(csv.starts_with("i,j,magnitude,phase\n"));
    }

    #[test]
    fn report_summarizes_structure() {
        let model = RingModel::uniform(4, 1.0, Interaction::Infinite).unwrap();
        let g = graph_of(&model, 2, 1, 0.4);
        let report = graph_report(&g).unwrap();
        assert_eq!(report.dim, g.dim);
        assert_eq!(report.fundamental_cycle_count, g.cycle_basis.len());
        assert_eq!(report.minimal_flux_cycle_length, Some(g.minimal_cycles[0].len()));
    }
}
