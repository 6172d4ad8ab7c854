//! Leaf-level decomposition of the torus into cell/face/edge/vertex skeleton
//! sets, their dilated neighborhoods, and the separator tree used as the
//! elimination order of the sparse factorization.
//!
//! A grid point with `m` coordinates on leaf-box interfaces (j mod b == 0)
//! belongs to the set kind with `m` normal axes: cell (m=0) up to vertex
//! (m=d). Points within a set are ordered lexicographically by their offset
//! from the set anchor, so translated sets share identical relative geometry.

use crate::error::{Error, Result};
use crate::grid::{Coord, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetKind {
    Cell,
    Face,
    Edge,
    Vertex,
}

/// Kind implied by the dimension and the number of interface-normal axes.
pub fn kind_of(d: usize, normal_count: usize) -> SetKind {
    match (d, normal_count) {
        (_, 0) => SetKind::Cell,
        (d, m) if m == d => SetKind::Vertex,
        (3, 1) => SetKind::Face,
        _ => SetKind::Edge,
    }
}

#[derive(Debug, Clone)]
pub struct SkeletonSet {
    pub kind: SetKind,
    /// Bitmask of interface-normal axes; empty for cells, full for vertices.
    pub normal_axes: u8,
    /// Lattice position of the owning corner; multiples of b per axis.
    pub anchor: Coord,
    pub points: Vec<usize>,
    pub gamma: Vec<usize>,
    /// gamma minus points, in gamma order.
    pub beta: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Partition {
    pub grid: GridSpec,
    pub sets: Vec<SkeletonSet>,
    /// Set id owning each grid index.
    pub owner: Vec<u32>,
}

/// Torus l-infinity distance-1 dilation, deduplicated, lexicographic order.
pub fn dilate(grid: GridSpec, points: &[usize]) -> Vec<usize> {
    assert!(!points.is_empty());
    let mut out = Vec::new();
    let mut deltas = vec![[0isize; 3]];
    for a in 0..grid.d {
        let mut next = Vec::new();
        for base in &deltas {
            for step in [-1isize, 0, 1] {
                let mut d = *base;
                d[a] = step;
                next.push(d);
            }
        }
        deltas = next;
    }
    for &p in points {
        for delta in &deltas {
            out.push(grid.offset(p, delta));
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Offsets of a set's own points along one axis.
fn point_offsets(b: usize, normal: bool) -> Vec<isize> {
    if normal {
        vec![0]
    } else {
        (1..b as isize).collect()
    }
}

/// Offsets of a set's neighborhood along one axis.
fn gamma_offsets(b: usize, normal: bool) -> Vec<isize> {
    if normal {
        vec![-1, 0, 1]
    } else {
        (0..=b as isize).collect()
    }
}

fn enumerate_offsets(grid: GridSpec, anchor: &Coord, per_axis: &[Vec<isize>]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut pos = vec![0usize; grid.d];
    loop {
        let mut c = [0usize; 3];
        for a in 0..grid.d {
            c[a] = grid.wrap(anchor[a] as isize + per_axis[a][pos[a]]);
        }
        out.push(grid.index_of(&c));
        let mut a = grid.d;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            pos[a] += 1;
            if pos[a] < per_axis[a].len() {
                break;
            }
            pos[a] = 0;
        }
    }
}

pub fn build_partition(grid: GridSpec) -> Result<Partition> {
    if grid.n % grid.b != 0 {
        return Err(Error::IndivisibleGrid { n: grid.n, b: grid.b });
    }
    let b = grid.b;
    let boxes = grid.n / b;
    let total = grid.n_total();
    let mut sets = Vec::new();
    let mut owner = vec![u32::MAX; total];

    for mask in 0u8..(1 << grid.d) {
        let normal_count = mask.count_ones() as usize;
        let kind = kind_of(grid.d, normal_count);
        let point_axis: Vec<Vec<isize>> = (0..grid.d)
            .map(|a| point_offsets(b, mask & (1 << a) != 0))
            .collect();
        let gamma_axis: Vec<Vec<isize>> = (0..grid.d)
            .map(|a| gamma_offsets(b, mask & (1 << a) != 0))
            .collect();

        let mut t = [0usize; 3];
        loop {
            let mut anchor = [0usize; 3];
            for a in 0..grid.d {
                anchor[a] = t[a] * b;
            }
            let points = enumerate_offsets(grid, &anchor, &point_axis);
            let gamma = enumerate_offsets(grid, &anchor, &gamma_axis);
            let beta = {
                // A gamma offset tuple is a point offset tuple iff each axis
                // offset is in the point range.
                let mut beta = Vec::with_capacity(gamma.len() - points.len());
                let mut pos = vec![0usize; grid.d];
                for &g in &gamma {
                    let mut is_point = true;
                    for a in 0..grid.d {
                        let off = gamma_axis[a][pos[a]];
                        let inside = if mask & (1 << a) != 0 {
                            off == 0
                        } else {
                            (1..b as isize).contains(&off)
                        };
                        if !inside {
                            is_point = false;
                            break;
                        }
                    }
                    if !is_point {
                        beta.push(g);
                    }
                    let mut a = grid.d;
                    loop {
                        if a == 0 {
                            break;
                        }
                        a -= 1;
                        pos[a] += 1;
                        if pos[a] < gamma_axis[a].len() {
                            break;
                        }
                        pos[a] = 0;
                    }
                }
                beta
            };
            let id = sets.len() as u32;
            for &p in &points {
                debug_assert_eq!(owner[p], u32::MAX, "index {p} claimed twice");
                owner[p] = id;
            }
            sets.push(SkeletonSet { kind, normal_axes: mask, anchor, points, gamma, beta });

            let mut a = grid.d;
            loop {
                if a == 0 {
                    debug_assert!(owner.iter().all(|&o| o != u32::MAX) || mask + 1 < (1 << grid.d));
                    break;
                }
                a -= 1;
                t[a] += 1;
                if t[a] < boxes {
                    break;
                }
                t[a] = 0;
            }
            if t.iter().take(grid.d).all(|&x| x == 0) {
                break;
            }
        }
    }
    debug_assert!(owner.iter().all(|&o| o != u32::MAX));
    Ok(Partition { grid, sets, owner })
}

/// One elimination group of the separator tree: a leaf cell or the
/// separator complex of an internal node, in postorder.
#[derive(Debug, Clone)]
pub struct ElimGroup {
    pub set_ids: Vec<usize>,
    pub indices: Vec<usize>,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct EliminationTree {
    pub groups: Vec<ElimGroup>,
}

#[derive(Clone, Copy)]
struct AxisRange {
    lo: usize,
    hi: usize,
    cyclic: bool,
}

/// Per-axis placement of a set in box units: a hyperplane coordinate for
/// normal axes, the owning box index for tangential ones.
#[derive(Clone, Copy)]
enum AxisPlace {
    Normal(usize),
    Tangential(usize),
}

fn set_places(grid: GridSpec, set: &SkeletonSet) -> [AxisPlace; 3] {
    let mut out = [AxisPlace::Tangential(0); 3];
    for a in 0..grid.d {
        let t = set.anchor[a] / grid.b;
        out[a] = if set.normal_axes & (1 << a) != 0 {
            AxisPlace::Normal(t)
        } else {
            AxisPlace::Tangential(t)
        };
    }
    out
}

/// Builds the nested-dissection elimination order: leaf cells first within
/// each subtree, separators at the node where their hyperplane becomes
/// interior, and the torus-seam hyperplanes at the top of the tree.
pub fn separator_tree(partition: &Partition) -> EliminationTree {
    let grid = partition.grid;
    let boxes = grid.n / grid.b;
    let region = [AxisRange { lo: 0, hi: boxes, cyclic: true }; 3];
    let places: Vec<[AxisPlace; 3]> = partition
        .sets
        .iter()
        .map(|s| set_places(grid, s))
        .collect();
    let all: Vec<usize> = (0..partition.sets.len()).collect();
    let mut groups = Vec::new();
    recurse(partition, &places, region, all, &mut groups);
    debug_assert_eq!(
        groups.iter().map(|g| g.indices.len()).sum::<usize>(),
        grid.n_total()
    );
    EliminationTree { groups }
}

fn make_group(partition: &Partition, mut set_ids: Vec<usize>) -> ElimGroup {
    set_ids.sort_unstable();
    let indices = set_ids
        .iter()
        .flat_map(|&s| partition.sets[s].points.iter().copied())
        .collect();
    ElimGroup { set_ids, indices, parent: None }
}

/// Returns the index of the emitted root group for this region.
fn recurse(
    partition: &Partition,
    places: &[[AxisPlace; 3]],
    region: [AxisRange; 3],
    sets: Vec<usize>,
    out: &mut Vec<ElimGroup>,
) -> usize {
    let grid = partition.grid;

    // Prefer uncut cyclic axes, then the longest splittable extent.
    let mut cut_axis: Option<usize> = None;
    for a in 0..grid.d {
        if region[a].cyclic {
            let longer = match cut_axis {
                None => true,
                Some(prev) => region[a].hi - region[a].lo > region[prev].hi - region[prev].lo,
            };
            if longer {
                cut_axis = Some(a);
            }
        }
    }

    if let Some(a) = cut_axis {
        // Cut the torus seam: the hyperplane at lo becomes this node's
        // separator and the axis becomes linear.
        let t_cut = region[a].lo;
        let mut node_sets = Vec::new();
        let mut child_sets = Vec::new();
        for s in sets {
            match places[s][a] {
                AxisPlace::Normal(t) if t == t_cut => node_sets.push(s),
                _ => child_sets.push(s),
            }
        }
        let mut child_region = region;
        child_region[a].cyclic = false;
        let child_root = recurse(partition, places, child_region, child_sets, out);
        let node_id = out.len();
        out.push(make_group(partition, node_sets));
        out[child_root].parent = Some(node_id);
        return node_id;
    }

    let mut split_axis = None;
    for a in 0..grid.d {
        let extent = region[a].hi - region[a].lo;
        if extent >= 2 {
            let better = match split_axis {
                None => true,
                Some(prev) => extent > region[prev as usize].hi - region[prev as usize].lo,
            };
            if better {
                split_axis = Some(a);
            }
        }
    }

    match split_axis {
        None => {
            // A single leaf box: only its cell set remains.
            let node_id = out.len();
            out.push(make_group(partition, sets));
            node_id
        }
        Some(a) => {
            let lo = region[a].lo;
            let hi = region[a].hi;
            let mid = lo + (hi - lo) / 2;
            let mut node_sets = Vec::new();
            let mut left = Vec::new();
            let mut right = Vec::new();
            for s in sets {
                match places[s][a] {
                    AxisPlace::Normal(t) => {
                        debug_assert!(t > lo && t < hi, "hyperplane outside region");
                        if t == mid {
                            node_sets.push(s);
                        } else if t < mid {
                            left.push(s);
                        } else {
                            right.push(s);
                        }
                    }
                    AxisPlace::Tangential(t) => {
                        if t < mid {
                            left.push(s);
                        } else {
                            right.push(s);
                        }
                    }
                }
            }
            let mut lregion = region;
            lregion[a].hi = mid;
            let mut rregion = region;
            rregion[a].lo = mid;
            let lroot = recurse(partition, places, lregion, left, out);
            let rroot = recurse(partition, places, rregion, right, out);
            let node_id = out.len();
            out.push(make_group(partition, node_sets));
            out[lroot].parent = Some(node_id);
            out[rroot].parent = Some(node_id);
            node_id
        }
    }
}
