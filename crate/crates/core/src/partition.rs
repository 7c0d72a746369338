//! Partitions of canonical space into adaptation regions.
//!
//! Lens perturbations classify a path by the raster position of its primary
//! ray; multi-chain perturbations additionally by the cylindrical
//! coordinates of the direction leaving the first non-specular vertex after
//! the camera.

use std::fmt::Write as _;

use crate::adaptation::RegionState;
use crate::mutations::SplitPlan;
use crate::path::Path;
use crate::sampling::{cylindrical_coords, CanonicalPoint2};
use crate::scene::Camera;

pub const MAX_QUADTREE_DEPTH: u32 = 16;

/// Region identifier: a top-level cell and a leaf inside it. Flat
/// partitions use `cell = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegionId {
    pub cell: u32,
    pub leaf: u32,
}

impl RegionId {
    pub fn flat(leaf: u32) -> Self {
        RegionId { cell: 0, leaf }
    }

    /// `cell << 32 | leaf`, for text output.
    pub fn encoded(self) -> u64 {
        ((self.cell as u64) << 32) | self.leaf as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub u0: f64,
    pub v0: f64,
    pub u1: f64,
    pub v1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        u0: 0.0,
        v0: 0.0,
        u1: 1.0,
        v1: 1.0,
    };

    pub fn area(&self) -> f64 {
        (self.u1 - self.u0) * (self.v1 - self.v0)
    }

    pub fn contains(&self, p: CanonicalPoint2) -> bool {
        let hi_u = if self.u1 >= 1.0 { p.u <= self.u1 } else { p.u < self.u1 };
        let hi_v = if self.v1 >= 1.0 { p.v <= self.v1 } else { p.v < self.v1 };
        p.u >= self.u0 && p.v >= self.v0 && hi_u && hi_v
    }

    /// Lower-left, lower-right, upper-left, upper-right.
    fn quadrants(&self) -> [Rect; 4] {
        let mu = 0.5 * (self.u0 + self.u1);
        let mv = 0.5 * (self.v0 + self.v1);
        [
            Rect {
                u0: self.u0,
                v0: self.v0,
                u1: mu,
                v1: mv,
            },
            Rect {
                u0: mu,
                v0: self.v0,
                u1: self.u1,
                v1: mv,
            },
            Rect {
                u0: self.u0,
                v0: mv,
                u1: mu,
                v1: self.v1,
            },
            Rect {
                u0: mu,
                v0: mv,
                u1: self.u1,
                v1: self.v1,
            },
        ]
    }
}

fn axis_cell(x: f64, n: usize) -> usize {
    ((x * n as f64).floor().max(0.0) as usize).min(n - 1)
}

#[derive(Debug)]
pub struct Grid2D {
    n: usize,
    regions: Vec<RegionState>,
}

impl Grid2D {
    pub fn new(n: usize, lambda_init: f64) -> Self {
        assert!(n >= 1, "grid needs at least one cell per axis");
        Grid2D {
            n,
            regions: (0..n * n).map(|_| RegionState::new(lambda_init)).collect(),
        }
    }

    pub fn cells_per_axis(&self) -> usize {
        self.n
    }

    /// Row-major cell index; coordinates equal to 1 clamp into the last cell.
    pub fn cell_of(&self, p: CanonicalPoint2) -> usize {
        axis_cell(p.v, self.n) * self.n + axis_cell(p.u, self.n)
    }

    pub fn bounds(&self, cell: usize) -> Rect {
        let n = self.n as f64;
        let (row, col) = ((cell / self.n) as f64, (cell % self.n) as f64);
        Rect {
            u0: col / n,
            v0: row / n,
            u1: (col + 1.0) / n,
            v1: (row + 1.0) / n,
        }
    }

    pub fn region(&self, cell: usize) -> &RegionState {
        &self.regions[cell]
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }
}

#[derive(Debug)]
struct Node {
    bounds: Rect,
    depth: u32,
    /// Index of the first of four consecutive children.
    children: Option<u32>,
    state: RegionState,
}

/// Quadtree over the unit square. Nodes live in an arena and a leaf's id is
/// its arena index, so ids survive refinement of other leaves.
#[derive(Debug)]
pub struct Quadtree {
    nodes: Vec<Node>,
    max_depth: u32,
}

impl Quadtree {
    pub fn new(lambda_init: f64) -> Self {
        Quadtree {
            nodes: vec![Node {
                bounds: Rect::UNIT,
                depth: 0,
                children: None,
                state: RegionState::new(lambda_init),
            }],
            max_depth: MAX_QUADTREE_DEPTH,
        }
    }

    pub fn with_max_depth(mut self, depth: u32) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn locate(&self, p: CanonicalPoint2) -> u32 {
        let mut i = 0usize;
        while let Some(c) = self.nodes[i].children {
            let b = &self.nodes[i].bounds;
            let right = p.u >= 0.5 * (b.u0 + b.u1);
            let upper = p.v >= 0.5 * (b.v0 + b.v1);
            i = c as usize + right as usize + 2 * upper as usize;
        }
        i as u32
    }

    pub fn leaves(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.nodes.len() as u32).filter(move |&i| self.nodes[i as usize].children.is_none())
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }

    pub fn bounds(&self, leaf: u32) -> Rect {
        self.nodes[leaf as usize].bounds
    }

    pub fn depth(&self, leaf: u32) -> u32 {
        self.nodes[leaf as usize].depth
    }

    pub fn is_leaf(&self, id: u32) -> bool {
        self.nodes.get(id as usize).is_some_and(|n| n.children.is_none())
    }

    pub fn region(&self, leaf: u32) -> &RegionState {
        debug_assert!(self.is_leaf(leaf));
        &self.nodes[leaf as usize].state
    }

    /// Splits every current leaf with at least `m_split` visits once.
    pub fn refine(&mut self, m_split: u64) -> usize {
        let ready: Vec<usize> = self
            .leaves()
            .map(|i| i as usize)
            .filter(|&i| {
                let n = &self.nodes[i];
                n.depth < self.max_depth && n.state.hits() >= m_split
            })
            .collect();
        for &i in &ready {
            let first = self.nodes.len() as u32;
            let (bounds, depth) = (self.nodes[i].bounds, self.nodes[i].depth);
            let lambda = self.nodes[i].state.lambda();
            let updates = (self.nodes[i].state.updates() / 4).max(1);
            for q in bounds.quadrants() {
                self.nodes.push(Node {
                    bounds: q,
                    depth: depth + 1,
                    children: None,
                    state: RegionState::with_updates(lambda, updates),
                });
            }
            self.nodes[i].children = Some(first);
            self.nodes[i].state.reset_hits();
        }
        ready.len()
    }
}

#[derive(Debug)]
pub enum Bottom {
    Grid(Grid2D),
    Quadtree(Quadtree),
}

impl Bottom {
    fn locate(&self, p: CanonicalPoint2) -> u32 {
        match self {
            Bottom::Grid(g) => g.cell_of(p) as u32,
            Bottom::Quadtree(q) => q.locate(p),
        }
    }

    fn region(&self, leaf: u32) -> &RegionState {
        match self {
            Bottom::Grid(g) => g.region(leaf as usize),
            Bottom::Quadtree(q) => q.region(leaf),
        }
    }

    fn leaves(&self) -> Vec<(u32, Rect)> {
        match self {
            Bottom::Grid(g) => (0..g.len() as u32).map(|i| (i, g.bounds(i as usize))).collect(),
            Bottom::Quadtree(q) => q.leaves().map(|i| (i, q.bounds(i))).collect(),
        }
    }

    fn refine(&mut self, m_split: u64) -> usize {
        match self {
            Bottom::Grid(_) => 0,
            Bottom::Quadtree(q) => q.refine(m_split),
        }
    }
}

/// Screen grid whose every cell partitions direction space.
#[derive(Debug)]
pub struct CompositePartition4D {
    top: usize,
    cells: Vec<Bottom>,
}

impl CompositePartition4D {
    pub fn with_quadtrees(n_top: usize, lambda_init: f64) -> Self {
        assert!(n_top >= 1);
        CompositePartition4D {
            top: n_top,
            cells: (0..n_top * n_top)
                .map(|_| Bottom::Quadtree(Quadtree::new(lambda_init)))
                .collect(),
        }
    }

    pub fn with_grids(n_top: usize, n_bottom: usize, lambda_init: f64) -> Self {
        assert!(n_top >= 1);
        CompositePartition4D {
            top: n_top,
            cells: (0..n_top * n_top)
                .map(|_| Bottom::Grid(Grid2D::new(n_bottom, lambda_init)))
                .collect(),
        }
    }

    pub fn classify(&self, screen: CanonicalPoint2, direction: CanonicalPoint2) -> RegionId {
        let cell = axis_cell(screen.v, self.top) * self.top + axis_cell(screen.u, self.top);
        RegionId {
            cell: cell as u32,
            leaf: self.cells[cell].locate(direction),
        }
    }

    pub fn cell(&self, i: usize) -> &Bottom {
        &self.cells[i]
    }
}

#[derive(Debug)]
pub enum Partition {
    /// A single region covering everything.
    Single(RegionState),
    Grid(Grid2D),
    Quadtree(Quadtree),
    Composite(CompositePartition4D),
}

/// One leaf as listed by [`Partition::leaves`].
#[derive(Clone, Copy, Debug)]
pub struct LeafInfo<'a> {
    pub id: RegionId,
    pub bounds: Rect,
    pub state: &'a RegionState,
}

impl Partition {
    pub fn single(lambda_init: f64) -> Self {
        Partition::Single(RegionState::new(lambda_init))
    }

    pub fn is_four_dimensional(&self) -> bool {
        matches!(self, Partition::Composite(_))
    }

    /// Region of a path given its canonical coordinates; `direction` is only
    /// consulted by the 4d partition.
    pub fn classify(&self, screen: CanonicalPoint2, direction: Option<CanonicalPoint2>) -> RegionId {
        match self {
            Partition::Single(_) => RegionId::default(),
            Partition::Grid(g) => RegionId::flat(g.cell_of(screen) as u32),
            Partition::Quadtree(q) => RegionId::flat(q.locate(screen)),
            Partition::Composite(c) => c.classify(screen, direction.unwrap_or(CanonicalPoint2::new(0.0, 0.0))),
        }
    }

    pub fn region(&self, id: RegionId) -> &RegionState {
        match self {
            Partition::Single(s) => s,
            Partition::Grid(g) => g.region(id.leaf as usize),
            Partition::Quadtree(q) => q.region(id.leaf),
            Partition::Composite(c) => c.cells[id.cell as usize].region(id.leaf),
        }
    }

    pub fn record_visit(&self, id: RegionId) {
        self.region(id).add_hit();
    }

    pub fn leaves(&self) -> Vec<LeafInfo<'_>> {
        match self {
            Partition::Single(s) => vec![LeafInfo {
                id: RegionId::default(),
                bounds: Rect::UNIT,
                state: s,
            }],
            Partition::Grid(g) => (0..g.len())
                .map(|i| LeafInfo {
                    id: RegionId::flat(i as u32),
                    bounds: g.bounds(i),
                    state: g.region(i),
                })
                .collect(),
            Partition::Quadtree(q) => q
                .leaves()
                .map(|i| LeafInfo {
                    id: RegionId::flat(i),
                    bounds: q.bounds(i),
                    state: q.region(i),
                })
                .collect(),
            Partition::Composite(c) => c
                .cells
                .iter()
                .enumerate()
                .flat_map(|(ci, b)| {
                    b.leaves().into_iter().map(move |(leaf, bounds)| LeafInfo {
                        id: RegionId { cell: ci as u32, leaf },
                        bounds,
                        state: b.region(leaf),
                    })
                })
                .collect(),
        }
    }

    /// Lifetime `(Σa, visits)` of every region that ever existed, split
    /// quadtree nodes included.
    pub fn all_tallies(&self) -> Vec<(f64, u64)> {
        let t = |s: &RegionState| {
            let s = s.snapshot();
            (s.total_acceptance, s.total_visits)
        };
        let tree = |q: &Quadtree| q.nodes.iter().map(|n| t(&n.state)).collect::<Vec<_>>();
        match self {
            Partition::Single(s) => vec![t(s)],
            Partition::Grid(g) => g.regions.iter().map(t).collect(),
            Partition::Quadtree(q) => tree(q),
            Partition::Composite(c) => c
                .cells
                .iter()
                .flat_map(|b| match b {
                    Bottom::Grid(g) => g.regions.iter().map(t).collect::<Vec<_>>(),
                    Bottom::Quadtree(q) => tree(q),
                })
                .collect(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Partition::Single(_) => 1,
            Partition::Grid(g) => g.len(),
            Partition::Quadtree(q) => q.leaf_count(),
            Partition::Composite(c) => c
                .cells
                .iter()
                .map(|b| match b {
                    Bottom::Grid(g) => g.len(),
                    Bottom::Quadtree(q) => q.leaf_count(),
                })
                .sum(),
        }
    }

    /// Splits quadtree leaves with at least `m_split` visits. Must only run
    /// while no chain is mutating.
    pub fn refine(&mut self, m_split: u64) -> usize {
        match self {
            Partition::Single(_) | Partition::Grid(_) => 0,
            Partition::Quadtree(q) => q.refine(m_split),
            Partition::Composite(c) => c.cells.iter_mut().map(|b| b.refine(m_split)).sum(),
        }
    }

    /// One `leaf <id> <u0> <v0> <u1> <v1> <lambda> <n_k> <visits>` line per leaf.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for l in self.leaves() {
            let s = l.state.snapshot();
            let _ = writeln!(
                out,
                "leaf {} {} {} {} {} {} {} {}",
                l.id.encoded(),
                l.bounds.u0,
                l.bounds.v0,
                l.bounds.u1,
                l.bounds.v1,
                s.lambda,
                s.updates,
                s.hits
            );
        }
        out
    }
}

/// Screen-space region of a path, or `None` when its primary ray leaves the
/// film.
pub fn classify_lens(path: &Path, camera: &Camera, partition: &Partition) -> Option<RegionId> {
    let rp = camera.raster_position(path.primary_direction())?;
    Some(partition.classify(rp, None))
}

/// Vertex whose outgoing direction selects the direction-space region: the
/// first non-specular vertex after the camera. When the camera chain runs
/// straight into the emitter, the last segment is used instead.
pub fn secondary_vertex(plan: &SplitPlan) -> Option<usize> {
    plan.chain_starts.get(1).copied()
}

pub fn classify_multichain(path: &Path, plan: &SplitPlan, camera: &Camera, partition: &Partition) -> Option<RegionId> {
    let rp = camera.raster_position(path.primary_direction())?;
    let i = secondary_vertex(plan).unwrap_or(path.len() - 2);
    let cy = cylindrical_coords(path.direction(i));
    Some(partition.classify(rp, Some(cy)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        let g = Grid2D::new(20, 0.0);
        assert_eq!(g.cell_of(CanonicalPoint2::new(0.5, 0.5)), 210);
        assert_eq!(g.cell_of(CanonicalPoint2::new(0.0, 0.0)), 0);
        assert_eq!(g.cell_of(CanonicalPoint2::new(1.0, 1.0)), 399);
        assert_eq!(g.len(), 400);
    }

    #[test]
    fn quadtree_split_inherits() {
        let mut q = Quadtree::new(0.7);
        for _ in 0..4999 {
            q.region(0).add_hit();
        }
        assert_eq!(q.refine(5000), 0);
        q.region(0).add_hit();
        assert_eq!(q.refine(5000), 1);
        assert_eq!(q.leaf_count(), 4);
        let ll = q.locate(CanonicalPoint2::new(0.1, 0.1));
        assert_eq!(
            q.bounds(ll),
            Rect {
                u0: 0.0,
                v0: 0.0,
                u1: 0.5,
                v1: 0.5
            }
        );
        assert_eq!(ll, 1);
        for l in q.leaves() {
            assert_eq!(q.region(l).lambda(), 0.7);
            assert_eq!(q.region(l).hits(), 0);
        }
    }

    #[test]
    fn child_updates_floor_quarter() {
        let c = crate::adaptation::AdaptationConfig {
            batch: 1,
            ..Default::default()
        };
        let mut q = Quadtree::new(0.0);
        for _ in 0..8 {
            q.region(0).record(0.5, &c);
        }
        assert_eq!(q.region(0).updates(), 9);
        q.region(0).add_hit();
        q.refine(1);
        for l in q.leaves() {
            assert_eq!(q.region(l).updates(), 2);
        }
    }

    #[test]
    fn composite_ids() {
        let p = Partition::Composite(CompositePartition4D::with_quadtrees(20, 1.0));
        let id = p.classify(CanonicalPoint2::new(0.5, 0.5), Some(CanonicalPoint2::new(0.3, 0.9)));
        assert_eq!(id, RegionId { cell: 210, leaf: 0 });
        assert_eq!(id.encoded(), 210 << 32);
        assert_eq!(p.leaf_count(), 400);
    }

    #[test]
    fn dump_format() {
        let p = Partition::Grid(Grid2D::new(2, 1.0));
        p.record_visit(RegionId::flat(3));
        let d = p.dump();
        let lines: Vec<&str> = d.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[3], "leaf 3 0.5 0.5 1 1 1 1 1");
    }
}
