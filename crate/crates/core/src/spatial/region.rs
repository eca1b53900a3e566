use std::sync::Arc;

use crate::stream::BoundingBox;

/// Coordinate lines of a compressed grid. Cell index `2k` along an axis is
/// the line `coord[k]`; index `2k+1` is the open strip between `coord[k]`
/// and `coord[k+1]`.
#[derive(Debug, PartialEq)]
struct Grid {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Grid {
    fn new(mut xs: Vec<f64>, mut ys: Vec<f64>) -> Self {
        for v in [&mut xs, &mut ys] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        Grid { xs, ys }
    }

    fn nx(&self) -> usize {
        2 * self.xs.len() - 1
    }

    fn ny(&self) -> usize {
        2 * self.ys.len() - 1
    }

    fn cell_index(coords: &[f64], v: f64) -> Option<usize> {
        match coords.binary_search_by(|c| c.total_cmp(&v)) {
            Ok(k) => Some(2 * k),
            Err(0) => None,
            Err(k) if k == coords.len() => None,
            Err(k) => Some(2 * k - 1),
        }
    }

    /// Closed extent of cell `i` along an axis.
    fn span(coords: &[f64], i: usize) -> (f64, f64) {
        if i % 2 == 0 {
            (coords[i / 2], coords[i / 2])
        } else {
            (coords[i / 2], coords[i / 2 + 1])
        }
    }

    // Representative coordinate used to map cells between grids.
    fn probe(coords: &[f64], i: usize) -> f64 {
        let (a, b) = Self::span(coords, i);
        if i % 2 == 0 {
            a
        } else {
            a + (b - a) / 2.0
        }
    }
}

/// A subset of a rectangular universe, stored as the cells of a
/// coordinate-compressed grid (lines, open edges and open faces). Every
/// finite Boolean combination of closed boxes is exactly representable.
#[derive(Debug, Clone)]
pub struct RegionSet {
    grid: Arc<Grid>,
    mask: Vec<bool>,
}

/// A closed axis-aligned rectangle; may be degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn distance(&self, other: &Rect) -> f64 {
        let dx = (other.x0 - self.x1).max(self.x0 - other.x1).max(0.0);
        let dy = (other.y0 - self.y1).max(self.y0 - other.y1).max(0.0);
        dx.hypot(dy)
    }
}

impl From<BoundingBox> for Rect {
    fn from(b: BoundingBox) -> Self {
        Rect { x0: b.x_min, y0: b.y_min, x1: b.x_max, y1: b.y_max }
    }
}

impl RegionSet {
    /// Empty region over a grid fitted to `universe` and `boxes`.
    pub fn empty_over(universe: BoundingBox, boxes: &[BoundingBox]) -> Self {
        let mut xs = vec![universe.x_min, universe.x_max];
        let mut ys = vec![universe.y_min, universe.y_max];
        for b in boxes {
            xs.extend([b.x_min, b.x_max]);
            ys.extend([b.y_min, b.y_max]);
        }
        let grid = Grid::new(xs, ys);
        let n = grid.nx() * grid.ny();
        RegionSet { grid: Arc::new(grid), mask: vec![false; n] }
    }

    pub fn empty(universe: BoundingBox) -> Self {
        Self::empty_over(universe, &[])
    }

    pub fn full(universe: BoundingBox) -> Self {
        Self::empty(universe).complement()
    }

    /// Union of closed boxes.
    pub fn from_boxes(universe: BoundingBox, boxes: &[BoundingBox]) -> Self {
        let mut r = Self::empty_over(universe, boxes);
        for b in boxes {
            r.add_box(b);
        }
        r
    }

    /// A region sharing this region's grid, empty except for `boxes`, whose
    /// edges must already be grid lines.
    pub(crate) fn sibling_with_boxes<'a>(&self, boxes: impl IntoIterator<Item = &'a BoundingBox>) -> Self {
        let mut r = RegionSet { grid: Arc::clone(&self.grid), mask: vec![false; self.mask.len()] };
        for b in boxes {
            r.add_box(b);
        }
        r
    }

    fn add_box(&mut self, b: &BoundingBox) {
        let g = &self.grid;
        let (Some(i0), Some(i1), Some(j0), Some(j1)) = (
            Grid::cell_index(&g.xs, b.x_min),
            Grid::cell_index(&g.xs, b.x_max),
            Grid::cell_index(&g.ys, b.y_min),
            Grid::cell_index(&g.ys, b.y_max),
        ) else {
            return;
        };
        let nx = g.nx();
        for j in j0..=j1 {
            self.mask[j * nx + i0..=j * nx + i1].fill(true);
        }
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    pub fn universe(&self) -> Rect {
        let g = &self.grid;
        Rect { x0: g.xs[0], y0: g.ys[0], x1: *g.xs.last().unwrap(), y1: *g.ys.last().unwrap() }
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        match (Grid::cell_index(&self.grid.xs, x), Grid::cell_index(&self.grid.ys, y)) {
            (Some(i), Some(j)) => self.mask[j * self.grid.nx() + i],
            _ => false,
        }
    }

    pub fn area(&self) -> f64 {
        self.cells()
            .filter(|&(i, j)| i % 2 == 1 && j % 2 == 1)
            .map(|(i, j)| {
                let (x0, x1) = Grid::span(&self.grid.xs, i);
                let (y0, y1) = Grid::span(&self.grid.ys, j);
                (x1 - x0) * (y1 - y0)
            })
            .sum()
    }

    fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nx = self.grid.nx();
        self.mask.iter().enumerate().filter(|(_, &m)| m).map(move |(k, _)| (k % nx, k / nx))
    }

    fn refine(&self, grid: &Arc<Grid>) -> RegionSet {
        if Arc::ptr_eq(&self.grid, grid) || *self.grid == **grid {
            return RegionSet { grid: Arc::clone(grid), mask: self.mask.clone() };
        }
        let imap: Vec<Option<usize>> =
            (0..grid.nx()).map(|i| Grid::cell_index(&self.grid.xs, Grid::probe(&grid.xs, i))).collect();
        let jmap: Vec<Option<usize>> =
            (0..grid.ny()).map(|j| Grid::cell_index(&self.grid.ys, Grid::probe(&grid.ys, j))).collect();
        let old_nx = self.grid.nx();
        let mut mask = Vec::with_capacity(grid.nx() * grid.ny());
        for oj in &jmap {
            for oi in &imap {
                mask.push(matches!((oi, oj), (Some(i), Some(j)) if self.mask[j * old_nx + i]));
            }
        }
        RegionSet { grid: Arc::clone(grid), mask }
    }

    fn combine(&self, other: &RegionSet, op: impl Fn(bool, bool) -> bool) -> RegionSet {
        let grid = if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Arc::clone(&self.grid)
        } else {
            let xs = self.grid.xs.iter().chain(&other.grid.xs).copied().collect();
            let ys = self.grid.ys.iter().chain(&other.grid.ys).copied().collect();
            Arc::new(Grid::new(xs, ys))
        };
        let a = self.refine(&grid);
        let b = other.refine(&grid);
        let mask = a.mask.iter().zip(&b.mask).map(|(&x, &y)| op(x, y)).collect();
        RegionSet { grid, mask }
    }

    pub fn union(&self, other: &RegionSet) -> RegionSet {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersect(&self, other: &RegionSet) -> RegionSet {
        self.combine(other, |a, b| a && b)
    }

    /// Complement within the universe rectangle.
    pub fn complement(&self) -> RegionSet {
        RegionSet { grid: Arc::clone(&self.grid), mask: self.mask.iter().map(|m| !m).collect() }
    }

    /// Closed rectangles whose union is the closure of this region: maximal
    /// horizontal runs of cells, merged vertically when they line up.
    pub fn rects(&self) -> Vec<Rect> {
        let nx = self.grid.nx();
        let mut open: Vec<(usize, usize, Rect)> = Vec::new();
        let mut done = Vec::new();
        for j in 0..self.grid.ny() {
            let (y0, y1) = Grid::span(&self.grid.ys, j);
            let row = &self.mask[j * nx..(j + 1) * nx];
            let mut runs = Vec::new();
            let mut i = 0;
            while i < nx {
                if row[i] {
                    let start = i;
                    while i < nx && row[i] {
                        i += 1;
                    }
                    runs.push((start, i - 1));
                } else {
                    i += 1;
                }
            }
            let mut next = Vec::with_capacity(runs.len());
            for (a, b) in runs {
                if let Some(k) = open.iter().position(|&(oa, ob, _)| oa == a && ob == b) {
                    let (_, _, mut r) = open.swap_remove(k);
                    r.y1 = y1;
                    next.push((a, b, r));
                } else {
                    let x0 = Grid::span(&self.grid.xs, a).0;
                    let x1 = Grid::span(&self.grid.xs, b).1;
                    next.push((a, b, Rect { x0, y0, x1, y1 }));
                }
            }
            done.extend(open.drain(..).map(|(_, _, r)| r));
            open = next;
        }
        done.extend(open.into_iter().map(|(_, _, r)| r));
        done
    }
}

impl PartialEq for RegionSet {
    /// Set equality, independent of grid resolution.
    fn eq(&self, other: &Self) -> bool {
        let diff = self.combine(other, |a, b| a != b);
        diff.is_empty()
    }
}

/// Infimum of point-to-point distances between two regions; `None` when
/// either is empty. Regions whose closures touch are at distance zero.
pub fn min_region_distance(a: &RegionSet, b: &RegionSet) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    if !a.intersect(b).is_empty() {
        return Some(0.0);
    }
    let (ra, rb) = (a.rects(), b.rects());
    let mut best = f64::INFINITY;
    for x in &ra {
        for y in &rb {
            best = best.min(x.distance(y));
            if best == 0.0 {
                return Some(0.0);
            }
        }
    }
    Some(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(a: f64, b: f64, c: f64, d: f64) -> BoundingBox {
        BoundingBox::new(a, b, c, d)
    }

    fn uni() -> BoundingBox {
        bx(0.0, 0.0, 20.0, 20.0)
    }

    #[test]
    fn overlap_is_the_intersection_box() {
        let car = RegionSet::from_boxes(uni(), &[bx(0.0, 0.0, 10.0, 10.0)]);
        let bus = RegionSet::from_boxes(uni(), &[bx(5.0, 5.0, 15.0, 15.0)]);
        let both = car.intersect(&bus);
        assert_eq!(both, RegionSet::from_boxes(uni(), &[bx(5.0, 5.0, 10.0, 10.0)]));
        assert_eq!(both.area(), 25.0);
    }

    #[test]
    fn full_cover_complement_is_empty() {
        let car = RegionSet::from_boxes(uni(), &[uni()]);
        assert!(car.complement().is_empty());
    }

    #[test]
    fn touching_edges_intersect() {
        let a = RegionSet::from_boxes(uni(), &[bx(0.0, 0.0, 5.0, 5.0)]);
        let b = RegionSet::from_boxes(uni(), &[bx(5.0, 0.0, 9.0, 5.0)]);
        assert!(!a.intersect(&b).is_empty());
        assert_eq!(a.intersect(&b).area(), 0.0);
    }

    #[test]
    fn gap_distance() {
        let u = bx(0.0, 0.0, 600.0, 10.0);
        let a = RegionSet::from_boxes(u, &[bx(0.0, 0.0, 1.0, 1.0)]);
        let b = RegionSet::from_boxes(u, &[bx(501.0, 0.0, 502.0, 1.0)]);
        assert_eq!(min_region_distance(&a, &b), Some(500.0));
    }

    #[test]
    fn corner_distance() {
        let a = RegionSet::from_boxes(uni(), &[bx(0.0, 0.0, 1.0, 1.0)]);
        let b = RegionSet::from_boxes(uni(), &[bx(4.0, 5.0, 6.0, 7.0)]);
        assert_eq!(min_region_distance(&a, &b), Some(5.0));
        assert_eq!(min_region_distance(&a, &a), Some(0.0));
    }

    #[test]
    fn complements_touching_at_the_boundary() {
        let a = RegionSet::from_boxes(uni(), &[bx(0.0, 0.0, 10.0, 20.0)]);
        let b = a.complement();
        assert!(a.intersect(&b).is_empty());
        assert_eq!(min_region_distance(&a, &b), Some(0.0));
    }

    #[test]
    fn empty_operand_is_undefined() {
        let a = RegionSet::from_boxes(uni(), &[bx(0.0, 0.0, 1.0, 1.0)]);
        assert_eq!(min_region_distance(&a, &RegionSet::empty(uni())), None);
    }

    #[test]
    fn rects_cover_an_l_shape() {
        let r = RegionSet::from_boxes(uni(), &[bx(0.0, 0.0, 10.0, 2.0), bx(0.0, 0.0, 2.0, 10.0)]);
        let rects = r.rects();
        assert!(rects.len() <= 4, "{rects:?}");
        let area: f64 = r.area();
        assert_eq!(area, 20.0 + 20.0 - 4.0);
        assert!(r.contains_point(1.0, 9.0) && !r.contains_point(5.0, 5.0));
    }

    #[test]
    fn mismatched_grids_refine() {
        let a = RegionSet::from_boxes(uni(), &[bx(1.0, 1.0, 3.0, 3.0)]);
        let b = RegionSet::from_boxes(uni(), &[bx(2.0, 2.0, 4.0, 4.0)]);
        let u = a.union(&b);
        assert!(u.contains_point(3.5, 3.5) && u.contains_point(1.5, 1.5) && !u.contains_point(1.5, 3.5));
    }
}
