//! Occupancy grid built from depth scans.

use crate::geometry::{DepthScan, ObstacleSource, Point2, Pose2D, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    Unknown,
    Free,
    Occupied,
}

const MAX_HITS_PER_CELL: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub resolution: f64,
    pub bounds: Rect,
    width: usize,
    height: usize,
    cells: Vec<CellState>,
    /// Beam endpoints that marked each occupied cell.
    hits: Vec<Vec<Point2>>,
    /// Cells forced occupied by recovery; scans never clear them.
    pinned: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(bounds: Rect, resolution: f64) -> Self {
        assert!(resolution > 0.0, "grid resolution must be positive");
        let width = (bounds.width() / resolution - 1e-9).ceil().max(1.0) as usize;
        let height = (bounds.height() / resolution - 1e-9).ceil().max(1.0) as usize;
        Self {
            resolution,
            bounds,
            width,
            height,
            cells: vec![CellState::Unknown; width * height],
            hits: vec![Vec::new(); width * height],
            pinned: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let fx = ((p.x - self.bounds.min.x) / self.resolution).floor();
        let fy = ((p.y - self.bounds.min.y) / self.resolution).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point2 {
        Point2::new(
            self.bounds.min.x + (ix as f64 + 0.5) * self.resolution,
            self.bounds.min.y + (iy as f64 + 0.5) * self.resolution,
        )
    }

    fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn state(&self, ix: usize, iy: usize) -> CellState {
        self.cells[self.index(ix, iy)]
    }

    pub fn state_at(&self, p: Point2) -> Option<CellState> {
        self.cell_of(p).map(|(x, y)| self.state(x, y))
    }

    pub fn set(&mut self, ix: usize, iy: usize, state: CellState) {
        let i = self.index(ix, iy);
        if !self.pinned[i] {
            self.cells[i] = state;
            self.hits[i].clear();
        }
    }

    fn mark_hit(&mut self, ix: usize, iy: usize, at: Point2) {
        let i = self.index(ix, iy);
        if self.pinned[i] {
            return;
        }
        self.cells[i] = CellState::Occupied;
        let merge = self.resolution / 8.0;
        let hits = &mut self.hits[i];
        if hits.len() < MAX_HITS_PER_CELL && hits.iter().all(|h| h.distance(at) > merge) {
            hits.push(at);
        }
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == state).count()
    }

    pub fn is_occupied(&self, ix: usize, iy: usize) -> bool {
        self.state(ix, iy) == CellState::Occupied
    }

    /// Free `(ix, iy)` for a beam from `origin` along `dir` that travelled
    /// `reach`. Stored endpoints the beam did not pass through keep the cell
    /// occupied.
    fn carve(&mut self, ix: usize, iy: usize, origin: Point2, dir: Point2, reach: f64) {
        let i = self.index(ix, iy);
        if self.pinned[i] {
            return;
        }
        let merge = self.resolution / 8.0;
        self.hits[i].retain(|&h| {
            let along = (h - origin).dot(dir).clamp(0.0, reach);
            h.distance(origin + dir * along) > merge
        });
        if self.hits[i].is_empty() {
            self.cells[i] = CellState::Free;
        }
    }

    /// Carve free space along every beam up to one cell short of its range,
    /// then mark the end cell of each beam that returned before max range.
    pub fn update_occupancy(&mut self, pose: &Pose2D, scan: &DepthScan) {
        let config = &scan.config;
        let origin = pose.position();
        let step = self.resolution / 2.0;
        for (i, &range) in scan.ranges.iter().enumerate() {
            let dir = Point2::from_polar(1.0, pose.heading() + config.beam_angle(i));
            let reach = range - self.resolution;
            let mut s = 0.0;
            while s <= reach {
                if let Some((x, y)) = self.cell_of(origin + dir * s) {
                    self.carve(x, y, origin, dir, reach);
                }
                s += step;
            }
        }
        for (i, &range) in scan.ranges.iter().enumerate() {
            if range < config.max_range {
                let dir = Point2::from_polar(1.0, pose.heading() + config.beam_angle(i));
                let end = origin + dir * range;
                if let Some((x, y)) = self.cell_of(end) {
                    self.mark_hit(x, y, end);
                }
            }
        }
    }

    /// Pin every cell whose center lies between `r_min` and `r_max` from
    /// `pose` at a body-frame bearing in `[from_angle, to_angle]` as occupied.
    pub fn pin_wedge(
        &mut self,
        pose: &Pose2D,
        from_angle: f64,
        to_angle: f64,
        r_min: f64,
        r_max: f64,
    ) {
        for iy in 0..self.height {
            for ix in 0..self.width {
                let local = pose.to_body(self.cell_center(ix, iy));
                let r = local.norm();
                let bearing = local.angle();
                if r >= r_min && r <= r_max && bearing >= from_angle && bearing <= to_angle {
                    let i = self.index(ix, iy);
                    self.cells[i] = CellState::Occupied;
                    self.hits[i].clear();
                    self.pinned[i] = true;
                }
            }
        }
    }

    /// Half the cell diagonal: how far anything inside a cell can sit from
    /// its center.
    pub fn cell_slack(&self) -> f64 {
        self.resolution * std::f64::consts::FRAC_1_SQRT_2
    }

    /// Distance from `p` to the nearest occupied cell center within `radius`.
    pub fn nearest_occupied(&self, p: Point2, radius: f64) -> Option<f64> {
        let res = self.resolution;
        let cx = ((p.x - self.bounds.min.x) / res).floor() as i64;
        let cy = ((p.y - self.bounds.min.y) / res).floor() as i64;
        let reach = (radius / res).ceil() as i64 + 1;
        let x0 = (cx - reach).max(0);
        let x1 = (cx + reach).min(self.width as i64 - 1);
        let y0 = (cy - reach).max(0);
        let y1 = (cy + reach).min(self.height as i64 - 1);
        let mut best = f64::INFINITY;
        for iy in y0..=y1 {
            let row = iy as usize * self.width;
            for ix in x0..=x1 {
                if self.cells[row + ix as usize] == CellState::Occupied {
                    let d = self.cell_center(ix as usize, iy as usize).distance(p);
                    if d < best {
                        best = d;
                    }
                }
            }
        }
        (best <= radius).then_some(best)
    }

    /// Distance from `p` to the nearest recorded beam endpoint, or to the
    /// near edge of a pinned cell, if one lies within `radius`.
    pub fn obstacle_distance(&self, p: Point2, radius: f64) -> Option<f64> {
        let res = self.resolution;
        let slack = self.cell_slack();
        let cx = ((p.x - self.bounds.min.x) / res).floor() as i64;
        let cy = ((p.y - self.bounds.min.y) / res).floor() as i64;
        let reach = ((radius + slack) / res).ceil() as i64 + 1;
        let x0 = (cx - reach).max(0);
        let x1 = (cx + reach).min(self.width as i64 - 1);
        let y0 = (cy - reach).max(0);
        let y1 = (cy + reach).min(self.height as i64 - 1);
        let mut best = f64::INFINITY;
        for iy in y0..=y1 {
            let row = iy as usize * self.width;
            for ix in x0..=x1 {
                let i = row + ix as usize;
                if self.cells[i] != CellState::Occupied {
                    continue;
                }
                let hits = &self.hits[i];
                let d = if hits.is_empty() {
                    self.cell_center(ix as usize, iy as usize).distance(p) - slack
                } else {
                    hits.iter()
                        .map(|h| h.distance(p))
                        .fold(f64::INFINITY, f64::min)
                };
                if d < best {
                    best = d;
                }
            }
        }
        (best <= radius).then_some(best)
    }
}

/// Clearance against everything the grid remembers and the known world
/// bounds. Anything farther than `horizon` reports `horizon`.
#[derive(Debug, Clone, Copy)]
pub struct GridClearance<'a> {
    pub grid: &'a OccupancyGrid,
    pub horizon: f64,
}

impl ObstacleSource for GridClearance<'_> {
    fn clearance(&self, p: Point2) -> f64 {
        let cells = self
            .grid
            .obstacle_distance(p, self.horizon)
            .unwrap_or(self.horizon);
        cells.min(self.grid.bounds.inner_distance(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Obstacle, Scene, SensorConfig};

    fn bounds() -> Rect {
        Rect::new(-1.0, -5.0, 9.0, 5.0)
    }

    #[test]
    fn empty_scan_carves_a_free_wedge() {
        let scene = Scene::empty(Rect::new(-50.0, -50.0, 50.0, 50.0));
        let pose = Pose2D::new(0.0, 0.0, 0.0);
        let scan = scene.raycast_scan(&pose, &SensorConfig::default());
        let mut grid = OccupancyGrid::new(bounds(), 0.1);
        grid.update_occupancy(&pose, &scan);
        assert_eq!(grid.count(CellState::Occupied), 0);
        assert_eq!(grid.state_at(Point2::new(3.0, 0.0)), Some(CellState::Free));
        assert_eq!(grid.state_at(Point2::new(3.0, 1.2)), Some(CellState::Free));
        assert_eq!(
            grid.state_at(Point2::new(3.0, 2.5)),
            Some(CellState::Unknown)
        );
        assert_eq!(
            grid.state_at(Point2::new(-0.5, 0.0)),
            Some(CellState::Unknown)
        );
    }

    #[test]
    fn hit_cell_matches_geometry() {
        let scene = Scene::empty(Rect::new(-50.0, -50.0, 50.0, 50.0))
            .with_obstacle(Obstacle::new(Point2::new(2.28, 0.0), 0.28));
        let pose = Pose2D::new(0.0, 0.0, 0.0);
        let scan = scene.raycast_scan(&pose, &SensorConfig::default());
        let mut grid = OccupancyGrid::new(bounds(), 0.1);
        grid.update_occupancy(&pose, &scan);
        let d = grid.nearest_occupied(Point2::new(2.0, 0.0), 1.0).unwrap();
        assert!(d <= 0.1, "nearest occupied center {d} from the hit point");
        let again = grid.clone();
        grid.update_occupancy(&pose, &scan);
        assert_eq!(grid, again);
    }

    #[test]
    fn clearance_matches_seen_points() {
        let scene = Scene::empty(Rect::new(-50.0, -50.0, 50.0, 50.0))
            .with_obstacle(Obstacle::new(Point2::new(3.0, 0.3), 0.28));
        let pose = Pose2D::new(0.0, 0.0, 0.0);
        let scan = scene.raycast_scan(&pose, &SensorConfig::default());
        let mut grid = OccupancyGrid::new(bounds(), 0.1);
        grid.update_occupancy(&pose, &scan);
        let source = GridClearance {
            grid: &grid,
            horizon: 1.0,
        };
        let hits = scan.hit_points(&pose);
        for i in 0..50 {
            let p = Point2::new(1.5 + i as f64 * 0.03, -0.5 + i as f64 * 0.02);
            let seen = hits.clearance(p);
            let c = source.clearance(p);
            assert!(
                (c - seen.min(1.0)).abs() <= 0.1 / 8.0 + 1e-12,
                "{c} vs {seen} at {p:?}"
            );
        }
        assert!(source.clearance(Point2::new(-0.95, 0.0)) < 0.06);
        grid.pin_wedge(&pose, -0.1, 0.1, 0.5, 0.6);
        let c = source_after_pin(&grid);
        assert!(c <= 0.0, "{c}");
    }

    fn source_after_pin(grid: &OccupancyGrid) -> f64 {
        GridClearance { grid, horizon: 1.0 }.clearance(Point2::new(0.55, 0.0))
    }

    #[test]
    fn pinned_cells_survive_scans() {
        let scene = Scene::empty(Rect::new(-50.0, -50.0, 50.0, 50.0));
        let pose = Pose2D::new(0.0, 0.0, 0.0);
        let mut grid = OccupancyGrid::new(bounds(), 0.1);
        grid.pin_wedge(&pose, -0.5, 0.5, 0.5, 2.0);
        assert_eq!(
            grid.state_at(Point2::new(1.0, 0.0)),
            Some(CellState::Occupied)
        );
        assert_eq!(
            grid.state_at(Point2::new(2.5, 0.0)),
            Some(CellState::Unknown)
        );
        grid.update_occupancy(&pose, &scene.raycast_scan(&pose, &SensorConfig::default()));
        assert_eq!(
            grid.state_at(Point2::new(1.0, 0.0)),
            Some(CellState::Occupied)
        );
        assert_eq!(grid.state_at(Point2::new(3.0, 0.0)), Some(CellState::Free));
    }
}
