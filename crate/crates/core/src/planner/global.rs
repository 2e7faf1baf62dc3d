//! Grid search for the global path.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use super::grid::OccupancyGrid;
use crate::geometry::Point2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GlobalPlanError {
    #[error("start or goal lies outside the grid")]
    OutOfBounds,
    #[error("no path to the goal")]
    Unreachable,
}

/// Polyline from the start to the goal.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalPath {
    pub points: Vec<Point2>,
    pub cumulative: Vec<f64>,
    /// Length of the unsmoothed cell path.
    pub grid_cost: f64,
}

/// Closest point on a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathProjection {
    pub point: Point2,
    /// Arc length from the path start.
    pub arc_length: f64,
    /// Direction of the segment containing the point.
    pub tangent: f64,
    pub distance: f64,
}

impl GlobalPath {
    pub fn from_points(points: Vec<Point2>, grid_cost: f64) -> Self {
        let mut cumulative = Vec::with_capacity(points.len());
        let mut total = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                total += p.distance(points[i - 1]);
            }
            cumulative.push(total);
        }
        Self {
            points,
            cumulative,
            grid_cost,
        }
    }

    pub fn empty() -> Self {
        Self::from_points(Vec::new(), 0.0)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn project(&self, p: Point2) -> Option<PathProjection> {
        match self.points.len() {
            0 => None,
            1 => Some(PathProjection {
                point: self.points[0],
                arc_length: 0.0,
                tangent: (self.points[0] - p).angle(),
                distance: p.distance(self.points[0]),
            }),
            _ => {
                let mut best: Option<PathProjection> = None;
                for (i, seg) in self.points.windows(2).enumerate() {
                    let d = seg[1] - seg[0];
                    let len2 = d.dot(d);
                    let t = if len2 > 0.0 {
                        ((p - seg[0]).dot(d) / len2).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                    let q = seg[0] + d * t;
                    let dist = q.distance(p);
                    if best.map_or(true, |b| dist < b.distance) {
                        best = Some(PathProjection {
                            point: q,
                            arc_length: self.cumulative[i] + t * len2.sqrt(),
                            tangent: d.angle(),
                            distance: dist,
                        });
                    }
                }
                best
            }
        }
    }

    /// Point at arc length `s`, clamped to the path ends.
    pub fn point_at(&self, s: f64) -> Option<Point2> {
        let last = *self.points.last()?;
        if s <= 0.0 {
            return Some(self.points[0]);
        }
        for i in 1..self.points.len() {
            if self.cumulative[i] >= s {
                let span = self.cumulative[i] - self.cumulative[i - 1];
                let t = if span > 0.0 {
                    (s - self.cumulative[i - 1]) / span
                } else {
                    1.0
                };
                return Some(self.points[i - 1] + (self.points[i] - self.points[i - 1]) * t);
            }
        }
        Some(last)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    g: f64,
    cell: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap: invert for smallest f, then largest g.
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cells the robot center may not enter: near an occupied cell or the bounds.
pub fn blocked_cells(grid: &OccupancyGrid, robot_radius: f64) -> Vec<bool> {
    let (w, h) = (grid.width(), grid.height());
    let reach = robot_radius + grid.cell_slack();
    let cells = (reach / grid.resolution).ceil() as i64;
    let mut blocked = vec![false; w * h];
    for iy in 0..h {
        for ix in 0..w {
            let c = grid.cell_center(ix, iy);
            if grid.bounds.inner_distance(c) < robot_radius {
                blocked[iy * w + ix] = true;
            }
            if !grid.is_occupied(ix, iy) {
                continue;
            }
            for dy in -cells..=cells {
                for dx in -cells..=cells {
                    let (x, y) = (ix as i64 + dx, iy as i64 + dy);
                    if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                        continue;
                    }
                    let (x, y) = (x as usize, y as usize);
                    if grid.cell_center(x, y).distance(c) < reach {
                        blocked[y * w + x] = true;
                    }
                }
            }
        }
    }
    blocked
}

/// Shortest 8-connected path over the grid, unknown cells counted as free
/// and occupied cells inflated by the robot radius, then shortened by
/// greedy line-of-sight shortcuts. The start cell is never blocked.
pub fn plan_global(
    grid: &OccupancyGrid,
    start: Point2,
    goal: Point2,
    robot_radius: f64,
) -> Result<GlobalPath, GlobalPlanError> {
    let (sx, sy) = grid.cell_of(start).ok_or(GlobalPlanError::OutOfBounds)?;
    let (gx, gy) = grid.cell_of(goal).ok_or(GlobalPlanError::OutOfBounds)?;
    let w = grid.width();
    let h = grid.height();
    let mut blocked = blocked_cells(grid, robot_radius);
    let start_cell = sy * w + sx;
    let goal_cell = gy * w + gx;
    blocked[start_cell] = false;
    if blocked[goal_cell] {
        return Err(GlobalPlanError::Unreachable);
    }

    let res = grid.resolution;
    let heuristic = |cell: usize| {
        let dx = (cell % w).abs_diff(gx) as f64;
        let dy = (cell / w).abs_diff(gy) as f64;
        res * (dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy))
    };
    let mut g = vec![f64::INFINITY; w * h];
    let mut parent = vec![usize::MAX; w * h];
    let mut closed = vec![false; w * h];
    let mut open = BinaryHeap::new();
    g[start_cell] = 0.0;
    open.push(Open {
        f: heuristic(start_cell),
        g: 0.0,
        cell: start_cell,
    });
    while let Some(Open { g: gc, cell, .. }) = open.pop() {
        if closed[cell] {
            continue;
        }
        closed[cell] = true;
        if cell == goal_cell {
            break;
        }
        let (cx, cy) = ((cell % w) as i64, (cell / w) as i64);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (cx + dx, cy + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let n = ny as usize * w + nx as usize;
                if blocked[n] || closed[n] {
                    continue;
                }
                // no corner cutting past blocked cells
                if dx != 0
                    && dy != 0
                    && (blocked[cy as usize * w + nx as usize]
                        || blocked[ny as usize * w + cx as usize])
                {
                    continue;
                }
                let step = if dx != 0 && dy != 0 {
                    res * std::f64::consts::SQRT_2
                } else {
                    res
                };
                let tentative = gc + step;
                if tentative < g[n] {
                    g[n] = tentative;
                    parent[n] = cell;
                    open.push(Open {
                        f: tentative + heuristic(n),
                        g: tentative,
                        cell: n,
                    });
                }
            }
        }
    }
    if !closed[goal_cell] {
        return Err(GlobalPlanError::Unreachable);
    }

    let mut cells = vec![goal_cell];
    let mut c = goal_cell;
    while c != start_cell {
        c = parent[c];
        cells.push(c);
    }
    cells.reverse();
    let mut raw: Vec<Point2> = cells
        .iter()
        .map(|&c| grid.cell_center(c % w, c / w))
        .collect();
    raw[0] = start;
    *raw.last_mut().unwrap() = goal;
    if raw.len() == 1 {
        raw.push(goal);
    }
    let points = shortcut(grid, &blocked, &raw);
    Ok(GlobalPath::from_points(points, g[goal_cell]))
}

fn line_of_sight(
    grid: &OccupancyGrid,
    blocked: &[bool],
    a: Point2,
    b: Point2,
    start_cell: Option<(usize, usize)>,
) -> bool {
    let len = a.distance(b);
    let step = grid.resolution / 4.0;
    let n = (len / step).ceil().max(1.0) as usize;
    (0..=n).all(|i| {
        let p = a + (b - a) * (i as f64 / n as f64);
        match grid.cell_of(p) {
            Some(cell) if Some(cell) == start_cell => true,
            Some((x, y)) => !blocked[y * grid.width() + x],
            None => false,
        }
    })
}

fn shortcut(grid: &OccupancyGrid, blocked: &[bool], raw: &[Point2]) -> Vec<Point2> {
    let start_cell = grid.cell_of(raw[0]);
    let mut out = vec![raw[0]];
    let mut i = 0;
    while i < raw.len() - 1 {
        let mut j = raw.len() - 1;
        while j > i + 1 && !line_of_sight(grid, blocked, raw[i], raw[j], start_cell) {
            j -= 1;
        }
        out.push(raw[j]);
        i = j;
    }
    out
}
