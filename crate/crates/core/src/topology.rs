//! Mesh geometry, node addressing and dimension-order path computation.
//!
//! All routing in the simulator is minimal dimension-order routing: an `Xy`
//! packet first travels along its source row (column index changes), then
//! along the destination column; `Yx` is the reverse. Paths therefore have
//! exactly one turning router whenever source and destination share neither
//! row nor column, and none otherwise.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::SimError;

/// Mesh dimensions. Both must be at least 2 — a one-dimensional mesh offers
/// no XY/YX choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshConfig {
    pub rows: usize,
    pub cols: usize,
}

impl MeshConfig {
    pub fn new(rows: usize, cols: usize) -> Result<Self, SimError> {
        if rows < 2 || cols < 2 {
            return Err(SimError::Validation(format!(
                "mesh must be at least 2x2, got {rows}x{cols}"
            )));
        }
        Ok(MeshConfig { rows, cols })
    }

    pub fn nodes(&self) -> usize {
        self.rows * self.cols
    }

    pub fn contains(&self, c: Coord) -> bool {
        c.row < self.rows && c.col < self.cols
    }

    /// Row-major flat id.
    pub fn flat(&self, c: Coord) -> usize {
        c.row * self.cols + c.col
    }

    pub fn coord(&self, flat: usize) -> Coord {
        Coord {
            row: flat / self.cols,
            col: flat % self.cols,
        }
    }
}

/// Router position in the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub row: usize,
    pub col: usize,
}

impl Coord {
    pub fn new(row: usize, col: usize) -> Self {
        Coord { row, col }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Committed routing choice for a packet. Exactly these two actions exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteAction {
    Xy,
    Yx,
}

impl RouteAction {
    pub fn opposite(self) -> Self {
        match self {
            RouteAction::Xy => RouteAction::Yx,
            RouteAction::Yx => RouteAction::Xy,
        }
    }

    pub fn index(self) -> usize {
        match self {
            RouteAction::Xy => 0,
            RouteAction::Yx => 1,
        }
    }
}

impl fmt::Display for RouteAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RouteAction::Xy => write!(f, "XY"),
            RouteAction::Yx => write!(f, "YX"),
        }
    }
}

/// Direction of travel between adjacent routers, plus the local PE port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dir {
    North,
    South,
    East,
    West,
    Local,
}

impl Dir {
    pub const MESH: [Dir; 4] = [Dir::North, Dir::South, Dir::East, Dir::West];

    pub fn index(self) -> usize {
        match self {
            Dir::North => 0,
            Dir::South => 1,
            Dir::East => 2,
            Dir::West => 3,
            Dir::Local => 4,
        }
    }

    pub fn from_index(i: usize) -> Dir {
        match i {
            0 => Dir::North,
            1 => Dir::South,
            2 => Dir::East,
            3 => Dir::West,
            4 => Dir::Local,
            _ => panic!("bad dir index {i}"),
        }
    }

    pub fn opposite(self) -> Dir {
        match self {
            Dir::North => Dir::South,
            Dir::South => Dir::North,
            Dir::East => Dir::West,
            Dir::West => Dir::East,
            Dir::Local => Dir::Local,
        }
    }
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dir::North => "N",
            Dir::South => "S",
            Dir::East => "E",
            Dir::West => "W",
            Dir::Local => "L",
        };
        write!(f, "{s}")
    }
}

/// Step from `c` one hop toward `d`. Rows grow southward, columns eastward.
pub fn step(c: Coord, d: Dir) -> Coord {
    match d {
        Dir::North => Coord::new(c.row - 1, c.col),
        Dir::South => Coord::new(c.row + 1, c.col),
        Dir::East => Coord::new(c.row, c.col + 1),
        Dir::West => Coord::new(c.row, c.col - 1),
        Dir::Local => c,
    }
}

fn horiz(from: usize, to: usize) -> Dir {
    if to > from {
        Dir::East
    } else {
        Dir::West
    }
}

fn vert(from: usize, to: usize) -> Dir {
    if to > from {
        Dir::South
    } else {
        Dir::North
    }
}

/// Output direction a packet takes when standing at `at`, or `Local` when
/// `at` is the destination. Dimension-order routing is memoryless, so the
/// source is not needed; `at` must lie on the route.
pub fn next_dir(dst: Coord, action: RouteAction, at: Coord) -> Dir {
    if at == dst {
        return Dir::Local;
    }
    match action {
        RouteAction::Xy => {
            if at.col != dst.col {
                horiz(at.col, dst.col)
            } else {
                vert(at.row, dst.row)
            }
        }
        RouteAction::Yx => {
            if at.row != dst.row {
                vert(at.row, dst.row)
            } else {
                horiz(at.col, dst.col)
            }
        }
    }
}

/// Input port the packet arrived on at `at` (the side facing the upstream
/// router), or `Local` when `at` is the source. A flit traveling east enters
/// its next router on the West port.
pub fn input_port(src: Coord, action: RouteAction, at: Coord) -> Dir {
    if at == src {
        return Dir::Local;
    }
    // The reversed route's departure direction points at the upstream hop.
    next_dir(src, action.opposite(), at)
}

/// True iff `at` lies on the dimension-order path from `src` to `dst`.
pub fn on_path(src: Coord, dst: Coord, action: RouteAction, at: Coord) -> bool {
    let (first, corner) = match action {
        RouteAction::Xy => (true, Coord::new(src.row, dst.col)),
        RouteAction::Yx => (false, Coord::new(dst.row, src.col)),
    };
    let seg1 = if first {
        at.row == src.row && between(at.col, src.col, dst.col)
    } else {
        at.col == src.col && between(at.row, src.row, dst.row)
    };
    let seg2 = if first {
        at.col == dst.col && between(at.row, src.row, dst.row)
    } else {
        at.row == dst.row && between(at.col, src.col, dst.col)
    };
    seg1 || seg2 || at == corner
}

fn between(x: usize, a: usize, b: usize) -> bool {
    (a.min(b)..=a.max(b)).contains(&x)
}

/// Full hop sequence from `src` to `dst` inclusive. Path length is
/// |Δrow| + |Δcol| + 1 nodes.
pub fn path(src: Coord, dst: Coord, action: RouteAction) -> Result<Vec<Coord>, SimError> {
    if src == dst {
        return Err(SimError::Validation("zero-length route".into()));
    }
    let mut hops = vec![src];
    let mut cur = src;
    while cur != dst {
        cur = step(cur, next_dir(dst, action, cur));
        hops.push(cur);
    }
    Ok(hops)
}

/// The single router where the packet changes dimension, or `None` for
/// flows whose endpoints share a row or column (straight flows never turn).
pub fn turning_router(src: Coord, dst: Coord, action: RouteAction) -> Option<Coord> {
    if src.row == dst.row || src.col == dst.col {
        return None;
    }
    Some(match action {
        RouteAction::Xy => Coord::new(src.row, dst.col),
        RouteAction::Yx => Coord::new(dst.row, src.col),
    })
}

/// How a packet interacts with the router at `node`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopKind {
    /// Enters and exits on the same axis; can use the bypass.
    Straight,
    /// Makes a 90-degree turn here.
    Turning,
    /// This router is the destination.
    Ejecting,
}

/// Classify the route's interaction with `node`. The source router counts as
/// straight: the injected packet departs without turning, and the PE-to-router
/// hop is local-port traversal rather than a mesh hop.
pub fn classify_at(src: Coord, dst: Coord, action: RouteAction, node: Coord) -> Result<HopKind, SimError> {
    if !on_path(src, dst, action, node) {
        return Err(SimError::Internal(format!(
            "router {node} is not on the {action} route {src}->{dst}"
        )));
    }
    if node == dst {
        return Ok(HopKind::Ejecting);
    }
    if turning_router(src, dst, action) == Some(node) {
        return Ok(HopKind::Turning);
    }
    Ok(HopKind::Straight)
}

/// True iff the packet neither turns nor ejects at `node`.
pub fn is_straight_at(route: &[Coord], node: Coord) -> Result<bool, SimError> {
    let pos = route
        .iter()
        .position(|&c| c == node)
        .ok_or_else(|| SimError::Internal(format!("node {node} not on route")))?;
    if pos + 1 == route.len() {
        return Ok(false); // ejection
    }
    if pos == 0 {
        return Ok(true); // injection; departs without a turn
    }
    let prev = route[pos - 1];
    let next = route[pos + 1];
    // Straight means the three nodes are colinear.
    Ok(prev.row == next.row || prev.col == next.col)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(row: usize, col: usize) -> Coord {
        Coord::new(row, col)
    }

    #[test]
    fn xy_path_row_first() {
        let p = path(c(0, 0), c(2, 3), RouteAction::Xy).unwrap();
        assert_eq!(
            p,
            vec![c(0, 0), c(0, 1), c(0, 2), c(0, 3), c(1, 3), c(2, 3)]
        );
    }

    #[test]
    fn aligned_flow_single_path() {
        let p_xy = path(c(0, 0), c(0, 3), RouteAction::Xy).unwrap();
        let p_yx = path(c(0, 0), c(0, 3), RouteAction::Yx).unwrap();
        assert_eq!(p_xy, vec![c(0, 0), c(0, 1), c(0, 2), c(0, 3)]);
        assert_eq!(p_xy, p_yx);
    }

    #[test]
    fn yx_path_column_first() {
        let p = path(c(2, 3), c(0, 0), RouteAction::Yx).unwrap();
        assert_eq!(
            p,
            vec![c(2, 3), c(1, 3), c(0, 3), c(0, 2), c(0, 1), c(0, 0)]
        );
    }

    #[test]
    fn zero_length_route_rejected() {
        assert!(path(c(1, 1), c(1, 1), RouteAction::Xy).is_err());
    }

    #[test]
    fn turning_router_formulas() {
        assert_eq!(
            turning_router(c(0, 0), c(2, 3), RouteAction::Xy),
            Some(c(0, 3))
        );
        assert_eq!(
            turning_router(c(0, 0), c(2, 3), RouteAction::Yx),
            Some(c(2, 0))
        );
        assert_eq!(turning_router(c(1, 5), c(1, 0), RouteAction::Xy), None);
        assert_eq!(turning_router(c(1, 5), c(1, 0), RouteAction::Yx), None);
    }

    #[test]
    fn straightness_on_route() {
        let route = path(c(0, 0), c(2, 3), RouteAction::Xy).unwrap();
        assert!(is_straight_at(&route, c(0, 2)).unwrap());
        assert!(!is_straight_at(&route, c(0, 3)).unwrap()); // turn
        assert!(!is_straight_at(&route, c(2, 3)).unwrap()); // ejection
        assert!(is_straight_at(&route, c(0, 0)).unwrap()); // source
        assert!(is_straight_at(&route, c(5, 5)).is_err());
    }

    #[test]
    fn exactly_one_turn_per_action() {
        let mesh = MeshConfig::new(4, 5).unwrap();
        for s in 0..mesh.nodes() {
            for d in 0..mesh.nodes() {
                if s == d {
                    continue;
                }
                let (src, dst) = (mesh.coord(s), mesh.coord(d));
                if src.row == dst.row || src.col == dst.col {
                    continue;
                }
                for action in [RouteAction::Xy, RouteAction::Yx] {
                    let route = path(src, dst, action).unwrap();
                    let non_straight: Vec<_> = route
                        .iter()
                        .filter(|&&n| n != dst && !is_straight_at(&route, n).unwrap())
                        .collect();
                    assert_eq!(non_straight.len(), 1, "{src}->{dst} {action}");
                    assert_eq!(*non_straight[0], turning_router(src, dst, action).unwrap());
                }
                // distinct turning routers when neither row nor column shared
                assert_ne!(
                    turning_router(src, dst, RouteAction::Xy),
                    turning_router(src, dst, RouteAction::Yx)
                );
            }
        }
    }

    #[test]
    fn path_reversal_symmetry() {
        let mesh = MeshConfig::new(4, 4).unwrap();
        for s in 0..mesh.nodes() {
            for d in 0..mesh.nodes() {
                if s == d {
                    continue;
                }
                let (src, dst) = (mesh.coord(s), mesh.coord(d));
                for action in [RouteAction::Xy, RouteAction::Yx] {
                    let mut fwd = path(src, dst, action).unwrap();
                    let rev = path(dst, src, action.opposite()).unwrap();
                    fwd.reverse();
                    assert_eq!(fwd, rev);
                }
            }
        }
    }

    #[test]
    fn path_length_minimal() {
        let mesh = MeshConfig::new(5, 3).unwrap();
        for s in 0..mesh.nodes() {
            for d in 0..mesh.nodes() {
                if s == d {
                    continue;
                }
                let (src, dst) = (mesh.coord(s), mesh.coord(d));
                let expect = src.row.abs_diff(dst.row) + src.col.abs_diff(dst.col) + 1;
                for action in [RouteAction::Xy, RouteAction::Yx] {
                    assert_eq!(path(src, dst, action).unwrap().len(), expect);
                }
            }
        }
    }

    #[test]
    fn hop_classification() {
        let (src, dst) = (c(0, 0), c(2, 3));
        assert_eq!(
            classify_at(src, dst, RouteAction::Xy, c(0, 2)).unwrap(),
            HopKind::Straight
        );
        assert_eq!(
            classify_at(src, dst, RouteAction::Xy, c(0, 3)).unwrap(),
            HopKind::Turning
        );
        assert_eq!(
            classify_at(src, dst, RouteAction::Xy, c(2, 3)).unwrap(),
            HopKind::Ejecting
        );
        assert!(classify_at(src, dst, RouteAction::Xy, c(2, 0)).is_err());
    }

    #[test]
    fn input_dirs_match_path_walk() {
        let mesh = MeshConfig::new(4, 4).unwrap();
        for s in 0..mesh.nodes() {
            for d in 0..mesh.nodes() {
                if s == d {
                    continue;
                }
                let (src, dst) = (mesh.coord(s), mesh.coord(d));
                for action in [RouteAction::Xy, RouteAction::Yx] {
                    let route = path(src, dst, action).unwrap();
                    for (i, &node) in route.iter().enumerate() {
                        let din = input_port(src, action, node);
                        if i == 0 {
                            assert_eq!(din, Dir::Local);
                        } else {
                            assert_eq!(step(node, din), route[i - 1]);
                        }
                        let dout = next_dir(dst, action, node);
                        if i + 1 == route.len() {
                            assert_eq!(dout, Dir::Local);
                        } else {
                            assert_eq!(step(node, dout), route[i + 1]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn flat_ids_row_major() {
        let mesh = MeshConfig::new(8, 8).unwrap();
        assert_eq!(mesh.flat(c(0, 7)), 7);
        assert_eq!(mesh.flat(c(7, 7)), 63);
        assert_eq!(mesh.coord(56), c(7, 0));
    }
}
