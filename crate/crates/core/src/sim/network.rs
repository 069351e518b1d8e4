//! Grid road networks. Intersection `(r, c)` has id `r * cols + c`, row 0 is
//! the northern edge. Every intersection has twelve incoming lanes, three
//! (left, through, right) per travel heading; lane id is
//! `intersection * 12 + heading * 3 + movement`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LANES_PER_INTERSECTION: usize = 12;

/// Direction of travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Heading {
        Self::ALL[i % 4]
    }

    pub fn left(self) -> Heading {
        Self::from_index(self.index() + 3)
    }

    pub fn right(self) -> Heading {
        Self::from_index(self.index() + 1)
    }

    pub fn is_east_west(self) -> bool {
        matches!(self, Heading::East | Heading::West)
    }

    pub fn letter(self) -> char {
        ['N', 'E', 'S', 'W'][self.index()]
    }

    pub fn parse(s: &str) -> Result<Heading> {
        match s.to_ascii_uppercase().as_str() {
            "N" | "NORTH" => Ok(Heading::North),
            "E" | "EAST" => Ok(Heading::East),
            "S" | "SOUTH" => Ok(Heading::South),
            "W" | "WEST" => Ok(Heading::West),
            other => Err(Error::Network(format!("unknown heading `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Movement {
    Left,
    Through,
    Right,
}

impl Movement {
    pub const ALL: [Movement; 3] = [Movement::Left, Movement::Through, Movement::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn turn(self, h: Heading) -> Heading {
        match self {
            Movement::Left => h.left(),
            Movement::Through => h,
            Movement::Right => h.right(),
        }
    }

    /// Right turns are never signal-controlled.
    pub fn is_controlled(self) -> bool {
        self != Movement::Right
    }

    pub fn parse(s: &str) -> Result<Movement> {
        match s.to_ascii_lowercase().as_str() {
            "l" | "left" => Ok(Movement::Left),
            "t" | "s" | "through" | "straight" => Ok(Movement::Through),
            "r" | "right" => Ok(Movement::Right),
            other => Err(Error::Network(format!("unknown movement `{other}`"))),
        }
    }
}

/// Local lane index within an intersection.
pub fn local_lane(h: Heading, m: Movement) -> usize {
    h.index() * 3 + m.index()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseSet {
    Four,
    Eight,
}

/// A set of non-conflicting controlled movements, as local lane indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub lanes: Vec<usize>,
}

impl PhaseSet {
    pub fn phases(self) -> Vec<Phase> {
        use Heading::*;
        use Movement::*;
        let pair = |name: &str, a: (Heading, Movement), b: (Heading, Movement)| Phase {
            name: name.to_string(),
            lanes: vec![local_lane(a.0, a.1), local_lane(b.0, b.1)],
        };
        let mut p = vec![
            pair("EW-through", (East, Through), (West, Through)),
            pair("NS-through", (North, Through), (South, Through)),
            pair("EW-left", (East, Left), (West, Left)),
            pair("NS-left", (North, Left), (South, Left)),
        ];
        if self == PhaseSet::Eight {
            for h in Heading::ALL {
                p.push(pair(&format!("{}-through-left", h.letter()), (h, Through), (h, Left)));
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneSpec {
    pub id: usize,
    pub intersection: usize,
    pub heading: Heading,
    pub movement: Movement,
    pub length: f64,
    pub speed: f64,
    /// Intersection feeding this lane, `None` for a boundary entry.
    pub upstream: Option<usize>,
    /// Intersection reached after crossing, `None` when the vehicle leaves
    /// the grid.
    pub downstream: Option<usize>,
}

impl LaneSpec {
    pub fn out_heading(&self) -> Heading {
        self.movement.turn(self.heading)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionSpec {
    pub id: usize,
    pub row: usize,
    pub col: usize,
    pub phases: Vec<Phase>,
}

impl IntersectionSpec {
    pub fn lane_id(&self, local: usize) -> usize {
        self.id * LANES_PER_INTERSECTION + local
    }
}

/// A route is the ordered list of lanes a vehicle queues in; it leaves the
/// network after crossing the stop line of the last one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub lanes: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Length of east-west links in metres.
    pub ew_length: f64,
    /// Length of north-south links in metres.
    pub ns_length: f64,
    pub speed: f64,
    pub phase_set: PhaseSet,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            rows: 1,
            cols: 1,
            ew_length: 400.0,
            ns_length: 800.0,
            speed: 20.0,
            phase_set: PhaseSet::Four,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    pub grid: GridSpec,
    pub intersections: Vec<IntersectionSpec>,
    pub lanes: Vec<LaneSpec>,
    pub routes: Vec<Route>,
}

impl RoadNetwork {
    pub fn grid(grid: GridSpec) -> Result<Self> {
        if grid.rows == 0 || grid.cols == 0 {
            return Err(Error::Network("grid needs at least one row and column".into()));
        }
        for (what, v) in [("ew_length", grid.ew_length), ("ns_length", grid.ns_length), ("speed", grid.speed)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Network(format!("{what} must be positive, got {v}")));
            }
        }
        let phases = grid.phase_set.phases();
        let mut intersections = Vec::new();
        let mut lanes = Vec::new();
        for r in 0..grid.rows {
            for c in 0..grid.cols {
                let id = r * grid.cols + c;
                intersections.push(IntersectionSpec {
                    id,
                    row: r,
                    col: c,
                    phases: phases.clone(),
                });
                for h in Heading::ALL {
                    for m in Movement::ALL {
                        let length = if h.is_east_west() { grid.ew_length } else { grid.ns_length };
                        lanes.push(LaneSpec {
                            id: id * LANES_PER_INTERSECTION + local_lane(h, m),
                            intersection: id,
                            heading: h,
                            movement: m,
                            length,
                            speed: grid.speed,
                            upstream: neighbour(&grid, r, c, opposite(h)),
                            downstream: neighbour(&grid, r, c, m.turn(h)),
                        });
                    }
                }
            }
        }
        let net = Self {
            grid,
            intersections,
            lanes,
            routes: Vec::new(),
        };
        net.validate_phases()?;
        Ok(net)
    }

    fn validate_phases(&self) -> Result<()> {
        for ix in &self.intersections {
            if ix.phases.is_empty() {
                return Err(Error::Network(format!("intersection {} has no phases", ix.id)));
            }
            for (a, pa) in ix.phases.iter().enumerate() {
                if pa.lanes.iter().any(|&l| l >= LANES_PER_INTERSECTION) {
                    return Err(Error::Network(format!("phase `{}` names a lane outside 0..12", pa.name)));
                }
                for pb in &ix.phases[a + 1..] {
                    let mut x = pa.lanes.clone();
                    let mut y = pb.lanes.clone();
                    x.sort_unstable();
                    y.sort_unstable();
                    if x == y {
                        return Err(Error::Network(format!(
                            "phases `{}` and `{}` at intersection {} are identical",
                            pa.name, pb.name, ix.id
                        )));
                    }
                }
            }
            let controlled: Vec<usize> = (0..LANES_PER_INTERSECTION)
                .filter(|&l| Movement::ALL[l % 3].is_controlled())
                .collect();
            if !(2..=12).contains(&controlled.len()) {
                return Err(Error::Network("controlled movement count outside 2..=12".into()));
            }
            for l in controlled {
                if !ix.phases.iter().any(|p| p.lanes.contains(&l)) {
                    return Err(Error::Network(format!(
                        "controlled lane {l} at intersection {} is in no phase",
                        ix.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Replaces the phase set of every intersection.
    pub fn set_phases(&mut self, phases: Vec<Phase>) -> Result<()> {
        let old: Vec<Vec<Phase>> = self.intersections.iter().map(|ix| ix.phases.clone()).collect();
        for ix in &mut self.intersections {
            ix.phases = phases.clone();
        }
        if let Err(e) = self.validate_phases() {
            for (ix, p) in self.intersections.iter_mut().zip(old) {
                ix.phases = p;
            }
            return Err(e);
        }
        Ok(())
    }

    pub fn intersection_count(&self) -> usize {
        self.intersections.len()
    }

    pub fn lane(&self, id: usize) -> &LaneSpec {
        &self.lanes[id]
    }

    /// Lanes at `intersection` that carry vehicles towards `heading`.
    pub fn approach_lanes(&self, intersection: usize, heading: Heading) -> [usize; 3] {
        let base = intersection * LANES_PER_INTERSECTION + heading.index() * 3;
        [base, base + 1, base + 2]
    }

    /// Lanes at the intersection a vehicle reaches after crossing `lane`.
    pub fn downstream_lanes(&self, lane: usize) -> Option<[usize; 3]> {
        let l = &self.lanes[lane];
        l.downstream.map(|d| self.approach_lanes(d, l.out_heading()))
    }

    pub fn max_lane_length(&self) -> f64 {
        self.lanes.iter().map(|l| l.length).fold(0.0, f64::max)
    }

    pub fn max_lane_speed(&self) -> f64 {
        self.lanes.iter().map(|l| l.speed).fold(0.0, f64::max)
    }

    /// Lanes fed from outside the grid.
    pub fn entry_lanes(&self) -> impl Iterator<Item = &LaneSpec> {
        self.lanes.iter().filter(|l| l.upstream.is_none())
    }

    /// Route starting at `(row, col)` travelling `heading`, applying one
    /// movement per intersection crossed.
    pub fn route_from_movements(
        &self,
        row: usize,
        col: usize,
        heading: Heading,
        movements: &[Movement],
    ) -> Result<Route> {
        if row >= self.grid.rows || col >= self.grid.cols {
            return Err(Error::Network(format!("no intersection at ({row}, {col})")));
        }
        if movements.is_empty() {
            return Err(Error::Network("route needs at least one movement".into()));
        }
        let mut at = row * self.grid.cols + col;
        let mut h = heading;
        let mut lanes = Vec::with_capacity(movements.len());
        for (k, &m) in movements.iter().enumerate() {
            let lane = at * LANES_PER_INTERSECTION + local_lane(h, m);
            lanes.push(lane);
            let spec = &self.lanes[lane];
            if k + 1 < movements.len() {
                at = spec.downstream.ok_or_else(|| {
                    Error::Network(format!("route leaves the grid after {} of {} movements", k + 1, movements.len()))
                })?;
                h = spec.out_heading();
            }
        }
        Ok(Route { lanes })
    }

    /// Adds a route after checking lane connectivity; returns its id.
    pub fn add_route(&mut self, route: Route) -> Result<usize> {
        self.check_route(&route)?;
        self.routes.push(route);
        Ok(self.routes.len() - 1)
    }

    pub fn check_route(&self, route: &Route) -> Result<()> {
        if route.lanes.is_empty() {
            return Err(Error::Network("empty route".into()));
        }
        for &l in &route.lanes {
            if l >= self.lanes.len() {
                return Err(Error::Network(format!("route references missing lane {l}")));
            }
        }
        for w in route.lanes.windows(2) {
            let ok = self
                .downstream_lanes(w[0])
                .map_or(false, |next| next.contains(&w[1]));
            if !ok {
                return Err(Error::Network(format!("lane {} does not feed lane {}", w[0], w[1])));
            }
        }
        Ok(())
    }
}

fn opposite(h: Heading) -> Heading {
    Heading::from_index(h.index() + 2)
}

/// Neighbour of `(r, c)` in direction `h`.
fn neighbour(grid: &GridSpec, r: usize, c: usize, h: Heading) -> Option<usize> {
    let (dr, dc): (isize, isize) = match h {
        Heading::North => (-1, 0),
        Heading::East => (0, 1),
        Heading::South => (1, 0),
        Heading::West => (0, -1),
    };
    let nr = r as isize + dr;
    let nc = c as isize + dc;
    if nr < 0 || nc < 0 || nr >= grid.rows as isize || nc >= grid.cols as isize {
        None
    } else {
        Some(nr as usize * grid.cols + nc as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: usize, cols: usize) -> RoadNetwork {
        RoadNetwork::grid(GridSpec {
            rows,
            cols,
            ..GridSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn turns_are_consistent() {
        for h in Heading::ALL {
            assert_eq!(h.left().right(), h);
            assert_eq!(h.right().right(), opposite(h));
        }
        assert_eq!(Heading::North.left(), Heading::West);
        assert_eq!(Heading::North.right(), Heading::East);
    }

    #[test]
    fn two_by_two_wiring() {
        let net = grid(2, 2);
        assert_eq!(net.lanes.len(), 48);
        // eastbound through at (0,0) goes to (0,1)
        let l = local_lane(Heading::East, Movement::Through);
        assert_eq!(net.lane(l).downstream, Some(1));
        assert_eq!(net.lane(l).upstream, None);
        // northbound at (0,0) came from (1,0) and leaves the grid
        let n = local_lane(Heading::North, Movement::Through);
        assert_eq!(net.lane(n).upstream, Some(2));
        assert_eq!(net.lane(n).downstream, None);
        assert_eq!(net.lane(n).length, 800.0);
        assert_eq!(net.entry_lanes().count(), 24);
    }

    #[test]
    fn routes_follow_turns() {
        let mut net = grid(2, 2);
        let r = net
            .route_from_movements(0, 0, Heading::East, &[Movement::Right, Movement::Left])
            .unwrap();
        // right at (0,0) heads south to (1,0), left there heads east
        assert_eq!(r.lanes[1], 2 * 12 + local_lane(Heading::South, Movement::Left));
        net.add_route(r).unwrap();
        assert!(net
            .route_from_movements(0, 0, Heading::West, &[Movement::Through, Movement::Through])
            .is_err());
        assert!(net.add_route(Route { lanes: vec![0, 5] }).is_err());
    }

    #[test]
    fn phase_sets() {
        let four = PhaseSet::Four.phases();
        assert_eq!(four.len(), 4);
        assert!(four.iter().all(|p| p.lanes.len() == 2));
        assert!(four.iter().flat_map(|p| &p.lanes).all(|&l| Movement::ALL[l % 3].is_controlled()));
        assert_eq!(PhaseSet::Eight.phases().len(), 8);
        let net = RoadNetwork::grid(GridSpec {
            phase_set: PhaseSet::Eight,
            ..GridSpec::default()
        })
        .unwrap();
        assert_eq!(net.intersections[0].phases.len(), 8);
    }

    #[test]
    fn custom_phases_are_validated() {
        let mut net = grid(1, 1);
        let dup = vec![
            Phase { name: "a".into(), lanes: vec![4, 10] },
            Phase { name: "b".into(), lanes: vec![10, 4] },
        ];
        assert!(net.set_phases(dup).is_err());
        let missing = vec![Phase { name: "a".into(), lanes: vec![4, 10] }];
        assert!(net.set_phases(missing).is_err());
        assert_eq!(net.intersections[0].phases.len(), 4);
        let two = vec![
            Phase { name: "ew".into(), lanes: vec![3, 4, 9, 10] },
            Phase { name: "ns".into(), lanes: vec![0, 1, 6, 7] },
        ];
        net.set_phases(two).unwrap();
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(RoadNetwork::grid(GridSpec { rows: 0, ..GridSpec::default() }).is_err());
        assert!(RoadNetwork::grid(GridSpec { speed: 0.0, ..GridSpec::default() }).is_err());
        assert!(RoadNetwork::grid(GridSpec { ew_length: -5.0, ..GridSpec::default() }).is_err());
    }
}
