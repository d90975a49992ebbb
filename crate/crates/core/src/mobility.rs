//! Random waypoint mobility, evaluated lazily at event times.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{distance, Position};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum MobilityError {
    #[error("time {t} precedes the start of the current leg at {leg_start}")]
    BeforeLegStart { t: f64, leg_start: f64 },
}

/// Bounds for the random waypoint draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityParams {
    pub width: f64,
    pub height: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub pause_min: f64,
    pub pause_max: f64,
}

impl MobilityParams {
    fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        Position::new(rng.random_range(0.0..=self.width), rng.random_range(0.0..=self.height))
    }

    fn random_speed<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.random_range(self.speed_min..=self.speed_max)
    }

    fn random_pause<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.random_range(self.pause_min..=self.pause_max)
    }
}

/// One leg of a random waypoint trajectory: the node leaves `current` at
/// `leg_start_time`, travels to `waypoint` at `speed`, then rests there until
/// `pause_until`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointState {
    pub current: Position,
    pub waypoint: Position,
    pub speed: f64,
    pub pause_until: f64,
    pub leg_start_time: f64,
}

impl WaypointState {
    /// Fresh state with uniform start point and first leg starting at `t`.
    pub fn random<R: Rng + ?Sized>(params: &MobilityParams, t: f64, rng: &mut R) -> Self {
        let current = params.random_point(rng);
        Self::leg_from(current, params, t, rng)
    }

    fn leg_from<R: Rng + ?Sized>(from: Position, params: &MobilityParams, t: f64, rng: &mut R) -> Self {
        let waypoint = params.random_point(rng);
        let speed = params.random_speed(rng);
        let pause = params.random_pause(rng);
        let mut state = WaypointState {
            current: from,
            waypoint,
            speed,
            pause_until: t,
            leg_start_time: t,
        };
        state.pause_until = state.arrival_time() + pause;
        state
    }

    pub fn arrival_time(&self) -> f64 {
        let len = distance(self.current, self.waypoint);
        if len == 0.0 {
            self.leg_start_time
        } else {
            self.leg_start_time + len / self.speed
        }
    }

    pub fn position_at(&self, t: f64) -> Result<Position, MobilityError> {
        if t < self.leg_start_time {
            return Err(MobilityError::BeforeLegStart {
                t,
                leg_start: self.leg_start_time,
            });
        }
        let len = distance(self.current, self.waypoint);
        let travelled = (t - self.leg_start_time) * self.speed;
        if len == 0.0 || travelled >= len {
            return Ok(self.waypoint);
        }
        let f = travelled / len;
        Ok(Position::new(
            self.current.x + (self.waypoint.x - self.current.x) * f,
            self.current.y + (self.waypoint.y - self.current.y) * f,
        ))
    }

    /// Next leg, departing from this leg's waypoint at time `t`.
    pub fn advance<R: Rng + ?Sized>(&self, t: f64, params: &MobilityParams, rng: &mut R) -> Self {
        Self::leg_from(self.waypoint, params, t, rng)
    }
}

/// Initial states for `n` nodes drawn from one generator.
pub fn init_positions<R: Rng + ?Sized>(params: &MobilityParams, n: usize, rng: &mut R) -> Vec<WaypointState> {
    (0..n).map(|_| WaypointState::random(params, 0.0, rng)).collect()
}

/// A waypoint trajectory with its own random stream, advanced on demand.
#[derive(Debug, Clone)]
pub struct Trajectory {
    state: WaypointState,
    params: MobilityParams,
    rng: ChaCha8Rng,
}

impl Trajectory {
    pub fn new(params: MobilityParams, mut rng: ChaCha8Rng) -> Self {
        let state = WaypointState::random(&params, 0.0, &mut rng);
        Self { state, params, rng }
    }

    pub fn state(&self) -> &WaypointState {
        &self.state
    }

    /// Position at `t`. Times must not precede the current leg; callers query
    /// in non-decreasing time order.
    pub fn position(&mut self, t: f64) -> Position {
        while t >= self.state.pause_until {
            let next_start = self.state.pause_until;
            self.state = self.state.advance(next_start, &self.params, &mut self.rng);
        }
        self.state
            .position_at(t)
            .expect("trajectory queried before current leg")
    }
}

/// Piecewise-linear motion through fixed `(time, position)` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    points: Vec<(f64, Position)>,
}

impl Script {
    /// Points must be sorted by time; the node holds the first point before
    /// it and the last point after it.
    pub fn new(points: Vec<(f64, Position)>) -> Self {
        assert!(!points.is_empty(), "script needs at least one point");
        assert!(
            points.windows(2).all(|w| w[0].0 <= w[1].0),
            "script points must be time-ordered"
        );
        Self { points }
    }

    pub fn position(&self, t: f64) -> Position {
        let pts = &self.points;
        if t <= pts[0].0 {
            return pts[0].1;
        }
        for w in pts.windows(2) {
            let (t0, p0) = w[0];
            let (t1, p1) = w[1];
            if t <= t1 {
                if t1 == t0 {
                    return p1;
                }
                let f = (t - t0) / (t1 - t0);
                return Position::new(p0.x + (p1.x - p0.x) * f, p0.y + (p1.y - p0.y) * f);
            }
        }
        pts[pts.len() - 1].1
    }
}

/// How one node moves over a run.
#[derive(Debug, Clone)]
pub enum Mobility {
    Static(Position),
    Waypoint(Box<Trajectory>),
    Scripted(Script),
}

impl Mobility {
    pub fn position(&mut self, t: f64) -> Position {
        match self {
            Mobility::Static(p) => *p,
            Mobility::Waypoint(traj) => traj.position(t),
            Mobility::Scripted(s) => s.position(t),
        }
    }
}
