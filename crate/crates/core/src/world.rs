//! Disk-shaped service area, static ground users and straight-line UAV
//! flight paths on a slotted time axis.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskWorld {
    pub radius_m: f64,
    pub uav_altitude_m: f64,
    pub slot_duration_s: f64,
    pub num_slots: usize,
}

impl DiskWorld {
    pub fn new(
        radius_m: f64,
        uav_altitude_m: f64,
        slot_duration_s: f64,
        num_slots: usize,
    ) -> Result<Self> {
        let world = DiskWorld {
            radius_m,
            uav_altitude_m,
            slot_duration_s,
            num_slots,
        };
        world.validate()?;
        Ok(world)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_m > 0.0 && self.radius_m.is_finite()) {
            return Err(Error::invalid(format!(
                "radius must be positive, got {}",
                self.radius_m
            )));
        }
        if !(self.uav_altitude_m > 0.0 && self.uav_altitude_m.is_finite()) {
            return Err(Error::invalid(format!(
                "altitude must be positive, got {}",
                self.uav_altitude_m
            )));
        }
        if !(self.slot_duration_s > 0.0 && self.slot_duration_s.is_finite()) {
            return Err(Error::invalid(format!(
                "slot duration must be positive, got {}",
                self.slot_duration_s
            )));
        }
        Ok(())
    }
}

/// Horizontal coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x_m: f64,
    pub y_m: f64,
}

impl Position {
    pub const fn new(x_m: f64, y_m: f64) -> Self {
        Position { x_m, y_m }
    }

    pub fn norm(&self) -> f64 {
        self.x_m.hypot(self.y_m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserField {
    pub positions: Vec<Position>,
}

impl UserField {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Straight flight path that starts on the disk edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: Position,
    pub start_angle_rad: f64,
    pub heading: (f64, f64),
    pub speed_mps: f64,
}

impl Trajectory {
    /// Path from the edge point at `start_angle_rad` straight through the disk
    /// center.
    pub fn through_center(radius_m: f64, start_angle_rad: f64, speed_mps: f64) -> Result<Self> {
        if !(radius_m > 0.0) {
            return Err(Error::invalid(format!(
                "radius must be positive, got {radius_m}"
            )));
        }
        if !(speed_mps >= 0.0 && speed_mps.is_finite()) {
            return Err(Error::invalid(format!(
                "speed must be non-negative, got {speed_mps}"
            )));
        }
        let (sin, cos) = start_angle_rad.sin_cos();
        Ok(Trajectory {
            start: Position::new(radius_m * cos, radius_m * sin),
            start_angle_rad,
            heading: (-cos, -sin),
            speed_mps,
        })
    }
}

pub fn sample_users<R: Rng + ?Sized>(
    count: usize,
    radius_m: f64,
    rng: &mut R,
) -> Result<UserField> {
    if count == 0 {
        return Err(Error::invalid("user count must be at least 1"));
    }
    if !(radius_m > 0.0 && radius_m.is_finite()) {
        return Err(Error::invalid(format!(
            "radius must be positive, got {radius_m}"
        )));
    }
    // r = R·sqrt(u) makes the density uniform in area.
    let positions = (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let angle = rng.random::<f64>() * 2.0 * PI;
            let r = radius_m * u.sqrt();
            let (sin, cos) = angle.sin_cos();
            Position::new(r * cos, r * sin)
        })
        .collect();
    Ok(UserField { positions })
}

/// Position after `slot` slots. The UAV keeps flying past the far edge.
pub fn uav_position(traj: &Trajectory, slot: usize, slot_duration_s: f64) -> Position {
    let traveled = traj.speed_mps * slot as f64 * slot_duration_s;
    Position::new(
        traj.start.x_m + traj.heading.0 * traveled,
        traj.start.y_m + traj.heading.1 * traveled,
    )
}

pub fn distance_3d(p: Position, user: Position, altitude_m: f64) -> f64 {
    debug_assert!(altitude_m > 0.0);
    let dx = user.x_m - p.x_m;
    let dy = user.y_m - p.y_m;
    (dx * dx + dy * dy + altitude_m * altitude_m).sqrt()
}

/// Boundary inclusive.
/// Closed-disk test. Points placed on the rim via sin/cos can land a few ulps
/// outside, so the boundary gets a relative slack of 1e-12.
pub fn in_disk(p: Position, radius_m: f64) -> bool {
    let r2 = radius_m * radius_m;
    p.x_m * p.x_m + p.y_m * p.y_m <= r2 * (1.0 + 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use proptest::prelude::*;

    fn west_to_east(speed: f64) -> Trajectory {
        Trajectory::through_center(500.0, PI, speed).unwrap()
    }

    #[test]
    fn sampled_users_stay_inside() {
        let mut rng = substream(11, Stream::Users);
        let users = sample_users(100, 500.0, &mut rng).unwrap();
        assert_eq!(users.len(), 100);
        assert!(users.positions.iter().all(|p| in_disk(*p, 500.0)));
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_users(1, 500.0, &mut substream(3, Stream::Users)).unwrap();
        let b = sample_users(1, 500.0, &mut substream(3, Stream::Users)).unwrap();
        assert_eq!(a, b);
        let a = sample_users(50, 500.0, &mut substream(3, Stream::Users)).unwrap();
        let b = sample_users(50, 500.0, &mut substream(3, Stream::Users)).unwrap();
        assert_eq!(a.positions, b.positions);
    }

    #[test]
    fn sampling_is_uniform_in_area() {
        let users = sample_users(100_000, 500.0, &mut substream(5, Stream::Users)).unwrap();
        let inner = users.positions.iter().filter(|p| p.norm() <= 250.0).count();
        let frac = inner as f64 / 100_000.0;
        assert!((frac - 0.25).abs() < 0.01, "inner fraction {frac}");
    }

    #[test]
    fn sampling_rejects_bad_arguments() {
        let mut rng = substream(0, Stream::Users);
        assert!(matches!(
            sample_users(0, 500.0, &mut rng),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            sample_users(5, 0.0, &mut rng),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            sample_users(5, -1.0, &mut rng),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn position_along_line() {
        let traj = west_to_east(40.0);
        let p0 = uav_position(&traj, 0, 0.1);
        assert!((p0.x_m + 500.0).abs() < 1e-9 && p0.y_m.abs() < 1e-9);
        let mid = uav_position(&traj, 125, 0.1);
        assert!(mid.x_m.abs() < 1e-9 && mid.y_m.abs() < 1e-9, "{mid:?}");
        let far = uav_position(&traj, 250, 0.1);
        assert!((far.x_m - 500.0).abs() < 1e-9 && far.y_m.abs() < 1e-9);
        assert!(in_disk(far, 500.0 + 1e-9));
        assert!(!in_disk(uav_position(&traj, 251, 0.1), 500.0));
    }

    #[test]
    fn distance_examples() {
        let o = Position::new(0.0, 0.0);
        assert_eq!(distance_3d(o, o, 100.0), 100.0);
        let d = distance_3d(o, Position::new(30.0, 40.0), 100.0);
        assert!((d - 111.803_398_874_989_5).abs() < 1e-9);
    }

    #[test]
    fn disk_membership() {
        assert!(in_disk(Position::new(0.0, 0.0), 500.0));
        assert!(in_disk(Position::new(500.0, 0.0), 500.0));
        assert!(!in_disk(Position::new(500.1, 0.0), 500.0));
    }

    #[test]
    fn world_validation() {
        assert!(DiskWorld::new(500.0, 100.0, 0.1, 1).is_ok());
        assert!(DiskWorld::new(0.0, 100.0, 0.1, 1).is_err());
        assert!(DiskWorld::new(500.0, 0.0, 0.1, 1).is_err());
        assert!(DiskWorld::new(500.0, 100.0, -0.1, 1).is_err());
    }

    proptest! {
        #[test]
        fn distance_never_below_altitude(
            px in -2000.0f64..2000.0, py in -2000.0f64..2000.0,
            ux in -2000.0f64..2000.0, uy in -2000.0f64..2000.0,
            h in 0.1f64..1000.0,
        ) {
            let d = distance_3d(Position::new(px, py), Position::new(ux, uy), h);
            prop_assert!(d >= h);
        }

        #[test]
        fn heading_is_unit(angle in 0.0f64..(2.0 * PI), speed in 0.0f64..100.0) {
            let t = Trajectory::through_center(500.0, angle, speed).unwrap();
            prop_assert!((t.heading.0.hypot(t.heading.1) - 1.0).abs() < 1e-9);
            prop_assert!((t.start.norm() - 500.0).abs() < 1e-9);
        }

        // Exit slot for a diameter crossing: the first integer t with
        // v·T_s·t > 2r, i.e. floor(2r / (v·T_s)) + 1.
        #[test]
        fn first_exit_slot(speed in 5.0f64..120.0, angle in 0.0f64..(2.0 * PI)) {
            let ts = 0.1;
            let ratio = 2.0 * 500.0 / (speed * ts);
            prop_assume!((ratio - ratio.round()).abs() > 1e-6);
            let traj = Trajectory::through_center(500.0, angle, speed).unwrap();
            let first_out = (0..10_000usize)
                .find(|&t| !in_disk(uav_position(&traj, t, ts), 500.0))
                .unwrap();
            prop_assert_eq!(first_out, ratio.floor() as usize + 1);
        }
    }
}
