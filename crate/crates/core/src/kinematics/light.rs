//! Light-signal speeds from the null condition `g_{mu nu}(u) dx^mu dx^nu = 0`.

use nalgebra::Vector3;
use serde::Serialize;

use super::FourVelocity;
use crate::error::{CtError, Result};

/// One-way speed in the direction `n` and the harmonic round-trip average
/// over `n` and `-n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LightSpeed {
    pub one_way: f64,
    pub round_trip_average: f64,
}

/// Positive root of the null quadratic for the direction `n`:
/// `c = 1 / (1 - u^0 u.n)`.
pub fn one_way_speed(u: &FourVelocity, n: &Vector3<f64>) -> f64 {
    let s = u.space();
    1.0 / (1.0 - s.dot(n) / (1.0 + s.norm_squared()).sqrt())
}

pub fn light_speed(u: &FourVelocity, n: &Vector3<f64>) -> Result<LightSpeed> {
    check_unit(n)?;
    let forward = one_way_speed(u, n);
    let backward = one_way_speed(u, &-n);
    Ok(LightSpeed {
        one_way: forward,
        round_trip_average: 2.0 / (1.0 / forward + 1.0 / backward),
    })
}

fn check_unit(n: &Vector3<f64>) -> Result<()> {
    if (n.norm() - 1.0).abs() > 1e-12 {
        return Err(CtError::Domain(format!(
            "direction must be a unit vector, |n| = {}",
            n.norm()
        )));
    }
    Ok(())
}

/// One segment of a polygonal light path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathLeg {
    pub length: f64,
    pub direction: [f64; 3],
    pub speed: f64,
}

/// Legs of the closed polygon through `vertices` (the last vertex connects
/// back to the first) and the average speed `total length / total time`.
pub fn closed_path_average(
    u: &FourVelocity,
    vertices: &[Vector3<f64>],
) -> Result<(Vec<PathLeg>, f64)> {
    if vertices.len() < 2 {
        return Err(CtError::Domain(
            "a closed path needs at least two vertices".into(),
        ));
    }
    let mut legs = Vec::with_capacity(vertices.len());
    let mut length = 0.0;
    let mut time = 0.0;
    for (i, a) in vertices.iter().enumerate() {
        let b = vertices[(i + 1) % vertices.len()];
        let d = b - a;
        let l = d.norm();
        if l == 0.0 {
            continue;
        }
        let n = d / l;
        let speed = one_way_speed(u, &n);
        length += l;
        time += l / speed;
        legs.push(PathLeg {
            length: l,
            direction: [n[0], n[1], n[2]],
            speed,
        });
    }
    if length == 0.0 {
        return Err(CtError::Domain("closed path has zero length".into()));
    }
    Ok((legs, length / time))
}
