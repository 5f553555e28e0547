//! Randomized self-check of the connection, snapping and compensation maths.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    compensate_to_wall, connect_transform, connector_geometry, end_frame, generate_pipe, joint_residual,
    normalize_angle, snap_orientation, Assembly, EndFrame, PipeEnd, PipeGeometry, PipeSpec, Pose2, RawPose, Vec3,
    WallPlane,
};
use crate::types::{BendAngle, Diameter, PipeColor, PipeKind};

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub trials: usize,
    pub max_position_residual: f64,
    pub max_direction_residual: f64,
    pub chain_links: usize,
    pub chain_max_position_residual: f64,
    pub chain_max_direction_residual: f64,
    pub snap_idempotence_failures: usize,
    pub max_compensation_drift: f64,
}

impl CheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_position_residual <= tol
            && self.max_direction_residual <= tol
            && self.chain_max_position_residual <= tol
            && self.chain_max_direction_residual <= tol
            && self.snap_idempotence_failures == 0
            && self.max_compensation_drift <= tol
    }
}

pub fn random_spec(rng: &mut impl Rng) -> PipeSpec {
    let angle = BendAngle::ALL[rng.gen_range(0..4)];
    let arm_a = rng.gen_range(0.1..20.0);
    let arm_b = if angle == BendAngle::Straight {
        0.0
    } else {
        rng.gen_range(0.1..20.0)
    };
    PipeSpec {
        kind: PipeKind::Water,
        color: PipeColor::Blue,
        diameter: Diameter::ALL[rng.gen_range(0..4)],
        angle,
        arm_a,
        arm_b,
    }
}

pub fn random_pose(rng: &mut impl Rng) -> Pose2 {
    Pose2::new(
        rng.gen_range(-100.0..100.0),
        rng.gen_range(-100.0..100.0),
        rng.gen_range(-PI..PI),
    )
}

fn random_end(rng: &mut impl Rng) -> PipeEnd {
    if rng.gen_bool(0.5) {
        PipeEnd::A
    } else {
        PipeEnd::B
    }
}

fn unit3(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let l = v.length();
        if l > 0.1 && l <= 1.0 {
            return v * (1.0 / l);
        }
    }
}

/// Run `trials` random connections plus a long pipe/connector chain.
pub fn run(trials: usize, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_p: f64 = 0.0;
    let mut max_d: f64 = 0.0;
    for _ in 0..trials {
        let fixed_geom = generate_pipe(&random_spec(&mut rng)).expect("random spec is valid");
        let fixed_pose = random_pose(&mut rng);
        let fixed: EndFrame = end_frame(&fixed_geom, &fixed_pose, random_end(&mut rng));
        let moving = generate_pipe(&random_spec(&mut rng)).expect("random spec is valid");
        let end = random_end(&mut rng);
        let pose = connect_transform(&fixed, &moving, end);
        let (p, d) = joint_residual(&fixed, &end_frame(&moving, &pose, end));
        max_p = max_p.max(p);
        max_d = max_d.max(d);
    }

    // Alternating straight pipes and elbows, turning left and right at random.
    let links = 40;
    let diameter = Diameter::ALL[1];
    let mut chain = Assembly::new(0, PipeGeometry::straight(3.0).unwrap(), random_pose(&mut rng));
    let mut tip = 0;
    for i in 1..=links {
        let geom = if i % 2 == 1 {
            connector_geometry(diameter)
        } else {
            PipeGeometry::straight(rng.gen_range(0.5..12.0)).unwrap()
        };
        let moving_end = if i % 2 == 1 { random_end(&mut rng) } else { PipeEnd::A };
        tip = chain
            .attach(tip, chain_free_end(&chain, tip), i as u64, geom, moving_end)
            .expect("tip end is free");
    }
    let (cp, cd) = chain.max_residual();

    let mut snap_failures = 0;
    let mut comp_drift: f64 = 0.0;
    let wall = WallPlane::new(
        Vec3::new(1.0, -2.0, 0.5),
        Vec3::new(1.0, 0.2, 0.0),
        Vec3::new(0.1, 0.0, 1.0),
    )
    .expect("wall is well formed");
    for _ in 0..trials {
        let tol = rng.gen_range(0.0..PI / 8.0);
        let theta = rng.gen_range(-4.0 * PI..4.0 * PI);
        let once = snap_orientation(theta, tol);
        let twice = snap_orientation(once.theta, tol);
        if twice.theta != once.theta || (once.snapped && !twice.snapped) {
            snap_failures += 1;
        }
        let raw = RawPose {
            position: Vec3::new(
                rng.gen_range(-50.0..50.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-50.0..50.0),
            ),
            axis: unit3(&mut rng),
        };
        let a = compensate_to_wall(&raw, &wall);
        let b = compensate_to_wall(&wall.embed(&a), &wall);
        let drift = (a.u - b.u)
            .abs()
            .max((a.v - b.v).abs())
            .max(normalize_angle(a.theta - b.theta).abs());
        comp_drift = comp_drift.max(drift);
    }

    CheckReport {
        trials,
        max_position_residual: max_p,
        max_direction_residual: max_d,
        chain_links: links,
        chain_max_position_residual: cp,
        chain_max_direction_residual: cd,
        snap_idempotence_failures: snap_failures,
        max_compensation_drift: comp_drift,
    }
}

fn chain_free_end(chain: &Assembly, member: usize) -> PipeEnd {
    let taken = |end| {
        chain
            .joints
            .iter()
            .any(|j| j.a == (member, end) || j.b == (member, end))
    };
    if taken(PipeEnd::B) {
        PipeEnd::A
    } else {
        PipeEnd::B
    }
}
