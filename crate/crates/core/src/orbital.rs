//! Circular Keplerian propagation of a Walker Delta constellation.
//!
//! A Walker Delta pattern `T/P/F` places `T` satellites in `P` equally spaced
//! orbital planes (`N = T/P` per plane, all at the same altitude and
//! inclination). Plane `i` has its ascending node at `2π·i/P`; satellite `j`
//! of plane `i` sits at argument of latitude
//!
//! ```text
//! u_ij(t) = 2π·j/N + 2π·F·i/T + n·t
//! ```
//!
//! where `n` is the mean motion and the `F` term is the inter-plane phasing
//! offset, applied cumulatively per plane. Orbits are ideal two-body circles:
//! no J2, no drag, no Earth rotation — only inter-satellite geometry matters
//! here, and that is invariant under a common rotation of the frame.
//!
//! All angles are radians; degrees appear only at the config-file boundary.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};

/// Standard gravitational parameter of Earth, km³/s².
pub const MU_EARTH_KM3_S2: f64 = 398_600.4418;
/// Mean Earth radius, km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Speed of light in vacuum, km/s.
pub const LIGHT_SPEED_KM_S: f64 = 299_792.458;

/// Full description of a constellation run: Walker geometry, physical
/// constants, link-gating thresholds, and the simulation time grid.
///
/// Constants are fields rather than hard-coded so tests control them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationConfig {
    /// Number of orbital planes (`P`).
    pub planes: u32,
    /// Satellites per plane (`N`); total is `P × N`.
    pub per_plane: u32,
    /// Walker phasing parameter (`F`), in `[0, P)`.
    pub phasing: u32,
    /// Orbit altitude above `earth_radius_km`, km.
    pub altitude_km: f64,
    /// Orbital inclination, radians.
    pub inclination_rad: f64,
    pub earth_radius_km: f64,
    /// Gravitational parameter, km³/s².
    pub mu_earth_km3_s2: f64,
    pub light_speed_km_s: f64,
    /// Line-of-sight clearance added to the Earth radius (grazing allowance).
    pub occlusion_margin_km: f64,
    /// Maximum relative speed for an inter-plane link; `None` = unbounded.
    pub v_threshold_km_s: Option<f64>,
    /// Topology update interval, seconds.
    pub dt_s: f64,
    /// Simulation horizon, seconds; `None` = one orbital period.
    pub horizon_s: Option<f64>,
    /// Seed for scenario and experiment randomness tied to this config.
    pub rng_seed: u64,
}

impl ConstellationConfig {
    /// Small configuration for tests and CI: 6 planes × 10 satellites,
    /// 10-second grid.
    pub fn desk() -> Self {
        ConstellationConfig {
            planes: 6,
            per_plane: 10,
            phasing: 1,
            altitude_km: 550.0,
            inclination_rad: 53f64.to_radians(),
            earth_radius_km: EARTH_RADIUS_KM,
            mu_earth_km3_s2: MU_EARTH_KM3_S2,
            light_speed_km_s: LIGHT_SPEED_KM_S,
            occlusion_margin_km: 80.0,
            v_threshold_km_s: None,
            dt_s: 10.0,
            horizon_s: None,
            rng_seed: 42,
        }
    }

    /// Full-scale configuration: 12 planes × 30 satellites at 550 km / 53°,
    /// 1-second grid over one orbital period.
    pub fn paper() -> Self {
        ConstellationConfig {
            planes: 12,
            per_plane: 30,
            dt_s: 1.0,
            ..Self::desk()
        }
    }

    pub fn total_sats(&self) -> usize {
        self.planes as usize * self.per_plane as usize
    }

    /// Orbit radius `a = earth_radius + altitude`, km.
    pub fn semi_major_axis_km(&self) -> f64 {
        self.earth_radius_km + self.altitude_km
    }

    /// Effective horizon: explicit value or one orbital period.
    pub fn horizon(&self) -> f64 {
        self.horizon_s.unwrap_or_else(|| orbital_period(self))
    }

    /// Number of grid slots: `floor(horizon / dt) + 1`, at `t = 0, dt, …`.
    pub fn slot_count(&self) -> usize {
        (self.horizon() / self.dt_s).floor() as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.planes == 0 {
            return Err(Error::config("constellation.planes", "must be ≥ 1"));
        }
        if self.per_plane == 0 {
            return Err(Error::config("constellation.per_plane", "must be ≥ 1"));
        }
        if self.phasing >= self.planes {
            return Err(Error::config(
                "constellation.phasing",
                format!("must be in [0, planes); got {} with P={}", self.phasing, self.planes),
            ));
        }
        if !(self.altitude_km > 0.0) {
            return Err(Error::config("constellation.altitude_km", "must be > 0"));
        }
        if !(self.earth_radius_km > 0.0) {
            return Err(Error::config("constellation.earth_radius_km", "must be > 0"));
        }
        if !(self.mu_earth_km3_s2 > 0.0) {
            return Err(Error::config("constellation.mu_earth_km3_s2", "must be > 0"));
        }
        if !(self.light_speed_km_s > 0.0) {
            return Err(Error::config("constellation.light_speed_km_s", "must be > 0"));
        }
        if !self.inclination_rad.is_finite() {
            return Err(Error::config("constellation.inclination_deg", "must be finite"));
        }
        if !(self.occlusion_margin_km >= 0.0) {
            return Err(Error::config("constellation.occlusion_margin_km", "must be ≥ 0"));
        }
        if let Some(v) = self.v_threshold_km_s {
            if !(v >= 0.0) {
                return Err(Error::config("constellation.v_threshold_km_s", "must be ≥ 0"));
            }
        }
        if !(self.dt_s > 0.0) {
            return Err(Error::config("constellation.dt_s", "must be > 0"));
        }
        if let Some(h) = self.horizon_s {
            if !(h >= self.dt_s) {
                return Err(Error::config("constellation.horizon_s", "must be ≥ dt_s"));
            }
        }
        Ok(())
    }

    /// Plane/slot pair for a flat index in `[0, T)`.
    pub fn sat(&self, flat: usize) -> SatelliteId {
        debug_assert!(flat < self.total_sats());
        SatelliteId {
            plane: (flat / self.per_plane as usize) as u32,
            slot: (flat % self.per_plane as usize) as u32,
        }
    }

    pub fn flat(&self, sat: SatelliteId) -> usize {
        sat.plane as usize * self.per_plane as usize + sat.slot as usize
    }
}

/// Satellite address: `plane` in `[0, P)`, `slot` in `[0, N)`. The flat index
/// `plane·N + slot` is used wherever satellites index matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SatelliteId {
    pub plane: u32,
    pub slot: u32,
}

impl SatelliteId {
    pub fn new(plane: u32, slot: u32) -> Self {
        SatelliteId { plane, slot }
    }
}

/// Earth-centered inertial position (km) and velocity (km/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub position: Vec3,
    pub velocity: Vec3,
}

/// Orbital period `2π·sqrt(a³/μ)` for the configured circular orbit, seconds.
pub fn orbital_period(cfg: &ConstellationConfig) -> f64 {
    let a = cfg.semi_major_axis_km();
    TAU * (a.powi(3) / cfg.mu_earth_km3_s2).sqrt()
}

/// Position and velocity of one satellite at time `t` (seconds from epoch).
pub fn propagate(cfg: &ConstellationConfig, sat: SatelliteId, t: f64) -> StateVector {
    let a = cfg.semi_major_axis_km();
    let n = TAU / orbital_period(cfg);
    let raan = TAU * sat.plane as f64 / cfg.planes as f64;
    let u = TAU * sat.slot as f64 / cfg.per_plane as f64
        + TAU * cfg.phasing as f64 * sat.plane as f64 / cfg.total_sats() as f64
        + n * t;

    let (sin_u, cos_u) = u.sin_cos();
    let (sin_o, cos_o) = raan.sin_cos();
    let (sin_i, cos_i) = cfg.inclination_rad.sin_cos();

    let position = [
        a * (cos_o * cos_u - sin_o * sin_u * cos_i),
        a * (sin_o * cos_u + cos_o * sin_u * cos_i),
        a * (sin_u * sin_i),
    ];
    // d(position)/dt = n · d(position)/du for a circular orbit.
    let velocity = [
        a * n * (-cos_o * sin_u - sin_o * cos_u * cos_i),
        a * n * (-sin_o * sin_u + cos_o * cos_u * cos_i),
        a * n * (cos_u * sin_i),
    ];
    StateVector { position, velocity }
}

/// Euclidean norm of the velocity difference, km/s.
pub fn relative_speed(a: &StateVector, b: &StateVector) -> f64 {
    geom::norm(geom::sub(a.velocity, b.velocity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Independently derived with 30-digit arithmetic from
    // T = 2π·sqrt(a³/μ), a = 6371 + 550, μ = 398600.4418.
    const PERIOD_550_KM: f64 = 5730.127089334607;
    // sqrt(μ/a) for the same orbit.
    const CIRC_SPEED_550_KM: f64 = 7.588998434594857;

    fn cfg() -> ConstellationConfig {
        ConstellationConfig::desk()
    }

    #[test]
    fn period_matches_kepler_oracle() {
        assert_relative_eq!(orbital_period(&cfg()), PERIOD_550_KM, max_relative = 1e-12);
    }

    #[test]
    fn period_scaling_law() {
        // Doubling the orbit radius multiplies the period by 2^(3/2).
        let base = cfg();
        let mut doubled = cfg();
        doubled.altitude_km = 2.0 * base.semi_major_axis_km() - base.earth_radius_km;
        assert_relative_eq!(
            orbital_period(&doubled) / orbital_period(&base),
            2f64.powf(1.5),
            max_relative = 1e-12
        );
    }

    #[test]
    fn period_in_leo_band() {
        // ~90 min for a 550 km orbit.
        let minutes = orbital_period(&ConstellationConfig::paper()) / 60.0;
        assert!((85.0..=100.0).contains(&minutes), "period {minutes} min");
    }

    #[test]
    fn propagate_radius_exact() {
        let s = propagate(&cfg(), SatelliteId::new(0, 0), 0.0);
        assert_relative_eq!(geom::norm(s.position), 6921.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_phasing_aligns_adjacent_planes() {
        let mut c = cfg();
        c.phasing = 0;
        // With F = 0 the argument of latitude is independent of the plane, so
        // corresponding satellites differ only by the RAAN rotation and share
        // the same z (z = a·sin(u)·sin(ι)).
        let a = propagate(&c, SatelliteId::new(0, 0), 0.0);
        let b = propagate(&c, SatelliteId::new(1, 0), 0.0);
        assert_relative_eq!(a.position[2], b.position[2], epsilon = 1e-9);
        assert_relative_eq!(geom::norm(a.position), geom::norm(b.position), epsilon = 1e-9);
    }

    #[test]
    fn circular_speed_matches_vis_viva() {
        let c = cfg();
        for t in [0.0, 123.4, 2000.0, 5000.0] {
            let s = propagate(&c, SatelliteId::new(2, 3), t);
            assert_relative_eq!(geom::norm(s.velocity), CIRC_SPEED_550_KM, max_relative = 1e-12);
        }
    }

    #[test]
    fn relative_speed_of_identical_states_is_zero() {
        let s = propagate(&cfg(), SatelliteId::new(1, 1), 77.0);
        assert_eq!(relative_speed(&s, &s), 0.0);
    }

    #[test]
    fn same_plane_neighbors_corotate() {
        // A plane is a rigid rotating ring: consecutive-slot relative speed is
        // the same for every slot.
        let c = cfg();
        let t = 321.0;
        let reference = relative_speed(
            &propagate(&c, SatelliteId::new(0, 0), t),
            &propagate(&c, SatelliteId::new(0, 1), t),
        );
        for j in 1..c.per_plane {
            let v = relative_speed(
                &propagate(&c, SatelliteId::new(0, j), t),
                &propagate(&c, SatelliteId::new(0, (j + 1) % c.per_plane), t),
            );
            assert_relative_eq!(v, reference, max_relative = 1e-9);
        }
    }

    #[test]
    fn velocity_matches_finite_difference() {
        // Cross-plane pair: compare the analytic relative velocity against a
        // central difference of positions at t ± 1 ms.
        let c = cfg();
        let (sa, sb) = (SatelliteId::new(0, 4), SatelliteId::new(3, 7));
        let t = 910.0;
        let h = 1e-3;
        let num = |sat: SatelliteId| {
            let p = propagate(&c, sat, t + h).position;
            let m = propagate(&c, sat, t - h).position;
            geom::scale(geom::sub(p, m), 1.0 / (2.0 * h))
        };
        let analytic = relative_speed(&propagate(&c, sa, t), &propagate(&c, sb, t));
        let numeric = geom::norm(geom::sub(num(sa), num(sb)));
        assert_relative_eq!(analytic, numeric, max_relative = 1e-6);
    }

    #[test]
    fn validate_rejects_bad_fields() {
        let mut c = cfg();
        c.phasing = c.planes;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.dt_s = 0.0;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.horizon_s = Some(1.0);
        assert!(c.validate().is_err());
        assert!(cfg().validate().is_ok());
    }

    #[test]
    fn flat_index_round_trip() {
        let c = cfg();
        for flat in 0..c.total_sats() {
            assert_eq!(c.flat(c.sat(flat)), flat);
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn radius_is_constant(flat in 0usize..60, t in 0f64..20_000.0) {
                let c = cfg();
                let s = propagate(&c, c.sat(flat), t);
                prop_assert!((geom::norm(s.position) - c.semi_major_axis_km()).abs() < 1e-6);
            }

            #[test]
            fn period_closure(flat in 0usize..60, t in 0f64..6_000.0) {
                let c = cfg();
                let period = orbital_period(&c);
                let a = propagate(&c, c.sat(flat), t);
                let b = propagate(&c, c.sat(flat), t + period);
                prop_assert!(geom::dist(a.position, b.position) < 1e-6);
            }

            #[test]
            fn intra_plane_chord(j in 0u32..10, t in 0f64..6_000.0) {
                let c = cfg();
                let expected = 2.0 * c.semi_major_axis_km()
                    * (std::f64::consts::PI / c.per_plane as f64).sin();
                let a = propagate(&c, SatelliteId::new(2, j), t);
                let b = propagate(&c, SatelliteId::new(2, (j + 1) % c.per_plane), t);
                prop_assert!((geom::dist(a.position, b.position) - expected).abs() < 1e-6);
            }

            #[test]
            fn slot_shift_equals_time_shift(flat in 0usize..60, t in 0f64..6_000.0) {
                // Advancing one slot index equals advancing time by period/N.
                let c = cfg();
                let id = c.sat(flat);
                let shifted = SatelliteId::new(id.plane, (id.slot + 1) % c.per_plane);
                let a = propagate(&c, shifted, t);
                let b = propagate(&c, id, t + orbital_period(&c) / c.per_plane as f64);
                prop_assert!(geom::dist(a.position, b.position) < 1e-6);
            }
        }
    }
}
