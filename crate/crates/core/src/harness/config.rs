//! Run configuration: the TOML file format, built-in profiles, and the
//! canonical config hash embedded in every artifact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbital::{ConstellationConfig, EARTH_RADIUS_KM, LIGHT_SPEED_KM_S, MU_EARTH_KM3_S2};

/// Everything a run needs: the constellation plus the scenario shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub constellation: ConstellationConfig,
    /// Number of VNF types in the catalog.
    pub catalog_size: usize,
}

impl RunConfig {
    /// CI-sized profile: 60 satellites, 10 s grid, 60-type catalog.
    pub fn desk() -> Self {
        RunConfig {
            constellation: ConstellationConfig::desk(),
            catalog_size: 60,
        }
    }

    /// Full-scale profile: 360 satellites, 1 s grid, 60-type catalog.
    pub fn paper() -> Self {
        RunConfig {
            constellation: ConstellationConfig::paper(),
            catalog_size: 60,
        }
    }

    pub fn by_profile(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "paper" => Ok(Self::paper()),
            other => Err(Error::config("profile", format!("unknown profile `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.constellation.validate()?;
        if self.catalog_size == 0 {
            return Err(Error::config("scenario.catalog_size", "must be ≥ 1"));
        }
        Ok(())
    }

    /// Parses the TOML config file format (see `ConfigFile`).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        let run = file.resolve();
        run.validate()?;
        Ok(run)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// SHA-256 over the canonical JSON form (sorted keys) of the resolved
    /// config. Identical configs hash identically regardless of how they
    /// were written in the file.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("canonical json");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }
}

/// On-disk TOML schema. Most physical constants are optional and default to
/// standard values; inclination is written in degrees and converted at this
/// boundary.
///
/// ```toml
/// [constellation]
/// planes = 6
/// per_plane = 10
/// phasing = 1
/// altitude_km = 550.0
/// inclination_deg = 53.0
/// dt_s = 10.0
/// seed = 42
/// # occlusion_margin_km = 80.0
/// # v_threshold_km_s = 1.5      # absent: unbounded
/// # horizon_s = 5730.0          # absent: one orbital period
///
/// [scenario]
/// catalog_size = 60
/// ```
#[derive(Debug, Clone, Deserialize)]
pub struct ConfigFile {
    pub constellation: ConstellationSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ConstellationSection {
    pub planes: u32,
    pub per_plane: u32,
    pub phasing: u32,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    #[serde(default = "default_earth_radius")]
    pub earth_radius_km: f64,
    #[serde(default = "default_mu")]
    pub mu_earth_km3_s2: f64,
    #[serde(default = "default_light_speed")]
    pub light_speed_km_s: f64,
    #[serde(default = "default_margin")]
    pub occlusion_margin_km: f64,
    pub v_threshold_km_s: Option<f64>,
    pub dt_s: f64,
    pub horizon_s: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScenarioSection {
    #[serde(default = "default_catalog")]
    pub catalog_size: usize,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            catalog_size: default_catalog(),
        }
    }
}

fn default_earth_radius() -> f64 {
    EARTH_RADIUS_KM
}
fn default_mu() -> f64 {
    MU_EARTH_KM3_S2
}
fn default_light_speed() -> f64 {
    LIGHT_SPEED_KM_S
}
fn default_margin() -> f64 {
    80.0
}
fn default_seed() -> u64 {
    42
}
fn default_catalog() -> usize {
    60
}

impl ConfigFile {
    fn resolve(self) -> RunConfig {
        let c = self.constellation;
        RunConfig {
            constellation: ConstellationConfig {
                planes: c.planes,
                per_plane: c.per_plane,
                phasing: c.phasing,
                altitude_km: c.altitude_km,
                inclination_rad: c.inclination_deg.to_radians(),
                earth_radius_km: c.earth_radius_km,
                mu_earth_km3_s2: c.mu_earth_km3_s2,
                light_speed_km_s: c.light_speed_km_s,
                occlusion_margin_km: c.occlusion_margin_km,
                v_threshold_km_s: c.v_threshold_km_s,
                dt_s: c.dt_s,
                horizon_s: c.horizon_s,
                rng_seed: c.seed,
            },
            catalog_size: self.scenario.catalog_size,
        }
    }
}
