use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_error, KakeyaError, Result};

/// The frozen constants file shipped with the crate.
pub const FROZEN_CONSTANTS: &str = include_str!("../../config/constants.toml");

/// Acceptance constants, calibrated once at `calibration_n` and then read
/// from the versioned file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub version: u32,
    pub calibration_n: u8,
    /// Ceiling for `n·|⋃P_j|` at the selected map.
    pub c_upper: f64,
    /// Floor for `n·|⋃2P_j| / log₃ n` and for `n·|K_σ ∩ S_j|`.
    pub c_lower: f64,
    /// Floor for `R(T*_{n,t,y}) / n`.
    pub c0: f64,
}

impl Constants {
    pub fn frozen() -> Constants {
        Constants::parse(FROZEN_CONSTANTS).expect("shipped constants parse")
    }

    pub fn parse(text: &str) -> Result<Constants> {
        let c: Constants = toml::from_str(text).map_err(|e| KakeyaError::Parse(e.to_string()))?;
        if !(c.c_upper > 0.0 && c.c_lower > 0.0 && c.c0 > 0.0) {
            return Err(KakeyaError::Parse("constants must be positive".into()));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Constants> {
        Constants::parse(&std::fs::read_to_string(path).map_err(io_error(path))?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("constants serialize")
    }
}
