//! Calibration constants for the ball-model radius estimators.
//!
//! `xi(N)` scales the D2C standard deviation added to the median D2C, and
//! `1/zeta(N)` is the expected distance between two uniform points of a unit
//! `N`-ball. Both are tabulated at powers of two and interpolated linearly in
//! `log2 N`; queries below the first key clamp to the first entry.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XI: [(u32, f64); 12] = [
    (2, 1.2733),
    (4, 1.0115),
    (8, 0.8796),
    (16, 0.8107),
    (32, 0.8384),
    (64, 0.8638),
    (128, 0.9579),
    (256, 1.0403),
    (512, 1.1938),
    (1024, 1.4268),
    (2048, 1.8384),
    (4096, 2.4485),
];

const INV_ZETA: [(u32, f64); 13] = [
    (1, 0.6673),
    (2, 0.9039),
    (4, 1.1043),
    (8, 1.2407),
    (16, 1.3230),
    (32, 1.3657),
    (64, 1.3898),
    (128, 1.4020),
    (256, 1.4081),
    (512, 1.4111),
    (1024, 1.4127),
    (2048, 1.4134),
    (4096, 1.4138),
];

/// Value of `1/zeta(N)` beyond the last tabulated dimension.
pub const INV_ZETA_ASYMPTOTE: f64 = SQRT_2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TablesRepr", into = "TablesRepr")]
pub struct CalibrationTables {
    xi: BTreeMap<u32, f64>,
    inv_zeta: BTreeMap<u32, f64>,
}

#[derive(Serialize, Deserialize)]
struct TablesRepr {
    xi: BTreeMap<u32, f64>,
    inv_zeta: BTreeMap<u32, f64>,
}

impl TryFrom<TablesRepr> for CalibrationTables {
    type Error = Error;

    fn try_from(r: TablesRepr) -> Result<Self> {
        CalibrationTables::new(r.xi, r.inv_zeta)
    }
}

impl From<CalibrationTables> for TablesRepr {
    fn from(t: CalibrationTables) -> Self {
        TablesRepr {
            xi: t.xi,
            inv_zeta: t.inv_zeta,
        }
    }
}

impl Default for CalibrationTables {
    fn default() -> Self {
        Self {
            xi: XI.into_iter().collect(),
            inv_zeta: INV_ZETA.into_iter().collect(),
        }
    }
}

fn validate(name: &str, table: &BTreeMap<u32, f64>) -> Result<()> {
    if table.is_empty() {
        return Err(Error::InvalidArgument(format!("{name} table is empty")));
    }
    if table.contains_key(&0) {
        return Err(Error::InvalidArgument(format!("{name} table has key 0")));
    }
    if let Some((k, v)) = table.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "{name}({k}) = {v} is not a finite positive value"
        )));
    }
    Ok(())
}

fn interpolate(table: &BTreeMap<u32, f64>, n: usize) -> Option<f64> {
    let key = u32::try_from(n).ok();
    if let Some(v) = key.and_then(|k| table.get(&k)) {
        return Some(*v);
    }
    let (&k0, &v0) = table.first_key_value()?;
    let (&k1, _) = table.last_key_value()?;
    if n < k0 as usize {
        return Some(v0);
    }
    if n > k1 as usize {
        return None;
    }
    let k = n as u32;
    let (&lo, &lo_v) = table.range(..k).next_back()?;
    let (&hi, &hi_v) = table.range(k..).next()?;
    let x = (n as f64).log2();
    let t = (x - f64::from(lo).log2()) / (f64::from(hi).log2() - f64::from(lo).log2());
    Some(lo_v + t * (hi_v - lo_v))
}

impl CalibrationTables {
    pub fn new(xi: BTreeMap<u32, f64>, inv_zeta: BTreeMap<u32, f64>) -> Result<Self> {
        validate("xi", &xi)?;
        validate("inv_zeta", &inv_zeta)?;
        Ok(Self { xi, inv_zeta })
    }

    pub fn xi_table(&self) -> &BTreeMap<u32, f64> {
        &self.xi
    }

    pub fn inv_zeta_table(&self) -> &BTreeMap<u32, f64> {
        &self.inv_zeta
    }

    /// `xi(N)`; clamps to the last entry above the table.
    pub fn xi(&self, n: usize) -> f64 {
        interpolate(&self.xi, n).unwrap_or_else(|| *self.xi.values().last().unwrap())
    }

    /// `1/zeta(N)`; equals the `sqrt(2)` asymptote above the table.
    pub fn inv_zeta(&self, n: usize) -> f64 {
        interpolate(&self.inv_zeta, n).unwrap_or(INV_ZETA_ASYMPTOTE)
    }

    pub fn zeta(&self, n: usize) -> f64 {
        1.0 / self.inv_zeta(n)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tables serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("calibration tables: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_values_are_exact() {
        let t = CalibrationTables::default();
        assert_eq!(t.xi(2), 1.2733);
        assert_eq!(t.xi(4096), 2.4485);
        assert_eq!(t.inv_zeta(1), 0.6673);
        assert_eq!(t.inv_zeta(4096), 1.4138);
        for (k, v) in XI {
            assert_eq!(t.xi(k as usize).to_bits(), v.to_bits());
        }
    }

    #[test]
    fn interpolation_is_linear_in_log2() {
        let t = CalibrationTables::default();
        // 3 sits log2(3) - 1 of the way from 2 to 4 on the log2 axis
        let mid = t.xi(3);
        let expected = 1.2733 + (3f64.log2() - 1.0) * (1.0115 - 1.2733);
        assert!((mid - expected).abs() < 1e-15);
        assert!(t.xi(200) > t.xi(128) && t.xi(200) < t.xi(256));
    }

    #[test]
    fn out_of_range_queries() {
        let t = CalibrationTables::default();
        assert_eq!(t.xi(1), 1.2733);
        assert_eq!(t.xi(10_000), 2.4485);
        assert_eq!(t.inv_zeta(4097), SQRT_2);
        assert_eq!(t.inv_zeta(1 << 20), SQRT_2);
    }

    #[test]
    fn json_round_trip_and_schema() {
        let t = CalibrationTables::default();
        let json = t.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["xi"]["2"], 1.2733);
        assert_eq!(v["inv_zeta"]["1"], 0.6673);
        assert_eq!(CalibrationTables::from_json(&json).unwrap(), t);
        assert!(CalibrationTables::from_json(r#"{"xi": {"2": -1.0}, "inv_zeta": {"1": 0.6}}"#).is_err());
    }
}
