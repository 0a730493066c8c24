use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::GeoError;

/// Sphere radius of EPSG:3857.
pub const EARTH_RADIUS_M: f64 = 6_378_137.0;
/// Latitude clamp accepted by the forward projection, in degrees.
pub const MAX_MERCATOR_LAT: f64 = 85.06;

/// EPSG code. 4326 and 3857 are understood; anything else is carried opaquely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CrsId(u32);

impl CrsId {
    pub const WGS84: CrsId = CrsId(4326);
    pub const WEB_MERCATOR: CrsId = CrsId(3857);

    pub fn new(epsg: u32) -> Result<Self, GeoError> {
        if epsg == 0 {
            Err(GeoError::InvalidCrs)
        } else {
            Ok(CrsId(epsg))
        }
    }

    pub fn epsg(&self) -> u32 {
        self.0
    }
}

impl fmt::Display for CrsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EPSG:{}", self.0)
    }
}

/// Spherical Web Mercator forward projection, degrees to meters.
pub fn project_4326_to_3857(lon: f64, lat: f64) -> Result<(f64, f64), GeoError> {
    if !(lat.abs() <= MAX_MERCATOR_LAT) {
        return Err(GeoError::LatitudeOutOfRange(lat));
    }
    if !(lon.abs() <= 180.0) {
        return Err(GeoError::LongitudeOutOfRange(lon));
    }
    let x = EARTH_RADIUS_M * lon.to_radians();
    // asinh(tan φ) == ln(tan(π/4 + φ/2)), but exact at the equator.
    let y = EARTH_RADIUS_M * lat.to_radians().tan().asinh();
    Ok((x, y))
}

/// Inverse of [`project_4326_to_3857`], meters to degrees.
pub fn project_3857_to_4326(x: f64, y: f64) -> (f64, f64) {
    let lon = (x / EARTH_RADIUS_M).to_degrees();
    let lat = (2.0 * (y / EARTH_RADIUS_M).exp().atan() - FRAC_PI_2).to_degrees();
    (lon, lat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point() {
        assert_eq!(project_4326_to_3857(0.0, 0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn antimeridian_x() {
        // R·π
        let (x, y) = project_4326_to_3857(180.0, 0.0).unwrap();
        assert!((x - 20_037_508.342_789_244).abs() < 1e-6);
        assert_eq!(y, 0.0);
    }

    #[test]
    fn clamp_latitude() {
        let phi = 85.06f64.to_radians();
        let oracle = EARTH_RADIUS_M * (std::f64::consts::FRAC_PI_4 + phi / 2.0).tan().ln();
        let (_, y) = project_4326_to_3857(0.0, 85.06).unwrap();
        assert!((y - oracle).abs() < 1e-6, "{y} vs {oracle}");
        assert!((y - 20_048_966.104).abs() < 1e-2);
    }

    #[test]
    fn out_of_range() {
        assert_eq!(project_4326_to_3857(0.0, 85.07), Err(GeoError::LatitudeOutOfRange(85.07)));
        assert!(matches!(project_4326_to_3857(0.0, f64::NAN), Err(GeoError::LatitudeOutOfRange(_))));
        assert_eq!(project_4326_to_3857(180.5, 0.0), Err(GeoError::LongitudeOutOfRange(180.5)));
    }

    #[test]
    fn crs_ids() {
        assert!(CrsId::new(0).is_err());
        assert_eq!(CrsId::new(32633).unwrap().to_string(), "EPSG:32633");
    }
}
