//! Per-request evidence supplied alongside protocol parameters.

use radaa_engine::GeoPoint;

use crate::error::ApiError;

pub const SENDER_PROOF_HEADER: &str = "sender-proof";
pub const CLIENT_IP_HEADER: &str = "x-radaa-client-ip";
pub const GEO_HEADER: &str = "x-radaa-geo";
pub const DEVICE_HEADER: &str = "x-radaa-device";
pub const NIDS_HEADER: &str = "x-radaa-nids";

/// Transaction metadata the risk engine consumes. In a real deployment these
/// come from the edge (address, geolocation, device fingerprint, NIDS verdict).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RequestMeta {
    pub ip: Option<String>,
    pub geo: Option<GeoPoint>,
    pub device: Option<String>,
    pub nids_malicious: bool,
}

impl RequestMeta {
    /// Builds metadata from raw header values.
    pub fn from_values(
        ip: Option<&str>,
        geo: Option<&str>,
        device: Option<&str>,
        nids: Option<&str>,
    ) -> Result<Self, ApiError> {
        let geo = geo.map(parse_geo).transpose()?;
        let nids_malicious = match nids.map(str::trim) {
            None | Some("") | Some("0") | Some("false") => false,
            Some("1") | Some("true") => true,
            Some(_) => return Err(ApiError::bad_request("invalid_request", "x-radaa-nids must be 0/1/true/false")),
        };
        Ok(Self {
            ip: ip.map(|s| s.trim().to_string()).filter(|s| !s.is_empty()),
            geo,
            device: device.map(|s| s.trim().to_string()).filter(|s| !s.is_empty()),
            nids_malicious,
        })
    }

    pub fn header_pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if let Some(ip) = &self.ip {
            out.push((CLIENT_IP_HEADER, ip.clone()));
        }
        if let Some(g) = &self.geo {
            out.push((GEO_HEADER, format!("{},{}", g.lat, g.lon)));
        }
        if let Some(d) = &self.device {
            out.push((DEVICE_HEADER, d.clone()));
        }
        if self.nids_malicious {
            out.push((NIDS_HEADER, "1".into()));
        }
        out
    }
}

fn parse_geo(raw: &str) -> Result<GeoPoint, ApiError> {
    let bad = || ApiError::bad_request("invalid_request", "x-radaa-geo must be \"lat,lon\" in degrees");
    let (lat, lon) = raw.split_once(',').ok_or_else(bad)?;
    let lat: f64 = lat.trim().parse().map_err(|_| bad())?;
    let lon: f64 = lon.trim().parse().map_err(|_| bad())?;
    GeoPoint::new(lat, lon).map_err(|_| bad())
}
