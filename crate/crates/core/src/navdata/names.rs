//! Canonical row vocabulary. Every name carries its unit as a suffix.

pub const GPS_MILLIS: &str = "gps_millis";
pub const GNSS_ID: &str = "gnss_id";
pub const SV_ID: &str = "sv_id";
pub const RAW_PR_M: &str = "raw_pr_m";
pub const CORR_PR_M: &str = "corr_pr_m";
pub const RAW_PR_SIGMA_M: &str = "raw_pr_sigma_m";
pub const X_SV_M: &str = "x_sv_m";
pub const Y_SV_M: &str = "y_sv_m";
pub const Z_SV_M: &str = "z_sv_m";
pub const VX_SV_MPS: &str = "vx_sv_mps";
pub const VY_SV_MPS: &str = "vy_sv_mps";
pub const VZ_SV_MPS: &str = "vz_sv_mps";
/// Satellite clock offset in meters (seconds times c).
pub const B_SV_M: &str = "b_sv_m";
pub const EL_SV_DEG: &str = "el_sv_deg";
pub const AZ_SV_DEG: &str = "az_sv_deg";
pub const IONO_DELAY_M: &str = "iono_delay_m";
pub const TROPO_DELAY_M: &str = "tropo_delay_m";
pub const X_RX_M: &str = "x_rx_m";
pub const Y_RX_M: &str = "y_rx_m";
pub const Z_RX_M: &str = "z_rx_m";
/// Receiver clock offset in meters.
pub const B_RX_M: &str = "b_rx_m";
pub const LAT_RX_DEG: &str = "lat_rx_deg";
pub const LON_RX_DEG: &str = "lon_rx_deg";
pub const ALT_RX_M: &str = "alt_rx_m";
pub const RESIDUALS_M: &str = "residuals_m";
/// 0 = used, 1 = excluded.
pub const FAULT_FLAG: &str = "fault_flag";

pub const STANDARD_NAMES: [&str; 26] = [
    GPS_MILLIS,
    GNSS_ID,
    SV_ID,
    RAW_PR_M,
    CORR_PR_M,
    RAW_PR_SIGMA_M,
    X_SV_M,
    Y_SV_M,
    Z_SV_M,
    VX_SV_MPS,
    VY_SV_MPS,
    VZ_SV_MPS,
    B_SV_M,
    EL_SV_DEG,
    AZ_SV_DEG,
    IONO_DELAY_M,
    TROPO_DELAY_M,
    X_RX_M,
    Y_RX_M,
    Z_RX_M,
    B_RX_M,
    LAT_RX_DEG,
    LON_RX_DEG,
    ALT_RX_M,
    RESIDUALS_M,
    FAULT_FLAG,
];

/// Constellation identifiers in canonical order.
pub const CONSTELLATIONS: [&str; 7] = ["gps", "galileo", "glonass", "beidou", "qzss", "irnss", "sbas"];

pub fn is_standard_name(name: &str) -> bool {
    STANDARD_NAMES.contains(&name)
}
