use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Roofline evaluation of an `N×N` complex GEMM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RooflinePoint {
    pub n: usize,
    /// FLOPs, `8N²(N−2)`.
    pub work: f64,
    /// Bytes moved, `64N²`.
    pub traffic: f64,
    /// `work / traffic`, FLOPs per byte.
    pub intensity: f64,
    /// The `N/8` approximation of the intensity.
    pub intensity_approx: f64,
    /// `min(peak, intensity × bandwidth)`, GFLOP/s.
    pub attainable: f64,
    /// `work / time`, GFLOP/s.
    pub measured: f64,
}

impl RooflinePoint {
    /// True when the measurement beats the bound by more than `slack` (relative).
    pub fn exceeds_bound(&self, slack: f64) -> bool {
        self.measured > self.attainable * (1.0 + slack)
    }

    pub fn memory_bound(&self, peak_gflops: f64, bandwidth_gbs: f64) -> bool {
        self.intensity < ridge_intensity(peak_gflops, bandwidth_gbs)
    }
}

/// Intensity at which `a × bandwidth` reaches the compute peak.
pub fn ridge_intensity(peak_gflops: f64, bandwidth_gbs: f64) -> f64 {
    peak_gflops / bandwidth_gbs
}

/// Roofline point for dimension `n`, peak GFLOP/s, bandwidth GB/s and measured seconds.
pub fn roofline(
    n: usize,
    peak_gflops: f64,
    bandwidth_gbs: f64,
    measured_time: f64,
) -> Result<RooflinePoint> {
    if n < 3 {
        return Err(Error::InvalidDimension(format!(
            "roofline needs N >= 3, got {n}"
        )));
    }
    if !(peak_gflops > 0.0 && bandwidth_gbs > 0.0 && measured_time > 0.0) {
        return Err(Error::InvalidDimension(
            "peak, bandwidth and time must be positive".into(),
        ));
    }
    let nf = n as f64;
    let work = 8.0 * nf * nf * (nf - 2.0);
    let traffic = 64.0 * nf * nf;
    let intensity = work / traffic;
    Ok(RooflinePoint {
        n,
        work,
        traffic,
        intensity,
        intensity_approx: nf / 8.0,
        attainable: peak_gflops.min(intensity * bandwidth_gbs),
        measured: work / measured_time * 1e-9,
    })
}
