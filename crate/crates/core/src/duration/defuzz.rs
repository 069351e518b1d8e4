use crate::error::{Error, Result};
use crate::sim::DurationBounds;

/// `MaxLaneLength / MaxLaneSpeed`, in seconds.
pub fn refer_duration(max_lane_length: f64, max_lane_speed: f64) -> Result<f64> {
    if !(max_lane_length > 0.0) || !(max_lane_speed > 0.0) {
        return Err(Error::InvalidInput(format!(
            "lane length {max_lane_length} and speed {max_lane_speed} must be positive"
        )));
    }
    Ok(max_lane_length / max_lane_speed)
}

/// `round(clip(h · refer + ε, low, high))` in whole seconds.
pub fn defuzzify_duration(h: f64, refer: f64, eps: f64, bounds: DurationBounds) -> u32 {
    let raw = h * refer + eps;
    let clipped = if raw.is_nan() {
        bounds.low as f64
    } else {
        raw.clamp(bounds.low as f64, bounds.high as f64)
    };
    clipped.round() as u32
}
