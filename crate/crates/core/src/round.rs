//! Display rounding shared by the rendered reports.

/// Rounds half away from zero at `decimals` places.
///
/// Values computed in binary floating point often land a few ulps below a
/// decimal tie (`0.90375` is stored as `0.903749999...`), so the scaled value
/// is nudged by a relative 1e-9 before flooring.
pub fn round_half_up(value: f64, decimals: u32) -> f64 {
    if !value.is_finite() {
        return value;
    }
    let scale = 10f64.powi(decimals as i32);
    let scaled = value.abs() * scale;
    let nudged = scaled + scaled.max(1.0) * 1e-9;
    let rounded = (nudged + 0.5).floor() / scale;
    rounded.copysign(value)
}

/// `round_half_up` rendered with exactly `decimals` digits.
pub fn fixed(value: f64, decimals: u32) -> String {
    format!("{:.*}", decimals as usize, round_half_up(value, decimals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_round_up() {
        assert_eq!(round_half_up(0.90375, 4), 0.9038);
        assert_eq!(round_half_up(0.125, 2), 0.13);
        assert_eq!(round_half_up(2.5, 0), 3.0);
        assert_eq!(round_half_up(-2.5, 0), -3.0);
    }

    #[test]
    fn non_ties_unaffected() {
        assert_eq!(round_half_up(0.80029, 4), 0.8003);
        assert_eq!(round_half_up(50.1299, 2), 50.13);
        assert_eq!(round_half_up(1.0 / 3.0, 4), 0.3333);
    }

    #[test]
    fn fixed_pads() {
        assert_eq!(fixed(100.0, 2), "100.00");
        assert_eq!(fixed(0.5, 4), "0.5000");
    }
}
