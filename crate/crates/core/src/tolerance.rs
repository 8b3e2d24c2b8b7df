//! Numeric thresholds shared by the engines and the test suites.

/// Relative tolerance of geometric predicates (orientation, in-disk). A value
/// inside this band is reported as a general-position violation.
pub const GEOMETRIC_REL: f64 = 1e-9;

/// Negative variances down to `-VARIANCE_CLAMP * scale` are round-off and get
/// clamped to zero.
pub const VARIANCE_CLAMP: f64 = 1e-9;

/// Relative agreement required between an analytic engine and the oracle.
pub const ORACLE_REL: f64 = 1e-9;

/// `|a - b| <= rel * max(|a|, |b|, floor)`.
pub fn rel_close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(floor);
    (a - b).abs() <= rel * scale
}
