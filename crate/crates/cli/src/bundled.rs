//! Scenario files compiled into the binary.

/// Two-state regulator, `Q = I`, `R = 1`, `x0 = [10, 5]`, optimal gain schedule.
pub const FIG1: &str = include_str!("../scenarios/fig1.scn");

/// Two-state plant with a scalar measurement, fixed state feedback and a
/// Kalman estimator tuned with `Qd = I`, `Rv = 1` while the simulation samples
/// `d_k = 0.25 g`, `v_k = 0.25 g`, `x0 ~ N(x̂0, 2.5² I)`.
pub const FIG4: &str = include_str!("../scenarios/fig4.scn");

/// As [`FIG4`] with the estimator model equal to the sampling covariances.
pub const FIG4_MATCHED: &str = include_str!("../scenarios/fig4-matched.scn");

pub fn by_name(name: &str) -> Option<&'static str> {
    match name {
        "fig1" => Some(FIG1),
        "fig4" => Some(FIG4),
        "fig4-matched" => Some(FIG4_MATCHED),
        _ => None,
    }
}
