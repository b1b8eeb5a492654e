//! Digamma function with pole handling.

/// Distance below which an argument is treated as sitting on a pole.
pub const POLE_GUARD: f64 = 1e-6;

/// Digamma. Negative arguments use the reflection formula with the cotangent
/// evaluated on `x - round(x)`, which keeps full accuracy next to the poles.
pub fn digamma(x: f64) -> f64 {
    if x >= 0.5 || x.is_nan() {
        return statrs::function::gamma::digamma(x);
    }
    let r = x - x.round();
    if r == 0.0 {
        return f64::NAN;
    }
    statrs::function::gamma::digamma(1.0 - x) - std::f64::consts::PI / (std::f64::consts::PI * r).tan()
}

/// Returns `Some(p)` when `x` lies within `POLE_GUARD` of the pole at `-p`.
pub fn pole_order(x: f64) -> Option<u64> {
    if x > POLE_GUARD {
        return None;
    }
    let r = x.round();
    if (x - r).abs() < POLE_GUARD && r <= 0.0 {
        Some((-r) as u64)
    } else {
        None
    }
}

/// Finite part of the Laurent expansion of psi around its poles.
///
/// Near `x = -p` one has `psi(x) = -1/(x+p) + psi(p+1) + O(x+p)`, so the
/// regular part at the pole is `psi(p+1)`. Away from poles this is `psi(x)`.
pub fn digamma_finite_part(x: f64) -> f64 {
    match pole_order(x) {
        Some(p) => digamma(p as f64 + 1.0),
        None => digamma(x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn known_values() {
        assert!((digamma(1.0) + EULER).abs() < 1e-14);
        assert!((digamma(2.0) - (1.0 - EULER)).abs() < 1e-14);
        assert!((digamma(0.5) + EULER + 2.0 * 2f64.ln()).abs() < 1e-14);
        assert!((digamma(-0.5) - (2.0 - EULER - 2.0 * 2f64.ln())).abs() < 1e-13);
    }

    #[test]
    fn recurrence_holds_on_working_range() {
        for i in 1..400 {
            let x = -7.75 + 0.0371 * i as f64;
            if pole_order(x).is_some() || pole_order(x + 1.0).is_some() {
                continue;
            }
            let lhs = digamma(x + 1.0);
            let rhs = digamma(x) + 1.0 / x;
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "x={x}");
        }
    }

    #[test]
    fn finite_part_matches_laurent_expansion() {
        for p in 0..6u64 {
            let x = -(p as f64) + 1e-7;
            let eps = x + p as f64;
            let regular = digamma(x) + 1.0 / eps;
            assert!((regular - digamma_finite_part(-(p as f64))).abs() < 1e-5, "p={p} {regular}");
        }
        assert_eq!(pole_order(-3.0), Some(3));
        assert_eq!(pole_order(0.0), Some(0));
        assert_eq!(pole_order(2.0), None);
        assert_eq!(pole_order(-2.5), None);
    }
}
