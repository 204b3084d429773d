use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Smallest reported p-value; a perfect correlation maps here instead of 0.
pub const P_FLOOR: f64 = 1e-300;

/// Two-sided p-value of a correlation `score` over `m` pairs under the t approximation
/// with `m - 2` degrees of freedom.
///
/// With `t = r·sqrt((m-2)/(1-r²))` the two-sided tail equals the regularized
/// incomplete beta `I_{1-r²}((m-2)/2, 1/2)`, which is what is evaluated here.
pub fn analytic_p(score: f64, m: u64) -> Result<f64> {
    if m < 3 {
        return Err(Error::InvalidArgument(format!(
            "analytic p needs at least 3 cell pairs, got {m}"
        )));
    }
    if !score.is_finite() || score.abs() > 1.0 {
        return Err(Error::InvalidArgument(format!("correlation {score} outside [-1, 1]")));
    }
    let r = score.abs();
    if r == 1.0 {
        return Ok(P_FLOOR);
    }
    if r == 0.0 {
        return Ok(1.0);
    }
    let df = (m - 2) as f64;
    let x = (1.0 - r) * (1.0 + r);
    Ok(beta_reg(df / 2.0, 0.5, x).clamp(P_FLOOR, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_limits() {
        assert_eq!(analytic_p(0.0, 3).unwrap(), 1.0);
        assert_eq!(analytic_p(0.0, 1000).unwrap(), 1.0);
        assert_eq!(analytic_p(1.0, 50).unwrap(), 1e-300);
        assert_eq!(analytic_p(-1.0, 50).unwrap(), 1e-300);
        assert!(analytic_p(0.5, 2).is_err());
        assert!(analytic_p(1.5, 20).is_err());
    }

    /// Reference values from scipy: `2 * scipy.stats.t.sf(|t|, m - 2)`.
    #[test]
    fn matches_reference_t_tails() {
        let cases = [
            (0.5, 100, 1.1804920270376276e-07),
            (0.3, 50, 0.03428618003292995),
            (0.9, 10, 0.00038715624999999926),
            (-0.2, 1000, 1.756786237178938e-10),
            (0.05, 435, 0.2981155736096402),
        ];
        for (r, m, expected) in cases {
            let p = analytic_p(r, m).unwrap();
            assert!(((p - expected) / expected).abs() < 1e-9, "r={r} m={m}: {p} vs {expected}");
        }
    }

    #[test]
    fn symmetric_in_sign_and_monotone_in_strength() {
        assert_eq!(analytic_p(0.4, 30).unwrap(), analytic_p(-0.4, 30).unwrap());
        assert!(analytic_p(0.6, 30).unwrap() < analytic_p(0.4, 30).unwrap());
    }
}
