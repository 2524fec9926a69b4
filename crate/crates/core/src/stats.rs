//! Student t tail probabilities.

use statrs::function::beta::beta_reg;

/// Two-sided p-value `P(|T| ≥ |t|)` for a Student t variable with `df`
/// degrees of freedom, via `I_{df/(df+t²)}(df/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    assert!(df > 0.0, "degrees of freedom must be positive");
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    if t == 0.0 {
        return 1.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Independent reference: with `t = √ν·tan θ` the tail is
    /// `∫_{θ₀}^{π/2} cos^{ν−1}θ dθ / ∫_0^{π/2} cos^{ν−1}θ dθ`, integrated by
    /// composite Simpson.
    pub(crate) fn integrated_p(t: f64, df: f64) -> f64 {
        let f = |th: f64| th.cos().powf(df - 1.0);
        let simpson = |a: f64, b: f64| {
            let n = 200_000;
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for k in 1..n {
                s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        let th0 = (t.abs() / df.sqrt()).atan();
        let half = std::f64::consts::FRAC_PI_2;
        simpson(th0, half) / simpson(0.0, half)
    }

    #[test]
    fn matches_numerical_integration() {
        for df in [3.0, 18.0, 98.0] {
            for t in [1.96, 2.58, -1.96] {
                let p = student_t_two_sided_p(t, df);
                let q = integrated_p(t, df);
                assert!((p - q).abs() < 1e-10, "df={df} t={t}: {p} vs {q}");
            }
        }
    }

    #[test]
    fn closed_forms() {
        // df = 1 is Cauchy: p = 1 − 2·atan(|t|)/π.
        let p = student_t_two_sided_p(1.0, 1.0);
        assert!((p - 0.5).abs() < 1e-14);
        // df = 2: p = 1 − |t|/√(2 + t²).
        let p = student_t_two_sided_p(3.0, 2.0);
        assert!((p - (1.0 - 3.0 / 11f64.sqrt())).abs() < 1e-14);
        assert_eq!(student_t_two_sided_p(0.0, 5.0), 1.0);
        assert_eq!(student_t_two_sided_p(f64::INFINITY, 5.0), 0.0);
    }

    #[test]
    fn monotone_in_abs_t() {
        let mut last = 1.0;
        for k in 1..200 {
            let p = student_t_two_sided_p(k as f64 * 0.05, 18.0);
            assert!(p < last);
            last = p;
        }
    }
}
