use crate::error::{argument, Result};

/// Two-sample Kolmogorov–Smirnov distance: sup-norm distance between the
/// empirical CDFs, by a two-pointer merge over the sorted samples.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return argument("KS distance needs two nonempty samples");
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return argument("KS distance is undefined for NaN samples");
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    ys.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        // step both CDFs past the smallest remaining value, ties together
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Asymptotic 5% critical value `1.358 sqrt((m + n) / (m n))`.
pub fn ks_critical_05(m: usize, n: usize) -> f64 {
    let (m, n) = (m as f64, n as f64);
    1.358 * ((m + n) / (m * n)).sqrt()
}

/// Asymptotic two-sided p-value of a two-sample KS distance.
pub fn ks_p_value(d: f64, m: usize, n: usize) -> f64 {
    let en = ((m * n) as f64 / (m + n) as f64).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Evaluate both empirical CDFs at every breakpoint.
    fn brute_force(a: &[f64], b: &[f64]) -> f64 {
        let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        a.iter()
            .chain(b)
            .map(|&x| (cdf(a, x) - cdf(b, x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn identical_samples() {
        let a = [0.3, -1.0, 2.5, 2.5];
        assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_supports() {
        let a = vec![0.0; 1000];
        let b = vec![1.0; 1000];
        assert_eq!(ks_distance(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn worked_example() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [1.5, 2.5];
        assert_eq!(brute_force(&a, &b), 0.5);
        assert_eq!(ks_distance(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(ks_distance(&[], &[1.0]).is_err());
        assert!(ks_distance(&[1.0], &[]).is_err());
    }

    #[test]
    fn p_value_is_monotone() {
        let p1 = ks_p_value(0.02, 2000, 20000);
        let p2 = ks_p_value(0.05, 2000, 20000);
        assert!(p1 > p2);
        assert!(ks_p_value(ks_critical_05(2000, 20000), 2000, 20000) > 0.04);
    }

    fn sample() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec((-20i32..20).prop_map(|v| v as f64 / 4.0), 1..40)
    }

    proptest! {
        #[test]
        fn matches_brute_force(a in sample(), b in sample()) {
            let d = ks_distance(&a, &b).unwrap();
            prop_assert!((d - brute_force(&a, &b)).abs() < 1e-12);
        }

        #[test]
        fn metric_properties(a in sample(), b in sample(), c in sample()) {
            let ab = ks_distance(&a, &b).unwrap();
            prop_assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
            prop_assert!((ab - ks_distance(&b, &a).unwrap()).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&ab));
            let ac = ks_distance(&a, &c).unwrap();
            let bc = ks_distance(&b, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }
}
