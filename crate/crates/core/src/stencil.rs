//! Second-order finite differences on the uniform grid with per-end closure.

/// How a nodal array is continued past an end of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndRule {
    /// Odd reflection about the end node (the value there is zero).
    Odd,
    /// Even reflection about the end node.
    Even,
    /// No continuation; one-sided second-order stencils.
    OneSided,
}

/// Centered first derivative in `x`.
pub fn d1(v: &[f64], h: f64, rule: EndRule) -> Vec<f64> {
    let n = v.len() - 1;
    let mut out = vec![0.0; v.len()];
    for i in 1..n {
        out[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    let (left, right) = match rule {
        EndRule::Odd => ((v[1] + v[1]) / (2.0 * h), -(v[n - 1] + v[n - 1]) / (2.0 * h)),
        EndRule::Even => (0.0, 0.0),
        EndRule::OneSided => (
            (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h),
            (3.0 * v[n] - 4.0 * v[n - 1] + v[n - 2]) / (2.0 * h),
        ),
    };
    out[0] = left;
    out[n] = right;
    out
}

/// Centered second derivative in `x`.
pub fn d2(v: &[f64], h: f64, rule: EndRule) -> Vec<f64> {
    let n = v.len() - 1;
    let h2 = h * h;
    let mut out = vec![0.0; v.len()];
    for i in 1..n {
        out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2;
    }
    let (left, right) = match rule {
        EndRule::Odd => (-2.0 * v[0] / h2, -2.0 * v[n] / h2),
        EndRule::Even => (2.0 * (v[1] - v[0]) / h2, 2.0 * (v[n - 1] - v[n]) / h2),
        EndRule::OneSided => (
            (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2,
            (2.0 * v[n] - 5.0 * v[n - 1] + 4.0 * v[n - 2] - v[n - 3]) / h2,
        ),
    };
    out[0] = left;
    out[n] = right;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sided_stencils_are_exact_on_quadratics() {
        let h = 0.1;
        let v: Vec<f64> = (0..11)
            .map(|i| {
                let x = i as f64 * h;
                3.0 * x * x - x + 2.0
            })
            .collect();
        let d = d1(&v, h, EndRule::OneSided);
        let dd = d2(&v, h, EndRule::OneSided);
        for (i, (a, b)) in d.iter().zip(&dd).enumerate() {
            let x = i as f64 * h;
            assert!((a - (6.0 * x - 1.0)).abs() < 1e-12, "d1 at {i}");
            assert!((b - 6.0).abs() < 1e-9, "d2 at {i}");
        }
    }

    #[test]
    fn odd_and_even_closures_match_reflected_data() {
        let h = 0.05;
        let odd: Vec<f64> = (0..21).map(|i| (i as f64 * h).sin()).collect();
        let mut odd_right = odd.clone();
        odd_right.reverse();
        // sin is odd about x = 0; its mirror is odd about the right end.
        let d = d1(&odd, h, EndRule::Odd);
        assert!((d[0] - (h.sin() / h)).abs() < 1e-15);
        let d_r = d1(&odd_right, h, EndRule::Odd);
        assert!((d_r[20] + d[0]).abs() < 1e-15);
        let even: Vec<f64> = (0..21).map(|i| (i as f64 * h).cos()).collect();
        let dd = d2(&even, h, EndRule::Even);
        assert!((dd[0] + 1.0).abs() < 1e-3);
        assert_eq!(d1(&even, h, EndRule::Even)[0], 0.0);
    }
}
