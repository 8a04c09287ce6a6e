//! Truncated multivariate Taylor polynomials ("jets") about the origin.

use std::collections::HashMap;

/// Monomial basis of all polynomials in `vars` variables up to `max_degree`.
#[derive(Debug)]
pub struct JetSpace {
    vars: usize,
    max_degree: usize,
    exponents: Vec<Vec<u8>>,
    degrees: Vec<usize>,
    /// `(lhs, rhs, product)` index triples, grouped by total degree.
    products: Vec<(usize, usize, usize, usize)>,
    /// For each variable: `(monomial, derivative monomial, factor)`.
    derivs: Vec<Vec<(usize, usize, f64)>>,
}

/// Coefficient vector in a [`JetSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Jet(pub Vec<f64>);

impl JetSpace {
    pub fn new(vars: usize, max_degree: usize) -> Self {
        let mut exponents = Vec::new();
        for d in 0..=max_degree {
            push_with_degree(vars, d, &mut Vec::with_capacity(vars), &mut exponents);
        }
        let index: HashMap<Vec<u8>, usize> =
            exponents.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let degrees: Vec<usize> = exponents.iter().map(|e| e.iter().map(|&p| p as usize).sum()).collect();

        let mut products = Vec::new();
        for (a, ea) in exponents.iter().enumerate() {
            for (b, eb) in exponents.iter().enumerate() {
                let deg = degrees[a] + degrees[b];
                if deg > max_degree {
                    continue;
                }
                let sum: Vec<u8> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                products.push((a, b, index[&sum], deg));
            }
        }
        products.sort_by_key(|p| p.3);

        let derivs = (0..vars)
            .map(|v| {
                exponents
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e[v] > 0)
                    .map(|(k, e)| {
                        let mut lower = e.clone();
                        lower[v] -= 1;
                        (k, index[&lower], e[v] as f64)
                    })
                    .collect()
            })
            .collect();

        Self { vars, max_degree, exponents, degrees, products, derivs }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn size(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[Vec<u8>] {
        &self.exponents
    }

    pub fn degree_of(&self, k: usize) -> usize {
        self.degrees[k]
    }

    pub fn zero(&self) -> Jet {
        Jet(vec![0.0; self.size()])
    }

    pub fn constant(&self, c: f64) -> Jet {
        let mut j = self.zero();
        j.0[0] = c;
        j
    }

    pub fn variable(&self, v: usize) -> Jet {
        let mut e = vec![0u8; self.vars];
        e[v] = 1;
        self.monomial(&e, 1.0)
    }

    pub fn monomial(&self, exponent: &[u8], coeff: f64) -> Jet {
        let mut j = self.zero();
        let k =
            self.exponents.iter().position(|e| e == exponent).expect("monomial within the truncation degree");
        j.0[k] = coeff;
        j
    }

    /// Product truncated at total degree `cap` (at most the space degree).
    pub fn mul_capped(&self, a: &Jet, b: &Jet, cap: usize) -> Jet {
        let mut out = self.zero();
        self.mul_add_capped(a, b, cap, 1.0, &mut out);
        out
    }

    pub fn mul(&self, a: &Jet, b: &Jet) -> Jet {
        self.mul_capped(a, b, self.max_degree)
    }

    /// `out += scale * a * b`, truncated at `cap`.
    pub fn mul_add_capped(&self, a: &Jet, b: &Jet, cap: usize, scale: f64, out: &mut Jet) {
        for &(i, j, k, deg) in &self.products {
            if deg > cap {
                break;
            }
            let (x, y) = (a.0[i], b.0[j]);
            if x != 0.0 && y != 0.0 {
                out.0[k] += scale * x * y;
            }
        }
    }

    pub fn deriv(&self, a: &Jet, v: usize) -> Jet {
        let mut out = self.zero();
        for &(k, lower, factor) in &self.derivs[v] {
            out.0[lower] += factor * a.0[k];
        }
        out
    }

    /// Drop every term of degree above `cap`.
    pub fn truncate(&self, a: &Jet, cap: usize) -> Jet {
        Jet(a.0.iter().enumerate().map(|(k, c)| if self.degrees[k] <= cap { *c } else { 0.0 }).collect())
    }

    /// Value at the origin.
    pub fn value(&self, a: &Jet) -> f64 {
        a.0[0]
    }

    /// Evaluate at a point.
    pub fn eval(&self, a: &Jet, point: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(&a.0)
            .map(|(e, c)| c * e.iter().zip(point).map(|(&p, x)| x.powi(p as i32)).product::<f64>())
            .sum()
    }
}

fn push_with_degree(vars: usize, remaining: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() == vars - 1 {
        prefix.push(remaining as u8);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for p in (0..=remaining).rev() {
        prefix.push(p as u8);
        push_with_degree(vars, remaining - p, prefix, out);
        prefix.pop();
    }
}

impl Jet {
    pub fn add(&self, other: &Jet) -> Jet {
        Jet(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        Jet(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet(self.0.iter().map(|a| a * c).collect())
    }

    pub fn add_assign(&mut self, other: &Jet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn add_scaled(&mut self, other: &Jet, c: f64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += c * b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_size_is_binomial() {
        assert_eq!(JetSpace::new(3, 3).size(), 20);
        assert_eq!(JetSpace::new(8, 3).size(), 165);
        assert_eq!(JetSpace::new(1, 4).size(), 5);
    }

    #[test]
    fn product_and_derivative_match_pointwise_values() {
        let sp = JetSpace::new(2, 3);
        let x = sp.variable(0);
        let y = sp.variable(1);
        // (1 + x + 2y)(3 - y + x^2) truncated at degree 3 is exact here.
        let a = sp.constant(1.0).add(&x).add(&y.scale(2.0));
        let b = sp.constant(3.0).sub(&y).add(&sp.mul(&x, &x));
        let p = sp.mul(&a, &b);
        let pt = [0.3, -0.7];
        let exact = (1.0 + 0.3 - 1.4) * (3.0 + 0.7 + 0.09);
        assert!((sp.eval(&p, &pt) - exact).abs() < 1e-14);
        // d/dy (1 + x + 2y)(3 - y + x^2) = 2(3 - y + x^2) - (1 + x + 2y)
        let dy = sp.deriv(&p, 1);
        let exact_dy = 2.0 * (3.0 + 0.7 + 0.09) - (1.0 + 0.3 - 1.4);
        assert!((sp.eval(&dy, &pt) - exact_dy).abs() < 1e-14);
    }

    #[test]
    fn truncation_drops_high_degrees() {
        let sp = JetSpace::new(2, 3);
        let x = sp.variable(0);
        let x2 = sp.mul(&x, &x);
        let x4 = sp.mul(&x2, &x2);
        assert!(x4.0.iter().all(|c| *c == 0.0));
        let capped = sp.mul_capped(&x, &x2, 2);
        assert!(capped.0.iter().all(|c| *c == 0.0));
    }
}
