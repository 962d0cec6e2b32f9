//! Sparse bivariate polynomials with exact differentiation, used for
//! manufactured solutions.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use nalgebra::Matrix3;

use crate::mesh::Point2;

/// `Σ c_ab x^a y^b`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly2 {
    terms: BTreeMap<(u32, u32), f64>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn monomial(a: u32, b: u32, c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(a, b, c);
        p
    }

    pub fn add_term(&mut self, a: u32, b: u32, c: f64) {
        if c != 0.0 {
            *self.terms.entry((a, b)).or_insert(0.0) += c;
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), f64)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(a, b)| a + b).max().unwrap_or(0)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(a, b), c)| c * x.powi(a as i32) * y.powi(b as i32))
            .sum()
    }

    pub fn at(&self, p: Point2) -> f64 {
        self.eval(p.x, p.y)
    }

    pub fn dx(&self) -> Self {
        let mut out = Self::zero();
        for (&(a, b), &c) in &self.terms {
            if a > 0 {
                out.add_term(a - 1, b, c * a as f64);
            }
        }
        out
    }

    pub fn dy(&self) -> Self {
        let mut out = Self::zero();
        for (&(a, b), &c) in &self.terms {
            if b > 0 {
                out.add_term(a, b - 1, c * b as f64);
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero();
        for (&(a, b), &c) in &self.terms {
            out.add_term(a, b, c * s);
        }
        out
    }
}

impl Add for &Poly2 {
    type Output = Poly2;

    fn add(self, rhs: &Poly2) -> Poly2 {
        let mut out = self.clone();
        for (&(a, b), &c) in &rhs.terms {
            out.add_term(a, b, c);
        }
        out
    }
}

impl Sub for &Poly2 {
    type Output = Poly2;

    fn sub(self, rhs: &Poly2) -> Poly2 {
        self + &rhs.scale(-1.0)
    }
}

impl Mul for &Poly2 {
    type Output = Poly2;

    fn mul(self, rhs: &Poly2) -> Poly2 {
        let mut out = Poly2::zero();
        for (&(a, b), &c) in &self.terms {
            for (&(p, q), &d) in &rhs.terms {
                out.add_term(a + p, b + q, c * d);
            }
        }
        out
    }
}

/// Polynomial displacement field with its exact strain and, for a constant
/// elastic matrix, the body load in equilibrium with it.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyField {
    pub u: Poly2,
    pub v: Poly2,
}

impl PolyField {
    pub fn displacement(&self, p: Point2) -> [f64; 2] {
        [self.u.at(p), self.v.at(p)]
    }

    /// Voigt strain polynomials `(u_x, v_y, u_y + v_x)`.
    pub fn strain(&self) -> [Poly2; 3] {
        [self.u.dx(), self.v.dy(), &self.u.dy() + &self.v.dx()]
    }

    pub fn strain_at(&self, p: Point2) -> [f64; 3] {
        let e = self.strain();
        [e[0].at(p), e[1].at(p), e[2].at(p)]
    }

    pub fn gradient_at(&self, p: Point2) -> [[f64; 2]; 2] {
        [
            [self.u.dx().at(p), self.u.dy().at(p)],
            [self.v.dx().at(p), self.v.dy().at(p)],
        ]
    }

    /// `-div(C ε(u))` for constant `C`.
    pub fn body_load(&self, c: &Matrix3<f64>) -> [Poly2; 2] {
        let e = self.strain();
        let stress: Vec<Poly2> = (0..3)
            .map(|s| {
                let mut acc = Poly2::zero();
                for (t, et) in e.iter().enumerate() {
                    acc = &acc + &et.scale(c[(s, t)]);
                }
                acc
            })
            .collect();
        let bx = (&stress[0].dx() + &stress[2].dy()).scale(-1.0);
        let by = (&stress[2].dx() + &stress[1].dy()).scale(-1.0);
        [bx, by]
    }
}
