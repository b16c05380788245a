//! Torsion-free connections on (subsets of) the plane and their curvature.
//!
//! Coefficients are keyed `(a, b, c, d, e, f)` with
//! `Γ11^1 = a, Γ11^2 = b, Γ12^1 = c, Γ12^2 = d, Γ22^1 = e, Γ22^2 = f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Domain, Point, ScalarExpr, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// Constant symbols on the whole plane.
    Constant,
    /// Symbols `coeff / x1` on the half-plane `x1 > 0`.
    InverseX1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChristoffelSpec {
    pub coeffs: [f64; 6],
    pub kind: Kind,
}

/// Symbols at a point, `g[i][j][k] = Γ_ij^k` (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Christoffel(pub [[[f64; 2]; 2]; 2]);

impl Christoffel {
    pub fn from_coeffs(c: [f64; 6]) -> Christoffel {
        let [a, b, c12, d, e, f] = c;
        Christoffel([[[a, b], [c12, d]], [[c12, d], [e, f]]])
    }

    pub fn coeffs(&self) -> [f64; 6] {
        let g = &self.0;
        [g[0][0][0], g[0][0][1], g[0][1][0], g[0][1][1], g[1][1][0], g[1][1][1]]
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.0[i][j][k]
    }

    pub fn scaled(&self, s: f64) -> Christoffel {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for col in row.iter_mut() {
                for v in col.iter_mut() {
                    *v *= s;
                }
            }
        }
        out
    }
}

/// 2×2 real array `entries[i][j]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tensor2(pub [[f64; 2]; 2]);

impl Tensor2 {
    pub fn zero() -> Tensor2 {
        Tensor2([[0.0; 2]; 2])
    }

    pub fn transpose(&self) -> Tensor2 {
        let m = &self.0;
        Tensor2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn symmetrize(&self) -> Tensor2 {
        let t = self.transpose();
        self.add(&t).scale(0.5)
    }

    pub fn add(&self, other: &Tensor2) -> Tensor2 {
        let mut out = *self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] += other.0[i][j];
            }
        }
        out
    }

    pub fn sub(&self, other: &Tensor2) -> Tensor2 {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Tensor2 {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        out
    }

    /// Max-norm of the entries.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Contraction `T(u, v) = T_ij u^i v^j`.
    pub fn apply(&self, u: [f64; 2], v: [f64; 2]) -> f64 {
        let m = &self.0;
        m[0][0] * u[0] * v[0] + m[0][1] * u[0] * v[1] + m[1][0] * u[1] * v[0] + m[1][1] * u[1] * v[1]
    }

    /// Singular values, largest first.
    pub fn singular_values(&self) -> [f64; 2] {
        let [[a, b], [c, d]] = self.0;
        let s = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
        let s1 = ((s + disc) / 2.0).sqrt();
        let s2 = if s1 > 0.0 { det.abs() / s1 } else { 0.0 };
        [s1, s2]
    }
}

/// Curvature components `r[i][j][k][l] = R_ijk^l`, where
/// `R(∂i, ∂j)∂k = R_ijk^l ∂l`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Curvature(pub [[[[f64; 2]; 2]; 2]; 2]);

impl Curvature {
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Anything that can report its Christoffel symbols and their first
/// derivatives at a point.
pub trait AffineConnection: Send + Sync {
    fn domain(&self) -> Domain;

    fn symbols(&self, p: Point) -> Result<Christoffel>;

    /// `[∂1 Γ, ∂2 Γ]`.
    fn symbol_derivatives(&self, p: Point) -> Result<[Christoffel; 2]>;

    fn check_point(&self, p: Point) -> Result<()> {
        if self.domain().contains(p) {
            Ok(())
        } else {
            Err(Error::Domain(format!("point ({}, {}) outside {:?}", p[0], p[1], self.domain())))
        }
    }
}

impl ChristoffelSpec {
    pub fn constant(coeffs: [f64; 6]) -> ChristoffelSpec {
        ChristoffelSpec { coeffs, kind: Kind::Constant }
    }

    pub fn inverse_x1(coeffs: [f64; 6]) -> ChristoffelSpec {
        ChristoffelSpec { coeffs, kind: Kind::InverseX1 }
    }
}

impl AffineConnection for ChristoffelSpec {
    fn domain(&self) -> Domain {
        match self.kind {
            Kind::Constant => Domain::Plane,
            Kind::InverseX1 => Domain::RightHalfPlane,
        }
    }

    fn symbols(&self, p: Point) -> Result<Christoffel> {
        self.check_point(p)?;
        let g = Christoffel::from_coeffs(self.coeffs);
        Ok(match self.kind {
            Kind::Constant => g,
            Kind::InverseX1 => g.scaled(1.0 / p[0]),
        })
    }

    fn symbol_derivatives(&self, p: Point) -> Result<[Christoffel; 2]> {
        self.check_point(p)?;
        Ok(match self.kind {
            Kind::Constant => [Christoffel::default(); 2],
            Kind::InverseX1 => {
                let g = Christoffel::from_coeffs(self.coeffs);
                [g.scaled(-1.0 / (p[0] * p[0])), Christoffel::default()]
            }
        })
    }
}

/// A connection whose six symbols are arbitrary expressions in `x1`, `x2`.
#[derive(Debug, Clone)]
pub struct ExprConnection {
    pub symbols: [ScalarExpr; 6],
    derivs: [[ScalarExpr; 6]; 2],
    pub domain: Domain,
}

impl ExprConnection {
    pub fn new(symbols: [ScalarExpr; 6], domain: Domain) -> ExprConnection {
        let derivs = [
            symbols.clone().map(|e| e.diff(Var::X1)),
            symbols.clone().map(|e| e.diff(Var::X2)),
        ];
        ExprConnection { symbols, derivs, domain }
    }

    fn eval6(list: &[ScalarExpr; 6], p: Point) -> Result<[f64; 6]> {
        let mut out = [0.0; 6];
        for (o, e) in out.iter_mut().zip(list) {
            *o = e.eval(p)?;
        }
        Ok(out)
    }
}

impl AffineConnection for ExprConnection {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn symbols(&self, p: Point) -> Result<Christoffel> {
        self.check_point(p)?;
        Ok(Christoffel::from_coeffs(Self::eval6(&self.symbols, p)?))
    }

    fn symbol_derivatives(&self, p: Point) -> Result<[Christoffel; 2]> {
        self.check_point(p)?;
        Ok([
            Christoffel::from_coeffs(Self::eval6(&self.derivs[0], p)?),
            Christoffel::from_coeffs(Self::eval6(&self.derivs[1], p)?),
        ])
    }
}

/// Either a constant / inverse-x1 spec or an expression-valued connection.
#[derive(Debug, Clone)]
pub enum Connection {
    Spec(ChristoffelSpec),
    Expr(ExprConnection),
}

impl Connection {
    pub fn spec(&self) -> Option<&ChristoffelSpec> {
        match self {
            Connection::Spec(s) => Some(s),
            Connection::Expr(_) => None,
        }
    }
}

impl AffineConnection for Connection {
    fn domain(&self) -> Domain {
        match self {
            Connection::Spec(s) => s.domain(),
            Connection::Expr(e) => e.domain(),
        }
    }

    fn symbols(&self, p: Point) -> Result<Christoffel> {
        match self {
            Connection::Spec(s) => s.symbols(p),
            Connection::Expr(e) => e.symbols(p),
        }
    }

    fn symbol_derivatives(&self, p: Point) -> Result<[Christoffel; 2]> {
        match self {
            Connection::Spec(s) => s.symbol_derivatives(p),
            Connection::Expr(e) => e.symbol_derivatives(p),
        }
    }
}

pub fn christoffel_at<C: AffineConnection + ?Sized>(conn: &C, p: Point) -> Result<[f64; 6]> {
    Ok(conn.symbols(p)?.coeffs())
}

pub fn curvature_at<C: AffineConnection + ?Sized>(conn: &C, p: Point) -> Result<Curvature> {
    let g = conn.symbols(p)?.0;
    let dg = conn.symbol_derivatives(p)?;
    let mut r = Curvature::default();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let mut v = dg[i].0[j][k][l] - dg[j].0[i][k][l];
                    for q in 0..2 {
                        v += g[i][q][l] * g[j][k][q] - g[j][q][l] * g[i][k][q];
                    }
                    r.0[i][j][k][l] = v;
                }
            }
        }
    }
    Ok(r)
}

/// `ρ(∂j, ∂k) = Σi R_ijk^i`.
pub fn ricci_at<C: AffineConnection + ?Sized>(conn: &C, p: Point) -> Result<Tensor2> {
    let r = curvature_at(conn, p)?;
    let mut out = Tensor2::zero();
    for j in 0..2 {
        for k in 0..2 {
            out.0[j][k] = r.0[0][j][k][0] + r.0[1][j][k][1];
        }
    }
    Ok(out)
}

pub fn ricci_sym_at<C: AffineConnection + ?Sized>(conn: &C, p: Point) -> Result<Tensor2> {
    Ok(ricci_at(conn, p)?.symmetrize())
}

pub const RANK_TOL: f64 = 1e-9;

/// Number of singular values of ρ_s above `tol · max(1, σ_max)`.
pub fn ricci_rank<C: AffineConnection + ?Sized>(conn: &C, p: Point, tol: f64) -> Result<usize> {
    let sv = ricci_sym_at(conn, p)?.singular_values();
    let cut = tol * sv[0].max(1.0);
    Ok(sv.iter().filter(|s| **s > cut).count())
}

/// Rewrite a constant spec in coordinates `y = A x`.
pub fn linear_change(spec: &ChristoffelSpec, a: [[f64; 2]; 2]) -> Result<ChristoffelSpec> {
    if spec.kind != Kind::Constant {
        return Err(Error::Unsupported("linear change of a non-constant spec".into()));
    }
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det == 0.0 || !det.is_finite() {
        return Err(Error::Degenerate("singular coordinate change".into()));
    }
    let inv = [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]];
    let g = Christoffel::from_coeffs(spec.coeffs).0;
    let mut out = Christoffel::default();
    for p in 0..2 {
        for q in 0..2 {
            for c in 0..2 {
                let mut v = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            v += a[c][k] * g[i][j][k] * inv[i][p] * inv[j][q];
                        }
                    }
                }
                out.0[p][q][c] = v;
            }
        }
    }
    Ok(ChristoffelSpec::constant(out.coeffs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_kind_scales_and_guards() {
        let n43 = ChristoffelSpec::inverse_x1([-1.0, 0.0, 0.0, -1.0, 1.0, 0.0]);
        assert_eq!(christoffel_at(&n43, [2.0, 5.0]).unwrap(), [-0.5, 0.0, 0.0, -0.5, 0.5, 0.0]);
        assert!(matches!(christoffel_at(&n43, [0.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn ricci_anchor() {
        // Γ(0, 0, c, 0, 0, 1 + 2c) at c = 1
        let s = ChristoffelSpec::constant([0.0, 0.0, 1.0, 0.0, 0.0, 3.0]);
        let rho = ricci_at(&s, [0.3, -0.2]).unwrap();
        assert_eq!(rho, Tensor2([[0.0, 0.0], [0.0, 2.0]]));
        assert_eq!(ricci_rank(&s, [0.0, 0.0], RANK_TOL).unwrap(), 1);
    }

    #[test]
    fn linear_change_swap_is_involution() {
        let s = ChristoffelSpec::constant([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let swap = [[0.0, 1.0], [1.0, 0.0]];
        let t = linear_change(&s, swap).unwrap();
        assert_eq!(t.coeffs, [6.0, 5.0, 4.0, 3.0, 2.0, 1.0]);
        assert_eq!(linear_change(&t, swap).unwrap(), s);
    }

    #[test]
    fn singular_values_diag() {
        assert_eq!(Tensor2([[3.0, 0.0], [0.0, -2.0]]).singular_values(), [3.0, 2.0]);
    }
}
