//! Hessian, the quasi-Einstein operator `ℋφ + φρ_s` and checks of the
//! catalogued solution bases.

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{Grid, ModelRecord, ModelRef};
use crate::connection::{ricci_sym_at, AffineConnection, Tensor2};
use crate::error::Result;
use crate::expr::{Point, ScalarExpr, ScalarJet};

pub const QE_TOL: f64 = 1e-8;

/// Lowest residual a perturbed basis element must reach to count as detected.
pub const MUTATION_FLOOR: f64 = 1e-4;

/// `(ℋφ)_ij = ∂i∂jφ − Γij^k ∂kφ` from a precomputed jet.
pub fn hessian_jet<C: AffineConnection + ?Sized>(conn: &C, jet: &ScalarJet, p: Point) -> Result<(f64, Tensor2)> {
    let g = conn.symbols(p)?.0;
    let v = jet.eval(p)?;
    let mut h = Tensor2::zero();
    for i in 0..2 {
        for j in 0..2 {
            h.0[i][j] = v.hess[i][j] - g[i][j][0] * v.grad[0] - g[i][j][1] * v.grad[1];
        }
    }
    Ok((v.value, h))
}

pub fn hessian<C: AffineConnection + ?Sized>(conn: &C, phi: &ScalarExpr, p: Point) -> Result<Tensor2> {
    Ok(hessian_jet(conn, &ScalarJet::new(phi), p)?.1)
}

pub fn qe_residual_jet<C: AffineConnection + ?Sized>(conn: &C, jet: &ScalarJet, p: Point) -> Result<Tensor2> {
    let (v, h) = hessian_jet(conn, jet, p)?;
    Ok(h.add(&ricci_sym_at(conn, p)?.scale(v)))
}

pub fn qe_residual<C: AffineConnection + ?Sized>(conn: &C, phi: &ScalarExpr, p: Point) -> Result<Tensor2> {
    qe_residual_jet(conn, &ScalarJet::new(phi), p)
}

/// Max-norm of the residual over the grid. Points where evaluation fails
/// count as an infinite residual.
pub fn max_residual<C: AffineConnection + ?Sized>(conn: &C, phi: &ScalarExpr, points: &[Point]) -> f64 {
    let jet = ScalarJet::new(phi);
    points
        .par_iter()
        .map(|&p| qe_residual_jet(conn, &jet, p).map(|r| r.max_abs()).unwrap_or(f64::INFINITY))
        .reduce(|| 0.0, f64::max)
}

/// Rows `(φ, ∂1φ, ∂2φ)(P)` of the evaluation map Ξ_P and its determinant.
pub fn xi_matrix(basis: &[ScalarExpr], p: Point) -> Result<([[f64; 3]; 3], f64)> {
    let mut m = [[0.0; 3]; 3];
    for (row, phi) in m.iter_mut().zip(basis) {
        *row = [phi.eval(p)?, phi.diff_axis(0).eval(p)?, phi.diff_axis(1).eval(p)?];
    }
    let det = Matrix3::from_fn(|i, j| m[i][j]).determinant();
    Ok((m, det))
}

#[derive(Debug, Clone, Serialize)]
pub struct QEReport {
    pub model: ModelRef,
    pub grid: Grid,
    pub residuals: Vec<f64>,
    pub xi_det: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn verify_q_basis(rec: &ModelRecord, grid: &Grid) -> QEReport {
    let points = grid.points();
    let residuals: Vec<f64> = rec.q_basis.iter().map(|q| max_residual(&rec.connection, q, &points)).collect();
    let xi_det = if rec.q_basis.len() == 3 {
        xi_matrix(&rec.q_basis, rec.base_point()).ok().map(|(_, d)| d)
    } else {
        None
    };
    let pass = residuals.iter().all(|r| *r <= QE_TOL);
    QEReport { model: rec.model.clone(), grid: *grid, residuals, xi_det, tolerance: QE_TOL, pass }
}

/// The perturbation added to basis elements in mutation controls: `x1`,
/// or `x1²` when `x1` itself already solves the equation.
pub fn mutation_term(rec: &ModelRecord, grid: &Grid) -> ScalarExpr {
    let x1 = ScalarExpr::x1();
    if max_residual(&rec.connection, &x1, &grid.points()) <= QE_TOL {
        ScalarExpr::powi(x1, 2)
    } else {
        x1
    }
}

/// Max grid residual of each basis element after adding `eps · mutation_term`.
pub fn mutation_residuals(rec: &ModelRecord, grid: &Grid, eps: f64) -> Vec<f64> {
    let term = mutation_term(rec, grid).scale(eps);
    let points = grid.points();
    rec.q_basis
        .iter()
        .map(|q| max_residual(&rec.connection, &(q.clone() + term.clone()), &points))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{instantiate, Family};
    use crate::connection::ChristoffelSpec;
    use crate::expr::parse_expr;

    #[test]
    fn hessian_examples() {
        let m46 = ChristoffelSpec::constant([0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let h = hessian(&m46, &parse_expr("x2^2 + 2*x1").unwrap(), [0.3, 0.7]).unwrap();
        assert_eq!(h, Tensor2::zero());
        let m16 = ChristoffelSpec::constant([1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(hessian(&m16, &parse_expr("exp(x1)").unwrap(), [0.5, 0.1]).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn residual_of_non_solution() {
        let flat = ChristoffelSpec::constant([0.0; 6]);
        let r = qe_residual(&flat, &parse_expr("x1^2").unwrap(), [0.4, 0.4]).unwrap();
        assert_eq!(r, Tensor2([[2.0, 0.0], [0.0, 0.0]]));
    }

    #[test]
    fn xi_of_m56_and_repeats() {
        let rec = instantiate(&ModelRef::new(Family::M56, &[])).unwrap();
        let (_, det) = xi_matrix(&rec.q_basis, [0.0, 0.0]).unwrap();
        // rows (1,0,0), (1,1,0), (0,0,1)
        assert!((det - 1.0).abs() < 1e-14);
        let rep = vec![rec.q_basis[1].clone(), rec.q_basis[1].clone(), rec.q_basis[2].clone()];
        assert_eq!(xi_matrix(&rep, [0.0, 0.0]).unwrap().1, 0.0);
    }

    #[test]
    fn m06_xi_is_identity() {
        let rec = instantiate(&ModelRef::new(Family::M06, &[])).unwrap();
        let (m, det) = xi_matrix(&rec.q_basis, [0.0, 0.0]).unwrap();
        assert_eq!(m, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert_eq!(det, 1.0);
    }
}
