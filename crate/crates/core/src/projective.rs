//! Strong projective deformations `Γ ↦ Γ ± (δ a + a δ)` by a linear form,
//! flattening of Type A models, the immersion built from the solution
//! space, and verification of maps between models by pulling back
//! connections.

use std::collections::BTreeMap;

use nalgebra::{Matrix2, Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{instantiate, CatalogMap, ModelRecord, ModelRef, ModelType};
use crate::connection::{
    christoffel_at, curvature_at, linear_change, ricci_at, AffineConnection, ChristoffelSpec, Kind,
};
use crate::error::{Error, Result};
use crate::expr::{MapJet, PlaneMap, Point, ScalarExpr};
use crate::qe::{max_residual, xi_matrix, QE_TOL};

pub const FLAT_TOL: f64 = 1e-10;
pub const MAP_TOL: f64 = 1e-8;
pub const LINE_TOL: f64 = 1e-6;

/// `φ(x) = a1 x1 + a2 x2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearForm {
    pub a1: f64,
    pub a2: f64,
}

impl LinearForm {
    pub fn new(a1: f64, a2: f64) -> LinearForm {
        LinearForm { a1, a2 }
    }

    pub fn zero() -> LinearForm {
        LinearForm::new(0.0, 0.0)
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.a1 * p[0] + self.a2 * p[1]
    }

    pub fn expr(&self) -> ScalarExpr {
        ScalarExpr::sum(vec![ScalarExpr::x1().scale(self.a1), ScalarExpr::x2().scale(self.a2)])
    }

    /// `e^{sφ}` for `s = ±1`.
    pub fn exp(&self, sign: f64) -> ScalarExpr {
        LinearForm::new(sign * self.a1, sign * self.a2).expr().exp()
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.a1, self.a2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `Γ̃ij^k = Γij^k ± (δi^k aj + δj^k ai)`.
pub fn deform(spec: &ChristoffelSpec, phi: LinearForm, sign: Sign) -> Result<ChristoffelSpec> {
    if spec.kind != Kind::Constant {
        return Err(Error::Unsupported("deformation of a non-constant spec".into()));
    }
    let s = sign.value();
    let [a, b, c, d, e, f] = spec.coeffs;
    let (a1, a2) = (phi.a1, phi.a2);
    Ok(ChristoffelSpec::constant([a + s * 2.0 * a1, b, c + s * a2, d + s * a1, e, f + s * 2.0 * a2]))
}

/// Real roots of `x³ + p x² + q x + r`, from the eigenvalues of the
/// companion matrix, each polished by a few Newton steps.
pub fn cubic_real_roots(p: f64, q: f64, r: f64) -> Vec<f64> {
    let f = |x: f64| ((x + p) * x + q) * x + r;
    let df = |x: f64| (3.0 * x + 2.0 * p) * x + q;
    let bound = 1.0 + p.abs().max(q.abs()).max(r.abs());
    let mut roots: Vec<f64> = if r == 0.0 {
        // x (x² + p x + q)
        let disc = p * p - 4.0 * q;
        let mut out = vec![0.0];
        if disc >= 0.0 {
            let s = -0.5 * (p + p.signum() * disc.sqrt());
            if s != 0.0 {
                out.extend([s, q / s]);
            } else {
                out.extend([0.0, 0.0]);
            }
        }
        out
    } else {
        let m = Matrix3::new(-p, -q, -r, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        match m.try_schur(f64::EPSILON, 1000) {
            Some(schur) => real_clusters(schur.complex_eigenvalues().as_slice(), bound),
            None => vec![bisect(&f, -bound, bound)],
        }
    };
    for x in roots.iter_mut() {
        for _ in 0..4 {
            let d = df(*x);
            if d == 0.0 {
                break;
            }
            let next = *x - f(*x) / d;
            if !next.is_finite() || f(next).abs() >= f(*x).abs() {
                break;
            }
            *x = next;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Eigenvalues of a repeated root scatter by about `ε^{1/m}`; close
/// eigenvalues are merged into their mean, which is far more accurate.
fn real_clusters(z: &[nalgebra::Complex<f64>], bound: f64) -> Vec<f64> {
    let close = 1e-3 * bound;
    let mut used = vec![false; z.len()];
    let mut out = Vec::new();
    for i in 0..z.len() {
        if used[i] {
            continue;
        }
        let group: Vec<usize> = (i..z.len()).filter(|&j| !used[j] && (z[j] - z[i]).norm() <= close).collect();
        let mean = group.iter().map(|&j| z[j]).sum::<nalgebra::Complex<f64>>() / group.len() as f64;
        for &j in &group {
            used[j] = true;
        }
        if mean.im.abs() <= 1e-9 * bound {
            out.extend(std::iter::repeat_n(mean.re, group.len()));
        }
    }
    out
}

/// Sign change of `f` on `[lo, hi]` with `f(lo) < 0 < f(hi)`.
fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest `|x|`, ties toward the negative root.
fn pick_root(roots: &[f64]) -> Option<f64> {
    roots.iter().copied().min_by(|x, y| x.abs().total_cmp(&y.abs()).then(x.total_cmp(y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlattenBranch {
    /// `Γ11² ≠ 0`.
    Direct,
    /// `Γ11² = 0`, `Γ22¹ ≠ 0`: coordinates swapped first.
    Swapped,
    /// `Γ11² = Γ22¹ = 0`.
    Diagonal,
}

/// Linear form in rescaled coordinates where `Γ11² = 1`, then mapped back.
fn branch_one(spec: &ChristoffelSpec) -> Result<LinearForm> {
    let lambda = 1.0 / spec.coeffs[1];
    let a = [[1.0, 0.0], [0.0, lambda]];
    let g = linear_change(spec, a)?.coeffs;
    let [g111, _, g121, g122, g221, g222] = g;
    let b = -2.0 * g121 + g111 * g122 - g122 * g122 + g222;
    // (a1 − Γ12²)(a1² − Γ11¹ a1 + b) − Γ22¹
    let p = -(g111 + g122);
    let q = b + g111 * g122;
    let r = -g122 * b - g221;
    let a1 = pick_root(&cubic_real_roots(p, q, r)).ok_or_else(|| Error::Degenerate("cubic without real root".into()))?;
    let a2 = a1 * a1 - a1 * g111 - g121 + g111 * g122 - g122 * g122 + g222;
    // φ(x) = a'·(A x) = (Aᵀ a')·x
    Ok(LinearForm::new(a[0][0] * a1 + a[1][0] * a2, a[0][1] * a1 + a[1][1] * a2))
}

pub fn flatten_form(spec: &ChristoffelSpec) -> Result<(LinearForm, FlattenBranch)> {
    if spec.kind != Kind::Constant {
        return Err(Error::Unsupported("flattening applies to constant specs only".into()));
    }
    let [_, g112, g121, g122, g221, _] = spec.coeffs;
    if g112 != 0.0 {
        Ok((branch_one(spec)?, FlattenBranch::Direct))
    } else if g221 != 0.0 {
        let swapped = linear_change(spec, [[0.0, 1.0], [1.0, 0.0]])?;
        let phi = branch_one(&swapped)?;
        Ok((LinearForm::new(phi.a2, phi.a1), FlattenBranch::Swapped))
    } else {
        Ok((LinearForm::new(g122, g121), FlattenBranch::Diagonal))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlattenReport {
    pub model: ModelRef,
    pub phi: [f64; 2],
    pub branch: FlattenBranch,
    pub flat_spec: [f64; 6],
    pub rho_tilde_max: f64,
    pub curvature_tilde_max: f64,
    /// Sign `s` for which `e^{sφ}` solved the equation on the original model.
    pub qe_sign: Option<Sign>,
    pub qe_residual_plus: f64,
    pub qe_residual_minus: f64,
    pub pass: bool,
}

pub fn flatten(rec: &ModelRecord) -> Result<FlattenReport> {
    let spec = match rec.spec() {
        Some(s) if rec.model_type() == ModelType::A => *s,
        _ => return Err(Error::Unsupported(format!("{} is not a Type A model", rec.model))),
    };
    let (phi, branch) = flatten_form(&spec)?;
    let flat = deform(&spec, phi, Sign::Minus)?;
    let p = rec.base_point();
    let rho_tilde_max = ricci_at(&flat, p)?.max_abs();
    let curvature_tilde_max = curvature_at(&flat, p)?.max_abs();
    let points = rec.grid().points();
    let plus = max_residual(&rec.connection, &phi.exp(1.0), &points);
    let minus = max_residual(&rec.connection, &phi.exp(-1.0), &points);
    let qe_sign = if plus <= QE_TOL && plus <= minus {
        Some(Sign::Plus)
    } else if minus <= QE_TOL {
        Some(Sign::Minus)
    } else {
        None
    };
    let pass = rho_tilde_max <= FLAT_TOL && curvature_tilde_max <= FLAT_TOL && qe_sign.is_some();
    Ok(FlattenReport {
        model: rec.model.clone(),
        phi: phi.as_array(),
        branch,
        flat_spec: flat.coeffs,
        rho_tilde_max,
        curvature_tilde_max,
        qe_sign,
        qe_residual_plus: plus,
        qe_residual_minus: minus,
        pass,
    })
}

/// Coordinates of `f` in the basis, from the evaluation matrix at `p`.
fn coordinates(basis: &[ScalarExpr], f: &ScalarExpr, p: Point) -> Result<[f64; 3]> {
    let (m, det) = xi_matrix(basis, p)?;
    if det.abs() < 1e-12 {
        return Err(Error::Degenerate("evaluation map is singular".into()));
    }
    let xi = Matrix3::from_fn(|i, j| m[i][j]);
    let target = Vector3::new(f.eval(p)?, f.diff_axis(0).eval(p)?, f.diff_axis(1).eval(p)?);
    let c = xi.transpose().lu().solve(&target).ok_or_else(|| Error::Degenerate("singular evaluation map".into()))?;
    Ok([c[0], c[1], c[2]])
}

/// `Φ = (q_j/ψ, q_k/ψ)` where `ψ ∈ 𝒬` is nowhere zero and `{ψ, q_j, q_k}`
/// spans 𝒬. Type A uses `ψ = e^{sφ}` from [`flatten`]; Type B uses the
/// first catalog basis element.
pub fn immersion(rec: &ModelRecord) -> Result<PlaneMap> {
    if rec.q_basis.len() != 3 {
        return Err(Error::Unsupported(format!("{} has a {}-dimensional solution space", rec.model, rec.q_basis.len())));
    }
    let domain = rec.domain();
    let (psi, recip) = match rec.model_type() {
        ModelType::A => {
            let rep = flatten(rec)?;
            let s = rep.qe_sign.ok_or_else(|| Error::Degenerate(format!("no exponential solution for {}", rec.model)))?.value();
            let phi = LinearForm::new(rep.phi[0], rep.phi[1]);
            (phi.exp(s), phi.exp(-s))
        }
        _ => (rec.q_basis[0].clone(), rec.q_basis[0].clone().recip()),
    };
    let c = coordinates(&rec.q_basis, &psi, rec.base_point())?;
    // drop the basis element with the largest coefficient of ψ
    let drop = (0..3).max_by(|&i, &j| c[i].abs().total_cmp(&c[j].abs())).unwrap();
    let keep: Vec<usize> = (0..3).filter(|&i| i != drop).collect();
    let comp = |i: usize| (rec.q_basis[i].clone() * recip.clone()).simplify();
    Ok(PlaneMap::new(comp(keep[0]), comp(keep[1]), domain))
}

/// Max normalized distance from the image points to their total least
/// squares line.
pub fn collinearity_residual(points: &[Point]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Degenerate("fewer than two image points".into()));
    }
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let eig = Matrix2::new(sxx, sxy, sxy, syy).symmetric_eigen();
    let (imax, imin) = if eig.eigenvalues[0] >= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let dir = eig.eigenvectors.column(imax);
    let normal = eig.eigenvectors.column(imin);
    let (mut lo, mut hi, mut off) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for p in points {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        let along = dx * dir[0] + dy * dir[1];
        lo = lo.min(along);
        hi = hi.max(along);
        off = off.max((dx * normal[0] + dy * normal[1]).abs());
    }
    let diameter = hi - lo;
    if !(diameter > 1e-12) || !diameter.is_finite() {
        return Err(Error::Degenerate("image is a single point".into()));
    }
    Ok(off / diameter)
}

/// Collinearity residual of `Φ(σ(t))` for a curve `σ` given by its samples.
pub fn line_image_residual(phi: &PlaneMap, curve: &[Point]) -> Result<f64> {
    let image: Vec<Point> = curve.iter().map(|&p| phi.eval(p)).collect::<Result<_>>()?;
    collinearity_residual(&image)
}

/// `Γpull_ij^k = (J⁻¹)^k_c [∂i∂jΦ^c + Γ̃ab^c(Φ(P)) J^a_i J^b_j]`.
pub fn pullback_connection<C: AffineConnection + ?Sized>(jet: &MapJet, target: &C, p: Point) -> Result<[f64; 6]> {
    let (y, j, h) = jet.eval(p)?;
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if det.abs() < 1e-14 || !det.is_finite() {
        return Err(Error::SingularJacobian(p[0], p[1]));
    }
    let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
    let g = target.symbols(y)?.0;
    let mut out = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for jj in 0..2 {
            let mut w = [0.0; 2];
            for (c, wc) in w.iter_mut().enumerate() {
                *wc = h[c][i][jj];
                for a in 0..2 {
                    for b in 0..2 {
                        *wc += g[a][b][c] * j[a][i] * j[b][jj];
                    }
                }
            }
            for k in 0..2 {
                out[i][jj][k] = inv[k][0] * w[0] + inv[k][1] * w[1];
            }
        }
    }
    Ok([out[0][0][0], out[0][0][1], out[0][1][0], out[0][1][1], out[1][1][0], out[1][1][1]])
}

/// Max over the points of `|pullback − source|`. Failed evaluations count
/// as infinite.
pub fn map_residual<S, T>(map: &PlaneMap, source: &S, target: &T, points: &[Point]) -> f64
where
    S: AffineConnection + ?Sized,
    T: AffineConnection + ?Sized,
{
    let jet = map.jet();
    points
        .par_iter()
        .map(|&p| {
            let pulled = pullback_connection(&jet, target, p);
            let own = christoffel_at(source, p);
            match (pulled, own) {
                (Ok(a), Ok(b)) => a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
                _ => f64::INFINITY,
            }
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct MapCheck {
    pub name: &'static str,
    pub target: ModelRef,
    pub residual: f64,
    pub transposed_residual: f64,
    pub pass: bool,
}

pub fn check_map(rec: &ModelRecord, m: &CatalogMap) -> Result<MapCheck> {
    let target = instantiate(&m.target)?;
    let points = rec.grid().points();
    let residual = map_residual(&m.map, &rec.connection, &target.connection, &points);
    let transposed_residual = map_residual(&m.map.transposed(), &rec.connection, &target.connection, &points);
    Ok(MapCheck { name: m.name, target: m.target.clone(), residual, transposed_residual, pass: residual <= MAP_TOL })
}

pub fn verify_affine_map(rec: &ModelRecord) -> Result<Vec<MapCheck>> {
    rec.maps.iter().map(|m| check_map(rec, m)).collect()
}

/// Combined JSON report for one model.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectiveReport {
    pub model: ModelRef,
    pub phi: Option<[f64; 2]>,
    pub rho_tilde_max: Option<f64>,
    pub qe_sign: Option<Sign>,
    pub map_residuals: BTreeMap<&'static str, f64>,
}

pub fn projective_report(rec: &ModelRecord) -> Result<ProjectiveReport> {
    let flat = if rec.model_type() == ModelType::A { Some(flatten(rec)?) } else { None };
    let map_residuals = verify_affine_map(rec)?.into_iter().map(|c| (c.name, c.residual)).collect();
    Ok(ProjectiveReport {
        model: rec.model.clone(),
        phi: flat.as_ref().map(|f| f.phi),
        rho_tilde_max: flat.as_ref().map(|f| f.rho_tilde_max),
        qe_sign: flat.and_then(|f| f.qe_sign),
        map_residuals,
    })
}

/// Smallest `|det J|` of the map over the points.
pub fn min_jacobian(map: &PlaneMap, points: &[Point]) -> Result<f64> {
    let jet = map.jet();
    let mut lo = f64::INFINITY;
    for &p in points {
        let (_, j, _) = jet.eval(p)?;
        lo = lo.min((j[0][0] * j[1][1] - j[0][1] * j[1][0]).abs());
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{samples, Family};
    use crate::connection::ricci_at;
    use crate::expr::Domain;

    fn rec(f: Family, p: &[(&str, f64)]) -> ModelRecord {
        instantiate(&ModelRef::new(f, p)).unwrap()
    }

    #[test]
    fn deform_examples() {
        let flat = ChristoffelSpec::constant([0.0; 6]);
        assert_eq!(deform(&flat, LinearForm::new(1.0, 0.0), Sign::Plus).unwrap().coeffs, [2.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let c = 1.0 / 3.0;
        let m34 = ChristoffelSpec::constant([0.0, 0.0, c, 0.0, 0.0, 1.0 + 2.0 * c]);
        let d = deform(&m34, LinearForm::new(0.0, c), Sign::Minus).unwrap();
        assert!(ricci_at(&d, [0.0, 0.0]).unwrap().max_abs() < 1e-15);
        assert!(deform(&ChristoffelSpec::inverse_x1([0.0; 6]), LinearForm::zero(), Sign::Plus).is_err());
    }

    #[test]
    fn cubic_roots() {
        // (x − 1)(x + 2)(x − 3)
        let r = cubic_real_roots(-2.0, -5.0, 6.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(cubic_real_roots(0.0, 1.0, 0.0), vec![0.0]);
        assert_eq!(cubic_real_roots(0.0, 0.0, 0.0), vec![0.0, 0.0, 0.0]);
        let r = cubic_real_roots(0.0, 1.0, 1.0);
        assert!(r.len() == 1 && (r[0].powi(3) + r[0] + 1.0).abs() < 1e-14);
        assert_eq!(pick_root(&[-1.0, 1.0, 4.0]), Some(-1.0));
        // (x − 1)³
        for x in cubic_real_roots(-3.0, 3.0, -1.0) {
            assert!((x - 1.0).abs() < 1e-12, "{x}");
        }
    }

    #[test]
    fn flatten_examples() {
        let r = flatten(&rec(Family::M34, &[("c", 2.0)])).unwrap();
        assert_eq!(r.phi, [0.0, 2.0]);
        assert_eq!(r.qe_sign, Some(Sign::Plus));
        assert_eq!(flatten(&rec(Family::M06, &[])).unwrap().phi, [0.0, 0.0]);
        let r = flatten(&rec(Family::M12, &[("a1", 2.0), ("a2", 3.0)])).unwrap();
        assert_eq!(r.branch, FlattenBranch::Direct);
        assert!(r.pass, "{r:?}");
        assert!(flatten(&rec(Family::N06, &[])).is_err());
    }

    #[test]
    fn every_type_a_sample_flattens() {
        for m in samples(Some(ModelType::A)) {
            let r = flatten(&instantiate(&m).unwrap()).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn immersion_examples() {
        let phi = immersion(&rec(Family::M06, &[])).unwrap();
        assert_eq!(phi.eval([0.3, -0.7]).unwrap(), [0.3, -0.7]);
        let phi = immersion(&rec(Family::M56, &[])).unwrap();
        let p = [0.4, 1.1];
        let got = phi.eval(p).unwrap();
        assert!((got[0] - p[0].exp() * p[1].cos()).abs() < 1e-14);
        assert!((got[1] - p[0].exp() * p[1].sin()).abs() < 1e-14);
        assert!(immersion(&rec(Family::N13, &[("sign", 1.0)])).is_err());
    }

    #[test]
    fn pullback_identity_and_m46() {
        let flat = ChristoffelSpec::constant([0.0; 6]);
        let id = PlaneMap::identity(Domain::Plane).jet();
        assert_eq!(pullback_connection(&id, &flat, [0.5, 0.5]).unwrap(), [0.0; 6]);
        let theta = PlaneMap::parse("x2", "x2^2 + 2*x1", &[], Domain::Plane).unwrap().jet();
        let g = pullback_connection(&theta, &flat, [0.2, -0.3]).unwrap();
        assert_eq!(g, [0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn collinearity() {
        let line: Vec<Point> = (0..10).map(|i| [i as f64, 2.0 * i as f64 + 1.0]).collect();
        assert!(collinearity_residual(&line).unwrap() < 1e-15);
        let circle: Vec<Point> = (0..10).map(|i| [(i as f64 * 0.5).cos(), (i as f64 * 0.5).sin()]).collect();
        assert!(collinearity_residual(&circle).unwrap() > 1e-3);
        assert!(collinearity_residual(&[[1.0, 1.0], [1.0, 1.0]]).is_err());
    }
}
