//! The atlas of locally homogeneous model connections.
//!
//! Each family is instantiated from a [`ModelRef`] (family plus parameters)
//! into a [`ModelRecord`] carrying the connection, a basis of the solution
//! space Q of the quasi-Einstein equation, a Killing basis, the maps that
//! relate it to other models and the expected completeness flags.

mod families;

use std::collections::BTreeMap;
use std::fmt;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

pub use families::{Family, ModelType, SIGN};

use crate::connection::{ChristoffelSpec, Connection, ExprConnection};
use crate::error::{Error, Result};
use crate::expr::{parse_with, Domain, PlaneMap, Point, ScalarExpr, VectorFieldExpr};

/// A family together with concrete parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRef {
    pub family: Family,
    pub params: BTreeMap<String, f64>,
}

impl ModelRef {
    pub fn new(family: Family, params: &[(&str, f64)]) -> ModelRef {
        ModelRef { family, params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
    }

    /// Parse a family id (with an optional sign suffix) and attach parameters.
    pub fn parse(id: &str, params: &[(&str, f64)]) -> Result<ModelRef> {
        let (family, sign) = Family::parse_id(id)?;
        let mut m = ModelRef::new(family, params);
        if let Some(s) = sign {
            m.params.insert(SIGN.to_string(), s);
        }
        Ok(m)
    }

    pub fn param(&self, name: &str) -> f64 {
        self.params.get(name).copied().unwrap_or(f64::NAN)
    }

    pub fn model_type(&self) -> ModelType {
        self.family.model_type()
    }

    fn bindings(&self) -> Vec<(&str, f64)> {
        self.params.iter().map(|(k, v)| (k.as_str(), *v)).collect()
    }

    /// Check that exactly the family's parameters are present and the guards hold.
    pub fn validate(&self) -> Result<()> {
        let names = self.family.param_names();
        for n in names {
            if !self.params.contains_key(*n) {
                return Err(Error::Parameter(format!("{} requires parameter {n}", self.family.id())));
            }
        }
        for k in self.params.keys() {
            if !names.contains(&k.as_str()) {
                return Err(Error::Parameter(format!("{} takes no parameter {k}", self.family.id())));
            }
        }
        if let Some(v) = self.params.values().find(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite parameter value {v}")));
        }
        match self.family.violated_guard(&|n| self.param(n)) {
            Some(g) => Err(Error::Guard(g.to_string())),
            None => Ok(()),
        }
    }
}

impl fmt::Display for ModelRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family.id())?;
        if !self.params.is_empty() {
            let parts: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "({})", parts.join(","))?;
        }
        Ok(())
    }
}

impl Serialize for ModelRef {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("family", self.family.id())?;
        m.serialize_entry("params", &self.params)?;
        m.end()
    }
}

/// Expected geodesic completeness: settled either way, or left open.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeodesicFlag {
    Complete,
    Incomplete,
    NotClassified,
}

impl GeodesicFlag {
    fn from_bool(b: bool) -> GeodesicFlag {
        if b {
            GeodesicFlag::Complete
        } else {
            GeodesicFlag::Incomplete
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            GeodesicFlag::Complete => Some(true),
            GeodesicFlag::Incomplete => Some(false),
            GeodesicFlag::NotClassified => None,
        }
    }
}

impl Serialize for GeodesicFlag {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.as_bool() {
            Some(b) => s.serialize_bool(b),
            None => s.serialize_str("not-classified"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedFlags {
    pub dim_k: usize,
    /// `None` where the rank is not pinned down by the classification.
    pub ricci_rank: Option<usize>,
    pub killing_complete: bool,
    pub geodesically_complete: GeodesicFlag,
}

/// A map from this model into (an open subset of) another model.
#[derive(Debug, Clone)]
pub struct CatalogMap {
    pub name: &'static str,
    pub map: PlaneMap,
    pub target: ModelRef,
}

/// How much of the geodesic flow has closed-form solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedForm {
    None,
    /// All initial velocities at the base point.
    Full,
    /// Only initial velocities `(a, 0)`.
    AxisOnly,
}

/// Sampling grid `[x1 range] × [x2 range]`, `n × n` points including the corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
    pub n: usize,
}

impl Grid {
    pub fn for_type(t: ModelType) -> Grid {
        match t {
            ModelType::B => Grid { x1: [0.25, 4.0], x2: [-2.0, 2.0], n: 10 },
            _ => Grid { x1: [-1.0, 1.0], x2: [-1.0, 1.0], n: 10 },
        }
    }

    pub fn points(&self) -> Vec<Point> {
        let step = |r: [f64; 2], i: usize| {
            if self.n < 2 {
                r[0]
            } else {
                r[0] + (r[1] - r[0]) * i as f64 / (self.n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.push([step(self.x1, i), step(self.x2, j)]);
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ModelRecord {
    pub model: ModelRef,
    pub connection: Connection,
    pub q_basis: Vec<ScalarExpr>,
    pub killing_basis: Vec<VectorFieldExpr>,
    pub expected: ExpectedFlags,
    pub maps: Vec<CatalogMap>,
    pub closed_form: ClosedForm,
    /// Extra initial velocities at the base point known to give incomplete geodesics.
    pub witness_velocities: Vec<[f64; 2]>,
}

impl ModelRecord {
    pub fn model_type(&self) -> ModelType {
        self.model.model_type()
    }

    pub fn domain(&self) -> Domain {
        match self.model_type() {
            ModelType::B => Domain::RightHalfPlane,
            _ => Domain::Plane,
        }
    }

    pub fn base_point(&self) -> Point {
        match self.model_type() {
            ModelType::B => [1.0, 0.0],
            _ => [0.0, 0.0],
        }
    }

    pub fn grid(&self) -> Grid {
        Grid::for_type(self.model_type())
    }

    pub fn spec(&self) -> Option<&ChristoffelSpec> {
        self.connection.spec()
    }

    /// Serializable summary with all expressions rendered.
    pub fn summary(&self) -> RecordSummary {
        let symbols = match &self.connection {
            Connection::Spec(_) => None,
            Connection::Expr(e) => Some(e.symbols.clone().map(|s| s.to_string())),
        };
        RecordSummary {
            id: self.model.family.id(),
            name: self.model.family.display_name(),
            model_type: self.model_type(),
            params: self.model.params.clone(),
            guards: self.model.family.guards().to_vec(),
            spec: self.spec().map(|s| SpecJson {
                family: self.model.family.id(),
                params: self.model.params.clone(),
                coeffs: s.coeffs,
                kind: s.kind,
            }),
            symbols,
            domain: self.domain(),
            q_basis: self.q_basis.iter().map(|q| q.to_string()).collect(),
            killing_basis: self.killing_basis.iter().map(|k| k.render()).collect(),
            expected: self.expected,
            maps: self
                .maps
                .iter()
                .map(|m| MapSummary {
                    name: m.name,
                    components: [m.map.f1.to_string(), m.map.f2.to_string()],
                    target: m.target.clone(),
                })
                .collect(),
            closed_form_geodesics: self.closed_form,
            witness_velocities: self.witness_velocities.clone(),
        }
    }
}

/// The `{"family","params","coeffs","kind"}` form of a connection.
#[derive(Debug, Clone, Serialize)]
pub struct SpecJson {
    pub family: &'static str,
    pub params: BTreeMap<String, f64>,
    pub coeffs: [f64; 6],
    pub kind: crate::connection::Kind,
}

#[derive(Debug, Clone, Serialize)]
pub struct MapSummary {
    pub name: &'static str,
    pub components: [String; 2],
    pub target: ModelRef,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecordSummary {
    pub id: &'static str,
    pub name: &'static str,
    pub model_type: ModelType,
    pub params: BTreeMap<String, f64>,
    pub guards: Vec<&'static str>,
    pub spec: Option<SpecJson>,
    /// Rendered symbols for connections that are not of constant or `1/x1` kind.
    pub symbols: Option<[String; 6]>,
    pub domain: Domain,
    pub q_basis: Vec<String>,
    pub killing_basis: Vec<[String; 2]>,
    pub expected: ExpectedFlags,
    pub maps: Vec<MapSummary>,
    pub closed_form_geodesics: ClosedForm,
    pub witness_velocities: Vec<[f64; 2]>,
}

/// Christoffel coefficients `(Γ11¹, Γ11², Γ12¹, Γ12², Γ22¹, Γ22²)` of a
/// constant or `1/x1` family. `None` for the auxiliary model.
pub fn coefficients(m: &ModelRef) -> Option<[f64; 6]> {
    use Family::*;
    let p = |n: &str| m.param(n);
    let c = p("c");
    Some(match m.family {
        M06 | N06 => [0.0; 6],
        M16 => [1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        M26 => [-1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        M36 => [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        M46 => [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        M56 => [1.0, 0.0, 0.0, 1.0, -1.0, 0.0],
        M14 => [-1.0, 0.0, 1.0, 0.0, 0.0, 2.0],
        M24 => [-1.0, 0.0, c, 0.0, 0.0, 1.0 + 2.0 * c],
        M34 => [0.0, 0.0, c, 0.0, 0.0, 1.0 + 2.0 * c],
        M44 => [0.0, 0.0, 1.0, 0.0, c, 2.0],
        M54 => [1.0, 0.0, 0.0, 0.0, 1.0 + c * c, 2.0 * c],
        M12 => {
            let (a1, a2) = (p("a1"), p("a2"));
            let d = a1 + a2 - 1.0;
            [a1 * a1 + a2 - 1.0, a1 * a1 - a1, a1 * a2, a1 * a2, a2 * a2 - a2, a1 + a2 * a2 - 1.0].map(|v| v / d)
        }
        M22 => {
            let (b1, b2) = (p("b1"), p("b2"));
            [1.0 + b1, 0.0, b2, 1.0, (1.0 + b2 * b2) / (b1 - 1.0), 0.0]
        }
        M32 => [2.0, 0.0, 0.0, 1.0, c, 1.0],
        M42 => [2.0, 0.0, 0.0, 1.0, p(SIGN), 0.0],
        M54Tilde => return None,
        N16 => [1.0, 0.0, 0.0, 0.0, p(SIGN), 0.0],
        N26 => [c - 1.0, 0.0, 0.0, c, 0.0, 0.0],
        N36 => [-2.0, 1.0, 0.0, -1.0, 0.0, 0.0],
        N46 => [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        N56 => [-1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        N66 => [c, 0.0, 0.0, 0.0, 0.0, 0.0],
        N14 => {
            let k = p("kappa");
            [2.0 * k, 1.0, 0.0, k, 0.0, 0.0]
        }
        N24 => {
            let (k, th) = (p("kappa"), p("theta"));
            [2.0 * k + th - 1.0, 0.0, 0.0, k, 0.0, 0.0]
        }
        N34 => {
            let k = p("kappa");
            [2.0 * k - 1.0, 0.0, 0.0, k, 0.0, 0.0]
        }
        N13 => [-1.5, 0.0, 0.0, -0.5, -0.5 * p(SIGN), 0.0],
        N23 => [-1.5, 0.0, 1.0, -0.5, c, 2.0],
        N33 => [-1.0, 0.0, 0.0, -1.0, -1.0, 0.0],
        N43 => [-1.0, 0.0, 0.0, -1.0, 1.0, 0.0],
    })
}

fn q_strings(f: Family) -> &'static [&'static str] {
    use Family::*;
    match f {
        M06 | N06 => &["1", "x1", "x2"],
        M16 => &["1", "exp(x1)", "x2*exp(x1)"],
        M26 => &["1", "exp(x2)", "exp(-x1)"],
        M36 => &["1", "x1", "exp(x2)"],
        M46 => &["1", "x2", "x2^2 + 2*x1"],
        M56 => &["1", "exp(x1)*cos(x2)", "exp(x1)*sin(x2)"],
        M14 => &["exp(x2)", "x2*exp(x2)", "exp(-x1 + x2)"],
        M24 => &["exp(c*x2)", "exp((1 + c)*x2)", "exp(c*x2 - x1)"],
        M34 => &["exp(c*x2)", "exp((1 + c)*x2)", "x1*exp(c*x2)"],
        M44 => &["exp(x2)", "x2*exp(x2)", "(c*x2^2/2 + x1)*exp(x2)"],
        M54 => &["exp(c*x2)*cos(x2)", "exp(c*x2)*sin(x2)", "exp(x1)"],
        M12 => &["exp(x1)", "exp(x2)", "exp(a1*x1 + a2*x2)"],
        M22 => &["exp(x1)*cos(x2)", "exp(x1)*sin(x2)", "exp(b1*x1 + b2*x2)"],
        M32 => &["exp(x1)", "(x1 - c*x2)*exp(x1)", "exp(x1 + x2)"],
        M42 => &["exp(x1)", "x2*exp(x1)", "(2*x1 + sign*x2^2)*exp(x1)"],
        M54Tilde => &["exp(c*x2)*cos(x2)", "exp(c*x2)*sin(x2)", "x1"],
        N16 => &["1", "x2", "x1^2 + sign*x2^2"],
        N26 => &["1", "x1^c", "x1^c*x2"],
        N36 => &["1", "1/x1", "x2/x1 + log(x1)"],
        N46 => &["1", "x1", "x2 + x1*log(x1)"],
        N56 => &["1", "log(x1)", "x2"],
        N66 => &["1", "x1^(1 + c)", "x2"],
        N14 => &["x1^kappa", "x1^(kappa + 1)", "x1^kappa*(x2 + x1*log(x1))"],
        N24 => &["x1^kappa", "x1^kappa*x2", "x1^(kappa + theta)"],
        N34 => &["x1^kappa", "x1^kappa*x2", "x1^kappa*log(x1)"],
        N13 | N23 => &[],
        N33 => &["1/x1", "x2/x1", "(x2^2 - x1^2)/x1"],
        N43 => &["1/x1", "x2/x1", "(x2^2 + x1^2)/x1"],
    }
}

/// `(name, f1, f2, target)` for each catalogued map out of the family.
fn map_data(m: &ModelRef) -> Vec<(&'static str, &'static str, &'static str, ModelRef)> {
    use Family::*;
    let m06 = || ModelRef::new(M06, &[]);
    let m44_0 = || ModelRef::new(M44, &[("c", 0.0)]);
    let m34 = |c: f64| ModelRef::new(M34, &[("c", c)]);
    match m.family {
        M16 => vec![("Θ_1^6", "exp(x1)", "x2*exp(x1)", m06())],
        M26 => vec![("Θ_2^6", "exp(x2)", "exp(-x1)", m06())],
        M36 => vec![("Θ_3^6", "x1", "exp(x2)", m06())],
        M46 => vec![("Θ_4^6", "x2", "x2^2 + 2*x1", m06())],
        M56 => vec![("Θ_5^6", "exp(x1)*cos(x2)", "exp(x1)*sin(x2)", m06())],
        M14 => vec![("Θ_1^4", "exp(-x1)", "x2", m44_0())],
        M24 => vec![("Θ_2^4", "exp(-x1)", "x2", m34(m.param("c")))],
        M44 => vec![("Θ_4^4", "x1 + c*x2^2/2", "x2", m44_0())],
        M54 => vec![("Θ_5^4", "exp(x1)", "x2", ModelRef::new(M54Tilde, &[("c", m.param("c"))]))],
        N06 => vec![("Ψ_0^6", "x1", "x2", m06())],
        N16 => vec![("Ψ_1^6", "x2", "x1^2 + sign*x2^2", m06())],
        N26 => vec![("Ψ_2^6", "x1^c", "x1^c*x2", m06())],
        N36 => vec![("Ψ_3^6", "1/x1", "x2/x1 + log(x1)", m06())],
        N46 => vec![("Ψ_4^6", "x1", "x2 + x1*log(x1)", m06())],
        N56 => vec![("Ψ_5^6", "log(x1)", "x2", m06())],
        N66 => vec![("Ψ_6^6", "x1^(1 + c)", "x2", m06())],
        N14 => vec![("Ψ_1^4", "x2 + x1*log(x1)", "log(x1)", m34(m.param("kappa")))],
        N24 => vec![("Ψ_2^4", "x2", "theta*log(x1)", m34(m.param("kappa") / m.param("theta")))],
        N34 => vec![("Ψ_3^4", "x2", "kappa*log(x1)", m44_0())],
        _ => vec![],
    }
}

/// Generators of the Killing algebra written in the family's own coordinates,
/// for the families that serve as targets of the catalogued maps (and the
/// families with nothing to pull back from).
fn native_killing(m: &ModelRef) -> Option<Vec<(&'static str, &'static str)>> {
    use Family::*;
    Some(match m.family {
        M06 => vec![("1", "0"), ("0", "1"), ("x1", "0"), ("x2", "0"), ("0", "x1"), ("0", "x2")],
        M34 => vec![("1", "0"), ("x1", "0"), ("exp(x2)", "0"), ("-c*x1", "1")],
        M44 if m.param("c") == 0.0 => vec![("x1", "0"), ("x2", "0"), ("1", "0"), ("0", "1")],
        M54Tilde => vec![
            ("x1", "0"),
            ("exp(c*x2)*cos(x2)", "0"),
            ("exp(c*x2)*sin(x2)", "0"),
            ("0", "1"),
        ],
        M12 | M22 | M32 | M42 => vec![("1", "0"), ("0", "1")],
        N13 | N23 => vec![("2*x1*x2", "x2^2"), ("x1", "x2"), ("0", "1")],
        N33 => vec![("2*x1*x2", "x2^2 + x1^2"), ("x1", "x2"), ("0", "1")],
        N43 => vec![("2*x1*x2", "x2^2 - x1^2"), ("x1", "x2"), ("0", "1")],
        _ => return None,
    })
}

fn parse_fields(list: &[(&str, &str)], b: &[(&str, f64)]) -> Result<Vec<VectorFieldExpr>> {
    list.iter().map(|(c1, c2)| VectorFieldExpr::parse(c1, c2, b)).collect()
}

fn killing_basis(m: &ModelRef, maps: &[CatalogMap]) -> Result<Vec<VectorFieldExpr>> {
    if let Some(list) = native_killing(m) {
        return parse_fields(&list, &m.bindings());
    }
    let cm = maps
        .first()
        .ok_or_else(|| Error::Unsupported(format!("no Killing basis for {}", m.family.id())))?;
    let target = native_killing(&cm.target)
        .ok_or_else(|| Error::Unsupported(format!("no Killing basis for {}", cm.target.family.id())))?;
    let fields = parse_fields(&target, &cm.target.bindings())?;
    Ok(fields.iter().map(|f| f.pullback(&cm.map)).collect())
}

fn expected(m: &ModelRef) -> ExpectedFlags {
    use Family::*;
    let f = m.family;
    let dim_k = f.dim_k();
    let ricci_rank = match f.model_type() {
        ModelType::A | ModelType::Aux => Some(match dim_k {
            6 => 0,
            4 => 1,
            _ => 2,
        }),
        ModelType::B => (dim_k == 6).then_some(0),
    };
    let killing_complete = match f {
        M06 | M46 | M34 | M44 | M12 | M22 | M32 | M42 | M54Tilde => true,
        M16 | M26 | M36 | M56 | M14 | M24 | M54 => false,
        // N_0^6 is listed as complete in the classification even though its
        // translation fields leave the half-plane; the flag follows the list.
        N06 | N56 => true,
        N16 | N26 | N36 | N46 | N66 => false,
        N14 | N24 | N34 | N43 => true,
        N13 | N23 | N33 => false,
    };
    let half = |v: f64| (v + 0.5).abs() < 1e-12;
    let geodesically_complete = match f {
        M06 | M46 => GeodesicFlag::Complete,
        M34 => GeodesicFlag::from_bool(half(m.param("c"))),
        M22 => GeodesicFlag::from_bool(m.param("b1") == -1.0),
        M54Tilde => GeodesicFlag::from_bool(m.param("c") == 0.0),
        M16 | M26 | M36 | M56 | M14 | M24 | M44 | M54 | M12 | M32 | M42 => GeodesicFlag::Incomplete,
        N56 => GeodesicFlag::Complete,
        N06 | N16 | N26 | N36 | N46 | N66 => GeodesicFlag::Incomplete,
        N14 => GeodesicFlag::from_bool(half(m.param("kappa"))),
        N24 => GeodesicFlag::from_bool(half(m.param("kappa") / m.param("theta"))),
        N34 => GeodesicFlag::Incomplete,
        N13 | N23 | N33 | N43 => GeodesicFlag::NotClassified,
    };
    ExpectedFlags { dim_k, ricci_rank, killing_complete, geodesically_complete }
}

fn witnesses(m: &ModelRef) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    match m.family {
        Family::M12 => {
            let (a1, a2) = (m.param("a1"), m.param("a2"));
            for (d, v) in [
                (1.0 + a1 + a2, [1.0, 1.0]),
                (1.0 + a1 - a2, [1.0 - a2, a1]),
                (1.0 - a1 + a2, [a2, 1.0 - a1]),
            ] {
                if d.abs() > 1e-12 {
                    out.push([v[0] / d, v[1] / d]);
                }
            }
        }
        Family::M22 => {
            let b1 = m.param("b1");
            if b1 != -1.0 {
                out.push([1.0 / (1.0 + b1), 0.0]);
            }
        }
        _ => {}
    }
    out
}

fn closed_form(f: Family) -> ClosedForm {
    use Family::*;
    match f {
        M06 | M16 | M26 | M36 | M46 | M56 | M14 | M24 | M34 | M44 | M54Tilde => ClosedForm::Full,
        M32 | M42 => ClosedForm::AxisOnly,
        _ => ClosedForm::None,
    }
}

/// Build the full record for a model, checking parameters and guards.
pub fn instantiate(m: &ModelRef) -> Result<ModelRecord> {
    m.validate()?;
    let b = m.bindings();
    let domain = match m.model_type() {
        ModelType::B => Domain::RightHalfPlane,
        _ => Domain::Plane,
    };
    let connection = match (coefficients(m), m.model_type()) {
        (Some(c), ModelType::B) => Connection::Spec(ChristoffelSpec::inverse_x1(c)),
        (Some(c), _) => Connection::Spec(ChristoffelSpec::constant(c)),
        (None, _) => {
            let c = m.param("c");
            let z = ScalarExpr::zero;
            Connection::Expr(ExprConnection::new(
                [z(), z(), z(), z(), ScalarExpr::x1().scale(1.0 + c * c), ScalarExpr::constant(2.0 * c)],
                domain,
            ))
        }
    };
    let q_basis = q_strings(m.family).iter().map(|s| parse_with(s, &b)).collect::<Result<Vec<_>>>()?;
    let maps = map_data(m)
        .into_iter()
        .map(|(name, f1, f2, target)| {
            Ok(CatalogMap { name, map: PlaneMap::parse(f1, f2, &b, domain)?, target })
        })
        .collect::<Result<Vec<_>>>()?;
    let killing_basis = killing_basis(m, &maps)?;
    Ok(ModelRecord {
        model: m.clone(),
        connection,
        q_basis,
        killing_basis,
        expected: expected(m),
        maps,
        closed_form: closed_form(m.family),
        witness_velocities: witnesses(m),
    })
}

/// All sampled parameter choices of the families, optionally restricted to one type.
pub fn samples(filter: Option<ModelType>) -> Vec<ModelRef> {
    Family::ALL
        .iter()
        .filter(|f| filter.is_none_or(|t| f.model_type() == t))
        .flat_map(|&f| families::param_samples(f).into_iter().map(move |p| ModelRef::new(f, &p)))
        .collect()
}

/// Instantiate every sample.
pub fn atlas(filter: Option<ModelType>) -> Result<Vec<ModelRecord>> {
    samples(filter).iter().map(instantiate).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{ricci_rank, RANK_TOL};

    #[test]
    fn all_samples_instantiate() {
        let recs = atlas(None).unwrap();
        assert!(recs.len() > 60);
        for r in &recs {
            assert_eq!(r.killing_basis.len(), r.expected.dim_k, "{}", r.model);
            if r.expected.dim_k != 3 || !matches!(r.model.family, Family::N13 | Family::N23) {
                assert!(r.q_basis.len() == 3 || r.expected.dim_k == 3, "{}", r.model);
            }
        }
    }

    #[test]
    fn guard_messages() {
        let e = instantiate(&ModelRef::new(Family::M24, &[("c", -1.0)])).unwrap_err();
        assert_eq!(e.to_string(), "c ∉ {0,−1} violated");
        let e = instantiate(&ModelRef::new(Family::N24, &[("kappa", -2.0), ("theta", 2.0)])).unwrap_err();
        assert_eq!(e.to_string(), "κ ∉ {0,−θ} violated");
        assert!(matches!(instantiate(&ModelRef::new(Family::M24, &[])), Err(Error::Parameter(_))));
        assert!(matches!(
            instantiate(&ModelRef::new(Family::M06, &[("c", 1.0)])),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn ricci_ranks_of_type_a() {
        for r in atlas(Some(ModelType::A)).unwrap() {
            let rank = ricci_rank(&r.connection, r.base_point(), RANK_TOL).unwrap();
            assert_eq!(Some(rank), r.expected.ricci_rank, "{}", r.model);
        }
    }

    #[test]
    fn summary_has_spec_shape() {
        let r = instantiate(&ModelRef::parse("B.N16minus", &[]).unwrap()).unwrap();
        let s = r.summary();
        let spec = s.spec.unwrap();
        assert_eq!(spec.coeffs, [1.0, 0.0, 0.0, 0.0, -1.0, 0.0]);
        assert_eq!(spec.family, "B.N16");
    }
}
