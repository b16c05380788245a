use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ModelType {
    A,
    B,
    /// Homogeneous but neither Type A nor Type B (the auxiliary target of Θ_5^4).
    Aux,
}

/// Every model family in the atlas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    M06,
    M16,
    M26,
    M36,
    M46,
    M56,
    M14,
    M24,
    M34,
    M44,
    M54,
    M12,
    M22,
    M32,
    M42,
    M54Tilde,
    N06,
    N16,
    N26,
    N36,
    N46,
    N56,
    N66,
    N14,
    N24,
    N34,
    N13,
    N23,
    N33,
    N43,
}

use Family::*;

pub const SIGN: &str = "sign";

impl Family {
    pub const ALL: [Family; 30] = [
        M06, M16, M26, M36, M46, M56, M14, M24, M34, M44, M54, M12, M22, M32, M42, M54Tilde, N06, N16, N26,
        N36, N46, N56, N66, N14, N24, N34, N13, N23, N33, N43,
    ];

    pub fn id(self) -> &'static str {
        match self {
            M06 => "A.M06",
            M16 => "A.M16",
            M26 => "A.M26",
            M36 => "A.M36",
            M46 => "A.M46",
            M56 => "A.M56",
            M14 => "A.M14",
            M24 => "A.M24",
            M34 => "A.M34",
            M44 => "A.M44",
            M54 => "A.M54",
            M12 => "A.M12",
            M22 => "A.M22",
            M32 => "A.M32",
            M42 => "A.M42",
            M54Tilde => "aux.M54tilde",
            N06 => "B.N06",
            N16 => "B.N16",
            N26 => "B.N26",
            N36 => "B.N36",
            N46 => "B.N46",
            N56 => "B.N56",
            N66 => "B.N66",
            N14 => "B.N14",
            N24 => "B.N24",
            N34 => "B.N34",
            N13 => "B.N13",
            N23 => "B.N23",
            N33 => "B.N33",
            N43 => "B.N43",
        }
    }

    /// Conventional name with sub- and superscript, e.g. `M_2^4(c)`.
    pub fn display_name(self) -> &'static str {
        match self {
            M06 => "M_0^6",
            M16 => "M_1^6",
            M26 => "M_2^6",
            M36 => "M_3^6",
            M46 => "M_4^6",
            M56 => "M_5^6",
            M14 => "M_1^4",
            M24 => "M_2^4(c)",
            M34 => "M_3^4(c)",
            M44 => "M_4^4(c)",
            M54 => "M_5^4(c)",
            M12 => "M_1^2(a1,a2)",
            M22 => "M_2^2(b1,b2)",
            M32 => "M_3^2(c)",
            M42 => "M_4^2(±1)",
            M54Tilde => "M~_5^4(c)",
            N06 => "N_0^6",
            N16 => "N_1^6(±)",
            N26 => "N_2^6(c)",
            N36 => "N_3^6",
            N46 => "N_4^6",
            N56 => "N_5^6",
            N66 => "N_6^6(c)",
            N14 => "N_1^4(κ)",
            N24 => "N_2^4(κ,θ)",
            N34 => "N_3^4(κ)",
            N13 => "N_1^3(±)",
            N23 => "N_2^3(c)",
            N33 => "N_3^3",
            N43 => "N_4^3",
        }
    }

    pub fn model_type(self) -> ModelType {
        match self {
            M54Tilde => ModelType::Aux,
            N06 | N16 | N26 | N36 | N46 | N56 | N66 | N14 | N24 | N34 | N13 | N23 | N33 | N43 => ModelType::B,
            _ => ModelType::A,
        }
    }

    /// Superscript of the family name: the dimension of the Killing algebra.
    pub fn dim_k(self) -> usize {
        match self {
            M06 | M16 | M26 | M36 | M46 | M56 | N06 | N16 | N26 | N36 | N46 | N56 | N66 => 6,
            M14 | M24 | M34 | M44 | M54 | M54Tilde | N14 | N24 | N34 => 4,
            N13 | N23 | N33 | N43 => 3,
            M12 | M22 | M32 | M42 => 2,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            M24 | M34 | M44 | M54 | M32 | M54Tilde | N26 | N66 | N23 => &["c"],
            M12 => &["a1", "a2"],
            M22 => &["b1", "b2"],
            M42 | N16 | N13 => &[SIGN],
            N14 | N34 => &["kappa"],
            N24 => &["kappa", "theta"],
            _ => &[],
        }
    }

    /// Guard texts, in the order they are checked.
    pub fn guards(self) -> &'static [&'static str] {
        match self {
            M24 | M34 | N66 => &["c ∉ {0,−1}"],
            M12 => &["a1a2 ≠ 0", "a1+a2 ≠ 1"],
            M22 => &["b1 ≠ 1"],
            M32 | N26 => &["c ≠ 0"],
            M42 | N16 | N13 => &["sign ∈ {±1}"],
            N14 => &["κ ∉ {0,−1}"],
            N24 => &["θ ≠ 0", "κ ∉ {0,−θ}"],
            N34 => &["κ ≠ 0"],
            _ => &[],
        }
    }

    /// First violated guard, if any. `p` is looked up by parameter name.
    pub(crate) fn violated_guard(self, p: &dyn Fn(&str) -> f64) -> Option<&'static str> {
        let g = self.guards();
        let bad = |i: usize, cond: bool| if cond { Some(g[i]) } else { None };
        match self {
            M24 | M34 | N66 => bad(0, p("c") == 0.0 || p("c") == -1.0),
            M12 => {
                let (a1, a2) = (p("a1"), p("a2"));
                bad(0, a1 * a2 == 0.0).or(bad(1, a1 + a2 == 1.0))
            }
            M22 => bad(0, p("b1") == 1.0),
            M32 | N26 => bad(0, p("c") == 0.0),
            M42 | N16 | N13 => bad(0, p(SIGN).abs() != 1.0),
            N14 => bad(0, p("kappa") == 0.0 || p("kappa") == -1.0),
            N24 => {
                let (k, th) = (p("kappa"), p("theta"));
                bad(0, th == 0.0).or(bad(1, k == 0.0 || k == -th))
            }
            N34 => bad(0, p("kappa") == 0.0),
            _ => None,
        }
    }

    /// Accepts `A.M24`, `M24`, `B.N13plus`, `B.N13p`, `B.N13+`, `N13minus`, ...
    /// Returns the family and the sign encoded in the suffix, if any.
    pub fn parse_id(text: &str) -> Result<(Family, Option<f64>)> {
        let unknown = || Error::UnknownFamily(text.to_string());
        let body = text
            .strip_prefix("A.")
            .or_else(|| text.strip_prefix("B."))
            .or_else(|| text.strip_prefix("aux."))
            .unwrap_or(text);
        let mut best: Option<(Family, &str)> = None;
        for f in Family::ALL {
            let short = f.id().split('.').nth(1).unwrap();
            if let Some(rest) = body.strip_prefix(short) {
                if best.is_none_or(|(b, _)| b.id().len() < f.id().len()) {
                    best = Some((f, rest));
                }
            }
        }
        let (family, rest) = best.ok_or_else(unknown)?;
        if text.contains('.') && family.id() != format!("{}{}", &text[..text.len() - body.len()], &body[..body.len() - rest.len()]) {
            return Err(unknown());
        }
        let sign = match rest {
            "" => None,
            "plus" | "p" | "+" | "pos" => Some(1.0),
            "minus" | "m" | "-" | "neg" => Some(-1.0),
            _ => return Err(unknown()),
        };
        if sign.is_some() && !family.param_names().contains(&SIGN) {
            return Err(unknown());
        }
        Ok((family, sign))
    }
}

pub(crate) const C_SAMPLES: [f64; 4] = [-2.0, -0.5, 1.0 / 3.0, 2.0];

/// Parameter samples used for sweeps.
pub(crate) fn param_samples(f: Family) -> Vec<Vec<(&'static str, f64)>> {
    let c_filtered = |extra: &[f64]| {
        let mut out: Vec<Vec<(&'static str, f64)>> = Vec::new();
        for &c in C_SAMPLES.iter().chain(extra) {
            if f.violated_guard(&|_| c).is_none() {
                out.push(vec![("c", c)]);
            }
        }
        out
    };
    match f {
        M24 | M34 | M32 | N26 | N66 | N23 => c_filtered(&[]),
        M44 | M54 | M54Tilde => c_filtered(&[0.0]),
        M12 => [(2.0, 3.0), (-1.0, 3.0), (0.5, 0.25)].iter().map(|&(a, b)| vec![("a1", a), ("a2", b)]).collect(),
        M22 => [(-1.0, 2.0), (-1.0, -0.5), (2.0, 3.0), (0.5, 0.25)]
            .iter()
            .map(|&(a, b)| vec![("b1", a), ("b2", b)])
            .collect(),
        M42 | N16 | N13 => vec![vec![(SIGN, 1.0)], vec![(SIGN, -1.0)]],
        N14 | N34 => C_SAMPLES
            .iter()
            .filter(|&&k| f.violated_guard(&|_| k).is_none())
            .map(|&k| vec![("kappa", k)])
            .collect(),
        N24 => [(2.0, 3.0), (-1.0, 3.0), (0.5, 0.25), (-0.5, 1.0)]
            .iter()
            .map(|&(k, t)| vec![("kappa", k), ("theta", t)])
            .collect(),
        _ => vec![vec![]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_ids() {
        assert_eq!(Family::parse_id("A.M24").unwrap(), (M24, None));
        assert_eq!(Family::parse_id("M24").unwrap(), (M24, None));
        assert_eq!(Family::parse_id("B.N13p").unwrap(), (N13, Some(1.0)));
        assert_eq!(Family::parse_id("B.N13plus").unwrap(), (N13, Some(1.0)));
        assert_eq!(Family::parse_id("B.N16minus").unwrap(), (N16, Some(-1.0)));
        assert_eq!(Family::parse_id("A.M42+").unwrap(), (M42, Some(1.0)));
        assert_eq!(Family::parse_id("aux.M54tilde").unwrap(), (M54Tilde, None));
        assert!(Family::parse_id("A.M54tildex").is_err());
        assert!(Family::parse_id("B.M24").is_err());
        assert!(Family::parse_id("A.M24p").is_err());
        assert!(Family::parse_id("A.M99").is_err());
        for f in Family::ALL {
            assert_eq!(Family::parse_id(f.id()).unwrap().0, f);
        }
    }

    #[test]
    fn family_counts() {
        let a = Family::ALL.iter().filter(|f| f.model_type() == ModelType::A).count();
        let b = Family::ALL.iter().filter(|f| f.model_type() == ModelType::B).count();
        assert_eq!((a, b), (15, 14));
    }

    #[test]
    fn samples_respect_guards() {
        for f in Family::ALL {
            for s in param_samples(f) {
                let look = |n: &str| s.iter().find(|(k, _)| *k == n).unwrap().1;
                assert!(f.violated_guard(&look).is_none(), "{f:?} {s:?}");
            }
        }
    }
}
