//! TOML descriptions of coefficient functions, coefficient systems,
//! operator specs, and problem families.
//!
//! Coefficient blocks are either a bare expression string or a piecewise
//! list `[{ on = [a, b], expr = "...", sing = { at = "a", alpha = -0.5 } }]`.
//! Matrices are row-major lists of `[re, im]` pairs.

use num_complex::Complex64;
use serde::Deserialize;

use crate::coeffs::{parse, CoefficientFunction, Piece, PieceEnd};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::operator::{FunctionalData, OperatorSpec, PEntry};
use crate::problems::{self, MeasureFunction, MonotoneMap};
use crate::quasisystem::CoefficientSystem;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CoefficientConfig {
    Expression(String),
    Pieces(Vec<PieceConfig>),
}

#[derive(Debug, Clone, Deserialize)]
pub struct PieceConfig {
    pub on: [f64; 2],
    pub expr: String,
    #[serde(default)]
    pub sing: Option<SingularityConfig>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SingularityConfig {
    /// "a" for the lower endpoint, "b" for the upper.
    pub at: String,
    pub alpha: f64,
}

impl CoefficientConfig {
    pub fn build(&self) -> Result<CoefficientFunction> {
        match self {
            CoefficientConfig::Expression(src) => CoefficientFunction::parse(src),
            CoefficientConfig::Pieces(pieces) => {
                let mut out = Vec::with_capacity(pieces.len());
                for pc in pieces {
                    let sing = match &pc.sing {
                        None => None,
                        Some(s) => {
                            let end = match s.at.as_str() {
                                "a" => PieceEnd::Lower,
                                "b" => PieceEnd::Upper,
                                other => {
                                    return Err(Error::Config(format!(
                                        "sing.at must be \"a\" or \"b\", got {:?}",
                                        other
                                    )))
                                }
                            };
                            Some((end, s.alpha))
                        }
                    };
                    out.push(Piece {
                        lo: pc.on[0],
                        hi: pc.on[1],
                        expr: parse::parse(&pc.expr)?,
                        sing,
                    });
                }
                CoefficientFunction::from_pieces(out)
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct SystemConfig {
    pub order: usize,
    pub entries: Vec<SystemEntryConfig>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SystemEntryConfig {
    pub i: usize,
    pub j: usize,
    #[serde(flatten)]
    pub function: FunctionField,
}

/// A coefficient under either an `expr = "..."` key or a `pieces = [...]`
/// key.
#[derive(Debug, Clone, Deserialize)]
pub struct FunctionField {
    #[serde(default)]
    pub expr: Option<String>,
    #[serde(default)]
    pub pieces: Option<Vec<PieceConfig>>,
}

impl FunctionField {
    pub fn build(&self) -> Result<CoefficientFunction> {
        match (&self.expr, &self.pieces) {
            (Some(src), None) => CoefficientFunction::parse(src),
            (None, Some(pieces)) => CoefficientConfig::Pieces(pieces.clone()).build(),
            _ => Err(Error::Config(
                "coefficient needs exactly one of `expr` or `pieces`".into(),
            )),
        }
    }
}

impl SystemConfig {
    pub fn build(&self) -> Result<CoefficientSystem> {
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            entries.push(((e.i, e.j), e.function.build()?));
        }
        Ok(CoefficientSystem::new(self.order, entries))
    }
}

fn build_matrix(rows: usize, cols: usize, data: &[[f64; 2]], name: &str) -> Result<CMat> {
    if data.len() != rows * cols {
        return Err(Error::Config(format!(
            "{} needs {} complex pairs (row-major {}x{}), got {}",
            name,
            rows * cols,
            rows,
            cols,
            data.len()
        )));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| {
        let [re, im] = data[i * cols + j];
        Complex64::new(re, im)
    }))
}

#[derive(Debug, Clone, Deserialize)]
pub struct PEntryConfig {
    pub i: usize,
    pub j: usize,
    #[serde(flatten)]
    pub function: FunctionField,
    /// Optional lambda-linear part.
    #[serde(default)]
    pub lambda_expr: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RawSpecConfig {
    pub n: usize,
    pub m: usize,
    pub s: f64,
    pub a: SystemConfig,
    pub b: SystemConfig,
    pub u: Vec<[f64; 2]>,
    pub v: Vec<[f64; 2]>,
    pub q_matrix: Vec<[f64; 2]>,
    pub p: Vec<PEntryConfig>,
}

impl RawSpecConfig {
    pub fn build(&self) -> Result<OperatorSpec> {
        let mut p = std::collections::BTreeMap::new();
        for entry in &self.p {
            let base = entry.function.build()?;
            let built = match &entry.lambda_expr {
                None => PEntry::of(base),
                Some(src) => PEntry::with_lambda(base, CoefficientFunction::parse(src)?),
            };
            p.insert((entry.i, entry.j), built);
        }
        Ok(OperatorSpec {
            n: self.n,
            m: self.m,
            s: self.s,
            a: self.a.build()?,
            b: self.b.build()?,
            u: build_matrix(2 * self.n, 2 * self.n, &self.u, "u")?,
            v: build_matrix(2 * self.m, 2 * self.m, &self.v, "v")?,
            q: build_matrix(2 * self.m, 2 * self.n, &self.q_matrix, "q_matrix")?,
            p,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct AtomConfig {
    pub at: f64,
    pub weight: f64,
}

/// The `[problem]` block: a family preset or a raw spec.
#[derive(Debug, Clone, Deserialize)]
pub struct ProblemConfig {
    pub family: String,
    #[serde(default)]
    pub p: Option<CoefficientConfig>,
    #[serde(default)]
    pub q: Option<CoefficientConfig>,
    #[serde(default)]
    pub r: Option<CoefficientConfig>,
    /// Monotone map for the measure families: expression string or sample
    /// table.
    #[serde(default)]
    pub h: Option<MonotoneMapConfig>,
    #[serde(default)]
    pub density: Option<CoefficientConfig>,
    #[serde(default)]
    pub atoms: Option<Vec<AtomConfig>>,
    #[serde(default)]
    pub raw: Option<RawSpecConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MonotoneMapConfig {
    Expression(String),
    Samples(Vec<[f64; 2]>),
}

impl MonotoneMapConfig {
    pub fn build(&self) -> Result<MonotoneMap> {
        Ok(match self {
            MonotoneMapConfig::Expression(src) => MonotoneMap::Expression(parse::parse(src)?),
            MonotoneMapConfig::Samples(pts) => {
                MonotoneMap::Samples(pts.iter().map(|&[x, y]| (x, y)).collect())
            }
        })
    }
}

/// A built problem: either a generic operator spec or the dedicated Krein
/// solver.
pub enum BuiltProblem {
    Spec(OperatorSpec),
    Krein(problems::KreinSolver),
}

impl ProblemConfig {
    fn coefficient(&self, field: &Option<CoefficientConfig>, name: &str) -> Result<CoefficientFunction> {
        match field {
            Some(cfg) => cfg.build(),
            None => Err(Error::Config(format!(
                "family {:?} requires the `{}` coefficient",
                self.family, name
            ))),
        }
    }

    fn coefficient_or_zero(&self, field: &Option<CoefficientConfig>) -> Result<CoefficientFunction> {
        match field {
            Some(cfg) => cfg.build(),
            None => Ok(CoefficientFunction::zero()),
        }
    }

    pub fn build(&self) -> Result<BuiltProblem> {
        match self.family.as_str() {
            "beam4" => {
                let p = self.coefficient(&self.p, "p")?;
                let q = self.coefficient_or_zero(&self.q)?;
                let r = self.coefficient_or_zero(&self.r)?;
                Ok(BuiltProblem::Spec(problems::fourth_order_dirichlet(p, q, r)?))
            }
            "beam4-measure" => {
                let h = self
                    .h
                    .as_ref()
                    .ok_or_else(|| Error::Config("beam4-measure requires `h`".into()))?
                    .build()?;
                let q = self.coefficient_or_zero(&self.q)?;
                let r = self.coefficient_or_zero(&self.r)?;
                Ok(BuiltProblem::Spec(problems::fourth_order_measure(&h, q, r)?))
            }
            "periodic3" => {
                let p = self.coefficient_or_zero(&self.p)?;
                let q = self.coefficient_or_zero(&self.q)?;
                Ok(BuiltProblem::Spec(problems::third_order_periodic(p, q)?))
            }
            "schrodinger2" => {
                let q = self.coefficient_or_zero(&self.q)?;
                Ok(BuiltProblem::Spec(problems::second_order_dirichlet(q)?))
            }
            "krein" => {
                let h = match &self.h {
                    Some(cfg) => cfg.build()?,
                    None => MonotoneMap::Expression(crate::coeffs::Expr::X),
                };
                let density = self.coefficient_or_zero(&self.density)?;
                let atoms = self
                    .atoms
                    .clone()
                    .unwrap_or_default()
                    .into_iter()
                    .map(|a| (a.at, a.weight))
                    .collect();
                let measure = MeasureFunction::new(density, atoms)?;
                Ok(BuiltProblem::Krein(problems::krein_feller(&h, measure)?))
            }
            "raw" => {
                let raw = self
                    .raw
                    .as_ref()
                    .ok_or_else(|| Error::Config("family \"raw\" requires a `raw` table".into()))?;
                Ok(BuiltProblem::Spec(raw.build()?))
            }
            other => Err(Error::Config(format!(
                "unknown family {:?}; expected beam4 | beam4-measure | periodic3 | schrodinger2 | krein | raw",
                other
            ))),
        }
    }
}

/// Functional data block: a single expression (the f_0 slot) or the full
/// component list, plus optional boundary values.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FunctionalConfig {
    Single(String),
    Components {
        f: Vec<String>,
        #[serde(default)]
        mu: Option<Vec<[f64; 2]>>,
    },
}

impl FunctionalConfig {
    pub fn build(&self, m: usize) -> Result<FunctionalData> {
        match self {
            FunctionalConfig::Single(src) => {
                Ok(FunctionalData::from_f0(m, CoefficientFunction::parse(src)?))
            }
            FunctionalConfig::Components { f, mu } => {
                if f.len() != m + 1 {
                    return Err(Error::Config(format!(
                        "functional data needs {} components, got {}",
                        m + 1,
                        f.len()
                    )));
                }
                let mut data = FunctionalData::zero(m);
                for (k, src) in f.iter().enumerate() {
                    data.components[k] = CoefficientFunction::parse(src)?;
                }
                if let Some(mu) = mu {
                    if mu.len() != m {
                        return Err(Error::Config(format!(
                            "mu needs {} entries, got {}",
                            m,
                            mu.len()
                        )));
                    }
                    data.boundary_mu = mu.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                }
                Ok(data)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_piecewise_coefficient() {
        let toml_src = r#"
            order = 1
            entries = [{ i = 0, j = 1, pieces = [
                { on = [0.0, 0.5], expr = "1" },
                { on = [0.5, 1.0], expr = "x", sing = { at = "b", alpha = -0.25 } },
            ] }]
        "#;
        let cfg: SystemConfig = toml::from_str(toml_src).unwrap();
        let system = cfg.build().unwrap();
        let cf = system.entry(0, 1).unwrap();
        assert_eq!(cf.pieces().len(), 2);
        assert!(cf.pieces()[1].sing.is_some());
    }

    #[test]
    fn build_beam_family() {
        let toml_src = r#"
            family = "beam4"
            p = "1"
            q = "step(x - 0.5)"
        "#;
        let cfg: ProblemConfig = toml::from_str(toml_src).unwrap();
        match cfg.build().unwrap() {
            BuiltProblem::Spec(spec) => {
                assert_eq!(spec.n, 2);
                assert_eq!(spec.m, 2);
            }
            _ => panic!("expected a generic spec"),
        }
    }

    #[test]
    fn build_krein_family() {
        let toml_src = r#"
            family = "krein"
            atoms = [{ at = 0.5, weight = 1.0 }]
        "#;
        let cfg: ProblemConfig = toml::from_str(toml_src).unwrap();
        match cfg.build().unwrap() {
            BuiltProblem::Krein(solver) => {
                assert!((solver.measure().total_mass() - 1.0).abs() < 1e-12);
            }
            _ => panic!("expected the krein solver"),
        }
    }

    #[test]
    fn unknown_family_is_a_config_error() {
        let cfg: ProblemConfig = toml::from_str("family = \"heat\"").unwrap();
        assert!(cfg.build().is_err());
    }
}
