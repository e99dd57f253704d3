//! Problem files: JSON schema, validation and conversion to library types.
//!
//! ```json
//! {
//!   "setX": {"kind": "trig", "d": 1, "r": 2, "s": 4},
//!   "setY": {"kind": "finite", "p": 3},
//!   "g_list": [{"basis": "trig", "terms": [{"freq": [1], "cos": 0.5, "sin": 0.0}]}],
//!   "hierarchy": {"sx": 4},
//!   "seed": 0
//! }
//! ```
//!
//! A general inner set replaces `"setY"` by a set descriptor and `"g_list"`
//! by a single `"g"` on the coordinates `(x, y)`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sosmm_core::matrixsos::MatrixTrigPoly;
use sosmm_core::minmax::BilinearObjective;
use sosmm_core::sosmin::{MonoTerm, Polynomial, TrigTerm};
use sosmm_core::{Kind, SimpleSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, rename = "setX", alias = "set", skip_serializing_if = "Option::is_none")]
    pub set_x: Option<SetSpec>,
    #[serde(default, rename = "setY", skip_serializing_if = "Option::is_none")]
    pub set_y: Option<SetSpec>,
    #[serde(default, alias = "f", skip_serializing_if = "Option::is_none")]
    pub g: Option<PolySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_list: Option<Vec<PolySpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hierarchy: Option<Hierarchy>,
    /// Levels of the two-stage upper bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<u32>>,
    /// Iterations of the alternating scheme.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hierarchy {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sx: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sy: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SetSpec {
    Trig {
        d: usize,
        r: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<u32>,
    },
    Sphere {
        d: usize,
        r: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<u32>,
    },
    Ball {
        d: usize,
        r: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<u32>,
    },
    Boolcube {
        d: usize,
        r: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<u32>,
    },
    /// `d` atoms.
    Discrete {
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<u32>,
    },
    Product {
        factors: Vec<SetSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<u32>,
    },
    /// Finitely many functions `g_1, …, g_p`; only valid as `"setY"`.
    Finite { p: usize },
}

impl SetSpec {
    /// The set at its data degree `r` (level `r`), and the requested level.
    pub fn build(&self) -> Result<(SimpleSet, Option<u32>), String> {
        let simple = |kind: Kind, d: usize, r: u32, s: Option<u32>| {
            SimpleSet::new(kind, d, r).map(|set| (set, s)).map_err(|e| e.to_string())
        };
        match self {
            SetSpec::Trig { d, r, s } => simple(Kind::Trig, *d, *r, *s),
            SetSpec::Sphere { d, r, s } => simple(Kind::Sphere, *d, *r, *s),
            SetSpec::Ball { d, r, s } => simple(Kind::Ball, *d, *r, *s),
            SetSpec::Boolcube { d, r, s } => simple(Kind::BooleanCube, *d, *r, *s),
            SetSpec::Discrete { d, r, s } => simple(Kind::Discrete, *d, r.unwrap_or(1), *s),
            SetSpec::Product { factors, s } => {
                let fs = factors.iter().map(|f| f.build().map(|(set, _)| set)).collect::<Result<Vec<_>, _>>()?;
                SimpleSet::product(fs).map(|set| (set, *s)).map_err(|e| e.to_string())
            }
            SetSpec::Finite { .. } => Err("a finite set of functions is only allowed as \"setY\"".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "lowercase", deny_unknown_fields)]
pub enum PolySpec {
    Trig { terms: Vec<TrigTermSpec> },
    Monomial { terms: Vec<MonoTermSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTermSpec {
    pub freq: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonoTermSpec {
    pub exp: Vec<u32>,
    pub coef: f64,
}

impl PolySpec {
    pub fn build(&self, domain: &SimpleSet) -> Result<Polynomial, String> {
        let p = match self {
            PolySpec::Trig { terms } => Polynomial::trig(
                domain,
                terms.iter().map(|t| TrigTerm { freq: t.freq.clone(), cos: t.cos, sin: t.sin }).collect(),
            ),
            PolySpec::Monomial { terms } => Polynomial::monomial(
                domain,
                terms.iter().map(|t| MonoTerm { exp: t.exp.clone(), coef: t.coef }).collect(),
            ),
        };
        p.map_err(|e| e.to_string())
    }
}

/// Matrix-valued trigonometric polynomial for `verify-matrix-sos`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub d: usize,
    pub r: u32,
    pub s: u32,
    /// Matrix order.
    pub n: usize,
    pub terms: Vec<MatrixTermSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixTermSpec {
    pub freq: Vec<i64>,
    /// Row-major `n × n`.
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Option<Vec<f64>>,
}

impl MatrixSpec {
    pub fn build(&self) -> Result<MatrixTrigPoly, String> {
        let n = self.n;
        let mut p = MatrixTrigPoly::zero(self.d, n);
        for t in &self.terms {
            let mat = |v: &[f64]| {
                if v.len() != n * n {
                    return Err(format!("matrix coefficient has {} entries, expected {}", v.len(), n * n));
                }
                Ok(DMatrix::from_row_slice(n, n, v))
            };
            let c = mat(&t.cos)?;
            let s = match &t.sin {
                Some(v) => mat(v)?,
                None => DMatrix::zeros(n, n),
            };
            p.add_term(&t.freq, c, s).map_err(|e| e.to_string())?;
        }
        Ok(p)
    }
}

/// A validated problem at its hierarchy levels.
#[derive(Debug, Clone)]
pub enum Problem {
    /// One function over a set.
    Min { set: SimpleSet, f: Polynomial },
    MinMax { obj: BilinearObjective },
    /// Matrix polynomial and `(r, s)`.
    Matrix { f: MatrixTrigPoly, r: u32, s: u32 },
}

/// Overrides taken from the command line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub sx: Option<u32>,
    pub sy: Option<u32>,
}

pub fn read(path: &Path) -> Result<ProblemFile, Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| vec![format!("cannot read {}: {e}", path.display())])?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<ProblemFile, Vec<String>> {
    serde_json::from_str(text).map_err(|e| vec![format!("schema: {e}")])
}

/// Structural, dimension and representability checks. Representability is
/// audited at the data degree `r` of each set, never solving anything.
pub fn validate(file: &ProblemFile) -> Vec<String> {
    match build(file, Overrides::default(), true) {
        Ok(_) => Vec::new(),
        Err(errs) => errs,
    }
}

/// Builds the problem at the requested hierarchy levels.
pub fn build(file: &ProblemFile, ov: Overrides, audit_degree: bool) -> Result<Problem, Vec<String>> {
    let mut errs = Vec::new();
    if let Some(m) = &file.matrix {
        if file.set_x.is_some() || file.g.is_some() || file.g_list.is_some() {
            errs.push("schema: \"matrix\" cannot be combined with \"setX\", \"g\" or \"g_list\"".into());
            return Err(errs);
        }
        if m.s < 3 * m.r {
            errs.push(format!("matrix: s = {} is below 3r = {}", m.s, 3 * m.r));
        }
        return match m.build() {
            Ok(f) if errs.is_empty() => Ok(Problem::Matrix { f, r: m.r, s: m.s }),
            Ok(_) => Err(errs),
            Err(e) => {
                errs.push(format!("matrix: {e}"));
                Err(errs)
            }
        };
    }
    let Some(set_x_spec) = &file.set_x else {
        errs.push("schema: missing \"setX\"".into());
        return Err(errs);
    };
    let funcs: Vec<&PolySpec> = match (&file.g, &file.g_list) {
        (Some(g), None) => vec![g],
        (None, Some(list)) if !list.is_empty() => list.iter().collect(),
        (None, Some(_)) => {
            errs.push("schema: \"g_list\" is empty".into());
            return Err(errs);
        }
        (None, None) => {
            errs.push("schema: missing \"g\" and \"g_list\"".into());
            return Err(errs);
        }
        (Some(_), Some(_)) => {
            errs.push("schema: give either \"g\" or \"g_list\", not both".into());
            return Err(errs);
        }
    };
    let (set_x, sx_file) = match set_x_spec.build() {
        Ok(v) => v,
        Err(e) => {
            errs.push(format!("setX: {e}"));
            return Err(errs);
        }
    };
    let hier = file.hierarchy.unwrap_or_default();
    let sx = ov.sx.or(hier.sx).or(sx_file).unwrap_or(set_x.degree());
    let set_x_level = match set_x.with_hierarchy(sx) {
        Ok(s) => s,
        Err(e) => {
            errs.push(format!("hierarchy: {e}"));
            return Err(errs);
        }
    };

    let check = |p: &Polynomial, at_level: &SimpleSet, what: &str, errs: &mut Vec<String>| {
        // `p` lives on the sets at their data degree.
        let audited = if audit_degree { p.check_representable() } else { p.on_domain(at_level).and_then(|q| q.check_representable()) };
        match audited {
            Ok(()) => {}
            Err(e) => errs.push(format!("representability: {what}: {e}")),
        }
    };

    match &file.set_y {
        None | Some(SetSpec::Finite { .. }) => {
            if let Some(SetSpec::Finite { p }) = &file.set_y {
                if *p != funcs.len() {
                    errs.push(format!("dimension: setY declares p = {p} but {} functions are given", funcs.len()));
                }
            }
            let mut polys = Vec::new();
            for (j, spec) in funcs.iter().enumerate() {
                match spec.build(&set_x) {
                    Ok(p) => {
                        check(&p, &set_x_level, &format!("g_{}", j + 1), &mut errs);
                        polys.push(p);
                    }
                    Err(e) => errs.push(format!("dimension: g_{}: {e}", j + 1)),
                }
            }
            if !errs.is_empty() {
                return Err(errs);
            }
            let polys: Vec<Polynomial> = polys.iter().map(|p| p.on_domain(&set_x_level).expect("same coordinates")).collect();
            if file.set_y.is_none() && polys.len() == 1 {
                return Ok(Problem::Min { set: set_x_level, f: polys[0].clone() });
            }
            match BilinearObjective::finite(&set_x_level, polys) {
                Ok(obj) => Ok(Problem::MinMax { obj }),
                Err(e) => Err(vec![e.to_string()]),
            }
        }
        Some(y_spec) => {
            if funcs.len() != 1 || file.g.is_none() {
                errs.push("schema: a set \"setY\" needs a single \"g\" on (x, y)".into());
                return Err(errs);
            }
            let (set_y, sy_file) = match y_spec.build() {
                Ok(v) => v,
                Err(e) => {
                    errs.push(format!("setY: {e}"));
                    return Err(errs);
                }
            };
            let sy = ov.sy.or(hier.sy).or(sy_file).unwrap_or(set_y.degree());
            let set_y_level = match set_y.with_hierarchy(sy) {
                Ok(s) => s,
                Err(e) => {
                    errs.push(format!("hierarchy: {e}"));
                    return Err(errs);
                }
            };
            let prod = match SimpleSet::product(vec![set_x.clone(), set_y.clone()]) {
                Ok(p) => p,
                Err(e) => return Err(vec![e.to_string()]),
            };
            let prod_level = SimpleSet::product(vec![set_x_level.clone(), set_y_level.clone()]).expect("factors are valid");
            let g = match funcs[0].build(&prod) {
                Ok(g) => g,
                Err(e) => {
                    errs.push(format!("dimension: g: {e}"));
                    return Err(errs);
                }
            };
            check(&g, &prod_level, "g", &mut errs);
            if !errs.is_empty() {
                return Err(errs);
            }
            match BilinearObjective::general(&set_x_level, &set_y_level, g) {
                Ok(obj) => Ok(Problem::MinMax { obj }),
                Err(e) => Err(vec![e.to_string()]),
            }
        }
    }
}
