//! Model instances: kinetics families, classification functions, geometry,
//! and control/weight parameters, plus the scenario document format.
//!
//! Two model families are supported. The cooling crystallizer couples a
//! transport equation for the crystal-size distribution to a solute mass
//! balance; the preferential model tracks two enantiomer populations whose
//! kinetics respond to a shared saturation variable. The growth and
//! nucleation laws are a fixed parametric family with closed-form partials:
//!
//! ```text
//! G(x, c) = k_g (c - c_sat) (1 + a_g x),     B(c) = k_b max(c - c_sat, 0)^p_b
//! ```

use crate::grid::{Grid, GridError};
use crate::linearization::LinearizedCoefficients;
use crate::piecewise::{PiecewiseError, PiecewiseFn, Poly};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("unknown model `{0}` (expected `cooling` or `enantiomer`)")]
    UnknownModel(String),
    #[error("missing `model = cooling | enantiomer`")]
    MissingModel,
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("growth rate nonpositive: c = {c} does not exceed c_sat = {c_sat}")]
    GrowthNonpositive { c: f64, c_sat: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Piecewise(#[from] PiecewiseError),
}

/// Cooling-model kinetics and classification functions.
#[derive(Debug, Clone, PartialEq)]
pub struct CoolingKinetics {
    /// growth prefactor `k_g > 0`
    pub kg: f64,
    /// size-dependence slope `a_g >= 0`
    pub ag: f64,
    /// nucleation prefactor `k_b >= 0`
    pub kb: f64,
    /// nucleation exponent `p_b >= 1`
    pub pb: f64,
    /// saturation concentration `c_sat >= 0`
    pub c_sat: f64,
    /// crystal density `rho0 > 0`
    pub rho0: f64,
    /// flow-rate parameter `v > 0`
    pub v: f64,
    /// volumetric shape factor `k_v > 0`
    pub kv: f64,
    /// fines-dissolution function (realistic scenarios have `psi <= 0`)
    pub psi: PiecewiseFn,
    /// product classification function
    pub phi: PiecewiseFn,
}

/// Growth law frozen at an equilibrium concentration: `g(x) = scale (1 + a_g x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumGrowth {
    /// `k_g (cbar - c_sat)`
    pub scale: f64,
    /// `a_g`
    pub ag: f64,
    /// `k_g` (needed for the concentration partial)
    pub kg: f64,
}

impl EquilibriumGrowth {
    pub fn g(&self, x: f64) -> f64 {
        self.scale * (1.0 + self.ag * x)
    }

    pub fn g_prime(&self, _x: f64) -> f64 {
        self.scale * self.ag
    }

    pub fn g_c(&self, x: f64) -> f64 {
        self.kg * (1.0 + self.ag * x)
    }
}

impl CoolingKinetics {
    /// Growth law at fixed concentration; errors when `c <= c_sat`.
    pub fn growth_at(&self, c: f64) -> Result<EquilibriumGrowth, ScenarioError> {
        if c <= self.c_sat {
            return Err(ScenarioError::GrowthNonpositive {
                c,
                c_sat: self.c_sat,
            });
        }
        Ok(EquilibriumGrowth {
            scale: self.kg * (c - self.c_sat),
            ag: self.ag,
            kg: self.kg,
        })
    }
}

/// `G(x, c)` with both partial derivatives; errors when `c <= c_sat` (the
/// growth rate must stay positive).
pub fn eval_growth(
    kinetics: &CoolingKinetics,
    x: f64,
    c: f64,
) -> Result<(f64, f64, f64), ScenarioError> {
    if c <= kinetics.c_sat {
        return Err(ScenarioError::GrowthNonpositive {
            c,
            c_sat: kinetics.c_sat,
        });
    }
    let d = c - kinetics.c_sat;
    let shape = 1.0 + kinetics.ag * x;
    Ok((
        kinetics.kg * d * shape,
        kinetics.kg * d * kinetics.ag,
        kinetics.kg * shape,
    ))
}

/// `B(c)` and `dB/dc`; zero below saturation.
pub fn eval_nucleation(kinetics: &CoolingKinetics, c: f64) -> (f64, f64) {
    let d = c - kinetics.c_sat;
    if d <= 0.0 {
        return (0.0, 0.0);
    }
    let b = kinetics.kb * d.powf(kinetics.pb);
    let db = kinetics.kb * kinetics.pb * d.powf(kinetics.pb - 1.0);
    (b, db)
}

/// Which equilibrium datum pins the cooling steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EquilibriumTarget {
    /// prescribe the equilibrium solute concentration
    Concentration(f64),
    /// prescribe the constant feed concentration; the concentration is then
    /// recovered by a bracketed root solve
    Feed(f64),
}

/// Full cooling-model instance.
#[derive(Debug, Clone, PartialEq)]
pub struct CoolingScenario {
    pub kinetics: CoolingKinetics,
    pub grid: Grid,
    pub target: EquilibriumTarget,
    /// Lyapunov coupling weight `gamma > 0`
    pub gamma: f64,
    /// feedback gain `kappa` (any real; the certificate checks the threshold)
    pub kappa: f64,
    /// weight anchor `rho(0) > 0`
    pub rho_bar: f64,
    /// weight generator, must be positive on the domain
    pub h: PiecewiseFn,
}

/// Per-species data of the preferential model.
#[derive(Debug, Clone, PartialEq)]
pub struct EnantiomerSpecies {
    /// equilibrium growth rate `Gbar_k > 0`
    pub gbar: f64,
    /// equilibrium nucleation rate `Bbar_k > 0`
    pub bbar: f64,
    /// relative growth sensitivity `g_k`
    pub g_slope: f64,
    /// relative nucleation sensitivity `b_k`
    pub b_slope: f64,
    /// weight anchor `rho_k(0) > 0`
    pub rho_bar: f64,
    /// weight generator with positive lower bound `h_k0`
    pub h: PiecewiseFn,
}

/// Full preferential-crystallization instance (two enantiomer species).
#[derive(Debug, Clone, PartialEq)]
pub struct EnantiomerScenario {
    pub species: [EnantiomerSpecies; 2],
    pub psi: PiecewiseFn,
    pub grid: Grid,
    pub gamma: f64,
    /// feedback gain, required positive (the decay rate is `min{h10, h20, kappa}`)
    pub kappa: f64,
}

/// A parsed scenario document.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Cooling(CoolingScenario),
    Enantiomer(EnantiomerScenario),
}

impl Scenario {
    pub fn grid(&self) -> &Grid {
        match self {
            Scenario::Cooling(s) => &s.grid,
            Scenario::Enantiomer(s) => &s.grid,
        }
    }

    /// Returns a copy with the grid resolution replaced.
    pub fn with_n_cells(&self, n_cells: usize) -> Result<Scenario, ScenarioError> {
        let mut out = self.clone();
        let length = self.grid().length();
        let grid = Grid::new(length, n_cells)?;
        match &mut out {
            Scenario::Cooling(s) => s.grid = grid,
            Scenario::Enantiomer(s) => s.grid = grid,
        }
        Ok(out)
    }
}

fn require_positive(value: f64, name: &str) -> Result<(), ScenarioError> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(ScenarioError::Invariant(format!("{name} must be positive")));
    }
    Ok(())
}

fn require_nonnegative(value: f64, name: &str) -> Result<(), ScenarioError> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(ScenarioError::Invariant(format!(
            "{name} must be nonnegative"
        )));
    }
    Ok(())
}

fn require_piecewise_domain(f: &PiecewiseFn, length: f64, name: &str) -> Result<(), ScenarioError> {
    if (f.length() - length).abs() > 0.0 {
        return Err(ScenarioError::Invariant(format!(
            "{name}.breakpoints must end at the domain length {length}"
        )));
    }
    Ok(())
}

impl CoolingScenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let k = &self.kinetics;
        require_positive(k.kg, "k_g")?;
        require_nonnegative(k.ag, "a_g")?;
        require_nonnegative(k.kb, "k_b")?;
        if !(k.pb >= 1.0) {
            return Err(ScenarioError::Invariant("p_b must be at least 1".into()));
        }
        require_nonnegative(k.c_sat, "c_sat")?;
        require_positive(k.rho0, "rho0")?;
        require_positive(k.v, "v")?;
        require_positive(k.kv, "k_v")?;
        let length = self.grid.length();
        require_piecewise_domain(&k.psi, length, "psi")?;
        require_piecewise_domain(&k.phi, length, "phi")?;
        require_piecewise_domain(&self.h, length, "h")?;
        match self.target {
            EquilibriumTarget::Concentration(c) => {
                if !(c > k.c_sat) {
                    return Err(ScenarioError::Invariant(
                        "cbar_target must exceed c_sat".into(),
                    ));
                }
            }
            EquilibriumTarget::Feed(uf) => require_positive(uf, "uf_target")?,
        }
        require_positive(self.gamma, "gamma")?;
        if !self.kappa.is_finite() {
            return Err(ScenarioError::Invariant("kappa must be finite".into()));
        }
        require_positive(self.rho_bar, "rhobar")?;
        if !(self.h.min_on_domain() > 0.0) {
            return Err(ScenarioError::Invariant(
                "h must be positive on [0,ℓ]".into(),
            ));
        }
        Ok(())
    }
}

impl EnantiomerScenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let length = self.grid.length();
        require_piecewise_domain(&self.psi, length, "psi")?;
        require_positive(self.gamma, "gamma")?;
        require_positive(self.kappa, "kappa")?;
        for (k, sp) in self.species.iter().enumerate() {
            let tag = k + 1;
            require_positive(sp.gbar, &format!("gbar_{tag}"))?;
            require_positive(sp.bbar, &format!("bbar_{tag}"))?;
            if !sp.g_slope.is_finite() || !sp.b_slope.is_finite() {
                return Err(ScenarioError::Invariant(format!(
                    "g_{tag} and b_{tag} must be finite"
                )));
            }
            require_positive(sp.rho_bar, &format!("rhobar_{tag}"))?;
            require_piecewise_domain(&sp.h, length, &format!("h_{tag}"))?;
            if !(sp.h.min_on_domain() > 0.0) {
                return Err(ScenarioError::Invariant(format!(
                    "h_{tag} must be positive on [0,ℓ]"
                )));
            }
        }
        Ok(())
    }

    /// Lower bound of `h_k` over the domain (exact for the polynomial pieces).
    pub fn h_floor(&self, k: usize) -> f64 {
        self.species[k].h.min_on_domain()
    }

    /// Theorem decay rate `min{h10, h20, kappa}`.
    pub fn decay_rate(&self) -> f64 {
        self.h_floor(0).min(self.h_floor(1)).min(self.kappa)
    }
}

// ---------------------------------------------------------------------------
// document parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Scalar(f64),
    List(Vec<f64>),
    Nested(Vec<Vec<f64>>),
    Word(String),
}

struct RawDoc {
    // key -> (line number, value)
    entries: BTreeMap<String, (usize, Value)>,
}

impl RawDoc {
    fn take(&mut self, key: &str) -> Option<(usize, Value)> {
        self.entries.remove(key)
    }

    fn take_scalar(&mut self, key: &str, default: f64) -> Result<f64, ScenarioError> {
        match self.take(key) {
            None => Ok(default),
            Some((_, Value::Scalar(v))) => Ok(v),
            Some((line, _)) => Err(ScenarioError::Syntax {
                line,
                message: format!("`{key}` must be a number"),
            }),
        }
    }
}

fn parse_number(token: &str, line: usize) -> Result<f64, ScenarioError> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|_| ScenarioError::Syntax {
            line,
            message: format!("`{}` is not a number", token.trim()),
        })
}

fn split_top_level(body: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, ch) in body.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&body[start..]);
    parts
}

fn parse_value(raw: &str, line: usize) -> Result<Value, ScenarioError> {
    let raw = raw.trim();
    if let Some(stripped) = raw.strip_prefix('[') {
        let Some(body) = stripped.strip_suffix(']') else {
            return Err(ScenarioError::Syntax {
                line,
                message: "unterminated `[`".into(),
            });
        };
        let body = body.trim();
        if body.starts_with('[') {
            let mut rows = Vec::new();
            for part in split_top_level(body) {
                let part = part.trim();
                let inner = part
                    .strip_prefix('[')
                    .and_then(|p| p.strip_suffix(']'))
                    .ok_or_else(|| ScenarioError::Syntax {
                        line,
                        message: "expected `[..]` inside nested list".into(),
                    })?;
                let row = if inner.trim().is_empty() {
                    Vec::new()
                } else {
                    inner
                        .split(',')
                        .map(|t| parse_number(t, line))
                        .collect::<Result<Vec<_>, _>>()?
                };
                rows.push(row);
            }
            return Ok(Value::Nested(rows));
        }
        if body.is_empty() {
            return Ok(Value::List(Vec::new()));
        }
        let items = body
            .split(',')
            .map(|t| parse_number(t, line))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(Value::List(items));
    }
    if let Ok(v) = raw.parse::<f64>() {
        return Ok(Value::Scalar(v));
    }
    Ok(Value::Word(raw.to_string()))
}

fn tokenize(text: &str) -> Result<RawDoc, ScenarioError> {
    let mut entries = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(ScenarioError::Syntax {
                line,
                message: "expected `key = value`".into(),
            });
        };
        let key = content[..eq].trim().to_string();
        if key.is_empty() {
            return Err(ScenarioError::Syntax {
                line,
                message: "empty key".into(),
            });
        }
        let value = parse_value(&content[eq + 1..], line)?;
        if entries.insert(key.clone(), (line, value)).is_some() {
            return Err(ScenarioError::Syntax {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(RawDoc { entries })
}

/// Builds a piecewise function for `name` from `name.breakpoints` and
/// `name.coeffs`, defaulting to the constant `default` when absent.
fn take_piecewise(
    doc: &mut RawDoc,
    name: &str,
    length: f64,
    default: f64,
) -> Result<PiecewiseFn, ScenarioError> {
    let breaks = doc.take(&format!("{name}.breakpoints"));
    let coeffs = doc.take(&format!("{name}.coeffs"));
    match (breaks, coeffs) {
        (None, None) => Ok(PiecewiseFn::constant(default, length)),
        (Some((line, _)), None) => Err(ScenarioError::Syntax {
            line,
            message: format!("`{name}.breakpoints` given without `{name}.coeffs`"),
        }),
        (breaks, Some((line, coeffs_value))) => {
            let rows: Vec<Vec<f64>> = match coeffs_value {
                Value::Nested(rows) => rows,
                Value::List(row) => vec![row],
                _ => {
                    return Err(ScenarioError::Syntax {
                        line,
                        message: format!("`{name}.coeffs` must be a list of coefficient lists"),
                    })
                }
            };
            let break_values = match breaks {
                None if rows.len() == 1 => vec![0.0, length],
                None => {
                    return Err(ScenarioError::Syntax {
                        line,
                        message: format!(
                            "`{name}.breakpoints` required when `{name}.coeffs` has several pieces"
                        ),
                    })
                }
                Some((bline, Value::List(b))) => {
                    if (b.last().copied().unwrap_or(f64::NAN) - length).abs() > 0.0 {
                        return Err(ScenarioError::Syntax {
                            line: bline,
                            message: format!(
                                "`{name}.breakpoints` must end at the domain length {length}"
                            ),
                        });
                    }
                    b
                }
                Some((bline, _)) => {
                    return Err(ScenarioError::Syntax {
                        line: bline,
                        message: format!("`{name}.breakpoints` must be a list of numbers"),
                    })
                }
            };
            let pieces = rows
                .iter()
                .map(|row| Poly::new(row))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(PiecewiseFn::new(break_values, pieces)?)
        }
    }
}

fn finish(doc: RawDoc) -> Result<(), ScenarioError> {
    if let Some((key, (line, _))) = doc.entries.into_iter().next() {
        return Err(ScenarioError::UnknownKey { line, key });
    }
    Ok(())
}

/// Parses a scenario document (see the `cli` module for the full schema).
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut doc = tokenize(text)?;
    let model = match doc.take("model") {
        Some((_, Value::Word(w))) => w,
        Some((line, _)) => {
            return Err(ScenarioError::Syntax {
                line,
                message: "`model` must be `cooling` or `enantiomer`".into(),
            })
        }
        None => return Err(ScenarioError::MissingModel),
    };

    let length = doc.take_scalar("length", 1.0)?;
    let n_cells_f = doc.take_scalar("n_cells", 400.0)?;
    if n_cells_f.fract() != 0.0 || n_cells_f < 0.0 {
        return Err(ScenarioError::Invariant(
            "n_cells must be a nonnegative integer".into(),
        ));
    }
    let grid = Grid::new(length, n_cells_f as usize)?;

    let scenario = match model.as_str() {
        "cooling" => {
            let kg = doc.take_scalar("k_g", 1.0)?;
            let ag = doc.take_scalar("a_g", 0.0)?;
            let kb = doc.take_scalar("k_b", 1.0)?;
            let pb = doc.take_scalar("p_b", 1.0)?;
            let c_sat = doc.take_scalar("c_sat", 0.0)?;
            let rho0 = doc.take_scalar("rho0", 2.0)?;
            let v = doc.take_scalar("v", 1.0)?;
            let kv = doc.take_scalar("k_v", 1.0)?;
            let gamma = doc.take_scalar("gamma", 1.0)?;
            let kappa = doc.take_scalar("kappa", 1.0)?;
            let rho_bar = doc.take_scalar("rhobar", 1.0)?;
            let cbar_target = doc.take("cbar_target");
            let uf_target = doc.take("uf_target");
            let target = match (cbar_target, uf_target) {
                (Some(_), Some(_)) => {
                    return Err(ScenarioError::Invariant(
                        "exactly one of cbar_target and uf_target may be set".into(),
                    ))
                }
                (Some((line, v)), None) => match v {
                    Value::Scalar(c) => EquilibriumTarget::Concentration(c),
                    _ => {
                        return Err(ScenarioError::Syntax {
                            line,
                            message: "`cbar_target` must be a number".into(),
                        })
                    }
                },
                (None, Some((line, v))) => match v {
                    Value::Scalar(u) => EquilibriumTarget::Feed(u),
                    _ => {
                        return Err(ScenarioError::Syntax {
                            line,
                            message: "`uf_target` must be a number".into(),
                        })
                    }
                },
                (None, None) => EquilibriumTarget::Concentration(1.0),
            };
            let psi = take_piecewise(&mut doc, "psi", length, 0.0)?;
            let phi = take_piecewise(&mut doc, "phi", length, 0.0)?;
            let h = take_piecewise(&mut doc, "h", length, 1.0)?;
            finish(doc)?;
            let scenario = CoolingScenario {
                kinetics: CoolingKinetics {
                    kg,
                    ag,
                    kb,
                    pb,
                    c_sat,
                    rho0,
                    v,
                    kv,
                    psi,
                    phi,
                },
                grid,
                target,
                gamma,
                kappa,
                rho_bar,
                h,
            };
            scenario.validate()?;
            Scenario::Cooling(scenario)
        }
        "enantiomer" => {
            let gamma = doc.take_scalar("gamma", 1.0)?;
            let kappa = doc.take_scalar("kappa", 1.0)?;
            let psi = take_piecewise(&mut doc, "psi", length, 0.0)?;
            let mut species = Vec::with_capacity(2);
            for k in 1..=2 {
                let gbar = doc.take_scalar(&format!("gbar_{k}"), 1.0)?;
                let bbar = doc.take_scalar(&format!("bbar_{k}"), 1.0)?;
                let g_slope = doc.take_scalar(&format!("g_{k}"), 1.0)?;
                let b_slope = doc.take_scalar(&format!("b_{k}"), 2.0)?;
                let rho_bar = doc.take_scalar(&format!("rhobar_{k}"), 1.0)?;
                let h = take_piecewise(&mut doc, &format!("h_{k}"), length, 1.0)?;
                species.push(EnantiomerSpecies {
                    gbar,
                    bbar,
                    g_slope,
                    b_slope,
                    rho_bar,
                    h,
                });
            }
            finish(doc)?;
            let scenario = EnantiomerScenario {
                species: [species[0].clone(), species[1].clone()],
                psi,
                grid,
                gamma,
                kappa,
            };
            scenario.validate()?;
            Scenario::Enantiomer(scenario)
        }
        other => return Err(ScenarioError::UnknownModel(other.to_string())),
    };
    Ok(scenario)
}

// ---------------------------------------------------------------------------
// document serialization
// ---------------------------------------------------------------------------

fn write_piecewise(out: &mut String, name: &str, f: &PiecewiseFn) {
    use fmt::Write;
    let breaks: Vec<String> = f.breakpoints().iter().map(|b| format!("{b}")).collect();
    writeln!(out, "{name}.breakpoints = [{}]", breaks.join(", ")).unwrap();
    let rows: Vec<String> = f
        .pieces()
        .iter()
        .map(|p| {
            let c = p.coeffs();
            let deg = (0..4).rev().find(|&i| c[i] != 0.0).unwrap_or(0);
            let row: Vec<String> = c[..=deg].iter().map(|v| format!("{v}")).collect();
            format!("[{}]", row.join(", "))
        })
        .collect();
    writeln!(out, "{name}.coeffs = [{}]", rows.join(", ")).unwrap();
}

impl CoolingScenario {
    pub fn to_document(&self) -> String {
        use fmt::Write;
        let mut out = String::new();
        let k = &self.kinetics;
        writeln!(out, "model = cooling").unwrap();
        writeln!(out, "length = {}", self.grid.length()).unwrap();
        writeln!(out, "n_cells = {}", self.grid.n_cells()).unwrap();
        writeln!(out, "k_g = {}", k.kg).unwrap();
        writeln!(out, "a_g = {}", k.ag).unwrap();
        writeln!(out, "k_b = {}", k.kb).unwrap();
        writeln!(out, "p_b = {}", k.pb).unwrap();
        writeln!(out, "c_sat = {}", k.c_sat).unwrap();
        writeln!(out, "rho0 = {}", k.rho0).unwrap();
        writeln!(out, "v = {}", k.v).unwrap();
        writeln!(out, "k_v = {}", k.kv).unwrap();
        match self.target {
            EquilibriumTarget::Concentration(c) => writeln!(out, "cbar_target = {c}").unwrap(),
            EquilibriumTarget::Feed(u) => writeln!(out, "uf_target = {u}").unwrap(),
        }
        writeln!(out, "gamma = {}", self.gamma).unwrap();
        writeln!(out, "kappa = {}", self.kappa).unwrap();
        writeln!(out, "rhobar = {}", self.rho_bar).unwrap();
        write_piecewise(&mut out, "psi", &k.psi);
        write_piecewise(&mut out, "phi", &k.phi);
        write_piecewise(&mut out, "h", &self.h);
        out
    }
}

impl EnantiomerScenario {
    pub fn to_document(&self) -> String {
        use fmt::Write;
        let mut out = String::new();
        writeln!(out, "model = enantiomer").unwrap();
        writeln!(out, "length = {}", self.grid.length()).unwrap();
        writeln!(out, "n_cells = {}", self.grid.n_cells()).unwrap();
        writeln!(out, "gamma = {}", self.gamma).unwrap();
        writeln!(out, "kappa = {}", self.kappa).unwrap();
        for (i, sp) in self.species.iter().enumerate() {
            let k = i + 1;
            writeln!(out, "gbar_{k} = {}", sp.gbar).unwrap();
            writeln!(out, "bbar_{k} = {}", sp.bbar).unwrap();
            writeln!(out, "g_{k} = {}", sp.g_slope).unwrap();
            writeln!(out, "b_{k} = {}", sp.b_slope).unwrap();
            writeln!(out, "rhobar_{k} = {}", sp.rho_bar).unwrap();
            write_piecewise(&mut out, &format!("h_{k}"), &sp.h);
        }
        write_piecewise(&mut out, "psi", &self.psi);
        out
    }
}

impl Scenario {
    pub fn to_document(&self) -> String {
        match self {
            Scenario::Cooling(s) => s.to_document(),
            Scenario::Enantiomer(s) => s.to_document(),
        }
    }
}

// ---------------------------------------------------------------------------
// sign-condition report
// ---------------------------------------------------------------------------

/// One inequality of the realistic-example sign check.
#[derive(Debug, Clone)]
pub struct SignCondition {
    pub name: &'static str,
    pub satisfied: bool,
    pub detail: String,
}

/// Advisory report: the stability theorem does not require these inequalities,
/// but realistic cooling scenarios satisfy them.
#[derive(Debug, Clone)]
pub struct SignConditionReport {
    pub conditions: Vec<SignCondition>,
    pub all_satisfied: bool,
}

impl fmt::Display for SignConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.conditions {
            let mark = if c.satisfied { "pass" } else { "FAIL" };
            writeln!(f, "[{mark}] {} ({})", c.name, c.detail)?;
        }
        write!(
            f,
            "advisory sign conditions: {}",
            if self.all_satisfied {
                "all hold"
            } else {
                "violated"
            }
        )
    }
}

/// Checks the realistic-example inequalities on a linearized cooling model.
pub fn check_sign_conditions(
    coeffs: &LinearizedCoefficients,
    scenario: &CoolingScenario,
) -> SignConditionReport {
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let rho0 = scenario.kinetics.rho0;
    let psi_max = scenario.kinetics.psi.max_on_domain();
    let g_min = min(&coeffs.g);
    let gc_min = min(&coeffs.g_c);
    let conditions = vec![
        SignCondition {
            name: "rho0 > cbar > 0",
            satisfied: rho0 > coeffs.cbar && coeffs.cbar > 0.0,
            detail: format!("rho0 = {rho0}, cbar = {}", coeffs.cbar),
        },
        SignCondition {
            name: "k0 > 0",
            satisfied: coeffs.k0 > 0.0,
            detail: format!("k0 = {}", coeffs.k0),
        },
        SignCondition {
            name: "k1 > 0",
            satisfied: coeffs.k1 > 0.0,
            detail: format!("k1 = {}", coeffs.k1),
        },
        SignCondition {
            name: "alpha > 0",
            satisfied: coeffs.alpha > 0.0,
            detail: format!("alpha = {}", coeffs.alpha),
        },
        SignCondition {
            name: "b > 0",
            satisfied: coeffs.b > 0.0,
            detail: format!("b = {}", coeffs.b),
        },
        SignCondition {
            name: "g > 0",
            satisfied: g_min > 0.0,
            detail: format!("min g = {g_min}"),
        },
        SignCondition {
            name: "g_c > 0",
            satisfied: gc_min > 0.0,
            detail: format!("min g_c = {gc_min}"),
        },
        SignCondition {
            name: "psi <= 0",
            satisfied: psi_max <= 0.0,
            detail: format!("max psi = {psi_max}"),
        },
    ];
    let all = conditions.iter().all(|c| c.satisfied);
    SignConditionReport {
        conditions,
        all_satisfied: all,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn reference_cooling_document() -> &'static str {
        "model = cooling\n\
         length = 1.0\n\
         n_cells = 200\n\
         k_g = 1.0\n\
         a_g = 0.0\n\
         k_b = 2.0\n\
         p_b = 2.0\n\
         c_sat = 0.5\n\
         rho0 = 3.0\n\
         v = 0.8\n\
         k_v = 0.6\n\
         cbar_target = 1.0\n\
         gamma = 1.2\n\
         kappa = 2.0\n\
         rhobar = 1.5\n\
         psi.coeffs = [[-0.4]]\n\
         phi.coeffs = [[1.0]]\n\
         h.coeffs = [[0.8]]\n"
    }

    #[test]
    fn minimal_cooling_document_fills_defaults() {
        let s = parse_scenario("model = cooling\n").unwrap();
        let Scenario::Cooling(c) = s else {
            panic!("expected cooling")
        };
        assert_eq!(c.grid.n_cells(), 400);
        assert_eq!(c.grid.length(), 1.0);
        assert_eq!(c.target, EquilibriumTarget::Concentration(1.0));
        assert_eq!(c.kinetics.psi.eval(0.5).unwrap(), 0.0);
        assert_eq!(c.h.eval(0.5).unwrap(), 1.0);
        c.validate().unwrap();
    }

    #[test]
    fn explicit_fields_round_trip() {
        let doc = reference_cooling_document();
        let s = parse_scenario(doc).unwrap();
        let Scenario::Cooling(c) = &s else { panic!() };
        assert_eq!(c.kinetics.kb, 2.0);
        assert_eq!(c.kinetics.c_sat, 0.5);
        assert_eq!(c.gamma, 1.2);
        let again = parse_scenario(&s.to_document()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn negative_kv_is_rejected_by_name() {
        let doc = "model = cooling\nk_v = -1\n";
        let err = parse_scenario(doc).unwrap_err();
        assert_eq!(err, ScenarioError::Invariant("k_v must be positive".into()));
    }

    #[test]
    fn zero_h_is_rejected_by_name() {
        let doc = "model = cooling\nh.coeffs = [[0.0]]\n";
        let err = parse_scenario(doc).unwrap_err();
        assert_eq!(
            err,
            ScenarioError::Invariant("h must be positive on [0,ℓ]".into())
        );
    }

    #[test]
    fn h_dipping_negative_inside_is_rejected() {
        // h = 0.1 - x on [0,1] goes negative
        let doc = "model = cooling\nh.coeffs = [[0.1, -1.0]]\n";
        assert!(parse_scenario(doc).is_err());
    }

    #[test]
    fn unknown_model_tag_errors() {
        assert_eq!(
            parse_scenario("model = batch\n").unwrap_err(),
            ScenarioError::UnknownModel("batch".into())
        );
    }

    #[test]
    fn unknown_key_reports_line() {
        let doc = "model = cooling\nbogus = 1\n";
        match parse_scenario(doc).unwrap_err() {
            ScenarioError::UnknownKey { line, key } => {
                assert_eq!(line, 2);
                assert_eq!(key, "bogus");
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        match parse_scenario("model = cooling\nk_g = [1, \n").unwrap_err() {
            ScenarioError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn both_targets_rejected() {
        let doc = "model = cooling\ncbar_target = 1.0\nuf_target = 2.0\n";
        assert!(matches!(
            parse_scenario(doc),
            Err(ScenarioError::Invariant(_))
        ));
    }

    #[test]
    fn multi_piece_functions_parse() {
        let doc = "model = cooling\n\
                   psi.breakpoints = [0, 0.5, 1]\n\
                   psi.coeffs = [[-0.4, 0.2], [-0.1]]\n";
        let Scenario::Cooling(c) = parse_scenario(doc).unwrap() else {
            panic!()
        };
        assert!((c.kinetics.psi.eval(0.25).unwrap() + 0.35).abs() < 1e-15);
        assert_eq!(c.kinetics.psi.eval(0.75).unwrap(), -0.1);
    }

    #[test]
    fn enantiomer_document_parses_and_round_trips() {
        let doc = "model = enantiomer\n\
                   n_cells = 100\n\
                   gamma = 1.1\n\
                   kappa = 0.8\n\
                   gbar_1 = 1.0\nbbar_1 = 0.8\ng_1 = 0.6\nb_1 = 1.1\nrhobar_1 = 1.0\n\
                   gbar_2 = 0.7\nbbar_2 = 1.2\ng_2 = -0.3\nb_2 = 0.5\nrhobar_2 = 1.3\n\
                   h_2.coeffs = [[0.9, 0.2]]\n\
                   psi.breakpoints = [0, 0.5, 1]\n\
                   psi.coeffs = [[-0.3], [-0.1]]\n";
        let s = parse_scenario(doc).unwrap();
        let Scenario::Enantiomer(e) = &s else {
            panic!()
        };
        assert_eq!(e.species[1].g_slope, -0.3);
        assert_eq!(e.decay_rate(), 0.8);
        assert_eq!(parse_scenario(&s.to_document()).unwrap(), s);
    }

    #[test]
    fn enantiomer_kappa_must_be_positive() {
        let doc = "model = enantiomer\nkappa = 0\n";
        assert_eq!(
            parse_scenario(doc).unwrap_err(),
            ScenarioError::Invariant("kappa must be positive".into())
        );
    }

    #[test]
    fn growth_family_evaluates_with_partials() {
        let k = CoolingKinetics {
            kg: 1.0,
            ag: 0.0,
            kb: 1.0,
            pb: 1.0,
            c_sat: 0.0,
            rho0: 2.0,
            v: 1.0,
            kv: 1.0,
            psi: PiecewiseFn::constant(0.0, 1.0),
            phi: PiecewiseFn::constant(0.0, 1.0),
        };
        let (g, gx, gc) = eval_growth(&k, 0.7, 2.0).unwrap();
        assert_eq!((g, gx, gc), (2.0, 0.0, 1.0));

        let k2 = CoolingKinetics {
            kg: 1.0,
            ag: 1.0,
            c_sat: 1.0,
            ..k.clone()
        };
        let (g, gx, gc) = eval_growth(&k2, 0.5, 2.0).unwrap();
        assert!((g - 1.5).abs() < 1e-15);
        assert!((gx - 1.0).abs() < 1e-15);
        assert!((gc - 1.5).abs() < 1e-15);

        assert!(matches!(
            eval_growth(&k, 0.0, 0.0),
            Err(ScenarioError::GrowthNonpositive { .. })
        ));
    }

    #[test]
    fn nucleation_family_evaluates_with_derivative() {
        let base = CoolingKinetics {
            kg: 1.0,
            ag: 0.0,
            kb: 2.0,
            pb: 1.0,
            c_sat: 1.0,
            rho0: 2.0,
            v: 1.0,
            kv: 1.0,
            psi: PiecewiseFn::constant(0.0, 1.0),
            phi: PiecewiseFn::constant(0.0, 1.0),
        };
        assert_eq!(eval_nucleation(&base, 2.0), (2.0, 2.0));
        let quad = CoolingKinetics {
            kb: 1.0,
            pb: 2.0,
            ..base.clone()
        };
        assert_eq!(eval_nucleation(&quad, 1.0), (0.0, 0.0));
        assert_eq!(eval_nucleation(&quad, 4.0), (9.0, 6.0));
    }

    #[test]
    fn growth_and_nucleation_monotone_in_concentration() {
        let k = CoolingKinetics {
            kg: 0.7,
            ag: 0.3,
            kb: 1.4,
            pb: 1.7,
            c_sat: 0.5,
            rho0: 2.0,
            v: 1.0,
            kv: 1.0,
            psi: PiecewiseFn::constant(0.0, 1.0),
            phi: PiecewiseFn::constant(0.0, 1.0),
        };
        let mut prev_g = 0.0;
        let mut prev_b = 0.0;
        for i in 1..50 {
            let c = 0.5 + 0.05 * i as f64;
            let (g, _, _) = eval_growth(&k, 0.3, c).unwrap();
            let (b, _) = eval_nucleation(&k, c);
            assert!(g > prev_g);
            assert!(b >= prev_b);
            prev_g = g;
            prev_b = b;
        }
    }

    proptest! {
        // parse ∘ serialize is the identity on valid scenarios
        #[test]
        fn document_round_trip_is_identity(
            kb in 0.1..3.0f64,
            pb in 1.0..3.0f64,
            v in 0.1..2.0f64,
            kv in 0.1..2.0f64,
            gamma in 0.1..3.0f64,
            kappa in -2.0..3.0f64,
            psi0 in -1.0..0.0f64,
            h0 in 0.1..2.0f64,
            split in 0.25..0.75f64,
        ) {
            let doc = format!(
                "model = cooling\nn_cells = 50\nk_b = {kb}\np_b = {pb}\nv = {v}\nk_v = {kv}\n\
                 gamma = {gamma}\nkappa = {kappa}\nrhobar = 1.25\ncbar_target = 1.0\n\
                 psi.breakpoints = [0, {split}, 1]\npsi.coeffs = [[{psi0}], [0]]\n\
                 h.coeffs = [[{h0}]]\n"
            );
            let s = parse_scenario(&doc).unwrap();
            let round = parse_scenario(&s.to_document()).unwrap();
            prop_assert_eq!(s, round);
        }
    }
}
