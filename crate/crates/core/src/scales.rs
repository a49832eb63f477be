//! The four-item verbal scale, its parameter grid, and the catalog of
//! published numeric scales for pairwise comparisons.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScaleError {
    #[error("scale values must satisfy 1 < s < m < l, got ({s}, {m}, {l})")]
    NotIncreasing { s: f64, m: f64, l: f64 },
    #[error("category {category} given with direction {direction:?}")]
    DirectionMismatch {
        category: VerbalCategory,
        direction: Direction,
    },
    #[error("grid step {0} must be positive and finite")]
    InvalidStep(f64),
    #[error("grid bound {name} = {value} leaves no room above 1 + step")]
    InvalidBound { name: &'static str, value: f64 },
    #[error("unknown verbal category '{0}'")]
    UnknownCategory(String),
    #[error("unknown catalog scale '{0}'")]
    UnknownScale(String),
    #[error("parameter {name} = {value} is outside its range ({constraint})")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("scale {scale} takes no parameter {name}")]
    UnexpectedParameter {
        scale: CatalogScaleName,
        name: &'static str,
    },
    #[error("cannot parse scale parameters from '{0}', expected s,m,l")]
    ParseParams(String),
}

/// Verbal answer options, ordered by strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerbalCategory {
    Equal,
    Little,
    Moderate,
    Much,
}

impl VerbalCategory {
    pub const ALL: [VerbalCategory; 4] = [
        VerbalCategory::Equal,
        VerbalCategory::Little,
        VerbalCategory::Moderate,
        VerbalCategory::Much,
    ];

    /// Position on the verbal scale: 0 for Equal up to 3 for Much.
    pub fn steps(self) -> i8 {
        match self {
            VerbalCategory::Equal => 0,
            VerbalCategory::Little => 1,
            VerbalCategory::Moderate => 2,
            VerbalCategory::Much => 3,
        }
    }

    pub fn from_steps(steps: u8) -> Option<Self> {
        VerbalCategory::ALL.get(steps as usize).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VerbalCategory::Equal => "equal",
            VerbalCategory::Little => "little",
            VerbalCategory::Moderate => "moderate",
            VerbalCategory::Much => "much",
        }
    }
}

impl fmt::Display for VerbalCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VerbalCategory {
    type Err = ScaleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "equal" => Ok(VerbalCategory::Equal),
            "little" => Ok(VerbalCategory::Little),
            "moderate" => Ok(VerbalCategory::Moderate),
            "much" => Ok(VerbalCategory::Much),
            other => Err(ScaleError::UnknownCategory(other.to_string())),
        }
    }
}

/// Which side of a matrix entry the judgment favors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    RowPreferred,
    ColumnPreferred,
    None,
}

/// Numeric values assigned to Little, Moderate and Much; Equal is always 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub s: f64,
    pub m: f64,
    pub l: f64,
}

impl ScaleParams {
    pub fn new(s: f64, m: f64, l: f64) -> Result<Self, ScaleError> {
        if !(s.is_finite() && l.is_finite() && 1.0 < s && s < m && m < l) {
            return Err(ScaleError::NotIncreasing { s, m, l });
        }
        Ok(ScaleParams { s, m, l })
    }

    pub fn value(&self, category: VerbalCategory) -> f64 {
        match category {
            VerbalCategory::Equal => 1.0,
            VerbalCategory::Little => self.s,
            VerbalCategory::Moderate => self.m,
            VerbalCategory::Much => self.l,
        }
    }

    /// Entry value for a signed step in `-3..=3`; positive favors the row.
    pub fn signed_value(&self, step: i8) -> f64 {
        let magnitude = VerbalCategory::from_steps(step.unsigned_abs())
            .expect("step magnitude must be at most 3");
        let v = self.value(magnitude);
        if step < 0 {
            1.0 / v
        } else {
            v
        }
    }

    /// Total order on exact values, lexicographic in (s, m, l).
    pub fn lex_cmp(&self, other: &ScaleParams) -> Ordering {
        self.s
            .total_cmp(&other.s)
            .then(self.m.total_cmp(&other.m))
            .then(self.l.total_cmp(&other.l))
    }
}

impl fmt::Display for ScaleParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.s, self.m, self.l)
    }
}

impl FromStr for ScaleParams {
    type Err = ScaleError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = text
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| ScaleError::ParseParams(text.to_string()))?;
        match parts.as_slice() {
            [s, m, l] => ScaleParams::new(*s, *m, *l),
            _ => Err(ScaleError::ParseParams(text.to_string())),
        }
    }
}

pub fn verbal_to_entry(
    category: VerbalCategory,
    direction: Direction,
    params: &ScaleParams,
) -> Result<f64, ScaleError> {
    match (category, direction) {
        (VerbalCategory::Equal, Direction::None) => Ok(1.0),
        (VerbalCategory::Equal, _) | (_, Direction::None) => Err(ScaleError::DirectionMismatch {
            category,
            direction,
        }),
        (c, Direction::RowPreferred) => Ok(params.value(c)),
        (c, Direction::ColumnPreferred) => Ok(1.0 / params.value(c)),
    }
}

/// Bounds and step of the scale parameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub step: f64,
    pub s_max: f64,
    pub m_max: f64,
    pub l_max: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            step: 0.1,
            s_max: 5.0,
            m_max: 10.0,
            l_max: 15.0,
        }
    }
}

impl GridSpec {
    pub fn with_bounds(s_max: f64, m_max: f64, l_max: f64) -> Self {
        GridSpec {
            s_max,
            m_max,
            l_max,
            ..GridSpec::default()
        }
    }

    fn validate(&self) -> Result<(), ScaleError> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(ScaleError::InvalidStep(self.step));
        }
        for (name, value) in [
            ("s_max", self.s_max),
            ("m_max", self.m_max),
            ("l_max", self.l_max),
        ] {
            if !(value.is_finite() && value >= 1.0 + self.step) {
                return Err(ScaleError::InvalidBound { name, value });
            }
        }
        Ok(())
    }

    /// Largest index k with 1 + k * step <= bound.
    fn max_index(&self, bound: f64) -> u32 {
        ((bound - 1.0) / self.step + 1e-9).floor() as u32
    }

    /// Grid value 1 + k * step. When the step is the reciprocal of an
    /// integer the value is formed as (d + k) / d so that it is the correctly
    /// rounded decimal, e.g. index 7 at step 0.1 gives exactly `1.7`.
    pub fn value_at(&self, k: u32) -> f64 {
        let inverse = 1.0 / self.step;
        let denominator = inverse.round();
        if (inverse - denominator).abs() < 1e-9 {
            (denominator + k as f64) / denominator
        } else {
            1.0 + k as f64 * self.step
        }
    }

    pub fn index_bounds(&self) -> (u32, u32, u32) {
        (
            self.max_index(self.s_max),
            self.max_index(self.m_max),
            self.max_index(self.l_max),
        )
    }

    /// Number of grid points without materializing them.
    pub fn cardinality(&self) -> Result<usize, ScaleError> {
        self.validate()?;
        let (ks, km, kl) = self.index_bounds();
        let mut count = 0usize;
        for a in 1..=ks {
            for b in (a + 1)..=km {
                count += kl.saturating_sub(b) as usize;
            }
        }
        Ok(count)
    }

    /// Whether a parameter triple lies within this grid's bounds.
    pub fn contains_bounds(&self, p: &ScaleParams) -> bool {
        p.s <= self.s_max && p.m <= self.m_max && p.l <= self.l_max
    }
}

/// All `(s, m, l)` on the step grid with `1 < s < m < l` inside the bounds,
/// in lexicographic order.
pub fn enumerate_grid(spec: &GridSpec) -> Result<Vec<ScaleParams>, ScaleError> {
    spec.validate()?;
    let (ks, km, kl) = spec.index_bounds();
    let values: Vec<f64> = (0..=kl.max(km).max(ks)).map(|k| spec.value_at(k)).collect();
    let mut grid = Vec::with_capacity(spec.cardinality()?);
    for a in 1..=ks {
        for b in (a + 1)..=km {
            for c in (b + 1)..=kl {
                grid.push(ScaleParams {
                    s: values[a as usize],
                    m: values[b as usize],
                    l: values[c as usize],
                });
            }
        }
    }
    Ok(grid)
}

/// Published numeric scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CatalogScaleName {
    Linear,
    Affine,
    Power,
    Root,
    Geometric,
    InverseLinear,
    Asymptotic,
    Balanced,
    BalancedPower,
    Logarithmic,
    Koczkodaj,
}

impl CatalogScaleName {
    pub const ALL: [CatalogScaleName; 11] = [
        CatalogScaleName::Linear,
        CatalogScaleName::Affine,
        CatalogScaleName::Power,
        CatalogScaleName::Root,
        CatalogScaleName::Geometric,
        CatalogScaleName::InverseLinear,
        CatalogScaleName::Asymptotic,
        CatalogScaleName::Balanced,
        CatalogScaleName::BalancedPower,
        CatalogScaleName::Logarithmic,
        CatalogScaleName::Koczkodaj,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CatalogScaleName::Linear => "linear",
            CatalogScaleName::Affine => "affine",
            CatalogScaleName::Power => "power",
            CatalogScaleName::Root => "root",
            CatalogScaleName::Geometric => "geometric",
            CatalogScaleName::InverseLinear => "inverse-linear",
            CatalogScaleName::Asymptotic => "asymptotic",
            CatalogScaleName::Balanced => "balanced",
            CatalogScaleName::BalancedPower => "balanced-power",
            CatalogScaleName::Logarithmic => "logarithmic",
            CatalogScaleName::Koczkodaj => "koczkodaj",
        }
    }

    /// The value formula as usually written.
    pub fn formula(self) -> &'static str {
        match self {
            CatalogScaleName::Linear => "alpha*x",
            CatalogScaleName::Affine => "alpha*x + beta",
            CatalogScaleName::Power => "x^alpha",
            CatalogScaleName::Root => "x^(1/alpha)",
            CatalogScaleName::Geometric => "alpha^(x-1)",
            CatalogScaleName::InverseLinear => "9/(10-x)",
            CatalogScaleName::Asymptotic => "exp(atanh(sqrt(3)(x-1)/14))",
            CatalogScaleName::Balanced => "(9+y)/(11-y)",
            CatalogScaleName::BalancedPower => "9^((x-1)/(n-1))",
            CatalogScaleName::Logarithmic => "log_alpha(x+alpha-1)",
            CatalogScaleName::Koczkodaj => "1+(x-1)/(n-1)",
        }
    }

    /// The commonly used parameter combination.
    pub fn usual_params(self) -> CatalogParams {
        let none = CatalogParams::default();
        match self {
            CatalogScaleName::Linear => CatalogParams {
                alpha: Some(1.0),
                ..none
            },
            CatalogScaleName::Affine => CatalogParams {
                alpha: Some(0.1),
                beta: Some(1.0),
                ..none
            },
            CatalogScaleName::Power | CatalogScaleName::Root => CatalogParams {
                alpha: Some(2.0),
                ..none
            },
            CatalogScaleName::Geometric => CatalogParams {
                alpha: Some(std::f64::consts::SQRT_2),
                ..none
            },
            CatalogScaleName::InverseLinear
            | CatalogScaleName::Asymptotic
            | CatalogScaleName::Balanced => none,
            CatalogScaleName::BalancedPower | CatalogScaleName::Koczkodaj => {
                CatalogParams { n: Some(9), ..none }
            }
            CatalogScaleName::Logarithmic => CatalogParams {
                alpha: Some(2.0),
                n: Some(9),
                ..none
            },
        }
    }
}

impl fmt::Display for CatalogScaleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CatalogScaleName {
    type Err = ScaleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_lowercase().replace('_', "-");
        CatalogScaleName::ALL
            .into_iter()
            .find(|name| name.as_str() == wanted)
            .ok_or_else(|| ScaleError::UnknownScale(s.to_string()))
    }
}

/// Optional overrides of a catalog scale's parameters; unset fields take
/// the usual choice.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CatalogParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
}

impl CatalogParams {
    fn merged_over(self, base: CatalogParams) -> CatalogParams {
        CatalogParams {
            alpha: self.alpha.or(base.alpha),
            beta: self.beta.or(base.beta),
            n: self.n.or(base.n),
        }
    }

    fn describe(&self) -> String {
        let mut parts = Vec::new();
        if let Some(a) = self.alpha {
            parts.push(format!("alpha={a}"));
        }
        if let Some(b) = self.beta {
            parts.push(format!("beta={b}"));
        }
        if let Some(n) = self.n {
            parts.push(format!("n={n}"));
        }
        parts.join(";")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogScale {
    pub name: CatalogScaleName,
    pub formula: &'static str,
    pub parameters: CatalogParams,
    pub values: Vec<f64>,
}

/// Values of a catalog scale, with `overrides` applied on top of the usual
/// parameter choice.
pub fn catalog_values(
    name: CatalogScaleName,
    overrides: CatalogParams,
) -> Result<CatalogScale, ScaleError> {
    use CatalogScaleName::*;

    let usual = name.usual_params();
    for (field, given, expected) in [
        ("alpha", overrides.alpha.is_some(), usual.alpha.is_some()),
        ("beta", overrides.beta.is_some(), usual.beta.is_some()),
        ("n", overrides.n.is_some(), usual.n.is_some()),
    ] {
        if given && !expected {
            return Err(ScaleError::UnexpectedParameter {
                scale: name,
                name: field,
            });
        }
    }
    let params = overrides.merged_over(usual);
    let nine = || (1..=9).map(f64::from);

    let alpha_above = |bound: f64, constraint: &'static str| -> Result<f64, ScaleError> {
        let a = params.alpha.unwrap_or(f64::NAN);
        if a.is_finite() && a > bound {
            Ok(a)
        } else {
            Err(ScaleError::ParameterOutOfRange {
                name: "alpha",
                value: a,
                constraint,
            })
        }
    };
    let size = || -> Result<u32, ScaleError> {
        match params.n {
            Some(n) if n >= 2 => Ok(n),
            other => Err(ScaleError::ParameterOutOfRange {
                name: "n",
                value: other.map_or(f64::NAN, f64::from),
                constraint: "n >= 2",
            }),
        }
    };

    let values: Vec<f64> = match name {
        Linear => {
            let a = alpha_above(0.0, "alpha > 0")?;
            nine().map(|x| a * x).collect()
        }
        Affine => {
            let a = alpha_above(0.0, "alpha > 0")?;
            let b = params.beta.unwrap_or(f64::NAN);
            if !(b.is_finite() && b > 0.0) {
                return Err(ScaleError::ParameterOutOfRange {
                    name: "beta",
                    value: b,
                    constraint: "beta > 0",
                });
            }
            // The printed list starts at alpha + beta.
            nine().map(|x| a * x + b).collect()
        }
        Power => {
            let a = alpha_above(1.0, "alpha > 1")?;
            nine().map(|x| x.powf(a)).collect()
        }
        Root => {
            let a = alpha_above(1.0, "alpha > 1")?;
            nine().map(|x| x.powf(1.0 / a)).collect()
        }
        Geometric => {
            let a = alpha_above(1.0, "alpha > 1")?;
            nine().map(|x| a.powf(x - 1.0)).collect()
        }
        InverseLinear => nine().map(|x| 9.0 / (10.0 - x)).collect(),
        Asymptotic => nine()
            .map(|x| (3f64.sqrt() * (x - 1.0) / 14.0).atanh().exp())
            .collect(),
        Balanced => nine().map(|y| (9.0 + y) / (11.0 - y)).collect(),
        BalancedPower => {
            let n = size()?;
            let span = f64::from(n - 1);
            (1..=n)
                .map(|x| 9f64.powf(f64::from(x - 1) / span))
                .collect()
        }
        Logarithmic => {
            let a = alpha_above(1.0, "alpha > 1")?;
            let n = size()?;
            (1..=n)
                .map(|x| (f64::from(x) + a - 1.0).ln() / a.ln())
                .collect()
        }
        Koczkodaj => {
            let n = size()?;
            let span = f64::from(n - 1);
            (1..=n).map(|x| 1.0 + f64::from(x - 1) / span).collect()
        }
    };

    Ok(CatalogScale {
        name,
        formula: name.formula(),
        parameters: params,
        values,
    })
}

/// Every catalog scale at its usual parameters.
pub fn full_catalog() -> Vec<CatalogScale> {
    CatalogScaleName::ALL
        .into_iter()
        .map(|name| {
            catalog_values(name, CatalogParams::default()).expect("usual parameters are valid")
        })
        .collect()
}

/// CSV with columns `name,parameters,values`; values are comma-joined.
pub fn write_catalog_csv<W: std::io::Write>(scales: &[CatalogScale], out: W) -> csv::Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    writer.write_record(["name", "parameters", "values"])?;
    for scale in scales {
        let values = scale
            .values
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(",");
        writer.write_record([scale.name.as_str(), &scale.parameters.describe(), &values])?;
    }
    writer.flush()?;
    Ok(())
}
