//! Single-point evaluation of one quantity, for `njsq eval`.

use std::str::FromStr;

use nalgebra::DVector;
use serde::Serialize;

use crate::chart::ChartPoint;
use crate::diff::DerivativeStrategy;
use crate::error::{Error, Result};
use crate::nijenhuis::SquareContext;
use crate::zoo::{euclidean_metric, metric_by_id, structure_by_id};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantity {
    N,
    N2,
    L,
    #[serde(rename = "ell")]
    Ell,
    T,
    #[serde(rename = "plane")]
    Plane,
}

impl Quantity {
    /// Vector slots the quantity needs, in argument order.
    pub fn slots(self) -> &'static [&'static str] {
        match self {
            Quantity::N => &["X", "Y"],
            Quantity::N2 => &["X", "Y", "Z"],
            Quantity::L => &["X", "Z", "Y", "W"],
            Quantity::Ell | Quantity::Plane => &["X", "Z"],
            Quantity::T => &[],
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" => Ok(Quantity::N),
            "N2" => Ok(Quantity::N2),
            "L" => Ok(Quantity::L),
            "ell" => Ok(Quantity::Ell),
            "T" => Ok(Quantity::T),
            "plane" | "plane_invariant" => Ok(Quantity::Plane),
            other => Err(Error::Usage(format!(
                "unknown quantity `{other}` (expected N, N2, L, ell, T or plane)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub struct VectorArgs {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<f64>>,
}

impl VectorArgs {
    fn slot(&self, name: &str) -> Option<&Vec<f64>> {
        match name {
            "X" => self.x.as_ref(),
            "Y" => self.y.as_ref(),
            "Z" => self.z.as_ref(),
            "W" => self.w.as_ref(),
            _ => None,
        }
    }
}

/// Parses `1,0,0.5,2` or a basis vector written `e1` (1-based).
pub fn parse_vector(s: &str, dim: usize) -> Result<Vec<f64>> {
    if let Some(idx) = s.strip_prefix('e').and_then(|i| i.parse::<usize>().ok()) {
        if idx == 0 || idx > dim {
            return Err(Error::Usage(format!("basis vector {s} out of range for dimension {dim}")));
        }
        return Ok((0..dim).map(|k| if k + 1 == idx { 1.0 } else { 0.0 }).collect());
    }
    s.split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|_| Error::Usage(format!("cannot parse `{c}` in vector `{s}`")))
        })
        .collect()
}

/// The evaluated quantity with a full echo of its inputs. Only the field for
/// the requested quantity is populated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareEvaluation {
    pub structure_id: String,
    pub metric_id: String,
    pub quantity: Quantity,
    pub point: ChartPoint,
    pub vectors: VectorArgs,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nijenhuis: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strong: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub four_slot: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intermediate: Option<f64>,
    /// `⟨JN(N(X,Z),X),Z⟩_g`, reported next to `ℓ` as a cross-check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intermediate_shortcut: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weak: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plane_invariant: Option<f64>,
}

pub fn eval_point(
    structure_id: &str,
    metric_id: Option<&str>,
    coords: Vec<f64>,
    quantity: Quantity,
    vectors: VectorArgs,
    strategy: &DerivativeStrategy,
) -> Result<SquareEvaluation> {
    let missing: Vec<&str> = quantity
        .slots()
        .iter()
        .copied()
        .filter(|s| vectors.slot(s).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Usage(format!(
            "quantity {quantity:?} needs vectors {}; missing {}",
            quantity.slots().join(", "),
            missing.join(", ")
        )));
    }
    let structure = structure_by_id(structure_id)?;
    let metric = match metric_id {
        Some(id) => metric_by_id(id)?,
        None => euclidean_metric(structure.dim)?,
    };
    if metric.dim != structure.dim {
        return Err(Error::Config(format!(
            "metric {} has dimension {} but structure {} has dimension {}",
            metric.id, metric.dim, structure.id, structure.dim
        )));
    }
    let point = ChartPoint::new(structure.chart_id.clone(), coords)?;
    let ctx = SquareContext::new(&structure.j, &metric.g, &point, strategy)?;
    let v = |name: &str| -> Result<DVector<f64>> {
        let raw = vectors.slot(name).expect("presence checked above");
        if raw.len() != structure.dim {
            return Err(Error::Shape {
                expected: structure.dim,
                got: raw.len(),
            });
        }
        Ok(DVector::from_column_slice(raw))
    };

    let mut out = SquareEvaluation {
        structure_id: structure.id.clone(),
        metric_id: metric.id.clone(),
        quantity,
        point,
        vectors: vectors.clone(),
        nijenhuis: None,
        strong: None,
        four_slot: None,
        intermediate: None,
        intermediate_shortcut: None,
        weak: None,
        plane_invariant: None,
    };
    match quantity {
        Quantity::N => out.nijenhuis = Some(ctx.nijenhuis(&v("X")?, &v("Y")?).as_slice().to_vec()),
        Quantity::N2 => {
            out.strong = Some(ctx.n_squared(&v("X")?, &v("Y")?, &v("Z")?).as_slice().to_vec())
        }
        Quantity::L => out.four_slot = Some(ctx.big_l(&v("X")?, &v("Z")?, &v("Y")?, &v("W")?)),
        Quantity::Ell => {
            let (x, z) = (v("X")?, v("Z")?);
            out.intermediate = Some(ctx.ell(&x, &z));
            out.intermediate_shortcut = Some(ctx.ell_shortcut(&x, &z));
        }
        Quantity::T => out.weak = Some(ctx.weak_t()),
        Quantity::Plane => out.plane_invariant = Some(ctx.plane_invariant(&v("X")?, &v("Z")?)?),
    }
    Ok(out)
}
