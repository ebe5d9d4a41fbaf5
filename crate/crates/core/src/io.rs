//! JSON schemas for kernels, point sets, Lagrangians and Maupertuis
//! problems. Infinities are the strings `"inf"` and `"-inf"`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::control::{
    multi_layer_stencil, Lagrangian, MaupertuisProblem, SpaceGrid, StencilStep, TimeGrid,
};
use crate::error::{Error, Result};
use crate::ext::PointSet;
use crate::kernels::{ClosedForm, GramKernel, KernelRep};
use crate::matrix::Matrix;

/// Points given either as scalars (`[0, 1, 2]`) or as coordinate lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointsSpec {
    Scalars(Vec<f64>),
    Vectors(Vec<Vec<f64>>),
}

impl PointsSpec {
    pub fn build(&self) -> Result<Arc<PointSet>> {
        let set = match self {
            PointsSpec::Scalars(v) => PointSet::from_scalars(v)?,
            PointsSpec::Vectors(v) => PointSet::new(v.clone())?,
        };
        Ok(Arc::new(set))
    }
}

impl From<&PointSet> for PointsSpec {
    fn from(p: &PointSet) -> Self {
        if p.dim() == 1 {
            PointsSpec::Scalars(p.iter().map(|x| x[0]).collect())
        } else {
            PointsSpec::Vectors(p.to_vecs())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormName {
    Conv,
    Sconv,
    Lip,
    Dirac,
    PowerDistance,
    LaxHopf,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedFormParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lagrangian: Option<LagrangianSpec>,
}

/// `{"type": "gram", ...}` or `{"type": "closed_form", ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    Gram { points: PointsSpec, matrix: Matrix },
    ClosedForm {
        name: ClosedFormName,
        #[serde(default)]
        params: ClosedFormParams,
    },
}

impl KernelSpec {
    pub fn build(&self) -> Result<KernelRep> {
        match self {
            KernelSpec::Gram { points, matrix } => {
                Ok(KernelRep::Gram(GramKernel::new(points.build()?, matrix.clone())?))
            }
            KernelSpec::ClosedForm { name, params } => {
                let scale = params.scale.unwrap_or(1.0);
                let cf = match name {
                    ClosedFormName::Conv => ClosedForm::Conv,
                    ClosedFormName::Sconv => ClosedForm::Sconv { scale },
                    ClosedFormName::Lip => ClosedForm::Lip { scale },
                    ClosedFormName::Dirac => ClosedForm::Dirac,
                    ClosedFormName::PowerDistance => ClosedForm::PowerDistance {
                        p: params
                            .p
                            .ok_or_else(|| Error::Invalid("params.p is required for power_distance".into()))?,
                        scale,
                    },
                    ClosedFormName::LaxHopf => ClosedForm::LaxHopf(
                        params
                            .lagrangian
                            .as_ref()
                            .ok_or_else(|| Error::Invalid("params.lagrangian is required for lax_hopf".into()))?
                            .build()?,
                    ),
                };
                Ok(KernelRep::ClosedForm(cf))
            }
        }
    }
}

/// `{"type": "quadratic", "scale": 1}` and friends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LagrangianSpec {
    Quadratic {
        #[serde(default = "one")]
        scale: f64,
    },
    Absolute {
        #[serde(default = "one")]
        scale: f64,
    },
    Table { velocities: Vec<f64>, values: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl LagrangianSpec {
    pub fn build(&self) -> Result<Lagrangian> {
        match self {
            LagrangianSpec::Quadratic { scale } => Ok(Lagrangian::Quadratic { scale: *scale }),
            LagrangianSpec::Absolute { scale } => Ok(Lagrangian::Absolute { scale: *scale }),
            LagrangianSpec::Table { velocities, values } => Lagrangian::table(velocities.clone(), values.clone()),
        }
    }
}

/// Either `{"t0", "t_final", "dt"}` or an explicit uniform list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGridSpec {
    Span { t0: f64, t_final: f64, dt: f64 },
    List(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceGridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub step: f64,
}

/// Either explicit steps or every `(k, j)` with `k ≤ max_layers` and
/// `|j| ≤ cells_per_layer · k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StencilSpec {
    Steps(Vec<StencilStep>),
    Bounded { max_layers: usize, cells_per_layer: i64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub time_grid: TimeGridSpec,
    pub space_grid: SpaceGridSpec,
    pub lagrangian: LagrangianSpec,
    pub stencil: StencilSpec,
    /// Check `L ≥ 0` on the stencil.
    #[serde(default)]
    pub require_tpsd: bool,
    /// Check that the stencil is symmetric.
    #[serde(default)]
    pub require_reversible: bool,
}

impl ProblemSpec {
    pub fn build(&self) -> Result<MaupertuisProblem> {
        let time = match &self.time_grid {
            TimeGridSpec::Span { t0, t_final, dt } => TimeGrid::span(*t0, *t_final, *dt)?,
            TimeGridSpec::List(ts) => TimeGrid::from_times(ts)?,
        };
        let g = &self.space_grid;
        let space = SpaceGrid::uniform(g.lower.clone(), g.upper.clone(), g.step)?;
        let stencil = match &self.stencil {
            StencilSpec::Steps(s) => s.clone(),
            StencilSpec::Bounded { max_layers, cells_per_layer } => {
                multi_layer_stencil(space.dim(), *max_layers, *cells_per_layer)
            }
        };
        let problem = MaupertuisProblem::new(time, space, self.lagrangian.build()?, stencil)?;
        if self.require_reversible {
            problem.require_reversible()?;
        }
        if self.require_tpsd {
            problem.require_nonnegative()?;
        }
        Ok(problem)
    }
}
