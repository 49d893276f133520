use smcsmooth::model::{Ar1, Chaotic, Growth, StochasticVolatility, StateSpaceModel};

use crate::config::ModelKind;
use crate::error::Result;

/// One of the four benchmark models, with prior overrides applied.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Ar1(Ar1),
    Growth(Growth),
    Chaotic(Chaotic),
    Sv(StochasticVolatility),
}

/// Runs `$body` with `$m` bound to the concrete model inside an [`AnyModel`].
#[macro_export]
macro_rules! with_model {
    ($any:expr, $m:ident => $body:expr) => {
        match $any {
            $crate::models::AnyModel::Ar1($m) => $body,
            $crate::models::AnyModel::Growth($m) => $body,
            $crate::models::AnyModel::Chaotic($m) => $body,
            $crate::models::AnyModel::Sv($m) => $body,
        }
    };
}

impl AnyModel {
    pub fn build(kind: ModelKind, priors: &[(String, Vec<f64>)], x0: Option<f64>) -> Result<Self> {
        let mut m = match kind {
            ModelKind::Ar1 => AnyModel::Ar1(Ar1::default()),
            ModelKind::Growth => AnyModel::Growth(Growth::default()),
            ModelKind::Chaotic => AnyModel::Chaotic(Chaotic::default()),
            ModelKind::Sv => AnyModel::Sv(StochasticVolatility::default()),
        };
        with_model!(&mut m, inner => {
            for (k, v) in priors {
                inner.set_hyper(k, v)?;
            }
            if let Some(x) = x0 {
                inner.set_hyper("x0", &[x])?;
            }
        });
        Ok(m)
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            AnyModel::Ar1(_) => ModelKind::Ar1,
            AnyModel::Growth(_) => ModelKind::Growth,
            AnyModel::Chaotic(_) => ModelKind::Chaotic,
            AnyModel::Sv(_) => ModelKind::Sv,
        }
    }
}
