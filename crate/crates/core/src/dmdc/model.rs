//! The fitted discrete-time model and its JSON file form.

use super::{DmdcError, INPUT_DIM, STATE_DIM};
use crate::numerics::Matrix;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

/// Provenance of a fitted model.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub gaits: Vec<String>,
    pub sample_count: usize,
    pub residual: f64,
    pub retained_rank: usize,
}

/// Discrete-time pair `(A, B)` with the sample period and truncation
/// threshold used to fit it.
#[derive(Clone, Debug)]
pub struct KoopmanModel {
    pub a: Matrix,
    pub b: Matrix,
    pub dt: f64,
    pub sv_threshold: f64,
    pub meta: TrainingMeta,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    dim_x: usize,
    dim_u: usize,
    dt: f64,
    sv_threshold: f64,
    a: Vec<f64>,
    b: Vec<f64>,
    metadata: TrainingMeta,
}

pub fn save_model(path: &Path, model: &KoopmanModel) -> Result<(), DmdcError> {
    let file = ModelFile {
        dim_x: STATE_DIM,
        dim_u: INPUT_DIM,
        dt: model.dt,
        sv_threshold: model.sv_threshold,
        a: model.a.as_slice().to_vec(),
        b: model.b.as_slice().to_vec(),
        metadata: model.meta.clone(),
    };
    let text = serde_json::to_string_pretty(&file)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<KoopmanModel, DmdcError> {
    let text = fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text)?;
    if file.dim_x != STATE_DIM || file.dim_u != INPUT_DIM {
        return Err(DmdcError::InvalidModel(format!(
            "expected dimensions {STATE_DIM}x{INPUT_DIM}, file declares {}x{}",
            file.dim_x, file.dim_u
        )));
    }
    if file.a.len() != STATE_DIM * STATE_DIM {
        return Err(DmdcError::InvalidModel(format!(
            "state matrix needs {} entries, got {}",
            STATE_DIM * STATE_DIM,
            file.a.len()
        )));
    }
    if file.b.len() != STATE_DIM * INPUT_DIM {
        return Err(DmdcError::InvalidModel(format!(
            "input matrix needs {} entries, got {}",
            STATE_DIM * INPUT_DIM,
            file.b.len()
        )));
    }
    if !(file.dt > 0.0 && file.dt.is_finite()) {
        return Err(DmdcError::InvalidModel(format!(
            "sample period must be positive, got {}",
            file.dt
        )));
    }
    let a = Matrix::new(STATE_DIM, STATE_DIM, file.a)
        .map_err(|e| DmdcError::InvalidModel(e.to_string()))?;
    let b = Matrix::new(STATE_DIM, INPUT_DIM, file.b)
        .map_err(|e| DmdcError::InvalidModel(e.to_string()))?;
    Ok(KoopmanModel {
        a,
        b,
        dt: file.dt,
        sv_threshold: file.sv_threshold,
        meta: file.metadata,
    })
}
