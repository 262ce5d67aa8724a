use serde::{Deserialize, Serialize};

use super::{Grid, PeriodicField, SolverError};

/// Initial data in fractional coordinates `y ∈ [0, 1)^n`, sampled at cell centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `mean + amplitude sin(2 pi k . y + phase)`; `k` defaults to the first axis.
    Sine {
        amplitude: f64,
        #[serde(default)]
        mean: f64,
        #[serde(default)]
        wavevector: Option<Vec<i64>>,
        #[serde(default)]
        phase: f64,
    },
    Constant {
        value: f64,
    },
    /// `left` where `y_axis < split`, `right` elsewhere.
    Step {
        left: f64,
        right: f64,
        #[serde(default = "half")]
        split: f64,
        #[serde(default)]
        axis: usize,
    },
    /// Raw cell values, row-major; `path` is resolved by the caller into `values`.
    Array {
        #[serde(default)]
        values: Option<Vec<f64>>,
        #[serde(default)]
        path: Option<String>,
    },
}

fn half() -> f64 {
    0.5
}

impl InitialData {
    pub fn sample(&self, grid: &Grid) -> Result<PeriodicField, SolverError> {
        let n = grid.n();
        match self {
            InitialData::Sine { amplitude, mean, wavevector, phase } => {
                let k: Vec<f64> = match wavevector {
                    Some(k) if k.len() == n => k.iter().map(|&x| x as f64).collect(),
                    Some(k) => {
                        return Err(SolverError::Dimension(format!("wavevector has {} entries, grid has {n} axes", k.len())))
                    }
                    None => (0..n).map(|r| if r == 0 { 1.0 } else { 0.0 }).collect(),
                };
                PeriodicField::from_fn(grid.clone(), |y| {
                    let s: f64 = k.iter().zip(y).map(|(a, b)| a * b).sum();
                    mean + amplitude * (2.0 * std::f64::consts::PI * s + phase).sin()
                })
            }
            InitialData::Constant { value } => PeriodicField::constant(grid.clone(), *value),
            InitialData::Step { left, right, split, axis } => {
                if *axis >= n {
                    return Err(SolverError::Dimension(format!("step axis {axis} but grid has {n} axes")));
                }
                PeriodicField::from_fn(grid.clone(), |y| if y[*axis] < *split { *left } else { *right })
            }
            InitialData::Array { values: Some(v), .. } => PeriodicField::new(grid.clone(), v.clone()),
            InitialData::Array { values: None, .. } => {
                Err(SolverError::Config("array initial data has no values loaded".into()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samplers() {
        let g = Grid::new(vec![4]).unwrap();
        let c = InitialData::Constant { value: 0.5 }.sample(&g).unwrap();
        assert_eq!(c.values(), &[0.5; 4]);
        let s = InitialData::Step { left: 1.0, right: 0.0, split: 0.5, axis: 0 }.sample(&g).unwrap();
        assert_eq!(s.values(), &[1.0, 1.0, 0.0, 0.0]);
        let json = r#"{"kind": "sine", "amplitude": 0.5}"#;
        let d: InitialData = serde_json::from_str(json).unwrap();
        let f = d.sample(&g).unwrap();
        assert!((f.values()[0] - 0.5 * (std::f64::consts::PI / 4.0).sin()).abs() < 1e-15);
        assert!(InitialData::Array { values: Some(vec![1.0; 3]), path: None }.sample(&g).is_err());
    }
}
