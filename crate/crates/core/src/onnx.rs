//! Thin session wrapper over an ONNX graph, executed with tract.
//!
//! Inputs and outputs are addressed by their graph names so the exported
//! models only need to honour the documented tensor contracts.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::TensorF32;

#[cfg(feature = "onnx")]
mod imp {
    use std::sync::Arc;

    use tract_onnx::prelude::*;

    use super::*;

    fn backend(e: impl std::fmt::Display) -> Error {
        Error::Backend(format!("{e:#}"))
    }

    /// A loaded, optimized model with fixed input shapes. Runs take `&self`
    /// and keep their state per call, so a session can be shared.
    pub struct OnnxSession {
        plan: Arc<TypedRunnableModel>,
        inputs: Vec<String>,
        outputs: Vec<String>,
    }

    impl OnnxSession {
        /// Loads `path`, pinning each named input to a concrete f32 shape.
        pub fn load(path: &Path, inputs: &[(&str, Vec<usize>)]) -> Result<Self> {
            if !path.is_file() {
                return Err(Error::BackendUnavailable(format!(
                    "model file {} not found",
                    path.display()
                )));
            }
            let mut model = tract_onnx::onnx().model_for_path(path).map_err(backend)?;
            let input_names: Vec<String> = model
                .input_outlets()
                .map_err(backend)?
                .iter()
                .map(|o| model.node(o.node).name.clone())
                .collect();
            for (name, shape) in inputs {
                let ix = input_names.iter().position(|n| n == name).ok_or_else(|| {
                    Error::Backend(format!("model has no input {name:?}; inputs are {input_names:?}"))
                })?;
                model = model
                    .with_input_fact(ix, f32::fact(shape.as_slice()).into())
                    .map_err(backend)?;
            }
            let outputs: Vec<String> = model
                .output_outlets()
                .map_err(backend)?
                .iter()
                .map(|o| {
                    model
                        .outlet_label(*o)
                        .map(str::to_string)
                        .unwrap_or_else(|| model.node(o.node).name.clone())
                })
                .collect();
            let plan = model
                .into_optimized()
                .and_then(|m| m.into_runnable())
                .map_err(backend)?;
            Ok(Self { plan, inputs: input_names, outputs })
        }

        pub fn input_names(&self) -> &[String] {
            &self.inputs
        }

        pub fn output_names(&self) -> &[String] {
            &self.outputs
        }

        /// Runs the graph with every input supplied by name and returns all
        /// outputs in graph order.
        pub fn run(&self, feeds: Vec<(&str, TensorF32)>) -> Result<Vec<(String, TensorF32)>> {
            let mut ordered: Vec<Option<TValue>> = vec![None; self.inputs.len()];
            for (name, t) in feeds {
                let ix = self.inputs.iter().position(|n| n == name).ok_or_else(|| {
                    Error::Backend(format!("model has no input {name:?}"))
                })?;
                let (shape, data) = t.into_parts();
                let tensor = tract_ndarray::ArrayD::from_shape_vec(shape, data)
                    .map_err(backend)?
                    .into_tensor();
                ordered[ix] = Some(tensor.into_tvalue());
            }
            let args: TVec<TValue> = ordered
                .into_iter()
                .enumerate()
                .map(|(i, v)| {
                    v.ok_or_else(|| Error::Backend(format!("input {:?} not supplied", self.inputs[i])))
                })
                .collect::<Result<_>>()?;
            let results = self.plan.run(args).map_err(backend)?;
            results
                .into_iter()
                .zip(&self.outputs)
                .map(|(v, name)| {
                    let view = v.to_plain_array_view::<f32>().map_err(backend)?;
                    // scalars come back as a single-element vector
                    let shape = match view.shape() {
                        [] => vec![1],
                        s => s.to_vec(),
                    };
                    let t = TensorF32::new(shape, view.iter().copied().collect())?;
                    Ok((name.clone(), t))
                })
                .collect()
        }

        /// Runs and extracts a single named output; falls back to the only
        /// output when the graph has exactly one.
        pub fn run_one(&self, feeds: Vec<(&str, TensorF32)>, output: &str) -> Result<TensorF32> {
            let mut outs = self.run(feeds)?;
            if let Some(ix) = outs.iter().position(|(n, _)| n == output) {
                return Ok(outs.swap_remove(ix).1);
            }
            if outs.len() == 1 {
                return Ok(outs.pop().unwrap().1);
            }
            Err(Error::Backend(format!(
                "model has no output {output:?}; outputs are {:?}",
                self.outputs
            )))
        }
    }
}

#[cfg(not(feature = "onnx"))]
mod imp {
    use super::*;

    pub struct OnnxSession {
        _private: (),
    }

    impl OnnxSession {
        pub fn load(path: &Path, _inputs: &[(&str, Vec<usize>)]) -> Result<Self> {
            Err(Error::BackendUnavailable(format!(
                "built without the `onnx` feature; cannot load {}",
                path.display()
            )))
        }

        pub fn input_names(&self) -> &[String] {
            &[]
        }

        pub fn output_names(&self) -> &[String] {
            &[]
        }

        pub fn run(&self, _feeds: Vec<(&str, TensorF32)>) -> Result<Vec<(String, TensorF32)>> {
            unreachable!("session cannot be constructed")
        }

        pub fn run_one(&self, _feeds: Vec<(&str, TensorF32)>, _output: &str) -> Result<TensorF32> {
            unreachable!("session cannot be constructed")
        }
    }
}

pub use imp::OnnxSession;
