//! Python bindings.

use std::collections::HashMap;

use bspre_core::codegen::{self, GenParams};
use bspre_core::env;
use bspre_core::harness::{self, Experiment, RunConfig};
use bspre_core::infomath::{self, Probability};
use bspre_core::learning::{self, Successor, TdInputs, TdRule};
use bspre_core::vm::{self, FeatureVector, Outcome, Program};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn prob(p: f64) -> PyResult<Probability> {
    Probability::new(p).map_err(value_err)
}

fn vector(v: Vec<i16>) -> PyResult<FeatureVector> {
    FeatureVector::new(v).map_err(value_err)
}

#[pyclass(name = "Codelet", module = "bspre", frozen)]
struct PyCodelet(vm::Codelet);

#[pymethods]
impl PyCodelet {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        assemble(source)
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        let program = Program::from_bytes(data).map_err(value_err)?;
        vm::Codelet::new(program).map(PyCodelet).map_err(value_err)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_bytes())
    }

    fn disassemble(&self) -> String {
        self.0.disassemble()
    }

    #[getter]
    fn arity(&self) -> u8 {
        self.0.arity()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Codelet(len={}, arity={})", self.0.len(), self.0.arity())
    }

    /// Returns `(outcome, output, steps)`; `output` is `None` unless the
    /// outcome is `"positive"`.
    #[pyo3(signature = (inputs, fuel = vm::DEFAULT_FUEL))]
    fn execute(
        &self,
        inputs: Vec<Vec<i16>>,
        fuel: u32,
    ) -> PyResult<(&'static str, Option<Vec<i16>>, u32)> {
        let inputs: Vec<FeatureVector> = inputs.into_iter().map(vector).collect::<PyResult<_>>()?;
        let out = vm::execute(&self.0, &inputs, fuel).map_err(value_err)?;
        Ok(match out.outcome {
            Outcome::Positive(v) => ("positive", Some(v.into_inner()), out.steps_used),
            Outcome::Negative => ("negative", None, out.steps_used),
            Outcome::FuelExhausted => ("fuel_exhausted", None, out.steps_used),
        })
    }
}

#[pyfunction]
fn assemble(source: &str) -> PyResult<PyCodelet> {
    let program = vm::assemble(source).map_err(value_err)?;
    vm::Codelet::new(program).map(PyCodelet).map_err(value_err)
}

/// Violations of an assembly listing; empty when valid.
#[pyfunction]
fn validate(source: &str) -> PyResult<Vec<String>> {
    let program = vm::assemble(source).map_err(value_err)?;
    Ok(program.validate().iter().map(ToString::to_string).collect())
}

#[pyfunction]
#[pyo3(signature = (seed, min_len = 4, max_len = 16, arity = 1, index_range = 8, imm_min = -32, imm_max = 32))]
fn generate(
    seed: u64,
    min_len: usize,
    max_len: usize,
    arity: u8,
    index_range: u8,
    imm_min: i16,
    imm_max: i16,
) -> PyResult<PyCodelet> {
    let params = GenParams {
        min_len,
        max_len,
        arity,
        index_range,
        imm_min,
        imm_max,
        ..GenParams::default()
    };
    codegen::generate(&params, &mut ChaCha8Rng::seed_from_u64(seed))
        .map(PyCodelet)
        .map_err(value_err)
}

#[pyfunction]
fn concatenate(first: &PyCodelet, second: &PyCodelet) -> PyResult<PyCodelet> {
    codegen::concatenate(&first.0, &second.0)
        .map(PyCodelet)
        .map_err(value_err)
}

#[pyfunction]
fn instruction_count() -> usize {
    vm::instruction_set().len()
}

#[pyfunction]
fn self_information(p: f64) -> PyResult<f64> {
    infomath::self_information(prob(p)?).map_err(value_err)
}

#[pyfunction]
fn intrinsic_reward(p: f64) -> PyResult<f64> {
    Ok(infomath::intrinsic_reward(prob(p)?))
}

#[pyfunction]
fn sequence_reward(pa: f64, pb: f64) -> PyResult<f64> {
    Ok(infomath::sequence_reward(prob(pa)?, prob(pb)?))
}

#[pyfunction]
fn merged_reward(pa: f64, pb: f64) -> PyResult<f64> {
    Ok(infomath::merged_reward(prob(pa)?, prob(pb)?))
}

#[pyfunction]
fn first_step_dominates(pa: f64, pb: f64) -> PyResult<bool> {
    Ok(infomath::first_step_dominates(prob(pa)?, prob(pb)?))
}

#[pyfunction]
fn reward_argmax() -> f64 {
    infomath::reward_argmax().value()
}

/// `successors` holds `(q, p)` pairs.
#[pyfunction]
#[pyo3(signature = (q, reward, successors, alpha = 0.1, gamma = 0.9, rule = "max"))]
fn td_update(
    q: f64,
    reward: f64,
    successors: Vec<(f64, f64)>,
    alpha: f64,
    gamma: f64,
    rule: &str,
) -> PyResult<f64> {
    let rule: TdRule = rule.parse().map_err(PyValueError::new_err)?;
    let successors: Vec<Successor> = successors
        .into_iter()
        .map(|(q, p)| Successor { q, p })
        .collect();
    Ok(learning::td_update(
        rule,
        &TdInputs {
            q,
            reward,
            alpha,
            gamma,
            successors: &successors,
        },
    ))
}

#[pyfunction]
fn selection_probability(qs: Vec<f64>, index: usize) -> PyResult<f64> {
    learning::selection_probability(&qs, index)
        .map(|p| p.value())
        .map_err(value_err)
}

#[pyfunction]
fn exploration_probability(q_const: f64, sum_q: f64) -> f64 {
    learning::exploration_probability(q_const, sum_q).value()
}

#[pyfunction]
fn vertical_bar_subset() -> Vec<char> {
    env::vertical_bar_subset().into_iter().collect()
}

fn config(env: &str, seed: u64, settings: Option<HashMap<String, String>>) -> PyResult<RunConfig> {
    let mut cfg = RunConfig::default();
    cfg.set("env", env).map_err(value_err)?;
    cfg.seed = seed;
    let mut settings: Vec<_> = settings.unwrap_or_default().into_iter().collect();
    settings.sort();
    for (k, v) in settings {
        cfg.set(&k, &v).map_err(value_err)?;
    }
    cfg.check().map_err(value_err)?;
    Ok(cfg)
}

/// A seeded engine wired to a synthetic environment.
#[pyclass(name = "Engine", module = "bspre")]
struct PyEngine(Experiment);

#[pymethods]
impl PyEngine {
    /// `settings` takes the same keys as a run config file.
    #[new]
    #[pyo3(signature = (env = "letters", seed = 0, settings = None))]
    fn new(env: &str, seed: u64, settings: Option<HashMap<String, String>>) -> PyResult<Self> {
        let cfg = config(env, seed, settings)?;
        Experiment::new(&cfg).map(PyEngine).map_err(value_err)
    }

    /// Continues from `snapshot`; environment settings must match the
    /// original run.
    #[staticmethod]
    #[pyo3(signature = (snapshot, env = "letters", seed = 0, settings = None))]
    fn restore(
        snapshot: &[u8],
        env: &str,
        seed: u64,
        settings: Option<HashMap<String, String>>,
    ) -> PyResult<Self> {
        let cfg = config(env, seed, settings)?;
        Experiment::resume(&cfg, snapshot)
            .map(PyEngine)
            .map_err(value_err)
    }

    /// One tick; returns a dict of what happened.
    fn step<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = self
            .0
            .step()
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        let d = PyDict::new(py);
        d.set_item("tick", r.tick)?;
        let execs: Vec<(u64, u64, &str, u32, f64, f64)> = r
            .executions
            .iter()
            .map(|e| {
                (
                    e.tail.0,
                    e.head.0,
                    e.outcome.name(),
                    e.steps,
                    e.p,
                    e.effective_reward,
                )
            })
            .collect();
        d.set_item("executions", execs)?;
        d.set_item(
            "explorations",
            r.explorations
                .iter()
                .map(|x| (x.tail.0, x.head.0))
                .collect::<Vec<_>>(),
        )?;
        d.set_item("removed_actions", r.removed_actions.len())?;
        d.set_item(
            "pruned",
            r.pruned.iter().map(|c| c.id.0).collect::<Vec<_>>(),
        )?;
        Ok(d)
    }

    fn run(&mut self, ticks: u64) -> PyResult<()> {
        self.0
            .run_ticks(ticks, None)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn tick(&self) -> u64 {
        self.0.depository().current_tick()
    }

    /// `(id, kind, level, p)` per concept, by id.
    fn concepts(&self) -> Vec<(u64, &'static str, u32, Option<f64>)> {
        self.0
            .depository()
            .concepts()
            .map(|c| (c.id.0, c.kind.name(), c.level, c.probability()))
            .collect()
    }

    /// `(tail, head, slot, q)` per action.
    fn actions(&self) -> Vec<(u64, u64, u8, f64)> {
        self.0
            .depository()
            .actions()
            .map(|a| (a.tail.0, a.head.0, a.slot, a.q))
            .collect()
    }

    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.0.summary();
        let d = PyDict::new(py);
        d.set_item("ticks", s.ticks)?;
        d.set_item("concepts", s.concepts)?;
        d.set_item("actions", s.actions)?;
        d.set_item("executions", s.executions)?;
        d.set_item("explorations", s.explorations)?;
        d.set_item("pruned", s.pruned)?;
        d.set_item("surviving_dev", s.surviving_dev)?;
        d.set_item("pruned_dev", s.pruned_dev)?;
        Ok(d)
    }

    fn snapshot<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.depository().snapshot())
    }

    fn inspect(&self) -> String {
        harness::inspect(self.0.depository())
    }
}

#[pymodule]
fn bspre(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCodelet>()?;
    m.add_class::<PyEngine>()?;
    m.add_function(wrap_pyfunction!(assemble, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(concatenate, m)?)?;
    m.add_function(wrap_pyfunction!(instruction_count, m)?)?;
    m.add_function(wrap_pyfunction!(self_information, m)?)?;
    m.add_function(wrap_pyfunction!(intrinsic_reward, m)?)?;
    m.add_function(wrap_pyfunction!(sequence_reward, m)?)?;
    m.add_function(wrap_pyfunction!(merged_reward, m)?)?;
    m.add_function(wrap_pyfunction!(first_step_dominates, m)?)?;
    m.add_function(wrap_pyfunction!(reward_argmax, m)?)?;
    m.add_function(wrap_pyfunction!(td_update, m)?)?;
    m.add_function(wrap_pyfunction!(selection_probability, m)?)?;
    m.add_function(wrap_pyfunction!(exploration_probability, m)?)?;
    m.add_function(wrap_pyfunction!(vertical_bar_subset, m)?)?;
    Ok(())
}
