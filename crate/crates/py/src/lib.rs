//! Python bindings: `vcle_py.Env` wraps the in-process environment.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use vcle::env::{Env as RustEnv, EnvError, EnvOptions, State, StateKey, StepInfo};
use vcle::game::Sound;
use vcle::kula::LevelSource;

fn py_err(e: EnvError) -> PyErr {
    match e {
        EnvError::BadAction(_) | EnvError::UnknownVariant(_) | EnvError::UnknownState(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn state_dict<'py>(py: Python<'py>, s: &State) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    match &s.visual {
        Some(v) => {
            d.set_item("visual", PyBytes::new(py, &v.data))?;
            d.set_item("visual_shape", v.shape().to_vec())?;
        }
        None => d.set_item("visual", py.None())?,
    }
    match &s.sound {
        None => d.set_item("sound", py.None())?,
        Some(Sound::None) => d.set_item("sound", Vec::<f64>::new())?,
        Some(Sound::Raw(w)) => d.set_item("sound", w.clone())?,
        Some(Sound::Mfcc(m)) => {
            let rows: Vec<Vec<f64>> = m.rows().map(<[f64]>::to_vec).collect();
            d.set_item("sound", rows)?;
        }
    }
    d.set_item("clock", s.clock)?;
    d.set_item("score", s.score)?;
    d.set_item("hash", s.hash_hex())?;
    Ok(d)
}

fn info_dict<'py>(py: Python<'py>, i: &StepInfo) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("duration_real", i.duration_real)?;
    d.set_item("duration_game", i.duration_game)?;
    d.set_item("score", i.score)?;
    d.set_item("clock", i.clock)?;
    d.set_item("cause", i.cause.map(|c| c.name()))?;
    d.set_item("level", i.level)?;
    d.set_item("start", i.start.to_string())?;
    Ok(d)
}

#[pyclass(unsendable)]
struct Env {
    inner: RustEnv,
}

#[pymethods]
impl Env {
    /// `name` is fixed-v1, random-v1, audio-v1 or a Kula-* id. `level` is a
    /// bundled level number or a level file path.
    #[new]
    #[pyo3(signature = (name, config=None, fast=true, eval=false, seed=0, level=None))]
    fn new(
        name: &str,
        config: Option<PathBuf>,
        fast: bool,
        eval: bool,
        seed: u64,
        level: Option<String>,
    ) -> PyResult<Self> {
        let level = level.map(|l| match l.parse::<u8>() {
            Ok(n) => LevelSource::Bundled(n),
            Err(_) => LevelSource::File(l.into()),
        });
        let opts = EnvOptions {
            fast,
            eval,
            seed,
            level,
            snapshot_dir: None,
        };
        let inner = RustEnv::make(name, config.as_deref(), opts).map_err(py_err)?;
        Ok(Env { inner })
    }

    #[pyo3(signature = (seed=None))]
    fn reset<'py>(&mut self, py: Python<'py>, seed: Option<u64>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.reset(seed).map_err(py_err)?;
        state_dict(py, &s)
    }

    /// Returns `(state, reward, done, info)`.
    fn step<'py>(
        &mut self,
        py: Python<'py>,
        action: usize,
    ) -> PyResult<(Bound<'py, PyDict>, f64, bool, Bound<'py, PyDict>)> {
        let r = self.inner.step(action).map_err(py_err)?;
        Ok((state_dict(py, &r.state)?, r.reward, r.done, info_dict(py, &r.info)?))
    }

    fn render(&self) -> PyResult<String> {
        self.inner.render_text().map_err(py_err)
    }

    fn save(&mut self) -> PyResult<u64> {
        self.inner.save_visited().map(|k| k.0).map_err(py_err)
    }

    fn resume<'py>(&mut self, py: Python<'py>, key: u64) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.resume_from(StateKey(key)).map_err(py_err)?;
        state_dict(py, &s)
    }

    fn close(&mut self) -> PyResult<()> {
        self.inner.close().map_err(py_err)
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.inner.variant().name()
    }
}

#[pymodule]
fn vcle_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Env>()?;
    m.add("N_ACTIONS", vcle::game::Action::ALL.len())?;
    Ok(())
}
