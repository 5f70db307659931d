//! Python bindings: decoding graphs, samplers, the decoder and memory runs.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use collision_clustering::decoder::{self, DecoderOptions, Pruning};
use collision_clustering::experiment::{self, ExperimentConfig};
use collision_clustering::geometry::{self, DecodingGraph, DistanceFunction, NoiseModel};
use collision_clustering::sampler::{self, DefectSet, NoiseParams, RngStream};

fn err(e: collision_clustering::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn model(name: &str) -> PyResult<NoiseModel> {
    match name {
        "circuit" | "circuit_level" => Ok(NoiseModel::CircuitLevel),
        "phenom" | "phenomenological" => Ok(NoiseModel::Phenomenological),
        _ => Err(PyValueError::new_err(format!("unknown noise model {name:?}"))),
    }
}

fn pruning(name: &str) -> PyResult<Pruning> {
    Pruning::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown pruning mode {name:?}")))
}

fn defect_set(graph: &DecodingGraph, defects: Vec<u32>) -> PyResult<DefectSet> {
    let mut defects = defects;
    defects.sort_unstable();
    let set = DefectSet::new(0, defects, false);
    set.validate(graph.num_vertices()).map_err(err)?;
    Ok(set)
}

/// Decoding graph of a rotated planar code memory experiment.
#[pyclass(name = "Graph", frozen)]
struct PyGraph {
    inner: DecodingGraph,
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (distance, rounds=None, model="circuit"))]
    fn new(distance: usize, rounds: Option<usize>, model: &str) -> PyResult<Self> {
        let m = self::model(model)?;
        let inner = geometry::build_graph(distance, rounds.unwrap_or(distance), m).map_err(err)?;
        Ok(PyGraph { inner })
    }

    #[getter]
    fn distance(&self) -> usize {
        self.inner.distance
    }

    #[getter]
    fn rounds(&self) -> usize {
        self.inner.rounds
    }

    #[getter]
    fn model(&self) -> String {
        self.inner.model.to_string()
    }

    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    /// `(x1, x2, t)` of every vertex.
    fn vertices(&self) -> Vec<(i32, i32, i32)> {
        self.inner.vertices.iter().map(|c| (c.x1, c.x2, c.t)).collect()
    }

    /// `(u, v, kind, flip_probability)` per edge; `v` is None for boundary edges.
    fn edges(&self) -> Vec<(usize, Option<usize>, String, f64)> {
        self.inner
            .edges
            .iter()
            .map(|e| (e.u, e.v, format!("{:?}", e.kind), e.flip_probability))
            .collect()
    }

    /// Closed-form graph distance between two vertex ids.
    fn distance_between(&self, a: usize, b: usize) -> PyResult<u32> {
        let n = self.inner.num_vertices();
        if a >= n || b >= n {
            return Err(PyValueError::new_err(format!("vertex out of range for {n} vertices")));
        }
        Ok(self.inner.metric().distance(self.inner.vertices[a], self.inner.vertices[b]))
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(distance={}, rounds={}, model={:?}, vertices={})",
            self.inner.distance,
            self.inner.rounds,
            self.inner.model.to_string(),
            self.inner.num_vertices()
        )
    }
}

/// Syndrome sampler at fixed physical error probability.
#[pyclass(name = "Sampler", frozen)]
struct PySampler {
    inner: sampler::Sampler,
}

#[pymethods]
impl PySampler {
    #[new]
    fn new(graph: &PyGraph, p: f64) -> PyResult<Self> {
        let noise = NoiseParams::new(p, graph.inner.model).map_err(err)?;
        let inner = sampler::Sampler::new(&graph.inner, noise).map_err(err)?;
        Ok(PySampler { inner })
    }

    /// Defects and true logical flip of shot `shot` under `seed`.
    fn sample(&self, seed: u64, shot: u64) -> (Vec<u32>, bool) {
        let s = self.inner.sample(RngStream::new(seed, shot));
        (s.defects, s.true_logical_flip)
    }

    #[pyo3(signature = (seed, shots, start=0))]
    fn sample_many(&self, py: Python<'_>, seed: u64, shots: u64, start: u64) -> Vec<(Vec<u32>, bool)> {
        py.allow_threads(|| {
            self.inner
                .stream(shots, RngStream::new(seed, start))
                .map(|s| (s.defects, s.true_logical_flip))
                .collect()
        })
    }
}

/// Collision Clustering decoder bound to one graph.
#[pyclass(name = "Decoder")]
struct PyDecoder {
    graph: DecodingGraph,
    inner: decoder::Decoder,
}

#[pymethods]
impl PyDecoder {
    #[new]
    #[pyo3(signature = (graph, pruning="none"))]
    fn new(graph: &PyGraph, pruning: &str) -> PyResult<Self> {
        let opts = DecoderOptions::with_pruning(self::pruning(pruning)?);
        Ok(PyDecoder {
            graph: graph.inner.clone(),
            inner: decoder::Decoder::new(&graph.inner, opts),
        })
    }

    /// Logical correction bit for a list of defect vertex ids.
    fn decode(&mut self, defects: Vec<u32>) -> PyResult<bool> {
        let set = defect_set(&self.graph, defects)?;
        self.inner.decode_fast(&set).map_err(err)
    }

    /// Correction bit plus the operation counters of the decode.
    fn decode_with_counts<'py>(&mut self, py: Python<'py>, defects: Vec<u32>) -> PyResult<(bool, Bound<'py, PyDict>)> {
        let set = defect_set(&self.graph, defects)?;
        let out = self.inner.decode(&set).map_err(err)?;
        let counts = PyDict::new(py);
        for (name, value) in collision_clustering::instrument::OpCounters::NAMES
            .iter()
            .zip(out.op_counts.as_array())
        {
            counts.set_item(*name, value)?;
        }
        counts.set_item("growth_iterations", out.growth_iterations)?;
        Ok((out.correction, counts))
    }

    /// Cluster label per defect vertex, after the last decode.
    fn clusters(&self) -> Vec<(u32, u32)> {
        self.inner.partition().labels.into_iter().collect()
    }
}

/// Logical memory experiment; returns one dict per `(distance, p)` point.
#[pyfunction]
#[pyo3(signature = (distances, ps, model="circuit", shots=10_000, seed=0, pruning="valid+time", rounds=None))]
#[allow(clippy::too_many_arguments)]
fn run_memory<'py>(
    py: Python<'py>,
    distances: Vec<usize>,
    ps: Vec<f64>,
    model: &str,
    shots: u64,
    seed: u64,
    pruning: &str,
    rounds: Option<usize>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let config = ExperimentConfig {
        distances,
        rounds,
        ps,
        model: self::model(model)?,
        shots,
        seed,
        pruning: self::pruning(pruning)?,
    };
    let result = py.allow_threads(|| experiment::run_memory_experiment(&config)).map_err(err)?;
    result
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("distance", r.distance)?;
            d.set_item("rounds", r.rounds)?;
            d.set_item("p", r.p)?;
            d.set_item("shots", r.shots)?;
            d.set_item("failures", r.failures)?;
            d.set_item("logical_error_rate", r.logical_error_rate)?;
            d.set_item("standard_error", r.standard_error)?;
            Ok(d)
        })
        .collect()
}

/// Reference union-find correction, for cross-checking.
#[pyfunction]
fn reference_decode(graph: &PyGraph, defects: Vec<u32>) -> PyResult<bool> {
    let set = defect_set(&graph.inner, defects)?;
    collision_clustering::oracles::reference_uf_decode(&graph.inner, &set)
        .map(|(_, c)| c)
        .map_err(err)
}

#[pymodule]
fn ccdecoder(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PySampler>()?;
    m.add_class::<PyDecoder>()?;
    m.add_function(wrap_pyfunction!(run_memory, m)?)?;
    m.add_function(wrap_pyfunction!(reference_decode, m)?)?;
    Ok(())
}
