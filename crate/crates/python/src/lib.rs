//! Python bindings for the `vqsplit` codec.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use vqsplit::{codec, metrics, persistence, pixelgrid, quantizer};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

type Row = (f64, f64, f64, f64);

#[derive(FromPyObject)]
enum TextOrBytes {
    Text(String),
    Bytes(Vec<u8>),
}

fn to_block(r: Row) -> pixelgrid::BlockVector {
    pixelgrid::BlockVector([r.0, r.1, r.2, r.3])
}

fn to_row(b: &pixelgrid::BlockVector) -> Row {
    (b.0[0], b.0[1], b.0[2], b.0[3])
}

/// An 8-bit grayscale image.
#[pyclass(
    name = "GrayImage",
    module = "vqsplit",
    frozen,
    eq,
    skip_from_py_object
)]
#[derive(Clone, PartialEq)]
pub struct PyGrayImage(pixelgrid::GrayImage);

#[pymethods]
impl PyGrayImage {
    #[new]
    fn new(width: usize, height: usize, pixels: Vec<u8>) -> PyResult<Self> {
        pixelgrid::GrayImage::new(width, height, pixels)
            .map(Self)
            .map_err(value_error)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    /// Row-major pixel bytes.
    #[getter]
    fn pixels<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.0.pixels())
    }

    /// Parses a P2 or P5 PGM.
    #[staticmethod]
    fn from_pgm(data: &[u8]) -> PyResult<Self> {
        pixelgrid::load_pgm(data).map(Self).map_err(value_error)
    }

    /// Encodes as binary P5.
    fn to_pgm<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &pixelgrid::save_pgm(&self.0))
    }

    /// The 2x2 blocks as `(tl, tr, bl, br)` tuples, row-major.
    fn blocks(&self) -> Vec<Row> {
        pixelgrid::image_to_blocks(&self.0)
            .iter()
            .map(to_row)
            .collect()
    }

    #[staticmethod]
    fn from_blocks(blocks: Vec<Row>, width: usize, height: usize) -> PyResult<Self> {
        let blocks: Vec<_> = blocks.into_iter().map(to_block).collect();
        pixelgrid::blocks_to_image(&blocks, width, height)
            .map(Self)
            .map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!("GrayImage({}x{})", self.0.width(), self.0.height())
    }
}

/// An ordered set of 4-component centroids.
#[pyclass(name = "Codebook", module = "vqsplit", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyCodebook(quantizer::Codebook);

#[pymethods]
impl PyCodebook {
    #[new]
    fn new(centroids: Vec<Row>) -> PyResult<Self> {
        quantizer::Codebook::new(centroids.into_iter().map(to_block).collect())
            .map(Self)
            .map_err(value_error)
    }

    #[getter]
    fn centroids(&self) -> Vec<Row> {
        self.0.centroids().iter().map(to_row).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Index of the nearest centroid to `block`, lowest index on ties.
    fn find_match(&self, block: Row) -> usize {
        quantizer::find_match(&to_block(block), &self.0)
    }

    /// Nearest-centroid owners and the per-component distortion.
    fn assign(&self, blocks: Vec<Row>) -> (Vec<usize>, f64) {
        let blocks: Vec<_> = blocks.into_iter().map(to_block).collect();
        let (membership, distortion) = quantizer::assign_members(&blocks, &self.0);
        (membership.owners().to_vec(), distortion)
    }

    /// The `vqc` CSV text form.
    fn to_csv(&self) -> String {
        String::from_utf8(persistence::save_codebook(&self.0)).expect("codebook text is ASCII")
    }

    /// Parses the CSV form, given as `str` or `bytes`.
    #[staticmethod]
    fn from_csv(data: TextOrBytes) -> PyResult<Self> {
        let bytes = match &data {
            TextOrBytes::Text(s) => s.as_bytes(),
            TextOrBytes::Bytes(b) => b.as_slice(),
        };
        persistence::load_codebook(bytes)
            .map(Self)
            .map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!("Codebook(size={})", self.0.len())
    }
}

/// One codeword index per 2x2 block of an image.
#[pyclass(name = "IndexMap", module = "vqsplit", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyIndexMap(codec::IndexMap);

#[pymethods]
impl PyIndexMap {
    #[new]
    fn new(
        orig_width: usize,
        orig_height: usize,
        codebook_size: usize,
        indices: Vec<u16>,
    ) -> PyResult<Self> {
        codec::IndexMap::new(orig_width, orig_height, codebook_size, indices)
            .map(Self)
            .map_err(value_error)
    }

    #[getter]
    fn orig_width(&self) -> usize {
        self.0.orig_width()
    }

    #[getter]
    fn orig_height(&self) -> usize {
        self.0.orig_height()
    }

    #[getter]
    fn blocks_w(&self) -> usize {
        self.0.blocks_w()
    }

    #[getter]
    fn blocks_h(&self) -> usize {
        self.0.blocks_h()
    }

    #[getter]
    fn codebook_size(&self) -> usize {
        self.0.codebook_size()
    }

    #[getter]
    fn indices(&self) -> Vec<u16> {
        self.0.indices().to_vec()
    }

    /// The big-endian `VQI1` file form.
    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &persistence::save_index_file(&self.0))
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        persistence::load_index_file(data)
            .map(Self)
            .map_err(value_error)
    }

    /// Empirical entropy of the indices in bits per index.
    fn entropy(&self) -> PyResult<f64> {
        metrics::shannon_entropy(self.0.indices(), self.0.codebook_size()).map_err(value_error)
    }

    fn __len__(&self) -> usize {
        self.0.indices().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "IndexMap({}x{}, codebook_size={})",
            self.0.orig_width(),
            self.0.orig_height(),
            self.0.codebook_size()
        )
    }
}

#[pyclass(name = "TrainerReport", module = "vqsplit", frozen, get_all)]
pub struct PyTrainerReport {
    /// `(codebook_size, distortion)` after every Lloyd pass.
    rounds: Vec<(usize, f64)>,
    elapsed_seconds: f64,
}

#[pymethods]
impl PyTrainerReport {
    #[getter]
    fn final_distortion(&self) -> Option<f64> {
        self.rounds.last().map(|r| r.1)
    }
}

#[pyclass(name = "QualityReport", module = "vqsplit", frozen, get_all)]
pub struct PyQualityReport {
    mse: f64,
    psnr_db: f64,
    entropy_bits: f64,
    raw_index_bpp: f64,
    entropy_bpp: f64,
    original_bpp: f64,
    compression_ratio: f64,
}

#[pymethods]
impl PyQualityReport {
    /// `(name, value)` pairs in report order.
    fn items(&self) -> Vec<(&'static str, f64)> {
        self.inner().fields().to_vec()
    }

    fn to_json(&self) -> String {
        metrics::render_json(&self.inner().fields())
    }

    fn __repr__(&self) -> String {
        format!("QualityReport(mse={}, psnr_db={})", self.mse, self.psnr_db)
    }
}

impl PyQualityReport {
    fn inner(&self) -> metrics::QualityReport {
        metrics::QualityReport {
            mse: self.mse,
            psnr_db: self.psnr_db,
            entropy_bits: self.entropy_bits,
            raw_index_bpp: self.raw_index_bpp,
            entropy_bpp: self.entropy_bpp,
            original_bpp: self.original_bpp,
            compression_ratio: self.compression_ratio,
        }
    }
}

impl From<metrics::QualityReport> for PyQualityReport {
    fn from(r: metrics::QualityReport) -> Self {
        Self {
            mse: r.mse,
            psnr_db: r.psnr_db,
            entropy_bits: r.entropy_bits,
            raw_index_bpp: r.raw_index_bpp,
            entropy_bpp: r.entropy_bpp,
            original_bpp: r.original_bpp,
            compression_ratio: r.compression_ratio,
        }
    }
}

/// Trains a codebook of `size` centroids on the 2x2 blocks of `image`.
#[pyfunction]
#[pyo3(signature = (image, size, *, seed = 0, delta = 1.0, inner_iters = 1, refine_iters = 0))]
fn train_codebook(
    py: Python<'_>,
    image: &PyGrayImage,
    size: usize,
    seed: u64,
    delta: f64,
    inner_iters: usize,
    refine_iters: usize,
) -> PyResult<(PyCodebook, PyTrainerReport)> {
    let config = quantizer::TrainerConfig {
        target_size: size,
        delta,
        seed,
        inner_iters,
        refine_iters,
    };
    let vectors = pixelgrid::image_to_blocks(&image.0);
    let (codebook, report) = py
        .detach(|| quantizer::train_codebook(&vectors, &config))
        .map_err(value_error)?;
    Ok((
        PyCodebook(codebook),
        PyTrainerReport {
            rounds: report
                .rounds
                .iter()
                .map(|p| (p.codebook_size, p.distortion))
                .collect(),
            elapsed_seconds: report.elapsed.as_secs_f64(),
        },
    ))
}

#[pyfunction]
fn compress_image(image: &PyGrayImage, codebook: &PyCodebook) -> PyResult<PyIndexMap> {
    codec::compress_image(&image.0, &codebook.0)
        .map(PyIndexMap)
        .map_err(value_error)
}

#[pyfunction]
fn decompress_image(map: &PyIndexMap, codebook: &PyCodebook) -> PyResult<PyGrayImage> {
    codec::decompress_image(&map.0, &codebook.0)
        .map(PyGrayImage)
        .map_err(value_error)
}

#[pyfunction]
fn mse(a: &PyGrayImage, b: &PyGrayImage) -> PyResult<f64> {
    metrics::mse(&a.0, &b.0).map_err(value_error)
}

/// PSNR in dB for 8-bit data; `inf` when `mse` is zero.
#[pyfunction]
fn psnr(mse: f64) -> PyResult<f64> {
    metrics::psnr(mse).map_err(value_error)
}

#[pyfunction]
fn shannon_entropy(indices: Vec<u16>, m: usize) -> PyResult<f64> {
    metrics::shannon_entropy(&indices, m).map_err(value_error)
}

#[pyfunction]
fn evaluate(
    original: &PyGrayImage,
    reconstructed: &PyGrayImage,
    map: &PyIndexMap,
) -> PyResult<PyQualityReport> {
    metrics::QualityReport::evaluate(&original.0, &reconstructed.0, &map.0)
        .map(PyQualityReport::from)
        .map_err(value_error)
}

#[pymodule]
#[pyo3(name = "vqsplit")]
fn vqsplit_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrayImage>()?;
    m.add_class::<PyCodebook>()?;
    m.add_class::<PyIndexMap>()?;
    m.add_class::<PyTrainerReport>()?;
    m.add_class::<PyQualityReport>()?;
    m.add_function(wrap_pyfunction!(train_codebook, m)?)?;
    m.add_function(wrap_pyfunction!(compress_image, m)?)?;
    m.add_function(wrap_pyfunction!(decompress_image, m)?)?;
    m.add_function(wrap_pyfunction!(mse, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(shannon_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
