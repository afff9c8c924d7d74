//! Test-problem generators: inverse integration, deblurring in a Haar
//! basis and compressed sensing, plus noise injection, the Tikhonov (ℓ²)
//! comparison and an exportable instance bundle.
//!
//! All generators are deterministic functions of their arguments and seed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::operators::{read_csv_matrix, read_csv_vector, write_csv_matrix, LinearMap};
use crate::prox::{Problem, Weights};

/// `n × n` lower-triangular matrix with entries `1/n`: the discrete
/// antiderivative on `[0, 1]`.
pub fn integration_operator(n: usize) -> LinearMap {
    let h = 1.0 / n as f64;
    LinearMap::dense(Array2::from_shape_fn((n, n), |(i, j)| if j <= i { h } else { 0.0 }))
}

/// Orthonormal Haar synthesis `B`, mapping coefficients to samples.
///
/// Column 0 is the scaling function `1/√n`; then come wavelets from the
/// coarsest level down, each level ordered by position.
pub fn haar_synthesis(n: usize) -> Result<LinearMap> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("Haar basis needs a power-of-two size, got {n}")));
    }
    let mut b = Array2::zeros((n, n));
    b.column_mut(0).fill(1.0 / (n as f64).sqrt());
    let mut col = 1;
    let mut support = n;
    while support >= 2 {
        let amp = 1.0 / (support as f64).sqrt();
        for start in (0..n).step_by(support) {
            let half = support / 2;
            for i in start..start + half {
                b[[i, col]] = amp;
                b[[i + half, col]] = -amp;
            }
            col += 1;
        }
        support /= 2;
    }
    Ok(LinearMap::dense(b))
}

/// Circulant blur with the Lorentzian kernel `(1 + x²/λ²)⁻¹` on the grid
/// `x_i = i/n`, periodic distance, each row normalized to sum 1.
pub fn lorentzian_blur(n: usize, lambda: f64) -> Result<LinearMap> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("kernel width must be positive, got {lambda}")));
    }
    let kernel: Vec<f64> = (0..n)
        .map(|d| {
            let x = d as f64 / n as f64;
            let x = x.min(1.0 - x);
            1.0 / (1.0 + (x / lambda).powi(2))
        })
        .collect();
    let total: f64 = kernel.iter().sum();
    Ok(LinearMap::dense(Array2::from_shape_fn((n, n), |(i, j)| {
        kernel[(i + n - j) % n] / total
    })))
}

/// `m × n` matrix with orthonormal rows from seeded standard Gaussian
/// draws, orthonormalized by modified Gram-Schmidt (two passes).
pub fn cs_operator(m: usize, n: usize, seed: u64) -> Result<LinearMap> {
    if m > n {
        return Err(Error::InvalidParameter(format!("need m ≤ n, got m = {m}, n = {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a: Array2<f64> = Array2::from_shape_simple_fn((m, n), || rng.sample(StandardNormal));
    for i in 0..m {
        let original = a.row(i).dot(&a.row(i)).sqrt();
        for _pass in 0..2 {
            for j in 0..i {
                let proj = a.row(i).dot(&a.row(j));
                let rj = a.row(j).to_owned();
                a.row_mut(i).scaled_add(-proj, &rj);
            }
        }
        let norm = a.row(i).dot(&a.row(i)).sqrt();
        if !(norm > 1e-10 * original) {
            return Err(Error::RankDeficient(i));
        }
        a.row_mut(i).mapv_inplace(|x| x / norm);
    }
    Ok(LinearMap::dense(a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    InverseIntegration,
    HaarDeblur,
    CompressedSensing,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::InverseIntegration => "inverse-integration",
            ExperimentKind::HaarDeblur => "haar-deblur",
            ExperimentKind::CompressedSensing => "compressed-sensing",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse-integration" => Ok(ExperimentKind::InverseIntegration),
            "haar-deblur" => Ok(ExperimentKind::HaarDeblur),
            "compressed-sensing" => Ok(ExperimentKind::CompressedSensing),
            _ => Err(Error::Parse(format!("unknown experiment {s:?}"))),
        }
    }
}

/// How the noise vector `δ` is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Noise {
    /// `‖δ‖ / ‖f_clean + δ‖ = ρ` with `0 ≤ ρ < 1`.
    Relative(f64),
    /// `‖δ‖ = value`.
    Absolute(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub n: usize,
    /// Number of measurements; only used for compressed sensing.
    pub m: usize,
    pub noise: Noise,
    pub w_value: f64,
    pub gamma: f64,
    pub seed: u64,
}

/// Kernel width of the deblurring experiment.
pub const BLUR_LAMBDA: f64 = 0.01;

impl ExperimentSpec {
    /// `n = 500`, 5% noise, `w = 3e-3`, `γ = 5e5`.
    pub fn inverse_integration(n: usize) -> Self {
        ExperimentSpec {
            kind: ExperimentKind::InverseIntegration,
            n,
            m: n,
            noise: Noise::Relative(0.05),
            w_value: 3e-3,
            gamma: 5e5,
            seed: 1,
        }
    }

    /// 25% noise on `n` Haar coefficients, `w = 1`, `γ = 1e4`.
    ///
    /// Coefficients use the discrete orthonormal transform, so `w` is
    /// about `sqrt(n)` times larger than for an L²-normalized basis.
    pub fn haar_deblur(n: usize) -> Self {
        ExperimentSpec {
            kind: ExperimentKind::HaarDeblur,
            n,
            m: n,
            noise: Noise::Relative(0.25),
            w_value: 1.0,
            gamma: 1e4,
            seed: 1,
        }
    }

    /// `m` orthonormal Gaussian measurements of `round(n/128)` spikes, 5% noise.
    pub fn compressed_sensing(n: usize, m: usize) -> Self {
        ExperimentSpec {
            kind: ExperimentKind::CompressedSensing,
            n,
            m,
            noise: Noise::Relative(0.05),
            w_value: 0.05,
            gamma: 5e4,
            seed: 1,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_noise(mut self, noise: Noise) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_w(mut self, w: f64) -> Self {
        self.w_value = w;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    /// Number of spikes in the compressed-sensing signal.
    pub fn spikes(&self) -> usize {
        ((self.n as f64 / 128.0).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        match self.kind {
            ExperimentKind::HaarDeblur if !self.n.is_power_of_two() => {
                return Err(Error::InvalidParameter(format!("haar-deblur needs n a power of two, got {}", self.n)));
            }
            ExperimentKind::CompressedSensing if !(self.m > 0 && self.m < self.n) => {
                return Err(Error::InvalidParameter(format!(
                    "compressed-sensing needs 0 < m < n, got m = {}, n = {}",
                    self.m, self.n
                )));
            }
            _ => {}
        }
        match self.noise {
            Noise::Relative(r) if !(0.0..1.0).contains(&r) => {
                return Err(Error::InvalidParameter(format!("relative noise must lie in [0, 1), got {r}")));
            }
            Noise::Absolute(a) if !(a >= 0.0 && a.is_finite()) => {
                return Err(Error::InvalidParameter(format!("absolute noise must be nonnegative, got {a}")));
            }
            _ => {}
        }
        if !(self.w_value > 0.0 && self.w_value.is_finite()) {
            return Err(Error::InvalidParameter(format!("w must be positive, got {}", self.w_value)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// The unknown in the problem's variables (Haar coefficients for deblurring).
    pub u_true: Array1<f64>,
    pub f_clean: Array1<f64>,
    pub f_noisy: Array1<f64>,
    /// `‖f_noisy − f_clean‖`.
    pub noise_norm: f64,
    /// Sampled signal for deblurring, `B u_true`; equal to `u_true` otherwise.
    pub signal: Array1<f64>,
}

/// Four non-overlapping plateaus on `[0, 1]`, zero elsewhere.
///
/// The unit interval is split into four slots; each holds one narrow
/// plateau of width 2/64 to 4/64 and height ±(5 to 10), so the integrated
/// data shows steep ramps. Breakpoints are multiples of 1/64, so the same
/// function is sampled at every resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Plateaus {
    pieces: Vec<(f64, f64, f64)>,
}

impl Plateaus {
    pub fn random(rng: &mut impl Rng) -> Self {
        const GRID: f64 = 64.0;
        let pieces = (0..4)
            .map(|slot| {
                // Slot `slot` covers [slot/4, (slot+1)/4], i.e. 16 grid cells.
                let width = rng.random_range(2..=4);
                let offset = rng.random_range(1..=(15 - width));
                let start = (16 * slot + offset) as f64 / GRID;
                let end = start + width as f64 / GRID;
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                (start, end, sign * rng.random_range(5.0..=10.0))
            })
            .collect();
        Plateaus { pieces }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.pieces
            .iter()
            .find(|(a, b, _)| t >= *a && t < *b)
            .map_or(0.0, |p| p.2)
    }

    /// Samples at the cell midpoints `(k + ½)/n`.
    pub fn sample(&self, n: usize) -> Array1<f64> {
        (0..n).map(|k| self.eval((k as f64 + 0.5) / n as f64)).collect()
    }
}

/// Adds `δ = t g`, `g` standard Gaussian, with `t` chosen for the requested
/// noise level. Returns `(f_noisy, ‖δ‖)`.
pub fn add_noise(f_clean: ArrayView1<f64>, noise: Noise, rng: &mut impl Rng) -> Result<(Array1<f64>, f64)> {
    let g: Array1<f64> = (0..f_clean.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let gg = g.dot(&g);
    let scale = match noise {
        Noise::Absolute(0.0) | Noise::Relative(0.0) => 0.0,
        _ if gg == 0.0 => return Err(Error::InvalidParameter("cannot add noise to an empty vector".into())),
        Noise::Absolute(a) => a / gg.sqrt(),
        Noise::Relative(rho) => {
            // ‖t g‖² = ρ²‖c + t g‖²  ⇔  t²‖g‖²(1 − ρ²) − 2ρ²t⟨c, g⟩ − ρ²‖c‖² = 0.
            let cg = f_clean.dot(&g);
            let cc = f_clean.dot(&f_clean);
            let (a, b, c) = (gg * (1.0 - rho * rho), -2.0 * rho * rho * cg, -rho * rho * cc);
            (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)
        }
    };
    if scale == 0.0 {
        return Ok((f_clean.to_owned(), 0.0));
    }
    let delta = g * scale;
    let norm = delta.dot(&delta).sqrt();
    Ok((&f_clean + &delta, norm))
}

/// Builds the operator, ground truth, noisy data and the problem for `spec`.
pub fn make_instance(spec: &ExperimentSpec) -> Result<(Problem, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let (k, u_true, signal) = match spec.kind {
        ExperimentKind::InverseIntegration => {
            let u = Plateaus::random(&mut rng).sample(n);
            (integration_operator(n), u.clone(), u)
        }
        ExperimentKind::HaarDeblur => {
            let signal = Plateaus::random(&mut rng).sample(n);
            let b = haar_synthesis(n)?;
            let coeffs = b.adjoint_apply(signal.view())?;
            let k = LinearMap::compose(lorentzian_blur(n, BLUR_LAMBDA)?, b)?;
            (k, coeffs, signal)
        }
        ExperimentKind::CompressedSensing => {
            let k = cs_operator(spec.m, n, rng.random())?;
            let mut u = Array1::zeros(n);
            let spikes = spec.spikes().min(n);
            let mut positions: Vec<usize> = (0..n).collect();
            for i in 0..spikes {
                let j = rng.random_range(i..n);
                positions.swap(i, j);
                u[positions[i]] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            }
            (k, u.clone(), u)
        }
    };
    let f_clean = k.apply(u_true.view())?;
    let (f_noisy, noise_norm) = add_noise(f_clean.view(), spec.noise, &mut rng)?;
    let weights = Weights::constant(n, spec.w_value)?;
    let problem = Problem::new(k, f_noisy.clone(), weights, spec.gamma)?;
    Ok((
        problem,
        GroundTruth {
            u_true,
            f_clean,
            f_noisy,
            noise_norm,
            signal,
        },
    ))
}

/// Minimizer of `½‖Kc − f‖² + Σ w_k c_k²`, from `(K^T K + 2 diag(w)) c = K^T f`.
pub fn l2_reconstruction(p: &Problem) -> Result<Array1<f64>> {
    let k = p.operator();
    let dense = k.to_dense();
    let mut normal = dense.t().dot(&dense);
    for (i, &w) in p.weights().values().iter().enumerate() {
        normal[[i, i]] += 2.0 * w;
    }
    let rhs = k.adjoint_apply(p.data())?;
    Ok(Cholesky::factor(&normal)?.solve(rhs.view()))
}

/// Self-contained problem instance for exchange with other tools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceBundle {
    /// Row-major `K`.
    pub matrix: Vec<Vec<f64>>,
    pub f: Vec<f64>,
    pub w: Vec<f64>,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_true: Option<Vec<f64>>,
}

impl InstanceBundle {
    pub fn from_problem(p: &Problem, u_true: Option<ArrayView1<f64>>) -> Self {
        InstanceBundle {
            matrix: p.operator().to_dense().rows().into_iter().map(|r| r.to_vec()).collect(),
            f: p.data().to_vec(),
            w: p.weights().values().to_vec(),
            gamma: p.gamma(),
            u_true: u_true.map(|u| u.to_vec()),
        }
    }

    pub fn to_problem(&self) -> Result<Problem> {
        let rows = self.matrix.len();
        let cols = self.matrix.first().map_or(0, Vec::len);
        if self.matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::Parse("matrix rows have different lengths".into()));
        }
        let data: Vec<f64> = self.matrix.iter().flatten().copied().collect();
        let k = Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Parse(e.to_string()))?;
        Problem::new(
            LinearMap::dense(k),
            Array1::from(self.f.clone()),
            Weights::new(Array1::from(self.w.clone()))?,
            self.gamma,
        )
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut out, self)?;
        out.flush()?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }

    /// Writes `K.csv`, `f.csv`, `w.csv`, `gamma.csv` and, if present,
    /// `u_true.csv` into `dir`. Vectors are stored as one column.
    pub fn write_csv_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let cols = self.matrix.first().map_or(0, Vec::len);
        let k = Array2::from_shape_fn((self.matrix.len(), cols), |(i, j)| self.matrix[i][j]);
        write_csv_matrix(File::create(dir.join("K.csv"))?, &k)?;
        let column = |v: &[f64]| Array2::from_shape_fn((v.len(), 1), |(i, _)| v[i]);
        write_csv_matrix(File::create(dir.join("f.csv"))?, &column(&self.f))?;
        write_csv_matrix(File::create(dir.join("w.csv"))?, &column(&self.w))?;
        write_csv_matrix(File::create(dir.join("gamma.csv"))?, &column(&[self.gamma]))?;
        if let Some(u) = &self.u_true {
            write_csv_matrix(File::create(dir.join("u_true.csv"))?, &column(u))?;
        }
        Ok(())
    }

    pub fn read_csv_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let k = read_csv_matrix(File::open(dir.join("K.csv"))?)?;
        let vector = |name: &str| -> Result<Vec<f64>> { Ok(read_csv_vector(File::open(dir.join(name))?)?.to_vec()) };
        let gamma = vector("gamma.csv")?;
        if gamma.len() != 1 {
            return Err(Error::Parse("gamma.csv must hold one value".into()));
        }
        let u_path = dir.join("u_true.csv");
        Ok(InstanceBundle {
            matrix: k.rows().into_iter().map(|r| r.to_vec()).collect(),
            f: vector("f.csv")?,
            w: vector("w.csv")?,
            gamma: gamma[0],
            u_true: if u_path.exists() { Some(vector("u_true.csv")?) } else { None },
        })
    }
}
