//! Pre/post-selected finite-dimensional systems, involutory observables and
//! weak values, including the polarizing Mach–Zehnder interferometer.

use num_complex::Complex64;

use crate::error::{Result, WvaError};

/// Complex scalar used for wavefunction samples, overlaps and weak values.
pub type Amplitude = Complex64;

/// Default threshold below which `|⟨post|pre⟩|` counts as orthogonal.
pub const DEFAULT_ORTHOGONALITY_EPS: f64 = 1e-12;

const MATRIX_TOL: f64 = 1e-12;

fn check_finite(values: &[Amplitude], what: &str) -> Result<()> {
    if values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(WvaError::NonFinite(what.to_string()))
    }
}

/// Normalized state vector over a fixed basis (dimension >= 2).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    amplitudes: Vec<Amplitude>,
}

impl SystemState {
    /// Normalizes `amplitudes`; zero vectors and non-finite entries are rejected.
    pub fn new(amplitudes: Vec<Amplitude>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(WvaError::DimensionMismatch {
                expected: 2,
                found: amplitudes.len(),
            });
        }
        check_finite(&amplitudes, "state amplitude")?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(WvaError::ZeroVector);
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| Amplitude::new(a, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amplitudes
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &SystemState) -> Result<Amplitude> {
        if self.dim() != other.dim() {
            return Err(WvaError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn with_global_phase(&self, phase: f64) -> SystemState {
        let factor = Amplitude::from_polar(1.0, phase);
        SystemState {
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
        }
    }
}

/// Square matrix over the system basis, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<Amplitude>,
}

impl Operator {
    pub fn new(rows: Vec<Vec<Amplitude>>) -> Result<Self> {
        let dim = rows.len();
        if dim < 2 {
            return Err(WvaError::DimensionMismatch {
                expected: 2,
                found: dim,
            });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(WvaError::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        let entries: Vec<Amplitude> = rows.into_iter().flatten().collect();
        check_finite(&entries, "operator entry")?;
        Ok(Self { dim, entries })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        Self::new(
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| Amplitude::new(if i == j { values[i] } else { 0.0 }, 0.0))
                        .collect()
                })
                .collect(),
        )
    }

    /// `|v⟩⟨v|`
    pub fn projector(v: &SystemState) -> Self {
        let a = v.amplitudes();
        Self {
            dim: a.len(),
            entries: a
                .iter()
                .flat_map(|ai| a.iter().map(move |aj| ai * aj.conj()))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, row: usize, col: usize) -> Amplitude {
        self.entries[row * self.dim + col]
    }

    pub fn rows(&self) -> Vec<Vec<Amplitude>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    /// `⟨bra|M|ket⟩`
    pub fn matrix_element(&self, bra: &SystemState, ket: &SystemState) -> Result<Amplitude> {
        for s in [bra, ket] {
            if s.dim() != self.dim {
                return Err(WvaError::DimensionMismatch {
                    expected: self.dim,
                    found: s.dim(),
                });
            }
        }
        let b = bra.amplitudes();
        let k = ket.amplitudes();
        Ok((0..self.dim)
            .map(|i| {
                let row: Amplitude = (0..self.dim).map(|j| self.at(i, j) * k[j]).sum();
                b[i].conj() * row
            })
            .sum())
    }

    /// `scale·M + shift·1`
    pub fn affine(&self, scale: f64, shift: f64) -> Operator {
        let mut out = self.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let idx = i * self.dim + j;
                out.entries[idx] = self.entries[idx] * scale + if i == j { shift } else { 0.0 };
            }
        }
        out
    }
}

/// Hermitian operator with `M·M = 1`, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable(Operator);

impl Observable {
    pub fn new(rows: Vec<Vec<Amplitude>>) -> Result<Self> {
        Self::from_operator(Operator::new(rows)?)
    }

    pub fn from_operator(op: Operator) -> Result<Self> {
        let dim = op.dim();
        let mut hermitian_dev = 0.0f64;
        let mut involution_dev = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                hermitian_dev = hermitian_dev.max((op.at(i, j) - op.at(j, i).conj()).norm());
                let square: Amplitude = (0..dim).map(|k| op.at(i, k) * op.at(k, j)).sum();
                let identity = if i == j { 1.0 } else { 0.0 };
                involution_dev = involution_dev.max((square - identity).norm());
            }
        }
        if hermitian_dev > MATRIX_TOL {
            return Err(WvaError::NotHermitian {
                deviation: hermitian_dev,
            });
        }
        if involution_dev > MATRIX_TOL {
            return Err(WvaError::NotInvolutory {
                deviation: involution_dev,
            });
        }
        Ok(Self(op))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::from_operator(Operator::diagonal(values)?)
    }

    /// `2|v⟩⟨v| - 1` for a normalized `v`.
    pub fn reflection(v: &SystemState) -> Result<Self> {
        Self::from_operator(Operator::projector(v).affine(2.0, -1.0))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_operator(&self) -> &Operator {
        &self.0
    }

    pub fn rows(&self) -> Vec<Vec<Amplitude>> {
        self.0.rows()
    }

    pub fn matrix_element(&self, bra: &SystemState, ket: &SystemState) -> Result<Amplitude> {
        self.0.matrix_element(bra, ket)
    }
}

/// Weak value together with the selection overlap `⟨post|pre⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValue {
    value: Amplitude,
    overlap: Amplitude,
}

impl WeakValue {
    /// A bare weak value with unit overlap, for scenarios specified directly
    /// by `A_w` rather than by states. Weights then come out relative to the
    /// (unknown) post-selection probability.
    pub fn from_value(value: Amplitude) -> Result<Self> {
        Self::with_overlap(value, Amplitude::new(1.0, 0.0))
    }

    pub fn with_overlap(value: Amplitude, overlap: Amplitude) -> Result<Self> {
        check_finite(&[value, overlap], "weak value")?;
        if overlap.norm() < DEFAULT_ORTHOGONALITY_EPS {
            return Err(WvaError::OrthogonalSelection {
                overlap: overlap.norm(),
            });
        }
        Ok(Self { value, overlap })
    }

    pub fn value(&self) -> Amplitude {
        self.value
    }

    pub fn overlap(&self) -> Amplitude {
        self.overlap
    }

    pub fn success_probability(&self) -> f64 {
        self.overlap.norm_sqr()
    }

    /// Weak value of `scale·X + shift·1` given that of `X`.
    pub fn affine(&self, scale: f64, shift: f64) -> WeakValue {
        WeakValue {
            value: self.value * scale + shift,
            overlap: self.overlap,
        }
    }
}

/// `⟨post|obs|pre⟩ / ⟨post|pre⟩` with the default orthogonality threshold.
pub fn compute_weak_value(
    pre: &SystemState,
    post: &SystemState,
    obs: &Observable,
) -> Result<WeakValue> {
    compute_weak_value_with_eps(pre, post, obs, DEFAULT_ORTHOGONALITY_EPS)
}

pub fn compute_weak_value_with_eps(
    pre: &SystemState,
    post: &SystemState,
    obs: &Observable,
    eps: f64,
) -> Result<WeakValue> {
    operator_weak_value(pre, post, obs.as_operator(), eps)
}

/// Weak value of an arbitrary operator (projectors included).
pub fn operator_weak_value(
    pre: &SystemState,
    post: &SystemState,
    op: &Operator,
    eps: f64,
) -> Result<WeakValue> {
    let overlap = post.inner(pre)?;
    let numerator = op.matrix_element(post, pre)?;
    if overlap.norm() < eps {
        return Err(WvaError::OrthogonalSelection {
            overlap: overlap.norm(),
        });
    }
    WeakValue::with_overlap(numerator / overlap, overlap)
}

/// Selection states and observable of the polarizing Mach–Zehnder setup.
#[derive(Debug, Clone, PartialEq)]
pub struct MachZehnderSetup {
    pub pre: SystemState,
    pub post: SystemState,
    /// `2|C⟩⟨C| - 1`, the involutory observable used for the probe coupling.
    pub observable: Observable,
    /// `|C⟩⟨C|`, the path projector whose weak value is `C_w`.
    pub projector: Operator,
}

/// Two-dimensional representation in the basis `{|H,B⟩, |V,C⟩}`.
///
/// The pre-selected state is `cos χ |H,B⟩ + sin χ |V,C⟩`. The polarizer state
/// `cos φ |H⟩ + sin φ |V⟩` in port D, pulled back through the output beam
/// splitter, becomes `-cos φ |H,B⟩ + sin φ |V,C⟩` (common `1/2` dropped).
pub fn mach_zehnder_setup(chi: f64, phi: f64) -> Result<MachZehnderSetup> {
    let (sc, cc) = chi.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let pre = SystemState::from_real(&[cc, sc])?;
    let post = SystemState::from_real(&[-cp, sp])?;
    let path_c = SystemState::from_real(&[0.0, 1.0])?;
    let observable = Observable::reflection(&path_c)?;
    let projector = Operator::projector(&path_c);
    Ok(MachZehnderSetup {
        pre,
        post,
        observable,
        projector,
    })
}

/// Closed form `C_w = -sin χ sin φ / cos(χ + φ)` of the path-C projector.
///
/// The weak value of `2|C⟩⟨C| - 1` is `result.affine(2.0, -1.0)`.
pub fn mach_zehnder_weak_value(chi: f64, phi: f64) -> Result<WeakValue> {
    let denom = (chi + phi).cos();
    if denom.abs() < DEFAULT_ORTHOGONALITY_EPS {
        return Err(WvaError::OrthogonalSelection {
            overlap: denom.abs(),
        });
    }
    let value = -chi.sin() * phi.sin() / denom;
    WeakValue::with_overlap(Amplitude::new(value, 0.0), Amplitude::new(-denom, 0.0))
}
