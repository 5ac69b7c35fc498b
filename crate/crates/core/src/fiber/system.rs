use super::coupling::{build_coupling, CouplingMatrix};
use super::encode::{encode_and_project, render_intensity};
use super::geometry::{FiberGeometry, OpticsConfig};
use super::kerr::GaussHermiteKerr;
use super::modes::{build_mode_basis, ModeBasis};
use super::propagate::{CwPropagator, ModeState};
use super::store::NamedArrays;
use crate::error::{Error, Result};
use crate::hashing::Hasher;
use num_complex::Complex64 as C64;
use std::path::{Path, PathBuf};

/// A seeded fiber (basis, disorder, Kerr operator) built once and shared
/// read-only by every transform call.
#[derive(Debug, Clone)]
pub struct FiberSystem {
    pub geometry: FiberGeometry,
    pub config: OpticsConfig,
    pub basis: ModeBasis,
    pub coupling: CouplingMatrix,
    kerr: GaussHermiteKerr,
    propagator: CwPropagator,
    fingerprint: String,
}

impl FiberSystem {
    pub fn build(geometry: &FiberGeometry, config: &OpticsConfig) -> Result<Self> {
        config.validate(geometry)?;
        let basis = build_mode_basis(geometry, config.mode_count, config.grid)?;
        let coupling = build_coupling(
            config.mode_count,
            config.coupling_strength * geometry.group_spacing(),
            config.seed,
        )?;
        Self::assemble(geometry, config, basis, coupling)
    }

    /// Like [`FiberSystem::build`], persisting basis and disorder under `dir`
    /// and reusing them when present.
    pub fn build_cached(geometry: &FiberGeometry, config: &OpticsConfig, dir: &Path) -> Result<Self> {
        config.validate(geometry)?;
        let path = Self::cache_path(geometry, config, dir);
        if path.exists() {
            let arrays = NamedArrays::load(&path)?;
            let (basis, coupling) = Self::from_arrays(geometry, config, &arrays)?;
            return Self::assemble(geometry, config, basis, coupling);
        }
        let sys = Self::build(geometry, config)?;
        sys.to_arrays()?.save(&path)?;
        Ok(sys)
    }

    /// Cache file keyed by geometry, mode count, grid, seed and disorder strength.
    pub fn cache_path(geometry: &FiberGeometry, config: &OpticsConfig, dir: &Path) -> PathBuf {
        let mut h = Hasher::new();
        geometry.hash_into(&mut h);
        h.u64(config.mode_count as u64)
            .u64(config.grid as u64)
            .u64(config.seed)
            .f64(config.coupling_strength);
        dir.join(format!("fiber-{}.ffna", &h.finish_hex()[..16]))
    }

    fn assemble(geometry: &FiberGeometry, config: &OpticsConfig, basis: ModeBasis, coupling: CouplingMatrix) -> Result<Self> {
        let kerr = GaussHermiteKerr::new(&basis)?;
        let propagator = CwPropagator::new(&basis, &coupling, geometry, config)?;
        let mut h = Hasher::new();
        geometry.hash_into(&mut h);
        config.hash_into(&mut h);
        basis.hash_into(&mut h);
        for c in &coupling.data {
            h.f64(c.re).f64(c.im);
        }
        Ok(Self {
            geometry: geometry.clone(),
            config: config.clone(),
            basis,
            coupling,
            kerr,
            propagator,
            fingerprint: h.finish_hex(),
        })
    }

    fn to_arrays(&self) -> Result<NamedArrays> {
        let mut a = NamedArrays::new();
        let q = self.basis.group_count();
        let n = self.basis.grid;
        let p = self.basis.len();
        a.insert("axis_profiles", &[q, n], self.basis.axis_profiles.concat())?;
        a.insert("delta_beta0", &[p], self.basis.delta_beta0.clone())?;
        a.insert("delta_beta1", &[p], self.basis.delta_beta1.clone())?;
        a.insert("beta2", &[p], self.basis.beta2.clone())?;
        a.insert("coupling_re", &[p, p], self.coupling.data.iter().map(|c| c.re).collect())?;
        a.insert("coupling_im", &[p, p], self.coupling.data.iter().map(|c| c.im).collect())?;
        Ok(a)
    }

    fn from_arrays(geometry: &FiberGeometry, config: &OpticsConfig, a: &NamedArrays) -> Result<(ModeBasis, CouplingMatrix)> {
        let mut basis = build_mode_basis(geometry, config.mode_count, config.grid)?;
        let (q, n, p) = (basis.group_count(), basis.grid, basis.len());
        let expect = |name: &str, dims: &[usize]| -> Result<Vec<f64>> {
            let (d, v) = a.get(name)?;
            if d != dims {
                return Err(Error::CorruptFile(format!("array '{name}' has shape {d:?}, expected {dims:?}")));
            }
            Ok(v.to_vec())
        };
        let profiles = expect("axis_profiles", &[q, n])?;
        basis.axis_profiles = profiles.chunks(n).map(|c| c.to_vec()).collect();
        basis.delta_beta0 = expect("delta_beta0", &[p])?;
        basis.delta_beta1 = expect("delta_beta1", &[p])?;
        basis.beta2 = expect("beta2", &[p])?;
        let re = expect("coupling_re", &[p, p])?;
        let im = expect("coupling_im", &[p, p])?;
        let coupling = CouplingMatrix {
            dim: p,
            data: re.iter().zip(&im).map(|(&r, &i)| C64::new(r, i)).collect(),
        };
        if !coupling.is_hermitian() {
            return Err(Error::CorruptFile("cached coupling matrix is not Hermitian".into()));
        }
        Ok((basis, coupling))
    }

    /// Hash of everything that determines the transform.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn kerr(&self) -> &GaussHermiteKerr {
        &self.kerr
    }

    pub fn propagator(&self) -> &CwPropagator {
        &self.propagator
    }

    pub fn encode(&self, features: &[f64]) -> Result<ModeState> {
        encode_and_project(features, &self.basis, &self.config)
    }

    pub fn propagate(&self, state: &ModeState) -> Result<ModeState> {
        self.propagator.run(state, &self.kerr)
    }

    pub fn render(&self, state: &ModeState) -> Result<Vec<f64>> {
        render_intensity(state, &self.basis)
    }

    /// encode → propagate → render.
    pub fn transform(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.render(&self.propagate(&self.encode(features)?)?)
    }
}

pub fn optical_transform(system: &FiberSystem, features: &[f64]) -> Result<Vec<f64>> {
    system.transform(features)
}
