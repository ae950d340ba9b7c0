use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::kernel::SpectralKernel;
use super::WaveletFamily;
use crate::graph::{ShiftKind, ShiftMatrix};
use crate::linalg;
use crate::{Error, Result};

/// Smallest and largest `t_j * lambda_range` for monic cubic scales.
pub const DEFAULT_MONIC_CUBIC_SCALE_RANGE: (f64, f64) = (2.0, 40.0);

/// Largest scale count for diffusion banks (`2^J` must fit an `i32` exponent).
const MAX_DYADIC_SCALES: usize = 30;

/// Frame constants: `A^2 ||x||^2 <= sum_j ||H_j x||^2 <= B^2 ||x||^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Integral-Lipschitz constant `C = max |lambda h'(lambda)|` (absent when
/// the bank has no scalar kernel) and response bound `D = max |h(lambda)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub c: Option<f64>,
    pub d: f64,
}

/// Recipe for a bank: enough to rebuild it on another shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankSpec {
    pub family: WaveletFamily,
    pub scales: usize,
    #[serde(default = "default_scale_range")]
    pub monic_cubic_scale_range: (f64, f64),
    /// Coefficient lists for `custom_poly`, one per filter.
    #[serde(default)]
    pub custom: Option<Vec<Vec<f64>>>,
}

fn default_scale_range() -> (f64, f64) {
    DEFAULT_MONIC_CUBIC_SCALE_RANGE
}

impl BankSpec {
    pub fn new(family: WaveletFamily, scales: usize) -> Self {
        Self {
            family,
            scales,
            monic_cubic_scale_range: DEFAULT_MONIC_CUBIC_SCALE_RANGE,
            custom: None,
        }
    }

    pub fn custom(coeffs: Vec<Vec<f64>>) -> Self {
        Self {
            family: WaveletFamily::CustomPolynomial,
            scales: coeffs.len(),
            monic_cubic_scale_range: DEFAULT_MONIC_CUBIC_SCALE_RANGE,
            custom: Some(coeffs),
        }
    }

    pub fn build(&self, shift: &ShiftMatrix) -> Result<FilterBank> {
        match self.family {
            WaveletFamily::Geometric => build_geometric_bank(shift, self.scales),
            WaveletFamily::MonicCubic | WaveletFamily::Itersine => {
                let mut bank = build_spectral_bank(shift, self.family, self.scales, self.monic_cubic_scale_range)?;
                bank.spec = self.clone();
                Ok(bank)
            }
            WaveletFamily::CustomPolynomial => {
                let coeffs = self
                    .custom
                    .as_ref()
                    .ok_or_else(|| Error::invalid("custom_poly bank needs coefficient lists"))?;
                if coeffs.len() != self.scales {
                    return Err(Error::invalid("custom_poly scale count differs from coefficient lists"));
                }
                build_custom_bank(shift, coeffs)
            }
        }
    }
}

/// `J` materialised filters over one shift, with measured frame constants.
#[derive(Debug, Clone)]
pub struct FilterBank {
    spec: BankSpec,
    filters: Vec<DMatrix<f64>>,
    kernels: Option<Vec<SpectralKernel>>,
    spectral_range: Option<(f64, f64)>,
    shift_symmetric: bool,
    frame: FrameBounds,
}

impl FilterBank {
    fn assemble(
        spec: BankSpec,
        filters: Vec<DMatrix<f64>>,
        kernels: Option<Vec<SpectralKernel>>,
        spectral_range: Option<(f64, f64)>,
        shift_symmetric: bool,
    ) -> Result<Self> {
        if filters.is_empty() {
            return Err(Error::invalid("a filter bank needs at least one filter"));
        }
        if filters.iter().any(|f| f.iter().any(|v| !v.is_finite())) {
            return Err(Error::invalid("filter bank produced non-finite entries"));
        }
        let frame = frame_bounds_of(&filters);
        Ok(Self {
            spec,
            filters,
            kernels,
            spectral_range,
            shift_symmetric,
            frame,
        })
    }

    /// Bank made of explicit operators, without kernels.
    pub fn from_filters(filters: Vec<DMatrix<f64>>) -> Result<Self> {
        let spec = BankSpec::custom(vec![vec![]; filters.len()]);
        Self::assemble(spec, filters, None, None, false)
    }

    /// Bank made of explicit operators with known kernels on a symmetric shift.
    pub fn from_kernels(shift: &ShiftMatrix, kernels: Vec<SpectralKernel>) -> Result<Self> {
        let eig = shift
            .eig()
            .ok_or_else(|| Error::invalid("kernel bank needs an eigendecomposition"))?;
        let filters = kernels.iter().map(|k| k.materialize(eig)).collect();
        let spec = BankSpec::custom(vec![vec![]; kernels.len()]);
        Self::assemble(spec, filters, Some(kernels), shift.spectral_range(), true)
    }

    pub fn spec(&self) -> &BankSpec {
        &self.spec
    }

    pub fn family(&self) -> WaveletFamily {
        self.spec.family
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.filters[0].nrows()
    }

    pub fn filters(&self) -> &[DMatrix<f64>] {
        &self.filters
    }

    pub fn kernels(&self) -> Option<&[SpectralKernel]> {
        self.kernels.as_deref()
    }

    pub fn spectral_range(&self) -> Option<(f64, f64)> {
        self.spectral_range
    }

    pub fn frame(&self) -> FrameBounds {
        self.frame
    }

    /// Same kernels (or the same diffusion recipe) applied to a different shift.
    ///
    /// Spectral kernels keep the eigenvalue mapping fixed at the original
    /// shift, so a perturbed shift sees the same scalar functions.
    pub fn rebuild_on(&self, shift: &ShiftMatrix) -> Result<FilterBank> {
        match (self.spec.family, &self.kernels) {
            (WaveletFamily::MonicCubic | WaveletFamily::Itersine, Some(kernels)) => {
                let shift = if shift.eig().is_some() {
                    shift.clone()
                } else {
                    crate::graph::eigendecompose(shift)?
                };
                let eig = shift.eig().expect("populated above");
                let filters = kernels.iter().map(|k| k.materialize(eig)).collect();
                Self::assemble(
                    self.spec.clone(),
                    filters,
                    Some(kernels.clone()),
                    self.spectral_range,
                    true,
                )
            }
            _ => self.spec.build(shift),
        }
    }
}

fn frame_bounds_of(filters: &[DMatrix<f64>]) -> FrameBounds {
    let n = filters[0].ncols();
    let mut gram = DMatrix::zeros(n, n);
    for h in filters {
        gram += h.tr_mul(h);
    }
    // symmetrise against rounding before the symmetric solver
    let gram = (&gram + gram.transpose()) * 0.5;
    let vals = linalg::sym_eigenvalues(&gram);
    FrameBounds {
        lower: vals.first().copied().unwrap_or(0.0).max(0.0).sqrt(),
        upper: vals.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
    }
}

/// `A^2 = lambda_min(sum_j H_j^T H_j)`, `B^2 = lambda_max(...)`.
pub fn estimate_frame_bounds(bank: &FilterBank) -> FrameBounds {
    frame_bounds_of(&bank.filters)
}

/// Diffusion wavelets `H_j = S^(2^(j-1)) - S^(2^j)` by repeated squaring.
pub fn build_geometric_bank(shift: &ShiftMatrix, scales: usize) -> Result<FilterBank> {
    if scales == 0 {
        return Err(Error::invalid("geometric bank needs J >= 1"));
    }
    if scales > MAX_DYADIC_SCALES {
        return Err(Error::invalid(format!(
            "geometric bank with J = {scales} overflows the exponent 2^J (max J = {MAX_DYADIC_SCALES})"
        )));
    }
    if shift.kind() != ShiftKind::LazyRandomWalk {
        log::warn!(
            "geometric wavelets are defined on the lazy random walk, got {}",
            shift.kind()
        );
    }
    let mut power = shift.matrix().clone();
    let mut filters = Vec::with_capacity(scales);
    for _ in 0..scales {
        let squared = &power * &power;
        filters.push(&power - &squared);
        power = squared;
    }
    let (kernels, range) = if shift.is_symmetric() {
        let ks = (0..scales)
            .map(|j| SpectralKernel::Dyadic { exponent: 1 << j })
            .collect();
        let range = shift.spectral_range().or_else(|| {
            let vals = linalg::sym_eigenvalues(shift.matrix());
            Some((vals[0], vals[vals.len() - 1]))
        });
        (Some(ks), range)
    } else {
        (None, None)
    };
    FilterBank::assemble(
        BankSpec::new(WaveletFamily::Geometric, scales),
        filters,
        kernels,
        range,
        shift.is_symmetric(),
    )
}

/// Monic cubic or itersine bank materialised through the shift's eigenbasis.
pub fn build_spectral_bank(
    shift: &ShiftMatrix,
    family: WaveletFamily,
    scales: usize,
    monic_cubic_scale_range: (f64, f64),
) -> Result<FilterBank> {
    let eig = shift
        .eig()
        .ok_or_else(|| Error::invalid(format!("{family} bank needs an eigendecomposed symmetric shift")))?;
    if scales == 0 {
        return Err(Error::invalid("spectral bank needs J >= 1"));
    }
    let (lo, hi) = shift.spectral_range().expect("eig present");
    let span = hi - lo;
    let kernels: Vec<SpectralKernel> = match family {
        WaveletFamily::MonicCubic => {
            if scales < 2 {
                return Err(Error::invalid("monic cubic bank needs J >= 2"));
            }
            if span <= 0.0 {
                return Err(Error::invalid(
                    "monic cubic scale placement needs a nonconstant spectrum",
                ));
            }
            let (first, last) = monic_cubic_scale_range;
            if !(first > 0.0 && last > first) {
                return Err(Error::invalid("monic_cubic_scale_range must satisfy 0 < first < last"));
            }
            let ratio = last / first;
            (0..scales)
                .map(|j| {
                    let frac = j as f64 / (scales - 1) as f64;
                    SpectralKernel::MonicCubic {
                        scale: first * ratio.powf(frac) / span,
                        offset: lo,
                    }
                })
                .collect()
        }
        WaveletFamily::Itersine => {
            if scales == 1 {
                vec![SpectralKernel::Polynomial(vec![1.0])]
            } else {
                let width = if span > 0.0 { span } else { 1.0 };
                let spacing = 1.0 / (scales - 1) as f64;
                (0..scales)
                    .map(|j| SpectralKernel::Itersine {
                        lo,
                        width,
                        center: j as f64 * spacing,
                        spacing,
                    })
                    .collect()
            }
        }
        other => return Err(Error::invalid(format!("{other} is not a spectral family"))),
    };
    let filters = kernels.iter().map(|k| k.materialize(eig)).collect();
    let spec = BankSpec {
        family,
        scales,
        monic_cubic_scale_range,
        custom: None,
    };
    FilterBank::assemble(spec, filters, Some(kernels), Some((lo, hi)), true)
}

/// One polynomial filter `sum_k h_k S^k` per coefficient list.
pub fn build_custom_bank(shift: &ShiftMatrix, coeffs: &[Vec<f64>]) -> Result<FilterBank> {
    if coeffs.is_empty() {
        return Err(Error::invalid("custom bank needs at least one filter"));
    }
    let mut filters = Vec::with_capacity(coeffs.len());
    for c in coeffs {
        super::PolynomialFilter::new(c.clone())?;
        filters.push(linalg::matrix_polynomial(c, shift.matrix()));
    }
    let range = if shift.is_symmetric() {
        shift.spectral_range().or_else(|| {
            let vals = linalg::sym_eigenvalues(shift.matrix());
            Some((vals[0], vals[vals.len() - 1]))
        })
    } else {
        None
    };
    let kernels = coeffs.iter().map(|c| SpectralKernel::Polynomial(c.clone())).collect();
    FilterBank::assemble(
        BankSpec::custom(coeffs.to_vec()),
        filters,
        Some(kernels),
        range,
        shift.is_symmetric(),
    )
}

/// Grid estimates of `C` and `D` over each kernel's support.
///
/// Banks without a scalar kernel (diffusion on an asymmetric shift) report
/// `C = None` and fall back to `D = max_j ||H_j||_2`.
pub fn estimate_kernel_constants(bank: &FilterBank, grid_size: usize) -> Result<KernelConstants> {
    if grid_size < 100 {
        return Err(Error::invalid("kernel grid needs at least 100 points"));
    }
    let kernels = match (&bank.kernels, bank.shift_symmetric) {
        (Some(k), true) => k,
        _ => {
            let d = bank.filters.iter().map(linalg::spectral_norm).fold(0.0, f64::max);
            return Ok(KernelConstants { c: None, d });
        }
    };
    let mut c: f64 = 0.0;
    let mut d: f64 = 0.0;
    for k in kernels {
        let (lo, hi) = k
            .support()
            .or(bank.spectral_range)
            .ok_or_else(|| Error::invalid("kernel has no spectral range to grid over"))?;
        let step = (hi - lo) / (grid_size - 1) as f64;
        let grid = (0..grid_size).map(|i| lo + step * i as f64).chain(k.landmarks());
        for lambda in grid {
            c = c.max((lambda * k.derivative(lambda)).abs());
            d = d.max(k.eval(lambda).abs());
        }
    }
    Ok(KernelConstants { c: Some(c), d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_line_graph, eigendecompose, make_shift, Graph};
    use crate::rng::{gaussian_matrix, substream};

    fn p3_lazy() -> ShiftMatrix {
        make_shift(&build_line_graph(3).unwrap(), ShiftKind::LazyRandomWalk)
    }

    fn naive_mul(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let n = a.nrows();
        DMatrix::from_fn(n, b.ncols(), |i, j| (0..a.ncols()).map(|k| a[(i, k)] * b[(k, j)]).sum())
    }

    fn random_graph(seed: u64, n: usize) -> Graph {
        use rand::Rng;
        let mut rng = substream(seed, 0);
        let mut edges = Vec::new();
        for i in 1..n {
            edges.push((rng.random_range(0..i), i, rng.random_range(0.5..2.0)));
        }
        for _ in 0..n {
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            if i != j {
                edges.push((i, j, rng.random_range(0.5..2.0)));
            }
        }
        Graph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn geometric_on_k2_is_zero() {
        let s = make_shift(&build_line_graph(2).unwrap(), ShiftKind::LazyRandomWalk);
        let bank = build_geometric_bank(&s, 2).unwrap();
        assert!(bank.filters().iter().all(|f| f.iter().all(|&v| v == 0.0)));
        assert_eq!(bank.frame(), FrameBounds { lower: 0.0, upper: 0.0 });
    }

    #[test]
    fn geometric_on_identity_is_zero() {
        let s = ShiftMatrix::from_matrix(ShiftKind::LazyRandomWalk, DMatrix::identity(4, 4)).unwrap();
        for j in 1..5 {
            let bank = build_geometric_bank(&s, j).unwrap();
            assert!(bank.filters().iter().all(|f| f.amax() == 0.0));
        }
    }

    #[test]
    fn geometric_first_scale_on_p3() {
        let s = p3_lazy();
        let bank = build_geometric_bank(&s, 1).unwrap();
        let oracle = s.matrix() - naive_mul(s.matrix(), s.matrix());
        assert!((&bank.filters()[0] - oracle).amax() < 1e-15);
        assert!(bank.kernels().is_none());
    }

    #[test]
    fn geometric_telescopes() {
        let s = make_shift(&random_graph(3, 9), ShiftKind::LazyRandomWalk);
        let bank = build_geometric_bank(&s, 4).unwrap();
        let sum = bank.filters().iter().fold(DMatrix::zeros(9, 9), |acc, f| acc + f);
        let mut p = s.matrix().clone();
        for _ in 0..4 {
            p = naive_mul(&p, &p);
        }
        assert!((sum - (s.matrix() - p)).amax() < 1e-10);
    }

    #[test]
    fn geometric_scale_guard() {
        assert!(build_geometric_bank(&p3_lazy(), 31).is_err());
        assert!(build_geometric_bank(&p3_lazy(), 0).is_err());
    }

    #[test]
    fn itersine_tight_on_random_graphs() {
        for seed in 0..4 {
            for kind in [ShiftKind::NormalizedLaplacian, ShiftKind::Adjacency] {
                let s = eigendecompose(&make_shift(&random_graph(seed, 12), kind)).unwrap();
                for j in 1..6 {
                    let bank =
                        build_spectral_bank(&s, WaveletFamily::Itersine, j, DEFAULT_MONIC_CUBIC_SCALE_RANGE).unwrap();
                    let f = bank.frame();
                    assert!((f.lower - 1.0).abs() < 1e-6 && (f.upper - 1.0).abs() < 1e-6, "{f:?}");
                }
            }
        }
    }

    #[test]
    fn itersine_k2_laplacian_identity() {
        let s = eigendecompose(&make_shift(
            &build_line_graph(2).unwrap(),
            ShiftKind::NormalizedLaplacian,
        ))
        .unwrap();
        let bank = build_spectral_bank(&s, WaveletFamily::Itersine, 2, DEFAULT_MONIC_CUBIC_SCALE_RANGE).unwrap();
        let sum = bank
            .filters()
            .iter()
            .fold(DMatrix::zeros(2, 2), |acc, h| acc + h.tr_mul(h));
        assert!((sum - DMatrix::identity(2, 2)).amax() < 1e-6);
    }

    #[test]
    fn itersine_energy_on_random_signals() {
        let s = eigendecompose(&make_shift(&random_graph(11, 15), ShiftKind::NormalizedLaplacian)).unwrap();
        let bank = build_spectral_bank(&s, WaveletFamily::Itersine, 4, DEFAULT_MONIC_CUBIC_SCALE_RANGE).unwrap();
        let mut rng = substream(5, 1);
        for _ in 0..20 {
            let x = gaussian_matrix(&mut rng, 15, 1);
            let e: f64 = bank.filters().iter().map(|h| (h * &x).norm_squared()).sum();
            assert!((e / x.norm_squared() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn frame_bounds_of_identity_bank() {
        let bank = FilterBank::from_filters(vec![DMatrix::identity(5, 5)]).unwrap();
        let f = estimate_frame_bounds(&bank);
        assert!((f.lower - 1.0).abs() < 1e-14 && (f.upper - 1.0).abs() < 1e-14);
    }

    #[test]
    fn frame_sandwich_holds_for_every_family() {
        let g = random_graph(21, 10);
        let lap = eigendecompose(&make_shift(&g, ShiftKind::NormalizedLaplacian)).unwrap();
        let banks = vec![
            build_geometric_bank(&make_shift(&g, ShiftKind::LazyRandomWalk), 3).unwrap(),
            build_spectral_bank(&lap, WaveletFamily::MonicCubic, 4, DEFAULT_MONIC_CUBIC_SCALE_RANGE).unwrap(),
            build_spectral_bank(&lap, WaveletFamily::Itersine, 3, DEFAULT_MONIC_CUBIC_SCALE_RANGE).unwrap(),
            build_custom_bank(&lap, &[vec![1.0, -0.5], vec![0.0, 0.5, -0.2]]).unwrap(),
        ];
        let mut rng = substream(8, 0);
        for bank in &banks {
            let FrameBounds { lower, upper } = bank.frame();
            assert!(lower <= upper);
            for _ in 0..100 {
                let mut x = gaussian_matrix(&mut rng, 10, 1);
                x /= x.norm();
                let e: f64 = bank.filters().iter().map(|h| (h * &x).norm_squared()).sum();
                assert!(lower * lower * (1.0 - 1e-6) <= e && e <= upper * upper * (1.0 + 1e-6));
            }
        }
    }

    #[test]
    fn spectral_bank_matches_kernel_in_eigenbasis() {
        let s = eigendecompose(&make_shift(&random_graph(2, 8), ShiftKind::NormalizedLaplacian)).unwrap();
        let bank = build_spectral_bank(&s, WaveletFamily::MonicCubic, 3, DEFAULT_MONIC_CUBIC_SCALE_RANGE).unwrap();
        let eig = s.eig().unwrap();
        for (h, k) in bank.filters().iter().zip(bank.kernels().unwrap()) {
            for i in 0..8 {
                let v = eig.vectors.column(i);
                let hv = h * v;
                let want = v * k.eval(eig.values[i]);
                assert!((hv - want).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn monic_cubic_needs_two_scales() {
        let s = eigendecompose(&make_shift(&random_graph(2, 6), ShiftKind::NormalizedLaplacian)).unwrap();
        assert!(build_spectral_bank(&s, WaveletFamily::MonicCubic, 1, DEFAULT_MONIC_CUBIC_SCALE_RANGE).is_err());
        let no_eig = make_shift(&random_graph(2, 6), ShiftKind::NormalizedLaplacian);
        assert!(build_spectral_bank(&no_eig, WaveletFamily::Itersine, 2, DEFAULT_MONIC_CUBIC_SCALE_RANGE).is_err());
    }

    #[test]
    fn kernel_constants_examples() {
        let s = eigendecompose(&make_shift(&random_graph(4, 7), ShiftKind::NormalizedLaplacian)).unwrap();
        let identity = build_custom_bank(&s, &[vec![1.0]]).unwrap();
        let kc = estimate_kernel_constants(&identity, 200).unwrap();
        assert_eq!(kc.c, Some(0.0));
        assert_eq!(kc.d, 1.0);

        let iters = build_spectral_bank(&s, WaveletFamily::Itersine, 4, DEFAULT_MONIC_CUBIC_SCALE_RANGE).unwrap();
        let kc = estimate_kernel_constants(&iters, 1000).unwrap();
        assert!(kc.d <= 1.0 + 1e-9 && kc.d > 1.0 - 1e-12);
        assert!(kc.c.unwrap() > 0.0);

        // monic cubic on a laplacian: |x h'(x)| peaks at 2 at the cubic knots
        let mc = build_spectral_bank(&s, WaveletFamily::MonicCubic, 3, DEFAULT_MONIC_CUBIC_SCALE_RANGE).unwrap();
        let kc = estimate_kernel_constants(&mc, 5000).unwrap();
        assert!(kc.c.unwrap() <= 2.0 + 1e-9, "{kc:?}");
        assert!(kc.c.unwrap() > 1.9);

        assert!(estimate_kernel_constants(&iters, 10).is_err());
    }

    #[test]
    fn asymmetric_diffusion_has_no_lipschitz_constant() {
        let bank = build_geometric_bank(&p3_lazy(), 2).unwrap();
        let kc = estimate_kernel_constants(&bank, 100).unwrap();
        assert!(kc.c.is_none());
        let expected = bank.filters().iter().map(linalg::spectral_norm).fold(0.0, f64::max);
        assert_eq!(kc.d, expected);
    }

    #[test]
    fn rebuild_keeps_kernels() {
        let s = eigendecompose(&make_shift(&random_graph(6, 8), ShiftKind::NormalizedLaplacian)).unwrap();
        let bank = build_spectral_bank(&s, WaveletFamily::Itersine, 3, DEFAULT_MONIC_CUBIC_SCALE_RANGE).unwrap();
        let same = bank.rebuild_on(&s).unwrap();
        assert_eq!(same.filters(), bank.filters());
        let scaled = ShiftMatrix::from_matrix(s.kind(), s.matrix() * 1.1).unwrap();
        let moved = bank.rebuild_on(&scaled).unwrap();
        assert_eq!(moved.kernels(), bank.kernels());
        assert!(moved.frame().upper <= 1.0 + 1e-9);
    }
}
