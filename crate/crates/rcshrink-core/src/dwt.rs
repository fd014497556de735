//! Periodized orthogonal discrete wavelet transform.
//!
//! The forward transform runs the classical pyramidal cascade: at each level
//! the current approximation is filtered by the quadrature-mirror pair and
//! decimated at even phase, with indices wrapped modulo the block length.
//! Periodization keeps the transform exactly orthogonal at every dyadic
//! length, even when the filter is longer than the block.

use crate::error::{Error, Result};

/// Daubechies extremal-phase lowpass taps for 1..=10 vanishing moments,
/// in the classical order (h[0] is the largest-index tap of the minimal-phase
/// spectral factor). Normalized so Σh = √2; the quadrature identities are
/// re-verified by [`build_filter`].
const DAUBECHIES: [&[f64]; 10] = [
    &[0.70710678118654752, 0.70710678118654752],
    &[
        0.48296291314453414,
        0.83651630373780791,
        0.22414386804201338,
        -0.12940952255126038,
    ],
    &[
        0.33267055295008262,
        0.80689150931109258,
        0.45987750211849157,
        -0.13501102001025459,
        -0.085441273882026662,
        0.035226291885709537,
    ],
    &[
        0.23037781330889650,
        0.71484657055291565,
        0.63088076792985891,
        -0.027983769416859854,
        -0.18703481171909308,
        0.030841381835560764,
        0.032883011666885200,
        -0.010597401785069032,
    ],
    &[
        0.16010239797419291,
        0.60382926979718967,
        0.72430852843777293,
        0.13842814590132073,
        -0.24229488706638203,
        -0.032244869584638375,
        0.077571493840045714,
        -0.0062414902127982743,
        -0.012580751999081999,
        0.0033357252854737713,
    ],
    &[
        0.11154074335010946,
        0.49462389039845309,
        0.75113390802109535,
        0.31525035170919763,
        -0.22626469396543982,
        -0.12976686756726194,
        0.097501605587323049,
        0.027522865530305729,
        -0.031582039317486030,
        0.00055384220116149614,
        0.0047772575109455106,
        -0.0010773010853084796,
    ],
    &[
        0.077852054085009179,
        0.39653931948191731,
        0.72913209084623512,
        0.46978228740519312,
        -0.14390600392856498,
        -0.22403618499387498,
        0.071309219266830265,
        0.080612609151083072,
        -0.038029936935014414,
        -0.016574541630666881,
        0.012550998556099841,
        0.00042957797292136652,
        -0.0018016407040474909,
        0.00035371379997452025,
    ],
    &[
        0.054415842243104010,
        0.31287159091429997,
        0.67563073629728981,
        0.58535468365420671,
        -0.015829105256349306,
        -0.28401554296154693,
        0.00047248457391328277,
        0.12874742662047846,
        -0.017369301001807546,
        -0.044088253930794752,
        0.013981027917398282,
        0.0087460940474057767,
        -0.0048703529934515743,
        -0.00039174037337694705,
        0.00067544940645056937,
        -0.00011747678412476953,
    ],
    &[
        0.038077947363878347,
        0.24383467461259035,
        0.60482312369011111,
        0.65728807805130054,
        0.13319738582500758,
        -0.29327378327917491,
        -0.096840783222976461,
        0.14854074933810638,
        0.030725681479333379,
        -0.067632829061329974,
        0.00025094711483145196,
        0.022361662123679097,
        -0.0047232047577513973,
        -0.0042815036824634298,
        0.0018476468830562265,
        0.00023038576352319597,
        -0.00025196318894271014,
        3.9347320316271599e-5,
    ],
    &[
        0.026670057900555554,
        0.18817680007769149,
        0.52720118893172559,
        0.68845903945360357,
        0.28117234366057746,
        -0.24984642432731538,
        -0.19594627437737704,
        0.12736934033579326,
        0.093057364603572351,
        -0.071394147166397087,
        -0.029457536821875813,
        0.033212674059341002,
        0.0036065535669561697,
        -0.010733175483330575,
        0.0013953517470529012,
        0.0019924052951850561,
        -0.00068585669495971163,
        -0.00011646685512928545,
        9.3588670320069591e-5,
        -1.3264202894521245e-5,
    ],
];

/// Orthogonal quadrature-mirror filter pair.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureFilter {
    /// Lowpass (scaling) taps h, Σh = √2.
    pub lowpass: Vec<f64>,
    /// Highpass (wavelet) taps, the alternating flip g[i] = (−1)^i · h[L−1−i].
    pub highpass: Vec<f64>,
    /// Number of vanishing moments; tap count is twice this.
    pub vanishing_moments: usize,
}

impl QuadratureFilter {
    /// Tap count L = 2 · vanishing_moments.
    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }
}

/// Boundary handling for the transform; only periodization is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Periodic,
}

/// Daubechies extremal-phase filter with the given number of vanishing
/// moments (1 = Haar, up to 10). The embedded table is checked against the
/// quadrature identities (Σh = √2, unit energy, even-shift orthogonality)
/// before being handed out.
pub fn build_filter(vanishing_moments: usize) -> Result<QuadratureFilter> {
    if vanishing_moments == 0 || vanishing_moments > DAUBECHIES.len() {
        return Err(Error::parameter(format!(
            "unsupported filter: {vanishing_moments} vanishing moments (table covers 1..=10)"
        )));
    }
    let lowpass = DAUBECHIES[vanishing_moments - 1].to_vec();
    let l = lowpass.len();
    let sum: f64 = lowpass.iter().sum();
    if (sum - std::f64::consts::SQRT_2).abs() > 1e-12 {
        return Err(Error::structure(format!(
            "filter table corrupt: Σh = {sum}, expected √2"
        )));
    }
    for k in 0..vanishing_moments {
        let dot: f64 = (0..l - 2 * k).map(|i| lowpass[i] * lowpass[i + 2 * k]).sum();
        let expected = if k == 0 { 1.0 } else { 0.0 };
        if (dot - expected).abs() > 1e-12 {
            return Err(Error::structure(format!(
                "filter table corrupt: shift-{} autocorrelation = {dot}",
                2 * k
            )));
        }
    }
    let highpass = (0..l)
        .map(|i| if i % 2 == 0 { lowpass[l - 1 - i] } else { -lowpass[l - 1 - i] })
        .collect();
    Ok(QuadratureFilter { lowpass, highpass, vanishing_moments })
}

/// Multilevel coefficient container: scaling coefficients at the primary
/// resolution level and one detail vector per level `j0 ..= J−1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition {
    /// Coarsest-level scaling coefficients, length 2^{j0}.
    pub scaling: Vec<f64>,
    /// `details[i]` holds level `j0 + i`, length 2^{j0+i}; the last entry is
    /// the finest level J−1.
    pub details: Vec<Vec<f64>>,
    /// Primary resolution level J0.
    pub j0: usize,
    /// Original signal length n = 2^J.
    pub n: usize,
}

impl WaveletDecomposition {
    /// Assemble and validate a decomposition from raw parts.
    pub fn from_parts(scaling: Vec<f64>, details: Vec<Vec<f64>>, j0: usize) -> Result<Self> {
        if scaling.len() != 1 << j0 {
            return Err(Error::structure(format!(
                "scaling level must hold 2^{j0} = {} coefficients, got {}",
                1usize << j0,
                scaling.len()
            )));
        }
        for (i, level) in details.iter().enumerate() {
            let expect = 1usize << (j0 + i);
            if level.len() != expect {
                return Err(Error::structure(format!(
                    "detail level {} must hold {expect} coefficients, got {}",
                    j0 + i,
                    level.len()
                )));
            }
        }
        if details.is_empty() {
            return Err(Error::structure("decomposition needs at least one detail level"));
        }
        let n = 1usize << (j0 + details.len());
        Ok(WaveletDecomposition { scaling, details, j0, n })
    }

    /// J = log2(n); detail levels span `j0 .. j_end()`.
    pub fn j_end(&self) -> usize {
        self.j0 + self.details.len()
    }

    /// Detail coefficients at resolution level j, if stored.
    pub fn detail(&self, j: usize) -> Option<&[f64]> {
        j.checked_sub(self.j0).and_then(|i| self.details.get(i)).map(Vec::as_slice)
    }

    /// Mutable access to level j's detail coefficients.
    pub fn detail_mut(&mut self, j: usize) -> Option<&mut Vec<f64>> {
        j.checked_sub(self.j0).and_then(|i| self.details.get_mut(i))
    }

    /// Iterator over (level, coefficients) pairs, coarsest first.
    pub fn levels(&self) -> impl Iterator<Item = (usize, &[f64])> {
        let j0 = self.j0;
        self.details.iter().enumerate().map(move |(i, d)| (j0 + i, d.as_slice()))
    }

    fn check_consistent(&self) -> Result<()> {
        let rebuilt = WaveletDecomposition::from_parts(
            self.scaling.clone(),
            self.details.clone(),
            self.j0,
        )?;
        if rebuilt.n != self.n {
            return Err(Error::structure(format!(
                "decomposition claims n = {}, coefficients imply {}",
                self.n, rebuilt.n
            )));
        }
        Ok(())
    }
}

/// One analysis step: filter the approximation block and decimate at even
/// phase, wrapping indices modulo the block length.
fn analysis_step(a: &[f64], filter: &QuadratureFilter) -> (Vec<f64>, Vec<f64>) {
    let m = a.len();
    let half = m / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let mut s = 0.0;
        let mut w = 0.0;
        for (i, (&h, &g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
            let v = a[(2 * k + i) % m];
            s += h * v;
            w += g * v;
        }
        approx[k] = s;
        detail[k] = w;
    }
    (approx, detail)
}

/// Pyramidal DWT of a dyadic-length signal down to primary level `j0`.
pub fn forward(
    signal: &[f64],
    filter: &QuadratureFilter,
    j0: usize,
    boundary: Boundary,
) -> Result<WaveletDecomposition> {
    let Boundary::Periodic = boundary;
    let n = signal.len();
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::data(format!("dyadic length required, got {n}")));
    }
    let j = n.trailing_zeros() as usize;
    if j0 >= j {
        return Err(Error::parameter(format!(
            "primary level {j0} must be below J = {j} for length {n}"
        )));
    }
    let mut a = signal.to_vec();
    let mut details = vec![Vec::new(); j - j0];
    for level in (j0..j).rev() {
        let (approx, detail) = analysis_step(&a, filter);
        details[level - j0] = detail;
        a = approx;
    }
    Ok(WaveletDecomposition { scaling: a, details, j0, n })
}

/// Inverse DWT: synthesis cascade from the primary level back to length n.
pub fn inverse(decomp: &WaveletDecomposition, filter: &QuadratureFilter) -> Result<Vec<f64>> {
    decomp.check_consistent()?;
    let mut a = decomp.scaling.clone();
    for detail in &decomp.details {
        let m2 = 2 * a.len();
        let mut out = vec![0.0; m2];
        for k in 0..a.len() {
            for (i, (&h, &g)) in filter.lowpass.iter().zip(&filter.highpass).enumerate() {
                out[(2 * k + i) % m2] += h * a[k] + g * detail[k];
            }
        }
        a = out;
    }
    Ok(a)
}
