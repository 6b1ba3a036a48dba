//! Transfer matrices, the monodromy discriminant, and band extraction for
//! one-dimensional periodic potentials, plus the closed forms for the
//! Bernoulli displacement model.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{csv_line, fmt_real};

/// Initial sign-change scanning step.
pub const SCAN_STEP: f64 = 1e-3;
/// Bands closer than this are merged and flagged as touching.
pub const MERGE_TOL: f64 = 1e-9;
/// Excess `|D| - 2` below which a gap is treated as closed.
const CLOSED_GAP_EXCESS: f64 = 1e-12;

/// Real 2x2 matrix, stored row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferMatrix(pub [[f64; 2]; 2]);

impl TransferMatrix {
    pub const IDENTITY: Self = Self([[1.0, 0.0], [0.0, 1.0]]);

    /// `[[v - e, -1], [1, 0]]`, advancing `(u(n), u(n-1))` to
    /// `(u(n+1), u(n))` for `-u(n-1) - u(n+1) + v u(n) = e u(n)`.
    pub fn step(v: f64, e: f64) -> Self {
        Self([[v - e, -1.0], [1.0, 0.0]])
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let a = &self.0;
        let b = &rhs.0;
        Self([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }
}

/// Ordered product `T(n) ... T(1)` over one period.
pub fn monodromy(potential: &[f64], e: f64) -> TransferMatrix {
    potential
        .iter()
        .fold(TransferMatrix::IDENTITY, |acc, &v| TransferMatrix::step(v, e).mul(&acc))
}

/// Trace of the monodromy matrix.
pub fn discriminant(potential: &[f64], e: f64) -> f64 {
    // unrolled trace recursion, avoids building matrices in hot loops
    let (mut a, mut b, mut c, mut d) = (1.0, 0.0, 0.0, 1.0);
    for &v in potential {
        let x = v - e;
        let (na, nb) = (x * a - c, x * b - d);
        c = a;
        d = b;
        a = na;
        b = nb;
    }
    a + d
}

/// Closed-form discriminant of the period-4 potential `(0, λ, λ, 0)`.
pub fn bdm_discriminant_poly(lambda: f64, e: f64) -> f64 {
    let l2 = lambda * lambda;
    (((e - 2.0 * lambda) * e + (l2 - 4.0)) * e + 4.0 * lambda) * e + 2.0 - l2
}

/// Outer edges `E_±` and central-gap edges `G_±` of the Bernoulli model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandEdges {
    pub e_minus: f64,
    pub g_minus: f64,
    pub g_plus: f64,
    pub e_plus: f64,
}

impl BandEdges {
    pub fn as_array(&self) -> [f64; 4] {
        [self.e_minus, self.g_minus, self.g_plus, self.e_plus]
    }
}

pub fn band_edges_closed_form(lambda: f64) -> BandEdges {
    let h = lambda / 2.0;
    let root = (4.0 + lambda * lambda).sqrt();
    let base = 2.0 + lambda * lambda / 4.0;
    let outer = (base + root).sqrt();
    // base - root = (root - 2)^2 / 4 >= 0; this form avoids cancellation
    let inner = ((root - 2.0) / 2.0).abs();
    BandEdges {
        e_minus: h - outer,
        g_minus: h - inner,
        g_plus: h + inner,
        e_plus: h + outer,
    }
}

/// Closed energy interval with the operator that produced it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
    pub source: String,
    /// Set when the interval is the union of bands whose separating gap is
    /// closed (or narrower than [`MERGE_TOL`]).
    pub touching: bool,
}

/// Sorted, pairwise disjoint bands.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandStructure {
    pub bands: Vec<Band>,
    pub conjectural: bool,
    pub warnings: Vec<String>,
}

impl BandStructure {
    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn intervals(&self) -> Vec<(f64, f64)> {
        self.bands.iter().map(|b| (b.lower, b.upper)).collect()
    }

    /// Whether `e` lies in some band, up to `tol`.
    pub fn contains(&self, e: f64, tol: f64) -> bool {
        self.bands
            .iter()
            .any(|b| b.lower - tol <= e && e <= b.upper + tol)
    }

    /// Whether `[lo, hi]` fits inside a single band, up to `tol`.
    pub fn covers(&self, lo: f64, hi: f64, tol: f64) -> bool {
        self.bands
            .iter()
            .any(|b| b.lower - tol <= lo && hi <= b.upper + tol)
    }

    /// Open gaps between consecutive bands.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.bands
            .windows(2)
            .map(|w| (w[0].upper, w[1].lower))
            .collect()
    }

    /// Set union, merging intervals that overlap or are closer than
    /// `merge_tol`.
    pub fn union(&self, other: &BandStructure, merge_tol: f64) -> BandStructure {
        let mut all: Vec<Band> = self.bands.iter().chain(&other.bands).cloned().collect();
        let mut warnings = self.warnings.clone();
        warnings.extend(other.warnings.iter().cloned());
        BandStructure {
            bands: merge_bands(&mut all, merge_tol),
            conjectural: self.conjectural || other.conjectural,
            warnings,
        }
    }

    fn flag(&self, band: &Band) -> &'static str {
        match (band.touching, self.conjectural) {
            (false, false) => "none",
            (true, false) => "touching",
            (false, true) => "conjectural",
            (true, true) => "touching;conjectural",
        }
    }

    /// CSV with columns `band_index,lower,upper,source,flag`.
    pub fn to_csv(&self) -> String {
        let mut out = csv_line(["band_index", "lower", "upper", "source", "flag"]);
        for (i, b) in self.bands.iter().enumerate() {
            out.push_str(&csv_line([
                i.to_string(),
                fmt_real(b.lower),
                fmt_real(b.upper),
                b.source.clone(),
                self.flag(b).to_owned(),
            ]));
        }
        out
    }

    /// CSV with columns `lower,upper,source_config`.
    pub fn to_source_csv(&self) -> String {
        let mut out = csv_line(["lower", "upper", "source_config"]);
        for b in &self.bands {
            out.push_str(&csv_line([fmt_real(b.lower), fmt_real(b.upper), b.source.clone()]));
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (i, b) in self.bands.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "[{:.6},{:.6}]", b.lower, b.upper);
        }
        s
    }
}

fn join_sources(a: &str, b: &str) -> String {
    let mut parts: Vec<&str> = a.split('|').chain(b.split('|')).collect();
    parts.sort_unstable();
    parts.dedup();
    parts.join("|")
}

fn merge_bands(bands: &mut Vec<Band>, tol: f64) -> Vec<Band> {
    bands.sort_by(|a, b| a.lower.total_cmp(&b.lower));
    let mut out: Vec<Band> = Vec::with_capacity(bands.len());
    for b in bands.drain(..) {
        if let Some(last) = out.last_mut() {
            if b.lower <= last.upper + tol {
                // a nonzero but tiny gap is numerically closed
                if b.lower > last.upper {
                    last.touching = true;
                }
                last.touching |= b.touching;
                last.upper = last.upper.max(b.upper);
                last.source = join_sources(&last.source, &b.source);
                continue;
            }
        }
        out.push(b);
    }
    out
}

fn bisect_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Golden-section search for an extremum of `f` on `[a, b]`; `maximize`
/// selects the direction.
fn golden_extremum(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, maximize: bool) -> f64 {
    let g = |x: f64| if maximize { -f(x) } else { f(x) };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    0.5 * (a + b)
}

/// Default search bracket: Gershgorin interval of the periodic operator,
/// widened by one on each side.
pub fn default_bracket(potential: &[f64]) -> (f64, f64) {
    let lo = potential.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = potential.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo - 3.0, hi + 3.0)
}

/// Bands `{E : |D(E)| <= 2}` of a periodic potential.
///
/// `D` is scanned on a grid of step [`SCAN_STEP`]; every local extremum of
/// the sampled values is refined by golden-section search and inserted as a
/// breakpoint, so `D` is monotone between consecutive breakpoints and each
/// of `D = ±2` has at most one root there. Roots are bisected to `tol`.
pub fn bands_from_discriminant(
    potential: &[f64],
    bracket: Option<(f64, f64)>,
    tol: f64,
    source: &str,
) -> Result<BandStructure> {
    if potential.is_empty() {
        return Err(Error::domain("periodic potential must have period at least 1"));
    }
    if potential.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("periodic potential has non-finite entries"));
    }
    let (lo, hi) = bracket.unwrap_or_else(|| default_bracket(potential));
    if !(lo < hi) {
        return Err(Error::domain("empty energy bracket"));
    }
    let d = |e: f64| discriminant(potential, e);
    let steps = ((hi - lo) / SCAN_STEP).ceil().max(2.0) as usize;
    let h = (hi - lo) / steps as f64;
    let xs: Vec<f64> = (0..=steps).map(|i| lo + h * i as f64).collect();
    let ds: Vec<f64> = xs.iter().map(|&x| d(x)).collect();

    let mut breakpoints = xs.clone();
    let mut extrema = 0usize;
    // extrema where |D| touches 2: two bands meet without a gap
    let mut touch_points = Vec::new();
    for i in 1..steps {
        let left = ds[i] - ds[i - 1];
        let right = ds[i + 1] - ds[i];
        if left * right <= 0.0 && !(left == 0.0 && right == 0.0) {
            extrema += 1;
            let maximize = left > 0.0 || right < 0.0;
            let x = golden_extremum(d, xs[i - 1], xs[i + 1], maximize);
            if (d(x).abs() - 2.0).abs() <= CLOSED_GAP_EXCESS {
                touch_points.push(x);
            }
            breakpoints.push(x);
        }
    }
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();

    let mut warnings = Vec::new();
    let period = potential.len();
    if extrema + 1 > period {
        warnings.push(format!(
            "found {extrema} extrema of the discriminant, more than degree {period} allows"
        ));
    }

    let mut roots = Vec::new();
    for target in [2.0, -2.0] {
        let f = |e: f64| d(e) - target;
        for w in breakpoints.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (f(a), f(b));
            if fa == 0.0 {
                roots.push(a);
            } else if fa * fb < 0.0 {
                roots.push(bisect_root(f, a, b, tol));
            }
        }
        if f(hi) == 0.0 {
            roots.push(hi);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= tol);

    // classify segments between consecutive roots
    let mut segments: Vec<(f64, f64)> = Vec::new();
    for w in roots.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        if d(mid).abs() <= 2.0 + CLOSED_GAP_EXCESS {
            segments.push((w[0], w[1]));
        }
    }
    let mut bands: Vec<Band> = Vec::new();
    for (a, b) in segments {
        if let Some(last) = bands.last_mut() {
            if a <= last.upper + MERGE_TOL {
                last.upper = b;
                last.touching = true;
                continue;
            }
        }
        bands.push(Band {
            lower: a,
            upper: b,
            source: source.to_owned(),
            touching: false,
        });
    }
    for band in &mut bands {
        if touch_points
            .iter()
            .any(|&x| band.lower < x && x < band.upper)
        {
            band.touching = true;
        }
    }
    let closed_gaps = touch_points.len();
    if bands.len() + closed_gaps != period {
        warnings.push(format!(
            "found {} bands and {closed_gaps} closed gaps for period {period}; a band may have been missed",
            bands.len()
        ));
    }
    Ok(BandStructure {
        bands,
        conjectural: false,
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SigmaMode {
    /// Closed-form two-band answer, valid for `|λ| <= 2`.
    Proved,
    /// Union of the Floquet bands of the alternating-corner and the constant
    /// configuration; labelled conjectural for `|λ| > 2`.
    Conjecture,
}

impl FromStr for SigmaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "proved" => Ok(Self::Proved),
            "conjecture" => Ok(Self::Conjecture),
            other => Err(Error::domain(format!("unknown mode `{other}`"))),
        }
    }
}

pub const OMEGA_STAR_SOURCE: &str = "omega_star";
pub const OMEGA_ONE_SOURCE: &str = "omega_one";

/// One period of the alternating-corner potential `(0, λ, λ, 0)`.
pub fn omega_star_potential(lambda: f64) -> [f64; 4] {
    [0.0, lambda, lambda, 0.0]
}

/// One period of the constant configuration `ω ≡ 1`: `(0, λ)`.
pub fn omega_one_potential(lambda: f64) -> [f64; 2] {
    [0.0, lambda]
}

/// Almost sure spectrum of the Bernoulli displacement model.
pub fn sigma_lambda(lambda: f64, mode: SigmaMode) -> Result<BandStructure> {
    match mode {
        SigmaMode::Proved => {
            if lambda.abs() > 2.0 {
                return Err(Error::precondition(format!(
                    "the closed-form almost sure spectrum requires |lambda| <= 2, got {lambda}"
                )));
            }
            let e = band_edges_closed_form(lambda);
            let band = |lower, upper, touching| Band {
                lower,
                upper,
                source: "closed_form".to_owned(),
                touching,
            };
            let bands = if e.g_plus - e.g_minus <= MERGE_TOL {
                vec![band(e.e_minus, e.e_plus, true)]
            } else {
                vec![band(e.e_minus, e.g_minus, false), band(e.g_plus, e.e_plus, false)]
            };
            Ok(BandStructure {
                bands,
                conjectural: false,
                warnings: Vec::new(),
            })
        }
        SigmaMode::Conjecture => {
            let star = bands_from_discriminant(
                &omega_star_potential(lambda),
                None,
                1e-13,
                OMEGA_STAR_SOURCE,
            )?;
            let one = bands_from_discriminant(
                &omega_one_potential(lambda),
                None,
                1e-13,
                OMEGA_ONE_SOURCE,
            )?;
            let mut s = star.union(&one, MERGE_TOL);
            s.conjectural = lambda.abs() > 2.0;
            Ok(s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discriminant_examples() {
        assert_eq!(discriminant(&[0.0; 4], 0.0), 2.0);
        assert_eq!(discriminant(&[0.0, 1.0, 1.0, 0.0], 0.0), 1.0);
        assert!((discriminant(&[0.7], 0.2) - 0.5).abs() < 1e-15);
        let m = monodromy(&[0.3, -1.0, 2.0], 0.4);
        assert!((m.trace() - discriminant(&[0.3, -1.0, 2.0], 0.4)).abs() < 1e-14);
    }

    #[test]
    fn quartic_examples() {
        assert_eq!(bdm_discriminant_poly(0.0, 2.0), 2.0);
        assert_eq!(bdm_discriminant_poly(1.0, 0.0), 1.0);
        let e = band_edges_closed_form(1.0);
        assert!((bdm_discriminant_poly(1.0, e.e_minus).abs() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_edges() {
        let e = band_edges_closed_form(1.0);
        let want = [-1.618033988749895, 0.3819660112501051, 0.6180339887498949, 2.618033988749895];
        for (g, w) in e.as_array().iter().zip(want) {
            assert!((g - w).abs() < 1e-14, "{g} vs {w}");
        }
        assert_eq!(band_edges_closed_form(0.0).as_array(), [-2.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn free_band() {
        let s = bands_from_discriminant(&[0.0], None, 1e-13, "free").unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.bands[0].lower + 2.0).abs() < 1e-12 && (s.bands[0].upper - 2.0).abs() < 1e-12);
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn free_period_four_closes_all_gaps() {
        let s = bands_from_discriminant(&[0.0; 4], None, 1e-13, "free").unwrap();
        assert_eq!(s.len(), 1, "{:?}", s.bands);
        assert!(s.bands[0].touching);
        assert!(s.warnings.is_empty(), "{:?}", s.warnings);
    }

    #[test]
    fn alternating_corner_bands() {
        let s = bands_from_discriminant(&omega_star_potential(1.0), None, 1e-13, "s").unwrap();
        assert_eq!(s.len(), 4);
        let e = band_edges_closed_form(1.0);
        assert!((s.bands[0].lower - e.e_minus).abs() < 1e-9);
        assert!((s.bands[3].upper - e.e_plus).abs() < 1e-9);
        assert!((s.bands[1].upper - e.g_minus).abs() < 1e-9);
        assert!((s.bands[2].lower - e.g_plus).abs() < 1e-9);
    }

    #[test]
    fn proved_mode() {
        let s = sigma_lambda(1.0, SigmaMode::Proved).unwrap();
        assert_eq!(s.len(), 2);
        let z = sigma_lambda(0.0, SigmaMode::Proved).unwrap();
        assert_eq!(z.len(), 1);
        assert_eq!(z.intervals(), vec![(-2.0, 2.0)]);
        assert!(matches!(sigma_lambda(2.5, SigmaMode::Proved), Err(Error::Precondition(_))));
    }

    #[test]
    fn conjecture_mode_six_bands() {
        let s = sigma_lambda(3.0, SigmaMode::Conjecture).unwrap();
        assert!(s.conjectural);
        assert_eq!(s.len(), 6, "{}", s.summary());
        let p = sigma_lambda(1.0, SigmaMode::Conjecture).unwrap();
        assert!(!p.conjectural);
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn csv_layout() {
        let s = sigma_lambda(1.0, SigmaMode::Proved).unwrap();
        let csv = s.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "band_index,lower,upper,source,flag");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,-1.6180339887498949e0,"));
    }
}
