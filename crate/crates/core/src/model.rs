//! Displacement-model geometry, single-site potentials, configurations, and
//! the checkers for the extremal-configuration results.
//!
//! Cells are labelled by 1-based integer vectors: cell `k` covers the sites
//! `Π [(k_i - 1) M_i + 1, k_i M_i]`, so the box `[1, K M]` consists of the
//! cells `1..=K`. A displacement `a ∈ Δ = Π [0, M_i - b_i]` shifts the
//! single-site term by `a` inside its cell.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::floquet::{self, BandStructure, MERGE_TOL};
use crate::io::{csv_line, fmt_real};
use crate::lattice::{build_operator, BoundaryCondition, LatticeBox, SiteFunction};

/// Eigenvalue tolerance used by the bubble and minimizer checks.
pub const EIG_TOL: f64 = 1e-13;
/// Absolute tolerance for ties between spectral bottoms.
pub const TIE_TOL: f64 = 1e-9;
/// Strictness margin for the monotonicity check.
pub const STRICT_MARGIN: f64 = 1e-12;
/// Default cap on enumerated configurations.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// Cell sizes `M` and single-site support sizes `b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Geometry {
    m: Vec<usize>,
    b: Vec<usize>,
}

impl Geometry {
    pub fn new(m: Vec<usize>, b: Vec<usize>) -> Result<Self> {
        if m.is_empty() || m.len() != b.len() {
            return Err(Error::domain("cell and support sizes must be non-empty and of equal dimension"));
        }
        for (i, (&mi, &bi)) in m.iter().zip(&b).enumerate() {
            if bi == 0 || bi > mi {
                return Err(Error::domain(format!(
                    "axis {}: need 1 <= b <= M, got b = {bi}, M = {mi}",
                    i + 1
                )));
            }
        }
        Ok(Self { m, b })
    }

    /// Bernoulli displacement geometry: `M = 2`, `b = 1`.
    pub fn bdm() -> Self {
        Self { m: vec![2], b: vec![1] }
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self) -> &[usize] {
        &self.m
    }

    pub fn b(&self) -> &[usize] {
        &self.b
    }

    /// `M_i - b_i` per axis, the largest displacement.
    pub fn a_min(&self) -> Vec<usize> {
        self.m.iter().zip(&self.b).map(|(m, b)| m - b).collect()
    }

    /// Least integer `>= (M_i - b_i) / 2` per axis.
    pub fn center(&self) -> Vec<usize> {
        self.a_min().iter().map(|&s| s.div_ceil(2)).collect()
    }

    pub fn cell_box(&self) -> LatticeBox {
        LatticeBox::from_extents(&self.m).expect("validated extents")
    }

    pub fn support_box(&self) -> LatticeBox {
        LatticeBox::from_extents(&self.b).expect("validated extents")
    }

    /// Number of displacements `|Δ|`.
    pub fn delta_size(&self) -> usize {
        self.a_min().iter().map(|s| s + 1).product()
    }

    /// All displacements in lexicographic order.
    pub fn delta_points(&self) -> Vec<Vec<usize>> {
        let ext: Vec<usize> = self.a_min().iter().map(|s| s + 1).collect();
        (0..self.delta_size()).map(|i| unflatten(i, &ext)).collect()
    }

    pub fn delta_index(&self, a: &[usize]) -> Option<usize> {
        if !self.in_delta(a) {
            return None;
        }
        let ext: Vec<usize> = self.a_min().iter().map(|s| s + 1).collect();
        Some(flatten(a, &ext))
    }

    pub fn in_delta(&self, a: &[usize]) -> bool {
        a.len() == self.dim() && a.iter().zip(self.a_min()).all(|(&x, s)| x <= s)
    }

    pub fn is_corner(&self, a: &[usize]) -> bool {
        self.in_delta(a) && a.iter().zip(self.a_min()).all(|(&x, s)| x == 0 || x == s)
    }

    pub fn corners(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self
            .delta_points()
            .into_iter()
            .filter(|a| self.is_corner(a))
            .collect();
        out.dedup();
        out
    }
}

fn unflatten(mut i: usize, ext: &[usize]) -> Vec<usize> {
    let mut v = vec![0; ext.len()];
    for a in (0..ext.len()).rev() {
        v[a] = i % ext[a];
        i /= ext[a];
    }
    v
}

fn flatten(v: &[usize], ext: &[usize]) -> usize {
    v.iter().zip(ext).fold(0, |acc, (&x, &e)| acc * e + x)
}

/// Single-site potential `q`, given on the support box `B = Π [1, b_i]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingleSite {
    geometry: Geometry,
    values: Vec<f64>,
}

impl SingleSite {
    pub fn new(geometry: Geometry, values: Vec<f64>) -> Result<Self> {
        let n: usize = geometry.b().iter().product();
        if values.len() != n {
            return Err(Error::domain(format!(
                "single-site potential needs {n} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("single-site potential has non-finite values"));
        }
        Ok(Self { geometry, values })
    }

    /// `q = λ δ_1` on the Bernoulli geometry.
    pub fn bdm(lambda: f64) -> Self {
        Self {
            geometry: Geometry::bdm(),
            values: vec![lambda],
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            geometry: self.geometry.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn is_sign_definite(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0) || self.values.iter().all(|&v| v <= 0.0)
    }

    /// `q_a` on the cell box.
    pub fn placed(&self, a: &[usize]) -> Result<SiteFunction> {
        if !self.geometry.in_delta(a) {
            return Err(Error::domain(format!("displacement {a:?} lies outside Δ")));
        }
        let cell = self.geometry.cell_box();
        let support = self.geometry.support_box();
        let mut f = SiteFunction::zeros(cell.clone());
        for (j, y) in support.sites().enumerate() {
            let x: Vec<i64> = y.iter().zip(a).map(|(&y, &a)| y + a as i64).collect();
            let i = cell.index(&x).expect("support stays inside the cell");
            f.values_mut()[i] += self.values[j];
        }
        Ok(f)
    }
}

/// Whether `q` is reflection symmetric in every variable, `x_i ↦ b_i - x_i + 1`.
pub fn check_h1(q: &SingleSite) -> bool {
    let support = q.geometry.support_box();
    let b = q.geometry.b();
    let symmetric = support.sites().enumerate().all(|(j, x)| {
        (0..x.len()).all(|axis| {
            let mut y = x.clone();
            y[axis] = b[axis] as i64 - x[axis] + 1;
            q.values[support.index(&y).expect("mirror stays in B")] == q.values[j]
        })
    });
    symmetric
}

/// Displacement assignment on cells.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Configuration {
    /// `ω_k = table[k mod K]`, table in lexicographic order of the residues.
    Periodic {
        period: Vec<usize>,
        table: Vec<Vec<usize>>,
    },
    /// Explicit entries for the cells `1..=cells`, lexicographic.
    Window {
        cells: Vec<usize>,
        entries: Vec<Vec<usize>>,
    },
}

impl Configuration {
    pub fn periodic(period: Vec<usize>, table: Vec<Vec<usize>>) -> Result<Self> {
        Self::check_shape(&period, &table)?;
        Ok(Self::Periodic { period, table })
    }

    pub fn window(cells: Vec<usize>, entries: Vec<Vec<usize>>) -> Result<Self> {
        Self::check_shape(&cells, &entries)?;
        Ok(Self::Window { cells, entries })
    }

    /// One-dimensional periodic configuration with period `values.len()`;
    /// `values[j]` is the displacement of cells `k ≡ j (mod K)`.
    pub fn periodic_1d(values: &[usize]) -> Self {
        Self::Periodic {
            period: vec![values.len()],
            table: values.iter().map(|&v| vec![v]).collect(),
        }
    }

    /// One-dimensional window; `values[k - 1]` is the displacement of cell `k`.
    pub fn window_1d(values: &[usize]) -> Self {
        Self::Window {
            cells: vec![values.len()],
            entries: values.iter().map(|&v| vec![v]).collect(),
        }
    }

    fn check_shape(shape: &[usize], entries: &[Vec<usize>]) -> Result<()> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::domain("configuration shape must be non-empty and positive"));
        }
        let n: usize = shape.iter().product();
        if entries.len() != n {
            return Err(Error::domain(format!(
                "configuration needs {n} entries, got {}",
                entries.len()
            )));
        }
        if entries.iter().any(|e| e.len() != shape.len()) {
            return Err(Error::domain("configuration entry has the wrong dimension"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Periodic { period, .. } => period.len(),
            Self::Window { cells, .. } => cells.len(),
        }
    }

    pub fn entries(&self) -> &[Vec<usize>] {
        match self {
            Self::Periodic { table, .. } => table,
            Self::Window { entries, .. } => entries,
        }
    }

    /// Every entry lies in Δ.
    pub fn validate(&self, geometry: &Geometry) -> Result<()> {
        if self.dim() != geometry.dim() {
            return Err(Error::domain("configuration and geometry differ in dimension"));
        }
        if let Some(bad) = self.entries().iter().find(|a| !geometry.in_delta(a)) {
            return Err(Error::domain(format!("displacement {bad:?} lies outside Δ")));
        }
        Ok(())
    }

    /// Displacement of the cell with 1-based label `k`.
    pub fn displacement(&self, k: &[i64]) -> Result<&[usize]> {
        match self {
            Self::Periodic { period, table } => {
                let r: Vec<usize> = k
                    .iter()
                    .zip(period)
                    .map(|(&k, &p)| k.rem_euclid(p as i64) as usize)
                    .collect();
                Ok(&table[flatten(&r, period)])
            }
            Self::Window { cells, entries } => {
                if k.iter().zip(cells).any(|(&k, &c)| k < 1 || k > c as i64) {
                    return Err(Error::domain(format!("cell {k:?} lies outside the window")));
                }
                let r: Vec<usize> = k.iter().map(|&k| (k - 1) as usize).collect();
                Ok(&entries[flatten(&r, cells)])
            }
        }
    }

    /// The box `Π [1, K_i M_i]` spanned by one period (or by the window).
    pub fn cell_span(&self, geometry: &Geometry) -> Result<LatticeBox> {
        let shape = match self {
            Self::Periodic { period, .. } => period,
            Self::Window { cells, .. } => cells,
        };
        if shape.len() != geometry.dim() {
            return Err(Error::domain("configuration and geometry differ in dimension"));
        }
        let ext: Vec<usize> = shape.iter().zip(geometry.m()).map(|(k, m)| k * m).collect();
        LatticeBox::from_extents(&ext)
    }

    /// Compact label such as `0110` (1D) or `(0,1)(1,0)` (d >= 2).
    pub fn label(&self) -> String {
        if self.dim() == 1 {
            self.entries().iter().map(|a| a[0].to_string()).collect::<Vec<_>>().join("")
        } else {
            self.entries()
                .iter()
                .map(|a| {
                    let parts: Vec<String> = a.iter().map(|x| x.to_string()).collect();
                    format!("({})", parts.join(","))
                })
                .collect()
        }
    }
}

/// The period-2 configuration placing neighbouring single-site terms into
/// adjacent corners: `(ω_k)_i = 0` for even `k_i`, `M_i - b_i` for odd `k_i`.
pub fn build_omega_star(geometry: &Geometry) -> Configuration {
    let d = geometry.dim();
    let amin = geometry.a_min();
    let period = vec![2; d];
    let table = (0..1usize << d)
        .map(|t| {
            let parity = unflatten(t, &period);
            parity
                .iter()
                .zip(&amin)
                .map(|(&p, &s)| if p == 0 { 0 } else { s })
                .collect()
        })
        .collect();
    Configuration::Periodic { period, table }
}

/// The constant configuration `ω ≡ a`.
pub fn constant_configuration(a: &[usize]) -> Configuration {
    Configuration::Periodic {
        period: vec![1; a.len()],
        table: vec![a.to_vec()],
    }
}

/// `scale · V_ω` restricted to a window made of whole cells.
pub fn assemble_potential(
    config: &Configuration,
    window: &LatticeBox,
    q: &SingleSite,
    scale: f64,
) -> Result<SiteFunction> {
    let g = q.geometry();
    config.validate(g)?;
    if window.dim() != g.dim() {
        return Err(Error::domain("window and geometry differ in dimension"));
    }
    let m: Vec<i64> = g.m().iter().map(|&m| m as i64).collect();
    #[allow(clippy::needless_range_loop)]
    for a in 0..g.dim() {
        if (window.lower()[a] - 1).rem_euclid(m[a]) != 0 || window.extent(a) as i64 % m[a] != 0 {
            return Err(Error::domain(format!(
                "window {window} is not a union of cells of size {:?}",
                g.m()
            )));
        }
    }
    let first: Vec<i64> = (0..g.dim())
        .map(|a| (window.lower()[a] - 1).div_euclid(m[a]) + 1)
        .collect();
    let counts: Vec<usize> = (0..g.dim())
        .map(|a| window.extent(a) / g.m()[a])
        .collect();
    let support = g.support_box();
    let mut f = SiteFunction::zeros(window.clone());
    let ncells: usize = counts.iter().product();
    for c in 0..ncells {
        let offset = unflatten(c, &counts);
        let k: Vec<i64> = offset.iter().zip(&first).map(|(&o, &f)| f + o as i64).collect();
        let a = config.displacement(&k)?;
        for (j, y) in support.sites().enumerate() {
            let x: Vec<i64> = (0..g.dim())
                .map(|i| (k[i] - 1) * m[i] + a[i] as i64 + y[i])
                .collect();
            let idx = window.index(&x).expect("cell lies inside the window");
            f.values_mut()[idx] += scale * q.values()[j];
        }
    }
    Ok(f)
}

fn periodic_cell_operator(
    config: &Configuration,
    q: &SingleSite,
    sign: f64,
) -> Result<crate::lattice::LatticeOperator> {
    if !matches!(config, Configuration::Periodic { .. }) {
        return Err(Error::domain("a periodic configuration is required"));
    }
    let cell = config.cell_span(q.geometry())?;
    let v = assemble_potential(config, &cell, q, sign)?;
    build_operator(&cell, BoundaryCondition::Periodic, &v)
}

/// `inf σ(h_0 + sign·V_ω)` for periodic `ω`, computed on one period cell
/// with periodic boundary conditions.
pub fn spectral_bottom_periodic(config: &Configuration, q: &SingleSite, sign: f64) -> Result<f64> {
    periodic_cell_operator(config, q, sign)?.lowest_eigenvalue(EIG_TOL)
}

/// `sup σ(h_0 + sign·V_ω)` for periodic `ω`.
pub fn spectral_top_periodic(config: &Configuration, q: &SingleSite, sign: f64) -> Result<f64> {
    periodic_cell_operator(config, q, sign)?.highest_eigenvalue(EIG_TOL)
}

/// Probability weights over Δ (lexicographic order).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::domain("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    /// Bernoulli law on `Δ = {0, 1}` with `P(0) = p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("probability {p} outside [0, 1]")));
        }
        Self::new(vec![p, 1.0 - p])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Displacements with positive weight.
    pub fn support(&self, geometry: &Geometry) -> Result<Vec<Vec<usize>>> {
        self.check_len(geometry)?;
        Ok(geometry
            .delta_points()
            .into_iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(a, _)| a)
            .collect())
    }

    /// Every corner of Δ carries positive weight.
    pub fn check_h2(&self, geometry: &Geometry) -> Result<bool> {
        self.check_len(geometry)?;
        Ok(geometry
            .corners()
            .iter()
            .all(|c| self.weights[geometry.delta_index(c).expect("corner in Δ")] > 0.0))
    }

    fn check_len(&self, geometry: &Geometry) -> Result<()> {
        if self.weights.len() != geometry.delta_size() {
            return Err(Error::domain(format!(
                "distribution has {} weights but Δ has {} points",
                self.weights.len(),
                geometry.delta_size()
            )));
        }
        Ok(())
    }
}

/// Table `a ↦ min σ(h^N_Λ + sign·q_a)` over Δ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyMap {
    pub geometry: Geometry,
    pub sign: f64,
    pub entries: Vec<(Vec<usize>, f64)>,
    /// Smallest table value.
    pub e_min: f64,
    /// Largest table value.
    pub e_max: f64,
}

impl EnergyMap {
    pub fn get(&self, a: &[usize]) -> Option<f64> {
        self.geometry.delta_index(a).map(|i| self.entries[i].1)
    }

    /// Largest deviation from the per-axis flip `a_i ↦ M_i - b_i - a_i`.
    pub fn reflection_defect(&self) -> f64 {
        let amin = self.geometry.a_min();
        let mut worst: f64 = 0.0;
        for (a, e) in &self.entries {
            for axis in 0..a.len() {
                let mut f = a.clone();
                f[axis] = amin[axis] - a[axis];
                worst = worst.max((self.get(&f).expect("flip stays in Δ") - e).abs());
            }
        }
        worst
    }

    /// CSV with columns `a_1,...,a_d,E0`.
    pub fn to_csv(&self) -> String {
        let d = self.geometry.dim();
        let mut header: Vec<String> = (1..=d).map(|i| format!("a_{i}")).collect();
        header.push("E0".to_owned());
        let mut out = csv_line(header);
        for (a, e) in &self.entries {
            let mut row: Vec<String> = a.iter().map(|x| x.to_string()).collect();
            row.push(fmt_real(*e));
            out.push_str(&csv_line(row));
        }
        out
    }
}

pub fn ground_energy_map(q: &SingleSite, sign: f64) -> Result<EnergyMap> {
    if !check_h1(q) {
        return Err(Error::precondition(
            "reflection symmetry hypothesis violated: q is not symmetric under x_i -> b_i - x_i + 1",
        ));
    }
    let g = q.geometry().clone();
    let cell = g.cell_box();
    let energies: Vec<Result<f64>> = g
        .delta_points()
        .par_iter()
        .map(|a| {
            let mut v = q.placed(a)?;
            v.values_mut().iter_mut().for_each(|x| *x *= sign);
            let op = build_operator(&cell, BoundaryCondition::Neumann, &v)?;
            Ok(op.ground_state(EIG_TOL)?.energy)
        })
        .collect();
    let mut entries = Vec::with_capacity(energies.len());
    for (a, e) in g.delta_points().into_iter().zip(energies) {
        entries.push((a, e?));
    }
    let e_min = entries.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let e_max = entries.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(EnergyMap {
        geometry: g,
        sign,
        entries,
        e_min,
        e_max,
    })
}

/// A pair of neighbouring displacements along which `E0` fails to drop by
/// more than [`STRICT_MARGIN`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityViolation {
    pub axis: usize,
    pub from: Vec<usize>,
    pub to: Vec<usize>,
    pub drop: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BubbleReport {
    pub monotone: bool,
    /// Smallest observed drop `E0(a) - E0(a + e_i)`; infinite when Δ offers
    /// no step to check.
    pub min_margin: f64,
    pub checked_pairs: usize,
    pub violations: Vec<MonotonicityViolation>,
    pub map: EnergyMap,
}

/// Checks that `E0` strictly decreases along each axis from the centre
/// index towards the far corner, for every choice of the remaining
/// coordinates in the upper half of Δ.
pub fn verify_bubbles(q: &SingleSite, sign: f64) -> Result<BubbleReport> {
    let map = ground_energy_map(q, sign)?;
    let g = q.geometry();
    let d = g.dim();
    let sign_definite = !q.is_zero() && q.is_sign_definite();
    if !sign_definite {
        if d >= 2 {
            return Err(Error::precondition(
                "in dimension two and higher the single-site potential must be nonzero and sign-definite",
            ));
        }
        let free = -2.0 * d as f64;
        if map.entries.iter().all(|(_, e)| (e - free).abs() <= 1e-10) {
            return Err(Error::precondition(
                "in dimension one E0(a) must differ from -2 for at least one displacement a",
            ));
        }
    }

    let amin = g.a_min();
    let r = g.center();
    let mut violations = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut checked = 0usize;
    for (a, e) in &map.entries {
        if (0..d).any(|j| a[j] < r[j]) {
            continue;
        }
        for axis in 0..d {
            if a[axis] >= amin[axis] {
                continue;
            }
            let mut next = a.clone();
            next[axis] += 1;
            let drop = e - map.get(&next).expect("step stays in Δ");
            checked += 1;
            min_margin = min_margin.min(drop);
            if drop <= STRICT_MARGIN {
                violations.push(MonotonicityViolation {
                    axis: axis + 1,
                    from: a.clone(),
                    to: next,
                    drop,
                });
            }
        }
    }
    Ok(BubbleReport {
        monotone: violations.is_empty(),
        min_margin,
        checked_pairs: checked,
        violations,
        map,
    })
}

/// One enumerated periodic configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnumeratedConfiguration {
    pub omega: Vec<usize>,
    pub bottom: f64,
    pub minimizing: bool,
    /// `L` even and exactly `L/2` entries at each corner of Δ.
    pub balanced: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinimizerReport {
    pub period: usize,
    pub sign: f64,
    pub e_min: f64,
    pub configurations: Vec<EnumeratedConfiguration>,
    pub predicate_holds: bool,
}

impl MinimizerReport {
    pub fn minimizers(&self) -> Vec<&[usize]> {
        self.configurations
            .iter()
            .filter(|c| c.minimizing)
            .map(|c| c.omega.as_slice())
            .collect()
    }

    /// CSV with columns `omega,bottom,minimizing,balanced`.
    pub fn to_csv(&self) -> String {
        let mut out = csv_line(["omega", "bottom", "minimizing", "balanced"]);
        for c in &self.configurations {
            let label: String = c.omega.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            out.push_str(&csv_line([
                label,
                fmt_real(c.bottom),
                c.minimizing.to_string(),
                c.balanced.to_string(),
            ]));
        }
        out
    }
}

/// Enumerates every `L`-periodic configuration in d = 1 and compares the
/// set of spectral minimizers with the balanced configurations.
///
/// `sign = -1` classifies maximizers of `h_0 + V` via `-inf σ(h_0 - V)`.
pub fn classify_minimizers_1d(
    q: &SingleSite,
    period: usize,
    sign: f64,
    cap: usize,
) -> Result<MinimizerReport> {
    let g = q.geometry();
    if g.dim() != 1 {
        return Err(Error::precondition("minimizer classification is one-dimensional"));
    }
    if period == 0 {
        return Err(Error::domain("period must be positive"));
    }
    let map = ground_energy_map(q, sign)?;
    if map.entries.iter().all(|(_, e)| (e + 2.0).abs() <= 1e-10) {
        return Err(Error::precondition(
            "E0(a) must differ from -2 for at least one displacement a",
        ));
    }
    let base = g.delta_size();
    let total = (base as f64).powi(period as i32);
    if total > cap as f64 {
        return Err(Error::resource(format!(
            "{base}^{period} configurations exceed the enumeration cap {cap}"
        )));
    }
    let total = total as usize;
    let s = g.a_min()[0];
    let results: Vec<Result<EnumeratedConfiguration>> = (0..total)
        .into_par_iter()
        .map(|code| {
            let omega = unflatten(code, &vec![base; period]);
            let config = Configuration::periodic_1d(&omega);
            let bottom = spectral_bottom_periodic(&config, q, sign)?;
            let n0 = omega.iter().filter(|&&w| w == 0).count();
            let n1 = omega.iter().filter(|&&w| w == s).count();
            let balanced = period.is_multiple_of(2) && n0 == period / 2 && n1 == period / 2;
            Ok(EnumeratedConfiguration {
                omega,
                bottom,
                minimizing: bottom <= map.e_min + TIE_TOL,
                balanced,
            })
        })
        .collect();
    let configurations = results.into_iter().collect::<Result<Vec<_>>>()?;
    let predicate_holds = configurations.iter().all(|c| c.minimizing == c.balanced);
    Ok(MinimizerReport {
        period,
        sign,
        e_min: map.e_min,
        configurations,
        predicate_holds,
    })
}

/// Union of the Floquet spectra of all periodic configurations of period at
/// most `max_period` with entries in the support of `mu` (d = 1).
///
/// Bands closer than `resolution` are merged. The result grows with
/// `max_period` and approximates the almost sure spectrum from inside.
pub fn approx_almost_sure_spectrum(
    mu: &Distribution,
    q: &SingleSite,
    scale: f64,
    max_period: usize,
    resolution: f64,
) -> Result<BandStructure> {
    let g = q.geometry();
    if g.dim() != 1 {
        return Err(Error::precondition(
            "the periodic-union approximation is implemented for d = 1 only",
        ));
    }
    if !mu.check_h2(g)? {
        return Err(Error::precondition(
            "the displacement law must give positive weight to every corner of Δ",
        ));
    }
    if max_period == 0 {
        return Err(Error::domain("max period must be positive"));
    }
    let support = mu.support(g)?;
    let n = support.len();
    let total: f64 = (1..=max_period).map(|t| (n as f64).powi(t as i32)).sum();
    if total > DEFAULT_ENUMERATION_CAP as f64 {
        return Err(Error::resource(format!(
            "{total} periodic configurations exceed the enumeration cap"
        )));
    }
    let mut configs = Vec::new();
    for t in 1..=max_period {
        for code in 0..n.pow(t as u32) {
            let idx = unflatten(code, &vec![n; t]);
            let omega: Vec<usize> = idx.iter().map(|&i| support[i][0]).collect();
            configs.push(omega);
        }
    }
    let parts: Vec<Result<BandStructure>> = configs
        .par_iter()
        .map(|omega| {
            let config = Configuration::periodic_1d(omega);
            let cell = config.cell_span(g)?;
            let v = assemble_potential(&config, &cell, q, scale)?;
            floquet::bands_from_discriminant(v.values(), None, 1e-13, &config.label())
        })
        .collect();
    let mut acc = BandStructure {
        bands: Vec::new(),
        conjectural: false,
        warnings: Vec::new(),
    };
    for part in parts {
        acc = acc.union(&part?, resolution.max(MERGE_TOL));
    }
    Ok(acc)
}
