//! Boxes in Z^d, site functions, and finite-volume lattice operators.
//!
//! The kinetic term has zero diagonal and `-1` between nearest neighbours,
//! so the free spectrum sits in `[-2d, 2d]`. Boundary conditions only touch
//! the diagonal (Neumann subtracts, Dirichlet adds the number of missing
//! neighbours) except for `Periodic`, which closes every axis into a ring.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{self, DenseSymmetric, GroundState, Spectrum, SymTridiagonal};

/// Default upper bound on the number of sites of an assembled operator.
pub const DEFAULT_VOLUME_CAP: usize = 20_000;

/// Axis-aligned integer box `Π [lower_i, upper_i]`.
///
/// Sites are enumerated lexicographically with the last coordinate running
/// fastest.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    lower: Vec<i64>,
    upper: Vec<i64>,
}

impl LatticeBox {
    pub fn new(lower: Vec<i64>, upper: Vec<i64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::domain("box must have dimension at least 1"));
        }
        if lower.len() != upper.len() {
            return Err(Error::domain("lower and upper corners differ in dimension"));
        }
        if let Some(i) = (0..lower.len()).find(|&i| lower[i] > upper[i]) {
            return Err(Error::domain(format!(
                "axis {}: lower {} exceeds upper {}",
                i + 1,
                lower[i],
                upper[i]
            )));
        }
        Ok(Self { lower, upper })
    }

    /// One-dimensional box `[lo, hi]`.
    pub fn interval(lo: i64, hi: i64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    /// The box `Π [1, extents_i]`.
    pub fn from_extents(extents: &[usize]) -> Result<Self> {
        if extents.contains(&0) {
            return Err(Error::domain("box extents must be positive"));
        }
        Self::new(
            vec![1; extents.len()],
            extents.iter().map(|&m| m as i64).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[i64] {
        &self.lower
    }

    pub fn upper(&self) -> &[i64] {
        &self.upper
    }

    /// Number of sites along `axis` (0-based).
    pub fn extent(&self, axis: usize) -> usize {
        (self.upper[axis] - self.lower[axis] + 1) as usize
    }

    pub fn extents(&self) -> Vec<usize> {
        (0..self.dim()).map(|a| self.extent(a)).collect()
    }

    pub fn volume(&self) -> usize {
        (0..self.dim()).map(|a| self.extent(a)).product()
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        site.len() == self.dim()
            && site
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    /// Linear index of `site`, or `None` when it lies outside.
    pub fn index(&self, site: &[i64]) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        let mut idx = 0usize;
        for (a, &x) in site.iter().enumerate() {
            idx = idx * self.extent(a) + (x - self.lower[a]) as usize;
        }
        Some(idx)
    }

    /// Inverse of [`LatticeBox::index`].
    pub fn site(&self, mut index: usize) -> Vec<i64> {
        let d = self.dim();
        let mut site = vec![0; d];
        for a in (0..d).rev() {
            let m = self.extent(a);
            site[a] = self.lower[a] + (index % m) as i64;
            index /= m;
        }
        site
    }

    pub fn sites(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.volume()).map(move |i| self.site(i))
    }

    /// Same box translated by `shift`.
    pub fn translated(&self, shift: &[i64]) -> Self {
        Self {
            lower: self.lower.iter().zip(shift).map(|(a, b)| a + b).collect(),
            upper: self.upper.iter().zip(shift).map(|(a, b)| a + b).collect(),
        }
    }
}

impl std::fmt::Display for LatticeBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = (0..self.dim())
            .map(|a| format!("[{},{}]", self.lower[a], self.upper[a]))
            .collect();
        f.write_str(&parts.join("x"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryCondition {
    Truncation,
    Neumann,
    Dirichlet,
    Periodic,
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "truncation" | "simple" => Ok(Self::Truncation),
            "neumann" => Ok(Self::Neumann),
            "dirichlet" => Ok(Self::Dirichlet),
            "periodic" => Ok(Self::Periodic),
            other => Err(Error::domain(format!("unknown boundary condition `{other}`"))),
        }
    }
}

impl std::fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Truncation => "truncation",
            Self::Neumann => "neumann",
            Self::Dirichlet => "dirichlet",
            Self::Periodic => "periodic",
        })
    }
}

/// Real function on the sites of a box.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteFunction {
    domain: LatticeBox,
    values: Vec<f64>,
}

impl SiteFunction {
    pub fn new(domain: LatticeBox, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.volume() {
            return Err(Error::domain(format!(
                "{} values supplied for a box of volume {}",
                values.len(),
                domain.volume()
            )));
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: LatticeBox) -> Self {
        let n = domain.volume();
        Self {
            domain,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn(domain: LatticeBox, mut f: impl FnMut(&[i64]) -> f64) -> Self {
        let values = domain.sites().map(|x| f(&x)).collect();
        Self { domain, values }
    }

    pub fn domain(&self) -> &LatticeBox {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, site: &[i64]) -> Option<f64> {
        self.domain.index(site).map(|i| self.values[i])
    }

    pub fn dot(&self, other: &SiteFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }
}

/// Off-diagonal part of a lattice operator.
#[derive(Clone, Debug, PartialEq)]
pub enum Hopping {
    /// One-dimensional chain: `off[i]` couples sites i and i+1, `wrap`
    /// couples the first and the last site.
    Chain { off: Vec<f64>, wrap: f64 },
    /// Symmetric adjacency lists (each pair stored in both rows).
    Sparse(Vec<Vec<(usize, f64)>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeOperator {
    domain: LatticeBox,
    bc: BoundaryCondition,
    diagonal: Vec<f64>,
    hopping: Hopping,
}

/// Number of nearest neighbours of `site` that lie outside `domain`.
pub fn edge_count(domain: &LatticeBox, site: &[i64]) -> Result<usize> {
    if !domain.contains(site) {
        return Err(Error::domain(format!("site {site:?} lies outside {domain}")));
    }
    Ok((0..domain.dim())
        .map(|a| {
            usize::from(site[a] == domain.lower()[a]) + usize::from(site[a] == domain.upper()[a])
        })
        .sum())
}

/// Assembles `h_0 + V` with the given boundary condition, refusing boxes
/// larger than [`DEFAULT_VOLUME_CAP`].
pub fn build_operator(
    domain: &LatticeBox,
    bc: BoundaryCondition,
    potential: &SiteFunction,
) -> Result<LatticeOperator> {
    build_operator_capped(domain, bc, potential, DEFAULT_VOLUME_CAP)
}

pub fn build_operator_capped(
    domain: &LatticeBox,
    bc: BoundaryCondition,
    potential: &SiteFunction,
    volume_cap: usize,
) -> Result<LatticeOperator> {
    if potential.domain() != domain {
        return Err(Error::domain(format!(
            "potential lives on {} but the operator box is {}",
            potential.domain(),
            domain
        )));
    }
    let n = domain.volume();
    if n > volume_cap {
        return Err(Error::resource(format!(
            "box volume {n} exceeds the cap of {volume_cap} sites"
        )));
    }
    let mut diagonal = potential.values().to_vec();
    match bc {
        BoundaryCondition::Neumann | BoundaryCondition::Dirichlet => {
            let sign = if bc == BoundaryCondition::Neumann { -1.0 } else { 1.0 };
            for (i, x) in domain.sites().enumerate() {
                diagonal[i] += sign * edge_count(domain, &x)? as f64;
            }
        }
        BoundaryCondition::Truncation | BoundaryCondition::Periodic => {}
    }
    let periodic = bc == BoundaryCondition::Periodic;

    if domain.dim() == 1 {
        let mut off = vec![-1.0; n.saturating_sub(1)];
        let mut wrap = 0.0;
        if periodic {
            // the ring of length m folds onto itself for m <= 2
            match n {
                1 => diagonal[0] -= 2.0,
                2 => off[0] -= 1.0,
                _ => wrap = -1.0,
            }
        }
        return Ok(LatticeOperator {
            domain: domain.clone(),
            bc,
            diagonal,
            hopping: Hopping::Chain { off, wrap },
        });
    }

    let d = domain.dim();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, x) in domain.sites().enumerate() {
        for a in 0..d {
            let m = domain.extent(a) as i64;
            for step in [-1i64, 1] {
                let mut y = x.clone();
                y[a] += step;
                if !domain.contains(&y) {
                    if !periodic {
                        continue;
                    }
                    y[a] = domain.lower()[a] + (y[a] - domain.lower()[a]).rem_euclid(m);
                }
                let j = domain.index(&y).expect("wrapped site lies in the box");
                if j == i {
                    diagonal[i] -= 1.0;
                } else if let Some(e) = adj[i].iter_mut().find(|(k, _)| *k == j) {
                    e.1 -= 1.0;
                } else {
                    adj[i].push((j, -1.0));
                }
            }
        }
    }
    for row in &mut adj {
        row.sort_by_key(|(j, _)| *j);
    }
    Ok(LatticeOperator {
        domain: domain.clone(),
        bc,
        diagonal,
        hopping: Hopping::Sparse(adj),
    })
}

impl LatticeOperator {
    pub fn domain(&self) -> &LatticeBox {
        &self.domain
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn hopping(&self) -> &Hopping {
        &self.hopping
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    /// Matrix entry `(i, j)`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let n = self.dim();
        let mut v = if i == j { self.diagonal[i] } else { 0.0 };
        match &self.hopping {
            Hopping::Chain { off, wrap } => {
                if i + 1 == j {
                    v += off[i];
                } else if j + 1 == i {
                    v += off[j];
                }
                if n >= 3 && ((i == 0 && j == n - 1) || (j == 0 && i == n - 1)) {
                    v += wrap;
                }
            }
            Hopping::Sparse(adj) => {
                if let Some((_, w)) = adj[i].iter().find(|(k, _)| *k == j) {
                    v += w;
                }
            }
        }
        v
    }

    fn apply_raw(&self, u: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.diagonal.iter().zip(u).map(|(d, x)| d * x).collect();
        match &self.hopping {
            Hopping::Chain { off, wrap } => {
                for (i, &b) in off.iter().enumerate() {
                    y[i] += b * u[i + 1];
                    y[i + 1] += b * u[i];
                }
                let n = u.len();
                if *wrap != 0.0 {
                    y[0] += wrap * u[n - 1];
                    y[n - 1] += wrap * u[0];
                }
            }
            Hopping::Sparse(adj) => {
                for (i, row) in adj.iter().enumerate() {
                    for &(j, w) in row {
                        y[i] += w * u[j];
                    }
                }
            }
        }
        y
    }

    pub fn to_dense(&self) -> DenseSymmetric {
        let n = self.dim();
        let mut a = DenseSymmetric::from_diagonal(&self.diagonal);
        match &self.hopping {
            Hopping::Chain { off, wrap } => {
                for (i, &b) in off.iter().enumerate() {
                    a.add(i, i + 1, b);
                }
                if *wrap != 0.0 {
                    a.add(0, n - 1, *wrap);
                }
            }
            Hopping::Sparse(adj) => {
                for (i, row) in adj.iter().enumerate() {
                    for &(j, w) in row {
                        if j > i {
                            a.add(i, j, w);
                        }
                    }
                }
            }
        }
        a
    }

    /// Tridiagonal (ring-closed under periodic BC) form of a 1D operator.
    pub fn to_tridiagonal(&self) -> Option<SymTridiagonal> {
        match &self.hopping {
            Hopping::Chain { off, wrap } => {
                SymTridiagonal::with_corner(self.diagonal.clone(), off.clone(), *wrap).ok()
            }
            Hopping::Sparse(_) => None,
        }
    }

    /// Coordinate-list dump: `i j value`, sorted by `(i, j)`. Diagonal
    /// entries are always listed, off-diagonal ones when nonzero.
    pub fn coo_text(&self) -> String {
        let n = self.dim();
        let mut out = String::new();
        for i in 0..n {
            let mut cols: Vec<usize> = vec![i];
            match &self.hopping {
                Hopping::Chain { .. } => {
                    if i > 0 {
                        cols.push(i - 1);
                    }
                    if i + 1 < n {
                        cols.push(i + 1);
                    }
                    if n >= 3 && i == 0 {
                        cols.push(n - 1);
                    }
                    if n >= 3 && i == n - 1 {
                        cols.push(0);
                    }
                }
                Hopping::Sparse(adj) => cols.extend(adj[i].iter().map(|(j, _)| *j)),
            }
            cols.sort_unstable();
            cols.dedup();
            for j in cols {
                let v = self.entry(i, j);
                if i == j || v != 0.0 {
                    let _ = writeln!(out, "{i} {j} {}", crate::io::fmt_real(v));
                }
            }
        }
        out
    }

    /// Number of eigenvalues `<= e`.
    pub fn count_le(&self, e: f64) -> usize {
        match self.to_tridiagonal() {
            Some(t) => spectra::sturm_count(&t, e),
            None => spectra::inertia_count(&self.to_dense(), e),
        }
    }

    pub fn eigenvalues(&self, tol: f64) -> Result<Spectrum> {
        match self.to_tridiagonal() {
            Some(t) => spectra::eigenvalues_tridiag(&t, tol),
            None => spectra::eigen_dense(&self.to_dense()),
        }
    }

    pub fn lowest_eigenvalue(&self, tol: f64) -> Result<f64> {
        match self.to_tridiagonal() {
            Some(t) => spectra::kth_eigenvalue_tridiag(&t, 0, tol),
            None => spectra::lowest_eigenvalue(&self.to_dense(), tol),
        }
    }

    pub fn highest_eigenvalue(&self, tol: f64) -> Result<f64> {
        match self.to_tridiagonal() {
            Some(t) => spectra::kth_eigenvalue_tridiag(&t, t.dim() - 1, tol),
            None => spectra::highest_eigenvalue(&self.to_dense(), tol),
        }
    }

    pub fn ground_state(&self, tol: f64) -> Result<GroundState> {
        spectra::ground_state(&self.to_dense(), tol)
    }
}

/// `op · u`.
pub fn apply(op: &LatticeOperator, u: &SiteFunction) -> Result<SiteFunction> {
    if u.domain() != op.domain() {
        return Err(Error::domain(format!(
            "function on {} cannot be fed to an operator on {}",
            u.domain(),
            op.domain()
        )));
    }
    Ok(SiteFunction {
        domain: op.domain.clone(),
        values: op.apply_raw(u.values()),
    })
}

/// Even reflection of `u` across the upper face of its box along `axis`
/// (1-based). The result lives on the box doubled in that direction.
pub fn reflect_extension(u: &SiteFunction, axis: usize) -> Result<SiteFunction> {
    let dom = u.domain();
    if axis == 0 || axis > dom.dim() {
        return Err(Error::domain(format!(
            "axis {axis} out of range for a {}-dimensional box",
            dom.dim()
        )));
    }
    let a = axis - 1;
    let mut upper = dom.upper().to_vec();
    let top = upper[a];
    upper[a] += dom.extent(a) as i64;
    let doubled = LatticeBox::new(dom.lower().to_vec(), upper)?;
    Ok(SiteFunction::from_fn(doubled, |x| {
        let mut y = x.to_vec();
        if y[a] > top {
            y[a] = 2 * top + 1 - y[a];
        }
        u.get(&y).expect("mirrored site lies in the original box")
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero(b: &LatticeBox) -> SiteFunction {
        SiteFunction::zeros(b.clone())
    }

    #[test]
    fn edge_counts_on_square() {
        let b = LatticeBox::from_extents(&[3, 3]).unwrap();
        assert_eq!(edge_count(&b, &[1, 1]).unwrap(), 2);
        assert_eq!(edge_count(&b, &[2, 2]).unwrap(), 0);
        assert_eq!(edge_count(&b, &[2, 1]).unwrap(), 1);
        assert!(matches!(edge_count(&b, &[0, 1]), Err(Error::Domain(_))));
    }

    #[test]
    fn index_map_is_lexicographic() {
        let b = LatticeBox::new(vec![0, 5], vec![1, 7]).unwrap();
        assert_eq!(b.volume(), 6);
        assert_eq!(b.index(&[0, 5]), Some(0));
        assert_eq!(b.index(&[0, 6]), Some(1));
        assert_eq!(b.index(&[1, 5]), Some(3));
        for i in 0..6 {
            assert_eq!(b.index(&b.site(i)), Some(i));
        }
    }

    #[test]
    fn neumann_three_sites() {
        let b = LatticeBox::interval(1, 3).unwrap();
        let op = build_operator(&b, BoundaryCondition::Neumann, &zero(&b)).unwrap();
        let rows = [[-1.0, -1.0, 0.0], [-1.0, 0.0, -1.0], [0.0, -1.0, -1.0]];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(op.entry(i, j), v);
            }
        }
        let s = op.eigenvalues(1e-12).unwrap();
        for (got, want) in s.eigenvalues.iter().zip([-2.0, -1.0, 1.0]) {
            assert!((got - want).abs() < 1e-11);
        }
    }

    #[test]
    fn periodic_four_sites() {
        let b = LatticeBox::interval(1, 4).unwrap();
        let op = build_operator(&b, BoundaryCondition::Periodic, &zero(&b)).unwrap();
        let s = op.eigenvalues(1e-12).unwrap();
        for (got, want) in s.eigenvalues.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert!((got - want).abs() < 1e-11);
        }
        let u = SiteFunction::new(b, vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!(apply(&op, &u).unwrap().values(), &[2.0, -2.0, 2.0, -2.0]);
    }

    #[test]
    fn dirichlet_pair() {
        let b = LatticeBox::interval(1, 2).unwrap();
        let op = build_operator(&b, BoundaryCondition::Dirichlet, &zero(&b)).unwrap();
        assert_eq!(op.entry(0, 0), 1.0);
        assert_eq!(op.entry(0, 1), -1.0);
        assert_eq!(op.entry(1, 1), 1.0);
        let s = op.eigenvalues(1e-12).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-11 && (s.eigenvalues[1] - 2.0).abs() < 1e-11);
    }

    #[test]
    fn short_periodic_rings_fold() {
        let b2 = LatticeBox::interval(1, 2).unwrap();
        let op = build_operator(&b2, BoundaryCondition::Periodic, &zero(&b2)).unwrap();
        assert_eq!(op.entry(0, 1), -2.0);
        let b1 = LatticeBox::interval(1, 1).unwrap();
        let op = build_operator(&b1, BoundaryCondition::Periodic, &zero(&b1)).unwrap();
        assert_eq!(op.entry(0, 0), -2.0);
        let sq = LatticeBox::from_extents(&[2, 1]).unwrap();
        let op = build_operator(&sq, BoundaryCondition::Periodic, &zero(&sq)).unwrap();
        assert_eq!(op.entry(0, 1), -2.0);
        assert_eq!(op.entry(0, 0), -2.0);
    }

    #[test]
    fn apply_neumann_constant() {
        let b = LatticeBox::interval(1, 3).unwrap();
        let op = build_operator(&b, BoundaryCondition::Neumann, &zero(&b)).unwrap();
        let u = SiteFunction::new(b.clone(), vec![1.0; 3]).unwrap();
        assert_eq!(apply(&op, &u).unwrap().values(), &[-2.0; 3]);
        assert_eq!(apply(&op, &zero(&b)).unwrap().values(), &[0.0; 3]);
    }

    #[test]
    fn apply_rejects_mismatched_box() {
        let b = LatticeBox::interval(1, 3).unwrap();
        let op = build_operator(&b, BoundaryCondition::Neumann, &zero(&b)).unwrap();
        let other = zero(&LatticeBox::interval(1, 4).unwrap());
        assert!(matches!(apply(&op, &other), Err(Error::Domain(_))));
    }

    #[test]
    fn volume_cap_is_enforced() {
        let b = LatticeBox::interval(1, 30).unwrap();
        let r = build_operator_capped(&b, BoundaryCondition::Neumann, &zero(&b), 20);
        assert!(matches!(r, Err(Error::Resource(_))));
    }

    #[test]
    fn reflection_doubles_the_box() {
        let b = LatticeBox::interval(1, 3).unwrap();
        let u = SiteFunction::new(b, vec![1.0, 2.0, 3.0]).unwrap();
        let r = reflect_extension(&u, 1).unwrap();
        assert_eq!(r.domain(), &LatticeBox::interval(1, 6).unwrap());
        assert_eq!(r.values(), &[1.0, 2.0, 3.0, 3.0, 2.0, 1.0]);
        let rr = reflect_extension(&r, 1).unwrap();
        let v = rr.values();
        for i in 0..12 {
            assert_eq!(v[i], v[11 - i]);
        }
        for i in 0..6 {
            assert_eq!(v[i], v[5 - i]);
            assert_eq!(v[i], v[i + 6]);
        }
        assert!(matches!(reflect_extension(&u, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn coo_dump_lists_sorted_entries() {
        let b = LatticeBox::interval(1, 3).unwrap();
        let op = build_operator(&b, BoundaryCondition::Neumann, &zero(&b)).unwrap();
        let text = op.coo_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert!(lines[0].starts_with("0 0 -1.0000000000000000e0"));
        assert!(lines[1].starts_with("0 1 "));
    }
}
