//! Pseudo-observations, the empirical copula and rank statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;

/// An n × d table of observations, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSample {
    columns: Vec<Vec<f64>>,
}

impl RawSample {
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.len() < 2 {
            return Err(Error::Domain(format!("need d >= 2 columns, got {}", columns.len())));
        }
        let n = columns[0].len();
        if n < 2 {
            return Err(Error::Domain(format!("need n >= 2 observations, got {n}")));
        }
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::Domain("columns have different lengths".into()));
        }
        if columns.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Domain("sample contains missing or non-finite values".into()));
        }
        Ok(RawSample { columns })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Domain("rows have different lengths".into()));
        }
        let columns = (0..d).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Self::from_columns(columns)
    }

    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    pub fn d(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }
}

/// Pseudo-observations Û_i, stored column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoSample {
    columns: Vec<Vec<f64>>,
    ties_present: bool,
}

impl PseudoSample {
    /// Wrap columns that already lie in the unit cube, such as sampled uniforms.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.len() < 2 {
            return Err(Error::Domain(format!("need d >= 2 columns, got {}", columns.len())));
        }
        let n = columns[0].len();
        if n == 0 || columns.iter().any(|c| c.len() != n) {
            return Err(Error::Domain("columns must be non-empty and of equal length".into()));
        }
        if columns.iter().flatten().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Domain("pseudo-observations must lie in [0, 1]".into()));
        }
        let ties_present = columns.iter().any(|c| has_duplicates(c));
        Ok(PseudoSample { columns, ties_present })
    }

    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    pub fn d(&self) -> usize {
        self.columns.len()
    }

    pub fn ties_present(&self) -> bool {
        self.ties_present
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Multiply every entry by n/(n+1), moving the largest value off 1.
    pub fn rescaled(&self) -> PseudoSample {
        let n = self.n() as f64;
        let factor = n / (n + 1.0);
        PseudoSample {
            columns: self.columns.iter().map(|c| c.iter().map(|x| x * factor).collect()).collect(),
            ties_present: self.ties_present,
        }
    }

    /// Swap two columns.
    pub fn swap_columns(&mut self, a: usize, b: usize) {
        self.columns.swap(a, b);
    }
}

fn has_duplicates(column: &[f64]) -> bool {
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Marginal empirical df values F_jn(X_ji) = #{m : X_jm ≤ X_ji}/n.
///
/// Tied observations all receive the largest rank of their group.
pub fn pseudo_observations(sample: &RawSample) -> PseudoSample {
    let n = sample.n();
    let nf = n as f64;
    let mut ties_present = false;
    let columns = sample
        .columns
        .iter()
        .map(|col| {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let mut out = vec![0.0; n];
            let mut start = 0;
            while start < n {
                let mut end = start + 1;
                while end < n && col[order[end]] == col[order[start]] {
                    end += 1;
                }
                if end - start > 1 {
                    ties_present = true;
                }
                let value = end as f64 / nf;
                for &idx in &order[start..end] {
                    out[idx] = value;
                }
                start = end;
            }
            out
        })
        .collect();
    PseudoSample { columns, ties_present }
}

/// Empirical copula C_n(u) = n⁻¹ #{i : Û_i ≤ u componentwise}.
pub fn empirical_copula_at(point: &[f64], pseudo: &PseudoSample) -> Result<f64> {
    if point.len() != pseudo.d() {
        return Err(Error::Domain(format!(
            "point has {} coordinates, sample has dimension {}",
            point.len(),
            pseudo.d()
        )));
    }
    if let Some(bad) = point.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Domain(format!("coordinate {bad} outside [0, 1]")));
    }
    let count = (0..pseudo.n())
        .filter(|&i| pseudo.columns.iter().zip(point).all(|(c, &u)| c[i] <= u))
        .count();
    Ok(count as f64 / pseudo.n() as f64)
}

/// Copula moment estimates M̂_1, …, M̂_r.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub values: Vec<f64>,
}

impl MomentVector {
    pub fn new(values: Vec<f64>) -> Self {
        MomentVector { values }
    }

    pub fn r(&self) -> usize {
        self.values.len()
    }

    /// M̂_k, 1-based.
    pub fn get(&self, k: usize) -> f64 {
        self.values[k - 1]
    }
}

/// How C_n(Û_i) is evaluated when estimating copula moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentConvention {
    /// C_n(Û_i) = n⁻¹ #{m : Û_m ≤ Û_i}, counting observation i itself.
    #[default]
    Deheuvels,
    /// n⁻¹ #{m ≠ i : Û_m ≤ Û_i}; removes the O(1/n) self-count.
    OffDiagonal,
}

impl std::str::FromStr for MomentConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deheuvels" => Ok(MomentConvention::Deheuvels),
            "off-diagonal" => Ok(MomentConvention::OffDiagonal),
            other => Err(Error::Config(format!(
                "unknown moment convention '{other}' (expected deheuvels or off-diagonal)"
            ))),
        }
    }
}

/// For each i, the number of m (including i) with Û_m ≤ Û_i componentwise.
pub fn dominance_counts(pseudo: &PseudoSample, exec: Execution) -> Vec<u32> {
    let n = pseudo.n();
    if pseudo.d() == 2 {
        let u = pseudo.column(0);
        let v = pseudo.column(1);
        exec.map_indexed(n, |i| {
            let (ui, vi) = (u[i], v[i]);
            u.iter().zip(v).map(|(&a, &b)| u32::from((a <= ui) & (b <= vi))).sum()
        })
    } else {
        exec.map_indexed(n, |i| {
            (0..n)
                .filter(|&m| pseudo.columns.iter().all(|c| c[m] <= c[i]))
                .count() as u32
        })
    }
}

/// M̂_k = n⁻¹ Σ_i C_n(Û_i)^k for k = 1..r, with the Deheuvels convention.
pub fn empirical_moments(pseudo: &PseudoSample, r: usize) -> MomentVector {
    empirical_moments_with(pseudo, r, MomentConvention::Deheuvels, Execution::Sequential)
}

pub fn empirical_moments_with(
    pseudo: &PseudoSample,
    r: usize,
    convention: MomentConvention,
    exec: Execution,
) -> MomentVector {
    let counts = dominance_counts(pseudo, exec);
    moments_from_counts(&counts, r, convention)
}

/// Moments from precomputed dominance counts, summed in index order.
pub fn moments_from_counts(counts: &[u32], r: usize, convention: MomentConvention) -> MomentVector {
    let n = counts.len() as f64;
    let offset = match convention {
        MomentConvention::Deheuvels => 0,
        MomentConvention::OffDiagonal => 1,
    };
    let mut sums = vec![0.0; r];
    for &c in counts {
        let value = f64::from(c - offset) / n;
        let mut power = 1.0;
        for s in sums.iter_mut() {
            power *= value;
            *s += power;
        }
    }
    MomentVector { values: sums.into_iter().map(|s| s / n).collect() }
}

/// Sample Kendall τ-a, (concordant − discordant)/(n(n−1)/2), in O(n log n).
pub fn empirical_tau(pseudo: &PseudoSample) -> Result<f64> {
    if pseudo.d() != 2 {
        return Err(Error::Domain(format!("Kendall tau needs d = 2, got {}", pseudo.d())));
    }
    kendall_tau_a(pseudo.column(0), pseudo.column(1))
}

/// Kendall τ-a by Knight's merge-sort algorithm; tied pairs contribute zero.
pub fn kendall_tau_a(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::Domain("Kendall tau needs two columns of equal length >= 2".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let pairs = |t: u64| t * (t.saturating_sub(1)) / 2;
    let mut tied_x = 0u64;
    let mut tied_xy = 0u64;
    let mut run_x = 1u64;
    let mut run_xy = 1u64;
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x[a] == x[b] {
            run_x += 1;
            if y[a] == y[b] {
                run_xy += 1;
            } else {
                tied_xy += pairs(run_xy);
                run_xy = 1;
            }
        } else {
            tied_x += pairs(run_x);
            tied_xy += pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    tied_x += pairs(run_x);
    tied_xy += pairs(run_xy);

    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let discordant = count_inversions(&mut ys);

    let mut tied_y = 0u64;
    let mut run_y = 1u64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run_y += 1;
        } else {
            tied_y += pairs(run_y);
            run_y = 1;
        }
    }
    tied_y += pairs(run_y);

    let total = pairs(n as u64);
    let untied = total + tied_xy - tied_x - tied_y;
    if untied == 0 {
        return Err(Error::Degenerate("all pairs are tied".into()));
    }
    let concordant_minus_discordant = untied as f64 - 2.0 * discordant as f64;
    Ok(concordant_minus_discordant / total as f64)
}

/// Sorts `values` ascending and returns the number of strict inversions.
fn count_inversions(values: &mut [f64]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mut buffer = values.to_vec();
    let mut swaps = 0u64;
    let mut width = 1;
    // Bottom-up merge sort, alternating between the two buffers.
    let mut src_is_values = true;
    while width < n {
        {
            let (src, dst): (&[f64], &mut [f64]) = if src_is_values {
                (&*values, &mut buffer[..])
            } else {
                (&buffer[..], &mut *values)
            };
            let mut start = 0;
            while start < n {
                let mid = (start + width).min(n);
                let end = (start + 2 * width).min(n);
                let (mut i, mut j, mut k) = (start, mid, start);
                while i < mid && j < end {
                    if src[j] < src[i] {
                        swaps += (mid - i) as u64;
                        dst[k] = src[j];
                        j += 1;
                    } else {
                        dst[k] = src[i];
                        i += 1;
                    }
                    k += 1;
                }
                dst[k..k + (mid - i)].copy_from_slice(&src[i..mid]);
                k += mid - i;
                dst[k..k + (end - j)].copy_from_slice(&src[j..end]);
                start = end;
            }
        }
        src_is_values = !src_is_values;
        width *= 2;
    }
    if !src_is_values {
        values.copy_from_slice(&buffer);
    }
    swaps
}

/// Sample Spearman ρ: Pearson correlation of the pseudo-observation columns.
pub fn empirical_rho(pseudo: &PseudoSample) -> Result<f64> {
    if pseudo.d() != 2 {
        return Err(Error::Domain(format!("Spearman rho needs d = 2, got {}", pseudo.d())));
    }
    pearson(pseudo.column(0), pseudo.column(1))
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("a column is constant".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
