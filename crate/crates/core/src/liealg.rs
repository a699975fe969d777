//! Truncated closure of the Lie algebra generated by the Euler
//! characteristic fields in the graded basis `ρ⁻ⁿ·X`.
//!
//! Every bracket is fitted, at a batch of random states simultaneously,
//! against the dictionary `{ρ⁻ᵏγ+, ρ⁻ᵏγ−, ρ⁻ᵏγ0}`. A good fit with
//! state-independent coefficients is what makes the graded ansatz valid;
//! a poor one is reported as [`Error::NotClosed`]. Grades beyond the
//! truncation are flagged on the bracket, never dropped silently.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::euler::{EulerField, FieldKind, GasParameters};
use crate::fields::{self, AutoDiff, FieldRef, SmoothField};
use crate::linalg::{self, Matrix, Vec3};
use crate::sampling::StateSampler;
use crate::scalar::Real;
use crate::{Error, Result};

/// Default truncation grade.
pub const DEFAULT_MAX_GRADE: usize = 6;
/// Relative fit residual above which a bracket is not in the graded ansatz.
pub const FIT_TOL: f64 = 1e-7;
/// Coefficients below this are structural zeros.
pub const ZERO_TOL: f64 = 1e-8;

/// `ρ⁻ⁿ·base`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradedElement {
    pub grade: usize,
    pub base: FieldKind,
}

impl GradedElement {
    pub fn new(grade: usize, base: FieldKind) -> Self {
        Self { grade, base }
    }

    /// Coordinates of the base in the dictionary frame `(γ+, γ−, γ0)`.
    pub fn direction(&self) -> [f64; 3] {
        direction(self.base)
    }

    /// The realized vector field.
    pub fn field(&self, kappa: f64) -> FieldRef<f64> {
        Arc::new(AutoDiff(GradedField { grade: self.grade, base: EulerField { kind: self.base, kappa } }))
    }
}

impl fmt::Display for GradedElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = match self.base {
            FieldKind::GammaPlus => "γ+",
            FieldKind::GammaMinus => "γ−",
            FieldKind::GammaZero => "γ0",
            FieldKind::W1 => "w1",
            FieldKind::W2 => "w2",
        };
        match self.grade {
            0 => write!(f, "{base}"),
            n => write!(f, "ρ^-{n}·{base}"),
        }
    }
}

fn direction(kind: FieldKind) -> [f64; 3] {
    match kind {
        FieldKind::GammaPlus => [1.0, 0.0, 0.0],
        FieldKind::GammaMinus => [0.0, 1.0, 0.0],
        FieldKind::GammaZero => [0.0, 0.0, 1.0],
        FieldKind::W1 => [1.0, 1.0, 0.0],
        FieldKind::W2 => [1.0, -1.0, 0.0],
    }
}

/// Order in which bases are tried when a bracket needs a new element.
const CATALOG: [FieldKind; 5] = [FieldKind::GammaPlus, FieldKind::GammaMinus, FieldKind::GammaZero, FieldKind::W2, FieldKind::W1];

const DICTIONARY: [FieldKind; 3] = [FieldKind::GammaPlus, FieldKind::GammaMinus, FieldKind::GammaZero];

#[derive(Clone, Debug)]
struct GradedField {
    grade: usize,
    base: EulerField,
}

impl SmoothField for GradedField {
    fn label(&self) -> String {
        GradedElement::new(self.grade, self.base.kind).to_string()
    }
    fn eval<S: Real>(&self, v: &Vec3<S>) -> Vec3<S> {
        let w = v[0].powi(-(self.grade as i32));
        linalg::scale(w, &self.base.eval(v))
    }
}

/// A bracket expanded by grade: `Σ_k ρ⁻ᵏ (a+ γ+ + a− γ− + a0 γ0)`.
pub type GradedVector = BTreeMap<usize, [f64; 3]>;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FitOptions {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_fit_tol")]
    pub tolerance: f64,
}

fn default_samples() -> usize {
    50
}
fn default_fit_tol() -> f64 {
    FIT_TOL
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { samples: default_samples(), seed: 0, tolerance: FIT_TOL }
    }
}

/// Evaluates and fits brackets on a fixed batch of states.
struct Fitter {
    kappa: f64,
    states: Vec<Vec3<f64>>,
    dictionary: Vec<[Vec3<f64>; 3]>,
    tolerance: f64,
}

impl Fitter {
    fn new(g: &GasParameters<f64>, options: &FitOptions) -> Result<Self> {
        g.validate()?;
        if options.samples < 4 {
            return Err(Error::InvalidParameter("at least 4 sample states are needed".into()));
        }
        let states: Vec<Vec3<f64>> = StateSampler::new(options.seed).states(options.samples).iter().map(|s| s.to_array()).collect();
        let dictionary = states.iter().map(|v| DICTIONARY.map(|k| EulerField { kind: k, kappa: g.kappa }.eval(v))).collect();
        Ok(Self { kappa: g.kappa, states, dictionary, tolerance: options.tolerance })
    }

    /// Fits `[x, y]` over the grade window `max(0, m+n−1) ..= m+n+2`.
    fn fit(&self, x: &GradedElement, y: &GradedElement) -> Result<(GradedVector, f64)> {
        let bracket = fields::lie_bracket(&x.field(self.kappa), &y.field(self.kappa));
        let total = x.grade + y.grade;
        let grades: Vec<usize> = (total.saturating_sub(1)..=total + 2).collect();
        let cols = 3 * grades.len();
        let rows = 3 * self.states.len();
        let mut a = Matrix::zeros(rows, cols);
        let mut b = vec![0.0; rows];
        for (s, v) in self.states.iter().enumerate() {
            let value = bracket.value(v);
            let columns: Vec<Vec3<f64>> = grades
                .iter()
                .flat_map(|&k| {
                    let w = v[0].powi(-(k as i32));
                    self.dictionary[s].iter().map(move |d| linalg::scale(w, d))
                })
                .collect();
            // each state weighs equally
            let row_scale = 1.0 / columns.iter().map(linalg::norm).fold(0.0, f64::max);
            for r in 0..3 {
                b[3 * s + r] = value[r] * row_scale;
                for (c, col) in columns.iter().enumerate() {
                    a.set(3 * s + r, c, col[r] * row_scale);
                }
            }
        }
        let norms: Vec<f64> = (0..cols).map(|c| a.col(c).iter().map(|e| e * e).sum::<f64>().sqrt()).collect();
        for (c, n) in norms.iter().enumerate() {
            for r in 0..rows {
                a.set(r, c, a.get(r, c) / n);
            }
        }
        let b_norm = b.iter().map(|e| e * e).sum::<f64>().sqrt();
        let scale = (0..cols).map(|c| a.col(c).iter().map(|e| e * e).sum::<f64>().sqrt()).fold(0.0, f64::max);
        if b_norm <= 1e-13 * scale * (rows as f64).sqrt() {
            return Ok((GradedVector::new(), 0.0));
        }
        let ls = linalg::least_squares(&a, &b, 1e-12);
        let relative = ls.residual / b_norm;
        if relative > self.tolerance {
            return Err(Error::NotClosed { detail: format!("[{x}, {y}]"), residual: relative });
        }
        let mut out = GradedVector::new();
        for (gi, &k) in grades.iter().enumerate() {
            let coeffs: [f64; 3] = std::array::from_fn(|d| ls.solution[3 * gi + d] / norms[3 * gi + d]);
            let coeffs = coeffs.map(|c| if c.abs() < ZERO_TOL { 0.0 } else { c });
            if coeffs.iter().any(|c| *c != 0.0) {
                out.insert(k, coeffs);
            }
        }
        Ok((out, relative))
    }
}

/// Coordinates of `target` in the span of `dirs`, if it lies there.
fn solve_in_span(dirs: &[[f64; 3]], target: &[f64; 3]) -> Option<Vec<f64>> {
    if dirs.is_empty() {
        return target.iter().all(|t| t.abs() < ZERO_TOL).then(Vec::new);
    }
    let a = Matrix::from_vec3_columns(dirs);
    let ls = linalg::least_squares(&a, target, 1e-12);
    (ls.residual <= ZERO_TOL * linalg::norm(target).max(1.0)).then_some(ls.solution)
}

/// One bracket of the table.
#[derive(Clone, Debug, Serialize)]
pub struct BracketEntry {
    /// Coefficients over the basis (grades above the truncation removed).
    pub coefficients: Vec<f64>,
    /// Grades above the truncation that the bracket reaches.
    pub truncated: Vec<usize>,
    pub residual: f64,
    #[serde(skip)]
    pub graded: GradedVector,
}

impl BracketEntry {
    pub fn is_truncated(&self) -> bool {
        !self.truncated.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureTable {
    pub basis: Vec<GradedElement>,
    /// `(i, j) ↦ [e_i, e_j]` for every ordered pair.
    pub brackets: BTreeMap<(usize, usize), BracketEntry>,
    pub max_residual: f64,
    pub truncation: usize,
    pub seed_len: usize,
    pub kappa: f64,
}

impl StructureTable {
    pub fn index_of(&self, e: &GradedElement) -> Option<usize> {
        self.basis.iter().position(|b| b == e)
    }

    pub fn bracket(&self, i: usize, j: usize) -> &BracketEntry {
        &self.brackets[&(i, j)]
    }

    /// Elements added to the seed by the closure.
    pub fn new_elements(&self) -> &[GradedElement] {
        &self.basis[self.seed_len..]
    }

    /// Largest `|c_ij + c_ji|` over all pairs.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.basis.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (self.bracket(i, j), self.bracket(j, i));
                for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
                    worst = worst.max((x + y).abs());
                }
            }
        }
        worst
    }

    /// Largest Jacobi defect over triples whose nested brackets avoid
    /// truncation, and over those that do not.
    pub fn jacobi_defect(&self) -> JacobiReport {
        let n = self.basis.len();
        let mut report = JacobiReport::default();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let (value, flagged) = self.jacobi_at(i, j, k);
                    if flagged {
                        report.truncated = report.truncated.max(value);
                        report.flagged_triples += 1;
                    } else {
                        report.clean = report.clean.max(value);
                        report.clean_triples += 1;
                    }
                }
            }
        }
        report
    }

    fn jacobi_at(&self, i: usize, j: usize, k: usize) -> (f64, bool) {
        let n = self.basis.len();
        let mut total = vec![0.0; n];
        let mut flagged = false;
        for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
            let inner = self.bracket(a, b);
            flagged |= inner.is_truncated();
            for (l, coeff) in inner.coefficients.iter().enumerate().filter(|(_, c)| **c != 0.0) {
                let outer = self.bracket(l, c);
                flagged |= outer.is_truncated();
                for (m, t) in total.iter_mut().enumerate() {
                    *t += coeff * outer.coefficients[m];
                }
            }
        }
        (total.iter().fold(0.0, |a, t| a.max(t.abs())), flagged)
    }

    /// Largest change of any coefficient when every bracket is refitted on a
    /// different batch of states.
    pub fn state_independence(&self, g: &GasParameters<f64>, options: &FitOptions) -> Result<f64> {
        let fitter = Fitter::new(g, options)?;
        let mut worst: f64 = 0.0;
        for (&(i, j), entry) in &self.brackets {
            let (refit, _) = fitter.fit(&self.basis[i], &self.basis[j])?;
            let grades: BTreeSet<usize> = refit.keys().chain(entry.graded.keys()).copied().collect();
            for k in grades {
                let a = entry.graded.get(&k).copied().unwrap_or_default();
                let b = refit.get(&k).copied().unwrap_or_default();
                for d in 0..3 {
                    worst = worst.max((a[d] - b[d]).abs());
                }
            }
        }
        Ok(worst)
    }

    /// Human-readable bracket matrix.
    pub fn to_markdown(&self) -> String {
        let names: Vec<String> = self.basis.iter().map(ToString::to_string).collect();
        let mut out = String::new();
        out.push_str(&format!("| [row, col] | {} |\n", names.join(" | ")));
        out.push_str(&format!("|---|{}\n", "---|".repeat(names.len())));
        for (i, name) in names.iter().enumerate() {
            let cells: Vec<String> = (0..names.len()).map(|j| self.format_entry(self.bracket(i, j))).collect();
            out.push_str(&format!("| {name} | {} |\n", cells.join(" | ")));
        }
        out
    }

    fn format_entry(&self, e: &BracketEntry) -> String {
        let mut terms: Vec<String> = e
            .coefficients
            .iter()
            .zip(&self.basis)
            .filter(|(c, _)| **c != 0.0)
            .map(|(c, b)| format!("{} {b}", format_coefficient(*c)))
            .collect();
        if e.is_truncated() {
            terms.push(format!("(truncated: grades {:?})", e.truncated));
        }
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    }
}

fn format_coefficient(c: f64) -> String {
    let r = (c * 1e6).round() / 1e6;
    if (c - r).abs() < 1e-9 {
        format!("{r}")
    } else {
        format!("{c:.9}")
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct JacobiReport {
    /// Largest defect over triples free of truncation.
    pub clean: f64,
    /// Largest defect over triples touching a truncated bracket.
    pub truncated: f64,
    pub clean_triples: usize,
    pub flagged_triples: usize,
}

/// Closure of `seed` under brackets up to grade `max_grade`.
pub fn close_under_bracket(seed: &[GradedElement], max_grade: usize, g: &GasParameters<f64>) -> Result<StructureTable> {
    close_under_bracket_with(seed, max_grade, g, &FitOptions::default())
}

pub fn close_under_bracket_with(
    seed: &[GradedElement],
    max_grade: usize,
    g: &GasParameters<f64>,
    options: &FitOptions,
) -> Result<StructureTable> {
    if max_grade < 1 {
        return Err(Error::InvalidParameter("truncation grade must be at least 1".into()));
    }
    if seed.is_empty() {
        return Err(Error::InvalidParameter("seed must not be empty".into()));
    }
    if let Some(e) = seed.iter().find(|e| e.grade > max_grade) {
        return Err(Error::InvalidParameter(format!("seed element {e} exceeds the truncation grade")));
    }
    let fitter = Fitter::new(g, options)?;
    let mut basis: Vec<GradedElement> = Vec::new();
    for e in seed {
        if !basis.contains(e) {
            basis.push(*e);
        }
    }
    let seed_len = basis.len();
    let mut graded: BTreeMap<(usize, usize), (GradedVector, f64)> = BTreeMap::new();
    // sweep until no pair is left unbracketed; each sweep may grow the basis
    loop {
        let n = basis.len();
        let pending: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|p| !graded.contains_key(p)).collect();
        if pending.is_empty() {
            break;
        }
        for (i, j) in pending {
            let fit = if i == j { (GradedVector::new(), 0.0) } else { fitter.fit(&basis[i], &basis[j])? };
            if i < j {
                for (&k, a) in fit.0.iter().filter(|(k, _)| **k <= max_grade) {
                    extend_grade(&mut basis, k, a);
                }
            }
            graded.insert((i, j), fit);
        }
    }
    let mut brackets = BTreeMap::new();
    let mut max_residual: f64 = 0.0;
    for ((i, j), (vector, residual)) in graded {
        max_residual = max_residual.max(residual);
        brackets.insert((i, j), express(&basis, &vector, max_grade, residual)?);
    }
    Ok(StructureTable { basis, brackets, max_residual, truncation: max_grade, seed_len, kappa: g.kappa })
}

/// Adds catalog elements of grade `k` until `a` lies in their span.
fn extend_grade(basis: &mut Vec<GradedElement>, k: usize, a: &[f64; 3]) {
    loop {
        let dirs: Vec<[f64; 3]> = basis.iter().filter(|e| e.grade == k).map(GradedElement::direction).collect();
        if solve_in_span(&dirs, a).is_some() {
            return;
        }
        let candidates: Vec<GradedElement> = CATALOG.iter().map(|&b| GradedElement::new(k, b)).filter(|e| !basis.contains(e)).collect();
        let independent = |e: &GradedElement| {
            let mut with = dirs.clone();
            with.push(e.direction());
            Matrix::from_vec3_columns(&with).rank(1e-10) == with.len()
        };
        let pick = candidates
            .iter()
            .find(|e| {
                let mut with = dirs.clone();
                with.push(e.direction());
                solve_in_span(&with, a).is_some()
            })
            .or_else(|| candidates.iter().find(|e| independent(e)));
        match pick {
            Some(e) => basis.push(*e),
            None => return,
        }
    }
}

fn express(basis: &[GradedElement], vector: &GradedVector, max_grade: usize, residual: f64) -> Result<BracketEntry> {
    let mut coefficients = vec![0.0; basis.len()];
    let mut truncated = Vec::new();
    for (&k, a) in vector {
        if k > max_grade {
            truncated.push(k);
            continue;
        }
        let members: Vec<usize> = (0..basis.len()).filter(|&i| basis[i].grade == k).collect();
        let dirs: Vec<[f64; 3]> = members.iter().map(|&i| basis[i].direction()).collect();
        let coords = solve_in_span(&dirs, a)
            .ok_or_else(|| Error::NotClosed { detail: format!("grade {k} component outside the basis"), residual })?;
        for (&i, c) in members.iter().zip(coords) {
            coefficients[i] = if c.abs() < ZERO_TOL { 0.0 } else { c };
        }
    }
    Ok(BracketEntry { coefficients, truncated, residual, graded: vector.clone() })
}

// ---------------------------------------------------------------------------
// Ideals and quotients

#[derive(Clone, Debug, Serialize)]
pub struct IdealReport {
    pub abelian: bool,
    pub ideal: bool,
    /// Largest internal bracket coefficient.
    pub max_internal: f64,
    /// Largest coefficient outside the candidate span among clean brackets.
    pub max_leak: f64,
    /// Pairs `(candidate, basis)` whose bracket leaves the candidate span.
    pub violations: Vec<(GradedElement, GradedElement)>,
    /// Pairs whose bracket reaches past the truncation grade.
    pub truncated: Vec<(GradedElement, GradedElement)>,
}

/// Whether `candidate` spans an Abelian ideal of the table.
pub fn ideal_check(table: &StructureTable, candidate: &[GradedElement]) -> Result<IdealReport> {
    let members: Vec<usize> = candidate
        .iter()
        .map(|e| table.index_of(e).ok_or_else(|| Error::InvalidParameter(format!("{e} is not in the basis"))))
        .collect::<Result<_>>()?;
    let inside: BTreeSet<usize> = members.iter().copied().collect();
    let mut report = IdealReport { abelian: true, ideal: true, max_internal: 0.0, max_leak: 0.0, violations: vec![], truncated: vec![] };
    for &i in &members {
        for j in 0..table.basis.len() {
            let entry = table.bracket(i, j);
            if inside.contains(&j) {
                let m = entry.coefficients.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
                report.max_internal = report.max_internal.max(m);
                if m > 1e-8 || entry.is_truncated() {
                    report.abelian = false;
                }
            }
            let leak = entry.coefficients.iter().enumerate().filter(|(l, _)| !inside.contains(l)).fold(0.0_f64, |a, (_, c)| a.max(c.abs()));
            report.max_leak = report.max_leak.max(leak);
            if leak > 1e-8 {
                report.ideal = false;
                report.violations.push((table.basis[i], table.basis[j]));
            }
            if entry.is_truncated() {
                report.truncated.push((table.basis[i], table.basis[j]));
            }
        }
    }
    Ok(report)
}

/// Isomorphism invariants of a finite-dimensional Lie algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Fingerprint {
    pub dimension: usize,
    pub derived_dimension: usize,
    pub center_dimension: usize,
}

/// Structure constants `c[i][j][k]` of `[e_i, e_j] = Σ_k c_ijk e_k`.
pub type StructureConstants = Vec<Vec<Vec<f64>>>;

/// Derived-algebra and center dimensions of a table of structure constants.
pub fn fingerprint(constants: &StructureConstants) -> Fingerprint {
    let n = constants.len();
    if n == 0 {
        return Fingerprint { dimension: 0, derived_dimension: 0, center_dimension: 0 };
    }
    let brackets: Vec<Vec<f64>> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| constants[i][j].clone()).collect();
    let derived = if brackets.is_empty() { 0 } else { Matrix::from_columns(n, &brackets).rank(1e-8) };
    // x ↦ ([x, e_1], …, [x, e_n]) as an (n·n) × n matrix
    let adjoint: Vec<Vec<f64>> = (0..n).map(|i| (0..n).flat_map(|j| constants[i][j].clone()).collect()).collect();
    let rank = Matrix::from_columns(n * n, &adjoint).rank(1e-8);
    Fingerprint { dimension: n, derived_dimension: derived, center_dimension: n - rank }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuotientReport {
    pub quotient_basis: Vec<GradedElement>,
    pub constants: StructureConstants,
    pub fingerprint: Fingerprint,
}

/// Fingerprint of the algebra modulo `ideal`.
pub fn quotient_fingerprint(table: &StructureTable, ideal: &[GradedElement]) -> Result<QuotientReport> {
    let check = ideal_check(table, ideal)?;
    if !check.ideal {
        return Err(Error::InvalidParameter("candidate is not an ideal of the table".into()));
    }
    let inside: BTreeSet<usize> = ideal.iter().filter_map(|e| table.index_of(e)).collect();
    let rest: Vec<usize> = (0..table.basis.len()).filter(|i| !inside.contains(i)).collect();
    let mut constants = vec![vec![vec![0.0; rest.len()]; rest.len()]; rest.len()];
    for (a, &i) in rest.iter().enumerate() {
        for (b, &j) in rest.iter().enumerate() {
            let entry = table.bracket(i, j);
            if entry.is_truncated() {
                return Err(Error::NotClosed { detail: "quotient bracket reaches past the truncation".into(), residual: entry.residual });
            }
            for (c, &k) in rest.iter().enumerate() {
                constants[a][b][c] = entry.coefficients[k];
            }
        }
    }
    Ok(QuotientReport { quotient_basis: rest.iter().map(|&i| table.basis[i]).collect(), fingerprint: fingerprint(&constants), constants })
}

/// `c` in `[γ0, ρ⁻ⁿw2] = c·ρ⁻⁽ⁿ⁺¹⁾w2`, read off the table.
pub fn shift_coefficient(table: &StructureTable, n: usize) -> Option<f64> {
    let i = table.index_of(&GradedElement::new(0, FieldKind::GammaZero))?;
    let j = table.index_of(&GradedElement::new(n, FieldKind::W2))?;
    let k = table.index_of(&GradedElement::new(n + 1, FieldKind::W2))?;
    let entry = table.bracket(i, j);
    (!entry.is_truncated()).then(|| entry.coefficients[k])
}

// ---------------------------------------------------------------------------
// Witt pattern

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Pattern {
    /// Fewer than two graded elements.
    Trivial,
    Abelian,
    /// `[L_m, L_n] = c(m − n)L_{m+n}` within the fit residual.
    Witt {
        c: f64,
    },
    None,
}

#[derive(Clone, Debug, Serialize)]
pub struct PatternReport {
    pub pattern: Pattern,
    pub c: f64,
    /// Largest fit residual per target grade `m + n`.
    pub residual_by_grade: BTreeMap<usize, f64>,
    pub truncated_pairs: Vec<(usize, usize)>,
}

/// Fits `[L_m, L_n] = c(m − n)L_{m+n}` with `L_m` the seed element of grade `m`.
pub fn witt_pattern_scan(seed: &[GradedElement], max_grade: usize, g: &GasParameters<f64>) -> Result<PatternReport> {
    let table = close_under_bracket(seed, max_grade, g)?;
    let mut by_grade: BTreeMap<usize, usize> = BTreeMap::new();
    for e in seed {
        if by_grade.insert(e.grade, table.index_of(e).expect("seed is in the basis")).is_some() {
            return Err(Error::InvalidParameter("Witt scan needs one seed element per grade".into()));
        }
    }
    let mut report = PatternReport { pattern: Pattern::Trivial, c: 0.0, residual_by_grade: BTreeMap::new(), truncated_pairs: vec![] };
    if by_grade.len() < 2 {
        return Ok(report);
    }
    // pairs m < n and the coefficient vector of the expected target
    let mut samples = Vec::new();
    for (&m, &i) in &by_grade {
        for (&n, &j) in by_grade.range(m + 1..) {
            let entry = table.bracket(i, j);
            if entry.is_truncated() || m + n > max_grade {
                report.truncated_pairs.push((m, n));
                continue;
            }
            let mut target = vec![0.0; table.basis.len()];
            let Some(&k) = by_grade.get(&(m + n)).or(table.index_of(&GradedElement::new(m + n, table.basis[i].base)).as_ref()) else {
                samples.push((m + n, entry.coefficients.clone(), None));
                continue;
            };
            target[k] = (m as f64) - (n as f64);
            samples.push((m + n, entry.coefficients.clone(), Some(target)));
        }
    }
    let all_zero = samples.iter().all(|(_, b, _)| b.iter().all(|c| *c == 0.0));
    if all_zero {
        report.pattern = Pattern::Abelian;
        return Ok(report);
    }
    let (num, den) = samples.iter().filter_map(|(_, b, t)| t.as_ref().map(|t| (b, t))).fold((0.0, 0.0), |(n, d), (b, t)| {
        (n + b.iter().zip(t).map(|(x, y)| x * y).sum::<f64>(), d + t.iter().map(|y| y * y).sum::<f64>())
    });
    let c = if den > 0.0 { num / den } else { 0.0 };
    let mut worst: f64 = 0.0;
    for (grade, b, t) in &samples {
        let r = match t {
            Some(t) => b.iter().zip(t).map(|(x, y)| (x - c * y).powi(2)).sum::<f64>().sqrt(),
            None => b.iter().map(|x| x * x).sum::<f64>().sqrt(),
        };
        let slot = report.residual_by_grade.entry(*grade).or_insert(0.0);
        *slot = slot.max(r);
        worst = worst.max(r);
    }
    report.c = c;
    report.pattern = if worst <= 1e-7 * c.abs().max(1.0) && c != 0.0 { Pattern::Witt { c } } else { Pattern::None };
    Ok(report)
}

/// The seed `{γ+, γ−, γ0}`.
pub fn characteristic_seed() -> Vec<GradedElement> {
    [FieldKind::GammaPlus, FieldKind::GammaMinus, FieldKind::GammaZero].map(|b| GradedElement::new(0, b)).to_vec()
}

/// `{ρ⁻ⁿ·base : from ≤ n ≤ to}`.
pub fn graded_family(base: FieldKind, from: usize, to: usize) -> Vec<GradedElement> {
    (from..=to).map(|n| GradedElement::new(n, base)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gas(kappa: f64) -> GasParameters<f64> {
        GasParameters::with_kappa(kappa)
    }

    #[test]
    fn realized_field_matches_scaled_base() {
        use crate::fields::{PowerLaw, ScalarRef};
        let e = GradedElement::new(3, FieldKind::W2);
        let h: ScalarRef<f64> = Arc::new(PowerLaw::inverse_density_power(3));
        let base: FieldRef<f64> = Arc::new(EulerField { kind: FieldKind::W2, kappa: 1.4 });
        let scaled = fields::scale_field(&h, &base);
        for s in StateSampler::new(3).states::<f64>(20) {
            let v = s.to_array();
            let (a, b) = (e.field(1.4).value(&v), scaled.value(&v));
            assert!(linalg::norm(&linalg::sub(&a, &b)) <= 1e-12 * linalg::norm(&b));
        }
    }

    #[test]
    fn closure_of_characteristic_seed() {
        let t = close_under_bracket(&characteristic_seed(), 4, &gas(2.0)).unwrap();
        let expected: Vec<GradedElement> = graded_family(FieldKind::W2, 1, 4);
        assert_eq!(t.new_elements(), expected.as_slice());
        // [γ+, γ0] = (1/4)ρ⁻¹w2 − γ0
        let e = t.bracket(0, 2);
        let w = t.index_of(&GradedElement::new(1, FieldKind::W2)).unwrap();
        assert!((e.coefficients[w] - 0.25).abs() < 1e-9);
        assert!((e.coefficients[2] + 1.0).abs() < 1e-9);
        // graded form: (1/4, −1/4, 0) at grade 1
        let g1 = e.graded[&1];
        assert!((g1[0] - 0.25).abs() < 1e-9 && (g1[1] + 0.25).abs() < 1e-9 && g1[2].abs() < 1e-9);
    }

    #[test]
    fn single_gamma_zero_closes_trivially() {
        let t = close_under_bracket(&[GradedElement::new(0, FieldKind::GammaZero)], 3, &gas(1.4)).unwrap();
        assert_eq!(t.basis.len(), 1);
        assert!(t.bracket(0, 0).coefficients.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn shift_coefficient_at_grade_one() {
        for kappa in [1.4, 2.0, 3.0] {
            let t = close_under_bracket(&characteristic_seed(), 4, &gas(kappa)).unwrap();
            assert!((shift_coefficient(&t, 1).unwrap() + 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn ideal_and_full_basis() {
        let t = close_under_bracket(&characteristic_seed(), 4, &gas(2.0)).unwrap();
        let ideal = ideal_check(&t, &graded_family(FieldKind::W2, 1, 4)).unwrap();
        assert!(ideal.abelian && ideal.ideal);
        assert_eq!(ideal.max_internal, 0.0);
        let full = ideal_check(&t, &t.basis.clone()).unwrap();
        assert!(full.ideal && !full.abelian);
    }

    #[test]
    fn textbook_fingerprints() {
        let zero = vec![vec![vec![0.0; 3]; 3]; 3];
        assert_eq!(fingerprint(&zero), Fingerprint { dimension: 3, derived_dimension: 0, center_dimension: 3 });
        // [X, Y] = Y
        let affine = vec![vec![vec![0.0, 0.0], vec![0.0, 1.0]], vec![vec![0.0, -1.0], vec![0.0, 0.0]]];
        assert_eq!(fingerprint(&affine), Fingerprint { dimension: 2, derived_dimension: 1, center_dimension: 0 });
    }

    #[test]
    fn witt_scan_on_gamma_plus_family() {
        let r = witt_pattern_scan(&graded_family(FieldKind::GammaPlus, 0, 3), 6, &gas(1.4)).unwrap();
        match r.pattern {
            Pattern::Witt { c } => assert!((c - 1.0).abs() < 1e-9),
            other => panic!("expected a Witt pattern, got {other:?}"),
        }
        let single = witt_pattern_scan(&[GradedElement::new(0, FieldKind::GammaPlus)], 3, &gas(1.4)).unwrap();
        assert_eq!(single.pattern, Pattern::Trivial);
        let abelian = witt_pattern_scan(&graded_family(FieldKind::W2, 0, 3), 6, &gas(1.4)).unwrap();
        assert_eq!(abelian.pattern, Pattern::Abelian);
    }

    #[test]
    fn markdown_lists_every_basis_element() {
        let t = close_under_bracket(&characteristic_seed(), 2, &gas(2.0)).unwrap();
        let md = t.to_markdown();
        assert_eq!(md.lines().count(), t.basis.len() + 2);
        assert!(md.contains("ρ^-2·w2"));
    }
}
