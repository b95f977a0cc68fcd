use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rayon::prelude::*;

use super::optimize::{box_pattern_search, golden_section_max, maximize_concave, FEASIBILITY_TOL};
use super::{backward_monotone, check_grid, Coupling, CurvePoint, RegionCurve, RegionPoint, Witness};
use crate::channel::info::{bits_to_nats, nats_to_bits};
use crate::channel::{steering_vector, CMatrix, CVector, MimoChannelModel};
use crate::error::{Error, Result};

const PSD_TOL: f64 = 1e-9;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

fn hermitian_eigen(m: &CMatrix) -> SymmetricEigen<Complex64, nalgebra::Dyn> {
    let sym = (m + m.adjoint()).map(|v| v * 0.5);
    SymmetricEigen::new(sym)
}

/// Checks that Σ is Hermitian PSD of size M with trace ≤ P.
pub fn check_covariance(sigma: &CMatrix, antennas: usize, power: f64) -> Result<()> {
    if sigma.nrows() != antennas || sigma.ncols() != antennas {
        return Err(Error::InvalidConfig(format!(
            "covariance is {}x{}, expected {antennas}x{antennas}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let scale = 1.0 + sigma.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if (sigma - sigma.adjoint()).iter().any(|v| v.norm() > PSD_TOL * scale) {
        return Err(Error::NotPsd(f64::NAN));
    }
    let min_eig = hermitian_eigen(sigma).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -PSD_TOL * scale {
        return Err(Error::NotPsd(min_eig));
    }
    let trace = trace_re(sigma);
    if trace > power * (1.0 + PSD_TOL) {
        return Err(Error::PowerViolation { trace, power });
    }
    Ok(())
}

/// ½ log₂ det(I + H Σ Hᴴ).
pub fn comm_rate_bits(h: &CMatrix, sigma: &CMatrix) -> f64 {
    let n = h.nrows();
    let m = CMatrix::identity(n, n) + h * sigma * h.adjoint();
    let logdet = match m.clone().cholesky() {
        Some(ch) => {
            let l = ch.l();
            2.0 * (0..n).map(|i| l[(i, i)].re.ln()).sum::<f64>()
        }
        None => hermitian_eigen(&m).eigenvalues.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).sum(),
    };
    0.5 * nats_to_bits(logdet).max(0.0)
}

/// ½ tr(Γ Σ) in nats.
pub fn sensing_delta_direct(gamma: &CMatrix, sigma: &CMatrix) -> f64 {
    0.5 * trace_re(&(gamma * sigma))
}

/// ½ tr(Λ Σ_X̄) with Γ = U Λ Uᴴ and Σ_X̄ = Uᴴ Σ U, in nats.
pub fn sensing_delta_eigen(gamma: &CMatrix, sigma: &CMatrix) -> f64 {
    let eig = hermitian_eigen(gamma);
    let u = &eig.eigenvectors;
    let rotated = u.adjoint() * sigma * u;
    0.5 * eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &lam)| lam * rotated[(i, i)].re)
        .sum::<f64>()
}

fn state_delta_nats(model: &MimoChannelModel, s: usize, sigma: &CMatrix) -> f64 {
    sensing_delta_direct(&model.gram(s), sigma).max(0.0)
}

/// Rate min_s ½ log₂ det(I + H̃_s Σ_s H̃_sᴴ) and Δ_s = ½ tr(Γ_s Σ_s).
pub fn mimo_point(model: &MimoChannelModel, covariances: &[CMatrix]) -> Result<RegionPoint> {
    let states = model.post_state_count();
    if covariances.len() != states {
        return Err(Error::InvalidConfig(format!(
            "{} covariances for {states} post-change states",
            covariances.len()
        )));
    }
    let mut rate = f64::INFINITY;
    let mut delta = Vec::with_capacity(states);
    for (i, sigma) in covariances.iter().enumerate() {
        let s = i + 1;
        check_covariance(sigma, model.tx_antennas(), model.power())?;
        rate = rate.min(comm_rate_bits(model.comm_gain(s), sigma));
        let gamma = model.gram(s);
        let direct = sensing_delta_direct(&gamma, sigma);
        debug_assert!((direct - sensing_delta_eigen(&gamma, sigma)).abs() <= 1e-9 * (1.0 + direct.abs()));
        delta.push(nats_to_bits(direct.max(0.0)));
    }
    Ok(RegionPoint {
        rate_bits: rate,
        delta_bits: delta,
        witness: Witness::Mimo(covariances.to_vec()),
    })
}

/// Water-filling over the eigenmodes of H̃ᴴH̃: returns (rate in bits, Σ).
pub fn water_filling(h: &CMatrix, power: f64) -> (f64, CMatrix) {
    let eig = hermitian_eigen(&(h.adjoint() * h));
    let m = h.ncols();
    let mut modes: Vec<(usize, f64)> = eig.eigenvalues.iter().copied().enumerate().filter(|&(_, g)| g > 1e-12).collect();
    modes.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut powers = vec![0.0; m];
    // drop the weakest mode until every remaining allocation is positive
    while !modes.is_empty() {
        let k = modes.len() as f64;
        let level = (power + modes.iter().map(|&(_, g)| 1.0 / g).sum::<f64>()) / k;
        let weakest = modes.last().expect("non-empty").1;
        if level - 1.0 / weakest > 0.0 {
            for &(i, g) in &modes {
                powers[i] = level - 1.0 / g;
            }
            break;
        }
        modes.pop();
    }
    let u = &eig.eigenvectors;
    let d = CMatrix::from_diagonal(&CVector::from_iterator(m, powers.iter().map(|&p| c(p))));
    let sigma = u * d * u.adjoint();
    let sigma = (&sigma + sigma.adjoint()).map(|v| v * 0.5);
    (comm_rate_bits(h, &sigma), sigma)
}

/// Δ = 0 capacity: water-filling per state, then the minimum rate.
pub fn mimo_capacity_delta0(model: &MimoChannelModel) -> (f64, Vec<CMatrix>) {
    let mut rate = f64::INFINITY;
    let mut covs = Vec::new();
    for s in 1..=model.post_state_count() {
        let (r, sigma) = water_filling(model.comm_gain(s), model.power());
        rate = rate.min(r);
        covs.push(sigma);
    }
    (rate, covs)
}

/// Beam with all power on the top eigenvector of Γ_s: attains max ½ tr(Γ_s Σ).
fn top_beam(gamma: &CMatrix, power: f64) -> (f64, CMatrix) {
    let eig = hermitian_eigen(gamma);
    let (i, lam) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    let v = eig.eigenvectors.column(i).into_owned();
    (0.5 * power * lam, (&v * v.adjoint()).map(|z| z * power))
}

/// Largest coupled Δ (bits) of the closed-loop MIMO scheme.
pub fn mimo_closed_loop_max_delta(model: &MimoChannelModel, coupling: &Coupling) -> Result<f64> {
    if coupling.weights().len() != model.post_state_count() {
        return Err(Error::InvalidConfig("coupling size does not match the state count".into()));
    }
    let mut max = f64::INFINITY;
    for (i, &w) in coupling.weights().iter().enumerate() {
        if w > 0.0 {
            max = max.min(top_beam(&model.gram(i + 1), model.power()).0 / w);
        }
    }
    Ok(nats_to_bits(max))
}

/// Covariance search space.
///
/// Full power is always used (rate and Δ both grow with Σ in the PSD order).
/// M = 1: Σ = P. M = 2: eigenbasis angle φ, power split t and, for complex
/// gains, an eigenvector phase ψ. M = 3: ZYZ Euler angles of a real rotation
/// and a power split on the 2-simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MimoSearch {
    pub angle_steps: usize,
    pub split_steps: usize,
    pub phase_steps: usize,
}

impl Default for MimoSearch {
    fn default() -> Self {
        Self {
            angle_steps: 48,
            split_steps: 24,
            phase_steps: 12,
        }
    }
}

struct Param {
    antennas: usize,
    complex: bool,
    power: f64,
}

impl Param {
    fn bounds(&self) -> Vec<(f64, f64)> {
        use std::f64::consts::{PI, TAU};
        match self.antennas {
            1 => vec![],
            2 if self.complex => vec![(0.0, PI), (0.0, 1.0), (0.0, TAU)],
            2 => vec![(0.0, PI), (0.0, 1.0)],
            _ => vec![(0.0, TAU), (0.0, PI), (0.0, TAU), (0.0, 1.0), (0.0, 1.0)],
        }
    }

    fn counts(&self, search: &MimoSearch) -> Vec<usize> {
        match self.antennas {
            1 => vec![],
            2 if self.complex => vec![search.angle_steps, search.split_steps, search.phase_steps],
            2 => vec![search.angle_steps, search.split_steps],
            _ => {
                let a = (search.angle_steps / 4).max(6);
                let t = (search.split_steps / 2).max(6);
                vec![a, a / 2 + 1, a, t, t]
            }
        }
    }

    fn build(&self, x: &[f64]) -> Option<CMatrix> {
        let p = self.power;
        match self.antennas {
            1 => Some(CMatrix::from_element(1, 1, c(p))),
            2 => {
                let (phi, t) = (x[0], x[1]);
                let psi = if self.complex { x[2] } else { 0.0 };
                let (sn, cs) = phi.sin_cos();
                let e = Complex64::from_polar(1.0, psi);
                let u = CMatrix::from_row_slice(2, 2, &[c(cs), -e.conj() * sn, e * sn, c(cs)]);
                let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(p * t), c(p * (1.0 - t))]));
                Some(&u * d * u.adjoint())
            }
            _ => {
                let (t1, t2) = (x[3], x[4]);
                if t1 + t2 > 1.0 + 1e-15 {
                    return None;
                }
                let t3 = (1.0 - t1 - t2).max(0.0);
                let rz = |a: f64| {
                    let (s, co) = a.sin_cos();
                    nalgebra::DMatrix::from_row_slice(3, 3, &[co, -s, 0.0, s, co, 0.0, 0.0, 0.0, 1.0])
                };
                let ry = |a: f64| {
                    let (s, co) = a.sin_cos();
                    nalgebra::DMatrix::from_row_slice(3, 3, &[co, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, co])
                };
                let r = (rz(x[0]) * ry(x[1]) * rz(x[2])).map(c);
                let d = CMatrix::from_diagonal(&CVector::from_vec(vec![c(p * t1), c(p * t2), c(p * t3)]));
                Some(&r * d * r.adjoint())
            }
        }
    }

    fn grid(&self, search: &MimoSearch) -> Vec<Vec<f64>> {
        let bounds = self.bounds();
        let counts = self.counts(search);
        let mut out = vec![Vec::new()];
        for (&(lo, hi), &n) in bounds.iter().zip(&counts) {
            let n = n.max(1);
            let mut next = Vec::with_capacity(out.len() * (n + 1));
            for prefix in &out {
                for i in 0..=n {
                    let mut v = prefix.clone();
                    v.push(lo + (hi - lo) * i as f64 / n as f64);
                    next.push(v);
                }
            }
            out = next;
        }
        out
    }

    fn steps(&self, search: &MimoSearch) -> Vec<f64> {
        self.bounds()
            .iter()
            .zip(self.counts(search))
            .map(|(&(lo, hi), n)| (hi - lo) / n.max(1) as f64)
            .collect()
    }
}

/// One covariance problem: maximize `objective(Σ)` subject to `constraint(Σ) ≥ target`.
struct Problem<'a> {
    param: Param,
    search: MimoSearch,
    eval: Box<dyn Fn(&CMatrix) -> (f64, f64) + Sync + 'a>,
    /// (params, objective, constraint) over the search grid.
    table: Vec<(Vec<f64>, f64, f64)>,
    /// Structured candidates outside the parameterization.
    candidates: Vec<(CMatrix, f64, f64)>,
}

impl<'a> Problem<'a> {
    fn new(model: &MimoChannelModel, search: MimoSearch, eval: Box<dyn Fn(&CMatrix) -> (f64, f64) + Sync + 'a>, extra: Vec<CMatrix>) -> Self {
        let param = Param {
            antennas: model.tx_antennas(),
            complex: !model.is_real(),
            power: model.power(),
        };
        let table = param
            .grid(&search)
            .into_par_iter()
            .filter_map(|x| {
                let sigma = param.build(&x)?;
                let (o, k) = eval(&sigma);
                Some((x, o, k))
            })
            .collect();
        let candidates = extra
            .into_iter()
            .map(|sigma| {
                let (o, k) = eval(&sigma);
                (sigma, o, k)
            })
            .collect();
        Self {
            param,
            search,
            eval,
            table,
            candidates,
        }
    }

    fn feasible(k: f64, target: f64) -> bool {
        k >= target - FEASIBILITY_TOL * (1.0 + target.abs())
    }

    /// Best feasible covariance for `target`, or `None`.
    fn solve(&self, target: f64) -> Option<(CMatrix, f64)> {
        let mut best: Option<(CMatrix, f64)> = None;
        let start = self
            .table
            .iter()
            .filter(|(_, _, k)| Self::feasible(*k, target))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((x0, _, _)) = start {
            let f = |x: &[f64]| {
                let sigma = self.param.build(x)?;
                let (o, k) = (self.eval)(&sigma);
                Self::feasible(k, target).then_some(o)
            };
            let (x, v) = box_pattern_search(x0.clone(), &f, &self.param.bounds(), &self.param.steps(&self.search), 1e-10);
            best = self.param.build(&x).map(|s| (s, v));
        } else if self.param.antennas == 1 {
            let sigma = self.param.build(&[])?;
            let (o, k) = (self.eval)(&sigma);
            if Self::feasible(k, target) {
                best = Some((sigma, o));
            }
        }
        for (sigma, o, k) in &self.candidates {
            if Self::feasible(*k, target) && best.as_ref().map_or(true, |b| *o > b.1) {
                best = Some((sigma.clone(), *o));
            }
        }
        best
    }

    /// Maximizes the constraint functional itself.
    fn max_constraint(&self) -> (CMatrix, f64) {
        let mut best: Option<(CMatrix, f64)> = self
            .candidates
            .iter()
            .max_by(|a, b| a.2.total_cmp(&b.2))
            .map(|(s, _, k)| (s.clone(), *k));
        if let Some((x0, _, _)) = self.table.iter().max_by(|a, b| a.2.total_cmp(&b.2)) {
            let f = |x: &[f64]| self.param.build(x).map(|s| (self.eval)(&s).1);
            let (x, v) = box_pattern_search(x0.clone(), &f, &self.param.bounds(), &self.param.steps(&self.search), 1e-12);
            if best.as_ref().map_or(true, |b| v > b.1) {
                best = self.param.build(&x).map(|s| (s, v));
            }
        }
        best.unwrap_or_else(|| {
            let sigma = self.param.build(&[]).expect("scalar covariance");
            let k = (self.eval)(&sigma).1;
            (sigma, k)
        })
    }
}

/// Mixtures λ·Σ_a + (1−λ)·Σ_b stay PSD with trace P.
fn mixtures(a: &CMatrix, b: &CMatrix, steps: usize) -> Vec<CMatrix> {
    (0..=steps)
        .map(|i| {
            let l = i as f64 / steps as f64;
            a.map(|z| z * l) + b.map(|z| z * (1.0 - l))
        })
        .collect()
}

fn state_candidates(model: &MimoChannelModel, s: usize) -> Vec<CMatrix> {
    let m = model.tx_antennas();
    let p = model.power();
    let (_, wf) = water_filling(model.comm_gain(s), p);
    let (_, beam) = top_beam(&model.gram(s), p);
    let mut out = mixtures(&wf, &beam, 200);
    out.push(CMatrix::identity(m, m).map(|z| z * (p / m as f64)));
    out
}

/// Closed-loop MIMO frontier: per-state covariance search at each coupled target.
pub fn mimo_curve(model: &MimoChannelModel, coupling: &Coupling, grid_bits: &[f64], search: MimoSearch) -> Result<RegionCurve> {
    check_grid(grid_bits)?;
    if model.tx_antennas() > 3 {
        return Err(Error::Unsupported(format!("covariance search with {} antennas", model.tx_antennas())));
    }
    let max = mimo_closed_loop_max_delta(model, coupling)?;
    let states = model.post_state_count();
    let problems: Vec<Problem> = (1..=states)
        .map(|s| {
            let h = model.comm_gain(s).clone();
            let g = model.gram(s);
            let eval = Box::new(move |sigma: &CMatrix| (comm_rate_bits(&h, sigma), sensing_delta_direct(&g, sigma)));
            Problem::new(model, search, eval, state_candidates(model, s))
        })
        .collect();
    let mut points = grid_bits
        .iter()
        .map(|&delta| {
            let targets = coupling.targets(delta);
            let covs = problems
                .iter()
                .zip(&targets)
                .map(|(pr, &t)| pr.solve(bits_to_nats(t)).map(|(s, _)| s))
                .collect::<Option<Vec<_>>>()
                .ok_or(Error::Infeasible { target: delta, max })?;
            Ok(CurvePoint {
                target_bits: delta,
                point: mimo_point(model, &covs)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    backward_monotone(&mut points);
    Ok(RegionCurve {
        label: format!("closed-loop {}", coupling.label()),
        points,
    })
}

fn open_eval(model: &MimoChannelModel) -> impl Fn(&CMatrix) -> (f64, f64) + Sync + '_ {
    move |sigma: &CMatrix| {
        let mut rate = f64::INFINITY;
        let mut delta = f64::INFINITY;
        for s in 1..=model.post_state_count() {
            rate = rate.min(comm_rate_bits(model.comm_gain(s), sigma));
            delta = delta.min(state_delta_nats(model, s, sigma));
        }
        (rate, delta)
    }
}

fn open_candidates(model: &MimoChannelModel) -> Vec<CMatrix> {
    let p = model.power();
    let mut base: Vec<CMatrix> = (1..=model.post_state_count())
        .flat_map(|s| [water_filling(model.comm_gain(s), p).1, top_beam(&model.gram(s), p).1])
        .collect();
    let m = model.tx_antennas();
    base.push(CMatrix::identity(m, m).map(|z| z * (p / m as f64)));
    let mut out = base.clone();
    for i in 0..base.len() {
        for j in i + 1..base.len() {
            out.extend(mixtures(&base[i], &base[j], 50));
        }
    }
    out
}

/// max_Σ min_s ½ tr(Γ_s Σ) in bits, found by search, with its maximizer.
pub fn mimo_open_loop_max_delta(model: &MimoChannelModel, search: MimoSearch) -> (f64, CMatrix) {
    let pr = Problem::new(model, search, Box::new(open_eval(model)), open_candidates(model));
    let (sigma, v) = pr.max_constraint();
    (nats_to_bits(v), sigma)
}

/// Dual value min over state weights λ of ½ P λ_max(Σ_s λ_s Γ_s), in bits: an
/// upper bound on the open-loop maximum Δ that is tight by minimax.
pub fn mimo_open_loop_dual_bound(model: &MimoChannelModel) -> f64 {
    let grams: Vec<CMatrix> = (1..=model.post_state_count()).map(|s| model.gram(s)).collect();
    let m = model.tx_antennas();
    let value = |l: &[f64]| {
        let mut a = CMatrix::zeros(m, m);
        for (g, &w) in grams.iter().zip(l) {
            a += g.map(|z| z * w);
        }
        top_beam(&a, model.power()).0
    };
    let nats = if grams.len() == 2 {
        -golden_section_max(|l| -value(&[l, 1.0 - l]), 0.0, 1.0, 1e-13).1
    } else {
        -maximize_concave(grams.len(), |l| -value(l), &[], 40).expect("non-empty").1
    };
    nats_to_bits(nats)
}

/// Open-loop MIMO baseline with one covariance for every state.
pub fn mimo_open_loop_curve(model: &MimoChannelModel, grid_bits: &[f64], search: MimoSearch) -> Result<RegionCurve> {
    check_grid(grid_bits)?;
    if model.tx_antennas() > 3 {
        return Err(Error::Unsupported(format!("covariance search with {} antennas", model.tx_antennas())));
    }
    let mut cands = open_candidates(model);
    let (max, best) = mimo_open_loop_max_delta(model, search);
    cands.push(best);
    let pr = Problem::new(model, search, Box::new(open_eval(model)), cands);
    let states = model.post_state_count();
    let mut points = grid_bits
        .iter()
        .map(|&delta| {
            let (sigma, _) = pr.solve(bits_to_nats(delta)).ok_or(Error::Infeasible { target: delta, max })?;
            Ok(CurvePoint {
                target_bits: delta,
                point: mimo_point(model, &vec![sigma; states])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    backward_monotone(&mut points);
    Ok(RegionCurve {
        label: "open-loop".into(),
        points,
    })
}

/// MIMO counterpart of the discrete dominance pass.
pub fn mimo_dominance_pass(model: &MimoChannelModel, closed: &mut RegionCurve, coupling: &Coupling, other: &RegionCurve) -> Result<()> {
    for cp in &mut closed.points {
        let Some(op) = other.points.iter().find(|o| o.target_bits == cp.target_bits) else {
            continue;
        };
        let (Witness::Mimo(mine), Witness::Mimo(theirs)) = (&cp.point.witness, &op.point.witness) else {
            return Err(Error::InvalidConfig("dominance pass needs MIMO witnesses".into()));
        };
        let targets = coupling.targets(cp.target_bits);
        let mut covs = mine.clone();
        let mut changed = false;
        for (i, cand) in theirs.iter().enumerate() {
            let s = i + 1;
            let t = bits_to_nats(targets[i]);
            if !Problem::feasible(state_delta_nats(model, s, cand), t) {
                continue;
            }
            let h = model.comm_gain(s);
            if comm_rate_bits(h, cand) > comm_rate_bits(h, &covs[i]) {
                covs[i] = cand.clone();
                changed = true;
            }
        }
        if changed {
            cp.point = mimo_point(model, &covs)?;
        }
    }
    backward_monotone(&mut closed.points);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamPoint {
    pub theta: f64,
    pub rate_bits: f64,
    /// Δ_s in nats, s = 1..S.
    pub delta_nats: Vec<f64>,
}

/// Rank-one beamforming Σ = P v vᴴ with v = a_t(θ)/√M for each angle.
pub fn beam_sweep(model: &MimoChannelModel, thetas: &[f64]) -> Result<Vec<BeamPoint>> {
    let m = model.tx_antennas();
    let p = model.power();
    thetas
        .iter()
        .map(|&theta| {
            let v = steering_vector(m, theta).map(|z| z / (m as f64).sqrt());
            let sigma = (&v * v.adjoint()).map(|z| z * p);
            let pt = mimo_point(model, &vec![sigma.clone(); model.post_state_count()])?;
            Ok(BeamPoint {
                theta,
                rate_bits: pt.rate_bits,
                delta_nats: (1..=model.post_state_count()).map(|s| state_delta_nats(model, s, &sigma)).collect(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{mimo_two_state, scalar_gaussian, BeamGeometry};
    use crate::region::{delta_grid, merge_grids};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_covariance() {
        let model = mimo_two_state();
        let z = CMatrix::zeros(2, 2);
        let pt = mimo_point(&model, &[z.clone(), z]).unwrap();
        assert_eq!(pt.rate_bits, 0.0);
        assert_eq!(pt.delta_bits, vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_covariances() {
        let model = mimo_two_state();
        let neg = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0), c(-1.0)]));
        assert!(matches!(mimo_point(&model, &[neg.clone(), neg]), Err(Error::NotPsd(_))));
        let big = CMatrix::identity(2, 2).map(|z| z * 6.0);
        assert!(matches!(
            mimo_point(&model, &[big.clone(), big]),
            Err(Error::PowerViolation { .. })
        ));
    }

    #[test]
    fn half_power_each_antenna() {
        // H1 = diag(2, 1): ½ tr(Γ Σ) = ½·5·(4 + 1) = 12.5 nats
        let model = mimo_two_state();
        let s = CMatrix::identity(2, 2).map(|z| z * 5.0);
        let pt = mimo_point(&model, &[s.clone(), s]).unwrap();
        assert!((bits_to_nats(pt.delta_bits[0]) - 12.5).abs() < 1e-12);
        assert!((bits_to_nats(pt.delta_bits[1]) - 12.5).abs() < 1e-12);
        // H̃1 = [[1,0],[1,-1]]: det(I + 5 H̃H̃ᵀ) = det([[6,5],[5,11]]) = 41
        let r1 = 0.5 * 41f64.log2();
        // H̃2 = [[s,s],[1,0]]: H̃H̃ᵀ = [[1, s],[s, 1]]: det([[6, 5s],[5s, 6]]) = 36 − 12.5
        let r2 = 0.5 * 23.5f64.log2();
        assert!((pt.rate_bits - r1.min(r2)).abs() < 1e-12);
    }

    #[test]
    fn water_filling_matches_search() {
        let model = mimo_two_state();
        let (wf, _) = mimo_capacity_delta0(&model);
        let curve = mimo_curve(&model, &Coupling::all_equal(2), &[0.0], MimoSearch::default()).unwrap();
        assert!((curve.points[0].point.rate_bits - wf).abs() < 1e-9);
        // grid alone (no candidates) comes close
        let param = Param {
            antennas: 2,
            complex: false,
            power: 10.0,
        };
        let grid_best = param
            .grid(&MimoSearch::default())
            .iter()
            .filter_map(|x| param.build(x))
            .map(|s| comm_rate_bits(model.comm_gain(1), &s))
            .fold(0.0, f64::max);
        let (wf1, _) = water_filling(model.comm_gain(1), 10.0);
        assert!(grid_best <= wf1 + 1e-12 && wf1 - grid_best < 1e-2);
    }

    #[test]
    fn open_loop_max_matches_dual() {
        let model = mimo_two_state();
        let (primal, sigma) = mimo_open_loop_max_delta(&model, MimoSearch::default());
        let dual = mimo_open_loop_dual_bound(&model);
        assert!(primal <= dual + 1e-9);
        assert!(dual - primal < 1e-6, "primal {primal} dual {dual}");
        check_covariance(&sigma, 2, 10.0).unwrap();
    }

    #[test]
    fn closed_dominates_open() {
        let model = mimo_two_state();
        let search = MimoSearch::default();
        let (om, _) = mimo_open_loop_max_delta(&model, search);
        let all = Coupling::all_equal(2);
        let cm = mimo_closed_loop_max_delta(&model, &all).unwrap();
        let og = delta_grid(om, 9);
        let open = mimo_open_loop_curve(&model, &og, search).unwrap();
        let mut closed = mimo_curve(&model, &all, &merge_grids(&[&og, &delta_grid(cm, 9)]), search).unwrap();
        mimo_dominance_pass(&model, &mut closed, &all, &open).unwrap();
        for op in &open.points {
            assert!(closed.rate_at(op.target_bits).unwrap() >= op.point.rate_bits);
        }
        assert!(closed.is_monotone() && open.is_monotone());
    }

    #[test]
    fn scalar_reduction_uses_full_power() {
        let model = scalar_gaussian(&[1.0], &[2.0], 10.0);
        let max = mimo_closed_loop_max_delta(&model, &Coupling::all_equal(1)).unwrap();
        assert!((bits_to_nats(max) - 5.0).abs() < 1e-12);
        let curve = mimo_curve(&model, &Coupling::all_equal(1), &delta_grid(max, 5), MimoSearch::default()).unwrap();
        for cp in &curve.points {
            assert!((cp.point.rate_bits - 0.5 * 41f64.log2()).abs() < 1e-12);
            let Witness::Mimo(w) = &cp.point.witness else { panic!() };
            assert!((w[0][(0, 0)].re - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn beam_endpoints() {
        let model = BeamGeometry::default().model();
        let pts = beam_sweep(&model, &[FRAC_PI_2, 0.0]).unwrap();
        assert!(pts[0].delta_nats[0].abs() < 1e-12);
        assert!((pts[0].rate_bits - 0.5 * 21f64.log2()).abs() < 1e-12);
        assert!(pts[1].rate_bits.abs() < 1e-12);
        assert!((pts[1].delta_nats[0] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn trace_identity_on_random_psd() {
        use crate::rngs::stream;
        use rand::Rng;
        let mut rng = stream(5, &[]);
        for _ in 0..200 {
            let h = CMatrix::from_fn(2, 2, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let b = CMatrix::from_fn(2, 2, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let gamma = h.adjoint() * &h;
            let sigma = &b * b.adjoint();
            assert!((sensing_delta_direct(&gamma, &sigma) - sensing_delta_eigen(&gamma, &sigma)).abs() < 1e-12);
        }
    }
}
