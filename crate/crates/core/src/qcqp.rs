//! Single-beamformer quadratic programs met inside the block coordinate loop.
//!
//! Both problems involve one objective direction, one constraint direction and
//! a power budget, so the optimum lies in a two-dimensional subspace and has a
//! closed form there. [`sdr_solve_and_extract`] solves the same problems through
//! the semidefinite relaxation and rank-one extraction instead.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, project_complement, rank_one_extract, CMat, CVec, HermitianPsd, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AtMost,
    AtLeast,
}

/// |b† w|² {≤, ≥} bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadConstraint {
    pub vector: CVec,
    pub bound: f64,
    pub direction: Direction,
}

/// Optimize |a† w|² subject to vector constraints and ‖w‖² ≤ power.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadProblem {
    pub objective: CVec,
    pub sense: Sense,
    pub constraints: Vec<QuadConstraint>,
    pub power: f64,
}

impl QuadProblem {
    pub fn boost_max(h_gain: &CVec, h_leak: &CVec, leak_bound: f64, power: f64) -> Self {
        Self {
            objective: h_gain.clone(),
            sense: Sense::Maximize,
            constraints: vec![QuadConstraint { vector: h_leak.clone(), bound: leak_bound, direction: Direction::AtMost }],
            power,
        }
    }

    pub fn leakage_min(h_leak: &CVec, h_sig: &CVec, sig_bound: f64, power: f64) -> Self {
        Self {
            objective: h_leak.clone(),
            sense: Sense::Minimize,
            constraints: vec![QuadConstraint { vector: h_sig.clone(), bound: sig_bound, direction: Direction::AtLeast }],
            power,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.objective.dim();
        if n == 0 || !self.objective.is_finite() {
            return Err(Error::InvalidInput("objective vector must be finite and nonempty".into()));
        }
        if self.constraints.len() > 2 {
            return Err(Error::InvalidInput("at most two vector constraints are supported".into()));
        }
        if !(self.power >= 0.0 && self.power.is_finite()) {
            return Err(Error::InvalidInput(format!("power budget must be finite and >= 0, got {}", self.power)));
        }
        for c in &self.constraints {
            if c.vector.dim() != n || !c.vector.is_finite() {
                return Err(Error::InvalidInput("constraint vector dimension mismatch".into()));
            }
            if c.bound.is_nan() || c.bound < 0.0 {
                return Err(Error::InvalidInput(format!("constraint bound must be >= 0, got {}", c.bound)));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, w: &CVec) -> f64 {
        self.objective.gain(w)
    }

    /// Largest constraint violation, each normalized by the largest value the
    /// constrained quantity can take under the budget. Nonpositive means feasible.
    pub fn violation(&self, w: &CVec) -> f64 {
        let p = self.power.max(f64::MIN_POSITIVE);
        let mut worst = (w.norm_sqr() - self.power) / p;
        for c in &self.constraints {
            let scale = (c.vector.norm_sqr() * p).max(f64::MIN_POSITIVE);
            let v = c.vector.gain(w);
            let excess = match c.direction {
                Direction::AtMost if c.bound.is_finite() => (v - c.bound) / scale,
                Direction::AtMost => f64::NEG_INFINITY,
                Direction::AtLeast => (c.bound - v) / scale,
            };
            worst = worst.max(excess);
        }
        worst
    }

    /// Relative difference of two objective values, floored at 1e-7 of the
    /// largest attainable objective so that near-zero optima compare sensibly.
    pub fn relative_gap(&self, f1: f64, f2: f64) -> f64 {
        let floor = 1e-7 * self.objective.norm_sqr() * self.power;
        (f1 - f2).abs() / f1.abs().max(f2.abs()).max(floor).max(f64::MIN_POSITIVE)
    }
}

/// Energy of `x` along `l` and orthogonal to it, the latter computed from the
/// projected vector so that near-parallel pairs keep full relative accuracy.
fn split(x: &CVec, l: &CVec) -> (f64, f64) {
    match project_complement(x, l) {
        Ok(r) => {
            let r2 = r.norm_sqr();
            ((x.norm_sqr() - r2).max(0.0), r2)
        }
        Err(_) => (0.0, x.norm_sqr()),
    }
}

/// Closed-form optimum of the boost problem as a function of the leak bound
/// and budget, from the geometry of one fixed pair (g, l).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoostProfile {
    gn2: f64,
    ln2: f64,
    c1: f64,
    c2: f64,
}

impl BoostProfile {
    pub fn new(g: &CVec, l: &CVec) -> Self {
        let gn2 = g.norm_sqr();
        let ln2 = l.norm_sqr();
        let (c1, c2) = split(g, l);
        Self { gn2, ln2, c1, c2 }
    }

    /// (optimal |g†w|², resulting |l†w|²).
    pub fn value(&self, leak_bound: f64, power: f64) -> (f64, f64) {
        if power <= 0.0 || self.gn2 == 0.0 {
            return (0.0, 0.0);
        }
        let mrt_leak = power * self.c1 * self.ln2 / self.gn2;
        if mrt_leak <= leak_bound {
            return (power * self.gn2, mrt_leak);
        }
        let x2 = (leak_bound.max(0.0) / self.ln2).min(power);
        let y2 = (power - x2).max(0.0);
        let a = (self.c1 * x2).sqrt() + (self.c2 * y2).sqrt();
        (a * a, self.ln2 * x2)
    }
}

/// Closed-form optimum of the leakage problem for one fixed pair (l, s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeakProfile {
    sn2: f64,
    ln2: f64,
    c1: f64,
    r2: f64,
}

impl LeakProfile {
    pub fn new(l: &CVec, s: &CVec) -> Self {
        let sn2 = s.norm_sqr();
        let ln2 = l.norm_sqr();
        let (c1, r2) = split(s, l);
        Self { sn2, ln2, c1, r2 }
    }

    /// (minimal |l†w|², power used), or `None` when the signal bound is out of reach.
    pub fn value(&self, sig_bound: f64, power: f64) -> Option<(f64, f64)> {
        if sig_bound <= 0.0 {
            return Some((0.0, 0.0));
        }
        let reach = power * self.sn2;
        if sig_bound > reach * (1.0 + 1e-12) {
            return None;
        }
        let sb = sig_bound.min(reach);
        let parallel = self.r2 <= 1e-24 * self.sn2;
        if !parallel && power * self.r2 >= sb {
            return Some((0.0, sb / self.r2));
        }
        if parallel {
            let t2 = sb / self.sn2;
            return Some((self.ln2 * t2, t2));
        }
        let t = ((sb * self.c1).sqrt() - (self.r2 * (reach - sb)).sqrt()) / self.sn2;
        let t = t.max(0.0);
        Some((self.ln2 * t * t, power))
    }
}

fn unit_phase(z: C64) -> C64 {
    let n = z.norm();
    if n > 0.0 {
        z / n
    } else {
        C64::new(1.0, 0.0)
    }
}

/// Maximize |g†w|² subject to |l†w|² ≤ leak_bound and ‖w‖² ≤ power.
pub fn solve_boost_max(g: &CVec, l: &CVec, leak_bound: f64, power: f64) -> Result<CVec> {
    QuadProblem::boost_max(g, l, leak_bound, power).validate()?;
    let n = g.dim();
    if power == 0.0 {
        return Ok(CVec::zeros(n));
    }
    let u = g.normalized()?;
    let mrt = u.scale(power.sqrt());
    let ln2 = l.norm_sqr();
    if ln2 == 0.0 || l.gain(&mrt) <= leak_bound {
        return Ok(mrt.phase_normalized());
    }
    let e1 = l.scale(1.0 / ln2.sqrt());
    let gamma1 = e1.dot(g);
    let x = (leak_bound / ln2).min(power).sqrt();
    let along = e1.scale_c(unit_phase(gamma1) * x);
    let r = project_complement(g, &e1)?;
    let w = if r.norm_sqr() > 1e-24 * g.norm_sqr() {
        let y = (power - x * x).max(0.0).sqrt();
        &along + &r.normalized()?.scale(y)
    } else {
        along
    };
    Ok(w.phase_normalized())
}

/// Minimize |l†w|² subject to |s†w|² ≥ sig_bound and ‖w‖² ≤ power.
pub fn solve_leakage_min(l: &CVec, s: &CVec, sig_bound: f64, power: f64) -> Result<CVec> {
    QuadProblem::leakage_min(l, s, sig_bound, power).validate()?;
    let n = s.dim();
    if sig_bound <= 0.0 {
        return Ok(CVec::zeros(n));
    }
    let sn2 = s.norm_sqr();
    let reach = power * sn2;
    if sn2 == 0.0 || sig_bound > reach * (1.0 + 1e-12) {
        return Err(Error::Infeasible("signal bound exceeds full-power MRT"));
    }
    let sb = sig_bound.min(reach);
    let ln2 = l.norm_sqr();
    if ln2 == 0.0 {
        return Ok(s.scale((sb / sn2).sqrt() / sn2.sqrt()).phase_normalized());
    }
    let e1 = l.scale(1.0 / ln2.sqrt());
    let r = project_complement(s, &e1)?;
    let r2 = r.norm_sqr();
    if r2 > 1e-24 * sn2 && power * r2 >= sb {
        return Ok(r.scale((sb / r2).sqrt() / r2.sqrt()).phase_normalized());
    }
    let sigma1 = e1.dot(s);
    if r2 <= 1e-24 * sn2 {
        return Ok(s.scale((sb / sn2).sqrt() / sn2.sqrt()).phase_normalized());
    }
    let t = (((sb * sigma1.norm_sqr()).sqrt() - (r2 * (reach - sb)).sqrt()) / sn2).max(0.0);
    let y = (power - t * t).max(0.0).sqrt();
    let w = &e1.scale_c(unit_phase(sigma1) * t) + &r.normalized()?.scale(y);
    Ok(w.phase_normalized())
}

// ---------------------------------------------------------------------------
// Semidefinite relaxation.

/// Lower Cholesky factor of a Hermitian positive definite matrix.
fn cholesky(m: &CMat) -> Option<CMat> {
    let n = m.rows();
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = m.get(j, j).re;
        for k in 0..j {
            d -= l.get(j, k).norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let djj = d.sqrt();
        l.set(j, j, C64::new(djj, 0.0));
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k).conj();
            }
            l.set(i, j, s / djj);
        }
    }
    Some(l)
}

/// Solve (I + Σ v_i v_iᵀ) x = g. The rank-m part is orthonormalized first so
/// that huge barrier curvatures never swamp the identity block.
fn newton_solve(g: &[f64], cols: &[Vec<f64>]) -> Option<Vec<f64>> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut coeffs: Vec<Vec<f64>> = Vec::new();
    for v in cols {
        let mut w = v.clone();
        let mut coeff = vec![0.0; q.len()];
        for _pass in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = dot(qi, &w);
                coeff[i] += c;
                for (wk, qk) in w.iter_mut().zip(qi) {
                    *wk -= c * qk;
                }
            }
        }
        let nw = dot(&w, &w).sqrt();
        if nw > 1e-13 * dot(v, v).sqrt() {
            q.push(w.iter().map(|x| x / nw).collect());
            coeff.push(nw);
        }
        coeffs.push(coeff);
    }
    let k = q.len();
    if k == 0 {
        return Some(g.to_vec());
    }
    let r = |i: usize, j: usize| coeffs[j].get(i).copied().unwrap_or(0.0);
    let m = CMat::from_fn(k, k, |i, l| {
        let v: f64 = (0..cols.len()).map(|j| r(i, j) * r(l, j)).sum();
        C64::new(v + if i == l { 1.0 } else { 0.0 }, 0.0)
    });
    let eig = hermitian_eig(&m).ok()?;
    let qg: Vec<f64> = q.iter().map(|qi| dot(qi, g)).collect();
    let mut y = vec![0.0; k];
    for (lam, u) in eig.values.iter().zip(&eig.vectors) {
        if !(*lam > 0.0) {
            return None;
        }
        let proj: f64 = (0..k).map(|i| u[i].re * qg[i]).sum();
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += u[i].re * proj / lam;
        }
    }
    // Complete the basis so the identity block is never formed by cancellation.
    let n = g.len();
    for axis in 0..n {
        if q.len() == n {
            break;
        }
        let mut w = vec![0.0; n];
        w[axis] = 1.0;
        for _pass in 0..2 {
            for qi in &q {
                let c = dot(qi, &w);
                for (wk, qk) in w.iter_mut().zip(qi) {
                    *wk -= c * qk;
                }
            }
        }
        let nw = dot(&w, &w).sqrt();
        if nw > 1e-8 {
            q.push(w.iter().map(|x| x / nw).collect());
        }
    }
    let mut x = vec![0.0; n];
    for (i, qi) in q.iter().enumerate() {
        let c = if i < k { y[i] } else { dot(qi, g) };
        for (xj, qj) in x.iter_mut().zip(qi) {
            *xj += qj * c;
        }
    }
    Some(x)
}

/// Orthonormal basis of the k×k Hermitian matrices under the Frobenius product.
fn hermitian_basis(k: usize) -> Vec<CMat> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        let mut m = CMat::zeros(k, k);
        m.set(i, i, C64::new(1.0, 0.0));
        out.push(m);
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let mut re = CMat::zeros(k, k);
            re.set(i, j, C64::new(h, 0.0));
            re.set(j, i, C64::new(h, 0.0));
            out.push(re);
            let mut im = CMat::zeros(k, k);
            im.set(i, j, C64::new(0.0, h));
            im.set(j, i, C64::new(0.0, -h));
            out.push(im);
        }
    }
    out
}

fn combine(basis: &[CMat], coeffs: &[f64]) -> CMat {
    let k = basis[0].rows();
    let mut m = CMat::zeros(k, k);
    for (b, c) in basis.iter().zip(coeffs) {
        m = &m + &b.scale(*c);
    }
    m
}

/// One log-barrier term v†Xv − bound (AtLeast) or bound − v†Xv (AtMost).
struct Slack {
    v: CVec,
    bound: f64,
    sign: f64,
}

/// Maximize sgn·a†Xa over {X ⪰ 0, tr X ≤ 1, slacks ≥ 0} by a path-following
/// barrier method. The iterate is kept as a Cholesky factor L (X = LL†) and
/// each Newton step is taken in the scaled variable D with X⁺ = L(I + sD)L†.
fn barrier(a: &CVec, sgn: f64, slacks: &[Slack], mut l: CMat) -> Result<CMat> {
    let k = a.dim();
    let basis = hermitian_basis(k);
    let nv = basis.len();
    let m = (k + 1 + slacks.len()) as f64;
    let mut t = m;
    let lin = |v: &CVec, lt: &CMat| -> Vec<f64> {
        let vt = lt.mul_vec(v);
        basis.iter().map(|e| e.quad_form(&vt)).collect()
    };
    for _outer in 0..60 {
        for _inner in 0..200 {
            let lt = l.adjoint();
            let gram = lt.mul(&l);
            let trx = gram.trace().re;
            let mut grad: Vec<f64> = lin(a, &lt).into_iter().map(|x| t * sgn * x).collect();
            for (j, e) in basis.iter().enumerate() {
                grad[j] += e.trace().re;
            }
            let mut terms: Vec<(f64, Vec<f64>)> = Vec::with_capacity(slacks.len() + 1);
            let cpow: Vec<f64> = basis.iter().map(|e| -e.trace_product(&gram).re).collect();
            terms.push((1.0 - trx, cpow));
            for s in slacks {
                let vt = lt.mul_vec(&s.v);
                let u = s.sign * (vt.norm_sqr() - s.bound);
                let c: Vec<f64> = basis.iter().map(|e| s.sign * e.quad_form(&vt)).collect();
                terms.push((u, c));
            }
            let mut cols = Vec::with_capacity(terms.len());
            for (u, c) in &terms {
                if !(*u > 0.0) {
                    return Err(Error::Numerical("barrier iterate left the feasible set".into()));
                }
                for j in 0..nv {
                    grad[j] += c[j] / u;
                }
                cols.push(c.iter().map(|x| x / u).collect::<Vec<f64>>());
            }
            let step = newton_solve(&grad, &cols).ok_or_else(|| Error::Numerical("singular Newton system".into()))?;
            let dec2: f64 = step.iter().zip(&grad).map(|(x, y)| x * y).sum();
            let dec = dec2.max(0.0).sqrt();
            if dec <= 1e-9 {
                break;
            }
            let mut s = if dec < 0.25 { 1.0 } else { 1.0 / (1.0 + dec) };
            let d = combine(&basis, &step);
            let mut moved = false;
            for _ in 0..60 {
                let trial = &CMat::identity(k) + &d.scale(s);
                if let Some(f) = cholesky(&trial) {
                    let next = l.mul(&f);
                    let nt = next.adjoint();
                    let ok_power = 1.0 - nt.mul(&next).trace().re > 0.0;
                    let ok_slacks = slacks.iter().all(|sl| sl.sign * (nt.mul_vec(&sl.v).norm_sqr() - sl.bound) > 0.0);
                    if ok_power && ok_slacks {
                        l = next;
                        moved = true;
                        break;
                    }
                }
                s *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if m / t <= 1e-14 {
            break;
        }
        t *= 10.0;
    }
    Ok(l.mul(&l.adjoint()))
}

/// Optimal PSD matrix of the relaxed problem, in the original coordinates.
pub fn sdr_solve(p: &QuadProblem) -> Result<CMat> {
    p.validate()?;
    let n = p.objective.dim();
    if p.power == 0.0 || p.objective.norm_sqr() == 0.0 {
        if p.constraints.iter().any(|c| c.direction == Direction::AtLeast && c.bound > 0.0) {
            return Err(Error::Infeasible("signal bound with zero budget"));
        }
        return Ok(CMat::zeros(n, n));
    }
    let mut nulls: Vec<CVec> = Vec::new();
    let mut active: Vec<&QuadConstraint> = Vec::new();
    for c in &p.constraints {
        let reach = p.power * c.vector.norm_sqr();
        match c.direction {
            Direction::AtMost if c.bound >= reach => {}
            Direction::AtMost if c.bound == 0.0 => nulls.push(c.vector.clone()),
            Direction::AtLeast if c.bound <= 0.0 => {}
            Direction::AtLeast if c.bound > reach * (1.0 + 1e-12) => {
                return Err(Error::Infeasible("signal bound exceeds full-power MRT"));
            }
            _ => active.push(c),
        }
    }
    // Orthonormal basis: excluded directions first, then the span we optimize over.
    let mut excluded: Vec<CVec> = Vec::new();
    let mut span: Vec<CVec> = Vec::new();
    let orth = |v: &CVec, against: &[&CVec]| -> Option<CVec> {
        let mut r = v.clone();
        for b in against {
            r = &r - &b.scale_c(b.dot(&r));
        }
        (r.norm_sqr() > 1e-20 * v.norm_sqr()).then(|| r.normalized().ok()).flatten()
    };
    for v in &nulls {
        let all: Vec<&CVec> = excluded.iter().collect();
        if let Some(u) = orth(v, &all) {
            excluded.push(u);
        }
    }
    for v in std::iter::once(&p.objective).chain(active.iter().map(|c| &c.vector)) {
        let all: Vec<&CVec> = excluded.iter().chain(span.iter()).collect();
        if let Some(u) = orth(v, &all) {
            span.push(u);
        }
    }
    let k = span.len();
    if k == 0 {
        return Ok(CMat::zeros(n, n));
    }
    let coords = |v: &CVec| CVec::from_entries(span.iter().map(|e| e.dot(v)).collect());
    let a = coords(&p.objective).scale(1.0 / p.objective.norm());
    let slacks: Vec<Slack> = active
        .iter()
        .map(|c| {
            let bn2 = c.vector.norm_sqr();
            Slack {
                v: coords(&c.vector).scale(1.0 / bn2.sqrt()),
                bound: c.bound / (p.power * bn2),
                sign: if c.direction == Direction::AtLeast { 1.0 } else { -1.0 },
            }
        })
        .collect();
    let sgn = if p.sense == Sense::Maximize { 1.0 } else { -1.0 };

    let start = match slacks.iter().filter(|s| s.sign > 0.0).count() {
        0 => {
            let cap = slacks.iter().map(|s| 0.5 * s.bound / s.v.norm_sqr().max(1e-300)).fold(0.5 / k as f64, f64::min);
            CMat::identity(k).scale(cap)
        }
        1 => {
            let s = slacks.iter().find(|s| s.sign > 0.0).expect("one signal bound");
            let vn2 = s.v.norm_sqr();
            let gap = 1.0 - s.bound / vn2;
            let shat = s.v.normalized()?;
            if gap <= 1e-12 {
                let x = shat.outer().scale((s.bound / vn2).min(1.0));
                return Ok(lift(&span, &x, p.power));
            }
            let eps = gap / (4.0 * k as f64);
            &shat.outer().scale(1.0 - 0.75 * gap) + &CMat::identity(k).scale(eps)
        }
        _ => return Err(Error::InvalidInput("relaxation supports one lower-bounded constraint".into())),
    };
    let l0 = cholesky(&start).ok_or_else(|| Error::Numerical("starting point not positive definite".into()))?;
    let strict = slacks.iter().all(|s| s.sign * (start.quad_form(&s.v) - s.bound) > 0.0);
    if !strict {
        return Err(Error::Numerical("no strictly feasible starting point".into()));
    }
    let x = barrier(&a, sgn, &slacks, l0)?;
    Ok(lift(&span, &x, p.power))
}

/// E X E† · power for an orthonormal basis E given as columns.
fn lift(span: &[CVec], x: &CMat, power: f64) -> CMat {
    let n = span[0].dim();
    let k = span.len();
    CMat::from_fn(n, n, |r, c| {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..k {
            for j in 0..k {
                acc += span[i][r] * x.get(i, j) * span[j][c].conj();
            }
        }
        acc * power
    })
}

/// Relaxed optimum followed by rank-one extraction preserving the objective,
/// the constraint and the power functional.
pub fn sdr_solve_and_extract(p: &QuadProblem) -> Result<CVec> {
    let w = sdr_solve(p)?;
    let n = p.objective.dim();
    if w.frobenius_norm() == 0.0 {
        return Ok(CVec::zeros(n));
    }
    let mut funcs = vec![p.objective.outer()];
    funcs.extend(p.constraints.iter().map(|c| c.vector.outer()));
    funcs.push(CMat::identity(n));
    if funcs.len() > 3 {
        return Err(Error::InvalidInput("rank-one extraction supports one vector constraint".into()));
    }
    let psd = HermitianPsd::new((&w + &w.adjoint()).scale(0.5))?;
    Ok(rank_one_extract(&psd, &funcs)?.phase_normalized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::qcqp_direction_oracle;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> CVec {
        CVec::from_entries((0..n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect())
    }

    #[test]
    fn boost_orthogonal_leak_is_mrt() {
        let g = CVec::from_real(&[1.0, 0.0]);
        let l = CVec::from_real(&[0.0, 2.0]);
        let w = solve_boost_max(&g, &l, 0.0, 3.0).unwrap();
        assert!((g.gain(&w) - 3.0).abs() < 1e-12);
        assert!(l.gain(&w) < 1e-24);
    }

    #[test]
    fn boost_unbounded_leak_is_mrt() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (g, l) = (rand_vec(&mut rng, 3), rand_vec(&mut rng, 3));
        let w = solve_boost_max(&g, &l, f64::INFINITY, 2.0).unwrap();
        assert!((g.gain(&w) - 2.0 * g.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn leakage_orthogonal_is_minimum_power_mrt() {
        let l = CVec::from_real(&[1.0, 0.0]);
        let s = CVec::from_real(&[0.0, 2.0]);
        let w = solve_leakage_min(&l, &s, 2.0, 10.0).unwrap();
        assert!(l.gain(&w) < 1e-24);
        assert!((w.norm_sqr() - 0.5).abs() < 1e-12);
        assert!((s.gain(&w) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn leakage_out_of_reach_is_infeasible() {
        let s = CVec::from_real(&[1.0, 1.0]);
        let l = CVec::from_real(&[1.0, 0.0]);
        assert!(matches!(solve_leakage_min(&l, &s, 2.5, 1.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn zero_power_gives_zero_vector() {
        let g = CVec::from_real(&[1.0, 2.0]);
        assert_eq!(solve_boost_max(&g, &g, 1.0, 0.0).unwrap(), CVec::zeros(2));
    }

    #[test]
    fn profiles_match_vector_solutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let n = rng.random_range(1..=3);
            let (g, l) = (rand_vec(&mut rng, n), rand_vec(&mut rng, n));
            let power = rng.random::<f64>() * 3.0;
            let bound = rng.random::<f64>() * power * l.norm_sqr();
            let w = solve_boost_max(&g, &l, bound, power).unwrap();
            let (v, leak) = BoostProfile::new(&g, &l).value(bound, power);
            assert!((g.gain(&w) - v).abs() <= 1e-10 * v.max(1e-12), "n={n} {} vs {v} g={g} l={l} b={bound} p={power}", g.gain(&w));
            assert!((l.gain(&w) - leak).abs() <= 1e-10 * power * l.norm_sqr());
            let sig = rng.random::<f64>() * power * l.norm_sqr();
            let w = solve_leakage_min(&g, &l, sig, power).unwrap();
            let (v, used) = LeakProfile::new(&g, &l).value(sig, power).unwrap();
            assert!((g.gain(&w) - v).abs() <= 1e-10 * power * g.norm_sqr());
            assert!((w.norm_sqr() - used).abs() <= 1e-10 * power);
        }
    }

    #[test]
    fn closed_forms_match_direction_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let (g, l) = (rand_vec(&mut rng, 2), rand_vec(&mut rng, 2));
            let power = 0.5 + rng.random::<f64>();
            let bound = rng.random::<f64>() * 0.5 * power * l.norm_sqr();
            let p = QuadProblem::boost_max(&g, &l, bound, power);
            let w = solve_boost_max(&g, &l, bound, power).unwrap();
            let o = qcqp_direction_oracle(&p).unwrap();
            assert!(p.relative_gap(p.objective_value(&w), o) <= 1e-4, "boost {} vs {o}", p.objective_value(&w));
            assert!(p.objective_value(&w) >= o * (1.0 - 1e-9));

            let sig = rng.random::<f64>() * power * l.norm_sqr();
            let p = QuadProblem::leakage_min(&g, &l, sig, power);
            let w = solve_leakage_min(&g, &l, sig, power).unwrap();
            let o = qcqp_direction_oracle(&p).unwrap();
            assert!(p.relative_gap(p.objective_value(&w), o) <= 1e-4);
        }
    }

    #[test]
    fn sdr_agrees_with_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let n = rng.random_range(2..=3);
            let (g, l) = (rand_vec(&mut rng, n), rand_vec(&mut rng, n));
            let power = 0.5 + rng.random::<f64>();
            let bound = rng.random::<f64>() * power * l.norm_sqr();
            let p = QuadProblem::boost_max(&g, &l, bound, power);
            let a = solve_boost_max(&g, &l, bound, power).unwrap();
            let b = sdr_solve_and_extract(&p).unwrap();
            assert!(p.relative_gap(p.objective_value(&a), p.objective_value(&b)) <= 1e-6);
            assert!(p.violation(&b) <= 1e-9);

            let p = QuadProblem::leakage_min(&g, &l, bound, power);
            let a = solve_leakage_min(&g, &l, bound, power).unwrap();
            let b = sdr_solve_and_extract(&p).unwrap();
            assert!(
                p.relative_gap(p.objective_value(&a), p.objective_value(&b)) <= 1e-6,
                "{} vs {}",
                p.objective_value(&a),
                p.objective_value(&b)
            );
            assert!(p.violation(&b) <= 1e-9);
        }
    }

    #[test]
    fn sdr_handles_zero_leak_bound() {
        let g = CVec::from_real(&[1.0, 1.0]);
        let l = CVec::from_real(&[1.0, 0.0]);
        let p = QuadProblem::boost_max(&g, &l, 0.0, 1.0);
        let w = sdr_solve_and_extract(&p).unwrap();
        assert!(l.gain(&w) < 1e-20);
        assert!((g.gain(&w) - 1.0).abs() < 1e-9, "{}", g.gain(&w));
    }

    proptest! {
        #[test]
        fn solutions_stay_feasible(seed in 0u64..10_000, n in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (g, l) = (rand_vec(&mut rng, n), rand_vec(&mut rng, n));
            let power = rng.random::<f64>() * 2.0;
            let bound = rng.random::<f64>() * power * l.norm_sqr();
            let w = solve_boost_max(&g, &l, bound, power).unwrap();
            prop_assert!(QuadProblem::boost_max(&g, &l, bound, power).violation(&w) <= 1e-9);
            let w = solve_leakage_min(&g, &l, bound, power).unwrap();
            prop_assert!(QuadProblem::leakage_min(&g, &l, bound, power).violation(&w) <= 1e-9);
        }

        #[test]
        fn orthogonal_components_never_help(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (g, l) = (rand_vec(&mut rng, 3), rand_vec(&mut rng, 3));
            let power = 1.0;
            let bound = rng.random::<f64>() * l.norm_sqr();
            let w = solve_boost_max(&g, &l, bound, power).unwrap();
            let best = g.gain(&w);
            // a direction orthogonal to both g and l, mixed in at the same power
            let z = rand_vec(&mut rng, 3);
            let z = project_complement(&z, &g).unwrap();
            let lp = project_complement(&l, &g).unwrap();
            let z = if lp.norm_sqr() > 0.0 { project_complement(&z, &lp).unwrap() } else { z };
            let mix = rng.random::<f64>();
            let cand = &w.scale((1.0 - mix).sqrt()) + &z.normalized().unwrap().scale((mix * w.norm_sqr()).sqrt());
            prop_assert!(g.gain(&cand) <= best * (1.0 + 1e-9));
        }
    }
}
