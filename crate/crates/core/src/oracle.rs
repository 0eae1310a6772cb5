//! Brute-force references used to check the closed forms and iterative
//! solvers. None of these share code with the solvers beyond the rate
//! definitions.

use crate::error::{Error, Result};
use crate::linalg::{CVec, C64};
use crate::miso::{approx_rate, MisoDerived};
use crate::qcqp::{Direction, QuadProblem, Sense};
use crate::rate::{self, SystemParams};
use crate::siso::SisoGains;

/// Best expected Ru1 rate over a uniform β grid among splits meeting the QoS.
pub fn siso_beta_grid(g: &SisoGains, params: &SystemParams, step: f64) -> f64 {
    let n = (1.0 / step).round() as usize;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=n {
        let beta = (i as f64 * step).min(1.0);
        let links = g.links(beta);
        let sic = rate::sic_feasible(&links);
        if rate::rate_ru2(&links, sic) >= params.q - 1e-12 {
            best = best.max(rate::expected_rate_ru1(params, &links, g.cooperation_useful()));
        }
    }
    best
}

/// Maximum of the high-SNR objective over a uniform η grid on the arc.
pub fn miso_eta_grid(d: &MisoDerived, alpha: f64, beta: f64, step: f64) -> f64 {
    let lo = d.eta1();
    let n = ((1.0 - lo) / step).ceil() as usize;
    (0..=n)
        .map(|i| (lo + i as f64 * step).min(1.0))
        .map(|eta| approx_rate(d, alpha, beta, eta))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Best exact expected Ru1 rate over a (β, η) grid, using SIC whenever it
/// is decodable and the split meets the QoS.
pub fn miso_exact_grid(d: &MisoDerived, params: &SystemParams, nb: usize, ne: usize) -> f64 {
    let lo = d.eta1();
    let mut best = f64::NEG_INFINITY;
    for i in 0..=nb {
        let beta = i as f64 / nb as f64;
        for j in 0..=ne {
            let eta = (lo + (1.0 - lo) * j as f64 / ne as f64).min(1.0);
            let links = d.links(beta, eta);
            let sic = rate::sic_feasible(&links);
            if rate::rate_ru2(&links, sic) >= params.q - 1e-12 {
                best = best.max(rate::expected_rate_ru1(params, &links, d.cooperation_useful()));
            }
        }
    }
    best
}

/// Repeated grid search over a shrinking window centred on the incumbent.
/// Unlike a compass search it does not stall on ridges that are not aligned
/// with the coordinate axes.
pub fn zoom_max(f: &dyn Fn(f64, f64) -> f64, x0: (f64, f64), half_width: (f64, f64), rounds: usize) -> ((f64, f64), f64) {
    const N: i32 = 10;
    let (mut x, mut y) = x0;
    let mut best = f(x, y);
    let (mut hx, mut hy) = half_width;
    for _ in 0..rounds {
        let (cx, cy) = (x, y);
        for i in -N..=N {
            for j in -N..=N {
                let (px, py) = (cx + hx * i as f64 / N as f64, cy + hy * j as f64 / N as f64);
                let v = f(px, py);
                if v > best {
                    best = v;
                    x = px;
                    y = py;
                }
            }
        }
        hx *= 0.5;
        hy *= 0.5;
    }
    ((x, y), best)
}

/// Two-dimensional compass search maximizing `f` from `x0`.
pub fn compass_max(f: &dyn Fn(f64, f64) -> f64, x0: (f64, f64), step0: (f64, f64), min_step: f64) -> ((f64, f64), f64) {
    let (mut x, mut y) = x0;
    let mut best = f(x, y);
    let (mut sx, mut sy) = step0;
    while sx.max(sy) > min_step {
        let mut improved = false;
        for (dx, dy) in [(sx, 0.0), (-sx, 0.0), (0.0, sy), (0.0, -sy)] {
            let v = f(x + dx, y + dy);
            if v > best {
                best = v;
                x += dx;
                y += dy;
                improved = true;
                break;
            }
        }
        if !improved {
            sx *= 0.5;
            sy *= 0.5;
        }
    }
    ((x, y), best)
}

/// Value of the best scaling of the unit direction `u`, or `None` when no
/// scaling of it is feasible.
fn scaled_direction_value(p: &QuadProblem, u: &CVec) -> Option<f64> {
    let obj = p.objective.gain(u);
    let mut lo = 0.0_f64;
    let mut hi = p.power;
    for c in &p.constraints {
        let gain = c.vector.gain(u);
        match c.direction {
            Direction::AtMost if c.bound.is_finite() && gain > 0.0 => hi = hi.min(c.bound / gain),
            Direction::AtMost => {}
            Direction::AtLeast if c.bound <= 0.0 => {}
            Direction::AtLeast if gain > 0.0 => lo = lo.max(c.bound / gain),
            Direction::AtLeast => return None,
        }
    }
    if lo > hi {
        return None;
    }
    Some(match p.sense {
        Sense::Maximize => hi * obj,
        Sense::Minimize => lo * obj,
    })
}

/// Optimal objective of a one-constraint quadratic program, found by scanning
/// unit directions cos θ·e1 + e^{iφ} sin θ·e2 of span{objective, constraint}
/// (400 × 64 grid, then zoom refinement) with the analytically best scale
/// of each direction.
pub fn qcqp_direction_oracle(p: &QuadProblem) -> Result<f64> {
    p.validate()?;
    let e1 = p.objective.normalized()?;
    let e2 = p.constraints.first().and_then(|c| {
        let r = &c.vector - &e1.scale_c(e1.dot(&c.vector));
        (r.norm_sqr() > 1e-20 * c.vector.norm_sqr()).then(|| r.normalized().ok()).flatten()
    });
    let sign = if p.sense == Sense::Maximize { 1.0 } else { -1.0 };
    let eval = |theta: f64, phi: f64| -> f64 {
        let u = match &e2 {
            Some(e2) => &e1.scale(theta.cos()) + &e2.scale_c(C64::from_polar(theta.sin(), phi)),
            None => e1.clone(),
        };
        scaled_direction_value(p, &u).map_or(f64::NEG_INFINITY, |v| sign * v)
    };
    let (nt, np) = if e2.is_some() { (400, 64) } else { (1, 1) };
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..nt {
        let theta = std::f64::consts::FRAC_PI_2 * i as f64 / (nt.max(2) - 1) as f64;
        for j in 0..np {
            let phi = std::f64::consts::TAU * j as f64 / np as f64;
            let v = eval(theta, phi);
            if v > best.0 {
                best = (v, theta, phi);
            }
        }
    }
    if best.0 == f64::NEG_INFINITY {
        return Err(Error::Infeasible("no direction meets the constraints"));
    }
    if e2.is_some() {
        let widths = (2.0 * std::f64::consts::FRAC_PI_2 / 399.0, 2.0 * std::f64::consts::TAU / 64.0);
        let (_, v) = zoom_max(&eval, (best.1, best.2), widths, 45);
        best.0 = v;
    }
    Ok(sign * best.0)
}

/// Largest s over pairs of unit directions (u21, u22) in C², each written as
/// (cos θ, e^{iφ} sin θ). For fixed directions the best powers are explicit:
/// Ru2's QoS is met with equality and the budget is spent in full. Coarse
/// 4-D grid, then shrinking-window refinement.
pub fn simo_ratio_oracle(h21: &CVec, h2: &CVec, sigma2: f64, p2: f64, target: f64, sic: bool) -> Result<f64> {
    if h21.dim() != 2 || h2.dim() != 2 {
        return Err(Error::InvalidInput("the SIMO oracle needs N2 = 2".into()));
    }
    let dir = |theta: f64, phi: f64| CVec::new(vec![C64::new(theta.cos(), 0.0), C64::from_polar(theta.sin(), phi)]);
    let eval = |x: &[f64; 4]| -> f64 {
        let (u21, u22) = (dir(x[0], x[1]), dir(x[2], x[3]));
        let (Ok(u21), Ok(u22)) = (u21, u22) else { return f64::NEG_INFINITY };
        let (a, b) = (h2.gain(&u21), h2.gain(&u22));
        let (big_a, big_b) = (h21.gain(&u21), h21.gain(&u22));
        if b <= 0.0 {
            return if target == 0.0 { p2 * big_a / sigma2 } else { f64::NEG_INFINITY };
        }
        let p21 = if sic {
            p2 - target * sigma2 / b
        } else {
            (p2 - target * sigma2 / b) / (1.0 + target * a / b)
        };
        if p21 < 0.0 {
            return f64::NEG_INFINITY;
        }
        let p22 = p2 - p21;
        p21 * big_a / (p22 * big_b + sigma2)
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let tau = std::f64::consts::TAU;
    const NT: usize = 17;
    const NP: usize = 16;
    let mut best = (f64::NEG_INFINITY, [0.0; 4]);
    for i in 0..NT {
        for j in 0..NP {
            for k in 0..NT {
                for l in 0..NP {
                    let x = [
                        half_pi * i as f64 / (NT - 1) as f64,
                        tau * j as f64 / NP as f64,
                        half_pi * k as f64 / (NT - 1) as f64,
                        tau * l as f64 / NP as f64,
                    ];
                    let v = eval(&x);
                    if v > best.0 {
                        best = (v, x);
                    }
                }
            }
        }
    }
    if best.0 == f64::NEG_INFINITY {
        return Err(Error::Infeasible("no direction pair meets the QoS"));
    }
    let mut half = [half_pi / (NT - 1) as f64, tau / NP as f64, half_pi / (NT - 1) as f64, tau / NP as f64];
    for _ in 0..60 {
        let c = best.1;
        for code in 0..625usize {
            let mut x = c;
            let mut r = code;
            for (d, xd) in x.iter_mut().enumerate() {
                *xd += half[d] * ((r % 5) as f64 - 2.0) / 2.0;
                r /= 5;
            }
            let v = eval(&x);
            if v > best.0 {
                best = (v, x);
            }
        }
        half.iter_mut().for_each(|h| *h *= 0.6);
    }
    Ok(best.0)
}
